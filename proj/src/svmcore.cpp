#include "relaylab/svmcore.hpp"

#include "relaylab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace relaylab {

double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double g) {
    if (x.size() != y.size()) throw DataError("rbf_kernel: length mismatch");
    if (g <= 0) throw ConfigError("rbf_kernel: g must be positive");
    return std::exp(-g * (x - y).squaredNorm());
}

double kernel_eval(const KernelSpec& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (k.type == KernelType::Linear) {
        if (x.size() != y.size()) throw DataError("kernel: length mismatch");
        return x.dot(y);
    }
    return rbf_kernel(x, y, k.g);
}

namespace {

/// Lazily computed rows of the kernel matrix.
class KernelCache {
public:
    KernelCache(const Eigen::MatrixXd& x, const KernelSpec& k) : x_(x), k_(k) {
        rows_.resize(x.rows());
        if (k.type == KernelType::Rbf) sqnorm_ = x.rowwise().squaredNorm();
    }

    const Eigen::VectorXd& row(int i) {
        auto& r = rows_[i];
        if (r.size() == 0) {
            if (k_.type == KernelType::Linear) {
                r = x_ * x_.row(i).transpose();
            } else {
                r = (-k_.g *
                     (sqnorm_.array() + sqnorm_[i] - 2.0 * (x_ * x_.row(i).transpose()).array()))
                        .exp()
                        .matrix();
            }
        }
        return r;
    }

private:
    const Eigen::MatrixXd& x_;
    KernelSpec k_;
    Eigen::VectorXd sqnorm_;
    std::vector<Eigen::VectorXd> rows_;
};

} // namespace

BinarySvmModel smo_train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c,
                         const KernelSpec& kernel, const SmoOptions& opts,
                         SmoDiagnostics* diag) {
    const int n = static_cast<int>(x.rows());
    if (n < 2 || y.size() != n) throw DataError("smo_train: bad training set shape");
    if (c <= 0) throw ConfigError("smo_train: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
        if (y[i] == 1.0) has_pos = true;
        else if (y[i] == -1.0) has_neg = true;
        else throw DataError("smo_train: labels must be +1/-1");
    }
    if (!has_pos || !has_neg) throw DataError("smo_train: both classes must be present");

    KernelCache cache(x, kernel);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // grad of 1/2 aQa - e.a
    double objective = 0.0;                                     // maximization form
    long updates = 0;
    double m_final = 0.0, mm_final = 0.0;

    while (true) {
        // maximal violating pair over I_up / I_low
        int i_up = -1, j_low = -1;
        double m = -std::numeric_limits<double>::infinity();
        double mm = std::numeric_limits<double>::infinity();
        for (int t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            const bool up = (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0);
            const bool low = (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c);
            if (up && v > m) {
                m = v;
                i_up = t;
            }
            if (low && v < mm) {
                mm = v;
                j_low = t;
            }
        }
        m_final = m;
        mm_final = mm;
        if (i_up < 0 || j_low < 0 || m - mm <= opts.tol) break;
        if (updates >= opts.max_updates)
            throw ConvergenceError("smo_train: update budget exhausted (gap " +
                                   std::to_string(m - mm) + ", n " + std::to_string(n) + ")");

        const int i = i_up, j = j_low;
        const Eigen::VectorXd& ki = cache.row(i);
        const Eigen::VectorXd& kj = cache.row(j);
        double a = ki[i] + kj[j] - 2.0 * ki[j];
        if (a < 1e-12) a = 1e-12;
        // direction: d_alpha_i = y_i * d, d_alpha_j = -y_j * d
        double d = (m - mm) / a;
        auto range_i = y[i] > 0 ? std::pair<double, double>{-alpha[i], c - alpha[i]}
                                : std::pair<double, double>{alpha[i] - c, alpha[i]};
        auto range_j = y[j] > 0 ? std::pair<double, double>{alpha[j] - c, alpha[j]}
                                : std::pair<double, double>{-alpha[j], c - alpha[j]};
        d = std::clamp(d, std::max(range_i.first, range_j.first),
                       std::min(range_i.second, range_j.second));
        if (d == 0.0) break;  // boxed in; gap cannot shrink along this pair

        const double dai = y[i] * d;
        const double daj = -y[j] * d;
        if (diag && opts.track_objective) {
            const double qii = ki[i], qjj = kj[j], qij = y[i] * y[j] * ki[j];
            const double dmin = grad[i] * dai + grad[j] * daj +
                                0.5 * (qii * dai * dai + 2.0 * qij * dai * daj + qjj * daj * daj);
            objective -= dmin;
            diag->objective.push_back(objective);
        }
        alpha[i] += dai;
        alpha[j] += daj;
        grad += (y.array() * ki.array()).matrix() * (y[i] * dai) +
                (y.array() * kj.array()).matrix() * (y[j] * daj);
        ++updates;
    }
    if (diag) diag->updates = updates;

    // bias from free support vectors, midpoint of the KKT gap otherwise
    double b;
    {
        double acc = 0.0;
        int n_free = 0;
        for (int i = 0; i < n; ++i)
            if (alpha[i] > 1e-10 * c && alpha[i] < c * (1.0 - 1e-10)) {
                // y_i - f_nb(x_i) = -y_i*grad_i
                acc += -y[i] * grad[i];
                ++n_free;
            }
        b = n_free > 0 ? acc / n_free : 0.5 * (m_final + mm_final);
    }

    BinarySvmModel model;
    model.kernel = kernel;
    model.c = c;
    model.bias = b;
    std::vector<int> sv;
    for (int i = 0; i < n; ++i)
        if (alpha[i] > 1e-12) sv.push_back(i);
    model.support_vectors.resize(sv.size(), x.cols());
    model.coefficients.resize(sv.size());
    for (size_t k = 0; k < sv.size(); ++k) {
        model.support_vectors.row(k) = x.row(sv[k]);
        model.coefficients[k] = alpha[sv[k]] * y[sv[k]];
    }
    return model;
}

double decision(const BinarySvmModel& model, const Eigen::VectorXd& x) {
    double f = model.bias;
    for (Eigen::Index i = 0; i < model.coefficients.size(); ++i)
        f += model.coefficients[i] *
             kernel_eval(model.kernel, model.support_vectors.row(i).transpose(), x);
    return f;
}

VotingTable voting_table(const std::string& name) {
    // index = b12*4 + b13*2 + b23
    if (name == "V") return {"V", {3, 2, 0, 2, 3, 0, 1, 1}};
    if (name == "VI") return {"VI", {3, 2, 2, 2, 3, 3, 1, 1}};
    if (name == "IX") return {"IX", {3, 2, 3, 2, 3, 2, 1, 1}};
    throw ConfigError("unknown voting table '" + name + "'");
}

namespace {

void require_all_zones(const LabeledSet& s) {
    bool seen[4] = {};
    for (int z : s.labels) {
        if (z < 1 || z > 3) throw DataError("zone labels must be 1..3");
        seen[z] = true;
    }
    if (!(seen[1] && seen[2] && seen[3]))
        throw DataError("training set must contain all three zones");
}

} // namespace

ZoneClassifier oaa_train(const LabeledSet& train, double c, double g, const SmoOptions& opts) {
    require_all_zones(train);
    ZoneClassifier clf;
    clf.strategy = Strategy::OAA;
    clf.c = c;
    clf.g = g;
    const KernelSpec kern{KernelType::Rbf, g};
    Eigen::VectorXd y(train.labels.size());
    for (int zone = 1; zone <= 3; ++zone) {
        for (size_t i = 0; i < train.labels.size(); ++i)
            y[i] = train.labels[i] == zone ? 1.0 : -1.0;
        clf.models.push_back(smo_train(train.x, y, c, kern, opts));
    }
    return clf;
}

int oaa_classify(const ZoneClassifier& clf, const Eigen::VectorXd& x) {
    int best = 1;
    double best_f = decision(clf.models[0], x);
    for (int zone = 2; zone <= 3; ++zone) {
        const double f = decision(clf.models[zone - 1], x);
        if (f > best_f) {  // ties resolve to the lowest zone
            best_f = f;
            best = zone;
        }
    }
    return best;
}

ZoneClassifier oao_train(const LabeledSet& train, double c, double g, const VotingTable& table,
                         const SmoOptions& opts) {
    require_all_zones(train);
    ZoneClassifier clf;
    clf.strategy = Strategy::OAO;
    clf.table = table;
    clf.c = c;
    clf.g = g;
    const KernelSpec kern{KernelType::Rbf, g};
    const std::array<std::pair<int, int>, 3> pairs{{{1, 2}, {1, 3}, {2, 3}}};
    for (const auto& [lo, hi] : pairs) {
        std::vector<int> idx;
        for (size_t i = 0; i < train.labels.size(); ++i)
            if (train.labels[i] == lo || train.labels[i] == hi) idx.push_back(static_cast<int>(i));
        Eigen::MatrixXd x(idx.size(), train.x.cols());
        Eigen::VectorXd y(idx.size());
        for (size_t k = 0; k < idx.size(); ++k) {
            x.row(k) = train.x.row(idx[k]);
            y[k] = train.labels[idx[k]] == lo ? 1.0 : -1.0;
        }
        clf.models.push_back(smo_train(x, y, c, kern, opts));
    }
    return clf;
}

int oao_classify(const ZoneClassifier& clf, const Eigen::VectorXd& x) {
    const bool b12 = decision(clf.models[0], x) >= 0.0;
    const bool b13 = decision(clf.models[1], x) >= 0.0;
    const bool b23 = decision(clf.models[2], x) >= 0.0;
    return clf.table.lookup(b12, b13, b23);
}

int classify(const ZoneClassifier& clf, const Eigen::VectorXd& x) {
    return clf.strategy == Strategy::OAA ? oaa_classify(clf, x) : oao_classify(clf, x);
}

double accuracy(const ZoneClassifier& clf, const LabeledSet& set) {
    if (set.labels.empty()) throw DataError("empty evaluation set");
    int correct = 0;
    for (size_t i = 0; i < set.labels.size(); ++i)
        if (classify(clf, set.x.row(i).transpose()) == set.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(set.labels.size());
}

GridSearchResult grid_search(const LabeledSet& train, const LabeledSet& eval,
                             const std::vector<double>& cs, const std::vector<double>& gs,
                             Strategy strategy, const VotingTable& table,
                             const SmoOptions& opts) {
    if (cs.empty() || gs.empty()) throw ConfigError("grid_search: empty grid");
    GridSearchResult res;
    for (double c : cs) {
        for (double g : gs) {
            const ZoneClassifier clf = strategy == Strategy::OAA
                                           ? oaa_train(train, c, g, opts)
                                           : oao_train(train, c, g, table, opts);
            const double acc = accuracy(clf, eval);
            res.table.push_back({c, g, acc});
            const bool better =
                acc > res.best_accuracy ||
                (acc == res.best_accuracy &&
                 (c < res.best_c || (c == res.best_c && g < res.best_g)));
            if (better) {
                res.best_accuracy = acc;
                res.best_c = c;
                res.best_g = g;
            }
        }
    }
    return res;
}

std::vector<double> default_c_grid() {
    return {10.0, 1e2, 1e3, 1e4, 21096.0, 1e5, 1.08e6};
}

std::vector<double> default_g_grid() {
    return {0.01, 0.1, 1.0, 8.3, 10.4, 12.1, 13.1, 14.5, 15.3, 15.4, 20.0, 21.3, 38.4};
}

} // namespace relaylab

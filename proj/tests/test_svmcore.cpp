#include <doctest.h>

#include "relaylab/errors.hpp"
#include "relaylab/svmcore.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace relaylab;

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const KernelSpec& k) {
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd km(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            km(i, j) = kernel_eval(k, x.row(i).transpose(), x.row(j).transpose());
    return km;
}

// maximization-form dual objective sum(a) - 1/2 sum a_i a_j y_i y_j K_ij
double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& km) {
    const Eigen::VectorXd ay = alpha.array() * y.array();
    return alpha.sum() - 0.5 * ay.dot(km * ay);
}

double model_dual_objective(const BinarySvmModel& m) {
    const Eigen::MatrixXd km = kernel_matrix(m.support_vectors, m.kernel);
    return m.coefficients.cwiseAbs().sum() - 0.5 * m.coefficients.dot(km * m.coefficients);
}

// Exhaustive active-set enumeration: every point is at 0, at C, or free; free
// multipliers and the equality multiplier come from the stationarity system.
double brute_force_dual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c,
                        const KernelSpec& kern) {
    const int n = static_cast<int>(x.rows());
    const Eigen::MatrixXd km = kernel_matrix(x, kern);
    Eigen::MatrixXd q(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q(i, j) = y[i] * y[j] * km(i, j);

    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> state(n, 0);  // 0 = at zero, 1 = at C, 2 = free
    const double eps = 1e-8;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (long code = 0; code < total; ++code) {
        long rem = code;
        std::vector<int> free_idx;
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            state[i] = static_cast<int>(rem % 3);
            rem /= 3;
            if (state[i] == 1) alpha[i] = c;
            if (state[i] == 2) free_idx.push_back(i);
        }
        const int nf = static_cast<int>(free_idx.size());
        if (nf == 0) {
            if (std::abs(alpha.dot(y)) > eps) continue;
        } else {
            Eigen::MatrixXd a(nf + 1, nf + 1);
            Eigen::VectorXd rhs(nf + 1);
            for (int r = 0; r < nf; ++r) {
                const int i = free_idx[r];
                double fixed = 0.0;
                for (int j = 0; j < n; ++j)
                    if (state[j] == 1) fixed += q(i, j) * c;
                rhs[r] = 1.0 - fixed;
                for (int s = 0; s < nf; ++s) a(r, s) = q(i, free_idx[s]);
                a(r, nf) = y[free_idx[r]];
            }
            double fixed_sum = 0.0;
            for (int j = 0; j < n; ++j)
                if (state[j] == 1) fixed_sum += y[j] * c;
            for (int s = 0; s < nf; ++s) a(nf, s) = y[free_idx[s]];
            a(nf, nf) = 0.0;
            rhs[nf] = -fixed_sum;

            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            const Eigen::VectorXd sol = lu.solve(rhs);
            if ((a * sol - rhs).norm() > 1e-8) continue;  // inconsistent stationarity
            bool ok = true;
            for (int r = 0; r < nf; ++r) {
                if (sol[r] < -eps || sol[r] > c + eps) ok = false;
                alpha[free_idx[r]] = std::clamp(sol[r], 0.0, c);
            }
            if (!ok) continue;
            if (std::abs(alpha.dot(y)) > 1e-6 * (1.0 + c)) continue;
        }
        best = std::max(best, dual_objective(alpha, y, km));
    }
    return best;
}

LabeledSet blobs(int per_class, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, spread);
    const double cx[3] = {0.0, 10.0, 0.0};
    const double cy[3] = {0.0, 0.0, 10.0};
    LabeledSet s;
    s.x.resize(3 * per_class, 2);
    for (int z = 0; z < 3; ++z)
        for (int k = 0; k < per_class; ++k) {
            const int row = z * per_class + k;
            s.x(row, 0) = cx[z] + dist(rng);
            s.x(row, 1) = cy[z] + dist(rng);
            s.labels.push_back(z + 1);
        }
    return s;
}

} // namespace

TEST_CASE("rbf kernel basics") {
    Eigen::VectorXd a(2), b(2);
    a << 1.0, 2.0;
    b << 1.0, 2.0;
    CHECK(rbf_kernel(a, b, 3.0) == doctest::Approx(1.0));
    b << 2.0, 2.0;
    CHECK(rbf_kernel(a, b, 3.0) == doctest::Approx(std::exp(-3.0)));
    CHECK_THROWS_AS(rbf_kernel(a, b, 0.0), ConfigError);
}

TEST_CASE("two-point problem has the closed-form multiplier") {
    Eigen::MatrixXd x(2, 2);
    x << 0.0, 0.0, 2.0, 0.0;  // distance 2, g = 1 -> K12 = e^-4
    Eigen::VectorXd y(2);
    y << 1.0, -1.0;
    SmoOptions opts;
    opts.tol = 1e-10;
    const auto m = smo_train(x, y, 1e6, {KernelType::Rbf, 1.0}, opts);
    REQUIRE(m.coefficients.size() == 2);
    const double expect = 1.0 / (1.0 - std::exp(-4.0));
    CHECK(m.coefficients.cwiseAbs()(0) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(m.coefficients.cwiseAbs()(1) == doctest::Approx(expect).epsilon(1e-6));
    // symmetric problem: boundary bisects the two points
    CHECK(decision(m, Eigen::Vector2d(1.0, 0.0)) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(decision(m, Eigen::Vector2d(0.0, 0.0)) > 0.0);
}

TEST_CASE("smo matches the brute-force QP oracle on small problems") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> dist;
    std::uniform_int_distribution<int> nd(3, 6);
    SmoOptions opts;
    opts.tol = 1e-10;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = nd(rng);
        Eigen::MatrixXd x(n, 2);
        Eigen::VectorXd y(n);
        bool pos = false, neg = false;
        for (int i = 0; i < n; ++i) {
            x(i, 0) = dist(rng);
            x(i, 1) = dist(rng);
            y[i] = (i % 2 == 0) ? 1.0 : -1.0;
            (y[i] > 0 ? pos : neg) = true;
        }
        REQUIRE((pos && neg));
        const double c = trial % 2 ? 10.0 : 0.5;
        const KernelSpec kern =
            trial % 3 ? KernelSpec{KernelType::Rbf, 0.7} : KernelSpec{KernelType::Linear, 1.0};

        const auto model = smo_train(x, y, c, kern, opts);
        const double got = model_dual_objective(model);
        const double oracle = brute_force_dual(x, y, c, kern);
        CAPTURE(trial);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
        CHECK(std::abs(got - oracle) < 1e-6 * std::max(1.0, std::abs(oracle)));
    }
}

TEST_CASE("kkt residuals stay within the solver tolerance") {
    const auto set = blobs(20, 2.5, 11);
    const int n = static_cast<int>(set.labels.size());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = set.labels[i] == 1 ? 1.0 : -1.0;
    SmoOptions opts;  // default tol 1e-3
    const double c = 10.0;
    const auto m = smo_train(set.x, y, c, {KernelType::Rbf, 0.05}, opts);

    // recover alpha per training row (support vectors are exact row copies)
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (Eigen::Index s = 0; s < m.coefficients.size(); ++s) {
        for (int i = 0; i < n; ++i)
            if (alpha[i] == 0.0 &&
                (m.support_vectors.row(s).array() == set.x.row(i).array()).all()) {
                alpha[i] = std::abs(m.coefficients[s]);
                break;
            }
    }
    const double tol = opts.tol + 1e-9;
    for (int i = 0; i < n; ++i) {
        const double yf = y[i] * decision(m, set.x.row(i).transpose());
        if (alpha[i] < 1e-9)
            CHECK(yf >= 1.0 - tol);
        else if (alpha[i] > c - 1e-9 * c)
            CHECK(yf <= 1.0 + tol);
        else
            CHECK(std::abs(yf - 1.0) <= tol);
    }
}

TEST_CASE("voting tables reproduce every pattern") {
    const std::array<int, 8> expect_v{3, 2, 0, 2, 3, 0, 1, 1};
    const std::array<int, 8> expect_vi{3, 2, 2, 2, 3, 3, 1, 1};
    const std::array<int, 8> expect_ix{3, 2, 3, 2, 3, 2, 1, 1};

    auto mock = [](bool b12, bool b13, bool b23, const VotingTable& t) {
        ZoneClassifier clf;
        clf.strategy = Strategy::OAO;
        clf.table = t;
        for (bool b : {b12, b13, b23}) {
            BinarySvmModel m;
            m.kernel = {KernelType::Linear, 1.0};
            m.support_vectors.resize(0, 1);
            m.coefficients.resize(0);
            m.bias = b ? 1.0 : -1.0;
            clf.models.push_back(m);
        }
        return oao_classify(clf, Eigen::VectorXd::Zero(1));
    };

    for (int p = 0; p < 8; ++p) {
        const bool b12 = p & 4, b13 = p & 2, b23 = p & 1;
        CHECK(mock(b12, b13, b23, voting_table("V")) == expect_v[static_cast<size_t>(p)]);
        CHECK(mock(b12, b13, b23, voting_table("VI")) == expect_vi[static_cast<size_t>(p)]);
        CHECK(mock(b12, b13, b23, voting_table("IX")) == expect_ix[static_cast<size_t>(p)]);

        // strict two-vote majorities are honoured by every table
        const int wins1 = (b12 ? 1 : 0) + (b13 ? 1 : 0);
        const int wins2 = (b12 ? 0 : 1) + (b23 ? 1 : 0);
        const int wins3 = (b13 ? 0 : 1) + (b23 ? 0 : 1);
        for (const char* name : {"V", "VI", "IX"}) {
            const int r = mock(b12, b13, b23, voting_table(name));
            if (wins1 == 2) CHECK(r == 1);
            if (wins2 == 2) CHECK(r == 2);
            if (wins3 == 2) CHECK(r == 3);
        }
    }
    CHECK_THROWS_AS(voting_table("VII"), ConfigError);
}

TEST_CASE("multiclass strategies separate synthetic blobs") {
    const auto set = blobs(25, 1.0, 5);
    const auto oaa = oaa_train(set, 100.0, 0.1);
    CHECK(accuracy(oaa, set) == doctest::Approx(1.0));
    const auto oao = oao_train(set, 100.0, 0.1, voting_table("VI"));
    CHECK(accuracy(oao, set) == doctest::Approx(1.0));

    // undecided patterns count as errors under table V but never crash
    for (size_t i = 0; i < set.labels.size(); ++i) {
        const int z = oao_classify(oao, set.x.row(i).transpose());
        CHECK(z >= 1);
        CHECK(z <= 3);
    }
}

TEST_CASE("grid search prefers smaller parameters on ties") {
    const auto set = blobs(15, 0.5, 8);  // separable for every grid point
    const auto res = grid_search(set, set, {1e2, 1e3}, {0.05, 0.5}, Strategy::OAA,
                                 voting_table("V"));
    CHECK(res.table.size() == 4);
    CHECK(res.best_accuracy == doctest::Approx(1.0));
    CHECK(res.best_c == 1e2);
    CHECK(res.best_g == 0.05);
}

TEST_CASE("training input validation") {
    Eigen::MatrixXd x(2, 1);
    x << 0.0, 1.0;
    Eigen::VectorXd y(2);
    y << 1.0, 1.0;
    CHECK_THROWS_AS(smo_train(x, y, 1.0, {KernelType::Rbf, 1.0}), DataError);
    y << 1.0, 0.5;
    CHECK_THROWS_AS(smo_train(x, y, 1.0, {KernelType::Rbf, 1.0}), DataError);
    y << 1.0, -1.0;
    CHECK_THROWS_AS(smo_train(x, y, -1.0, {KernelType::Rbf, 1.0}), ConfigError);

    LabeledSet bad;
    bad.x.resize(2, 1);
    bad.x << 0.0, 1.0;
    bad.labels = {1, 2};
    CHECK_THROWS_AS(oaa_train(bad, 1.0, 1.0), DataError);
}

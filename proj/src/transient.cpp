#include "relaylab/transient.hpp"

#include "relaylab/errors.hpp"
#include "relaylab/lineparam.hpp"

#include <cmath>

namespace relaylab {

int TransientNetwork::add_nodes(int count) {
    const int first = n_nodes_;
    n_nodes_ += count;
    return first;
}

namespace {

void check_groups(const std::vector<int>& from, const std::vector<int>& to, int dim,
                  int n_nodes) {
    if (static_cast<int>(from.size()) != dim || static_cast<int>(to.size()) != dim)
        throw ConfigError("branch node group size does not match matrix dimension");
    for (int v : from)
        if (v < TransientNetwork::kGround || v >= n_nodes)
            throw ConfigError("branch node index out of range");
    for (int v : to)
        if (v < TransientNetwork::kGround || v >= n_nodes)
            throw ConfigError("branch node index out of range");
}

} // namespace

int TransientNetwork::add_rl_branch(std::vector<int> from, std::vector<int> to,
                                    const Eigen::MatrixXd& r, const Eigen::MatrixXd& l) {
    check_groups(from, to, static_cast<int>(r.rows()), n_nodes_);
    Branch b;
    b.kind = Branch::Kind::RL;
    b.from = std::move(from);
    b.to = std::move(to);
    b.r = r;
    b.l = l;
    branches_.push_back(std::move(b));
    finalized_ = false;
    return static_cast<int>(branches_.size()) - 1;
}

int TransientNetwork::add_cap_branch(std::vector<int> from, std::vector<int> to,
                                     const Eigen::MatrixXd& c) {
    check_groups(from, to, static_cast<int>(c.rows()), n_nodes_);
    Branch b;
    b.kind = Branch::Kind::Cap;
    b.from = std::move(from);
    b.to = std::move(to);
    b.c = c;
    branches_.push_back(std::move(b));
    finalized_ = false;
    return static_cast<int>(branches_.size()) - 1;
}

int TransientNetwork::add_conductance_branch(std::vector<int> from, std::vector<int> to,
                                             const Eigen::MatrixXd& g, bool removable) {
    check_groups(from, to, static_cast<int>(g.rows()), n_nodes_);
    Branch b;
    b.kind = Branch::Kind::Cond;
    b.from = std::move(from);
    b.to = std::move(to);
    b.g = g;
    b.removable = removable;
    branches_.push_back(std::move(b));
    // Adding a removable branch after finalize() is the topology-change path;
    // it requires an explicit re-finalize via assemble below.
    if (finalized_) {
        const int dim = static_cast<int>(g.rows());
        auto& nb = branches_.back();
        nb.geq = nb.g;
        nb.hist_u = Eigen::MatrixXd::Zero(dim, dim);
        nb.hist_i = Eigen::MatrixXd::Zero(dim, dim);
        nb.u_prev = Eigen::VectorXd::Zero(dim);
        nb.i_prev = Eigen::VectorXd::Zero(dim);
        assemble();
    }
    return static_cast<int>(branches_.size()) - 1;
}

void TransientNetwork::set_emf(int branch, EmfFn emf) {
    branches_.at(branch).emf = std::move(emf);
}

void TransientNetwork::finalize(double dt) {
    if (dt <= 0) throw ConfigError("dt must be positive");
    dt_ = dt;
    t_ = 0.0;
    v_ = Eigen::VectorXd::Zero(n_nodes_);
    for (auto& b : branches_) {
        const int dim = static_cast<int>(b.from.size());
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
        switch (b.kind) {
            case Branch::Kind::RL: {
                const Eigen::MatrixXd a1 = 0.5 * b.r + b.l / dt_;
                const Eigen::MatrixXd a2 = 0.5 * b.r - b.l / dt_;
                const Eigen::MatrixXd a1inv = a1.fullPivLu().inverse();
                b.geq = 0.5 * a1inv;
                b.hist_u = 0.5 * a1inv;
                b.hist_i = -a1inv * a2;
                break;
            }
            case Branch::Kind::Cap:
                b.geq = (2.0 / dt_) * b.c;
                b.hist_u = -(2.0 / dt_) * b.c;
                b.hist_i = -eye;
                break;
            case Branch::Kind::Cond:
                b.geq = b.g;
                b.hist_u = Eigen::MatrixXd::Zero(dim, dim);
                b.hist_i = Eigen::MatrixXd::Zero(dim, dim);
                break;
        }
        b.u_prev = Eigen::VectorXd::Zero(dim);
        b.i_prev = Eigen::VectorXd::Zero(dim);
    }
    assemble();
    finalized_ = true;
}

void TransientNetwork::clear_removable() {
    bool changed = false;
    for (auto& b : branches_)
        if (b.removable && b.active) {
            b.active = false;
            changed = true;
        }
    if (changed && finalized_) assemble();
}

void TransientNetwork::stamp(const Branch& b, std::vector<Eigen::Triplet<double>>& trips) const {
    const int dim = static_cast<int>(b.from.size());
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            const double g = b.geq(i, j);
            if (g == 0.0) continue;
            const int fi = b.from[i], fj = b.from[j];
            const int ti = b.to[i], tj = b.to[j];
            if (fi >= 0 && fj >= 0) trips.emplace_back(fi, fj, g);
            if (fi >= 0 && tj >= 0) trips.emplace_back(fi, tj, -g);
            if (ti >= 0 && tj >= 0) trips.emplace_back(ti, tj, g);
            if (ti >= 0 && fj >= 0) trips.emplace_back(ti, fj, -g);
        }
    }
}

void TransientNetwork::assemble() {
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& b : branches_)
        if (b.active) stamp(b, trips);
    a_.resize(n_nodes_, n_nodes_);
    a_.setFromTriplets(trips.begin(), trips.end());
    a_.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(a_);
    if (lu_->info() != Eigen::Success) throw NumericError("singular nodal matrix");
}

void TransientNetwork::step() {
    if (!finalized_) throw NumericError("step() before finalize()");
    const double t_new = t_ + dt_;
    Eigen::VectorXd b_vec = Eigen::VectorXd::Zero(n_nodes_);
    // history + source injections
    std::vector<Eigen::VectorXd> hist(branches_.size());
    for (size_t k = 0; k < branches_.size(); ++k) {
        auto& b = branches_[k];
        if (!b.active) continue;
        const int dim = static_cast<int>(b.from.size());
        Eigen::VectorXd h = b.hist_u * b.u_prev + b.hist_i * b.i_prev;
        // known part of i_n = geq*(emf + vf - vt) + h goes to the RHS
        Eigen::VectorXd inj = b.emf ? Eigen::VectorXd(h + b.geq * b.emf(t_new)) : h;
        for (int i = 0; i < dim; ++i) {
            if (b.from[i] >= 0) b_vec[b.from[i]] -= inj[i];
            if (b.to[i] >= 0) b_vec[b.to[i]] += inj[i];
        }
        hist[k] = std::move(h);
    }
    v_ = lu_->solve(b_vec);
    if (!v_.allFinite()) throw NumericError("transient solve diverged (non-finite voltages)");
    t_ = t_new;
    // branch updates
    for (size_t k = 0; k < branches_.size(); ++k) {
        auto& b = branches_[k];
        if (!b.active) continue;
        Eigen::VectorXd u = gather(b.from) - gather(b.to);
        if (b.emf) u += b.emf(t_new);
        b.i_prev = b.geq * u + hist[k];
        b.u_prev = u;
    }
}

Eigen::VectorXd TransientNetwork::gather(const std::vector<int>& nodes) const {
    Eigen::VectorXd out(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) out[i] = nodes[i] >= 0 ? v_[nodes[i]] : 0.0;
    return out;
}

Eigen::VectorXd TransientNetwork::branch_current(int branch) const {
    return branches_.at(branch).i_prev;
}

TransientNetwork::State TransientNetwork::save_state() const {
    State s;
    s.t = t_;
    s.v = v_;
    for (const auto& b : branches_) {
        s.u_prev.push_back(b.u_prev);
        s.i_prev.push_back(b.i_prev);
    }
    return s;
}

void TransientNetwork::restore_state(const State& s) {
    if (s.u_prev.size() > branches_.size())
        throw DataError("state does not match network branch list");
    t_ = s.t;
    v_ = s.v;
    for (size_t i = 0; i < branches_.size(); ++i) {
        if (i < s.u_prev.size()) {
            branches_[i].u_prev = s.u_prev[i];
            branches_[i].i_prev = s.i_prev[i];
        } else {
            // branches added after the snapshot (fault stamps) start cold
            branches_[i].u_prev.setZero();
            branches_[i].i_prev.setZero();
        }
    }
}

ButterworthLowpass4::ButterworthLowpass4(double cutoff_hz, double sample_rate_hz) {
    if (!(cutoff_hz > 0 && cutoff_hz < sample_rate_hz / 2))
        throw ConfigError("cutoff must lie below Nyquist");
    const double kbt = 2.0 * sample_rate_hz;
    const double wa = kbt * std::tan(kPi * cutoff_hz / sample_rate_hz);
    for (const double zeta : {std::cos(kPi / 8.0), std::cos(3.0 * kPi / 8.0)}) {
        const double d0 = kbt * kbt + 2.0 * zeta * wa * kbt + wa * wa;
        const double d1 = 2.0 * (wa * wa - kbt * kbt);
        const double d2 = kbt * kbt - 2.0 * zeta * wa * kbt + wa * wa;
        sections_.emplace_back(wa * wa / d0, 2.0 * wa * wa / d0, wa * wa / d0,
                               d1 / d0, d2 / d0);
    }
}

void ButterworthLowpass4::reset() {
    for (auto& s : sections_) s.reset();
}

std::array<double, 4> ButterworthLowpass4::state() const {
    return {sections_[0].s1(), sections_[0].s2(), sections_[1].s1(), sections_[1].s2()};
}

void ButterworthLowpass4::set_state(const std::array<double, 4>& s) {
    sections_[0].set_state(s[0], s[1]);
    sections_[1].set_state(s[2], s[3]);
}

} // namespace relaylab

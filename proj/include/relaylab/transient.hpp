#ifndef RELAYLAB_TRANSIENT_HPP
#define RELAYLAB_TRANSIENT_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace relaylab {

/// Trapezoidal-rule nodal solver over coupled multi-terminal branches.
/// Branches connect ordered node groups ("from" -> "to"); index kGround is
/// the reference node. Branch voltage u = emf + v_from - v_to, current flows
/// from -> to.
class TransientNetwork {
public:
    static constexpr int kGround = -1;

    using EmfFn = std::function<Eigen::VectorXd(double)>;

    int add_nodes(int count);
    int node_count() const { return n_nodes_; }

    /// u = R i + L di/dt. Returns a branch handle.
    int add_rl_branch(std::vector<int> from, std::vector<int> to,
                      const Eigen::MatrixXd& r, const Eigen::MatrixXd& l);
    /// i = C du/dt
    int add_cap_branch(std::vector<int> from, std::vector<int> to,
                       const Eigen::MatrixXd& c);
    /// i = G u (memoryless). When `removable` it participates in topology swaps.
    int add_conductance_branch(std::vector<int> from, std::vector<int> to,
                               const Eigen::MatrixXd& g, bool removable = false);

    /// Series EMF on an RL branch, evaluated at each step time.
    void set_emf(int branch, EmfFn emf);

    /// Assemble companion conductances and factorize. Must precede step().
    void finalize(double dt);

    /// Drop all removable branches and refactorize (keeps state/history).
    void clear_removable();

    /// Advance one time step.
    void step();

    double time() const { return t_; }
    double dt() const { return dt_; }

    Eigen::VectorXd branch_current(int branch) const;
    const Eigen::VectorXd& node_voltages() const { return v_; }

    struct State {
        double t = 0.0;
        Eigen::VectorXd v;
        std::vector<Eigen::VectorXd> u_prev, i_prev;
    };
    State save_state() const;
    void restore_state(const State& s);

private:
    struct Branch {
        enum class Kind { RL, Cap, Cond } kind;
        std::vector<int> from, to;
        Eigen::MatrixXd r, l, c, g;   // constitutive data
        Eigen::MatrixXd geq;          // companion conductance
        Eigen::MatrixXd hist_u, hist_i; // history weights: h = hist_u*u_prev + hist_i*i_prev
        EmfFn emf;
        Eigen::VectorXd u_prev, i_prev;
        bool removable = false;
        bool active = true;
    };

    void assemble();
    void stamp(const Branch& b, std::vector<Eigen::Triplet<double>>& trips) const;
    Eigen::VectorXd gather(const std::vector<int>& nodes) const;

    int n_nodes_ = 0;
    std::vector<Branch> branches_;
    double dt_ = 0.0;
    double t_ = 0.0;
    bool finalized_ = false;
    Eigen::VectorXd v_;
    Eigen::SparseMatrix<double> a_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// 4th-order Butterworth low-pass as two cascaded biquads (bilinear transform
/// with frequency prewarping). Direct form II transposed, one channel.
class Biquad {
public:
    Biquad(double b0, double b1, double b2, double a1, double a2)
        : b0_(b0), b1_(b1), b2_(b2), a1_(a1), a2_(a2) {}
    double process(double x) {
        const double y = b0_ * x + s1_;
        s1_ = b1_ * x - a1_ * y + s2_;
        s2_ = b2_ * x - a2_ * y;
        return y;
    }
    void reset() { s1_ = s2_ = 0.0; }
    /// H(e^{jw}) at normalized frequency w = 2*pi*f/fs.
    std::complex<double> response(double w) const {
        const std::complex<double> z1 = std::polar(1.0, -w);
        const std::complex<double> z2 = z1 * z1;
        return (b0_ + b1_ * z1 + b2_ * z2) / (1.0 + a1_ * z1 + a2_ * z2);
    }
    double s1() const { return s1_; }
    double s2() const { return s2_; }
    void set_state(double s1, double s2) { s1_ = s1; s2_ = s2; }

private:
    double b0_, b1_, b2_, a1_, a2_;
    double s1_ = 0.0, s2_ = 0.0;
};

class ButterworthLowpass4 {
public:
    ButterworthLowpass4(double cutoff_hz, double sample_rate_hz);
    double process(double x) { return sections_[1].process(sections_[0].process(x)); }
    /// H(e^{jw}) at normalized frequency w = 2*pi*f/fs.
    std::complex<double> response(double w) const {
        return sections_[0].response(w) * sections_[1].response(w);
    }
    void reset();
    std::array<double, 4> state() const;
    void set_state(const std::array<double, 4>& s);

private:
    std::vector<Biquad> sections_;
};

} // namespace relaylab

#endif

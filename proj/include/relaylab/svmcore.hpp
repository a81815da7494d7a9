#ifndef RELAYLAB_SVMCORE_HPP
#define RELAYLAB_SVMCORE_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace relaylab {

enum class KernelType { Rbf, Linear };

struct KernelSpec {
    KernelType type = KernelType::Rbf;
    double g = 1.0;  // RBF width parameter
};

/// exp(-g ||x - y||^2)
double rbf_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double g);

double kernel_eval(const KernelSpec& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct BinarySvmModel {
    Eigen::MatrixXd support_vectors;  // one row per SV
    Eigen::VectorXd coefficients;     // alpha_i * y_i
    double bias = 0.0;
    KernelSpec kernel;
    double c = 1.0;
};

struct SmoOptions {
    double tol = 1e-3;
    long max_updates = 20'000'000;
    bool track_objective = false;  // record the dual objective after each pair update
};

struct SmoDiagnostics {
    long updates = 0;
    std::vector<double> objective;  // only when track_objective
};

/// Soft-margin binary SVM dual via SMO with maximal-violating-pair selection.
/// y entries must be +1/-1 and both classes present.
BinarySvmModel smo_train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c,
                         const KernelSpec& kernel, const SmoOptions& opts = {},
                         SmoDiagnostics* diag = nullptr);

double decision(const BinarySvmModel& model, const Eigen::VectorXd& x);

/// Vote-pattern lookup for one-against-one classification. Bits in order
/// (1,2),(1,3),(2,3); bit = 1 means the lower-index class won. 0 = undecided.
struct VotingTable {
    std::string name;            // "V", "VI" or "IX"
    std::array<int, 8> result;   // indexed by pattern b12*4 + b13*2 + b23

    int lookup(bool b12, bool b13, bool b23) const {
        return result[(b12 ? 4 : 0) + (b13 ? 2 : 0) + (b23 ? 1 : 0)];
    }
};

VotingTable voting_table(const std::string& name);

struct LabeledSet {
    Eigen::MatrixXd x;         // one row per sample
    std::vector<int> labels;   // 1..3
};

enum class Strategy { OAA, OAO };

struct ZoneClassifier {
    Strategy strategy = Strategy::OAA;
    std::vector<BinarySvmModel> models;  // OAA: per zone; OAO: (1,2),(1,3),(2,3)
    VotingTable table;                   // OAO only
    double c = 1.0;
    double g = 1.0;
};

ZoneClassifier oaa_train(const LabeledSet& train, double c, double g,
                         const SmoOptions& opts = {});
/// argmax of the three decision values; ties go to the lowest zone.
int oaa_classify(const ZoneClassifier& clf, const Eigen::VectorXd& x);

ZoneClassifier oao_train(const LabeledSet& train, double c, double g,
                         const VotingTable& table, const SmoOptions& opts = {});
/// 0 = undecided (counts as a misclassification downstream).
int oao_classify(const ZoneClassifier& clf, const Eigen::VectorXd& x);

int classify(const ZoneClassifier& clf, const Eigen::VectorXd& x);

struct GridSearchResult {
    double best_c = 0.0;
    double best_g = 0.0;
    double best_accuracy = -1.0;
    // rows of (c, g, accuracy) in evaluation order
    std::vector<std::array<double, 3>> table;
};

/// Trains one classifier per (c, g) on `train`, scores on `eval`, returns the
/// argmax (ties: smaller c, then smaller g).
GridSearchResult grid_search(const LabeledSet& train, const LabeledSet& eval,
                             const std::vector<double>& cs, const std::vector<double>& gs,
                             Strategy strategy, const VotingTable& table,
                             const SmoOptions& opts = {});

/// Fraction of samples classified into their labeled zone (undecided = wrong).
double accuracy(const ZoneClassifier& clf, const LabeledSet& set);

/// The (C, g) grid used when no explicit grid is configured.
std::vector<double> default_c_grid();
std::vector<double> default_g_grid();

} // namespace relaylab

#endif

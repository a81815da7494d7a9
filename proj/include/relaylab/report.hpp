#ifndef RELAYLAB_REPORT_HPP
#define RELAYLAB_REPORT_HPP

#include "relaylab/svmcore.hpp"

#include <array>
#include <string>

namespace relaylab {

/// 3x3 confusion counts (rows = predicted zone, cols = real zone) plus the
/// undecided tally; success_rate = diagonal / total, undecided counted wrong.
struct ConfusionReport {
    std::array<std::array<int, 3>, 3> counts{};
    int undecided = 0;
    int total = 0;
    double success_rate = 0.0;

    std::array<int, 3> wrong_by_predicted() const;  // off-diagonal row sums
    std::array<int, 3> wrong_by_real() const;       // off-diagonal column sums
    int correct() const;
};

ConfusionReport evaluate_classifier(const ZoneClassifier& clf, const LabeledSet& set);

/// Human-readable report mirroring the wrong-prediction tables.
std::string format_report(const ConfusionReport& r);

/// CSV with header predicted,real1,real2,real3,wrong_total plus summary rows.
std::string report_csv(const ConfusionReport& r);

} // namespace relaylab

#endif

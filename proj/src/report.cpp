#include "relaylab/report.hpp"

#include "relaylab/errors.hpp"

#include <iomanip>
#include <sstream>

namespace relaylab {

std::array<int, 3> ConfusionReport::wrong_by_predicted() const {
    std::array<int, 3> out{};
    for (int p = 0; p < 3; ++p)
        for (int r = 0; r < 3; ++r)
            if (p != r) out[p] += counts[p][r];
    return out;
}

std::array<int, 3> ConfusionReport::wrong_by_real() const {
    std::array<int, 3> out{};
    for (int p = 0; p < 3; ++p)
        for (int r = 0; r < 3; ++r)
            if (p != r) out[r] += counts[p][r];
    return out;
}

int ConfusionReport::correct() const {
    return counts[0][0] + counts[1][1] + counts[2][2];
}

ConfusionReport evaluate_classifier(const ZoneClassifier& clf, const LabeledSet& set) {
    if (set.labels.empty()) throw DataError("empty evaluation set");
    ConfusionReport rep;
    for (size_t i = 0; i < set.labels.size(); ++i) {
        const int real = set.labels[i];
        const int pred = classify(clf, set.x.row(i).transpose());
        if (pred == 0)
            ++rep.undecided;
        else
            ++rep.counts[pred - 1][real - 1];
        ++rep.total;
    }
    rep.success_rate = static_cast<double>(rep.correct()) / static_cast<double>(rep.total);
    return rep;
}

std::string format_report(const ConfusionReport& r) {
    std::ostringstream os;
    const auto wrong = r.wrong_by_predicted();
    os << "predicted \\ real       1       2       3   wrong\n";
    for (int p = 0; p < 3; ++p) {
        os << "        " << (p + 1) << "       ";
        for (int c = 0; c < 3; ++c) {
            os << std::setw(8);
            if (p == c)
                os << (std::to_string(r.counts[p][c]) + "*");
            else
                os << r.counts[p][c];
        }
        os << std::setw(8) << wrong[p] << "\n";
    }
    os << "undecided: " << r.undecided << "\n";
    os << "total:     " << r.total << "\n";
    os << "success_rate: " << std::fixed << std::setprecision(4) << 100.0 * r.success_rate
       << "%\n";
    return os.str();
}

std::string report_csv(const ConfusionReport& r) {
    std::ostringstream os;
    os << "predicted,real1,real2,real3,wrong_total\n";
    const auto wrong = r.wrong_by_predicted();
    for (int p = 0; p < 3; ++p) {
        os << (p + 1);
        for (int c = 0; c < 3; ++c) os << ',' << r.counts[p][c];
        os << ',' << wrong[p] << "\n";
    }
    os << "undecided," << r.undecided << ",,,\n";
    os.precision(17);
    os << "success_rate," << r.success_rate << ",,,\n";
    return os.str();
}

} // namespace relaylab

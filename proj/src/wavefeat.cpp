#include "relaylab/wavefeat.hpp"

#include "relaylab/emtsim.hpp"
#include "relaylab/errors.hpp"

#include <cmath>

namespace relaylab {

Db2Filters db2_filters() {
    const double s3 = std::sqrt(3.0);
    const double k = 4.0 * std::sqrt(2.0);
    Db2Filters f;
    f.h = {(1.0 + s3) / k, (3.0 + s3) / k, (3.0 - s3) / k, (1.0 - s3) / k};
    for (int i = 0; i < 4; ++i) f.g[i] = (i % 2 ? -1.0 : 1.0) * f.h[3 - i];
    return f;
}

DwtLevel1 dwt_level1(const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    if (n < 4 || n % 2 != 0) throw DataError("dwt_level1 needs even input length >= 4");
    const Db2Filters f = db2_filters();
    DwtLevel1 out;
    out.approx.resize(n / 2);
    out.detail.resize(n / 2);
    for (int k = 0; k < n / 2; ++k) {
        double a = 0.0, d = 0.0;
        for (int m = 0; m < 4; ++m) {
            const double v = x[(2 * k + m) % n];
            a += f.h[m] * v;
            d += f.g[m] * v;
        }
        out.approx[k] = a;
        out.detail[k] = d;
    }
    return out;
}

Eigen::VectorXd idwt_level1(const DwtLevel1& bands) {
    const int half = static_cast<int>(bands.approx.size());
    if (bands.detail.size() != half) throw DataError("band length mismatch");
    const int n = 2 * half;
    const Db2Filters f = db2_filters();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < half; ++k)
        for (int m = 0; m < 4; ++m) {
            const int idx = (2 * k + m) % n;
            x[idx] += f.h[m] * bands.approx[k] + f.g[m] * bands.detail[k];
        }
    return x;
}

FeatureVector extract_features(const WaveformRecord& rec, int zone, double i_base) {
    if (i_base <= 0) throw ConfigError("normalization base must be positive");
    const size_t start = static_cast<size_t>(rec.inception_index);
    for (const auto* ch : {&rec.ia, &rec.ib, &rec.ic})
        if (start + kCycleSamples > ch->size())
            throw DataError("feature window overruns record");

    FeatureVector fv;
    fv.values.resize(kFeatureLength);
    fv.zone = zone;
    fv.case_id = rec.case_id;
    int offset = 0;
    for (const auto* ch : {&rec.ia, &rec.ib, &rec.ic}) {
        Eigen::VectorXd window(kCycleSamples);
        for (int k = 0; k < kCycleSamples; ++k) window[k] = (*ch)[start + k] / i_base;
        const DwtLevel1 bands = dwt_level1(window);
        fv.values.segment(offset, kCycleSamples / 2) = bands.detail;
        offset += kCycleSamples / 2;
    }
    if (!fv.values.allFinite()) throw NumericError("non-finite feature values");
    return fv;
}

} // namespace relaylab

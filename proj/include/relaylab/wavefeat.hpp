#ifndef RELAYLAB_WAVEFEAT_HPP
#define RELAYLAB_WAVEFEAT_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

namespace relaylab {

struct WaveformRecord; // emtsim.hpp

/// 40 detail coefficients per phase, phases a,b,c concatenated.
struct FeatureVector {
    Eigen::VectorXd values;  // length 120
    int zone = 0;            // 1..3
    std::int64_t case_id = 0;
};

struct Db2Filters {
    std::array<double, 4> h;  // low-pass
    std::array<double, 4> g;  // high-pass, g_k = (-1)^k h_{3-k}
};

/// Daubechies-2 orthonormal analysis pair.
Db2Filters db2_filters();

struct DwtLevel1 {
    Eigen::VectorXd approx;
    Eigen::VectorXd detail;
};

/// Single-level DWT with periodic boundary handling; N must be even, >= 4.
/// approx[k] = sum_m h[m] x[(2k+m) mod N], likewise detail with g.
DwtLevel1 dwt_level1(const Eigen::VectorXd& x);

/// Transpose (adjoint) reconstruction; exact inverse for this orthonormal bank.
Eigen::VectorXd idwt_level1(const DwtLevel1& bands);

/// One post-fault cycle (80 samples at 4 kHz) per phase, normalized by
/// i_base, high-pass half kept: 3 x 40 = 120 features.
FeatureVector extract_features(const WaveformRecord& rec, int zone, double i_base);

inline constexpr int kCycleSamples = 80;   // one 50 Hz cycle at 4 kHz
inline constexpr int kFeatureLength = 120;

} // namespace relaylab

#endif

#ifndef RELAYLAB_LINEPARAM_HPP
#define RELAYLAB_LINEPARAM_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace relaylab {

inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;  // H/m
inline constexpr double kEps0 = 8.8541878128e-12;                 // F/m
inline constexpr double kPi = 3.14159265358979323846;

/// One phase conductor position and electrical data. Distances in metres,
/// resistance in ohm/km. For a bundled phase these describe one subconductor.
struct ConductorSpec {
    double x = 0.0;       // horizontal position, m
    double y = 0.0;       // attachment height, m
    double gmr = 0.0;     // geometric mean radius, m
    double radius = 0.0;  // outer radius, m
    double r_dc = 0.0;    // ohm/km per subconductor
};

struct BundleSpec {
    int n = 1;            // subconductors per phase
    double spacing = 0.0; // m, between subconductors
};

struct GroundWireSpec {
    double x = 0.0;
    double y = 0.0;
    double radius = 0.0;
    double r_dc = 0.0;
};

struct TowerGeometry {
    std::vector<ConductorSpec> conductors;  // the three phases
    BundleSpec bundle;
    std::vector<GroundWireSpec> ground_wires;
    double sag = 0.0;                 // m, applies to every wire
    double earth_resistivity = 100.0; // ohm*m

    /// Throws ConfigError on violated invariants (heights, gmr/radius, bundle).
    void validate() const;
};

/// Per-km electrical description of the fully transposed line at one frequency.
struct LineParameters {
    Eigen::Matrix3cd z_series;  // ohm/km, phase domain after Kron reduction
    Eigen::Matrix3d c_shunt;    // F/km
    std::complex<double> z1;    // positive sequence, ohm/km
    std::complex<double> z0;    // zero sequence, ohm/km
    double frequency = 50.0;    // Hz at which z_series was evaluated
};

/// Average height of a sagging conductor: attachment - (2/3) sag.
double effective_height(double attachment_height, double sag);

struct BundleEquivalent {
    double gmr_eq;
    double radius_eq;
};

/// Equivalent GMR/radius of a symmetric bundle (n in 1..4).
BundleEquivalent bundle_reduce(double gmr, double radius, double spacing, int n);

/// Full (3+ng) x (3+ng) series impedance in ohm/km using the complex-depth
/// earth return. Row order: phases a,b,c then ground wires.
Eigen::MatrixXcd series_impedance_matrix(const TowerGeometry& geometry, double f);

/// Full (3+ng) x (3+ng) Maxwell capacitance matrix in F/km (perfect earth).
Eigen::MatrixXd shunt_capacitance_matrix(const TowerGeometry& geometry);

/// Eliminate the listed rows/columns assuming zero voltage on them.
Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& m, const std::vector<int>& eliminate);
Eigen::MatrixXd kron_reduce(const Eigen::MatrixXd& m, const std::vector<int>& eliminate);

struct SequencePair {
    std::complex<double> z1;
    std::complex<double> z0;
};

/// Sequence impedances of a fully transposed line from its 3x3 phase matrix.
SequencePair sequence_components(const Eigen::Matrix3cd& z);

/// End-to-end: geometry -> reduced phase matrices + sequence values.
LineParameters line_parameters(const TowerGeometry& geometry, double f = 50.0);

/// The 400 kV single-circuit tower used throughout: horizontal phases at
/// 41.46 m spaced 15.45 m apart, twin bundle at 45 cm, two ground wires
/// 9.36 m above the phase conductors spaced 18.70 m, 14 m sag everywhere.
/// Conductor outer radius is estimated from the GMR (stranded, gmr = 0.7788 r).
TowerGeometry default_400kv_geometry();

} // namespace relaylab

#endif

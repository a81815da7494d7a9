#ifndef RELAYLAB_EMTSIM_HPP
#define RELAYLAB_EMTSIM_HPP

#include "relaylab/casegen.hpp"
#include "relaylab/lineparam.hpp"
#include "relaylab/transient.hpp"

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace relaylab {

struct SourceSpec {
    double v_ll = 400e3;                       // line-to-line RMS, V
    double freq = 50.0;                        // Hz
    std::complex<double> z1{1.31, 15.0};       // ohm
    std::complex<double> z0{2.33, 26.6};       // ohm
    double impedance_scale_pct = 100.0;        // applies to both z1 and z0
    double angle_deg = 0.0;                    // additional phase offset
};

struct TcscSpec {
    double position_km = 125.0;    // along segment 1, from the relay bus
    double compensation_pct = 50;  // of segment-1 series reactance
};

struct NetworkConfig {
    SourceSpec source1, source2;
    double delta_deg = 10.0;  // source 1 leads source 2
    std::array<double, 3> segment_lengths_km{250.0, 100.0, 50.0};
    LineParameters line;
    std::optional<TcscSpec> tcsc;
    double sections_per_km = 0.2;  // 5 km pi sections

    void validate() const;
    /// Stable digest of every electrically relevant field.
    std::string digest() const;
};

struct FaultSpec {
    FaultType fault_type = FaultType::AG;
    double location_km = 50.0;  // from the relay bus
    double rf = 0.0;            // ohm
    double fia = 0.0;           // deg on the source-1 phase-a internal voltage
};

struct SimParams {
    double dt_internal = 25e-6;
    double record_rate = 4000.0;
    double settle_time = 0.2;
    double post_fault_time = 0.04;

    void validate() const;
};

struct WaveformRecord {
    std::vector<double> ia, ib, ic;  // A, at record_rate
    int inception_index = 0;
    std::int64_t case_id = 0;
    double rate = 4000.0;
    FaultSpec fault;
    std::string config_digest;
};

/// Equivalent series capacitance of the TCSC at a compensation level.
double tcsc_capacitance(double compensation_pct, double x_line_total, double freq = 50.0);

/// Node chain and branch plan shared by the transient and phasor solvers.
struct NetworkLayout {
    struct Section {
        int left, right;       // chain node indices
        Eigen::Matrix3d r, l;  // ohm, H for the section
    };
    std::vector<double> node_km;          // chain position of each node triple
    std::vector<Eigen::Matrix3d> shunt_c; // per node, F (half sections summed)
    std::vector<Section> sections;
    int tcsc_left = -1, tcsc_right = -1;  // node triples joined by the TCSC
    double tcsc_c = 0.0;                  // F, 0 when absent
    Eigen::Matrix3d src1_r, src1_l, src2_r, src2_l;
    double vpk = 0.0;                     // peak phase voltage, V
    double omega = 0.0;
    double phi1 = 0.0, phi2 = 0.0;        // phase-a EMF angles, rad
    double max_section_km = 0.0;

    int node_triples() const { return static_cast<int>(node_km.size()); }
    /// Chain node nearest to a line position; throws when the snap distance
    /// exceeds half a section.
    int nearest_node(double location_km) const;
};

NetworkLayout build_layout(const NetworkConfig& cfg);

/// First time >= settle at which the source-1 phase-a EMF angle equals fia.
double schedule_fault_time(const NetworkConfig& cfg, double fia_deg, double settle);

/// Relay-point current phasors (x(t) = Re(X e^{jwt}) convention).
struct PhasorSolution {
    Eigen::Vector3cd relay_current;
    Eigen::Vector3cd bus1_voltage;
};
PhasorSolution phasor_solve(const NetworkConfig& cfg,
                            const std::optional<FaultSpec>& fault = std::nullopt);

/// Time-domain engine for one NetworkConfig; runs many fault cases and caches
/// the settled pre-fault state between them. Single-threaded.
class SimEngine {
public:
    explicit SimEngine(const NetworkConfig& cfg);
    ~SimEngine();

    WaveformRecord run_case(const FaultSpec& fault, const SimParams& sim,
                            std::int64_t case_id = 0);

    /// No-fault record of the same length a faulted run would have.
    WaveformRecord run_nofault(const SimParams& sim, double duration);

    const NetworkConfig& config() const { return cfg_; }
    const NetworkLayout& layout() const { return layout_; }

private:
    struct Runner;  // one TransientNetwork plus recording state

    NetworkConfig cfg_;
    NetworkLayout layout_;
    std::string digest_;
    std::unique_ptr<Runner> runner_;

    struct PrefaultState;
    std::map<std::tuple<double, double, double>, std::shared_ptr<PrefaultState>> prefault_;
    std::shared_ptr<PrefaultState> settled(const SimParams& sim);
};

/// Fundamental phasor of one cycle of samples (x(t) = Re(X e^{jwt})).
std::complex<double> fundamental_phasor(const std::vector<double>& x, size_t start,
                                        int n_cycle, double rate, double freq,
                                        double t0 = 0.0);

inline constexpr double kRfFloor = 1e-4;  // ohm, bolted-fault floor

} // namespace relaylab

#endif

#ifndef RELAYLAB_CASEGEN_HPP
#define RELAYLAB_CASEGEN_HPP

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace relaylab {

enum class FaultType { AG = 1, BG, CG, AB, BC, CA, ABG, BCG, CAG, ABC };

const char* fault_type_name(FaultType t);
FaultType fault_type_from_name(const std::string& name);

/// One point in the experiment matrix. case_id is the lexicographic rank in
/// the canonical ordering (impedance row, xc, rf, fia, delta, type, location).
struct FaultCase {
    std::int64_t case_id = 0;
    int scenario = 1;                 // 1: TCSC at 125 km, 2: at 187.5 km
    double zg1_pct = 100, zg2_pct = 100;
    double xc_pct = 50;               // TCSC compensation
    double rf = 0;                    // ohm
    double fia = 0;                   // deg
    double delta = 10;                // deg
    FaultType fault_type = FaultType::AG;
    double location_km = 50;
};

namespace grids {
// the five generator-impedance rows (zg1, zg2) in percent
inline constexpr std::array<std::array<double, 2>, 5> impedance_rows{
    {{100, 100}, {100, 75}, {100, 125}, {75, 100}, {125, 100}}};
inline constexpr std::array<double, 3> xc{25, 50, 75};
inline constexpr std::array<double, 4> rf{0, 5, 25, 50};
inline constexpr std::array<double, 4> fia{0, 45, 81, 117};
inline constexpr std::array<double, 3> delta{10, 20, 30};
inline constexpr std::array<double, 4> locations_s1{50, 150, 250, 325};
inline constexpr std::array<double, 3> locations_s2{100, 250, 325};
} // namespace grids

/// Dense enumeration of the whole matrix for one scenario; ids from 0.
std::vector<FaultCase> full_matrix(int scenario);

/// Number of cases per scenario without materializing the list.
std::int64_t matrix_size(int scenario);

/// Decode a case id back into its parameter tuple.
FaultCase case_from_id(int scenario, std::int64_t id);

/// Base training split: xc=50, rf in {0,5,50}, fia in {0,45,117}, delta in {10,30}.
std::set<std::int64_t> base_training_ids(int scenario);

/// Added training data, delta=20 slice. Scenario 1: xc in {25,50}, rf=50,
/// fia in {81,117}. Scenario 2: xc in {25,50}, rf in {0,50}, fia=81.
std::set<std::int64_t> augment_ids(int scenario);

/// Relay protection zone of a fault location; throws DataError past zone 3.
int zone_label(double location_km);

/// Deterministic stratified subsample preserving zone proportions.
std::set<std::int64_t> subsample(const std::vector<FaultCase>& cases, double fraction,
                                 std::uint64_t seed);

} // namespace relaylab

#endif

#include "relaylab/casegen.hpp"

#include "relaylab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace relaylab {

namespace {

const char* kTypeNames[] = {"AG", "BG", "CG", "AB", "BC", "CA", "ABG", "BCG", "CAG", "ABC"};

const std::vector<double>& locations(int scenario) {
    static const std::vector<double> s1(grids::locations_s1.begin(), grids::locations_s1.end());
    static const std::vector<double> s2(grids::locations_s2.begin(), grids::locations_s2.end());
    if (scenario == 1) return s1;
    if (scenario == 2) return s2;
    throw ConfigError("scenario must be 1 or 2");
}

} // namespace

const char* fault_type_name(FaultType t) {
    const int i = static_cast<int>(t) - 1;
    if (i < 0 || i > 9) throw DataError("bad fault type");
    return kTypeNames[i];
}

FaultType fault_type_from_name(const std::string& name) {
    for (int i = 0; i < 10; ++i)
        if (name == kTypeNames[i]) return static_cast<FaultType>(i + 1);
    throw DataError("unknown fault type '" + name + "'");
}

std::int64_t matrix_size(int scenario) {
    return static_cast<std::int64_t>(grids::impedance_rows.size()) * grids::xc.size() *
           grids::rf.size() * grids::fia.size() * grids::delta.size() * 10 *
           locations(scenario).size();
}

FaultCase case_from_id(int scenario, std::int64_t id) {
    const auto& locs = locations(scenario);
    if (id < 0 || id >= matrix_size(scenario)) throw DataError("case id out of range");
    std::int64_t r = id;
    const auto nloc = static_cast<std::int64_t>(locs.size());
    const std::int64_t iloc = r % nloc; r /= nloc;
    const std::int64_t itype = r % 10; r /= 10;
    const std::int64_t idelta = r % 3; r /= 3;
    const std::int64_t ifia = r % 4; r /= 4;
    const std::int64_t irf = r % 4; r /= 4;
    const std::int64_t ixc = r % 3; r /= 3;
    const std::int64_t irow = r;

    FaultCase c;
    c.case_id = id;
    c.scenario = scenario;
    c.zg1_pct = grids::impedance_rows[irow][0];
    c.zg2_pct = grids::impedance_rows[irow][1];
    c.xc_pct = grids::xc[ixc];
    c.rf = grids::rf[irf];
    c.fia = grids::fia[ifia];
    c.delta = grids::delta[idelta];
    c.fault_type = static_cast<FaultType>(itype + 1);
    c.location_km = locs[iloc];
    return c;
}

std::vector<FaultCase> full_matrix(int scenario) {
    const std::int64_t n = matrix_size(scenario);
    std::vector<FaultCase> out;
    out.reserve(n);
    for (std::int64_t id = 0; id < n; ++id) out.push_back(case_from_id(scenario, id));
    return out;
}

namespace {

template <typename Pred>
std::set<std::int64_t> select_ids(int scenario, Pred pred) {
    std::set<std::int64_t> ids;
    const std::int64_t n = matrix_size(scenario);
    for (std::int64_t id = 0; id < n; ++id) {
        const FaultCase c = case_from_id(scenario, id);
        if (pred(c)) ids.insert(id);
    }
    return ids;
}

bool in(double v, std::initializer_list<double> set) {
    return std::any_of(set.begin(), set.end(), [v](double s) { return s == v; });
}

} // namespace

std::set<std::int64_t> base_training_ids(int scenario) {
    return select_ids(scenario, [](const FaultCase& c) {
        return c.xc_pct == 50 && in(c.rf, {0, 5, 50}) && in(c.fia, {0, 45, 117}) &&
               in(c.delta, {10, 30});
    });
}

std::set<std::int64_t> augment_ids(int scenario) {
    if (scenario == 1)
        return select_ids(scenario, [](const FaultCase& c) {
            return c.delta == 20 && in(c.xc_pct, {25, 50}) && c.rf == 50 &&
                   in(c.fia, {81, 117});
        });
    return select_ids(scenario, [](const FaultCase& c) {
        return c.delta == 20 && in(c.xc_pct, {25, 50}) && in(c.rf, {0, 50}) && c.fia == 81;
    });
}

int zone_label(double location_km) {
    if (location_km <= 0) throw DataError("fault location must be positive");
    if (location_km <= 200.0) return 1;   // 80% of line 1
    if (location_km <= 300.0) return 2;   // 50% of line 2
    if (location_km <= 337.5) return 3;   // 25% of line 3
    throw DataError("fault location beyond zone 3 reach");
}

std::set<std::int64_t> subsample(const std::vector<FaultCase>& cases, double fraction,
                                 std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("subsample fraction must be in (0, 1]");
    std::map<int, std::vector<std::int64_t>> strata;
    for (const auto& c : cases) strata[zone_label(c.location_km)].push_back(c.case_id);

    std::set<std::int64_t> out;
    for (auto& [zone, ids] : strata) {
        std::sort(ids.begin(), ids.end());
        if (fraction == 1.0) {
            out.insert(ids.begin(), ids.end());
            continue;
        }
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(zone)));
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto take = static_cast<size_t>(std::llround(fraction * ids.size()));
        out.insert(ids.begin(), ids.begin() + take);
    }
    return out;
}

} // namespace relaylab

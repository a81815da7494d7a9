#include "relaylab/emtsim.hpp"

#include "relaylab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace relaylab {

using std::complex;

void NetworkConfig::validate() const {
    for (const auto* s : {&source1, &source2}) {
        if (s->v_ll < 0) throw ConfigError("source voltage must be non-negative");
        if (s->freq <= 0) throw ConfigError("source frequency must be positive");
        if (s->impedance_scale_pct <= 0) throw ConfigError("impedance scale must be positive");
    }
    for (double len : segment_lengths_km)
        if (len <= 0) throw ConfigError("segment lengths must be positive");
    if (tcsc) {
        if (!(tcsc->position_km > 0 && tcsc->position_km < segment_lengths_km[0]))
            throw ConfigError("TCSC position must lie inside segment 1");
        if (!(tcsc->compensation_pct > 0 && tcsc->compensation_pct < 100))
            throw ConfigError("TCSC compensation must be in (0, 100)");
    }
    if (sections_per_km <= 0) throw ConfigError("sections_per_km must be positive");
}

std::string NetworkConfig::digest() const {
    std::ostringstream os;
    os.precision(17);
    auto src = [&os](const SourceSpec& s) {
        os << s.v_ll << '|' << s.freq << '|' << s.z1 << '|' << s.z0 << '|'
           << s.impedance_scale_pct << '|' << s.angle_deg << ';';
    };
    src(source1);
    src(source2);
    os << delta_deg << ';';
    for (double len : segment_lengths_km) os << len << ',';
    os << ';';
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) os << line.z_series(i, j) << ',' << line.c_shunt(i, j) << ',';
    os << ';' << (tcsc ? tcsc->position_km : -1.0) << ','
       << (tcsc ? tcsc->compensation_pct : 0.0) << ';' << sections_per_km;
    // FNV-1a over the canonical serialization
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : os.str()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

void SimParams::validate() const {
    if (dt_internal <= 0) throw ConfigError("dt_internal must be positive");
    if (record_rate <= 0) throw ConfigError("record_rate must be positive");
    const double ratio = 1.0 / (dt_internal * record_rate);
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw ConfigError("record_rate must divide 1/dt_internal");
    if (settle_time < 0) throw ConfigError("settle_time must be non-negative");
    if (post_fault_time < 0.02 - 1e-12)
        throw ConfigError("post_fault_time must cover at least one power cycle");
}

double tcsc_capacitance(double compensation_pct, double x_line_total, double freq) {
    if (!(compensation_pct > 0 && compensation_pct < 100))
        throw ConfigError("compensation percentage out of range");
    if (x_line_total <= 0) throw ConfigError("line reactance must be positive");
    return 1.0 / (2.0 * kPi * freq * (compensation_pct / 100.0) * x_line_total);
}

namespace {

Eigen::Matrix3cd phase_matrix(complex<double> z1, complex<double> z0) {
    Eigen::Matrix3cd z;
    const complex<double> zd = (z0 + 2.0 * z1) / 3.0;
    const complex<double> zo = (z0 - z1) / 3.0;
    z << zd, zo, zo, zo, zd, zo, zo, zo, zd;
    return z;
}

} // namespace

NetworkLayout build_layout(const NetworkConfig& cfg) {
    cfg.validate();
    NetworkLayout lay;
    const double f = cfg.source1.freq;
    lay.omega = 2.0 * kPi * f;
    lay.vpk = cfg.source1.v_ll * std::sqrt(2.0) / std::sqrt(3.0);
    lay.phi1 = (cfg.delta_deg + cfg.source1.angle_deg) * kPi / 180.0;
    lay.phi2 = cfg.source2.angle_deg * kPi / 180.0;

    const double omega_line = 2.0 * kPi * cfg.line.frequency;
    const Eigen::Matrix3d r_km = cfg.line.z_series.real();
    const Eigen::Matrix3d l_km = cfg.line.z_series.imag() / omega_line;

    // chain cut positions: segment boundaries plus the TCSC location
    std::vector<double> cuts{0.0};
    double acc = 0.0;
    for (double len : cfg.segment_lengths_km) {
        acc += len;
        cuts.push_back(acc);
    }
    const double tcsc_pos = cfg.tcsc ? cfg.tcsc->position_km : -1.0;
    if (cfg.tcsc) cuts.push_back(tcsc_pos);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-9; }),
               cuts.end());

    lay.node_km.push_back(0.0);
    lay.shunt_c.emplace_back(Eigen::Matrix3d::Zero());
    lay.max_section_km = 0.0;
    for (size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double p = cuts[c], q = cuts[c + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((q - p) * cfg.sections_per_km - 1e-9)));
        const double len = (q - p) / n;
        lay.max_section_km = std::max(lay.max_section_km, len);
        for (int s = 1; s <= n; ++s) {
            const int left = static_cast<int>(lay.node_km.size()) - 1;
            lay.node_km.push_back(p + s * len);
            lay.shunt_c.emplace_back(Eigen::Matrix3d::Zero());
            const int right = static_cast<int>(lay.node_km.size()) - 1;
            lay.sections.push_back({left, right, r_km * len, l_km * len});
            lay.shunt_c[left] += cfg.line.c_shunt * (len / 2.0);   // F/km * km = F
            lay.shunt_c[right] += cfg.line.c_shunt * (len / 2.0);
        }
        // split the chain at the TCSC: duplicate the boundary node
        if (cfg.tcsc && std::abs(q - tcsc_pos) < 1e-9) {
            lay.tcsc_left = static_cast<int>(lay.node_km.size()) - 1;
            lay.node_km.push_back(q);
            lay.shunt_c.emplace_back(Eigen::Matrix3d::Zero());
            lay.tcsc_right = static_cast<int>(lay.node_km.size()) - 1;
        }
    }
    if (cfg.tcsc) {
        const double x_line = cfg.line.z1.imag() * cfg.segment_lengths_km[0];
        lay.tcsc_c = tcsc_capacitance(cfg.tcsc->compensation_pct, x_line, f);
    }

    const Eigen::Matrix3cd zs1 =
        phase_matrix(cfg.source1.z1, cfg.source1.z0) * (cfg.source1.impedance_scale_pct / 100.0);
    const Eigen::Matrix3cd zs2 =
        phase_matrix(cfg.source2.z1, cfg.source2.z0) * (cfg.source2.impedance_scale_pct / 100.0);
    lay.src1_r = zs1.real();
    lay.src1_l = zs1.imag() / lay.omega;
    lay.src2_r = zs2.real();
    lay.src2_l = zs2.imag() / lay.omega;
    return lay;
}

int NetworkLayout::nearest_node(double location_km) const {
    int best = 0;
    double best_d = std::abs(node_km[0] - location_km);
    for (int i = 1; i < node_triples(); ++i) {
        const double d = std::abs(node_km[i] - location_km);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best_d > max_section_km / 2.0 + 1e-9)
        throw DataError("fault location snaps farther than half a section");
    return best;
}

double schedule_fault_time(const NetworkConfig& cfg, double fia_deg, double settle) {
    const double omega = 2.0 * kPi * cfg.source1.freq;
    const double period = 1.0 / cfg.source1.freq;
    const double phi1 = (cfg.delta_deg + cfg.source1.angle_deg) * kPi / 180.0;
    const double fia = fia_deg * kPi / 180.0;
    double t0 = std::fmod(fia - phi1, 2.0 * kPi);
    if (t0 < 0) t0 += 2.0 * kPi;
    t0 /= omega;
    double n = std::ceil((settle - t0) / period - 1e-12);
    if (n < 0) n = 0;
    double t = t0 + n * period;
    if (t < settle) t += period;
    return t;
}

namespace {

/// per-phase fault conductance stamps: (node triple phase index, second phase
/// or -1 for ground, conductance)
struct FaultStamp {
    int p, q;  // phase indices 0..2, q = -1 means ground
    double g;
};

std::vector<FaultStamp> fault_stamps(const FaultSpec& fault) {
    const double r = std::max(fault.rf, kRfFloor);
    const double g = 1.0 / r;
    switch (fault.fault_type) {
        case FaultType::AG: return {{0, -1, g}};
        case FaultType::BG: return {{1, -1, g}};
        case FaultType::CG: return {{2, -1, g}};
        case FaultType::AB: return {{0, 1, g}};
        case FaultType::BC: return {{1, 2, g}};
        case FaultType::CA: return {{2, 0, g}};
        case FaultType::ABG: return {{0, -1, g}, {1, -1, g}};
        case FaultType::BCG: return {{1, -1, g}, {2, -1, g}};
        case FaultType::CAG: return {{2, -1, g}, {0, -1, g}};
        case FaultType::ABC:
            // ungrounded star of three Rf = delta of 3 Rf
            return {{0, 1, g / 3.0}, {1, 2, g / 3.0}, {2, 0, g / 3.0}};
    }
    throw DataError("bad fault type");
}

Eigen::Vector3d emf_wave(double vpk, double omega, double phi, double t) {
    return {vpk * std::sin(omega * t + phi),
            vpk * std::sin(omega * t + phi - 2.0 * kPi / 3.0),
            vpk * std::sin(omega * t + phi - 4.0 * kPi / 3.0)};
}

Eigen::Vector3cd emf_phasor(double vpk, double phi) {
    // sin(wt+phi) = Re(e^{j(phi - pi/2)} e^{jwt})
    const complex<double> rot = std::polar(1.0, phi - kPi / 2.0);
    const complex<double> a = std::polar(1.0, -2.0 * kPi / 3.0);
    return {vpk * rot, vpk * rot * a, vpk * rot * a * a};
}

} // namespace

PhasorSolution phasor_solve(const NetworkConfig& cfg, const std::optional<FaultSpec>& fault) {
    const NetworkLayout lay = build_layout(cfg);
    const int nt = lay.node_triples();
    const int n = 3 * nt;
    const complex<double> jw(0.0, lay.omega);

    std::vector<Eigen::Triplet<complex<double>>> trips;
    auto stamp_block = [&](int ta, int tb, const Eigen::Matrix3cd& y) {
        // series admittance block between triples ta, tb (tb = -1: to ground)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (y(i, j) == complex<double>(0, 0)) continue;
                trips.emplace_back(3 * ta + i, 3 * ta + j, y(i, j));
                if (tb >= 0) {
                    trips.emplace_back(3 * tb + i, 3 * tb + j, y(i, j));
                    trips.emplace_back(3 * ta + i, 3 * tb + j, -y(i, j));
                    trips.emplace_back(3 * tb + i, 3 * ta + j, -y(i, j));
                }
            }
    };

    for (const auto& s : lay.sections) {
        const Eigen::Matrix3cd z = s.r.cast<complex<double>>() + jw * s.l.cast<complex<double>>();
        stamp_block(s.left, s.right, z.inverse());
    }
    for (int t = 0; t < nt; ++t) {
        if (lay.shunt_c[t].isZero(0.0)) continue;
        stamp_block(t, -1, jw * lay.shunt_c[t].cast<complex<double>>());
    }
    if (lay.tcsc_left >= 0)
        stamp_block(lay.tcsc_left, lay.tcsc_right,
                    Eigen::Matrix3cd(jw * lay.tcsc_c * Eigen::Matrix3cd::Identity()));

    const Eigen::Matrix3cd ys1 =
        (lay.src1_r.cast<complex<double>>() + jw * lay.src1_l.cast<complex<double>>()).inverse();
    const Eigen::Matrix3cd ys2 =
        (lay.src2_r.cast<complex<double>>() + jw * lay.src2_l.cast<complex<double>>()).inverse();
    const int bus1 = 0, bus2 = nt - 1;
    stamp_block(bus1, -1, ys1);
    stamp_block(bus2, -1, ys2);

    if (fault) {
        const int ft = lay.nearest_node(fault->location_km);
        for (const auto& st : fault_stamps(*fault)) {
            Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
            if (st.q < 0) {
                g(st.p, st.p) = st.g;
                stamp_block(ft, -1, g);
            } else {
                // between two phases of the same triple
                g(st.p, st.p) = st.g;
                g(st.q, st.q) = st.g;
                g(st.p, st.q) = -st.g;
                g(st.q, st.p) = -st.g;
                stamp_block(ft, -1, g);
            }
        }
    }

    const Eigen::Vector3cd e1 = emf_phasor(lay.vpk, lay.phi1);
    const Eigen::Vector3cd e2 = emf_phasor(lay.vpk, lay.phi2);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs.segment<3>(3 * bus1) += ys1 * e1;
    rhs.segment<3>(3 * bus2) += ys2 * e2;

    Eigen::SparseMatrix<complex<double>> y(n, n);
    y.setFromTriplets(trips.begin(), trips.end());
    y.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<complex<double>>> lu;
    lu.compute(y);
    if (lu.info() != Eigen::Success) throw NumericError("phasor solve: singular system");
    const Eigen::VectorXcd v = lu.solve(rhs);

    PhasorSolution sol;
    sol.bus1_voltage = v.segment<3>(3 * bus1);
    sol.relay_current = ys1 * (e1 - sol.bus1_voltage);
    return sol;
}

std::complex<double> fundamental_phasor(const std::vector<double>& x, size_t start,
                                        int n_cycle, double rate, double freq, double t0) {
    if (start + n_cycle > x.size()) throw DataError("phasor window overruns samples");
    complex<double> acc(0, 0);
    const double omega = 2.0 * kPi * freq;
    for (int k = 0; k < n_cycle; ++k) {
        const double t = t0 + static_cast<double>(k) / rate;
        acc += x[start + k] * std::polar(1.0, -omega * t);
    }
    return 2.0 * acc / static_cast<double>(n_cycle);
}

// ---------------------------------------------------------------------------
// SimEngine

struct SimEngine::PrefaultState {
    TransientNetwork::State net_state;
    std::array<double, 4> fa{}, fb{}, fc{};
    std::vector<double> ia, ib, ic;
    long steps = 0;
};

struct SimEngine::Runner {
    TransientNetwork net;
    int src1_branch = -1;
    int src2_branch = -1;
    std::vector<int> triple_first;  // first node id of each triple
};

SimEngine::SimEngine(const NetworkConfig& cfg)
    : cfg_(cfg), layout_(build_layout(cfg)), digest_(cfg.digest()) {
    runner_ = std::make_unique<Runner>();
    auto& net = runner_->net;
    const int nt = layout_.node_triples();
    for (int t = 0; t < nt; ++t) runner_->triple_first.push_back(net.add_nodes(3));
    auto nodes_of = [this](int t) {
        const int f = runner_->triple_first[t];
        return std::vector<int>{f, f + 1, f + 2};
    };
    const std::vector<int> gnd{TransientNetwork::kGround, TransientNetwork::kGround,
                               TransientNetwork::kGround};

    for (const auto& s : layout_.sections)
        net.add_rl_branch(nodes_of(s.left), nodes_of(s.right), s.r, s.l);
    for (int t = 0; t < nt; ++t)
        if (!layout_.shunt_c[t].isZero(0.0))
            net.add_cap_branch(nodes_of(t), gnd, layout_.shunt_c[t]);
    if (layout_.tcsc_left >= 0)
        net.add_cap_branch(nodes_of(layout_.tcsc_left), nodes_of(layout_.tcsc_right),
                           Eigen::Matrix3d(layout_.tcsc_c * Eigen::Matrix3d::Identity()));

    runner_->src1_branch = net.add_rl_branch(gnd, nodes_of(0), layout_.src1_r, layout_.src1_l);
    runner_->src2_branch =
        net.add_rl_branch(gnd, nodes_of(nt - 1), layout_.src2_r, layout_.src2_l);
    const double vpk = layout_.vpk, omega = layout_.omega;
    const double phi1 = layout_.phi1, phi2 = layout_.phi2;
    net.set_emf(runner_->src1_branch,
                [vpk, omega, phi1](double t) { return emf_wave(vpk, omega, phi1, t); });
    net.set_emf(runner_->src2_branch,
                [vpk, omega, phi2](double t) { return emf_wave(vpk, omega, phi2, t); });
}

SimEngine::~SimEngine() = default;

namespace {

struct Recorder {
    ButterworthLowpass4 fa, fb, fc;
    std::vector<double> ia, ib, ic;
    long steps = 0;
    int decim;

    Recorder(double record_rate, double dt)
        : fa(0.4875 * record_rate, 1.0 / dt),
          fb(0.4875 * record_rate, 1.0 / dt),
          fc(0.4875 * record_rate, 1.0 / dt),
          decim(static_cast<int>(std::llround(1.0 / (dt * record_rate)))) {}

    void push(const Eigen::VectorXd& i) {
        const double a = fa.process(i[0]);
        const double b = fb.process(i[1]);
        const double c = fc.process(i[2]);
        if (steps % decim == 0) {
            ia.push_back(a);
            ib.push_back(b);
            ic.push_back(c);
        }
        ++steps;
    }
};

} // namespace

std::shared_ptr<SimEngine::PrefaultState> SimEngine::settled(const SimParams& sim) {
    const auto key = std::make_tuple(sim.dt_internal, sim.settle_time, sim.record_rate);
    auto it = prefault_.find(key);
    if (it != prefault_.end()) return it->second;

    auto& net = runner_->net;
    net.clear_removable();
    net.finalize(sim.dt_internal);  // pristine zero state at t = 0
    Recorder rec(sim.record_rate, sim.dt_internal);
    rec.push(net.branch_current(runner_->src1_branch));  // sample at t = 0
    const long k_settle = std::llround(sim.settle_time / sim.dt_internal);
    for (long k = 0; k < k_settle; ++k) {
        net.step();
        rec.push(net.branch_current(runner_->src1_branch));
    }
    auto st = std::make_shared<PrefaultState>();
    st->net_state = net.save_state();
    st->fa = rec.fa.state();
    st->fb = rec.fb.state();
    st->fc = rec.fc.state();
    st->ia = std::move(rec.ia);
    st->ib = std::move(rec.ib);
    st->ic = std::move(rec.ic);
    st->steps = rec.steps;
    prefault_[key] = st;
    return st;
}

WaveformRecord SimEngine::run_case(const FaultSpec& fault, const SimParams& sim,
                                   std::int64_t case_id) {
    sim.validate();
    const double dt = sim.dt_internal;
    const double t_inc_exact = schedule_fault_time(cfg_, fault.fia, sim.settle_time);
    const long k_inc = static_cast<long>(std::ceil(t_inc_exact / dt - 1e-9));
    const int ft = layout_.nearest_node(fault.location_km);

    auto pre = settled(sim);
    auto& net = runner_->net;
    net.clear_removable();
    net.restore_state(pre->net_state);

    Recorder rec(sim.record_rate, dt);
    rec.fa.set_state(pre->fa);
    rec.fb.set_state(pre->fb);
    rec.fc.set_state(pre->fc);
    rec.ia = pre->ia;
    rec.ib = pre->ib;
    rec.ic = pre->ic;
    rec.steps = pre->steps;

    const long k_settle = pre->steps - 1;  // steps includes the t=0 sample push
    for (long k = k_settle; k < k_inc; ++k) {
        net.step();
        rec.push(net.branch_current(runner_->src1_branch));
    }

    // apply the fault and keep going
    const auto nodes = std::vector<int>{runner_->triple_first[ft], runner_->triple_first[ft] + 1,
                                        runner_->triple_first[ft] + 2};
    for (const auto& st : fault_stamps(fault)) {
        Eigen::MatrixXd g(1, 1);
        g(0, 0) = st.g;
        const std::vector<int> from{nodes[st.p]};
        const std::vector<int> to{st.q < 0 ? TransientNetwork::kGround : nodes[st.q]};
        net.add_conductance_branch(from, to, g, /*removable=*/true);
    }

    long k_end = k_inc + static_cast<long>(std::llround(sim.post_fault_time / dt));
    k_end = ((k_end + rec.decim - 1) / rec.decim) * rec.decim;
    try {
        for (long k = k_inc; k < k_end; ++k) {
            net.step();
            rec.push(net.branch_current(runner_->src1_branch));
        }
    } catch (const NumericError& e) {
        throw NumericError("case " + std::to_string(case_id) + ": " + e.what());
    }

    WaveformRecord out;
    out.ia = std::move(rec.ia);
    out.ib = std::move(rec.ib);
    out.ic = std::move(rec.ic);
    out.inception_index = static_cast<int>(k_inc / rec.decim + 1);
    out.case_id = case_id;
    out.rate = sim.record_rate;
    out.fault = fault;
    out.config_digest = digest_;
    for (const auto* ch : {&out.ia, &out.ib, &out.ic})
        for (double v : *ch)
            if (!std::isfinite(v))
                throw NumericError("case " + std::to_string(case_id) + ": non-finite samples");
    return out;
}

WaveformRecord SimEngine::run_nofault(const SimParams& sim, double duration) {
    sim.validate();
    auto& net = runner_->net;
    net.clear_removable();
    net.finalize(sim.dt_internal);
    Recorder rec(sim.record_rate, sim.dt_internal);
    rec.push(net.branch_current(runner_->src1_branch));
    const long k_end = std::llround(duration / sim.dt_internal);
    for (long k = 0; k < k_end; ++k) {
        net.step();
        rec.push(net.branch_current(runner_->src1_branch));
    }
    WaveformRecord out;
    out.ia = std::move(rec.ia);
    out.ib = std::move(rec.ib);
    out.ic = std::move(rec.ic);
    out.inception_index = 0;
    out.rate = sim.record_rate;
    out.config_digest = digest_;
    return out;
}

} // namespace relaylab

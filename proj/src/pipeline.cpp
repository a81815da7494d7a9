#include "relaylab/pipeline.hpp"

#include "relaylab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>

namespace relaylab {

namespace fs = std::filesystem;

PipelineConfig default_pipeline_config() {
    PipelineConfig pc;
    pc.line = line_parameters(default_400kv_geometry(), pc.freq);
    return pc;
}

namespace {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::complex<double> complex_field(const nlohmann::json& j) {
    return {j.at("re").get<double>(), j.at("im").get<double>()};
}

} // namespace

PipelineConfig load_pipeline_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config JSON in " + file.string() + ": " + e.what());
    }
    PipelineConfig pc;
    try {
        bool line_set = false;
        if (j.contains("network")) {
            const auto& n = j.at("network");
            maybe(n, "v_ll", pc.v_ll);
            maybe(n, "frequency", pc.freq);
            if (n.contains("source_z1")) pc.source_z1 = complex_field(n.at("source_z1"));
            if (n.contains("source_z0")) pc.source_z0 = complex_field(n.at("source_z0"));
            if (n.contains("segments_km")) {
                auto v = n.at("segments_km").get<std::vector<double>>();
                if (v.size() != 3) throw ConfigError("segments_km needs 3 entries");
                std::copy(v.begin(), v.end(), pc.segment_lengths_km.begin());
            }
            maybe(n, "sections_per_km", pc.sections_per_km);
            const fs::path base = file.parent_path();
            if (n.contains("line_parameters")) {
                pc.line = load_line_parameters(base / n.at("line_parameters").get<std::string>());
                line_set = true;
            } else if (n.contains("geometry")) {
                const auto g = load_geometry(base / n.at("geometry").get<std::string>());
                pc.line = line_parameters(g, pc.freq);
                line_set = true;
            }
        }
        if (!line_set) pc.line = line_parameters(default_400kv_geometry(), pc.freq);
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            maybe(s, "dt_internal", pc.sim.dt_internal);
            maybe(s, "record_rate", pc.sim.record_rate);
            maybe(s, "settle_time", pc.sim.settle_time);
            maybe(s, "post_fault_time", pc.sim.post_fault_time);
        }
        if (j.contains("grid")) {
            maybe(j.at("grid"), "c", pc.grid_c);
            maybe(j.at("grid"), "g", pc.grid_g);
        }
        if (j.contains("split")) {
            maybe(j.at("split"), "eval_fraction", pc.eval_fraction);
            maybe(j.at("split"), "resubstitution", pc.resubstitution);
        }
        if (j.contains("smo")) {
            maybe(j.at("smo"), "tol", pc.smo.tol);
            maybe(j.at("smo"), "max_updates", pc.smo.max_updates);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config value in " + file.string() + ": " + e.what());
    }
    if (pc.grid_c.empty() || pc.grid_g.empty()) throw ConfigError("empty parameter grid");
    if (pc.eval_fraction <= 0.0 || pc.eval_fraction >= 1.0)
        throw ConfigError("eval_fraction must be in (0, 1)");
    pc.sim.validate();
    return pc;
}

double tcsc_position_km(int scenario) {
    if (scenario == 1) return 125.0;
    if (scenario == 2) return 187.5;
    throw ConfigError("scenario must be 1 or 2");
}

NetworkConfig network_for_case(const PipelineConfig& pc, const FaultCase& c) {
    NetworkConfig nc;
    nc.source1 = {pc.v_ll, pc.freq, pc.source_z1, pc.source_z0, c.zg1_pct, 0.0};
    nc.source2 = {pc.v_ll, pc.freq, pc.source_z1, pc.source_z0, c.zg2_pct, 0.0};
    nc.delta_deg = c.delta;
    nc.segment_lengths_km = pc.segment_lengths_km;
    nc.line = pc.line;
    nc.tcsc = TcscSpec{tcsc_position_km(c.scenario), c.xc_pct};
    nc.sections_per_km = pc.sections_per_km;
    nc.validate();
    return nc;
}

FaultSpec fault_for_case(const FaultCase& c) {
    return {c.fault_type, c.location_km, c.rf, c.fia};
}

NetworkConfig nominal_network(const PipelineConfig& pc) {
    NetworkConfig nc;
    nc.source1 = {pc.v_ll, pc.freq, pc.source_z1, pc.source_z0, 100.0, 0.0};
    nc.source2 = {pc.v_ll, pc.freq, pc.source_z1, pc.source_z0, 100.0, 0.0};
    nc.delta_deg = 20.0;
    nc.segment_lengths_km = pc.segment_lengths_km;
    nc.line = pc.line;
    nc.sections_per_km = pc.sections_per_km;
    nc.validate();
    return nc;
}

double rated_current_base(const PipelineConfig& pc) {
    const auto sol = phasor_solve(nominal_network(pc));
    const double base = std::abs(sol.relay_current(0));
    if (!(base > 0.0) || !std::isfinite(base))
        throw NumericError("degenerate rated-current base");
    return base;
}

namespace {

using GroupKey = std::array<double, 4>;  // zg1, zg2, xc, delta

GroupKey group_key(const FaultCase& c) {
    return {c.zg1_pct, c.zg2_pct, c.xc_pct, c.delta};
}

std::vector<WaveformRecord> run_group(const PipelineConfig& pc,
                                      const std::vector<FaultCase>& cases) {
    SimEngine engine(network_for_case(pc, cases.front()));
    std::vector<WaveformRecord> out;
    out.reserve(cases.size());
    for (const auto& c : cases)
        out.push_back(engine.run_case(fault_for_case(c), pc.sim, c.case_id));
    return out;
}

} // namespace

void simulate_cases(const PipelineConfig& pc, int scenario, const std::set<std::int64_t>& ids,
                    const fs::path& out_dir, bool binary, int jobs, const Progress& progress) {
    if (ids.empty()) throw DataError("no case ids to simulate");
    fs::create_directories(out_dir);
    std::map<GroupKey, std::vector<FaultCase>> groups;
    for (const auto id : ids) {
        FaultCase c = case_from_id(scenario, id);
        groups[group_key(c)].push_back(c);
    }
    const auto total = static_cast<std::int64_t>(ids.size());
    std::int64_t done = 0;
    const auto emit = [&](const std::vector<WaveformRecord>& recs) {
        for (const auto& r : recs) save_waveform(out_dir, r, binary);
        done += static_cast<std::int64_t>(recs.size());
        if (progress) progress(done, total);
    };
    if (jobs <= 1) {
        for (const auto& [key, cases] : groups) emit(run_group(pc, cases));
        return;
    }
    std::vector<const std::vector<FaultCase>*> order;
    order.reserve(groups.size());
    for (const auto& [key, cases] : groups) order.push_back(&cases);
    // rolling window of at most `jobs` in-flight groups, drained in order
    std::vector<std::future<std::vector<WaveformRecord>>> pending(order.size());
    size_t next = 0;
    const size_t width = static_cast<size_t>(jobs);
    for (size_t first = 0; first < order.size(); ++first) {
        while (next < order.size() && next - first < width) {
            pending[next] = std::async(std::launch::async, run_group, std::cref(pc),
                                       std::cref(*order[next]));
            ++next;
        }
        emit(pending[first].get());
        pending[first] = {};
    }
}

std::vector<FeatureVector> extract_all_features(const fs::path& waveform_dir, double i_base) {
    const auto files = list_waveforms(waveform_dir);
    if (files.empty()) throw DataError("no waveform files in " + waveform_dir.string());
    std::vector<FeatureVector> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        const WaveformRecord rec = load_waveform(f);
        out.push_back(extract_features(rec, zone_label(rec.fault.location_km), i_base));
    }
    return out;
}

std::set<std::int64_t> training_ids_for_split(int scenario, const std::string& split) {
    if (split == "base") return base_training_ids(scenario);
    if (split == "augmented") {
        auto ids = base_training_ids(scenario);
        ids.merge(augment_ids(scenario));
        return ids;
    }
    throw ConfigError("unknown split: " + split);
}

LabeledSet features_subset(const std::vector<FeatureVector>& rows,
                           const std::set<std::int64_t>& ids, bool invert) {
    std::vector<const FeatureVector*> picked;
    for (const auto& r : rows)
        if ((ids.count(r.case_id) != 0) != invert) picked.push_back(&r);
    if (picked.empty()) throw DataError("feature subset is empty");
    LabeledSet set;
    set.x.resize(static_cast<Eigen::Index>(picked.size()), picked.front()->values.size());
    set.labels.resize(picked.size());
    for (size_t i = 0; i < picked.size(); ++i) {
        set.x.row(static_cast<Eigen::Index>(i)) = picked[i]->values.transpose();
        set.labels[i] = picked[i]->zone;
    }
    return set;
}

namespace {

/// Deterministic stratified hold-out: within each zone (rows ordered by case
/// id) every k-th row goes to the evaluation slice.
void holdout_split(const std::vector<const FeatureVector*>& rows, double eval_fraction,
                   std::vector<const FeatureVector*>& fit,
                   std::vector<const FeatureVector*>& eval) {
    const int k = std::max(2, static_cast<int>(std::lround(1.0 / eval_fraction)));
    std::array<int, 4> seen{};  // per-zone rank
    for (const auto* r : rows) {
        const int rank = seen[static_cast<size_t>(r->zone)]++;
        (rank % k == 0 ? eval : fit).push_back(r);
    }
}

LabeledSet to_set(const std::vector<const FeatureVector*>& rows) {
    if (rows.empty()) throw DataError("empty sample set");
    LabeledSet set;
    set.x.resize(static_cast<Eigen::Index>(rows.size()), rows.front()->values.size());
    set.labels.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        set.x.row(static_cast<Eigen::Index>(i)) = rows[i]->values.transpose();
        set.labels[i] = rows[i]->zone;
    }
    return set;
}

} // namespace

TrainOutcome train_with_grid(const std::vector<FeatureVector>& features, int scenario,
                             const std::string& split, Strategy strategy,
                             const VotingTable& table, const PipelineConfig& pc) {
    const auto split_ids = training_ids_for_split(scenario, split);
    std::vector<const FeatureVector*> train_rows;
    for (const auto& r : features)
        if (split_ids.count(r.case_id) != 0) train_rows.push_back(&r);
    if (train_rows.empty()) throw DataError("no training rows for split " + split);
    std::sort(train_rows.begin(), train_rows.end(),
              [](const FeatureVector* a, const FeatureVector* b) { return a->case_id < b->case_id; });

    const LabeledSet full = to_set(train_rows);
    GridSearchResult grid;
    if (pc.resubstitution) {
        grid = grid_search(full, full, pc.grid_c, pc.grid_g, strategy, table, pc.smo);
    } else {
        std::vector<const FeatureVector*> fit_rows, eval_rows;
        holdout_split(train_rows, pc.eval_fraction, fit_rows, eval_rows);
        grid = grid_search(to_set(fit_rows), to_set(eval_rows), pc.grid_c, pc.grid_g, strategy,
                           table, pc.smo);
    }

    TrainOutcome out;
    out.grid = grid;
    out.model.scenario = scenario;
    out.model.split = split;
    out.model.training_ids.reserve(train_rows.size());
    for (const auto* r : train_rows) out.model.training_ids.push_back(r->case_id);
    out.model.clf = strategy == Strategy::OAA
                        ? oaa_train(full, grid.best_c, grid.best_g, pc.smo)
                        : oao_train(full, grid.best_c, grid.best_g, table, pc.smo);
    return out;
}

ConfusionReport evaluate_model(const ModelFile& model, const std::vector<FeatureVector>& rows) {
    const std::set<std::int64_t> ids(model.training_ids.begin(), model.training_ids.end());
    return evaluate_classifier(model.clf, features_subset(rows, ids, /*invert=*/true));
}

std::vector<ScenarioSetting> default_settings() {
    return {
        {"oaa_base", Strategy::OAA, "base", ""},
        {"oaa_augmented", Strategy::OAA, "augmented", ""},
        {"oao_base_V", Strategy::OAO, "base", "V"},
        {"oao_base_VI", Strategy::OAO, "base", "VI"},
        {"oao_augmented_IX", Strategy::OAO, "augmented", "IX"},
    };
}

ScenarioRun run_scenario(const PipelineConfig& pc, int scenario, double fraction,
                         std::uint64_t seed, const fs::path& out_dir, bool binary, int jobs,
                         const std::vector<ScenarioSetting>& settings, const Progress& progress) {
    if (settings.empty()) throw ConfigError("no settings to run");
    fs::create_directories(out_dir);

    const auto cases = full_matrix(scenario);
    const auto ids = subsample(cases, fraction, seed);
    simulate_cases(pc, scenario, ids, out_dir / "waves", binary, jobs, progress);

    const double i_base = rated_current_base(pc);
    const auto features = extract_all_features(out_dir / "waves", i_base);
    save_features(out_dir / "features.csv", features);

    ScenarioRun run;
    run.manifest.scenario = scenario;
    run.manifest.seed = seed;
    run.manifest.subsample_fraction = fraction;
    run.manifest.sim_digest = nominal_network(pc).digest();
    run.manifest.grid_c = pc.grid_c;
    run.manifest.grid_g = pc.grid_g;
    run.manifest.tool_version = kToolVersion;
    {
        std::string splits;
        for (const auto& s : settings)
            if (splits.find(s.split) == std::string::npos)
                splits += (splits.empty() ? "" : "+") + s.split;
        run.manifest.split = splits;
    }
    save_manifest(out_dir / "manifest.json", run.manifest);

    std::ofstream summary(out_dir / "summary.csv");
    summary.precision(17);
    summary << "setting,strategy,split,table,c,g,success_rate,undecided,total\n";
    for (const auto& s : settings) {
        const VotingTable table =
            s.table.empty() ? voting_table("V") : voting_table(s.table);
        TrainOutcome t = train_with_grid(features, scenario, s.split, s.strategy, table, pc);
        save_model(out_dir / ("model_" + s.name + ".json"), t.model);
        {
            std::ofstream g(out_dir / ("grid_" + s.name + ".csv"));
            g.precision(17);
            g << "c,g,accuracy\n";
            for (const auto& row : t.grid.table)
                g << row[0] << ',' << row[1] << ',' << row[2] << "\n";
        }
        const ConfusionReport rep = evaluate_model(t.model, features);
        {
            std::ofstream txt(out_dir / ("report_" + s.name + ".txt"));
            txt << format_report(rep);
            std::ofstream csv(out_dir / ("report_" + s.name + ".csv"));
            csv << report_csv(rep);
        }
        summary << s.name << ',' << (s.strategy == Strategy::OAA ? "oaa" : "oao") << ','
                << s.split << ',' << s.table << ',' << t.grid.best_c << ',' << t.grid.best_g
                << ',' << rep.success_rate << ',' << rep.undecided << ',' << rep.total << "\n";
        run.results.push_back({s, t.grid.best_c, t.grid.best_g, rep});
    }
    return run;
}

} // namespace relaylab

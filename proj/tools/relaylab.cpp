#include "relaylab/errors.hpp"
#include "relaylab/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace rl = relaylab;
namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
    std::string config;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool binary = false;
    bool resubstitution = false;
    bool quiet = false;
};

rl::PipelineConfig make_config(const GlobalOpts& g) {
    rl::PipelineConfig pc = g.config.empty() ? rl::default_pipeline_config()
                                             : rl::load_pipeline_config(g.config);
    if (g.resubstitution) pc.resubstitution = true;
    return pc;
}

rl::Progress progress_printer(const GlobalOpts& g) {
    if (g.quiet) return nullptr;
    return [](std::int64_t done, std::int64_t total) {
        if (done % 50 == 0 || done == total)
            std::fprintf(stderr, "\rsimulated %lld/%lld", static_cast<long long>(done),
                         static_cast<long long>(total));
        if (done == total) std::fprintf(stderr, "\n");
    };
}

rl::Strategy parse_strategy(const std::string& s) {
    if (s == "oaa") return rl::Strategy::OAA;
    if (s == "oao") return rl::Strategy::OAO;
    throw rl::ConfigError("strategy must be oaa or oao");
}

void write_case_manifest(const fs::path& file, const std::vector<rl::FaultCase>& cases) {
    std::ofstream out(file);
    if (!out) throw rl::DataError("cannot write " + file.string());
    out.precision(17);
    out << "case_id,scenario,zg1_pct,zg2_pct,xc_pct,rf,fia,delta,fault_type,location_km,zone\n";
    for (const auto& c : cases)
        out << c.case_id << ',' << c.scenario << ',' << c.zg1_pct << ',' << c.zg2_pct << ','
            << c.xc_pct << ',' << c.rf << ',' << c.fia << ',' << c.delta << ','
            << rl::fault_type_name(c.fault_type) << ',' << c.location_km << ','
            << rl::zone_label(c.location_km) << "\n";
}

void write_id_list(const fs::path& file, const std::set<std::int64_t>& ids) {
    std::ofstream out(file);
    if (!out) throw rl::DataError("cannot write " + file.string());
    for (const auto id : ids) out << id << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"fault-zone classification pipeline for series-compensated lines"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config, "pipeline configuration JSON");
    app.add_option("--seed", g.seed, "RNG seed for subsampling");
    app.add_option("--jobs", g.jobs, "max parallel simulation groups")->check(CLI::PositiveNumber);
    app.add_flag("--binary", g.binary, "write waveforms in the binary format");
    app.add_flag("--resubstitution", g.resubstitution, "score the parameter grid on the training data");
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    // params
    auto* params = app.add_subcommand("params", "derive line parameters from tower geometry");
    std::string geometry_file, params_out;
    params->add_option("--geometry", geometry_file, "tower geometry JSON (default: built-in)");
    params->add_option("--out", params_out, "output line-parameter JSON")->required();
    params->callback([&] {
        const rl::TowerGeometry geo = geometry_file.empty() ? rl::default_400kv_geometry()
                                                            : rl::load_geometry(geometry_file);
        const auto lp = rl::line_parameters(geo, 50.0);
        rl::save_line_parameters(params_out, lp);
        if (!g.quiet)
            std::cout << "z1 = " << lp.z1 << " ohm/km, z0 = " << lp.z0 << " ohm/km\n";
    });

    // cases
    auto* cases_cmd = app.add_subcommand("cases", "export the case matrix and split id lists");
    int cases_scenario = 1;
    std::string cases_dir;
    cases_cmd->add_option("--scenario", cases_scenario, "1 or 2")->check(CLI::Range(1, 2));
    cases_cmd->add_option("--out-dir", cases_dir, "output directory")->required();
    cases_cmd->callback([&] {
        fs::create_directories(cases_dir);
        const auto tag = "_s" + std::to_string(cases_scenario);
        write_case_manifest(fs::path(cases_dir) / ("cases" + tag + ".csv"),
                            rl::full_matrix(cases_scenario));
        write_id_list(fs::path(cases_dir) / ("split_base" + tag + ".txt"),
                      rl::training_ids_for_split(cases_scenario, "base"));
        write_id_list(fs::path(cases_dir) / ("split_augmented" + tag + ".txt"),
                      rl::training_ids_for_split(cases_scenario, "augmented"));
    });

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run the EMT simulations for one scenario");
    int sim_scenario = 1;
    double sim_fraction = 1.0;
    std::string sim_out;
    simulate->add_option("--scenario", sim_scenario, "1 or 2")->check(CLI::Range(1, 2));
    simulate->add_option("--fraction", sim_fraction, "stratified subsample fraction")
        ->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--out", sim_out, "output directory")->required();
    simulate->callback([&] {
        const auto pc = make_config(g);
        const auto ids = rl::subsample(rl::full_matrix(sim_scenario), sim_fraction, g.seed);
        fs::create_directories(sim_out);
        rl::simulate_cases(pc, sim_scenario, ids, sim_out, g.binary, g.jobs,
                           progress_printer(g));
        rl::RunManifest m;
        m.scenario = sim_scenario;
        m.seed = g.seed;
        m.subsample_fraction = sim_fraction;
        m.sim_digest = rl::nominal_network(pc).digest();
        m.grid_c = pc.grid_c;
        m.grid_g = pc.grid_g;
        m.tool_version = rl::kToolVersion;
        rl::save_manifest(fs::path(sim_out) / "manifest.json", m);
    });

    // features
    auto* features = app.add_subcommand("features", "extract DWT features from waveforms");
    std::string feat_waves, feat_out;
    features->add_option("--waves", feat_waves, "waveform directory")->required();
    features->add_option("--out", feat_out, "output feature CSV")->required();
    features->callback([&] {
        const auto pc = make_config(g);
        const auto rows = rl::extract_all_features(feat_waves, rl::rated_current_base(pc));
        rl::save_features(feat_out, rows);
        if (!g.quiet) std::cout << rows.size() << " feature rows written\n";
    });

    // train
    auto* train = app.add_subcommand("train", "train a classifier at fixed (C, g)");
    std::string tr_features, tr_split = "base", tr_strategy = "oaa", tr_table = "V", tr_out;
    int tr_scenario = 1;
    double tr_c = 1e3, tr_g = 1.0;
    train->add_option("--features", tr_features, "feature CSV")->required();
    train->add_option("--scenario", tr_scenario, "1 or 2")->check(CLI::Range(1, 2));
    train->add_option("--split", tr_split, "base or augmented");
    train->add_option("--strategy", tr_strategy, "oaa or oao");
    train->add_option("--table", tr_table, "OAO voting table: V, VI or IX");
    train->add_option("--c", tr_c, "soft-margin C")->required();
    train->add_option("--g", tr_g, "RBF width g")->required();
    train->add_option("--out", tr_out, "output model JSON")->required();
    train->callback([&] {
        const auto pc = make_config(g);
        const auto rows = rl::load_features(tr_features);
        const auto ids = rl::training_ids_for_split(tr_scenario, tr_split);
        const auto set = rl::features_subset(rows, ids);
        rl::ModelFile m;
        m.scenario = tr_scenario;
        m.split = tr_split;
        for (const auto& r : rows)
            if (ids.count(r.case_id) != 0) m.training_ids.push_back(r.case_id);
        const rl::Strategy strategy = parse_strategy(tr_strategy);
        m.clf = strategy == rl::Strategy::OAA
                    ? rl::oaa_train(set, tr_c, tr_g, pc.smo)
                    : rl::oao_train(set, tr_c, tr_g, rl::voting_table(tr_table), pc.smo);
        rl::save_model(tr_out, m);
    });

    // grid-search
    auto* gridcmd = app.add_subcommand("grid-search", "grid search (C, g) and keep the best model");
    std::string gs_features, gs_split = "base", gs_strategy = "oaa", gs_table = "V";
    std::string gs_out_model, gs_out_table;
    int gs_scenario = 1;
    gridcmd->add_option("--features", gs_features, "feature CSV")->required();
    gridcmd->add_option("--scenario", gs_scenario, "1 or 2")->check(CLI::Range(1, 2));
    gridcmd->add_option("--split", gs_split, "base or augmented");
    gridcmd->add_option("--strategy", gs_strategy, "oaa or oao");
    gridcmd->add_option("--table", gs_table, "OAO voting table: V, VI or IX");
    gridcmd->add_option("--out-model", gs_out_model, "output model JSON")->required();
    gridcmd->add_option("--out-table", gs_out_table, "output accuracy CSV")->required();
    gridcmd->callback([&] {
        const auto pc = make_config(g);
        const auto rows = rl::load_features(gs_features);
        const auto t = rl::train_with_grid(rows, gs_scenario, gs_split,
                                           parse_strategy(gs_strategy),
                                           rl::voting_table(gs_table), pc);
        rl::save_model(gs_out_model, t.model);
        std::ofstream out(gs_out_table);
        if (!out) throw rl::DataError("cannot write " + gs_out_table);
        out.precision(17);
        out << "c,g,accuracy\n";
        for (const auto& row : t.grid.table)
            out << row[0] << ',' << row[1] << ',' << row[2] << "\n";
        if (!g.quiet)
            std::cout << "best C = " << t.grid.best_c << ", g = " << t.grid.best_g
                      << ", accuracy = " << t.grid.best_accuracy << "\n";
    });

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "confusion report on the non-training cases");
    std::string ev_model, ev_features, ev_prefix;
    evaluate->add_option("--model", ev_model, "model JSON")->required();
    evaluate->add_option("--features", ev_features, "feature CSV")->required();
    evaluate->add_option("--out-prefix", ev_prefix, "write <prefix>.txt and <prefix>.csv");
    evaluate->callback([&] {
        const auto model = rl::load_model(ev_model);
        const auto rows = rl::load_features(ev_features);
        const auto rep = rl::evaluate_model(model, rows);
        std::cout << rl::format_report(rep);
        if (!ev_prefix.empty()) {
            std::ofstream(ev_prefix + ".txt") << rl::format_report(rep);
            std::ofstream(ev_prefix + ".csv") << rl::report_csv(rep);
        }
    });

    // run-scenario
    auto* runsc = app.add_subcommand("run-scenario", "full pipeline for one scenario");
    int rs_scenario = 1;
    double rs_fraction = 0.1;
    std::string rs_out;
    runsc->add_option("--scenario", rs_scenario, "1 or 2")->check(CLI::Range(1, 2));
    runsc->add_option("--fraction", rs_fraction, "stratified subsample fraction")
        ->check(CLI::Range(0.0, 1.0));
    runsc->add_option("--out", rs_out, "output directory")->required();
    runsc->callback([&] {
        const auto pc = make_config(g);
        const auto run = rl::run_scenario(pc, rs_scenario, rs_fraction, g.seed, rs_out,
                                          g.binary, g.jobs, rl::default_settings(),
                                          progress_printer(g));
        if (!g.quiet)
            for (const auto& r : run.results)
                std::cout << r.setting.name << ": " << 100.0 * r.report.success_rate << "%\n";
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const rl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const rl::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const rl::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const rl::ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

#ifndef RELAYLAB_PIPELINE_HPP
#define RELAYLAB_PIPELINE_HPP

#include "relaylab/casegen.hpp"
#include "relaylab/emtsim.hpp"
#include "relaylab/io.hpp"
#include "relaylab/svmcore.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace relaylab {

/// Everything a run needs beyond the per-case parameters.
struct PipelineConfig {
    double v_ll = 400e3;
    double freq = 50.0;
    std::complex<double> source_z1{1.31, 15.0};
    std::complex<double> source_z0{2.33, 26.6};
    std::array<double, 3> segment_lengths_km{250.0, 100.0, 50.0};
    double sections_per_km = 0.2;
    LineParameters line;
    SimParams sim;
    std::vector<double> grid_c = default_c_grid();
    std::vector<double> grid_g = default_g_grid();
    double eval_fraction = 0.2;   // held-out slice of the training set
    bool resubstitution = false;      // grid scored on training data instead
    SmoOptions smo;
};

/// Built-in tower data -> line parameters; the zero-config default.
PipelineConfig default_pipeline_config();

/// JSON document with network / sim / grid / split sections. Geometry (or a
/// precomputed line-parameter file) is referenced by path, resolved relative
/// to the config file.
PipelineConfig load_pipeline_config(const std::filesystem::path& file);

/// TCSC position for a scenario: mid segment 1 or at 75% of it.
double tcsc_position_km(int scenario);

NetworkConfig network_for_case(const PipelineConfig& pc, const FaultCase& c);
FaultSpec fault_for_case(const FaultCase& c);

/// Nominal configuration (100%/100%, no TCSC, delta = 20) used for the
/// fixed current normalization base.
NetworkConfig nominal_network(const PipelineConfig& pc);

/// Peak rated phase-a relay current of the nominal no-fault solution.
double rated_current_base(const PipelineConfig& pc);

using Progress = std::function<void(std::int64_t done, std::int64_t total)>;

/// Simulate the given case ids of one scenario into per-case waveform files.
void simulate_cases(const PipelineConfig& pc, int scenario,
                    const std::set<std::int64_t>& ids, const std::filesystem::path& out_dir,
                    bool binary, int jobs = 1, const Progress& progress = nullptr);

/// DWT features for every waveform in a directory, zone-labelled by location.
std::vector<FeatureVector> extract_all_features(const std::filesystem::path& waveform_dir,
                                                double i_base);

std::set<std::int64_t> training_ids_for_split(int scenario, const std::string& split);

/// Rows whose id is in (or, inverted, not in) the given set.
LabeledSet features_subset(const std::vector<FeatureVector>& rows,
                           const std::set<std::int64_t>& ids, bool invert = false);

struct TrainOutcome {
    ModelFile model;
    GridSearchResult grid;
};

/// Grid search on a deterministic stratified held-out slice (or on the
/// training data itself in resubstitution mode), then a final fit on the full split.
TrainOutcome train_with_grid(const std::vector<FeatureVector>& features, int scenario,
                             const std::string& split, Strategy strategy,
                             const VotingTable& table, const PipelineConfig& pc);

/// Evaluate a model on every feature row outside its training ids.
ConfusionReport evaluate_model(const ModelFile& model, const std::vector<FeatureVector>& rows);

struct ScenarioSetting {
    std::string name;       // e.g. "oaa_augmented"
    Strategy strategy;
    std::string split;      // base | augmented
    std::string table;      // OAO voting table name, empty for OAA
};

std::vector<ScenarioSetting> default_settings();

struct SettingResult {
    ScenarioSetting setting;
    double c = 0, g = 0;
    ConfusionReport report;
};

struct ScenarioRun {
    RunManifest manifest;
    std::vector<SettingResult> results;
};

/// The full protocol: simulate a stratified subsample, extract features,
/// grid-search/train/evaluate every setting, write all artifacts to out_dir.
ScenarioRun run_scenario(const PipelineConfig& pc, int scenario, double fraction,
                         std::uint64_t seed, const std::filesystem::path& out_dir,
                         bool binary = false, int jobs = 1,
                         const std::vector<ScenarioSetting>& settings = default_settings(),
                         const Progress& progress = nullptr);

} // namespace relaylab

#endif

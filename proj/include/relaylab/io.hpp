#ifndef RELAYLAB_IO_HPP
#define RELAYLAB_IO_HPP

#include "relaylab/emtsim.hpp"
#include "relaylab/lineparam.hpp"
#include "relaylab/report.hpp"
#include "relaylab/svmcore.hpp"
#include "relaylab/wavefeat.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace relaylab {

TowerGeometry load_geometry(const std::filesystem::path& file);
void save_geometry(const std::filesystem::path& file, const TowerGeometry& g);

LineParameters load_line_parameters(const std::filesystem::path& file);
void save_line_parameters(const std::filesystem::path& file, const LineParameters& p);

/// One file per case, name = zero-padded case id. Text: '#'-prefixed header
/// then t,ia,ib,ic CSV rows. Binary: one JSON header line, then the ia, ib,
/// ic arrays as packed little-endian doubles.
std::filesystem::path waveform_path(const std::filesystem::path& dir, std::int64_t case_id,
                                    bool binary);
void save_waveform(const std::filesystem::path& dir, const WaveformRecord& rec, bool binary);
WaveformRecord load_waveform(const std::filesystem::path& file);
/// All waveform files in a directory, ascending case id.
std::vector<std::filesystem::path> list_waveforms(const std::filesystem::path& dir);

void save_features(const std::filesystem::path& file, const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> load_features(const std::filesystem::path& file);

struct ModelFile {
    ZoneClassifier clf;
    int scenario = 0;
    std::string split;
    std::vector<std::int64_t> training_ids;
};

void save_model(const std::filesystem::path& file, const ModelFile& m);
ModelFile load_model(const std::filesystem::path& file);

struct RunManifest {
    int scenario = 0;
    std::uint64_t seed = 0;
    double subsample_fraction = 1.0;
    std::string sim_digest;
    std::string split;
    std::vector<double> grid_c, grid_g;
    std::string tool_version;
};

void save_manifest(const std::filesystem::path& file, const RunManifest& m);
RunManifest load_manifest(const std::filesystem::path& file);

inline constexpr const char* kToolVersion = "relaylab 0.1.0";

} // namespace relaylab

#endif

#include <doctest.h>

#include "relaylab/errors.hpp"
#include "relaylab/io.hpp"
#include "relaylab/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

using namespace relaylab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("relaylab_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

WaveformRecord sample_record(std::int64_t id) {
    WaveformRecord rec;
    rec.case_id = id;
    rec.rate = 4000.0;
    rec.inception_index = 801;
    rec.fault = {FaultType::BCG, 250.0, 25.0, 117.0};
    rec.config_digest = "abc123";
    std::mt19937_64 rng(static_cast<std::uint64_t>(id));
    std::normal_distribution<double> dist(0.0, 1234.5);
    for (int k = 0; k < 960; ++k) {
        rec.ia.push_back(dist(rng));
        rec.ib.push_back(dist(rng));
        rec.ic.push_back(dist(rng));
    }
    return rec;
}

} // namespace

TEST_CASE("geometry round trip") {
    TempDir tmp;
    const auto g = default_400kv_geometry();
    save_geometry(tmp.path / "geo.json", g);
    const auto back = load_geometry(tmp.path / "geo.json");
    REQUIRE(back.conductors.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back.conductors[i].x == g.conductors[i].x);
        CHECK(back.conductors[i].gmr == g.conductors[i].gmr);
        CHECK(back.conductors[i].radius == g.conductors[i].radius);
    }
    CHECK(back.bundle.n == g.bundle.n);
    CHECK(back.ground_wires.size() == 2);
    CHECK(back.sag == g.sag);
    CHECK(back.earth_resistivity == g.earth_resistivity);
    CHECK_THROWS_AS(load_geometry(tmp.path / "missing.json"), DataError);
}

TEST_CASE("line parameter round trip") {
    TempDir tmp;
    const auto lp = line_parameters(default_400kv_geometry(), 50.0);
    save_line_parameters(tmp.path / "lp.json", lp);
    const auto back = load_line_parameters(tmp.path / "lp.json");
    CHECK((back.z_series - lp.z_series).norm() == 0.0);
    CHECK((back.c_shunt - lp.c_shunt).norm() == 0.0);
    CHECK(back.z1 == lp.z1);
    CHECK(back.z0 == lp.z0);
    CHECK(back.frequency == lp.frequency);
}

TEST_CASE("waveform round trip, text and binary") {
    TempDir tmp;
    const auto rec = sample_record(42);
    for (bool binary : {false, true}) {
        const fs::path dir = tmp.path / (binary ? "bin" : "txt");
        save_waveform(dir, rec, binary);
        const auto file = waveform_path(dir, rec.case_id, binary);
        CHECK(fs::exists(file));
        CHECK(file.filename().string() == (binary ? "00000042.bin" : "00000042.csv"));
        const auto back = load_waveform(file);
        CHECK(back.case_id == rec.case_id);
        CHECK(back.rate == rec.rate);
        CHECK(back.inception_index == rec.inception_index);
        CHECK(back.fault.fault_type == rec.fault.fault_type);
        CHECK(back.fault.location_km == rec.fault.location_km);
        CHECK(back.fault.rf == rec.fault.rf);
        CHECK(back.fault.fia == rec.fault.fia);
        CHECK(back.config_digest == rec.config_digest);
        REQUIRE(back.ia.size() == rec.ia.size());
        for (size_t k = 0; k < rec.ia.size(); ++k) {
            CHECK(back.ia[k] == rec.ia[k]);
            CHECK(back.ib[k] == rec.ib[k]);
            CHECK(back.ic[k] == rec.ic[k]);
        }
    }
}

TEST_CASE("waveform listing is sorted by case id") {
    TempDir tmp;
    for (std::int64_t id : {300, 7, 10050}) save_waveform(tmp.path, sample_record(id), false);
    const auto files = list_waveforms(tmp.path);
    REQUIRE(files.size() == 3);
    CHECK(files[0].filename() == "00000007.csv");
    CHECK(files[1].filename() == "00000300.csv");
    CHECK(files[2].filename() == "00010050.csv");
}

TEST_CASE("feature file round trip") {
    TempDir tmp;
    std::vector<FeatureVector> rows;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    for (std::int64_t id : {11, 3, 99}) {
        FeatureVector fv;
        fv.case_id = id;
        fv.zone = static_cast<int>(id % 3) + 1;
        fv.values.resize(kFeatureLength);
        for (int i = 0; i < kFeatureLength; ++i) fv.values[i] = dist(rng);
        rows.push_back(fv);
    }
    save_features(tmp.path / "f.csv", rows);
    const auto back = load_features(tmp.path / "f.csv");
    REQUIRE(back.size() == 3);
    CHECK(back[0].case_id == 3);  // sorted ascending
    CHECK(back[1].case_id == 11);
    CHECK(back[2].case_id == 99);
    for (const auto& b : back) {
        const auto& orig = *std::find_if(rows.begin(), rows.end(),
                                         [&](const auto& r) { return r.case_id == b.case_id; });
        CHECK(b.zone == orig.zone);
        CHECK((b.values - orig.values).norm() == 0.0);
    }
}

TEST_CASE("model file round trip preserves the decision function") {
    TempDir tmp;
    std::mt19937_64 rng(17);
    std::normal_distribution<double> dist;
    LabeledSet set;
    set.x.resize(30, 4);
    for (int i = 0; i < 30; ++i) {
        const int zone = i % 3 + 1;
        for (int j = 0; j < 4; ++j) set.x(i, j) = dist(rng) + 6.0 * zone * (j == 0);
        set.labels.push_back(zone);
    }
    ModelFile m;
    m.clf = oao_train(set, 50.0, 0.2, voting_table("IX"));
    m.scenario = 2;
    m.split = "augmented";
    m.training_ids = {1, 5, 9};
    save_model(tmp.path / "m.json", m);
    const auto back = load_model(tmp.path / "m.json");
    CHECK(back.scenario == 2);
    CHECK(back.split == "augmented");
    CHECK(back.training_ids == m.training_ids);
    CHECK(back.clf.strategy == Strategy::OAO);
    CHECK(back.clf.table.name == "IX");
    REQUIRE(back.clf.models.size() == 3);
    for (int i = 0; i < 30; ++i) {
        const Eigen::VectorXd x = set.x.row(i).transpose();
        CHECK(classify(back.clf, x) == classify(m.clf, x));
    }
}

TEST_CASE("manifest round trip") {
    TempDir tmp;
    RunManifest m;
    m.scenario = 2;
    m.seed = 12345;
    m.subsample_fraction = 0.1;
    m.sim_digest = "deadbeef";
    m.split = "base+augmented";
    m.grid_c = {10.0, 100.0};
    m.grid_g = {0.5};
    m.tool_version = kToolVersion;
    save_manifest(tmp.path / "manifest.json", m);
    const auto back = load_manifest(tmp.path / "manifest.json");
    CHECK(back.scenario == m.scenario);
    CHECK(back.seed == m.seed);
    CHECK(back.subsample_fraction == m.subsample_fraction);
    CHECK(back.sim_digest == m.sim_digest);
    CHECK(back.split == m.split);
    CHECK(back.grid_c == m.grid_c);
    CHECK(back.grid_g == m.grid_g);
    CHECK(back.tool_version == m.tool_version);
}

TEST_CASE("pipeline config loading") {
    TempDir tmp;
    const auto lp = line_parameters(default_400kv_geometry(), 50.0);
    save_line_parameters(tmp.path / "lp.json", lp);
    {
        std::ofstream cfg(tmp.path / "cfg.json");
        cfg << R"({
          "network": { "v_ll": 230000.0, "line_parameters": "lp.json" },
          "sim": { "settle_time": 0.15 },
          "grid": { "c": [7.0], "g": [0.3] },
          "split": { "eval_fraction": 0.25, "resubstitution": true }
        })";
    }
    const auto pc = load_pipeline_config(tmp.path / "cfg.json");
    CHECK(pc.v_ll == 230000.0);
    CHECK(pc.sim.settle_time == 0.15);
    CHECK(pc.grid_c == std::vector<double>{7.0});
    CHECK(pc.grid_g == std::vector<double>{0.3});
    CHECK(pc.eval_fraction == 0.25);
    CHECK(pc.resubstitution);
    CHECK((pc.line.z_series - lp.z_series).norm() == 0.0);

    {
        std::ofstream cfg(tmp.path / "bad.json");
        cfg << R"({ "split": { "eval_fraction": 1.5 } })";
    }
    CHECK_THROWS_AS(load_pipeline_config(tmp.path / "bad.json"), ConfigError);
    CHECK_THROWS_AS(load_pipeline_config(tmp.path / "nope.json"), ConfigError);
}

TEST_CASE("training split helper") {
    const auto base = training_ids_for_split(1, "base");
    const auto aug = training_ids_for_split(1, "augmented");
    CHECK(base.size() == 3600);
    CHECK(aug.size() == 4400);
    for (const auto id : base) CHECK(aug.count(id) == 1);
    CHECK_THROWS_AS(training_ids_for_split(1, "full"), ConfigError);
}

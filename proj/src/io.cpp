#include "relaylab/io.hpp"

#include "relaylab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace relaylab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json read_json(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("malformed JSON in " + file.string() + ": " + e.what());
    }
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << text;
}

json complex_to_json(const std::complex<double>& z) {
    return json{{"re", z.real()}, {"im", z.imag()}};
}

std::complex<double> complex_from_json(const json& j) {
    return {j.at("re").get<double>(), j.at("im").get<double>()};
}

} // namespace

TowerGeometry load_geometry(const fs::path& file) {
    const json j = read_json(file);
    TowerGeometry g;
    try {
        for (const auto& c : j.at("conductors"))
            g.conductors.push_back({c.at("x"), c.at("y"), c.at("gmr"), c.at("radius"),
                                    c.at("r_dc")});
        g.bundle.n = j.at("bundle").at("n");
        g.bundle.spacing = j.at("bundle").value("spacing", 0.0);
        for (const auto& w : j.value("ground_wires", json::array()))
            g.ground_wires.push_back({w.at("x"), w.at("y"), w.at("radius"), w.at("r_dc")});
        g.sag = j.value("sag", 0.0);
        g.earth_resistivity = j.value("earth_resistivity", 100.0);
    } catch (const json::exception& e) {
        throw DataError("bad geometry file " + file.string() + ": " + e.what());
    }
    g.validate();
    return g;
}

void save_geometry(const fs::path& file, const TowerGeometry& g) {
    json j;
    j["conductors"] = json::array();
    for (const auto& c : g.conductors)
        j["conductors"].push_back(
            {{"x", c.x}, {"y", c.y}, {"gmr", c.gmr}, {"radius", c.radius}, {"r_dc", c.r_dc}});
    j["bundle"] = {{"n", g.bundle.n}, {"spacing", g.bundle.spacing}};
    j["ground_wires"] = json::array();
    for (const auto& w : g.ground_wires)
        j["ground_wires"].push_back(
            {{"x", w.x}, {"y", w.y}, {"radius", w.radius}, {"r_dc", w.r_dc}});
    j["sag"] = g.sag;
    j["earth_resistivity"] = g.earth_resistivity;
    write_text(file, j.dump(2) + "\n");
}

LineParameters load_line_parameters(const fs::path& file) {
    const json j = read_json(file);
    LineParameters p;
    try {
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) {
                p.z_series(i, k) = complex_from_json(j.at("z_series").at(i).at(k));
                p.c_shunt(i, k) = j.at("c_shunt").at(i).at(k).get<double>();
            }
        p.z1 = complex_from_json(j.at("z1"));
        p.z0 = complex_from_json(j.at("z0"));
        p.frequency = j.at("frequency");
    } catch (const json::exception& e) {
        throw DataError("bad line-parameter file " + file.string() + ": " + e.what());
    }
    return p;
}

void save_line_parameters(const fs::path& file, const LineParameters& p) {
    json zs = json::array();
    json cs = json::array();
    for (int i = 0; i < 3; ++i) {
        json zrow = json::array(), crow = json::array();
        for (int k = 0; k < 3; ++k) {
            zrow.push_back(complex_to_json(p.z_series(i, k)));
            crow.push_back(p.c_shunt(i, k));
        }
        zs.push_back(zrow);
        cs.push_back(crow);
    }
    json j{{"z_series", zs},
           {"c_shunt", cs},
           {"z1", complex_to_json(p.z1)},
           {"z0", complex_to_json(p.z0)},
           {"frequency", p.frequency},
           {"units", {{"z_series", "ohm/km"}, {"c_shunt", "F/km"}}}};
    write_text(file, j.dump(2) + "\n");
}

fs::path waveform_path(const fs::path& dir, std::int64_t case_id, bool binary) {
    std::ostringstream name;
    name << std::setw(8) << std::setfill('0') << case_id << (binary ? ".bin" : ".csv");
    return dir / name.str();
}

namespace {

json waveform_header(const WaveformRecord& rec) {
    return json{{"case_id", rec.case_id},
                {"rate", rec.rate},
                {"inception_index", rec.inception_index},
                {"fault_type", fault_type_name(rec.fault.fault_type)},
                {"location_km", rec.fault.location_km},
                {"rf", rec.fault.rf},
                {"fia", rec.fault.fia},
                {"config_digest", rec.config_digest},
                {"samples", rec.ia.size()}};
}

void header_into(const json& j, WaveformRecord& rec) {
    rec.case_id = j.at("case_id");
    rec.rate = j.at("rate");
    rec.inception_index = j.at("inception_index");
    rec.fault.fault_type = fault_type_from_name(j.at("fault_type"));
    rec.fault.location_km = j.at("location_km");
    rec.fault.rf = j.at("rf");
    rec.fault.fia = j.at("fia");
    rec.config_digest = j.at("config_digest");
}

} // namespace

void save_waveform(const fs::path& dir, const WaveformRecord& rec, bool binary) {
    fs::create_directories(dir);
    const fs::path file = waveform_path(dir, rec.case_id, binary);
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    const json hdr = waveform_header(rec);
    if (binary) {
        out << hdr.dump() << "\n";
        for (const auto* ch : {&rec.ia, &rec.ib, &rec.ic})
            out.write(reinterpret_cast<const char*>(ch->data()),
                      static_cast<std::streamsize>(ch->size() * sizeof(double)));
    } else {
        for (const auto& [key, value] : hdr.items())
            out << "# " << key << ": " << value.dump() << "\n";
        out << "t,ia,ib,ic\n";
        out << std::setprecision(17);
        for (size_t k = 0; k < rec.ia.size(); ++k)
            out << static_cast<double>(k) / rec.rate << ',' << rec.ia[k] << ',' << rec.ib[k]
                << ',' << rec.ic[k] << "\n";
    }
    if (!out) throw DataError("write failed for " + file.string());
}

WaveformRecord load_waveform(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    WaveformRecord rec;
    if (file.extension() == ".bin") {
        std::string hdr_line;
        std::getline(in, hdr_line);
        const json hdr = json::parse(hdr_line);
        header_into(hdr, rec);
        const size_t n = hdr.at("samples");
        for (auto* ch : {&rec.ia, &rec.ib, &rec.ic}) {
            ch->resize(n);
            in.read(reinterpret_cast<char*>(ch->data()),
                    static_cast<std::streamsize>(n * sizeof(double)));
        }
        if (!in) throw DataError("truncated waveform file " + file.string());
        return rec;
    }
    json hdr = json::object();
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) {
            const auto colon = line.find(": ");
            if (colon == std::string::npos) throw DataError("bad header line in " + file.string());
            hdr[line.substr(2, colon - 2)] = json::parse(line.substr(colon + 2));
            continue;
        }
        if (line.rfind("t,", 0) == 0) break;  // column header
        throw DataError("unexpected line in " + file.string());
    }
    header_into(hdr, rec);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double t, a, b, c;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &a, &b, &c) != 4)
            throw DataError("bad sample row in " + file.string());
        rec.ia.push_back(a);
        rec.ib.push_back(b);
        rec.ic.push_back(c);
    }
    return rec;
}

std::vector<fs::path> list_waveforms(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension();
        if (ext == ".csv" || ext == ".bin") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void save_features(const fs::path& file, const std::vector<FeatureVector>& rows) {
    std::ostringstream os;
    os << "case_id,zone";
    for (int i = 1; i <= kFeatureLength; ++i)
        os << ",f" << std::setw(3) << std::setfill('0') << i;
    os << std::setfill(' ') << "\n";
    os << std::setprecision(17);
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
    for (const auto& r : sorted) {
        if (r.values.size() != kFeatureLength) throw DataError("bad feature vector length");
        os << r.case_id << ',' << r.zone;
        for (int i = 0; i < kFeatureLength; ++i) os << ',' << r.values[i];
        os << "\n";
    }
    write_text(file, os.str());
}

std::vector<FeatureVector> load_features(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("case_id,zone", 0) != 0)
        throw DataError("bad feature file header in " + file.string());
    std::vector<FeatureVector> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        FeatureVector fv;
        fv.values.resize(kFeatureLength);
        std::istringstream ls(line);
        std::string tok;
        if (!std::getline(ls, tok, ',')) throw DataError("bad feature row");
        fv.case_id = std::stoll(tok);
        if (!std::getline(ls, tok, ',')) throw DataError("bad feature row");
        fv.zone = std::stoi(tok);
        for (int i = 0; i < kFeatureLength; ++i) {
            if (!std::getline(ls, tok, ','))
                throw DataError("feature row with wrong column count");
            fv.values[i] = std::stod(tok);
        }
        rows.push_back(std::move(fv));
    }
    return rows;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.size();
    const auto cols = rows ? j.at(0).size() : 0;
    Eigen::MatrixXd m(rows, cols);
    for (size_t i = 0; i < rows; ++i)
        for (size_t k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
    return m;
}

json binary_model_to_json(const BinarySvmModel& m) {
    return json{{"kernel", m.kernel.type == KernelType::Rbf ? "rbf" : "linear"},
                {"g", m.kernel.g},
                {"c", m.c},
                {"bias", m.bias},
                {"coefficients", std::vector<double>(m.coefficients.begin(), m.coefficients.end())},
                {"support_vectors", matrix_to_json(m.support_vectors)}};
}

BinarySvmModel binary_model_from_json(const json& j) {
    BinarySvmModel m;
    m.kernel.type = j.at("kernel") == "rbf" ? KernelType::Rbf : KernelType::Linear;
    m.kernel.g = j.at("g");
    m.c = j.at("c");
    m.bias = j.at("bias");
    const auto coeff = j.at("coefficients").get<std::vector<double>>();
    m.coefficients = Eigen::Map<const Eigen::VectorXd>(coeff.data(), coeff.size());
    m.support_vectors = matrix_from_json(j.at("support_vectors"));
    return m;
}

} // namespace

void save_model(const fs::path& file, const ModelFile& m) {
    json j;
    j["strategy"] = m.clf.strategy == Strategy::OAA ? "oaa" : "oao";
    j["c"] = m.clf.c;
    j["g"] = m.clf.g;
    if (m.clf.strategy == Strategy::OAO) j["voting_table"] = m.clf.table.name;
    j["scenario"] = m.scenario;
    j["split"] = m.split;
    j["training_ids"] = m.training_ids;
    j["models"] = json::array();
    for (const auto& bm : m.clf.models) j["models"].push_back(binary_model_to_json(bm));
    write_text(file, j.dump(2) + "\n");
}

ModelFile load_model(const fs::path& file) {
    const json j = read_json(file);
    ModelFile m;
    try {
        m.clf.strategy = j.at("strategy") == "oaa" ? Strategy::OAA : Strategy::OAO;
        m.clf.c = j.at("c");
        m.clf.g = j.at("g");
        if (m.clf.strategy == Strategy::OAO)
            m.clf.table = voting_table(j.at("voting_table"));
        m.scenario = j.at("scenario");
        m.split = j.at("split");
        m.training_ids = j.at("training_ids").get<std::vector<std::int64_t>>();
        for (const auto& bm : j.at("models")) m.clf.models.push_back(binary_model_from_json(bm));
    } catch (const json::exception& e) {
        throw DataError("bad model file " + file.string() + ": " + e.what());
    }
    if (m.clf.models.size() != 3) throw DataError("model file must hold three binary models");
    return m;
}

void save_manifest(const fs::path& file, const RunManifest& m) {
    json j{{"scenario", m.scenario},
           {"seed", m.seed},
           {"subsample_fraction", m.subsample_fraction},
           {"sim_digest", m.sim_digest},
           {"split", m.split},
           {"grid_c", m.grid_c},
           {"grid_g", m.grid_g},
           {"tool_version", m.tool_version}};
    write_text(file, j.dump(2) + "\n");
}

RunManifest load_manifest(const fs::path& file) {
    const json j = read_json(file);
    RunManifest m;
    try {
        m.scenario = j.at("scenario");
        m.seed = j.at("seed");
        m.subsample_fraction = j.at("subsample_fraction");
        m.sim_digest = j.at("sim_digest");
        m.split = j.at("split");
        m.grid_c = j.at("grid_c").get<std::vector<double>>();
        m.grid_g = j.at("grid_g").get<std::vector<double>>();
        m.tool_version = j.at("tool_version");
    } catch (const json::exception& e) {
        throw DataError("bad manifest " + file.string() + ": " + e.what());
    }
    return m;
}

} // namespace relaylab

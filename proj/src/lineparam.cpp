#include "relaylab/lineparam.hpp"

#include "relaylab/errors.hpp"

#include <cmath>

namespace relaylab {

using std::complex;

void TowerGeometry::validate() const {
    if (conductors.size() != 3)
        throw ConfigError("geometry needs exactly three phase conductors");
    for (const auto& c : conductors) {
        if (c.y <= 0) throw ConfigError("conductor height must be positive");
        if (!(c.gmr > 0 && c.gmr <= c.radius))
            throw ConfigError("conductor must satisfy 0 < gmr <= radius");
        if (c.r_dc <= 0) throw ConfigError("conductor resistance must be positive");
    }
    for (const auto& g : ground_wires) {
        if (g.y <= 0) throw ConfigError("ground wire height must be positive");
        if (g.radius <= 0) throw ConfigError("ground wire radius must be positive");
    }
    if (bundle.n < 1) throw ConfigError("bundle count must be >= 1");
    if (bundle.n > 1 && bundle.spacing <= 0)
        throw ConfigError("bundle spacing must be positive for n > 1");
    if (sag < 0) throw ConfigError("sag must be non-negative");
    if (earth_resistivity <= 0) throw ConfigError("earth resistivity must be positive");
    for (const auto& c : conductors)
        if (effective_height(c.y, sag) <= 0)
            throw ConfigError("effective conductor height not positive");
}

double effective_height(double attachment_height, double sag) {
    const double h = attachment_height - (2.0 / 3.0) * sag;
    if (h <= 0) throw ConfigError("effective height not positive (sag too large)");
    return h;
}

BundleEquivalent bundle_reduce(double gmr, double radius, double spacing, int n) {
    switch (n) {
        case 1:
            return {gmr, radius};
        case 2:
            return {std::sqrt(gmr * spacing), std::sqrt(radius * spacing)};
        case 3:
            return {std::cbrt(gmr * spacing * spacing), std::cbrt(radius * spacing * spacing)};
        case 4: {
            // square bundle, diagonal spacing sqrt(2)*s
            const double s3 = spacing * spacing * spacing * std::sqrt(2.0);
            return {std::pow(gmr * s3, 0.25), std::pow(radius * s3, 0.25)};
        }
        default:
            throw ConfigError("unsupported bundle count " + std::to_string(n));
    }
}

namespace {

struct Wire {
    double x, h;      // position and effective height, m
    double gmr_eq;    // m
    double radius_eq; // m
    double r_dc;      // ohm/km
};

std::vector<Wire> flatten(const TowerGeometry& g) {
    g.validate();
    std::vector<Wire> wires;
    for (const auto& c : g.conductors) {
        const auto eq = bundle_reduce(c.gmr, c.radius, g.bundle.spacing, g.bundle.n);
        wires.push_back({c.x, effective_height(c.y, g.sag), eq.gmr_eq, eq.radius_eq,
                         c.r_dc / g.bundle.n});
    }
    for (const auto& w : g.ground_wires) {
        // GMR of a solid ground wire from its radius
        wires.push_back({w.x, effective_height(w.y, g.sag), 0.7788 * w.radius, w.radius,
                         w.r_dc});
    }
    return wires;
}

} // namespace

Eigen::MatrixXcd series_impedance_matrix(const TowerGeometry& geometry, double f) {
    if (f <= 0) throw ConfigError("frequency must be positive");
    const auto wires = flatten(geometry);
    const int n = static_cast<int>(wires.size());
    const double omega = 2.0 * kPi * f;
    // complex earth-return depth, m
    const complex<double> p =
        std::sqrt(geometry.earth_resistivity / (complex<double>(0.0, 1.0) * omega * kMu0));
    const complex<double> jk(0.0, omega * kMu0 / (2.0 * kPi) * 1000.0); // ohm/km per unit log

    Eigen::MatrixXcd z(n, n);
    for (int i = 0; i < n; ++i) {
        z(i, i) = wires[i].r_dc + jk * std::log(2.0 * (wires[i].h + p) / wires[i].gmr_eq);
        for (int j = i + 1; j < n; ++j) {
            const double dx = wires[i].x - wires[j].x;
            const double dij = std::hypot(dx, wires[i].h - wires[j].h);
            if (dij <= 0) throw ConfigError("coincident conductors");
            const complex<double> hs = wires[i].h + wires[j].h + 2.0 * p;
            const complex<double> dimg = std::sqrt(dx * dx + hs * hs);
            z(i, j) = jk * std::log(dimg / dij);
            z(j, i) = z(i, j);
        }
    }
    return z;
}

Eigen::MatrixXd shunt_capacitance_matrix(const TowerGeometry& geometry) {
    const auto wires = flatten(geometry);
    const int n = static_cast<int>(wires.size());
    // Maxwell potential coefficients, perfect earth images
    Eigen::MatrixXd pm(n, n);
    const double k = 1.0 / (2.0 * kPi * kEps0);
    for (int i = 0; i < n; ++i) {
        pm(i, i) = k * std::log(2.0 * wires[i].h / wires[i].radius_eq);
        for (int j = i + 1; j < n; ++j) {
            const double dx = wires[i].x - wires[j].x;
            const double dij = std::hypot(dx, wires[i].h - wires[j].h);
            const double dimg = std::hypot(dx, wires[i].h + wires[j].h);
            if (dij <= 0) throw ConfigError("coincident conductors");
            pm(i, j) = k * std::log(dimg / dij);
            pm(j, i) = pm(i, j);
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(pm);
    if (!lu.isInvertible()) throw NumericError("singular potential coefficient matrix");
    return lu.inverse() * 1000.0; // F/m -> F/km
}

namespace {

template <typename Mat>
Mat kron_reduce_impl(const Mat& m, const std::vector<int>& eliminate) {
    const int n = static_cast<int>(m.rows());
    std::vector<bool> drop(n, false);
    for (int e : eliminate) {
        if (e < 0 || e >= n) throw DataError("kron_reduce: index out of range");
        drop[e] = true;
    }
    std::vector<int> keep;
    std::vector<int> gone;
    for (int i = 0; i < n; ++i) (drop[i] ? gone : keep).push_back(i);
    if (gone.empty()) return m;

    Mat maa(keep.size(), keep.size()), mbb(gone.size(), gone.size());
    Mat mab(keep.size(), gone.size()), mba(gone.size(), keep.size());
    for (size_t i = 0; i < keep.size(); ++i)
        for (size_t j = 0; j < keep.size(); ++j) maa(i, j) = m(keep[i], keep[j]);
    for (size_t i = 0; i < gone.size(); ++i)
        for (size_t j = 0; j < gone.size(); ++j) mbb(i, j) = m(gone[i], gone[j]);
    for (size_t i = 0; i < keep.size(); ++i)
        for (size_t j = 0; j < gone.size(); ++j) mab(i, j) = m(keep[i], gone[j]);
    for (size_t i = 0; i < gone.size(); ++i)
        for (size_t j = 0; j < keep.size(); ++j) mba(i, j) = m(gone[i], keep[j]);

    Eigen::FullPivLU<Mat> lu(mbb);
    if (!lu.isInvertible()) throw NumericError("kron_reduce: singular eliminated block");
    return maa - mab * lu.solve(mba);
}

} // namespace

Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& m, const std::vector<int>& eliminate) {
    return kron_reduce_impl(m, eliminate);
}

Eigen::MatrixXd kron_reduce(const Eigen::MatrixXd& m, const std::vector<int>& eliminate) {
    return kron_reduce_impl(m, eliminate);
}

SequencePair sequence_components(const Eigen::Matrix3cd& z) {
    const complex<double> zs = z.diagonal().mean();
    const complex<double> zm =
        (z(0, 1) + z(0, 2) + z(1, 0) + z(1, 2) + z(2, 0) + z(2, 1)) / 6.0;
    return {zs - zm, zs + 2.0 * zm};
}

LineParameters line_parameters(const TowerGeometry& geometry, double f) {
    const int ng = static_cast<int>(geometry.ground_wires.size());
    std::vector<int> gw_rows;
    for (int i = 0; i < ng; ++i) gw_rows.push_back(3 + i);

    const Eigen::MatrixXcd zfull = series_impedance_matrix(geometry, f);
    const Eigen::Matrix3cd z = kron_reduce(zfull, gw_rows);

    // Grounded wires: Kron-reduce the potential matrix, then invert.
    // shunt_capacitance_matrix returns inv(P), so recover P first.
    const Eigen::MatrixXd cfull = shunt_capacitance_matrix(geometry);
    Eigen::MatrixXd pfull = (cfull / 1000.0).fullPivLu().inverse();
    const Eigen::Matrix3d c =
        Eigen::MatrixXd(kron_reduce(pfull, gw_rows).fullPivLu().inverse() * 1000.0);

    LineParameters lp;
    lp.z_series = z;
    lp.c_shunt = c;
    lp.frequency = f;
    const auto seq = sequence_components(z);
    lp.z1 = seq.z1;
    lp.z0 = seq.z0;
    return lp;
}

TowerGeometry default_400kv_geometry() {
    TowerGeometry g;
    const double gmr = 0.012161;
    const double radius = gmr / 0.7788; // stranded-conductor estimate
    const double r_dc = 0.0553;
    const double h = 41.46;
    const double dx = 15.45;
    g.conductors = {{-dx, h, gmr, radius, r_dc},
                    {0.0, h, gmr, radius, r_dc},
                    {dx, h, gmr, radius, r_dc}};
    g.bundle = {2, 0.45};
    const double hg = h + 9.36;
    g.ground_wires = {{-9.35, hg, 0.002445, 1.463}, {9.35, hg, 0.002445, 1.463}};
    g.sag = 14.0;
    g.earth_resistivity = 100.0;
    return g;
}

} // namespace relaylab

#include <doctest.h>

#include "relaylab/errors.hpp"
#include "relaylab/lineparam.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace relaylab;
using std::complex;

namespace {

// Earth-return correction as Carson's integral, evaluated by quadrature:
//   dZ = (j w mu0 / pi) * int_0^inf exp(-H u) cos(x u) / (u + sqrt(u^2 + j m^2)) du
// with H = h_i + h_j, m^2 = w mu0 / rho. Independent of the complex-depth
// closed form used by the implementation.
complex<double> carson_correction(double h_sum, double dx, double f, double rho) {
    const double omega = 2.0 * kPi * f;
    const complex<double> jm2(0.0, omega * kMu0 / rho);
    auto integrand = [&](double u) -> complex<double> {
        return std::exp(-h_sum * u) * std::cos(dx * u) / (u + std::sqrt(u * u + jm2));
    };
    // composite Simpson on [0, L]; the exp(-H u) factor kills the tail
    const double span = 60.0 / h_sum;
    const int steps = 400000;  // even
    const double du = span / steps;
    complex<double> acc = integrand(0.0) + integrand(span);
    for (int k = 1; k < steps; ++k) acc += integrand(k * du) * (k % 2 ? 4.0 : 2.0);
    acc *= du / 3.0;
    return complex<double>(0.0, omega * kMu0 / kPi) * acc;
}

TowerGeometry bare_geometry() {
    TowerGeometry g;
    g.conductors = {{-10.0, 20.0, 0.008, 0.01, 0.06},
                    {0.0, 24.0, 0.008, 0.01, 0.06},
                    {10.0, 20.0, 0.008, 0.01, 0.06}};
    g.bundle = {1, 0.0};
    g.sag = 3.0;
    g.earth_resistivity = 100.0;
    return g;
}

} // namespace

TEST_CASE("effective height subtracts two thirds of the sag") {
    CHECK(effective_height(30.0, 9.0) == doctest::Approx(24.0));
    CHECK(effective_height(10.0, 0.0) == doctest::Approx(10.0));
    CHECK_THROWS_AS(effective_height(2.0, 9.0), ConfigError);
}

TEST_CASE("bundle reduction") {
    const auto one = bundle_reduce(0.01, 0.012, 0.4, 1);
    CHECK(one.gmr_eq == doctest::Approx(0.01));
    CHECK(one.radius_eq == doctest::Approx(0.012));

    const auto two = bundle_reduce(0.01, 0.012, 0.4, 2);
    CHECK(two.gmr_eq == doctest::Approx(std::sqrt(0.01 * 0.4)));
    CHECK(two.radius_eq == doctest::Approx(std::sqrt(0.012 * 0.4)));

    // equivalent radius grows with bundle size
    double prev = one.gmr_eq;
    for (int n = 2; n <= 4; ++n) {
        const auto b = bundle_reduce(0.01, 0.012, 0.4, n);
        CHECK(b.gmr_eq > prev);
        prev = b.gmr_eq;
    }
    CHECK_THROWS_AS(bundle_reduce(0.01, 0.012, 0.4, 5), ConfigError);
}

TEST_CASE("series impedance matches the Carson integral oracle") {
    const TowerGeometry g = bare_geometry();
    const double f = 50.0;
    const auto z = series_impedance_matrix(g, f);
    REQUIRE(z.rows() == 3);

    const double omega = 2.0 * kPi * f;
    const complex<double> jk(0.0, omega * kMu0 / (2.0 * kPi) * 1000.0);

    for (int i = 0; i < 3; ++i) {
        const double hi = effective_height(g.conductors[i].y, g.sag);
        for (int j = i; j < 3; ++j) {
            const double hj = effective_height(g.conductors[j].y, g.sag);
            const double dx = g.conductors[i].x - g.conductors[j].x;
            complex<double> oracle;
            if (i == j) {
                oracle = g.conductors[i].r_dc + jk * std::log(2.0 * hi / g.conductors[i].gmr);
            } else {
                const double dij = std::hypot(dx, hi - hj);
                const double dimg = std::hypot(dx, hi + hj);
                oracle = jk * std::log(dimg / dij);
            }
            oracle += 1000.0 * carson_correction(hi + hj, dx, f, g.earth_resistivity);
            const double rel = std::abs(z(i, j) - oracle) / std::abs(oracle);
            CAPTURE(i);
            CAPTURE(j);
            // the complex-image closed form is tighter for self terms than for
            // widely separated mutual terms
            CHECK(rel < (i == j ? 0.015 : 0.03));
        }
    }
}

TEST_CASE("series impedance perfect-earth limit") {
    TowerGeometry g = bare_geometry();
    g.earth_resistivity = 1e-10;  // p -> 0
    const double f = 50.0;
    const auto z = series_impedance_matrix(g, f);
    const complex<double> jk(0.0, 2.0 * kPi * f * kMu0 / (2.0 * kPi) * 1000.0);

    const double h0 = effective_height(g.conductors[0].y, g.sag);
    const complex<double> self = g.conductors[0].r_dc + jk * std::log(2.0 * h0 / g.conductors[0].gmr);
    CHECK(std::abs(z(0, 0) - self) < 1e-4 * std::abs(self));

    const double h1 = effective_height(g.conductors[1].y, g.sag);
    const double dx = g.conductors[0].x - g.conductors[1].x;
    const complex<double> mut =
        jk * std::log(std::hypot(dx, h0 + h1) / std::hypot(dx, h0 - h1));
    CHECK(std::abs(z(0, 1) - mut) < 1e-4 * std::abs(mut));
}

TEST_CASE("isolated conductor capacitance matches the textbook formula") {
    TowerGeometry g;
    // conductors so far apart that mutual terms are negligible
    g.conductors = {{0.0, 15.0, 0.009, 0.011, 0.06},
                    {5e4, 15.0, 0.009, 0.011, 0.06},
                    {1e5, 15.0, 0.009, 0.011, 0.06}};
    g.bundle = {1, 0.0};
    g.sag = 0.0;
    const auto c = shunt_capacitance_matrix(g);
    const double oracle = 2.0 * kPi * kEps0 / std::log(2.0 * 15.0 / 0.011) * 1000.0;
    for (int i = 0; i < 3; ++i)
        CHECK(c(i, i) == doctest::Approx(oracle).epsilon(5e-3));
    CHECK(std::abs(c(0, 2)) < 0.05 * std::abs(c(0, 0)));
}

TEST_CASE("kron reduction preserves port behaviour") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5, nk = 3;
        Eigen::MatrixXcd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = complex<double>(dist(rng), dist(rng));
        m += 6.0 * Eigen::MatrixXcd::Identity(n, n);  // keep blocks invertible

        const auto red = kron_reduce(m, {3, 4});
        REQUIRE(red.rows() == nk);

        // inject currents on the kept ports, eliminated ports held at V = 0
        Eigen::VectorXcd ia(nk);
        for (int i = 0; i < nk; ++i) ia(i) = complex<double>(dist(rng), dist(rng));
        const Eigen::MatrixXcd mbb = m.block(nk, nk, n - nk, n - nk);
        const Eigen::VectorXcd ib = -mbb.fullPivLu().solve(m.block(nk, 0, n - nk, nk) * ia);
        Eigen::VectorXcd full(n);
        full << ia, ib;
        const Eigen::VectorXcd va = (m * full).head(nk);
        CHECK((red * ia - va).norm() <= 1e-10 * va.norm());
    }
}

TEST_CASE("sequence components of a balanced matrix") {
    Eigen::Matrix3cd z;
    const complex<double> zs(2.0, 3.0), zm(1.0, 1.0);
    z << zs, zm, zm, zm, zs, zm, zm, zm, zs;
    const auto seq = sequence_components(z);
    CHECK(seq.z1.real() == doctest::Approx(1.0));
    CHECK(seq.z1.imag() == doctest::Approx(2.0));
    CHECK(seq.z0.real() == doctest::Approx(4.0));
    CHECK(seq.z0.imag() == doctest::Approx(5.0));
}

TEST_CASE("default 400 kV line parameters are physically sensible") {
    const auto lp = line_parameters(default_400kv_geometry(), 50.0);
    CHECK(lp.z1.real() > 0.015);
    CHECK(lp.z1.real() < 0.05);
    CHECK(lp.z1.imag() > 0.30);
    CHECK(lp.z1.imag() < 0.40);
    CHECK(lp.z0.imag() / lp.z1.imag() > 2.0);
    CHECK(lp.z0.imag() / lp.z1.imag() < 3.5);
    CHECK(lp.z0.real() > lp.z1.real());

    // positive-sequence capacitance in the usual overhead-line range
    const double cs = lp.c_shunt.diagonal().mean();
    const double cm = (lp.c_shunt.sum() - lp.c_shunt.diagonal().sum()) / 6.0;
    const double c1 = cs - cm;
    CHECK(c1 > 8e-9);
    CHECK(c1 < 16e-9);
    CHECK(cm < 0.0);  // Maxwell off-diagonals are negative

    // ground-wire elimination consistent with a direct Kron reduction
    const auto zfull = series_impedance_matrix(default_400kv_geometry(), 50.0);
    REQUIRE(zfull.rows() == 5);
    const auto zred = kron_reduce(zfull, {3, 4});
    CHECK((lp.z_series - zred).norm() < 1e-12 * zred.norm());
}

TEST_CASE("geometry validation rejects bad input") {
    TowerGeometry g = default_400kv_geometry();
    g.conductors.pop_back();
    CHECK_THROWS_AS(g.validate(), ConfigError);

    g = default_400kv_geometry();
    g.conductors[0].gmr = g.conductors[0].radius * 1.5;
    CHECK_THROWS_AS(g.validate(), ConfigError);

    g = default_400kv_geometry();
    g.bundle.spacing = 0.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);

    g = default_400kv_geometry();
    g.earth_resistivity = 0.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
}

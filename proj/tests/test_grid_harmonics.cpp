#include <doctest.h>

#include <cmath>
#include <numbers>

#include "osg/errors.hpp"
#include "osg/grid.hpp"
#include "osg/harmonics.hpp"

using namespace osg;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("flat harmonic ordering is q^2 + q + m") {
    CHECK(HarmonicIndex{0, 0}.flat() == 0);
    CHECK(HarmonicIndex{1, -1}.flat() == 1);
    CHECK(HarmonicIndex{1, 0}.flat() == 2);
    CHECK(HarmonicIndex{1, 1}.flat() == 3);
    CHECK(HarmonicIndex{2, -2}.flat() == 4);
    for (int k = 0; k < 100; ++k) {
        const HarmonicIndex idx = HarmonicIndex::from_flat(k);
        CHECK(idx.flat() == k);
        CHECK(std::abs(idx.order) <= idx.degree);
    }
}

TEST_CASE("global quadrature weights sum to the sphere area") {
    for (double spacing : {1.0, 2.0}) {
        const RegionGrid grid = make_global_grid(spacing);
        const double total = grid.weights.sum();
        CHECK(total == doctest::Approx(4.0 * kPi).epsilon(0.01));
    }
}

TEST_CASE("single equator row has weight cos(0) * (pi/180)^2") {
    Eigen::VectorXd lats(1), lons(4);
    lats << 0.0;
    lons << 0.0, 1.0, 2.0, 3.0;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(1, 4);
    mask.setConstant(true);
    const RegionGrid grid = make_region_grid(lats, lons, mask);
    const double expected = (kPi / 180.0) * (kPi / 180.0);
    for (Eigen::Index j = 0; j < 4; ++j) {
        CHECK(grid.weights(0, j) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("hemisphere mask covers half the sphere at 0.5 degrees") {
    RegionGrid grid = make_global_grid(0.5);
    for (Eigen::Index i = 0; i < grid.lat_count(); ++i) {
        grid.mask.row(i).setConstant(grid.latitudes[i] > 0.0);
    }
    CHECK(grid.masked_weights().sum() == doctest::Approx(2.0 * kPi).epsilon(0.01));
}

TEST_CASE("non-uniform spacing is rejected") {
    Eigen::VectorXd lats(3), lons(3);
    lats << 0.0, 1.0, 3.0;
    lons << 0.0, 1.0, 2.0;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(3, 3);
    mask.setConstant(true);
    CHECK_THROWS_WITH_AS(make_region_grid(lats, lons, mask),
                         doctest::Contains("non-uniform"), Error);
}

TEST_CASE("empty mask is rejected") {
    Eigen::VectorXd lats(2), lons(2);
    lats << 0.0, 1.0;
    lons << 0.0, 1.0;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(2, 2);
    mask.setConstant(false);
    CHECK_THROWS_AS(make_region_grid(lats, lons, mask), Error);
}

TEST_CASE("constant harmonic equals 1/sqrt(4pi) everywhere") {
    const RegionGrid grid = make_global_grid(10.0);
    const Eigen::MatrixXd H = harmonic_matrix(grid, 3);
    for (Eigen::Index c = 0; c < H.rows(); ++c) {
        CHECK(H(c, 0) == doctest::Approx(0.2820947917738781).epsilon(1e-12));
    }
}

TEST_CASE("degree-1 zonal harmonic matches its closed form") {
    // h_1^0 = sqrt(3/4pi) cos(theta)
    const double at_pole = harmonic_row(0.0, 0.0, 2)[HarmonicIndex{1, 0}.flat()];
    CHECK(at_pole == doctest::Approx(0.4886025119029199).epsilon(1e-12));
    for (double theta : {0.3, 1.0, 2.2}) {
        const double value = harmonic_row(theta, 0.7, 2)[HarmonicIndex{1, 0}.flat()];
        CHECK(value == doctest::Approx(0.4886025119029199 * std::cos(theta)).epsilon(1e-12));
    }
}

TEST_CASE("discrete orthonormality on a global 2-degree grid at Q=8") {
    const RegionGrid grid = make_global_grid(2.0);
    const Eigen::MatrixXd H = harmonic_matrix(grid, 8);
    Eigen::VectorXd w(grid.cell_count());
    for (Eigen::Index i = 0; i < grid.lat_count(); ++i) {
        for (Eigen::Index j = 0; j < grid.lon_count(); ++j) {
            w[i * grid.lon_count() + j] = grid.weights(i, j);
        }
    }
    const Eigen::MatrixXd gram = H.transpose() * w.asDiagonal() * H;
    double max_off = 0.0, max_diag_err = 0.0;
    for (Eigen::Index a = 0; a < gram.rows(); ++a) {
        for (Eigen::Index b = 0; b < gram.cols(); ++b) {
            if (a == b) {
                max_diag_err = std::max(max_diag_err, std::abs(gram(a, b) - 1.0));
            } else {
                max_off = std::max(max_off, std::abs(gram(a, b)));
            }
        }
    }
    CHECK(max_off < 1e-3);
    CHECK(max_diag_err < 1e-3);
}

TEST_CASE("orthonormality error shrinks with grid spacing") {
    double previous = 1e9;
    for (double spacing : {4.0, 2.0, 1.0}) {
        const RegionGrid grid = make_global_grid(spacing);
        const Eigen::MatrixXd H = harmonic_matrix(grid, 6);
        Eigen::VectorXd w(grid.cell_count());
        for (Eigen::Index i = 0; i < grid.lat_count(); ++i) {
            for (Eigen::Index j = 0; j < grid.lon_count(); ++j) {
                w[i * grid.lon_count() + j] = grid.weights(i, j);
            }
        }
        const Eigen::MatrixXd gram = H.transpose() * w.asDiagonal() * H;
        const double err = (gram - Eigen::MatrixXd::Identity(36, 36)).cwiseAbs().maxCoeff();
        CHECK(err < previous);
        previous = err;
    }
}

TEST_CASE("parity h(pi - theta) = (-1)^{q+m} h(theta)") {
    const int Q = 9;
    for (double theta : {0.4, 1.1, 1.5}) {
        for (double psi : {0.0, 0.9, 4.0}) {
            const Eigen::VectorXd a = harmonic_row(theta, psi, Q);
            const Eigen::VectorXd b = harmonic_row(kPi - theta, psi, Q);
            for (int k = 0; k < Q * Q; ++k) {
                const HarmonicIndex idx = HarmonicIndex::from_flat(k);
                const double sign = ((idx.degree + idx.order) % 2 == 0) ? 1.0 : -1.0;
                CHECK(b[k] == doctest::Approx(sign * a[k]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("recurrence is stable and bounded to degree 200") {
    // Pointwise bound from the addition theorem: |h_q^m| <= sqrt((2q+1)/4pi).
    const int Q = 201;
    for (double theta : {0.05, 0.7, 1.5707963, 2.4, 3.0}) {
        const Eigen::VectorXd row = harmonic_row(theta, 1.3, Q);
        REQUIRE(row.allFinite());
        for (int q = 0; q < Q; ++q) {
            const double bound = std::sqrt((2.0 * q + 1.0) / (4.0 * kPi)) * (1.0 + 1e-9);
            for (int m = -q; m <= q; ++m) {
                CHECK(std::abs(row[q * q + q + m]) <= bound);
            }
        }
    }
}

TEST_CASE("band limit capacity cap") {
    const RegionGrid grid = make_global_grid(30.0);
    CHECK_THROWS_WITH_AS(harmonic_matrix(grid, 501), doctest::Contains("cap"), Error);
    CHECK_THROWS_AS(harmonic_matrix(grid, 0), Error);
}

TEST_CASE("fingerprint tracks mask and grid changes") {
    const RegionGrid a = make_polar_cap_grid(10.0, 60.0);
    const RegionGrid b = make_polar_cap_grid(10.0, 50.0);
    const RegionGrid c = make_polar_cap_grid(10.0, 60.0);
    CHECK(grid_fingerprint(a) != grid_fingerprint(b));
    CHECK(grid_fingerprint(a) == grid_fingerprint(c));
}

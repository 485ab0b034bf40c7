#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "osg/errors.hpp"
#include "osg/grid.hpp"
#include "osg/harmonics.hpp"
#include "osg/pipeline.hpp"
#include "osg/rng.hpp"
#include "osg/slepian.hpp"

using namespace osg;

namespace {

constexpr double kPi = std::numbers::pi;

// Cap concentration spectrum by per-order 1D quadrature: for a polar cap the
// matrix block-diagonalizes by harmonic order m, with
//   C^(m)_{qq'} = 2 pi * int_0^thetamax Pbar_q^m Pbar_q'^m sin(theta) dtheta,
// each m > 0 block contributing twice (cos and sin branches). Simpson rule
// over a dense theta grid; Pbar read off harmonic_row at psi = 0.
Eigen::VectorXd cap_spectrum_oracle(int band_limit, double cap_radius_deg) {
    const double theta_max = cap_radius_deg * kPi / 180.0;
    const int samples = 4001;  // odd, for Simpson
    const double step = theta_max / (samples - 1);

    Eigen::MatrixXd pbar(samples, band_limit * band_limit);  // (i, q*Q + m)
    Eigen::VectorXd sin_theta(samples);
    for (int i = 0; i < samples; ++i) {
        const double theta = i * step;
        sin_theta[i] = std::sin(theta);
        const Eigen::VectorXd row = harmonic_row(theta, 0.0, band_limit);
        for (int q = 0; q < band_limit; ++q) {
            pbar(i, q * band_limit) = row[q * q + q];
            for (int m = 1; m <= q; ++m) {
                pbar(i, q * band_limit + m) = row[q * q + q + m] / std::numbers::sqrt2;
            }
        }
    }
    auto simpson = [&](const Eigen::VectorXd& f) {
        double acc = f[0] + f[samples - 1];
        for (int i = 1; i < samples - 1; ++i) acc += f[i] * (i % 2 == 1 ? 4.0 : 2.0);
        return acc * step / 3.0;
    };

    std::vector<double> eigenvalues;
    for (int m = 0; m < band_limit; ++m) {
        const int dim = band_limit - m;
        Eigen::MatrixXd block(dim, dim);
        for (int q = m; q < band_limit; ++q) {
            for (int qp = q; qp < band_limit; ++qp) {
                const Eigen::VectorXd integrand =
                    pbar.col(q * band_limit + m).array() * pbar.col(qp * band_limit + m).array() *
                    sin_theta.array();
                const double value = 2.0 * kPi * simpson(integrand);
                block(q - m, qp - m) = value;
                block(qp - m, q - m) = value;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
        for (int i = 0; i < dim; ++i) {
            eigenvalues.push_back(solver.eigenvalues()[i]);
            if (m > 0) eigenvalues.push_back(solver.eigenvalues()[i]);
        }
    }
    std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
    return Eigen::Map<Eigen::VectorXd>(eigenvalues.data(),
                                       static_cast<Eigen::Index>(eigenvalues.size()));
}

}  // namespace

TEST_CASE("full-sphere concentration matrix is the identity") {
    const RegionGrid grid = make_global_grid(2.0);
    const ConcentrationMatrix conc = build_concentration_matrix(grid, 6);
    const Eigen::MatrixXd diff = conc.matrix - Eigen::MatrixXd::Identity(36, 36);
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-3);

    const SlepianBasis basis = solve_concentration(conc, grid);
    CHECK(basis.eigenvalues.minCoeff() > 1.0 - 1e-3);
    CHECK(select_basis_count(basis.eigenvalues) == 36);
}

TEST_CASE("trace equals area fraction times Q^2") {
    const RegionGrid grid = make_polar_cap_grid(2.0, 60.0);
    const ConcentrationMatrix conc = build_concentration_matrix(grid, 10);
    const double f = grid.area_fraction();
    CHECK(conc.matrix.trace() == doctest::Approx(f * 100.0).epsilon(1e-10));
    CHECK(f == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("concentration is additive over mask and complement") {
    RegionGrid cap = make_polar_cap_grid(4.0, 60.0);
    RegionGrid complement = make_global_grid(4.0);
    complement.mask = !cap.mask;
    RegionGrid all = make_global_grid(4.0);

    const Eigen::MatrixXd c_cap = build_concentration_matrix(cap, 6).matrix;
    const Eigen::MatrixXd c_rest = build_concentration_matrix(complement, 6).matrix;
    const Eigen::MatrixXd c_all = build_concentration_matrix(all, 6).matrix;
    CHECK((c_cap + c_rest - c_all).cwiseAbs().maxCoeff() < 1e-12 * c_all.cwiseAbs().maxCoeff());
}

TEST_CASE("cap spectrum matches the 1D quadrature oracle") {
    const int Q = 12;
    const RegionGrid grid = make_polar_cap_grid(1.0, 60.0);
    const SlepianBasis basis = solve_concentration(build_concentration_matrix(grid, Q), grid);
    const Eigen::VectorXd oracle = cap_spectrum_oracle(Q, 60.0);

    REQUIRE(basis.eigenvalues.size() == oracle.size());
    for (Eigen::Index a = 0; a < oracle.size(); ++a) {
        CHECK(std::abs(basis.eigenvalues[a] - oracle[a]) < 0.02);
    }
    for (Eigen::Index a = 1; a < basis.eigenvalues.size(); ++a) {
        CHECK(basis.eigenvalues[a] <= basis.eigenvalues[a - 1] + 1e-12);
    }
    // Transition from ~1 to ~0 around the Shannon number.
    const int shannon = static_cast<int>(std::lround(basis.shannon));
    CHECK(std::abs(shannon - 36) <= 2);
    CHECK(basis.eigenvalues[shannon / 2] > 0.9);
    CHECK(basis.eigenvalues[2 * shannon] < 0.1);
}

TEST_CASE("eigenvalues bounded and eigenvectors orthonormal") {
    const RegionGrid grid = make_polar_cap_grid(2.0, 60.0);
    const SlepianBasis basis = solve_concentration(build_concentration_matrix(grid, 12), grid);
    CHECK(basis.eigenvalues.minCoeff() >= 0.0);
    CHECK(basis.eigenvalues.maxCoeff() <= 1.0);
    const Eigen::MatrixXd gtg = basis.spectral.transpose() * basis.spectral;
    CHECK((gtg - Eigen::MatrixXd::Identity(gtg.rows(), gtg.cols())).cwiseAbs().maxCoeff() < 1e-10);
    // Sign convention: first nonzero spectral coefficient positive.
    for (Eigen::Index a = 0; a < basis.count(); ++a) {
        for (Eigen::Index k = 0; k < basis.spectral.rows(); ++k) {
            if (std::abs(basis.spectral(k, a)) > 1e-12) {
                CHECK(basis.spectral(k, a) > 0.0);
                break;
            }
        }
    }
}

TEST_CASE("region orthogonality: masked Gram of samples is diag(lambda)") {
    const RegionGrid grid = make_polar_cap_grid(2.0, 60.0);
    const SlepianBasis basis = solve_concentration(build_concentration_matrix(grid, 12), grid);
    const Eigen::MatrixXd gram =
        basis.samples.transpose() * basis.masked_weights.asDiagonal() * basis.samples;
    const Eigen::MatrixXd expected = basis.eigenvalues.asDiagonal();
    CHECK((gram - expected).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("basis construction is deterministic") {
    const RegionGrid grid = make_polar_cap_grid(4.0, 50.0);
    const SlepianBasis a = solve_concentration(build_concentration_matrix(grid, 8), grid);
    const SlepianBasis b = solve_concentration(build_concentration_matrix(grid, 8), grid);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.spectral == b.spectral);
    CHECK(a.samples == b.samples);
}

TEST_CASE("shannon_number") {
    CHECK(shannon_number(1.0, 10) == doctest::Approx(100.0));
    CHECK(shannon_number(0.25, 20) == doctest::Approx(100.0));
    CHECK(std::abs(shannon_number(0.00586, 181) - 192.0) < 1.0);
    CHECK_THROWS_AS(shannon_number(0.0, 10), Error);
    CHECK_THROWS_AS(shannon_number(1.5, 10), Error);
}

TEST_CASE("select_basis_count") {
    Eigen::VectorXd lambda(4);
    lambda << 1.0, 0.9, 0.5, 0.009;
    CHECK(select_basis_count(lambda) == 3);
    CHECK(select_basis_count(Eigen::VectorXd::Ones(25)) == 25);
    Eigen::VectorXd tiny = Eigen::VectorXd::Constant(5, 1e-6);
    CHECK_THROWS_AS(select_basis_count(tiny), Error);
}

TEST_CASE("analysis and synthesis") {
    const RegionGrid grid = make_polar_cap_grid(6.0, 60.0);
    const SlepianBasis full = solve_concentration(build_concentration_matrix(grid, 6), grid);
    const SlepianBasis basis = truncate_basis(full, 8);
    const SlepianAnalyzer analyzer(basis);
    GaussianSampler rng(7);

    SUBCASE("noiseless round trip recovers coefficients") {
        const Eigen::MatrixXd s0 = rng.matrix(basis.count(), 12);
        const Eigen::MatrixXd z = synthesize(s0, basis);
        const AnalysisResult res = analyze(z, analyzer, 3, 4);
        CHECK((res.coefficients - s0).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(res.residual_variance.maxCoeff() < 1e-16);
    }

    SUBCASE("zero field gives zero coefficients and zero residual") {
        const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(basis.masked_count(), 8);
        const AnalysisResult res = analyze(z, analyzer, 2, 4);
        CHECK(res.coefficients.cwiseAbs().maxCoeff() == 0.0);
        CHECK(res.residual_variance.cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("white-noise residual variance is recovered") {
        const int R = 20, tau = 50;
        const Eigen::MatrixXd s0 = rng.matrix(basis.count(), R * tau);
        Eigen::MatrixXd z = synthesize(s0, basis);
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, c) += 0.1 * rng();
        }
        const AnalysisResult res = analyze(z, analyzer, R, tau);
        CHECK(res.residual_variance.mean() > 0.008);
        CHECK(res.residual_variance.mean() < 0.012);
    }

    SUBCASE("synthesis is linear and maps unit vectors to columns") {
        Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(basis.count(), 1);
        e1(0, 0) = 1.0;
        CHECK(synthesize(e1, basis) == basis.samples.col(0));
        const Eigen::MatrixXd s1 = rng.matrix(basis.count(), 5);
        const Eigen::MatrixXd s2 = rng.matrix(basis.count(), 5);
        const Eigen::MatrixXd lhs = synthesize(2.0 * s1 - 3.0 * s2, basis);
        const Eigen::MatrixXd rhs = 2.0 * synthesize(s1, basis) - 3.0 * synthesize(s2, basis);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * rhs.cwiseAbs().maxCoeff());
    }

    SUBCASE("reconstruction error is non-increasing in the basis count") {
        const Eigen::MatrixXd z = rng.matrix(basis.masked_count(), 6);
        double previous = std::numeric_limits<double>::infinity();
        for (int count : {2, 4, 6, 8}) {
            const SlepianBasis sub = truncate_basis(basis, count);
            const SlepianAnalyzer sub_analyzer(sub);
            const Eigen::MatrixXd coeff = sub_analyzer.coefficients(z);
            const double rmse = std::sqrt((z - synthesize(coeff, sub)).squaredNorm() /
                                          static_cast<double>(z.size()));
            CHECK(rmse <= previous + 1e-12);
            previous = rmse;
        }
    }
}

TEST_CASE("analysis rejects more basis columns than masked cells") {
    const RegionGrid grid = make_polar_cap_grid(30.0, 45.0);  // few masked cells
    const SlepianBasis basis = solve_concentration(build_concentration_matrix(grid, 6), grid);
    REQUIRE(basis.count() > basis.masked_count());
    CHECK_THROWS_WITH_AS(SlepianAnalyzer(basis), doctest::Contains("ill-posed"), Error);
}

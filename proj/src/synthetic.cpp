#include "osg/synthetic.hpp"

#include <cmath>
#include <string>

#include "osg/errors.hpp"
#include "osg/tukey.hpp"

namespace osg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

void validate_truth(const SyntheticTruth& truth) {
    const Eigen::Index d = 2 * truth.basis.count();
    if (truth.coeff.rows() != d * truth.order || truth.coeff.cols() != d) {
        throw config_error("truth Phi shape does not match (A, P)");
    }
    if (truth.innovation_cov.rows() != d || truth.innovation_cov.cols() != d) {
        throw config_error("truth K shape does not match 2A");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(truth.innovation_cov);
    if (eig.eigenvalues().minCoeff() < -1e-8 * truth.innovation_cov.norm()) {
        throw config_error("truth K is not positive semidefinite");
    }
    for (auto var : {0, 1}) {
        if (truth.omega[var].size() != truth.basis.count() ||
            truth.h[var].size() != truth.basis.count()) {
            throw config_error("truth omega/h size does not match A");
        }
        if ((truth.omega[var].array() <= 0.0).any()) throw config_error("truth omega must be positive");
        if ((truth.h[var].array() < 0.0).any() || (truth.h[var].array() > kTailCap).any()) {
            throw config_error("truth h must lie in [0, " + std::to_string(kTailCap) + "]");
        }
        if (truth.mean_cell[var].size() != truth.basis.masked_count() ||
            truth.resid_sd_cell[var].size() != truth.basis.masked_count()) {
            throw config_error("truth mean/sd size does not match the mask");
        }
        if ((truth.resid_sd_cell[var].array() < 0.0).any()) {
            throw config_error("truth residual sd must be nonnegative");
        }
    }
}

SyntheticTruth make_default_truth(const SlepianBasis& basis, int order, double h_tail) {
    if (order != 1 && order != 2) throw config_error("default truth supports order 1 or 2");
    const Eigen::Index count = basis.count();
    const Eigen::Index d = 2 * count;

    SyntheticTruth truth;
    truth.basis = basis;
    truth.order = order;
    truth.coeff = Eigen::MatrixXd::Zero(d * order, d);
    double innovation_var;
    if (order == 1) {
        truth.coeff.topRows(d) = 0.6 * Eigen::MatrixXd::Identity(d, d);
        innovation_var = 1.0 - 0.36;
    } else {
        // phi1 = 0.45, phi2 = 0.25: spectral radius 0.77, stationary variance
        // one when the innovation variance is 0.6.
        truth.coeff.topRows(d) = 0.45 * Eigen::MatrixXd::Identity(d, d);
        truth.coeff.bottomRows(d) = 0.25 * Eigen::MatrixXd::Identity(d, d);
        const double rho1 = 0.45 / (1.0 - 0.25);
        const double rho2 = 0.25 + 0.45 * rho1;
        innovation_var = 1.0 - 0.45 * rho1 - 0.25 * rho2;
    }
    truth.innovation_cov.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            truth.innovation_cov(i, j) = innovation_var * std::pow(0.3, std::abs(double(i - j)));
        }
    }
    for (auto var : {0, 1}) {
        truth.omega[var].resize(count);
        for (Eigen::Index a = 0; a < count; ++a) {
            truth.omega[var][a] = 0.5 + 1.5 * std::pow(0.9, static_cast<double>(a + var));
        }
        truth.h[var] = Eigen::VectorXd::Constant(count, h_tail);
        truth.mean_cell[var] =
            Eigen::VectorXd::Constant(basis.masked_count(), var == 0 ? 1.0 : -0.5);
        truth.resid_sd_cell[var] = Eigen::VectorXd::Constant(basis.masked_count(), 0.1);
    }
    validate_truth(truth);
    return truth;
}

SlepianBasis make_cap_basis(double spacing_deg, double cap_radius_deg, int band_limit, int count) {
    const RegionGrid grid = make_polar_cap_grid(spacing_deg, cap_radius_deg);
    const ConcentrationMatrix conc = build_concentration_matrix(grid, band_limit);
    const SlepianBasis full = solve_concentration(conc, grid);
    return truncate_basis(full, count);
}

SyntheticGenerator::SyntheticGenerator(SyntheticTruth truth, int ensembles, std::uint64_t seed)
    : truth_(std::move(truth)), ensembles_(ensembles) {
    validate_truth(truth_);
    if (ensembles_ < 2) throw config_error("synthetic generation needs R >= 2");
    factor_ = covariance_factor(truth_.innovation_cov);
    const Eigen::Index d = 2 * truth_.basis.count();
    for (int r = 0; r < ensembles_; ++r) {
        var_rng_.emplace_back(splitmix64(seed ^ splitmix64(2 * r)));
        noise_rng_.emplace_back(splitmix64(seed ^ splitmix64(2 * r + 1)));
        Eigen::MatrixXd h(d, truth_.order);
        for (int p = 0; p < truth_.order; ++p) h.col(p) = factor_ * var_rng_.back().vector(d);
        history_.push_back(std::move(h));
    }
}

EnsembleBlock SyntheticGenerator::next_block(int steps) {
    if (steps < 1) throw config_error("block length must be positive");
    const Eigen::Index count = truth_.basis.count();
    const Eigen::Index d = 2 * count;
    const Eigen::Index cells = truth_.basis.masked_count();
    const int order = truth_.order;

    EnsembleBlock block;
    block.ensembles = ensembles_;
    block.steps = steps;
    block.time_offset = offset_;
    block.fingerprint = truth_.basis.fingerprint;
    for (auto var : {0, 1}) block.values[var].resize(cells, static_cast<Eigen::Index>(ensembles_) * steps);

    Eigen::VectorXd lags(d * order);
    for (int r = 0; r < ensembles_; ++r) {
        Eigen::MatrixXd sim(d, steps);
        for (int t = 0; t < steps; ++t) {
            for (int p = 0; p < order; ++p) lags.segment(p * d, d) = history_[r].col(p);
            Eigen::VectorXd next = truth_.coeff.transpose() * lags + factor_ * var_rng_[r].vector(d);
            for (int p = order - 1; p > 0; --p) history_[r].col(p) = history_[r].col(p - 1);
            history_[r].col(0) = next;
            sim.col(t) = next;
        }
        std::array<Eigen::MatrixXd, 2> fields;
        for (auto var : {0, 1}) {
            Eigen::MatrixXd coeff = sim.middleRows(var * count, count);
            for (Eigen::Index a = 0; a < count; ++a) {
                for (int t = 0; t < steps; ++t) {
                    coeff(a, t) = tukey_h_forward(coeff(a, t), truth_.omega[var][a], truth_.h[var][a]);
                }
            }
            fields[var] = truth_.basis.samples * coeff;
        }
        // Noise and mean, time-major so any block partition draws the same stream.
        for (int t = 0; t < steps; ++t) {
            for (auto var : {0, 1}) {
                for (Eigen::Index cell = 0; cell < cells; ++cell) {
                    fields[var](cell, t) += truth_.resid_sd_cell[var][cell] * noise_rng_[r]() +
                                            truth_.mean_cell[var][cell];
                }
            }
        }
        for (auto var : {0, 1}) {
            block.values[var].middleCols(static_cast<Eigen::Index>(r) * steps, steps) = fields[var];
        }
    }
    offset_ += steps;
    return block;
}

}  // namespace osg

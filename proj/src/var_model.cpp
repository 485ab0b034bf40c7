#include "osg/var_model.hpp"

#include <cmath>
#include <string>

#include "osg/errors.hpp"

namespace osg {

namespace {

// Moore-Penrose inverse applied to the right-hand side, via symmetric
// eigendecomposition with relative cutoff 1e-10 * lambda_max.
Eigen::MatrixXd pseudo_solve(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& rhs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) {
        throw numerical_error("eigendecomposition of the design Gram matrix failed");
    }
    const double lambda_max = solver.eigenvalues().cwiseAbs().maxCoeff();
    const double cutoff = 1e-10 * lambda_max;
    Eigen::VectorXd inv = solver.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        inv[i] = inv[i] > cutoff ? 1.0 / inv[i] : 0.0;
    }
    return solver.eigenvectors() *
           (inv.asDiagonal() * (solver.eigenvectors().transpose() * rhs));
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

}  // namespace

Eigen::MatrixXd VarState::lag_matrix(int p) const {
    const Eigen::Index d = dim();
    if (p < 1 || p > order) throw config_error("lag index out of range");
    return coeff.block((p - 1) * d, 0, d, d).transpose();
}

Eigen::MatrixXd stack_coefficients(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    if (u.rows() != v.rows() || u.cols() != v.cols()) {
        throw config_error("U and V coefficient blocks have mismatched shapes");
    }
    Eigen::MatrixXd stacked(u.rows() + v.rows(), u.cols());
    stacked.topRows(u.rows()) = u;
    stacked.bottomRows(v.rows()) = v;
    return stacked;
}

VarBlockFit fit_var_block(const Eigen::MatrixXd& series, int ensembles, int steps, int order,
                          double ridge) {
    const Eigen::Index d = series.rows();
    if (d % 2 != 0) throw config_error("stacked series must have an even row count");
    if (order < 1) throw config_error("VAR order must be at least 1");
    if (steps < order + 1) {
        throw sequencing_error("insufficient data: block length " + std::to_string(steps) +
                               " needs at least P+1 = " + std::to_string(order + 1) + " points");
    }
    if (series.cols() != static_cast<Eigen::Index>(ensembles) * steps) {
        throw config_error("series columns do not equal ensembles * steps");
    }

    const Eigen::Index dp = d * order;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dp, dp);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(dp, d);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd lags(dp);
    for (int r = 0; r < ensembles; ++r) {
        const Eigen::Index base = static_cast<Eigen::Index>(r) * steps;
        for (int t = order; t < steps; ++t) {
            for (int p = 1; p <= order; ++p) {
                lags.segment((p - 1) * d, d) = series.col(base + t - p);
            }
            gram.selfadjointView<Eigen::Lower>().rankUpdate(lags);
            cross.noalias() += lags * series.col(base + t).transpose();
            second.selfadjointView<Eigen::Lower>().rankUpdate(series.col(base + t));
        }
    }
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    second.triangularView<Eigen::StrictlyUpper>() = second.transpose();

    VarBlockFit fit;
    fit.order = order;
    fit.basis_count = static_cast<int>(d / 2);
    fit.effective_samples = static_cast<long>(ensembles) * (steps - order);
    fit.gram = gram;

    Eigen::MatrixXd solve_gram = gram;
    if (ridge > 0.0) solve_gram += ridge * Eigen::MatrixXd::Identity(dp, dp);
    fit.coeff = pseudo_solve(solve_gram, cross);
    fit.innovation_cov = symmetrized(
        (second - fit.coeff.transpose() * gram * fit.coeff) /
        static_cast<double>(fit.effective_samples));
    return fit;
}

void update_var_online(VarState& state, const VarBlockFit& block) {
    if (state.effective_samples == 0) {
        state.coeff = block.coeff;
        state.innovation_cov = block.innovation_cov;
        state.gram = block.gram;
        state.effective_samples = block.effective_samples;
        state.order = block.order;
        state.basis_count = block.basis_count;
        return;
    }
    if (block.order != state.order || block.basis_count != state.basis_count) {
        throw config_error("block fit dimensions do not match the VAR state");
    }

    const Eigen::MatrixXd gram_new = state.gram + block.gram;
    const Eigen::MatrixXd rhs = state.gram * state.coeff + block.gram * block.coeff;

    Eigen::LLT<Eigen::MatrixXd> llt(gram_new);
    Eigen::MatrixXd coeff_new;
    if (llt.info() == Eigen::Success) {
        coeff_new = llt.solve(rhs);
    } else {
        const double jitter = 1e-10 * gram_new.trace() / static_cast<double>(gram_new.rows());
        Eigen::LLT<Eigen::MatrixXd> retry(
            gram_new + jitter * Eigen::MatrixXd::Identity(gram_new.rows(), gram_new.cols()));
        if (retry.info() != Eigen::Success) {
            throw numerical_error("accumulated design Gram matrix is indefinite after jitter");
        }
        coeff_new = retry.solve(rhs);
    }

    const auto n_prev = static_cast<double>(state.effective_samples);
    const auto n_cur = static_cast<double>(block.effective_samples);
    const double n_total = n_prev + n_cur;
    const Eigen::MatrixXd scatter =
        n_prev * state.innovation_cov + state.coeff.transpose() * state.gram * state.coeff +
        n_cur * block.innovation_cov + block.coeff.transpose() * block.gram * block.coeff -
        coeff_new.transpose() * gram_new * coeff_new;

    state.coeff = coeff_new;
    state.innovation_cov = symmetrized(scatter / n_total);
    state.gram = gram_new;
    state.effective_samples += block.effective_samples;
}

double stability_check(const Eigen::MatrixXd& coeff, int order) {
    const Eigen::Index d = coeff.cols();
    if (coeff.rows() != d * order) throw config_error("coefficient matrix shape does not match order");
    const Eigen::Index dp = d * order;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(dp, dp);
    companion.topRows(d) = coeff.transpose();
    if (order > 1) {
        companion.block(d, 0, dp - d, dp - d).setIdentity();
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success) {
        throw numerical_error("companion matrix eigendecomposition failed");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrized(cov));
    if (solver.info() != Eigen::Success) {
        throw numerical_error("innovation covariance factorization failed");
    }
    return solver.eigenvectors() *
           solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::MatrixXd simulate_var(const VarState& state, Eigen::Index steps, GaussianSampler& rng) {
    const Eigen::Index d = state.dim();
    const int order = state.order;
    const Eigen::MatrixXd factor = covariance_factor(state.innovation_cov);

    // history columns hold s_{t-1}, ..., s_{t-P}.
    Eigen::MatrixXd history(d, order);
    for (int p = 0; p < order; ++p) history.col(p) = factor * rng.vector(d);

    Eigen::MatrixXd out(d, steps);
    Eigen::VectorXd lags(d * order);
    for (Eigen::Index t = 0; t < steps; ++t) {
        for (int p = 0; p < order; ++p) lags.segment(p * d, d) = history.col(p);
        Eigen::VectorXd next = state.coeff.transpose() * lags + factor * rng.vector(d);
        for (int p = order - 1; p > 0; --p) history.col(p) = history.col(p - 1);
        history.col(0) = next;
        out.col(t) = next;
    }
    return out;
}

double rfd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw config_error("relative Frobenius distance needs equal shapes");
    }
    const double ref = b.norm();
    if (ref == 0.0) throw config_error("relative Frobenius distance reference has zero norm");
    return (a - b).norm() / ref;
}

}  // namespace osg

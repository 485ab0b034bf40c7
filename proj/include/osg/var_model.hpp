#pragma once

#include <Eigen/Dense>

#include "osg/rng.hpp"

namespace osg {

// VAR(P) sufficient statistics and estimates for a 2A-dimensional series.
// coeff stacks the lag matrices row-wise: coeff.block(p*2A, 0, 2A, 2A) is
// Phi_{p+1}^T, so a one-step prediction is coeff^T * lags with lags stacking
// s_{t-1}, ..., s_{t-P}.
struct VarState {
    Eigen::MatrixXd coeff;           // Phi: 2AP x 2A
    Eigen::MatrixXd innovation_cov;  // K: 2A x 2A, symmetric
    Eigen::MatrixXd gram;            // X: 2AP x 2AP, symmetric PSD
    long effective_samples = 0;      // sum over blocks of R * (tau_b - P)
    int order = 0;                   // P
    int basis_count = 0;             // A

    Eigen::Index dim() const { return 2 * static_cast<Eigen::Index>(basis_count); }
    // Lag matrix Phi_p (p is 1-based), oriented so s_t ~ sum_p Phi_p s_{t-p}.
    Eigen::MatrixXd lag_matrix(int p) const;
};

struct VarBlockFit {
    Eigen::MatrixXd coeff;           // Phi^{b}
    Eigen::MatrixXd innovation_cov;  // K^{b}
    Eigen::MatrixXd gram;            // X^{b}
    long effective_samples = 0;
    int order = 0;
    int basis_count = 0;
};

// Interleaves the two variables' coefficient blocks into the stacked series:
// rows 0..A-1 are U, rows A..2A-1 are V; columns are shared.
Eigen::MatrixXd stack_coefficients(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v);

// Least-squares VAR(P) fit on one block. `series` is 2A x (R*tau) with
// column r*tau + t; the first P time points of each ensemble serve as lags
// only. Rank-deficient Gram matrices are handled by a symmetric
// eigendecomposition pseudo-inverse (relative tolerance 1e-10).
VarBlockFit fit_var_block(const Eigen::MatrixXd& series, int ensembles, int steps, int order,
                          double ridge = 0.0);

// Merges a block fit into the cumulative state:
//   X   <- X + X^{b}
//   Phi <- (X + X^{b})^{-1} (X Phi + X^{b} Phi^{b})   (jittered LDLT)
//   K   <- five-term merge, re-symmetrized.
// An empty state (effective_samples == 0) is replaced by the block fit.
void update_var_online(VarState& state, const VarBlockFit& block);

// Spectral radius of the VAR companion matrix; values >= 1 mean the
// recursion is unstable.
double stability_check(const Eigen::MatrixXd& coeff, int order);

// Simulates `steps` points of the VAR recursion. The P initial lags and the
// innovations are drawn from N(0, K) via symmetric eigendecomposition with
// negative eigenvalues clipped at zero. Returns 2A x steps.
Eigen::MatrixXd simulate_var(const VarState& state, Eigen::Index steps, GaussianSampler& rng);

// Symmetric factor F with F F^T = K (eigenvalue clipping at zero).
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov);

// Relative Frobenius distance ||A - B||_F / ||B||_F.
double rfd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace osg

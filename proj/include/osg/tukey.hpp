#pragma once

#include <Eigen/Dense>
#include <array>

namespace osg {

// Upper cap on the fitted tail parameter; the kurtosis formula diverges at
// h = 1/4, so estimates are clamped just below and flagged.
inline constexpr double kTailCap = 0.24;

// Principal-branch Lambert W on x >= 0: W(x) e^{W(x)} = x, by Halley
// iteration from log(1+x), relative tolerance 1e-12.
double lambert_w0(double x);

// s = omega * st * exp(h * st^2 / 2). |st| is clamped at 40 before the
// exponential; clamp events are counted (see tukey_clamp_count).
double tukey_h_forward(double st, double omega, double h);

// Inverse of tukey_h_forward: st = sgn(x) sqrt(W(h x^2)/h) with x = s/omega;
// st = s/omega when h = 0.
double tukey_h_inverse(double s, double omega, double h);

// kappa(h) = 3 (1-2h)^3 (1-4h)^{-5/2}, defined for 0 <= h < 1/4.
double theoretical_kurtosis(double h);

// Number of forward-transform inputs clamped at |st| = 40 so far.
long tukey_clamp_count();

struct TukeyMoments {
    double gamma = 0.0;  // mean of s^2
    double kappa = 0.0;  // mean of s^4 / gamma^2
};

// gamma = mean(s^2), kappa = mean(s^4)/gamma^2, divisor n. Requires at least
// two values, not all zero.
TukeyMoments estimate_moments(const Eigen::Ref<const Eigen::VectorXd>& series);

struct TukeyParams {
    double omega = 1.0;
    double h = 0.0;
    bool capped = false;  // true when the raw estimate exceeded kTailCap
};

// h = (1/66) [sqrt(66 kappa - 162) - 6]_+ capped at kTailCap;
// omega^2 = gamma (1-2h)^{3/2}.
TukeyParams moments_to_params(const TukeyMoments& moments);

// Cumulative (gamma, kappa) per variable and basis index, merged block by
// block. The merge is an exact identity: after the final block the cumulative
// values equal the batch estimates on the concatenated series.
struct TukeyMomentState {
    std::array<Eigen::VectorXd, 2> gamma;
    std::array<Eigen::VectorXd, 2> kappa;
    long accumulated_steps = 0;  // time points merged so far

    static TukeyMomentState zero(int count);
    TukeyParams params(int var, int index) const;
};

// Merges one block's moments (per variable, per index) into the cumulative
// state. block_steps is the number of time points in the block.
void update_moments_online(TukeyMomentState& state,
                           const std::array<Eigen::VectorXd, 2>& block_gamma,
                           const std::array<Eigen::VectorXd, 2>& block_kappa,
                           long block_steps);

// --- Tukey g (skewness) machinery, used by the opt-in g-and-h pipeline ---

// Estimating-equation state for one scalar g parameter.
struct TukeyGState {
    double g = 0.0;
    double slope = 0.0;  // accumulated sum of d psi / d g at the block roots
    bool initialized = false;
};

struct TukeyGBlockFit {
    double g = 0.0;
    double slope = 0.0;
};

// Solves sum_t psi_t(g) = 0 on one block by damped Newton from a
// quantile-based start, where
//   psi_t(g) = (g s_t + 1) log^2(g s_t + 1) - g s_t log(g s_t + 1).
// Requires g s_t + 1 > 0 at the solution path. Also returns the slope
// sum_t dpsi_t/dg at the root.
TukeyGBlockFit solve_g_equation(const Eigen::Ref<const Eigen::VectorXd>& series);

// Merges a block solve into the cumulative state:
//   g_new = (slope_old + slope_b)^{-1} (slope_old g_old + slope_b g_b).
void tukey_g_online_update(TukeyGState& state, const Eigen::Ref<const Eigen::VectorXd>& series);

// Full g-and-h map s = omega g^{-1}(e^{g st}-1) e^{h st^2/2} (g = 0 falls
// back to the h-only form) and its numeric inverse (bisected Newton; the map
// is strictly increasing in st).
double tukey_gh_forward(double st, double omega, double g, double h);
double tukey_gh_inverse(double s, double omega, double g, double h);

}  // namespace osg

#include "osg/tukey.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "osg/errors.hpp"

namespace osg {

namespace {

std::atomic<long> g_clamp_count{0};

constexpr double kStClamp = 40.0;
constexpr double kQuantile75 = 0.6744897501960817;  // Phi^{-1}(0.75)

double clamp_standardized(double st) {
    if (std::abs(st) > kStClamp) {
        ++g_clamp_count;
        return std::copysign(kStClamp, st);
    }
    return st;
}

// psi_t(g) = (g s + 1) log^2(g s + 1) - g s log(g s + 1)
double psi(double g, double s) {
    const double u = g * s + 1.0;
    if (u <= 0.0) throw numerical_error("Tukey g evaluation left the log domain (g*s + 1 <= 0)");
    const double L = std::log(u);
    return u * L * L - g * s * L;
}

double psi_derivative(double g, double s) {
    const double u = g * s + 1.0;
    if (u <= 0.0) throw numerical_error("Tukey g evaluation left the log domain (g*s + 1 <= 0)");
    const double L = std::log(u);
    return s * (L * L + L) - s * g * s / u;
}

double type7_quantile(std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double lambert_w0(double x) {
    if (x < 0.0) throw config_error("lambert_w0 requires a nonnegative argument");
    if (x == 0.0) return 0.0;
    double w = std::log1p(x);
    const double tol = 1e-13 * std::max(1.0, x);
    for (int it = 0; it < 50; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (std::abs(f) <= tol) return w;
        const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        w -= f / denom;
    }
    return w;
}

double tukey_h_forward(double st, double omega, double h) {
    if (!(omega > 0.0)) throw config_error("Tukey scale omega must be positive");
    if (h < 0.0) throw config_error("Tukey tail parameter h must be nonnegative");
    st = clamp_standardized(st);
    return omega * st * std::exp(h * st * st / 2.0);
}

double tukey_h_inverse(double s, double omega, double h) {
    if (!(omega > 0.0)) throw config_error("Tukey scale omega must be positive");
    if (h < 0.0) throw config_error("Tukey tail parameter h must be nonnegative");
    const double x = s / omega;
    if (h == 0.0 || x == 0.0) return x;
    return std::copysign(std::sqrt(lambert_w0(h * x * x) / h), x);
}

double theoretical_kurtosis(double h) {
    if (h < 0.0 || h >= 0.25) {
        throw config_error("kurtosis exists only for 0 <= h < 1/4, got h = " + std::to_string(h));
    }
    const double a = 1.0 - 2.0 * h;
    return 3.0 * a * a * a * std::pow(1.0 - 4.0 * h, -2.5);
}

long tukey_clamp_count() { return g_clamp_count.load(); }

TukeyMoments estimate_moments(const Eigen::Ref<const Eigen::VectorXd>& series) {
    if (series.size() < 2) throw config_error("moment estimation needs at least two values");
    const double gamma = series.array().square().mean();
    if (gamma <= 0.0) throw numerical_error("degenerate moments: series is identically zero");
    const double fourth = series.array().square().square().mean();
    return TukeyMoments{gamma, fourth / (gamma * gamma)};
}

TukeyParams moments_to_params(const TukeyMoments& moments) {
    if (!(moments.gamma > 0.0)) throw config_error("gamma must be positive");
    if (moments.kappa < 1.0) throw config_error("kappa below its attainable lower bound of 1");
    TukeyParams p;
    if (moments.kappa > 3.0) {
        p.h = (std::sqrt(66.0 * moments.kappa - 162.0) - 6.0) / 66.0;
        if (p.h > kTailCap) {
            p.h = kTailCap;
            p.capped = true;
        }
    }
    p.omega = std::sqrt(moments.gamma * std::pow(1.0 - 2.0 * p.h, 1.5));
    return p;
}

TukeyMomentState TukeyMomentState::zero(int count) {
    TukeyMomentState state;
    for (auto var : {0, 1}) {
        state.gamma[var] = Eigen::VectorXd::Zero(count);
        state.kappa[var] = Eigen::VectorXd::Zero(count);
    }
    return state;
}

TukeyParams TukeyMomentState::params(int var, int index) const {
    return moments_to_params(TukeyMoments{gamma[var][index], kappa[var][index]});
}

void update_moments_online(TukeyMomentState& state,
                           const std::array<Eigen::VectorXd, 2>& block_gamma,
                           const std::array<Eigen::VectorXd, 2>& block_kappa,
                           long block_steps) {
    if (block_steps < 1) throw config_error("block length must be at least 1");
    const auto prev = static_cast<double>(state.accumulated_steps);
    const auto cur = static_cast<double>(block_steps);
    const double total = prev + cur;
    for (auto var : {0, 1}) {
        if (block_gamma[var].size() != state.gamma[var].size()) {
            throw config_error("block moment size does not match state");
        }
        for (Eigen::Index a = 0; a < state.gamma[var].size(); ++a) {
            const double g_prev = state.gamma[var][a];
            const double g_cur = block_gamma[var][a];
            const double g_new = (prev * g_prev + cur * g_cur) / total;
            const double num =
                prev * g_prev * g_prev * state.kappa[var][a] + cur * g_cur * g_cur * block_kappa[var][a];
            if (g_new == 0.0) {
                if (num != 0.0) {
                    throw numerical_error("degenerate moment update: zero cumulative gamma with "
                                          "nonzero kurtosis weights");
                }
                state.gamma[var][a] = 0.0;
                state.kappa[var][a] = 0.0;
                continue;
            }
            state.gamma[var][a] = g_new;
            state.kappa[var][a] = num / (total * g_new * g_new);
        }
    }
    state.accumulated_steps += block_steps;
}

TukeyGBlockFit solve_g_equation(const Eigen::Ref<const Eigen::VectorXd>& series) {
    const Eigen::Index n = series.size();
    if (n < 2) throw config_error("g estimation needs at least two values");

    // Feasible g keeps g*s + 1 > 0 for every sample.
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = series[i];
        if (!std::isfinite(s)) throw config_error("g estimation input must be finite");
        if (s > 0.0) lo = std::max(lo, -1.0 / s);
        if (s < 0.0) hi = std::min(hi, -1.0 / s);
    }

    auto equation = [&series](double g) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < series.size(); ++i) sum += psi(g, series[i]);
        return sum;
    };
    auto slope_at = [&series](double g) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < series.size(); ++i) sum += psi_derivative(g, series[i]);
        return sum;
    };

    // Quantile-ratio start: exact at population level for Tukey-g data.
    std::vector<double> sorted(series.data(), series.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const double q25 = type7_quantile(sorted, 0.25);
    const double q50 = type7_quantile(sorted, 0.50);
    const double q75 = type7_quantile(sorted, 0.75);
    double g = 0.0;
    if (q75 - q50 > 0.0 && q50 - q25 > 0.0) {
        g = std::log((q75 - q50) / (q50 - q25)) / kQuantile75;
    }
    if (g <= lo) g = 0.9 * lo;
    if (g >= hi) g = 0.9 * hi;

    const double tol = 1e-10 * static_cast<double>(n);
    for (int it = 0; it < 100; ++it) {
        const double value = equation(g);
        if (std::abs(value) <= tol) {
            return TukeyGBlockFit{g, slope_at(g)};
        }
        const double deriv = slope_at(g);
        double next;
        if (deriv == 0.0 || !std::isfinite(deriv)) {
            next = g * 0.5;  // retreat toward the trivial root
        } else {
            next = g - value / deriv;
        }
        if (next <= lo) next = 0.5 * (g + lo);
        if (next >= hi) next = 0.5 * (g + hi);
        g = next;
    }
    throw numerical_error("estimating equation for g did not converge in 100 iterations");
}

void tukey_g_online_update(TukeyGState& state, const Eigen::Ref<const Eigen::VectorXd>& series) {
    const TukeyGBlockFit fit = solve_g_equation(series);
    if (!state.initialized) {
        state.g = fit.g;
        state.slope = fit.slope;
        state.initialized = true;
        return;
    }
    const double denom = state.slope + fit.slope;
    if (denom != 0.0 && std::isfinite(denom)) {
        state.g = (state.slope * state.g + fit.slope * fit.g) / denom;
    }
    state.slope = denom;
}

double tukey_gh_forward(double st, double omega, double g, double h) {
    if (g == 0.0) return tukey_h_forward(st, omega, h);
    if (!(omega > 0.0)) throw config_error("Tukey scale omega must be positive");
    if (h < 0.0) throw config_error("Tukey tail parameter h must be nonnegative");
    st = clamp_standardized(st);
    return omega * (std::expm1(g * st) / g) * std::exp(h * st * st / 2.0);
}

double tukey_gh_inverse(double s, double omega, double g, double h) {
    if (g == 0.0) return tukey_h_inverse(s, omega, h);
    if (!(omega > 0.0)) throw config_error("Tukey scale omega must be positive");
    // Strictly increasing in st; bisect over the representable range.
    double lo = -kStClamp, hi = kStClamp;
    if (s <= tukey_gh_forward(lo, omega, g, h)) return lo;
    if (s >= tukey_gh_forward(hi, omega, g, h)) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (tukey_gh_forward(mid, omega, g, h) < s) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-14 * std::max(1.0, std::abs(lo))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace osg

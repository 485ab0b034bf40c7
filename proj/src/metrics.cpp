#include "osg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "osg/errors.hpp"

namespace osg {

namespace {

double quantile_sorted(const Eigen::VectorXd& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<Eigen::Index>(pos);
    const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Pearson correlation of two residual vectors; NaN when either is constant.
double residual_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double sx = x.norm(), sy = y.norm();
    if (sx == 0.0 || sy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return x.dot(y) / (sx * sy);
}

}  // namespace

double sample_quantile(Eigen::VectorXd values, double p) {
    if (values.size() == 0) throw config_error("quantile of an empty sample");
    if (p < 0.0 || p > 1.0) throw config_error("quantile level must lie in [0, 1]");
    std::sort(values.data(), values.data() + values.size());
    return quantile_sorted(values, p);
}

double central_region_area(const Eigen::MatrixXd& series) {
    if (series.rows() < 4) {
        throw config_error("central region area needs at least 4 ensembles, got " +
                           std::to_string(series.rows()));
    }
    double area = 0.0;
    Eigen::VectorXd column(series.rows());
    for (Eigen::Index t = 0; t < series.cols(); ++t) {
        column = series.col(t);
        std::sort(column.data(), column.data() + column.size());
        area += quantile_sorted(column, 0.75) - quantile_sorted(column, 0.25);
    }
    return area;
}

double index_uq(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference) {
    const double ref = central_region_area(reference);
    if (ref == 0.0) throw numerical_error("degenerate reference: zero central region area");
    return central_region_area(emulated) / ref;
}

double wasserstein_1d(Eigen::VectorXd x, Eigen::VectorXd y) {
    if (x.size() == 0 || y.size() == 0) throw config_error("Wasserstein distance of an empty sample");
    std::sort(x.data(), x.data() + x.size());
    std::sort(y.data(), y.data() + y.size());
    const long long n = x.size(), m = y.size();
    // Sweep the merged quantile breakpoints in units of 1/(n*m).
    long long i = 0, j = 0, u = 0;
    double dist = 0.0;
    while (i < n && j < m) {
        const long long bx = (i + 1) * m;
        const long long by = (j + 1) * n;
        const long long next = std::min(bx, by);
        dist += static_cast<double>(next - u) * std::abs(x[i] - y[j]);
        u = next;
        if (bx == next) ++i;
        if (by == next) ++j;
    }
    return dist / (static_cast<double>(n) * static_cast<double>(m));
}

double time_mean_ensemble_sd(const Eigen::MatrixXd& series) {
    if (series.rows() < 2) throw config_error("ensemble standard deviation needs R >= 2");
    double acc = 0.0;
    for (Eigen::Index t = 0; t < series.cols(); ++t) {
        const double mean = series.col(t).mean();
        acc += std::sqrt((series.col(t).array() - mean).square().mean());
    }
    return acc / static_cast<double>(series.cols());
}

double index_rq(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference) {
    return time_mean_ensemble_sd(emulated) - time_mean_ensemble_sd(reference);
}

Eigen::MatrixXd cell_series(const Eigen::MatrixXd& field, Eigen::Index cell, int ensembles,
                            int steps) {
    if (field.cols() != static_cast<Eigen::Index>(ensembles) * steps) {
        throw config_error("field columns do not equal ensembles * steps");
    }
    Eigen::MatrixXd out(ensembles, steps);
    for (int r = 0; r < ensembles; ++r) {
        out.row(r) = field.row(cell).segment(static_cast<Eigen::Index>(r) * steps, steps);
    }
    return out;
}

Eigen::VectorXd index_wdt(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference) {
    if (emulated.rows() != reference.rows()) throw config_error("cell counts differ");
    Eigen::VectorXd out(emulated.rows());
    for (Eigen::Index c = 0; c < emulated.rows(); ++c) {
        out[c] = wasserstein_1d(emulated.row(c).transpose(), reference.row(c).transpose());
    }
    return out;
}

Eigen::VectorXd index_wds(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference,
                          int ensembles_emulated, int ensembles_reference, int steps) {
    if (emulated.rows() != reference.rows()) throw config_error("cell counts differ");
    const Eigen::Index cells = emulated.rows();
    Eigen::VectorXd out(steps);
    Eigen::VectorXd pool_e(cells * ensembles_emulated), pool_r(cells * ensembles_reference);
    for (int t = 0; t < steps; ++t) {
        for (int r = 0; r < ensembles_emulated; ++r) {
            pool_e.segment(static_cast<Eigen::Index>(r) * cells, cells) =
                emulated.col(static_cast<Eigen::Index>(r) * steps + t);
        }
        for (int r = 0; r < ensembles_reference; ++r) {
            pool_r.segment(static_cast<Eigen::Index>(r) * cells, cells) =
                reference.col(static_cast<Eigen::Index>(r) * steps + t);
        }
        out[t] = wasserstein_1d(pool_e, pool_r);
    }
    return out;
}

Eigen::VectorXd index_uq_field(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference,
                               int ensembles_emulated, int ensembles_reference, int steps) {
    if (emulated.rows() != reference.rows()) throw config_error("cell counts differ");
    Eigen::VectorXd out(emulated.rows());
    for (Eigen::Index c = 0; c < emulated.rows(); ++c) {
        out[c] = index_uq(cell_series(emulated, c, ensembles_emulated, steps),
                          cell_series(reference, c, ensembles_reference, steps));
    }
    return out;
}

Eigen::VectorXd index_rq_field(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference,
                               int ensembles_emulated, int ensembles_reference, int steps) {
    if (emulated.rows() != reference.rows()) throw config_error("cell counts differ");
    Eigen::VectorXd out(emulated.rows());
    for (Eigen::Index c = 0; c < emulated.rows(); ++c) {
        out[c] = index_rq(cell_series(emulated, c, ensembles_emulated, steps),
                          cell_series(reference, c, ensembles_reference, steps));
    }
    return out;
}

namespace {

// One PAC entry: correlation of x_t and y_{t-p} after partialling out the
// intermediate lags of both (deduplicated when x and y are the same row).
double pac_entry(const Eigen::MatrixXd& stacked, Eigen::Index xrow, Eigen::Index yrow,
                 int ensembles, int steps, int order) {
    const Eigen::Index n = static_cast<Eigen::Index>(ensembles) * (steps - order);
    std::vector<std::pair<Eigen::Index, int>> conditioners;  // (row, lag)
    for (int lag = 1; lag < order; ++lag) {
        conditioners.emplace_back(xrow, lag);
        if (yrow != xrow) conditioners.emplace_back(yrow, lag);
    }
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(conditioners.size());

    Eigen::MatrixXd design(n, k);
    Eigen::VectorXd x(n), y(n);
    Eigen::Index row = 0;
    for (int r = 0; r < ensembles; ++r) {
        const Eigen::Index base = static_cast<Eigen::Index>(r) * steps;
        for (int t = order; t < steps; ++t, ++row) {
            x[row] = stacked(xrow, base + t);
            y[row] = stacked(yrow, base + t - order);
            design(row, 0) = 1.0;
            for (std::size_t c = 0; c < conditioners.size(); ++c) {
                design(row, 1 + static_cast<Eigen::Index>(c)) =
                    stacked(conditioners[c].first, base + t - conditioners[c].second);
            }
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < k) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::VectorXd rx = x - design * qr.solve(x);
    const Eigen::VectorXd ry = y - design * qr.solve(y);
    return residual_correlation(rx, ry);
}

}  // namespace

PacMatrices pac_matrix(const Eigen::MatrixXd& stacked, int ensembles, int steps, int order) {
    if (order < 1) throw config_error("PAC order must be at least 1");
    if (steps < 10 * order) {
        throw config_error("PAC needs a series of length at least 10 * order");
    }
    if (stacked.rows() % 2 != 0) throw config_error("stacked series must have an even row count");
    if (stacked.cols() != static_cast<Eigen::Index>(ensembles) * steps) {
        throw config_error("series columns do not equal ensembles * steps");
    }
    const Eigen::Index count = stacked.rows() / 2;

    PacMatrices pac;
    pac.uu.resize(count, count);
    pac.vv.resize(count, count);
    pac.uv.resize(count, count);
    pac.vu.resize(count, count);
    for (Eigen::Index a1 = 0; a1 < count; ++a1) {
        for (Eigen::Index a2 = 0; a2 < count; ++a2) {
            pac.uu(a1, a2) = pac_entry(stacked, a1, a2, ensembles, steps, order);
            pac.vv(a1, a2) = pac_entry(stacked, count + a1, count + a2, ensembles, steps, order);
            pac.uv(a1, a2) = pac_entry(stacked, a1, count + a2, ensembles, steps, order);
            pac.vu(a1, a2) = pac_entry(stacked, count + a1, a2, ensembles, steps, order);
        }
    }
    return pac;
}

}  // namespace osg

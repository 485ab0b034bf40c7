#pragma once

#include <Eigen/Dense>

namespace osg {

// Linear-interpolation quantile (the common "type 7" rule) of an unsorted
// sample; p in [0, 1].
double sample_quantile(Eigen::VectorXd values, double p);

// Central region area of R time series: the per-time interquartile range of
// the R values, summed over time. `series` is R x T.
double central_region_area(const Eigen::MatrixXd& series);

// CRA(emulated) / CRA(reference) for one cell's R x T series.
double index_uq(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference);

// Order-1 Wasserstein distance between two empirical distributions, via the
// merged-sorted quantile-function integral.
double wasserstein_1d(Eigen::VectorXd x, Eigen::VectorXd y);

// Mean over time of the per-time ensemble standard deviation (divisor R).
double time_mean_ensemble_sd(const Eigen::MatrixXd& series);

// I_rq = time-mean ensemble sd of emulations minus that of the reference.
double index_rq(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference);

// Per-cell and per-time Wasserstein indices for one variable. Fields are
// nCells x (R*tau) with column r*tau + t.
Eigen::VectorXd index_wdt(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference);
Eigen::VectorXd index_wds(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference,
                          int ensembles_emulated, int ensembles_reference, int steps);

// Per-cell I_uq and I_rq over whole fields.
Eigen::VectorXd index_uq_field(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference,
                               int ensembles_emulated, int ensembles_reference, int steps);
Eigen::VectorXd index_rq_field(const Eigen::MatrixXd& emulated, const Eigen::MatrixXd& reference,
                               int ensembles_emulated, int ensembles_reference, int steps);

// One cell's R x T view of a field stored as nCells x (R*tau).
Eigen::MatrixXd cell_series(const Eigen::MatrixXd& field, Eigen::Index cell, int ensembles,
                            int steps);

// Order-p partial autocorrelation blocks of a stacked 2A series
// (columns r*tau + t). Entry (a1, a2) correlates the residuals of x_t(a1)
// and y_{t-p}(a2) after regressing both on the intermediate lags of each.
// Entries whose conditioning regression is singular are set to NaN.
struct PacMatrices {
    Eigen::MatrixXd uu, vv, uv, vu;  // each A x A
};

PacMatrices pac_matrix(const Eigen::MatrixXd& stacked, int ensembles, int steps, int order);

}  // namespace osg

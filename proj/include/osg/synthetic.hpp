#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "osg/pipeline.hpp"
#include "osg/rng.hpp"

namespace osg {

// Known generator parameters for recovery tests and the synth CLI: the same
// machinery as emulation, driven by a chosen truth instead of a fit.
struct SyntheticTruth {
    SlepianBasis basis;
    int order = 2;
    Eigen::MatrixXd coeff;           // Phi: 2AP x 2A
    Eigen::MatrixXd innovation_cov;  // K: 2A x 2A
    std::array<Eigen::VectorXd, 2> omega;
    std::array<Eigen::VectorXd, 2> h;
    std::array<Eigen::VectorXd, 2> mean_cell;      // constant in time, per masked cell
    std::array<Eigen::VectorXd, 2> resid_sd_cell;  // constant in time, per masked cell
};

// Throws a configuration error when omega/h/K are out of their domains.
void validate_truth(const SyntheticTruth& truth);

// Diagonal stable VAR truth whose transformed coefficients have unit
// stationary variance, so the Tukey moment identities hold exactly at the
// population level. order must be 1 or 2.
SyntheticTruth make_default_truth(const SlepianBasis& basis, int order = 2, double h_tail = 0.1);

// Polar-cap basis on a coarse global grid, truncated to `count` columns.
SlepianBasis make_cap_basis(double spacing_deg, double cap_radius_deg, int band_limit, int count);

// Streams consecutive blocks from the truth. The VAR recursion and the noise
// streams are continuous across blocks, so any partition of the time axis
// yields the same concatenated data.
class SyntheticGenerator {
  public:
    SyntheticGenerator(SyntheticTruth truth, int ensembles, std::uint64_t seed);

    EnsembleBlock next_block(int steps);

    const SyntheticTruth& truth() const { return truth_; }
    long steps_generated() const { return offset_; }

  private:
    SyntheticTruth truth_;
    int ensembles_;
    Eigen::MatrixXd factor_;  // symmetric factor of K
    std::vector<Eigen::MatrixXd> history_;  // per ensemble, 2A x P
    std::vector<GaussianSampler> var_rng_;
    std::vector<GaussianSampler> noise_rng_;
    long offset_ = 0;
};

}  // namespace osg

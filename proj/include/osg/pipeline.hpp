#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "osg/slepian.hpp"
#include "osg/tukey.hpp"
#include "osg/var_model.hpp"

namespace osg {

// One time block of bivariate ensemble fields on the masked cells.
// values[v] is nMaskCells x (R*tau) with column r*tau + t.
struct EnsembleBlock {
    int ensembles = 0;       // R
    int steps = 0;           // tau
    long time_offset = 0;    // first global time index covered
    std::uint64_t fingerprint = 0;
    std::array<Eigen::MatrixXd, 2> values;
};

struct ModelOptions {
    double ridge = 0.0;                // added to the Gram diagonal when > 0
    bool tgh = false;                  // g-and-h pipeline instead of h-only
    bool cumulative_retransform = false;  // transform blocks with cumulative params
};

// Fitted generator state: everything needed to emulate, nothing of the raw
// samples beyond the per-time mean and residual-sd fields.
struct OsgModel {
    SlepianBasis basis;
    int ensembles = 0;  // R of the training blocks
    int order = 0;      // P
    ModelOptions options;

    std::array<Eigen::MatrixXd, 2> mean;      // nMaskCells x T
    std::array<Eigen::MatrixXd, 2> resid_sd;  // nMaskCells x T
    TukeyMomentState moments;
    std::array<std::vector<TukeyGState>, 2> g_states;  // per alpha, tgh mode only
    VarState var;

    std::vector<long> block_lengths;
    long total_steps = 0;

    int basis_count() const { return static_cast<int>(basis.count()); }
};

// Coefficients plus the per-(t, cell) residual variance of the expansion.
struct AnalysisResult {
    Eigen::MatrixXd coefficients;       // A x (R*tau)
    Eigen::MatrixXd residual_variance;  // nMaskCells x tau
};

// Least-squares analysis of one variable's block, with the residual variance
// averaged over ensembles.
AnalysisResult analyze(const Eigen::MatrixXd& z, const SlepianAnalyzer& analyzer, int ensembles,
                       int steps);

// Fits the full model on the initial block (mean removal, analysis, moment
// fit, VAR fit). Enforces the initial-block invertibility bound
// tau0 >= (2A + R) P / R.
OsgModel fit_initial(const EnsembleBlock& block, const SlepianBasis& basis, int order,
                     const ModelOptions& options = {});

// Merges one subsequent block into the model without retaining its samples.
// Blocks must arrive in time order.
void ingest_block(OsgModel& model, const EnsembleBlock& block);

// Emulates `members` ensembles over global time [start, start + length);
// length < 0 means the whole trained range. Deterministic given the seed.
EnsembleBlock emulate(const OsgModel& model, int members, std::uint64_t seed, long start = 0,
                      long length = -1);

// Stored-parameter count 4*T*|G_R| + 4A + 4(P+1)A^2.
long long parameter_count(long steps, long masked_cells, int basis_count, int order);

// Cumulative Tukey parameters for one variable, derived from the moment state.
std::array<Eigen::VectorXd, 2> model_omega(const OsgModel& model);
std::array<Eigen::VectorXd, 2> model_h(const OsgModel& model);

}  // namespace osg

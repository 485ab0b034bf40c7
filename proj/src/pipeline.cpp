#include "osg/pipeline.hpp"

#include <cmath>
#include <string>

#include "osg/errors.hpp"
#include "osg/rng.hpp"

namespace osg {

namespace {

void check_block(const EnsembleBlock& block, const SlepianBasis& basis) {
    if (block.fingerprint != basis.fingerprint) {
        throw config_error("block grid fingerprint " + std::to_string(block.fingerprint) +
                           " does not match basis fingerprint " + std::to_string(basis.fingerprint));
    }
    if (block.ensembles < 2) throw config_error("blocks need at least R = 2 ensembles");
    for (auto var : {0, 1}) {
        if (block.values[var].rows() != basis.masked_count() ||
            block.values[var].cols() != static_cast<Eigen::Index>(block.ensembles) * block.steps) {
            throw config_error("block field shape is inconsistent with (R, tau, mask)");
        }
        if (!block.values[var].allFinite()) throw config_error("block contains non-finite values");
    }
}

// Ensemble mean per (cell, t) and the mean-removed fields.
struct Centered {
    Eigen::MatrixXd mean;  // nMask x tau
    Eigen::MatrixXd z;     // nMask x (R*tau)
};

Centered remove_ensemble_mean(const Eigen::MatrixXd& values, int ensembles, int steps) {
    Centered out;
    out.mean = Eigen::MatrixXd::Zero(values.rows(), steps);
    for (int r = 0; r < ensembles; ++r) {
        out.mean += values.middleCols(static_cast<Eigen::Index>(r) * steps, steps);
    }
    out.mean /= static_cast<double>(ensembles);
    out.z = values;
    for (int r = 0; r < ensembles; ++r) {
        out.z.middleCols(static_cast<Eigen::Index>(r) * steps, steps) -= out.mean;
    }
    return out;
}

// Per-block ingestion shared by fit_initial and ingest_block: appends the
// mean/sd fields, returns the block's Slepian coefficients.
struct BlockAnalysis {
    CoefficientBlock coeffs;
    std::array<Eigen::MatrixXd, 2> mean;
    std::array<Eigen::MatrixXd, 2> sd;
};

BlockAnalysis analyze_block(const EnsembleBlock& block, const SlepianAnalyzer& analyzer) {
    BlockAnalysis out;
    out.coeffs.ensembles = block.ensembles;
    out.coeffs.steps = block.steps;
    for (auto var : {0, 1}) {
        Centered centered = remove_ensemble_mean(block.values[var], block.ensembles, block.steps);
        AnalysisResult res = analyze(centered.z, analyzer, block.ensembles, block.steps);
        out.coeffs.coeff[var] = std::move(res.coefficients);
        out.mean[var] = std::move(centered.mean);
        out.sd[var] = res.residual_variance.cwiseSqrt();
    }
    return out;
}

// Block moments per (variable, alpha) via the n-divisor estimators.
void block_moments(const CoefficientBlock& coeffs, std::array<Eigen::VectorXd, 2>& gamma,
                   std::array<Eigen::VectorXd, 2>& kappa) {
    for (auto var : {0, 1}) {
        const Eigen::Index count = coeffs.coeff[var].rows();
        gamma[var].resize(count);
        kappa[var].resize(count);
        for (Eigen::Index a = 0; a < count; ++a) {
            const TukeyMoments m = estimate_moments(coeffs.coeff[var].row(a).transpose());
            gamma[var][a] = m.gamma;
            kappa[var][a] = m.kappa;
        }
    }
}

// Gaussianizes the coefficients in place with the given per-alpha parameters.
void transform_coefficients(CoefficientBlock& coeffs,
                            const std::array<Eigen::VectorXd, 2>& omega,
                            const std::array<Eigen::VectorXd, 2>& h,
                            const std::array<Eigen::VectorXd, 2>* g = nullptr) {
    for (auto var : {0, 1}) {
        for (Eigen::Index a = 0; a < coeffs.coeff[var].rows(); ++a) {
            for (Eigen::Index c = 0; c < coeffs.coeff[var].cols(); ++c) {
                double& value = coeffs.coeff[var](a, c);
                value = g == nullptr
                            ? tukey_h_inverse(value, omega[var][a], h[var][a])
                            : tukey_gh_inverse(value, omega[var][a], (*g)[var][a], h[var][a]);
            }
        }
    }
}

void append_fields(OsgModel& model, const BlockAnalysis& analysis, int steps) {
    for (auto var : {0, 1}) {
        const Eigen::Index old_cols = model.mean[var].cols();
        model.mean[var].conservativeResize(analysis.mean[var].rows(), old_cols + steps);
        model.mean[var].rightCols(steps) = analysis.mean[var];
        model.resid_sd[var].conservativeResize(analysis.sd[var].rows(), old_cols + steps);
        model.resid_sd[var].rightCols(steps) = analysis.sd[var];
    }
}

std::array<Eigen::VectorXd, 2> params_from_moments(const std::array<Eigen::VectorXd, 2>& gamma,
                                                   const std::array<Eigen::VectorXd, 2>& kappa,
                                                   bool want_omega) {
    std::array<Eigen::VectorXd, 2> out;
    for (auto var : {0, 1}) {
        out[var].resize(gamma[var].size());
        for (Eigen::Index a = 0; a < gamma[var].size(); ++a) {
            const TukeyParams p = moments_to_params(TukeyMoments{gamma[var][a], kappa[var][a]});
            out[var][a] = want_omega ? p.omega : p.h;
        }
    }
    return out;
}

// One g-and-h sweep: remove the per-block h, solve the g estimating equation
// on the de-tailed values, and merge into the cumulative g state.
void update_g_states(OsgModel& model, const CoefficientBlock& coeffs,
                     const std::array<Eigen::VectorXd, 2>& omega,
                     const std::array<Eigen::VectorXd, 2>& h,
                     std::array<Eigen::VectorXd, 2>& merged_g) {
    for (auto var : {0, 1}) {
        merged_g[var].resize(coeffs.coeff[var].rows());
        for (Eigen::Index a = 0; a < coeffs.coeff[var].rows(); ++a) {
            Eigen::VectorXd detailed = coeffs.coeff[var].row(a).transpose();
            for (Eigen::Index i = 0; i < detailed.size(); ++i) {
                detailed[i] = tukey_h_inverse(detailed[i], omega[var][a], h[var][a]);
            }
            tukey_g_online_update(model.g_states[var][static_cast<std::size_t>(a)], detailed);
            merged_g[var][a] = model.g_states[var][static_cast<std::size_t>(a)].g;
        }
    }
}

void fit_block_into_model(OsgModel& model, const EnsembleBlock& block, bool initial) {
    const SlepianAnalyzer analyzer(model.basis);
    BlockAnalysis analysis = analyze_block(block, analyzer);
    append_fields(model, analysis, block.steps);

    std::array<Eigen::VectorXd, 2> gamma, kappa;
    block_moments(analysis.coeffs, gamma, kappa);
    update_moments_online(model.moments, gamma, kappa, block.steps);

    // Algorithm choice: blocks are transformed with their own parameters;
    // cumulative parameters only drive emulation. The retransform flag flips
    // this for sensitivity analysis.
    const bool cumulative = model.options.cumulative_retransform;
    const auto omega = cumulative ? model_omega(model) : params_from_moments(gamma, kappa, true);
    const auto h = cumulative ? model_h(model) : params_from_moments(gamma, kappa, false);

    if (model.options.tgh) {
        std::array<Eigen::VectorXd, 2> merged_g;
        update_g_states(model, analysis.coeffs, omega, h, merged_g);
        transform_coefficients(analysis.coeffs, omega, h, &merged_g);
    } else {
        transform_coefficients(analysis.coeffs, omega, h);
    }

    const Eigen::MatrixXd stacked =
        stack_coefficients(analysis.coeffs.coeff[0], analysis.coeffs.coeff[1]);
    const VarBlockFit fit =
        fit_var_block(stacked, block.ensembles, block.steps, model.order, model.options.ridge);
    if (initial) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> probe(fit.gram);
        const double lambda_min = probe.eigenvalues().minCoeff();
        if (lambda_min <= 1e-10 * probe.eigenvalues().maxCoeff()) {
            throw numerical_error("initial design Gram matrix is singular despite the length bound");
        }
    }
    update_var_online(model.var, fit);

    model.block_lengths.push_back(block.steps);
    model.total_steps += block.steps;
}

}  // namespace

AnalysisResult analyze(const Eigen::MatrixXd& z, const SlepianAnalyzer& analyzer, int ensembles,
                       int steps) {
    if (z.cols() != static_cast<Eigen::Index>(ensembles) * steps) {
        throw config_error("field columns do not equal ensembles * steps");
    }
    AnalysisResult out;
    out.coefficients = analyzer.coefficients(z);
    const Eigen::MatrixXd residual = z - analyzer.basis().samples * out.coefficients;
    out.residual_variance = Eigen::MatrixXd::Zero(z.rows(), steps);
    for (int r = 0; r < ensembles; ++r) {
        out.residual_variance +=
            residual.middleCols(static_cast<Eigen::Index>(r) * steps, steps).cwiseAbs2();
    }
    out.residual_variance /= static_cast<double>(ensembles);
    return out;
}

OsgModel fit_initial(const EnsembleBlock& block, const SlepianBasis& basis, int order,
                     const ModelOptions& options) {
    check_block(block, basis);
    if (order < 1) throw config_error("VAR order must be at least 1");
    const int count = static_cast<int>(basis.count());
    const double bound =
        static_cast<double>((2 * count + block.ensembles) * order) / block.ensembles;
    if (block.steps < bound) {
        throw config_error("initial block length " + std::to_string(block.steps) +
                           " violates the invertibility bound tau0 >= (2A+R)P/R = " +
                           std::to_string(bound));
    }

    OsgModel model;
    model.basis = basis;
    model.ensembles = block.ensembles;
    model.order = order;
    model.options = options;
    model.moments = TukeyMomentState::zero(count);
    if (options.tgh) {
        for (auto var : {0, 1}) model.g_states[var].resize(static_cast<std::size_t>(count));
    }
    for (auto var : {0, 1}) {
        model.mean[var].resize(basis.masked_count(), 0);
        model.resid_sd[var].resize(basis.masked_count(), 0);
    }
    if (block.time_offset != 0) {
        throw sequencing_error("initial block must start at time offset 0");
    }
    fit_block_into_model(model, block, true);
    return model;
}

void ingest_block(OsgModel& model, const EnsembleBlock& block) {
    if (model.total_steps == 0) throw config_error("model is not initialized");
    check_block(block, model.basis);
    if (block.ensembles != model.ensembles) {
        throw config_error("block ensemble count differs from the fitted model");
    }
    if (block.time_offset != model.total_steps) {
        throw sequencing_error("block at offset " + std::to_string(block.time_offset) +
                               " is out of order; expected " + std::to_string(model.total_steps));
    }
    if (block.steps < model.order + 1) {
        throw sequencing_error("block shorter than P+1 = " + std::to_string(model.order + 1));
    }
    fit_block_into_model(model, block, false);
}

EnsembleBlock emulate(const OsgModel& model, int members, std::uint64_t seed, long start,
                      long length) {
    if (length < 0) length = model.total_steps - start;
    if (start < 0 || start + length > model.total_steps) {
        throw config_error("requested emulation range [" + std::to_string(start) + ", " +
                           std::to_string(start + length) + ") exceeds the trained range of " +
                           std::to_string(model.total_steps) + " steps");
    }
    if (members < 0) throw config_error("emulation member count must be nonnegative");

    const int count = model.basis_count();
    const auto omega = model_omega(model);
    const auto h = model_h(model);

    EnsembleBlock out;
    out.ensembles = members;
    out.steps = static_cast<int>(length);
    out.time_offset = start;
    out.fingerprint = model.basis.fingerprint;
    const Eigen::Index cells = model.basis.masked_count();
    for (auto var : {0, 1}) out.values[var].resize(cells, static_cast<Eigen::Index>(members) * length);

    GaussianSampler rng(seed);
    for (int r = 0; r < members; ++r) {
        Eigen::MatrixXd sim = simulate_var(model.var, length, rng);
        for (auto var : {0, 1}) {
            Eigen::MatrixXd coeff = sim.middleRows(var * count, count);
            for (Eigen::Index a = 0; a < count; ++a) {
                const double g =
                    model.options.tgh ? model.g_states[var][static_cast<std::size_t>(a)].g : 0.0;
                for (Eigen::Index c = 0; c < coeff.cols(); ++c) {
                    coeff(a, c) = tukey_gh_forward(coeff(a, c), omega[var][a], g, h[var][a]);
                }
            }
            Eigen::MatrixXd field = model.basis.samples * coeff;
            for (Eigen::Index t = 0; t < length; ++t) {
                for (Eigen::Index cell = 0; cell < cells; ++cell) {
                    field(cell, t) += model.resid_sd[var](cell, start + t) * rng() +
                                      model.mean[var](cell, start + t);
                }
            }
            out.values[var].middleCols(static_cast<Eigen::Index>(r) * length, length) = field;
        }
    }
    return out;
}

long long parameter_count(long steps, long masked_cells, int basis_count, int order) {
    return 4ll * steps * masked_cells + 4ll * basis_count +
           4ll * (order + 1) * basis_count * basis_count;
}

std::array<Eigen::VectorXd, 2> model_omega(const OsgModel& model) {
    return params_from_moments(model.moments.gamma, model.moments.kappa, true);
}

std::array<Eigen::VectorXd, 2> model_h(const OsgModel& model) {
    return params_from_moments(model.moments.gamma, model.moments.kappa, false);
}

}  // namespace osg

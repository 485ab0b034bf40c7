#include "osg/slepian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "osg/errors.hpp"
#include "osg/harmonics.hpp"

namespace osg {

ConcentrationMatrix build_concentration_matrix(const RegionGrid& grid, int band_limit) {
    const Eigen::MatrixXd H = harmonic_matrix(grid, band_limit);
    const auto cells = grid.masked_cells();
    const Eigen::VectorXd w = grid.masked_weights();

    Eigen::MatrixXd scaled(cells.size(), H.cols());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        scaled.row(static_cast<Eigen::Index>(i)) = std::sqrt(w[static_cast<Eigen::Index>(i)]) * H.row(cells[i]);
    }

    ConcentrationMatrix conc;
    conc.band_limit = band_limit;
    conc.fingerprint = grid_fingerprint(grid);
    // Gram product keeps C exactly symmetric.
    conc.matrix = Eigen::MatrixXd::Zero(H.cols(), H.cols());
    conc.matrix.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    conc.matrix.triangularView<Eigen::StrictlyUpper>() = conc.matrix.transpose();
    return conc;
}

SlepianBasis solve_concentration(const ConcentrationMatrix& conc, const RegionGrid& grid) {
    if (conc.fingerprint != grid_fingerprint(grid)) {
        throw config_error("concentration matrix fingerprint does not match grid");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(conc.matrix);
    if (solver.info() != Eigen::Success) {
        throw numerical_error("eigendecomposition of the concentration matrix failed (dim " +
                              std::to_string(conc.matrix.rows()) + ", trace " +
                              std::to_string(conc.matrix.trace()) + ")");
    }

    const Eigen::Index n = conc.matrix.rows();
    SlepianBasis basis;
    basis.band_limit = conc.band_limit;
    basis.fingerprint = conc.fingerprint;
    basis.masked_cells = grid.masked_cells();
    basis.masked_weights = grid.masked_weights();
    basis.shannon = shannon_number(grid.area_fraction(), conc.band_limit);

    basis.eigenvalues.resize(n);
    basis.spectral.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        const Eigen::Index src = n - 1 - a;  // solver returns ascending order
        basis.eigenvalues[a] = std::clamp(solver.eigenvalues()[src], 0.0, 1.0);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        for (Eigen::Index k = 0; k < n; ++k) {
            if (std::abs(v[k]) > 1e-12) {
                if (v[k] < 0.0) v = -v;
                break;
            }
        }
        basis.spectral.col(a) = v;
    }

    const Eigen::MatrixXd H = harmonic_matrix(grid, conc.band_limit);
    Eigen::MatrixXd H_mask(basis.masked_cells.size(), H.cols());
    for (std::size_t i = 0; i < basis.masked_cells.size(); ++i) {
        H_mask.row(static_cast<Eigen::Index>(i)) = H.row(basis.masked_cells[i]);
    }
    basis.samples = H_mask * basis.spectral;
    return basis;
}

double shannon_number(double area_fraction, int band_limit) {
    if (!(area_fraction > 0.0) || area_fraction > 1.0) {
        throw config_error("area fraction must lie in (0, 1]");
    }
    return area_fraction * static_cast<double>(band_limit) * band_limit;
}

int select_basis_count(const Eigen::VectorXd& eigenvalues, double threshold) {
    int count = 0;
    for (Eigen::Index a = 0; a < eigenvalues.size(); ++a) {
        if (eigenvalues[a] >= threshold) count = static_cast<int>(a) + 1;
    }
    if (count == 0) {
        throw config_error("no eigenvalue reaches the concentration threshold " +
                           std::to_string(threshold));
    }
    return count;
}

SlepianBasis truncate_basis(const SlepianBasis& basis, int count) {
    if (count < 1 || count > basis.count()) throw config_error("basis count out of range");
    SlepianBasis out = basis;
    out.eigenvalues = basis.eigenvalues.head(count);
    out.spectral = basis.spectral.leftCols(count);
    out.samples = basis.samples.leftCols(count);
    return out;
}

SlepianAnalyzer::SlepianAnalyzer(const SlepianBasis& basis) : basis_(&basis) {
    if (basis.count() > basis.masked_count()) {
        throw numerical_error("analysis is ill-posed: " + std::to_string(basis.count()) +
                              " basis functions exceed " + std::to_string(basis.masked_count()) +
                              " masked cells");
    }
    qr_.compute(basis.samples);
    if (qr_.rank() < basis.count()) {
        throw numerical_error("analysis is ill-posed: basis samples are rank-deficient (rank " +
                              std::to_string(qr_.rank()) + " of " + std::to_string(basis.count()) + ")");
    }
}

Eigen::MatrixXd SlepianAnalyzer::coefficients(const Eigen::MatrixXd& z) const {
    if (z.rows() != basis_->masked_count()) {
        throw config_error("field rows do not match the basis mask size");
    }
    return qr_.solve(z);
}

Eigen::MatrixXd synthesize(const Eigen::MatrixXd& coefficients, const SlepianBasis& basis) {
    if (coefficients.rows() != basis.count()) {
        throw config_error("coefficient rows do not match the basis count");
    }
    return basis.samples * coefficients;
}

}  // namespace osg

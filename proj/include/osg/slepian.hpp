#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "osg/grid.hpp"

namespace osg {

// Gram matrix of the band-limited harmonics over the region:
// C[k,k'] = sum_{masked c} w_c H[c,k] H[c,k'].
struct ConcentrationMatrix {
    Eigen::MatrixXd matrix;  // Q^2 x Q^2, symmetric
    int band_limit = 0;
    std::uint64_t fingerprint = 0;
};

// Eigenpairs of the concentration matrix, sorted by decreasing eigenvalue.
// Columns of `spectral` are the harmonic coefficients of each basis function;
// `samples` holds the basis evaluated on masked grid cells.
struct SlepianBasis {
    Eigen::VectorXd eigenvalues;      // concentration fractions, descending
    Eigen::MatrixXd spectral;         // G: Q^2 x A
    Eigen::MatrixXd samples;          // B_mask: nMaskCells x A
    std::vector<Eigen::Index> masked_cells;
    Eigen::VectorXd masked_weights;
    int band_limit = 0;
    double shannon = 0.0;             // (area fraction) * Q^2
    std::uint64_t fingerprint = 0;

    Eigen::Index count() const { return spectral.cols(); }
    Eigen::Index masked_count() const { return samples.rows(); }
};

// Slepian coefficients of one time block for both variables. coeff[v] is an
// A x (R*tau) matrix whose column r*tau + t holds the coefficient vector of
// ensemble r at local time t.
struct CoefficientBlock {
    int ensembles = 0;  // R
    int steps = 0;      // tau
    std::array<Eigen::MatrixXd, 2> coeff;

    Eigen::Index count() const { return coeff[0].rows(); }  // A
};

ConcentrationMatrix build_concentration_matrix(const RegionGrid& grid, int band_limit);

// Full eigendecomposition (all Q^2 columns). Eigenvalues are clamped to
// [0, 1]; each eigenvector's sign is fixed so its first nonzero spectral
// coefficient is positive.
SlepianBasis solve_concentration(const ConcentrationMatrix& conc, const RegionGrid& grid);

// N = area_fraction * Q^2.
double shannon_number(double area_fraction, int band_limit);

// Largest count A with eigenvalue_A >= threshold (eigenvalues descending).
int select_basis_count(const Eigen::VectorXd& eigenvalues, double threshold = 0.01);

// First `count` columns of a basis.
SlepianBasis truncate_basis(const SlepianBasis& basis, int count);

// Least-squares projector onto the leading basis columns, factored once and
// reused across (variable, ensemble, time).
class SlepianAnalyzer {
  public:
    explicit SlepianAnalyzer(const SlepianBasis& basis);

    // Columns of z are fields on masked cells; returns the A x cols
    // coefficient matrix minimizing ||z - B s||^2 per column.
    Eigen::MatrixXd coefficients(const Eigen::MatrixXd& z) const;

    const SlepianBasis& basis() const { return *basis_; }

  private:
    const SlepianBasis* basis_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

// field = B_mask * s, one column per input column.
Eigen::MatrixXd synthesize(const Eigen::MatrixXd& coefficients, const SlepianBasis& basis);

}  // namespace osg

#pragma once

#include <Eigen/Dense>

#include "osg/grid.hpp"

namespace osg {

// Flat ordering of (degree q, order m): (0,0),(1,-1),(1,0),(1,1),(2,-2),...
// so that flat = q^2 + q + m. A band limit Q spans degrees 0..Q-1 and Q^2
// flat indices.
struct HarmonicIndex {
    int degree = 0;
    int order = 0;

    int flat() const { return degree * degree + degree + order; }
    static HarmonicIndex from_flat(int k);
};

// Real fully-normalized spherical harmonics, Condon-Shortley phase excluded:
//   h_q^0  = Pbar_q^0(cos theta)
//   h_q^m  = sqrt(2) Pbar_q^m(cos theta) cos(m psi),   m > 0
//   h_q^-m = sqrt(2) Pbar_q^m(cos theta) sin(m psi),   m > 0
// with int_{S^2} h_q^m h_q'^m' dOmega = delta. h_0^0 = 1/sqrt(4pi).

// Evaluates all Q^2 harmonics at one point.
Eigen::VectorXd harmonic_row(double colatitude, double azimuth, int band_limit);

// H[c, k] = h_q^m(theta_c, psi_c) for every grid cell c (masked or not),
// cells flattened row-major. Columns follow HarmonicIndex::flat ordering.
Eigen::MatrixXd harmonic_matrix(const RegionGrid& grid, int band_limit);

// Largest allowed Q^2 (columns per cell row).
inline constexpr int kMaxHarmonicColumns = 250000;

}  // namespace osg

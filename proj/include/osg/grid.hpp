#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace osg {

// Regular latitude-longitude grid with a boolean region mask and midpoint
// quadrature weights. Cells are flattened row-major: cell = iLat * nLon + iLon.
// Colatitude theta = pi/2 - pi*L/180, azimuth psi = pi*l/180.
struct RegionGrid {
    Eigen::VectorXd latitudes;   // degrees, ascending
    Eigen::VectorXd longitudes;  // degrees, ascending
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // nLat x nLon
    Eigen::VectorXd colatitudes;  // radians, per latitude row
    Eigen::VectorXd azimuths;     // radians, per longitude column
    Eigen::MatrixXd weights;      // steradians, nLat x nLon

    Eigen::Index lat_count() const { return latitudes.size(); }
    Eigen::Index lon_count() const { return longitudes.size(); }
    Eigen::Index cell_count() const { return latitudes.size() * longitudes.size(); }

    // Flat indices of masked cells, ascending.
    std::vector<Eigen::Index> masked_cells() const;
    Eigen::Index masked_count() const { return mask.count(); }

    // Quadrature weights of the masked cells, in masked_cells() order.
    Eigen::VectorXd masked_weights() const;

    // Sum of masked weights / 4pi.
    double area_fraction() const;
};

// Validates the grid and fills the derived members (colatitudes, azimuths,
// weights). Spacing must be uniform along each axis; an axis with a single
// point borrows the other axis's spacing.
RegionGrid make_region_grid(Eigen::VectorXd latitudes, Eigen::VectorXd longitudes,
                            Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask);

// Midpoint-rule weights w_ij = cos(pi*L_i/180) * dTheta * dPsi for a grid that
// has already passed validation. Exposed separately for tests.
Eigen::MatrixXd quadrature_weights(const Eigen::VectorXd& latitudes,
                                   const Eigen::VectorXd& longitudes);

// Cell-centered global grid at the given spacing (degrees), all cells masked.
RegionGrid make_global_grid(double spacing_deg);

// Global grid with only cells of colatitude <= cap_radius_deg masked.
RegionGrid make_polar_cap_grid(double spacing_deg, double cap_radius_deg);

// FNV-1a hash over latitudes, longitudes and mask; identifies the region so
// bases, blocks and states can be checked for compatibility.
std::uint64_t grid_fingerprint(const RegionGrid& grid);

}  // namespace osg

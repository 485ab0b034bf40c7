#include "osg/grid.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "osg/errors.hpp"

namespace osg {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Uniform spacing of an ascending coordinate axis, or 0 if the axis has a
// single point. Relative deviations above 1e-9 are rejected.
double uniform_spacing(const Eigen::VectorXd& coords, const char* axis) {
    if (coords.size() < 2) return 0.0;
    const double step = coords[1] - coords[0];
    if (step <= 0.0) throw config_error(std::string(axis) + " coordinates must be strictly ascending");
    for (Eigen::Index i = 1; i + 1 < coords.size(); ++i) {
        const double d = coords[i + 1] - coords[i];
        if (std::abs(d - step) > 1e-9 * std::abs(step)) {
            throw config_error(std::string("non-uniform ") + axis + " spacing is unsupported");
        }
    }
    return step;
}

}  // namespace

Eigen::MatrixXd quadrature_weights(const Eigen::VectorXd& latitudes,
                                   const Eigen::VectorXd& longitudes) {
    double dlat = uniform_spacing(latitudes, "latitude");
    double dlon = uniform_spacing(longitudes, "longitude");
    if (dlat == 0.0) dlat = dlon;
    if (dlon == 0.0) dlon = dlat;
    if (dlat == 0.0) throw config_error("grid spacing cannot be inferred from a 1x1 grid");

    const double dtheta = dlat * kDegToRad;
    const double dpsi = dlon * kDegToRad;
    Eigen::MatrixXd w(latitudes.size(), longitudes.size());
    for (Eigen::Index i = 0; i < latitudes.size(); ++i) {
        const double lat = latitudes[i];
        if (std::abs(lat) >= 90.0) {
            throw config_error("latitude cell centers must lie strictly inside (-90, 90)");
        }
        w.row(i).setConstant(std::cos(lat * kDegToRad) * dtheta * dpsi);
    }
    return w;
}

RegionGrid make_region_grid(Eigen::VectorXd latitudes, Eigen::VectorXd longitudes,
                            Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask) {
    if (latitudes.size() == 0 || longitudes.size() == 0) throw config_error("empty grid axis");
    if (mask.rows() != latitudes.size() || mask.cols() != longitudes.size()) {
        throw config_error("mask shape does not match grid axes");
    }
    if (!mask.any()) throw config_error("region mask has no cells set");

    RegionGrid grid;
    grid.latitudes = std::move(latitudes);
    grid.longitudes = std::move(longitudes);
    grid.mask = std::move(mask);
    grid.weights = quadrature_weights(grid.latitudes, grid.longitudes);
    grid.colatitudes = (std::numbers::pi / 2.0) - grid.latitudes.array() * kDegToRad;
    grid.azimuths = grid.longitudes.array() * kDegToRad;
    return grid;
}

std::vector<Eigen::Index> RegionGrid::masked_cells() const {
    std::vector<Eigen::Index> cells;
    cells.reserve(static_cast<std::size_t>(mask.count()));
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.cols(); ++j) {
            if (mask(i, j)) cells.push_back(i * mask.cols() + j);
        }
    }
    return cells;
}

Eigen::VectorXd RegionGrid::masked_weights() const {
    Eigen::VectorXd w(masked_count());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.cols(); ++j) {
            if (mask(i, j)) w[k++] = weights(i, j);
        }
    }
    return w;
}

double RegionGrid::area_fraction() const {
    return masked_weights().sum() / (4.0 * std::numbers::pi);
}

RegionGrid make_global_grid(double spacing_deg) {
    if (spacing_deg <= 0.0 || spacing_deg > 90.0) throw config_error("grid spacing out of range");
    const auto nlat = static_cast<Eigen::Index>(std::llround(180.0 / spacing_deg));
    const auto nlon = static_cast<Eigen::Index>(std::llround(360.0 / spacing_deg));
    Eigen::VectorXd lats(nlat), lons(nlon);
    for (Eigen::Index i = 0; i < nlat; ++i) lats[i] = -90.0 + (i + 0.5) * spacing_deg;
    for (Eigen::Index j = 0; j < nlon; ++j) lons[j] = (j + 0.5) * spacing_deg;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(nlat, nlon);
    mask.setConstant(true);
    return make_region_grid(std::move(lats), std::move(lons), std::move(mask));
}

RegionGrid make_polar_cap_grid(double spacing_deg, double cap_radius_deg) {
    RegionGrid grid = make_global_grid(spacing_deg);
    const double theta_max = cap_radius_deg * kDegToRad;
    for (Eigen::Index i = 0; i < grid.lat_count(); ++i) {
        const bool inside = grid.colatitudes[i] <= theta_max + 1e-12;
        grid.mask.row(i).setConstant(inside);
    }
    if (!grid.mask.any()) throw config_error("polar cap mask is empty at this spacing");
    return grid;
}

std::uint64_t grid_fingerprint(const RegionGrid& grid) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    const auto nlat = grid.lat_count(), nlon = grid.lon_count();
    mix(&nlat, sizeof(nlat));
    mix(&nlon, sizeof(nlon));
    mix(grid.latitudes.data(), sizeof(double) * static_cast<std::size_t>(nlat));
    mix(grid.longitudes.data(), sizeof(double) * static_cast<std::size_t>(nlon));
    for (Eigen::Index i = 0; i < nlat; ++i) {
        for (Eigen::Index j = 0; j < nlon; ++j) {
            const unsigned char bit = grid.mask(i, j) ? 1 : 0;
            mix(&bit, 1);
        }
    }
    return h;
}

}  // namespace osg

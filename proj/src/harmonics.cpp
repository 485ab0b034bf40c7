#include "osg/harmonics.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "osg/errors.hpp"

namespace osg {

namespace {

// Fully normalized associated Legendre functions Pbar_q^m(cos theta) for all
// q < Q, m <= q, evaluated by the degree recurrence seeded at the sectoral
// term. Normalization: int_{S^2} (Pbar_q^m)^2 cos^2/sin^2 terms integrate to
// one once combined with the sqrt(2) cos/sin azimuth factors.
//
//   Pbar_0^0 = 1/sqrt(4pi)
//   Pbar_m^m = sin(theta) sqrt((2m+1)/(2m)) Pbar_{m-1}^{m-1}
//   Pbar_{m+1}^m = sqrt(2m+3) cos(theta) Pbar_m^m
//   Pbar_q^m = a_q^m [cos(theta) Pbar_{q-1}^m - b_q^m Pbar_{q-2}^m]
// with a_q^m = sqrt((4q^2-1)/(q^2-m^2)),
//      b_q^m = sqrt(((q-1)^2-m^2)/(4(q-1)^2-1)).
void normalized_legendre(double theta, int band_limit, std::vector<double>& out) {
    const int q_max = band_limit - 1;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    // out[m * band_limit + q] holds Pbar_q^m (q >= m), the rest unused.
    out.assign(static_cast<std::size_t>(band_limit) * band_limit, 0.0);

    double sectoral = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    for (int m = 0; m <= q_max; ++m) {
        if (m > 0) sectoral *= st * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
        double pqm2 = sectoral;  // Pbar_m^m
        out[static_cast<std::size_t>(m) * band_limit + m] = pqm2;
        if (m + 1 > q_max) continue;
        double pqm1 = std::sqrt(2.0 * m + 3.0) * ct * pqm2;  // Pbar_{m+1}^m
        out[static_cast<std::size_t>(m) * band_limit + m + 1] = pqm1;
        for (int q = m + 2; q <= q_max; ++q) {
            const double qq = static_cast<double>(q);
            const double a = std::sqrt((4.0 * qq * qq - 1.0) / (qq * qq - m * m));
            const double b = std::sqrt(((qq - 1.0) * (qq - 1.0) - m * m) /
                                       (4.0 * (qq - 1.0) * (qq - 1.0) - 1.0));
            const double pq = a * (ct * pqm1 - b * pqm2);
            out[static_cast<std::size_t>(m) * band_limit + q] = pq;
            pqm2 = pqm1;
            pqm1 = pq;
        }
    }
}

void check_band_limit(int band_limit) {
    if (band_limit < 1) throw config_error("band limit Q must be at least 1");
    const long long cols = static_cast<long long>(band_limit) * band_limit;
    if (cols > kMaxHarmonicColumns) {
        throw config_error("Q^2 = " + std::to_string(cols) + " exceeds the per-row cap of " +
                           std::to_string(kMaxHarmonicColumns));
    }
}

}  // namespace

HarmonicIndex HarmonicIndex::from_flat(int k) {
    const int q = static_cast<int>(std::floor(std::sqrt(static_cast<double>(k))));
    return HarmonicIndex{q, k - q * q - q};
}

Eigen::VectorXd harmonic_row(double colatitude, double azimuth, int band_limit) {
    check_band_limit(band_limit);
    std::vector<double> pbar;
    normalized_legendre(colatitude, band_limit, pbar);

    const double sqrt2 = std::numbers::sqrt2;
    Eigen::VectorXd row(static_cast<Eigen::Index>(band_limit) * band_limit);
    for (int q = 0; q < band_limit; ++q) {
        const int base = q * q + q;
        row[base] = pbar[static_cast<std::size_t>(q)];  // m = 0 slot of column m*Q+q with m=0
        for (int m = 1; m <= q; ++m) {
            const double p = pbar[static_cast<std::size_t>(m) * band_limit + q];
            row[base + m] = sqrt2 * p * std::cos(m * azimuth);
            row[base - m] = sqrt2 * p * std::sin(m * azimuth);
        }
    }
    return row;
}

Eigen::MatrixXd harmonic_matrix(const RegionGrid& grid, int band_limit) {
    check_band_limit(band_limit);
    const Eigen::Index n_lat = grid.lat_count();
    const Eigen::Index n_lon = grid.lon_count();
    const Eigen::Index cols = static_cast<Eigen::Index>(band_limit) * band_limit;
    Eigen::MatrixXd H(n_lat * n_lon, cols);

    const double sqrt2 = std::numbers::sqrt2;
    std::vector<double> pbar;
    // Azimuth factors are shared across latitude rows; Legendre terms are
    // shared across longitude columns.
    Eigen::MatrixXd cos_m(n_lon, band_limit), sin_m(n_lon, band_limit);
    for (Eigen::Index j = 0; j < n_lon; ++j) {
        for (int m = 0; m < band_limit; ++m) {
            cos_m(j, m) = std::cos(m * grid.azimuths[j]);
            sin_m(j, m) = std::sin(m * grid.azimuths[j]);
        }
    }
    for (Eigen::Index i = 0; i < n_lat; ++i) {
        normalized_legendre(grid.colatitudes[i], band_limit, pbar);
        for (Eigen::Index j = 0; j < n_lon; ++j) {
            const Eigen::Index cell = i * n_lon + j;
            for (int q = 0; q < band_limit; ++q) {
                const int base = q * q + q;
                H(cell, base) = pbar[static_cast<std::size_t>(q)];
                for (int m = 1; m <= q; ++m) {
                    const double p = sqrt2 * pbar[static_cast<std::size_t>(m) * band_limit + q];
                    H(cell, base + m) = p * cos_m(j, m);
                    H(cell, base - m) = p * sin_m(j, m);
                }
            }
        }
    }
    return H;
}

}  // namespace osg

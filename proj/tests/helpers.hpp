// Shared oracles for the test suite: closed-form quantities computed
// independently of the library code under test.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "coherald/grid.hpp"

namespace testing_oracles {

/// Normalized Hermite function of order n (0-based) at scaled coordinate:
///   h_n(x; b) = b^{1/4} psi_n(sqrt(b) x),  integral h_n^2 dx = 1,
/// built by the stable three-term recurrence on normalized functions.
inline Eigen::VectorXd hermite_mode(const coherald::SpatialGrid& grid, int n, double b) {
    const double root_b = std::sqrt(b);
    const double norm0 = std::pow(b, 0.25) / std::pow(std::numbers::pi, 0.25);
    Eigen::VectorXd prev(grid.n_points), cur(grid.n_points);
    for (int i = 0; i < grid.n_points; ++i) {
        const double u = root_b * grid.x(i);
        prev[i] = norm0 * std::exp(-0.5 * u * u);
        cur[i] = std::sqrt(2.0) * u * prev[i];
    }
    if (n == 0) return prev;
    for (int k = 2; k <= n; ++k) {
        for (int i = 0; i < grid.n_points; ++i) {
            const double u = root_b * grid.x(i);
            const double next =
                std::sqrt(2.0 / k) * u * cur[i] - std::sqrt((k - 1.0) / k) * prev[i];
            prev[i] = cur[i];
            cur[i] = next;
        }
    }
    return cur;
}

/// Weight of the j-th (1-based) mode of the geometric Schmidt spectrum.
inline double geometric_weight(double gamma0, int j) {
    const double mu = (2.0 * gamma0 - 1.0) / (2.0 * gamma0 + 1.0);
    return (1.0 - mu) * std::pow(mu, j - 1);
}

/// Entropy of the full geometric spectrum, in bits:
///   E = -log2(1 - mu) - mu/(1 - mu) log2(mu).
inline double geometric_entropy(double gamma0) {
    const double mu = (2.0 * gamma0 - 1.0) / (2.0 * gamma0 + 1.0);
    if (mu == 0.0) return 0.0;
    return -std::log2(1.0 - mu) - mu / (1.0 - mu) * std::log2(mu);
}

/// Root of the symmetric-slab TE dispersion relation for branch m (1-based),
///   k d - 2 atan2(sqrt(R^2 - k^2), k) = (m - 1) pi,
/// by plain bisection on (0, R). Independent of the library's solver.
inline double slab_branch_root(double core_width, double r, int m) {
    auto phase = [&](double k) {
        const double kc = std::sqrt(std::max(r * r - k * k, 0.0));
        return k * core_width - 2.0 * std::atan2(kc, k) - (m - 1) * std::numbers::pi;
    };
    double lo = 1e-14 * r;
    double hi = r;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phase(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline Eigen::VectorXd gaussian_profile(const coherald::SpatialGrid& grid, double sigma) {
    Eigen::VectorXd v(grid.n_points);
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.x(i);
        v[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    }
    return v;
}

}  // namespace testing_oracles

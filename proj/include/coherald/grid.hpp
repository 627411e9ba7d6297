// Uniform 1D sampling grid, quadrature, band-limited resampling and the
// deterministic sign convention shared by every sampled mode set.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "coherald/common.hpp"

namespace coherald {

/// Uniform grid x_i = x_min + i*dx, i = 0..n_points-1. All integrals in the
/// library are uniform-weight quadrature sums dx * sum(f_i); every sampled
/// function is assumed to have decayed at the window edges.
struct SpatialGrid {
    double x_min = 0.0;
    double dx = 0.0;
    int n_points = 0;

    SpatialGrid() = default;
    SpatialGrid(double x_min_, double dx_, int n_points_)
        : x_min(x_min_), dx(dx_), n_points(n_points_) {
        if (!(dx > 0.0)) throw std::invalid_argument("SpatialGrid: dx must be > 0");
        if (n_points < 2) throw std::invalid_argument("SpatialGrid: n_points must be >= 2");
    }

    /// Symmetric grid covering [-half_width, +half_width].
    static SpatialGrid centered(double half_width, int n_points) {
        if (!(half_width > 0.0))
            throw std::invalid_argument("SpatialGrid: half_width must be > 0");
        if (n_points < 2) throw std::invalid_argument("SpatialGrid: n_points must be >= 2");
        return SpatialGrid(-half_width, 2.0 * half_width / (n_points - 1), n_points);
    }

    double x(int i) const { return x_min + i * dx; }
    double x_max() const { return x(n_points - 1); }

    Eigen::VectorXd coordinates() const {
        Eigen::VectorXd c(n_points);
        for (int i = 0; i < n_points; ++i) c[i] = x(i);
        return c;
    }

    bool operator==(const SpatialGrid& other) const {
        return x_min == other.x_min && dx == other.dx && n_points == other.n_points;
    }
};

/// Quadrature inner product <a, b> = dx * sum a_i b_i.
inline double inner(const SpatialGrid& grid, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b) {
    if (a.size() != grid.n_points || b.size() != grid.n_points)
        throw std::invalid_argument("inner: vector length does not match grid");
    return grid.dx * a.dot(b);
}

inline double norm_squared(const SpatialGrid& grid, const Eigen::VectorXd& a) {
    return inner(grid, a, a);
}

/// Whittaker-Shannon evaluation of a sampled function at an arbitrary point.
/// Exact (up to edge truncation) for functions oversampled on `grid`; all
/// mode profiles in this library are heavily oversampled. Returns 0 outside
/// the sampling window.
inline double eval_sinc(const SpatialGrid& grid, const Eigen::VectorXd& values, double x) {
    const double u = (x - grid.x_min) / grid.dx;
    const int n = grid.n_points;
    if (u < -0.5 || u > n - 0.5) return 0.0;

    const double nearest = std::round(u);
    if (std::abs(u - nearest) < 1e-9) {
        const int i = static_cast<int>(nearest);
        if (i >= 0 && i < n) return values[i];
        return 0.0;
    }

    // sin(pi*(u-i)) = sin(pi*u) * (-1)^i
    const double s = std::sin(std::numbers::pi * u) / std::numbers::pi;
    double acc = 0.0;
    double sign = 1.0;
    for (int i = 0; i < n; ++i) {
        acc += sign * values[i] / (u - i);
        sign = -sign;
    }
    return s * acc;
}

/// Resample a function onto another grid by band-limited interpolation.
inline Eigen::VectorXd resample(const SpatialGrid& src, const Eigen::VectorXd& values,
                                const SpatialGrid& dst) {
    if (values.size() != src.n_points)
        throw std::invalid_argument("resample: vector length does not match grid");
    if (src == dst) return values;
    Eigen::VectorXd out(dst.n_points);
    for (int i = 0; i < dst.n_points; ++i) out[i] = eval_sinc(src, values, dst.x(i));
    return out;
}

/// Flip `v` so that its first local extremum from the left is positive.
/// Removes the arbitrary sign freedom of eigensolver output; extrema below
/// 1% of the peak are ignored so that tail noise cannot drive the choice.
/// Returns the multiplier that was applied (+1 or -1).
inline double fix_sign_first_extremum(Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak <= 0.0) return 1.0;
    const double floor = 0.01 * peak;
    for (int i = 1; i + 1 < n; ++i) {
        const double m = std::abs(v[i]);
        if (m >= floor && m >= std::abs(v[i - 1]) && m >= std::abs(v[i + 1])) {
            if (v[i] < 0.0) {
                v = -v;
                return -1.0;
            }
            return 1.0;
        }
    }
    // Monotone profile: fall back to the global extremum.
    int idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v[idx] < 0.0) {
        v = -v;
        return -1.0;
    }
    return 1.0;
}

/// Number of sign changes along the sampled profile, skipping samples below
/// rel_floor * max|v|.
inline int count_sign_changes(const Eigen::VectorXd& v, double rel_floor = 1e-6) {
    const double floor = rel_floor * v.cwiseAbs().maxCoeff();
    int changes = 0;
    double last = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) <= floor) continue;
        const double s = v[i] > 0.0 ? 1.0 : -1.0;
        if (last != 0.0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

}  // namespace coherald

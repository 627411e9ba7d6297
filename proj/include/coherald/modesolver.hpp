// Layered dielectric stacks and their guided TE modes: a finite-difference
// Helmholtz eigensolver for the multilayer array and a dispersion-relation
// solver for the symmetric three-layer slab.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "coherald/common.hpp"
#include "coherald/grid.hpp"

extern "C" {
// LAPACK: selected eigenpairs of a symmetric tridiagonal matrix (MRRR).
void dstevr_(const char* jobz, const char* range, const int* n, double* d, double* e,
             const double* vl, const double* vu, const int* il, const int* iu,
             const double* abstol, int* m, double* w, double* z, const int* ldz,
             int* isuppz, double* work, const int* lwork, int* iwork, const int* liwork,
             int* info);
}

namespace coherald::modes {

struct Layer {
    double thickness = 0.0;  // um
    double refractive_index = 0.0;
};

struct LayerStack {
    std::vector<Layer> layers;
    double wavelength = 0.0;  // um
    double background_index = 0.0;

    void validate() const {
        if (layers.empty()) throw validation_error("LayerStack: no layers");
        if (!(wavelength > 0.0)) throw validation_error("LayerStack: wavelength must be > 0");
        if (!(background_index > 1.0))
            throw validation_error("LayerStack: background index must be > 1");
        for (const Layer& l : layers) {
            if (!(l.thickness > 0.0)) throw validation_error("LayerStack: layer thickness <= 0");
            if (!(l.refractive_index > 1.0))
                throw validation_error("LayerStack: layer index must be > 1");
        }
    }
};

/// Per-layer index perturbation: i.i.d. Gaussian(0, delta), reproducible
/// from the seed alone.
struct DisorderSpec {
    double delta = 0.0;
    std::uint64_t seed = 0;
};

struct IndexProfile {
    SpatialGrid grid;
    Eigen::VectorXd n_values;
    double wavelength = 0.0;      // um
    double k0 = 0.0;              // 2 pi / wavelength
    double cladding_index = 0.0;  // minimum index outside the guiding region
};

struct GuidedModeSet {
    SpatialGrid grid;
    Eigen::VectorXd propagation_constants;  // um^-1, descending
    Eigen::MatrixXd profiles;               // columns, orthonormal under quadrature
    Eigen::VectorXd effective_indices;      // propagation_constants / k0

    int count() const { return static_cast<int>(propagation_constants.size()); }
};

struct SlabSpec {
    double core_width = 0.0;  // um
    double n_core = 0.0;
    double n_clad = 0.0;
    double wavelength = 0.0;  // um

    void validate() const {
        if (!(core_width > 0.0)) throw validation_error("SlabSpec: core_width must be > 0");
        if (!(wavelength > 0.0)) throw validation_error("SlabSpec: wavelength must be > 0");
        if (!(n_core > n_clad && n_clad > 1.0))
            throw validation_error("SlabSpec: need n_core > n_clad > 1");
    }

    double numerical_aperture() const {
        return std::sqrt(n_core * n_core - n_clad * n_clad);
    }
};

/// Sample a centered stack on a uniform grid with `padding` of background
/// material per side. The window is rounded outward to a whole number of
/// steps so dx equals grid_step exactly. A node on an interface belongs to
/// the layer on its right.
inline IndexProfile sample_profile(const LayerStack& stack, double grid_step, double padding) {
    stack.validate();
    if (!(grid_step > 0.0)) throw validation_error("sample_profile: grid_step must be > 0");
    if (!(padding >= 0.0)) throw validation_error("sample_profile: padding must be >= 0");

    double stack_width = 0.0;
    for (const Layer& l : stack.layers) stack_width += l.thickness;
    const double half = 0.5 * stack_width + padding;
    const int n_side = static_cast<int>(std::ceil(half / grid_step - 1e-12));
    SpatialGrid grid{-n_side * grid_step, grid_step, 2 * n_side + 1};

    std::vector<double> right_edge(stack.layers.size());
    double acc = -0.5 * stack_width;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        acc += stack.layers[l].thickness;
        right_edge[l] = acc;
    }

    IndexProfile profile;
    profile.grid = grid;
    profile.wavelength = stack.wavelength;
    profile.k0 = 2.0 * std::numbers::pi / stack.wavelength;
    profile.cladding_index = stack.background_index;
    profile.n_values.resize(grid.n_points);
    // A node nominally on an interface lands a few ulps to either side of it
    // depending on the window, the step, and the accumulated edge positions.
    // Snap within 1e-10 um so the assignment (on-interface belongs right) is
    // exact whenever the grid is commensurate with the layering.
    const double snap = 1e-10;
    std::size_t layer = 0;
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = (i - n_side) * grid_step;
        if (x < -0.5 * stack_width - snap || x >= 0.5 * stack_width - snap) {
            profile.n_values[i] = stack.background_index;
            continue;
        }
        while (layer + 1 < stack.layers.size() && x >= right_edge[layer] - snap) ++layer;
        profile.n_values[i] = stack.layers[layer].refractive_index;
    }
    return profile;
}

/// Alternating high/low stack of n_layers equal layers (high-index first and
/// last, so n_layers must be odd), each layer's index shifted by its own
/// Gaussian(0, delta) draw, padded on both sides by background material
/// (n_low unless overridden).
inline IndexProfile build_wga(int n_layers, double layer_thickness, double n_high,
                              double n_low, double wavelength, const DisorderSpec& disorder,
                              double grid_step, double padding,
                              double background_index = 0.0) {
    if (n_layers < 1 || n_layers % 2 == 0)
        throw validation_error("build_wga: n_layers must be odd and positive");
    if (!(disorder.delta >= 0.0)) throw validation_error("build_wga: delta must be >= 0");
    if (!(grid_step > 0.0 && grid_step <= layer_thickness / 8.0)) {
        std::ostringstream os;
        os << "build_wga: grid_step " << grid_step << " exceeds layer_thickness/8 = "
           << layer_thickness / 8.0;
        throw validation_error(os.str());
    }

    LayerStack stack;
    stack.wavelength = wavelength;
    stack.background_index = background_index > 0.0 ? background_index : n_low;
    stack.layers.resize(n_layers);
    for (int l = 0; l < n_layers; ++l)
        stack.layers[l] = {layer_thickness, l % 2 == 0 ? n_high : n_low};
    if (disorder.delta > 0.0) {
        std::mt19937_64 rng(disorder.seed);
        std::normal_distribution<double> gauss(0.0, disorder.delta);
        for (Layer& l : stack.layers) l.refractive_index += gauss(rng);
    }
    return sample_profile(stack, grid_step, padding);
}

/// Geometry and material bundle for the standard waveguide array; disorder
/// and seed stay separate so one geometry serves a whole ensemble.
struct WgaSpec {
    int layer_count = 101;
    double layer_thickness = 0.6;  // um
    double n_high = 3.225;
    double n_low = 2.986;
    double wavelength = 1.55;         // um
    double grid_step = 0.05;          // um
    double padding = 20.0;            // um
    double background_index = 0.0;    // 0: same as n_low
};

inline IndexProfile build_wga(const WgaSpec& spec, const DisorderSpec& disorder) {
    return build_wga(spec.layer_count, spec.layer_thickness, spec.n_high, spec.n_low,
                     spec.wavelength, disorder, spec.grid_step, spec.padding,
                     spec.background_index);
}

namespace detail {

struct TridiagonalEigen {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // unit Euclidean norm columns
};

/// Eigenpairs of the symmetric tridiagonal matrix (diag, off) with
/// eigenvalues in (vl, vu], via LAPACK dstevr. Counting pass first so the
/// eigenvector storage is sized exactly.
inline TridiagonalEigen tridiagonal_eigs_in(Eigen::VectorXd diag, Eigen::VectorXd off,
                                            double vl, double vu) {
    const int n = static_cast<int>(diag.size());
    const int izero = 0;
    const double abstol = 0.0;  // default tolerance
    int m = 0;
    int info = 0;

    auto run = [&](const char* jobz, double* w, double* z, int ldz, int* isuppz) {
        Eigen::VectorXd d = diag;
        Eigen::VectorXd e = off;
        int lwork = -1;
        int liwork = -1;
        double work_size = 0.0;
        int iwork_size = 0;
        dstevr_(jobz, "V", &n, d.data(), e.data(), &vl, &vu, &izero, &izero, &abstol, &m, w,
                z, &ldz, isuppz, &work_size, &lwork, &iwork_size, &liwork, &info);
        if (info != 0) throw std::runtime_error("dstevr workspace query failed");
        lwork = static_cast<int>(work_size);
        liwork = iwork_size;
        std::vector<double> work(static_cast<std::size_t>(lwork));
        std::vector<int> iwork(static_cast<std::size_t>(liwork));
        dstevr_(jobz, "V", &n, d.data(), e.data(), &vl, &vu, &izero, &izero, &abstol, &m, w,
                z, &ldz, isuppz, work.data(), &lwork, iwork.data(), &liwork, &info);
        if (info != 0) {
            std::ostringstream os;
            os << "dstevr failed with info = " << info;
            throw std::runtime_error(os.str());
        }
    };

    Eigen::VectorXd w(n);
    std::vector<int> isuppz(static_cast<std::size_t>(2 * n) + 2);
    double z_dummy = 0.0;
    run("N", w.data(), &z_dummy, 1, isuppz.data());

    TridiagonalEigen out;
    if (m == 0) return out;
    const int found = m;
    Eigen::MatrixXd z(n, found);
    run("V", w.data(), z.data(), n, isuppz.data());
    out.values = w.head(found);
    out.vectors = std::move(z);
    return out;
}

}  // namespace detail

/// Guided TE modes of an index profile: second-order central differences on
/// the interior nodes with zero boundary values, eigenvalues kappa^2
/// restricted to the bound band (cladding_index, max n). Modes come back
/// descending in kappa, quadrature-orthonormal, signs fixed. An empty set is
/// a valid result. Throws window_error if any retained mode has not decayed
/// to 1e-6 of its peak at the window edge.
inline GuidedModeSet solve_modes_fd(const IndexProfile& profile) {
    const SpatialGrid& grid = profile.grid;
    const int n_in = grid.n_points - 2;
    if (n_in < 1) throw validation_error("solve_modes_fd: grid too small");
    const double h = grid.dx;
    const double k0sq = profile.k0 * profile.k0;

    Eigen::VectorXd diag(n_in);
    for (int i = 0; i < n_in; ++i) {
        const double n = profile.n_values[i + 1];
        diag[i] = n * n * k0sq - 2.0 / (h * h);
    }
    Eigen::VectorXd off = Eigen::VectorXd::Constant(n_in, 1.0 / (h * h));

    GuidedModeSet set;
    set.grid = grid;
    const double n_max = profile.n_values.maxCoeff();
    if (!(n_max > profile.cladding_index)) {
        set.profiles.resize(grid.n_points, 0);
        return set;  // nothing can be guided
    }
    const double vl = profile.cladding_index * profile.cladding_index * k0sq;
    const double vu = n_max * n_max * k0sq;
    auto eig = detail::tridiagonal_eigs_in(std::move(diag), std::move(off), vl, vu);

    const int found = static_cast<int>(eig.values.size());
    set.propagation_constants.resize(found);
    set.profiles = Eigen::MatrixXd::Zero(grid.n_points, found);
    const double scale = 1.0 / std::sqrt(h);
    for (int j = 0; j < found; ++j) {
        const int src = found - 1 - j;  // ascending kappa^2 -> descending kappa
        set.propagation_constants[j] = std::sqrt(eig.values[src]);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(grid.n_points);
        u.segment(1, n_in) = eig.vectors.col(src) * scale;
        fix_sign_first_extremum(u);
        set.profiles.col(j) = u;

        const double peak = u.cwiseAbs().maxCoeff();
        const double edge = std::max(std::abs(u[1]), std::abs(u[grid.n_points - 2]));
        if (edge > 1e-6 * peak) {
            std::ostringstream os;
            os << "solve_modes_fd: mode " << j << " (n_eff = "
               << set.propagation_constants[j] / profile.k0 << ") has edge amplitude "
               << edge / peak << " of peak; enlarge the window padding";
            throw window_error(os.str());
        }
    }
    set.effective_indices = set.propagation_constants / profile.k0;
    return set;
}

/// Number of guided TE modes of a symmetric slab: floor(2 d NA / lambda) + 1.
inline int slab_mode_count(const SlabSpec& slab) {
    slab.validate();
    return static_cast<int>(std::floor(2.0 * slab.core_width * slab.numerical_aperture() /
                                       slab.wavelength)) +
           1;
}

namespace detail {

/// Reduced dispersion relation of mode m (1-based) of the symmetric slab:
///   phase(k) = k d - 2 atan(kc / k) - (m - 1) pi,
/// strictly increasing on (0, R) with kc = sqrt(R^2 - k^2), so each guided
/// branch has exactly one root.
inline double slab_phase(double k, double d, double r_sq, int m) {
    const double kc = std::sqrt(std::max(r_sq - k * k, 0.0));
    return k * d - 2.0 * std::atan2(kc, k) - (m - 1) * std::numbers::pi;
}

}  // namespace detail

/// TE modes of the symmetric three-layer slab, from the even/odd dispersion
/// relations. Roots are bracketed by a pi/(64 d) scan of the transverse
/// wavenumber and bisected to 1e-12 relative; fields are cosine/sine in the
/// core with matched exponential tails, sampled on `grid`; a final symmetric
/// orthonormalization absorbs the quadrature error of sampling the analytic
/// field (interfaces generally fall between nodes).
inline GuidedModeSet solve_slab_modes(const SlabSpec& slab, const SpatialGrid& grid) {
    slab.validate();
    const double d = slab.core_width;
    const double a = 0.5 * d;
    const double k0 = 2.0 * std::numbers::pi / slab.wavelength;
    const double r = k0 * slab.numerical_aperture();
    const double r_sq = r * r;
    const int count = slab_mode_count(slab);

    GuidedModeSet set;
    set.grid = grid;
    set.propagation_constants.resize(count);
    set.profiles.resize(grid.n_points, count);

    const double step = std::numbers::pi / (64.0 * d);
    for (int m = 1; m <= count; ++m) {
        double lo = 1e-12 * r;
        while (detail::slab_phase(lo + step, d, r_sq, m) < 0.0) lo += step;
        double hi = std::min(lo + step, r);
        while (hi - lo > 1e-12 * r) {
            const double mid = 0.5 * (lo + hi);
            (detail::slab_phase(mid, d, r_sq, m) < 0.0 ? lo : hi) = mid;
        }
        const double k = 0.5 * (lo + hi);
        const double kc = std::sqrt(std::max(r_sq - k * k, 0.0));
        set.propagation_constants[m - 1] =
            std::sqrt(slab.n_core * slab.n_core * k0 * k0 - k * k);

        const bool even = m % 2 == 1;
        const double core_edge = even ? std::cos(k * a) : std::sin(k * a);
        for (int i = 0; i < grid.n_points; ++i) {
            const double x = grid.x(i);
            if (std::abs(x) <= a) {
                set.profiles(i, m - 1) = even ? std::cos(k * x) : std::sin(k * x);
            } else {
                const double tail = core_edge * std::exp(-kc * (std::abs(x) - a));
                set.profiles(i, m - 1) = even || x > 0.0 ? tail : -tail;
            }
        }
    }

    // Loewdin S^{-1/2}: the closest orthonormal family to the sampled one.
    Eigen::MatrixXd overlap = set.profiles.transpose() * set.profiles * grid.dx;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(overlap);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
        throw std::runtime_error("solve_slab_modes: sampled modes are numerically dependent");
    set.profiles *= eig.eigenvectors() *
                    eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    eig.eigenvectors().transpose();
    for (int j = 0; j < count; ++j) {
        Eigen::VectorXd u = set.profiles.col(j);
        fix_sign_first_extremum(u);
        set.profiles.col(j) = u;
    }
    set.effective_indices = set.propagation_constants / k0;
    return set;
}

/// For each requested mode count, the slab of smallest core width supporting
/// exactly that count: the midpoint of the admissible width interval,
/// (2 m - 1) lambda / (4 NA).
inline std::vector<SlabSpec> select_tsw_family(const std::vector<int>& target_mode_counts,
                                               const SlabSpec& slab_template) {
    SlabSpec probe = slab_template;
    probe.core_width = 1.0;
    probe.validate();
    std::vector<SlabSpec> family;
    family.reserve(target_mode_counts.size());
    for (int m : target_mode_counts) {
        if (m < 1) throw std::domain_error("select_tsw_family: mode counts must be >= 1");
        SlabSpec s = slab_template;
        s.core_width = (2 * m - 1) * s.wavelength / (4.0 * s.numerical_aperture());
        family.push_back(s);
    }
    return family;
}

}  // namespace coherald::modes

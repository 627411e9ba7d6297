// Coupling of Schmidt modes to guided modes, imaging magnification and its
// optimization against the overlap factor F, and the heralded (filtered)
// reduced state of photon A.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "coherald/biphoton.hpp"
#include "coherald/common.hpp"
#include "coherald/grid.hpp"
#include "coherald/modesolver.hpp"

namespace coherald::herald {

/// Quadrature inner products between a source mode family (rows) and a
/// guided mode family (columns). row_capture is the guided-subspace power
/// per source mode; against an orthonormal guided set it cannot exceed 1.
struct CouplingMatrix {
    Eigen::MatrixXd entries;
    Eigen::VectorXd row_capture;

    int rows() const { return static_cast<int>(entries.rows()); }
    int cols() const { return static_cast<int>(entries.cols()); }
};

inline CouplingMatrix couple(const Eigen::MatrixXd& source_modes,
                             const modes::GuidedModeSet& guided, const SpatialGrid& grid) {
    if (!(guided.grid == grid))
        throw std::domain_error("couple: guided modes live on a different grid");
    if (source_modes.rows() != grid.n_points)
        throw std::invalid_argument("couple: source mode samples do not match grid");
    CouplingMatrix c;
    c.entries = source_modes.transpose() * guided.profiles * grid.dx;
    c.row_capture = c.entries.rowwise().squaredNorm();
    return c;
}

/// Imaging-system magnification g(y) -> g(y/Z)/sqrt(Z), evaluated on the
/// target grid by band-limited interpolation of the source samples. Norms
/// are preserved; more than 1e-6 relative power lost to the target window
/// raises truncation_error.
inline Eigen::MatrixXd magnify(const SpatialGrid& source_grid, const Eigen::MatrixXd& sources,
                               double z, const SpatialGrid& target_grid) {
    if (!(z > 0.0)) throw std::domain_error("magnify: Z must be > 0");
    if (sources.rows() != source_grid.n_points)
        throw std::invalid_argument("magnify: mode samples do not match grid");
    const double root_z = std::sqrt(z);
    Eigen::MatrixXd out(target_grid.n_points, sources.cols());
    for (int j = 0; j < sources.cols(); ++j) {
        const Eigen::VectorXd v = sources.col(j);
        for (int i = 0; i < target_grid.n_points; ++i)
            out(i, j) = eval_sinc(source_grid, v, target_grid.x(i) / z) / root_z;
        const double in_sq = norm_squared(source_grid, v);
        const double out_sq = norm_squared(target_grid, out.col(j));
        if (std::abs(out_sq - in_sq) > 1e-6 * in_sq) {
            std::ostringstream os;
            os << "magnify: mode " << j << " lost " << 1.0 - out_sq / in_sq
               << " of its power at Z = " << z << "; target window too small";
            throw truncation_error(os.str());
        }
    }
    return out;
}

/// Overlap factor F(Z) over a magnification scan and its maximizer.
struct MagnificationScan {
    Eigen::VectorXd z_values;
    Eigen::VectorXd f_values;
    double z_optimum = 0.0;
    double f_optimum = 0.0;
};

/// Logarithmically spaced scan grid, the default for optimize_magnification.
inline Eigen::VectorXd log_spaced(double lo, double hi, int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i)
        z[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return z;
}

namespace detail {

inline double overlap_factor(const SpatialGrid& source_grid, const Eigen::MatrixXd& sources,
                             const modes::GuidedModeSet& guided, double z) {
    const Eigen::MatrixXd mag = magnify(source_grid, sources, z, guided.grid);
    const CouplingMatrix d = couple(mag, guided, guided.grid);
    const int j_max = std::min(d.rows(), d.cols());
    double f = 1.0;
    for (int j = 0; j < j_max; ++j) f *= std::abs(d.entries(j, j));
    return f;
}

}  // namespace detail

/// Scan F(Z) = prod_j |d_jj| over z_grid (diagonal over the shorter mode
/// count, both families in their natural descending order), then sharpen the
/// best sample by golden-section search to 1e-3 in Z. Ties go to the
/// smallest Z.
inline MagnificationScan optimize_magnification(const SpatialGrid& source_grid,
                                                const Eigen::MatrixXd& schmidt_modes_b,
                                                const modes::GuidedModeSet& tsw_modes,
                                                const Eigen::VectorXd& z_grid) {
    if (schmidt_modes_b.cols() == 0 || tsw_modes.count() == 0)
        throw std::domain_error("optimize_magnification: empty mode set");
    if (z_grid.size() < 32)
        throw std::domain_error("optimize_magnification: need at least 32 scan samples");
    for (int i = 1; i < z_grid.size(); ++i)
        if (!(z_grid[i] > z_grid[i - 1]))
            throw std::domain_error("optimize_magnification: scan grid must be increasing");
    if (z_grid[0] > 0.25 || z_grid[z_grid.size() - 1] < 4.0)
        throw std::domain_error("optimize_magnification: scan must span [0.25, 4]");

    MagnificationScan scan;
    scan.z_values = z_grid;
    scan.f_values.resize(z_grid.size());
    int best = 0;
    for (int i = 0; i < z_grid.size(); ++i) {
        scan.f_values[i] = detail::overlap_factor(source_grid, schmidt_modes_b, tsw_modes,
                                                  z_grid[i]);
        if (scan.f_values[i] > scan.f_values[best]) best = i;
    }

    double lo = z_grid[std::max(best - 1, 0)];
    double hi = z_grid[std::min<int>(best + 1, z_grid.size() - 1)];
    scan.z_optimum = z_grid[best];
    scan.f_optimum = scan.f_values[best];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - inv_phi * (hi - lo);
    double b = lo + inv_phi * (hi - lo);
    double fa = detail::overlap_factor(source_grid, schmidt_modes_b, tsw_modes, a);
    double fb = detail::overlap_factor(source_grid, schmidt_modes_b, tsw_modes, b);
    while (hi - lo > 1e-3) {
        if (fa > fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = detail::overlap_factor(source_grid, schmidt_modes_b, tsw_modes, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = detail::overlap_factor(source_grid, schmidt_modes_b, tsw_modes, b);
        }
        const double z_in = fa > fb ? a : b;
        const double f_in = std::max(fa, fb);
        if (f_in > scan.f_optimum) {
            scan.f_optimum = f_in;
            scan.z_optimum = z_in;
        }
    }
    return scan;
}

/// Reduced state of photon A conditioned on detecting photon B in the first
/// M guided modes, in the Schmidt basis: density matrix proportional to
/// sqrt(L) I sqrt(L) with I(m,n) = sum_{j<=M} d_mj d_nj.
struct HeraldedState {
    Eigen::VectorXd schmidt_weights;
    Eigen::MatrixXd filter_matrix;
    double normalization = 0.0;
    int mode_count_kept = 0;

    /// Unit-trace density matrix in the Schmidt-mode basis.
    Eigen::MatrixXd density() const {
        const Eigen::VectorXd root = schmidt_weights.cwiseSqrt();
        return root.asDiagonal() * filter_matrix * root.asDiagonal() / normalization;
    }
};

inline HeraldedState herald_filter(const biphoton::SchmidtDecomposition& schmidt,
                                   const CouplingMatrix& d, int mode_count_kept) {
    if (mode_count_kept < 1 || mode_count_kept > d.cols())
        throw std::domain_error("herald_filter: kept mode count out of range");
    if (d.rows() != schmidt.retained())
        throw std::invalid_argument("herald_filter: coupling rows do not match Schmidt modes");
    HeraldedState state;
    state.schmidt_weights = schmidt.eigenvalues;
    const auto kept = d.entries.leftCols(mode_count_kept);
    state.filter_matrix = kept * kept.transpose();
    state.mode_count_kept = mode_count_kept;
    state.normalization =
        schmidt.eigenvalues.dot(state.filter_matrix.diagonal());
    if (state.normalization < 1e-12)
        throw std::domain_error("herald_filter: herald never fires (normalization ~ 0)");
    return state;
}

/// How the magnification is chosen in the full pipeline.
struct ImagingPolicy {
    bool optimize = true;
    double fixed_z = 1.0;     // used when optimize is false
    double scan_lo = 0.25;
    double scan_hi = 4.0;
    int scan_samples = 64;
};

struct HeraldPipelineConfig {
    int schmidt_points = 512;
    double schmidt_half_sigmas = 8.0;
    double epsilon_trunc = 1e-6;
    double tsw_half_width = 48.0;  // um
    int tsw_points = 2048;
    ImagingPolicy imaging;
    int keep_modes = 0;  // 0: all guided TSW modes
};

/// Everything the downstream stages need from one heralding setup.
struct HeraldPipeline {
    biphoton::SchmidtDecomposition schmidt;
    modes::GuidedModeSet tsw_modes;
    std::optional<MagnificationScan> scan;
    double z_used = 0.0;
    CouplingMatrix d;
    HeraldedState state;
};

/// schmidt_decompose -> solve_slab_modes -> choose Z -> couple -> filter.
inline HeraldPipeline run_herald_pipeline(const biphoton::GaussianBiphotonSpec& spec,
                                          const modes::SlabSpec& tsw,
                                          const HeraldPipelineConfig& config = {}) {
    HeraldPipeline p;
    const SpatialGrid schmidt_grid =
        biphoton::default_grid(spec, config.schmidt_points, config.schmidt_half_sigmas);
    p.schmidt = biphoton::schmidt_decompose(spec, schmidt_grid, config.epsilon_trunc);

    const SpatialGrid tsw_grid = SpatialGrid::centered(config.tsw_half_width, config.tsw_points);
    p.tsw_modes = modes::solve_slab_modes(tsw, tsw_grid);

    if (config.imaging.optimize) {
        const int lead = std::min(p.schmidt.retained(), p.tsw_modes.count());
        p.scan = optimize_magnification(
            schmidt_grid, p.schmidt.modes_b.leftCols(lead), p.tsw_modes,
            log_spaced(config.imaging.scan_lo, config.imaging.scan_hi,
                       config.imaging.scan_samples));
        p.z_used = p.scan->z_optimum;
    } else {
        p.z_used = config.imaging.fixed_z;
    }

    const Eigen::MatrixXd magnified =
        magnify(schmidt_grid, p.schmidt.modes_b, p.z_used, tsw_grid);
    p.d = couple(magnified, p.tsw_modes, tsw_grid);
    const int keep = config.keep_modes > 0 ? config.keep_modes : p.tsw_modes.count();
    p.state = herald_filter(p.schmidt, p.d, keep);
    return p;
}

/// Coherence measures of the heralded photon-A state.
inline biphoton::CoherenceSummary heralded_coherence(const biphoton::GaussianBiphotonSpec& spec,
                                                     const modes::SlabSpec& tsw,
                                                     const HeraldPipelineConfig& config = {}) {
    const HeraldPipeline p = run_herald_pipeline(spec, tsw, config);
    const auto g1 = biphoton::assemble_g1(p.schmidt.eigenvalues, p.schmidt.modes_a,
                                          p.schmidt.grid, p.state.filter_matrix);
    return biphoton::coherence_summary(g1);
}

}  // namespace coherald::herald

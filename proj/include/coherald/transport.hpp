// Guided-mode phase-evolution transport of the heralded photon through a
// waveguide array, effective beam widths, and disorder ensembles.
#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "coherald/biphoton.hpp"
#include "coherald/common.hpp"
#include "coherald/grid.hpp"
#include "coherald/herald.hpp"
#include "coherald/modesolver.hpp"

namespace coherald::transport {

struct IntensityProfile {
    SpatialGrid grid;
    Eigen::VectorXd values;  // um^-1, integrates to captured_fraction
    double z = 0.0;          // um
    double captured_fraction = 0.0;
};

/// Fixed-realization propagator. The density matrix in the guided basis,
/// B = c^T rho c, is eigendecomposed once; the state at any z is then a sum
/// of a few coherent amplitudes with per-mode phases exp(i z kappa), so each
/// evaluation is two dense products and no complex arithmetic.
class Propagator {
public:
    Propagator(const herald::HeraldedState& state, const herald::CouplingMatrix& c,
               const modes::GuidedModeSet& wga_modes)
        : grid_(wga_modes.grid), kappa_(wga_modes.propagation_constants),
          profiles_(wga_modes.profiles) {
        if (c.rows() != state.schmidt_weights.size())
            throw std::invalid_argument("Propagator: coupling rows do not match Schmidt modes");
        if (c.cols() != wga_modes.count())
            throw std::invalid_argument("Propagator: coupling columns do not match guided modes");

        const Eigen::MatrixXd b = c.entries.transpose() * state.density() * c.entries;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("Propagator: eigendecomposition failed");
        const Eigen::VectorXd w = eig.eigenvalues();
        const double w_max = w.size() ? std::max(w.maxCoeff(), 0.0) : 0.0;
        int rank = 0;
        for (int s = 0; s < w.size(); ++s)
            if (w[s] > 1e-14 * w_max) ++rank;
        states_.resize(kappa_.size(), rank);
        int col = 0;
        for (int s = 0; s < w.size(); ++s)
            if (w[s] > 1e-14 * w_max)
                states_.col(col++) = eig.eigenvectors().col(s) * std::sqrt(w[s]);

        captured_ = at(0.0).values.sum() * grid_.dx;
    }

    /// p_A(x, z) = sum_s |sum_i states(i, s) exp(i z kappa_i) u_i(x)|^2.
    IntensityProfile at(double z) const {
        if (!(z >= 0.0)) throw std::domain_error("Propagator: z must be >= 0");
        const Eigen::ArrayXd phase = z * kappa_.array();
        const Eigen::MatrixXd re = profiles_ * (phase.cos().matrix().asDiagonal() * states_);
        const Eigen::MatrixXd im = profiles_ * (phase.sin().matrix().asDiagonal() * states_);
        IntensityProfile p;
        p.grid = grid_;
        p.values = re.array().square().rowwise().sum() + im.array().square().rowwise().sum();
        p.z = z;
        p.captured_fraction = captured_;
        return p;
    }

    double captured_fraction() const { return captured_; }

private:
    SpatialGrid grid_;
    Eigen::VectorXd kappa_;
    Eigen::MatrixXd profiles_;
    Eigen::MatrixXd states_;  // eigenvectors of B scaled by sqrt(eigenvalue)
    double captured_ = 0.0;
};

inline IntensityProfile propagate_intensity(const herald::HeraldedState& state,
                                            const herald::CouplingMatrix& c,
                                            const modes::GuidedModeSet& wga_modes, double z) {
    return Propagator(state, c, wga_modes).at(z);
}

/// w_eff = (integral p)^2 / integral p^2, a participation-style width that
/// stays meaningful for multi-lobed profiles.
inline double effective_width(const IntensityProfile& p) {
    const double s1 = p.values.sum() * p.grid.dx;
    const double s2 = p.values.squaredNorm() * p.grid.dx;
    if (!(s1 > 0.0) || !(s2 > 0.0))
        throw std::domain_error("effective_width: intensity is identically zero");
    return s1 * s1 / s2;
}

enum class Averaging { ratio_then_average, average_then_ratio };

struct EnsembleSetup {
    modes::WgaSpec wga;
    double delta = 0.02;
    std::uint64_t master_seed = 0;
    Eigen::VectorXd z_samples;  // um
    int realizations = 100;
    int workers = 0;  // 0: one per hardware thread
    Averaging averaging = Averaging::ratio_then_average;
};

struct EnsembleResult {
    Eigen::VectorXd z_samples;
    Eigen::VectorXd mean_ratio;  // w_eff(z) / w_eff(0), ensemble mean
    Eigen::VectorXd stderr_ratio;
    int realization_count = 0;
    std::uint64_t master_seed = 0;
    double mean_captured_fraction = 0.0;
    std::vector<std::string> warnings;
};

inline Eigen::VectorXd uniform_z_samples(double z_max, int n) {
    if (n < 1 || !(z_max >= 0.0)) throw validation_error("uniform_z_samples: bad sampling");
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = n == 1 ? 0.0 : z_max * i / (n - 1);
    return z;
}

/// Disorder ensemble over independently seeded array realizations. Inputs
/// (decomposition, heralded state) are shared read-only; each realization r
/// gets the generator seed mix_seed(master_seed, r), so results are
/// bit-identical for a fixed master seed no matter the worker count or
/// completion order. Any realization failure aborts the run with the
/// realization index in the message.
inline EnsembleResult ensemble_run(const biphoton::SchmidtDecomposition& schmidt,
                                   const herald::HeraldedState& state,
                                   const EnsembleSetup& setup) {
    if (setup.realizations < 1)
        throw std::domain_error("ensemble_run: need at least one realization");
    if (setup.z_samples.size() < 1 || setup.z_samples.minCoeff() < 0.0)
        throw std::domain_error("ensemble_run: bad z samples");
    if (state.schmidt_weights.size() != schmidt.retained())
        throw std::invalid_argument("ensemble_run: heralded state does not match decomposition");

    // Geometry (and hence the grid) is disorder-independent: resample the
    // input modes onto the array grid once, outside the realization loop.
    const modes::IndexProfile geometry = modes::build_wga(setup.wga, {0.0, 0});
    Eigen::MatrixXd source(geometry.grid.n_points, schmidt.retained());
    for (int j = 0; j < schmidt.retained(); ++j)
        source.col(j) = resample(schmidt.grid, schmidt.modes_a.col(j), geometry.grid);

    const int n_z = static_cast<int>(setup.z_samples.size());
    const int r_count = setup.realizations;
    Eigen::MatrixXd widths(n_z, r_count);
    Eigen::VectorXd captured(r_count);
    std::vector<std::string> failures(static_cast<std::size_t>(r_count));

    auto run_one = [&](int r) {
        const modes::DisorderSpec disorder{setup.delta, mix_seed(setup.master_seed,
                                                                 static_cast<std::uint64_t>(r))};
        // Disorder can pull a state to just above the background index; such
        // a barely bound mode decays too slowly for the default window, so
        // widen it (deterministically) until the solver is satisfied.
        modes::WgaSpec wga = setup.wga;
        for (int attempt = 0;; ++attempt) {
            try {
                const modes::IndexProfile profile = modes::build_wga(wga, disorder);
                const modes::GuidedModeSet wga_modes = modes::solve_modes_fd(profile);
                Eigen::MatrixXd widened;
                const Eigen::MatrixXd* src = &source;
                if (!(profile.grid == geometry.grid)) {
                    widened.resize(profile.grid.n_points, schmidt.retained());
                    for (int j = 0; j < schmidt.retained(); ++j)
                        widened.col(j) =
                            resample(schmidt.grid, schmidt.modes_a.col(j), profile.grid);
                    src = &widened;
                }
                const herald::CouplingMatrix c = herald::couple(*src, wga_modes, profile.grid);
                const Propagator prop(state, c, wga_modes);
                for (int iz = 0; iz < n_z; ++iz)
                    widths(iz, r) = effective_width(prop.at(setup.z_samples[iz]));
                captured[r] = prop.captured_fraction();
                return;
            } catch (const window_error&) {
                if (attempt >= 3) throw;
                wga.padding *= 2.0;
            }
        }
    };

    int workers = setup.workers > 0 ? setup.workers
                                    : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, r_count));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int r = next.fetch_add(1); r < r_count; r = next.fetch_add(1)) {
            try {
                run_one(r);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(r)] = e.what();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    for (int r = 0; r < r_count; ++r) {
        if (!failures[static_cast<std::size_t>(r)].empty()) {
            std::ostringstream os;
            os << "ensemble_run: realization " << r << " failed: "
               << failures[static_cast<std::size_t>(r)];
            throw std::runtime_error(os.str());
        }
    }

    EnsembleResult out;
    out.z_samples = setup.z_samples;
    out.realization_count = r_count;
    out.master_seed = setup.master_seed;
    out.mean_ratio.resize(n_z);
    out.stderr_ratio.resize(n_z);

    Eigen::MatrixXd ratios(n_z, r_count);
    if (setup.averaging == Averaging::ratio_then_average) {
        for (int r = 0; r < r_count; ++r) ratios.col(r) = widths.col(r) / widths(0, r);
    } else {
        const double w0 = widths.row(0).mean();
        ratios = widths / w0;
    }
    for (int iz = 0; iz < n_z; ++iz) {
        const double mean = ratios.row(iz).mean();
        out.mean_ratio[iz] = mean;
        if (r_count > 1 && setup.delta > 0.0) {
            const double ss = (ratios.row(iz).array() - mean).square().sum();
            out.stderr_ratio[iz] = std::sqrt(ss / (r_count - 1)) / std::sqrt(double(r_count));
        } else {
            out.stderr_ratio[iz] = 0.0;  // no randomness, no spread
        }
    }
    out.mean_captured_fraction = captured.mean();
    if (out.mean_captured_fraction < 0.9) {
        std::ostringstream os;
        os << "guided modes capture only " << out.mean_captured_fraction
           << " of the input power; radiation losses are not negligible";
        out.warnings.push_back(os.str());
    }
    return out;
}

}  // namespace coherald::transport

// Double-Gaussian two-photon amplitude: construction, Schmidt decomposition
// and first-order coherence measures of the reduced single-photon state.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "coherald/common.hpp"
#include "coherald/grid.hpp"

namespace coherald::biphoton {

/// Parameters of the two-photon amplitude
///   Psi(x, y) ~ exp(-alpha (x+y)^2 - beta (x-y)^2),
/// expressed through the rms beam width sigma0 of photon A and the
/// beam-width / spatial-bandwidth product gamma0 (the incoherence).
/// The identities alpha + beta = gamma0^2 / sigma0^2 and
/// alpha * beta = gamma0^2 / (16 sigma0^4) hold for any valid spec.
struct GaussianBiphotonSpec {
    double sigma0 = 0.0;  // um
    double gamma0 = 0.0;
    double alpha = 0.0;  // um^-2
    double beta = 0.0;   // um^-2
};

/// Map (sigma0, gamma0) to the Gaussian correlation parameters. The branch
/// with alpha >= beta is returned; the other branch merely swaps the two and
/// leaves every single-photon quantity unchanged.
inline std::pair<double, double> derive_alpha_beta(double sigma0, double gamma0) {
    if (!(sigma0 > 0.0)) throw std::domain_error("derive_alpha_beta: sigma0 must be > 0");
    if (!(gamma0 >= 0.5))
        throw std::domain_error("derive_alpha_beta: gamma0 must be >= 0.5");
    const double radical = gamma0 * std::sqrt(4.0 * gamma0 * gamma0 - 1.0);
    const double s = 1.0 / (4.0 * sigma0 * sigma0);
    return {s * (2.0 * gamma0 * gamma0 + radical), s * (2.0 * gamma0 * gamma0 - radical)};
}

inline GaussianBiphotonSpec make_spec(double sigma0, double gamma0) {
    auto [alpha, beta] = derive_alpha_beta(sigma0, gamma0);
    return {sigma0, gamma0, alpha, beta};
}

/// Default decomposition grid: +-8 sigma0 * max(1, sqrt(gamma0)), wide enough
/// to hold all Schmidt modes carrying weight above 1e-10 up to gamma0 = 3.
inline SpatialGrid default_grid(const GaussianBiphotonSpec& spec, int n_points = 512,
                                double half_width_sigmas = 8.0) {
    const double half = half_width_sigmas * spec.sigma0 * std::max(1.0, std::sqrt(spec.gamma0));
    return SpatialGrid::centered(half, n_points);
}

/// Sample Psi on grid_x (x) grid_y, normalized to unit L2 norm under the
/// product quadrature. Callers should cover at least +-6 sigma0 per axis;
/// the enforced contract is the mass check below, which throws
/// truncation_error if more than 1e-6 of the analytic Gaussian mass falls
/// outside the window.
inline Eigen::MatrixXd biphoton_kernel(const GaussianBiphotonSpec& spec,
                                       const SpatialGrid& grid_x, const SpatialGrid& grid_y) {
    Eigen::MatrixXd psi(grid_x.n_points, grid_y.n_points);
    for (int i = 0; i < grid_x.n_points; ++i) {
        const double x = grid_x.x(i);
        for (int j = 0; j < grid_y.n_points; ++j) {
            const double y = grid_y.x(j);
            const double p = x + y;
            const double m = x - y;
            psi(i, j) = std::exp(-spec.alpha * p * p - spec.beta * m * m);
        }
    }
    const double mass = psi.squaredNorm() * grid_x.dx * grid_y.dx;
    // Closed form of the full double integral of |Psi|^2.
    const double mass_exact = std::numbers::pi / (4.0 * std::sqrt(spec.alpha * spec.beta));
    if (mass < (1.0 - 1e-6) * mass_exact) {
        std::ostringstream os;
        os << "biphoton_kernel: " << (1.0 - mass / mass_exact)
           << " of the state lies outside the sampling window";
        throw truncation_error(os.str());
    }
    return psi / std::sqrt(mass);
}

/// Schmidt decomposition Psi(x, y) = sum_j sqrt(lambda_j) f_j(x) g_j(y).
/// Eigenvalues descending and summing (with the residual) to exactly 1;
/// both mode families orthonormal under grid quadrature.
struct SchmidtDecomposition {
    SpatialGrid grid;
    Eigen::VectorXd eigenvalues;  // descending, retained part only
    Eigen::MatrixXd modes_a;      // columns f_j, photon A
    Eigen::MatrixXd modes_b;      // columns g_j, photon B
    double truncation_residual = 0.0;

    int retained() const { return static_cast<int>(eigenvalues.size()); }
};

/// SVD of the quadrature-weighted sampled kernel. Keeps the smallest leading
/// set of modes whose weights sum to at least 1 - epsilon_trunc. Mode signs
/// follow the first-extremum convention on f_j, with the matching flip
/// applied to g_j so the reconstruction is untouched.
inline SchmidtDecomposition schmidt_decompose(const GaussianBiphotonSpec& spec,
                                              const SpatialGrid& grid,
                                              double epsilon_trunc = 1e-6) {
    if (!(epsilon_trunc > 0.0 && epsilon_trunc <= 0.01))
        throw std::domain_error("schmidt_decompose: epsilon_trunc must be in (0, 0.01]");
    const Eigen::MatrixXd psi = biphoton_kernel(spec, grid, grid);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(psi * grid.dx,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        std::ostringstream os;
        os << "schmidt_decompose: SVD failed on " << grid.n_points << "-point grid ["
           << grid.x_min << ", " << grid.x_max() << "]";
        throw std::runtime_error(os.str());
    }

    const Eigen::VectorXd sv = svd.singularValues();
    Eigen::VectorXd lambda = sv.array().square();
    lambda /= lambda.sum();  // unit total weight by construction

    int keep = 1;
    double cum = lambda[0];
    while (cum < 1.0 - epsilon_trunc && keep < lambda.size()) {
        cum += lambda[keep];
        ++keep;
    }

    SchmidtDecomposition out;
    out.grid = grid;
    out.eigenvalues = lambda.head(keep);
    out.truncation_residual = 1.0 - out.eigenvalues.sum();
    const double scale = 1.0 / std::sqrt(grid.dx);
    out.modes_a = svd.matrixU().leftCols(keep) * scale;
    out.modes_b = svd.matrixV().leftCols(keep) * scale;
    for (int j = 0; j < keep; ++j) {
        Eigen::VectorXd f = out.modes_a.col(j);
        const double flip = fix_sign_first_extremum(f);
        out.modes_a.col(j) = f;
        out.modes_b.col(j) *= flip;
    }
    return out;
}

/// Effective mode count K = (sum lambda)^2 / sum lambda^2.
inline double schmidt_number(const Eigen::VectorXd& eigenvalues) {
    if (eigenvalues.size() == 0)
        throw std::domain_error("schmidt_number: empty spectrum");
    if ((eigenvalues.array() < 0.0).any())
        throw std::domain_error("schmidt_number: negative eigenvalue");
    const double s1 = eigenvalues.sum();
    const double s2 = eigenvalues.squaredNorm();
    if (s2 == 0.0) throw std::domain_error("schmidt_number: all-zero spectrum");
    return s1 * s1 / s2;
}

/// Von Neumann entropy E = -sum lambda_j log2 lambda_j in bits. The spectrum
/// must be normalized; renormalize truncated spectra before calling.
inline double entanglement_entropy(const Eigen::VectorXd& eigenvalues) {
    if (eigenvalues.size() == 0)
        throw std::domain_error("entanglement_entropy: empty spectrum");
    if ((eigenvalues.array() < 0.0).any())
        throw std::domain_error("entanglement_entropy: negative eigenvalue");
    if (std::abs(eigenvalues.sum() - 1.0) > 1e-8)
        throw std::domain_error("entanglement_entropy: spectrum is not normalized");
    double e = 0.0;
    for (int j = 0; j < eigenvalues.size(); ++j) {
        const double l = eigenvalues[j];
        if (l > 0.0) e -= l * std::log2(l);
    }
    return e;
}

/// First-order correlation kernel G(x, x') of photon A, sampled on `grid`.
/// Real-symmetric here: all mode profiles in this library are real fields.
struct CorrelationKernel {
    SpatialGrid grid;
    Eigen::MatrixXd values;

    double trace() const { return values.diagonal().sum() * grid.dx; }
};

/// G(x, x') = sum_{m,n} sqrt(lambda_m lambda_n) I(m, n) f_n(x) f_m(x'),
/// renormalized to unit trace. With no filter I is the identity and this is
/// the unconditioned reduced state of photon A.
inline CorrelationKernel assemble_g1(const Eigen::VectorXd& eigenvalues,
                                     const Eigen::MatrixXd& modes_a, const SpatialGrid& grid,
                                     const std::optional<Eigen::MatrixXd>& filter = {}) {
    const auto n_modes = eigenvalues.size();
    if (modes_a.cols() != n_modes)
        throw std::invalid_argument("assemble_g1: mode count does not match spectrum");
    if (modes_a.rows() != grid.n_points)
        throw std::invalid_argument("assemble_g1: mode samples do not match grid");

    Eigen::MatrixXd weighted;  // sqrt(L) I sqrt(L)
    const Eigen::VectorXd root = eigenvalues.cwiseSqrt();
    if (filter) {
        if (filter->rows() != n_modes || filter->cols() != n_modes)
            throw std::invalid_argument("assemble_g1: filter dimensions do not match spectrum");
        weighted = root.asDiagonal() * (*filter) * root.asDiagonal();
    } else {
        weighted = eigenvalues.asDiagonal();
    }
    CorrelationKernel kernel{grid, modes_a * weighted * modes_a.transpose()};
    const double tr = kernel.trace();
    if (!(tr > 0.0)) throw std::domain_error("assemble_g1: kernel has non-positive trace");
    kernel.values /= tr;
    return kernel;
}

/// Beam width sigma, wave-number width W and their product gamma = sigma * W.
/// gamma = 0.5 is the fully coherent (minimum-uncertainty Gaussian) limit.
struct CoherenceSummary {
    double sigma = 0.0;  // um
    double W = 0.0;      // um^-1
    double gamma = 0.0;
};

namespace detail {

/// Spectral power |F[v]|^2 on the padded DFT frequency grid. Zero-padding to
/// >= pad_factor * n refines the wave-number sampling; the mode is already
/// negligible at the window edge so padding is exact.
inline Eigen::VectorXd padded_power_spectrum(const Eigen::VectorXd& v, int pad_factor,
                                             Eigen::VectorXd* q_out, double dx) {
    int m = 1;
    while (m < pad_factor * v.size()) m *= 2;
    std::vector<std::complex<double>> in(m, {0.0, 0.0});
    for (int i = 0; i < v.size(); ++i) in[i] = {v[i], 0.0};
    std::vector<std::complex<double>> out(m);
    Eigen::FFT<double> fft;
    fft.fwd(out, in);

    Eigen::VectorXd power(m);
    if (q_out) q_out->resize(m);
    const double dq = 2.0 * std::numbers::pi / (m * dx);
    for (int k = 0; k < m; ++k) {
        power[k] = std::norm(out[k]);
        if (q_out) (*q_out)[k] = dq * (k <= m / 2 ? k : k - m);
    }
    return power;
}

}  // namespace detail

/// Second-moment widths of a correlation kernel. sigma comes from the
/// diagonal in position space; W from the wave-number diagonal, assembled
/// from the zero-padded spectra of the kernel's own eigenmodes (identical to
/// transforming the full kernel, at O(N n log n) instead of O(n^2)).
inline CoherenceSummary coherence_summary(const CorrelationKernel& kernel) {
    const SpatialGrid& grid = kernel.grid;
    const Eigen::VectorXd diag = kernel.values.diagonal();
    const double tr = diag.sum();
    if (!(tr > 0.0)) throw std::domain_error("coherence_summary: kernel has non-positive trace");

    double m2 = 0.0;
    for (int i = 0; i < grid.n_points; ++i) {
        const double x = grid.x(i);
        m2 += x * x * diag[i];
    }
    const double sigma = std::sqrt(m2 / tr);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel.values);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("coherence_summary: eigendecomposition failed");
    const Eigen::VectorXd w = eig.eigenvalues();
    const double w_max = w.maxCoeff();

    Eigen::VectorXd q;
    Eigen::VectorXd spectrum;
    for (int k = 0; k < w.size(); ++k) {
        if (w[k] <= 1e-12 * w_max) continue;
        const Eigen::VectorXd power =
            detail::padded_power_spectrum(eig.eigenvectors().col(k), 4, q.size() ? nullptr : &q,
                                          grid.dx);
        if (spectrum.size() == 0)
            spectrum = w[k] * power;
        else
            spectrum += w[k] * power;
    }
    const double s0 = spectrum.sum();
    const double s2 = (q.array().square() * spectrum.array()).sum();
    const double W = std::sqrt(s2 / s0);

    CoherenceSummary out{sigma, W, sigma * W};
    if (out.gamma < 0.49)
        throw std::domain_error("coherence_summary: gamma below the physical bound 0.5");
    return out;
}

}  // namespace coherald::biphoton

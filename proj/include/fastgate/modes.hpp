#pragma once

// Equilibrium positions and axial normal modes of a chain of identical
// microtraps with one ion each, coupled by the linearized Coulomb force.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fastgate/errors.hpp"
#include "fastgate/physics.hpp"

namespace fastgate {

enum class EquilibriumMode {
    Relaxed,      // Newton solve of trap force against Coulomb repulsion
    TrapCenters,  // ions pinned at the trap minima i*d
};

enum class CouplingRange {
    All,               // every ion pair, 1/r^3 decay
    NearestNeighbour,  // ablation: drop all but adjacent-pair terms
};

struct ModeOptions {
    EquilibriumMode equilibrium = EquilibriumMode::Relaxed;
    CouplingRange coupling = CouplingRange::All;
    double force_tolerance = 1e-12;  // relative to M w^2 d
    int max_iterations = 100;
};

struct EquilibriumChain {
    std::vector<double> positions;     // m
    std::vector<double> trap_centers;  // m
    double residual_force_norm = 0.0;  // N, max-norm
};

struct ModeSpectrum {
    double trap_frequency = 0.0;     // rad/s
    double eta = 0.0;                // Lamb-Dicke parameter at trap_frequency
    std::vector<double> frequencies; // rad/s, ascending
    Eigen::MatrixXd mode_matrix;     // column m: amplitude of mode m on each ion
    std::vector<double> lamb_dicke_per_mode;

    int ion_count() const { return static_cast<int>(mode_matrix.rows()); }
    int mode_count() const { return static_cast<int>(frequencies.size()); }

    /// chi_m = (w_m - w) / w.
    double relative_shift(int m) const { return frequencies[m] / trap_frequency - 1.0; }
};

namespace detail {

// All quantities below are dimensionless: positions in units of d,
// forces in units of M w^2 d, stiffness in units of M w^2.

inline void require_ordered(const std::vector<double> &u) {
    for (std::size_t i = 1; i < u.size(); ++i) {
        if (!(u[i] > u[i - 1])) {
            throw SolverFailure("equilibrium positions lost their ordering", 0.0);
        }
    }
}

inline Eigen::VectorXd scaled_force_residual(const Eigen::VectorXd &u, double xi) {
    const Eigen::Index n = u.size();
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double coulomb = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const double r = u[i] - u[j];
            coulomb += 1.0 / (r * std::abs(r));
        }
        f[i] = (u[i] - static_cast<double>(i)) - coulomb / xi;
    }
    return f;
}

/// Mass-scaled Hessian divided by w^2.
inline Eigen::MatrixXd scaled_hessian(const std::vector<double> &u, double xi, CouplingRange range) {
    const auto n = static_cast<Eigen::Index>(u.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 1.0;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (range == CouplingRange::NearestNeighbour && j != i + 1) continue;
            const double r = std::abs(u[j] - u[i]);
            const double k = 2.0 / (xi * r * r * r);
            a(i, j) -= k;
            a(j, i) -= k;
            a(i, i) += k;
            a(j, j) += k;
        }
    }
    return a;
}

inline std::vector<double> solve_scaled_equilibrium(int n, double xi, const ModeOptions &opt,
                                                    double *residual_out = nullptr) {
    std::vector<double> centers(n);
    for (int i = 0; i < n; ++i) centers[i] = i;
    if (opt.equilibrium == EquilibriumMode::TrapCenters || std::isinf(xi)) {
        if (residual_out) *residual_out = 0.0;
        return centers;
    }
    Eigen::VectorXd u = Eigen::Map<Eigen::VectorXd>(centers.data(), n);
    double residual = scaled_force_residual(u, xi).lpNorm<Eigen::Infinity>();
    for (int it = 0; it < opt.max_iterations && residual >= opt.force_tolerance; ++it) {
        std::vector<double> uv(u.data(), u.data() + n);
        const Eigen::MatrixXd jac = scaled_hessian(uv, xi, CouplingRange::All);
        const Eigen::VectorXd step = jac.ldlt().solve(scaled_force_residual(u, xi));
        u -= step;
        residual = scaled_force_residual(u, xi).lpNorm<Eigen::Infinity>();
    }
    if (residual_out) *residual_out = residual;
    if (!(residual < opt.force_tolerance)) {
        throw SolverFailure("equilibrium Newton iteration did not converge", residual);
    }
    std::vector<double> out(u.data(), u.data() + n);
    require_ordered(out);
    return out;
}

/// Fix the eigenvector sign: positive component sum, or for zero-sum
/// vectors a positive first significant component.
inline void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
    const double sum = v.sum();
    double sign = 0.0;
    if (std::abs(sum) > 1e-8) {
        sign = sum > 0 ? 1.0 : -1.0;
    } else {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::abs(v[i]) > 1e-8) {
                sign = v[i] > 0 ? 1.0 : -1.0;
                break;
            }
        }
    }
    if (sign < 0) v = -v;
}

inline ModeSpectrum spectrum_from_hessian(const Eigen::MatrixXd &a, double trap_frequency,
                                          double eta) {
    if ((a - a.transpose()).cwiseAbs().maxCoeff() != 0.0) {
        throw InternalError("mode Hessian is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) {
        throw InternalError("symmetric eigendecomposition failed");
    }
    const Eigen::VectorXd &lambda = solver.eigenvalues();
    if (lambda.minCoeff() <= 0.0) {
        throw InternalError("mode Hessian is not positive definite");
    }
    ModeSpectrum s;
    s.trap_frequency = trap_frequency;
    s.eta = eta;
    s.mode_matrix = solver.eigenvectors();
    const auto n = a.rows();
    s.frequencies.resize(n);
    s.lamb_dicke_per_mode.resize(n);
    for (Eigen::Index m = 0; m < n; ++m) {
        canonicalize_sign(s.mode_matrix.col(m));
        s.frequencies[m] = trap_frequency * std::sqrt(lambda[m]);
        s.lamb_dicke_per_mode[m] = eta / std::sqrt(std::sqrt(lambda[m]));
    }
    return s;
}

}  // namespace detail

inline EquilibriumChain solve_equilibrium(const TrapArrayConfig &config, const ModeOptions &opt = {}) {
    const DerivedParams p = derive_params(config);
    double scaled_residual = 0.0;
    const auto u = detail::solve_scaled_equilibrium(config.ion_count, p.xi, opt, &scaled_residual);
    EquilibriumChain chain;
    chain.positions.reserve(u.size());
    chain.trap_centers.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        chain.positions.push_back(u[i] * config.spacing);
        chain.trap_centers.push_back(static_cast<double>(i) * config.spacing);
    }
    const double force_scale =
        config.species.mass * config.trap_frequency * config.trap_frequency * config.spacing;
    chain.residual_force_norm = scaled_residual * force_scale;
    return chain;
}

/// Normal modes of the configured chain.
inline ModeSpectrum mode_spectrum(const TrapArrayConfig &config, const ModeOptions &opt = {}) {
    const DerivedParams p = derive_params(config);
    const auto u = detail::solve_scaled_equilibrium(config.ion_count, p.xi, opt);
    return detail::spectrum_from_hessian(detail::scaled_hessian(u, p.xi, opt.coupling),
                                         config.trap_frequency, p.eta);
}

/// Normal modes of an N-ion chain specified directly by xi (d^3 w^2 / alpha).
inline ModeSpectrum chain_spectrum(int ion_count, double xi, double trap_frequency, double eta,
                                   const ModeOptions &opt = {}) {
    detail::require(ion_count >= 2, "ion_count must be >= 2");
    detail::require(xi > 0.0, "xi must be > 0");
    detail::require(trap_frequency > 0.0 && eta > 0.0, "trap_frequency and eta must be > 0");
    const auto u = detail::solve_scaled_equilibrium(ion_count, xi, opt);
    return detail::spectrum_from_hessian(detail::scaled_hessian(u, xi, opt.coupling),
                                         trap_frequency, eta);
}

/// The idealized two-ion spectrum {w, w(1+chi)} with modes (1,1)/sqrt2 and (1,-1)/sqrt2.
inline ModeSpectrum two_ion_spectrum(double chi, double eta, double trap_frequency) {
    detail::require(std::isfinite(chi) && chi >= 0.0, "chi must be finite and >= 0");
    detail::require(eta > 0.0 && trap_frequency > 0.0, "eta and trap_frequency must be > 0");
    ModeSpectrum s;
    s.trap_frequency = trap_frequency;
    s.eta = eta;
    const double h = std::sqrt(0.5);
    s.mode_matrix.resize(2, 2);
    s.mode_matrix << h, h, h, -h;
    s.frequencies = {trap_frequency, trap_frequency * (1.0 + chi)};
    s.lamb_dicke_per_mode = {eta, eta / std::sqrt(1.0 + chi)};
    return s;
}

}  // namespace fastgate

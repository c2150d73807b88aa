#pragma once

// Brute-force reference for the closed-form kick dynamics: each mode is
// propagated in a truncated number-state basis, alternating free evolution
// exp(-i w_m n t) with displacement operators exp(a a^dag - a^* a).
//
// For a fixed qubit basis state the modes evolve independently, so a
// product of single-mode simulations is the exact many-mode evolution.

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fastgate/dynamics.hpp"
#include "fastgate/errors.hpp"

namespace fastgate {

struct FockConfig {
    int truncation = 16;          // levels per mode for the first attempt
    double tolerance = 1e-9;      // norm deficit allowed, and fidelity convergence step
    int max_truncation = 1024;    // memory cap per mode
    int max_modes = 3;

    void validate() const {
        detail::require(truncation >= 8, "fock truncation must be >= 8");
        detail::require(tolerance > 0.0, "fock tolerance must be > 0");
        detail::require(max_truncation >= truncation, "max_truncation must be >= truncation");
    }
};

struct FockBranch {
    std::vector<Eigen::VectorXcd> mode_states;  // final state of every mode
    cplx vacuum_amplitude{1.0, 0.0};            // prod_m <0|psi_m>
    double phase = 0.0;                         // arg of the vacuum amplitude
    double norm_deficit = 0.0;                  // summed over modes and steps
    double max_step_loss = 0.0;
};

struct FockSimulation {
    int truncation = 0;
    std::array<FockBranch, 4> branches;  // basis order as basis_states

    /// Coefficient of s1 s2 in the vacuum-amplitude phase, from basis-state interference.
    double conditional_phase() const {
        const cplx ratio = branches[0].vacuum_amplitude * branches[3].vacuum_amplitude *
                           std::conj(branches[1].vacuum_amplitude) * std::conj(branches[2].vacuum_amplitude);
        return std::arg(ratio) / 4.0;
    }
};

namespace detail {

/// Spectral form of the truncated position operator X = a + a^dag, so that
/// exp(i c X) = V diag(e^{i c lambda}) V^T.
class QuadratureBasis {
  public:
    explicit QuadratureBasis(int dim) {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(dim, dim);
        for (int k = 0; k + 1 < dim; ++k) {
            x(k, k + 1) = x(k + 1, k) = std::sqrt(static_cast<double>(k + 1));
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(x);
        if (solver.info() != Eigen::Success) {
            throw InternalError("quadrature eigendecomposition failed");
        }
        vectors_ = solver.eigenvectors();
        values_ = solver.eigenvalues();
    }

    int dim() const { return static_cast<int>(values_.size()); }

    /// psi <- exp(i c X) psi.
    void displace(double c, Eigen::VectorXcd &psi) const {
        Eigen::VectorXcd coeff = vectors_.transpose() * psi;
        for (Eigen::Index k = 0; k < coeff.size(); ++k) {
            coeff[k] *= std::polar(1.0, c * values_[k]);
        }
        psi = vectors_ * coeff;
    }

  private:
    Eigen::MatrixXd vectors_;
    Eigen::VectorXd values_;
};

inline const QuadratureBasis &quadrature_basis(int dim) {
    thread_local std::map<int, std::unique_ptr<QuadratureBasis>> cache;
    auto &slot = cache[dim];
    if (!slot) slot = std::make_unique<QuadratureBasis>(dim);
    return *slot;
}

inline int padding_for(int dim) { return std::max(8, dim / 2); }

/// One mode, one basis state. Displacements act in a padded space and the
/// result is projected back onto `dim` levels; lost norm is the leakage.
inline Eigen::VectorXcd propagate_mode(const std::vector<Kick> &kicks, double omega, double coupling,
                                       int dim, double &deficit, double &max_step_loss) {
    const int ext = dim + padding_for(dim);
    const auto &basis = quadrature_basis(ext);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi[0] = 1.0;
    Eigen::VectorXcd work(ext);
    for (std::size_t j = 0; j < kicks.size(); ++j) {
        if (j > 0) {
            const double dt = kicks[j].time - kicks[j - 1].time;
            for (int k = 0; k < dim; ++k) psi[k] *= std::polar(1.0, -omega * k * dt);
        }
        // D(i c z) = exp(i c z (a + a^dag)) with c = eta_m B_m(s).
        work.setZero();
        work.head(dim) = psi;
        const double before = work.squaredNorm();
        basis.displace(coupling * kicks[j].weight, work);
        psi = work.head(dim);
        const double loss = before - psi.squaredNorm();
        deficit += loss;
        max_step_loss = std::max(max_step_loss, loss);
    }
    return psi;
}

}  // namespace detail

/// Propagate every qubit basis state at a single truncation.
inline FockSimulation simulate(const PulseSequence &seq, const ModeSpectrum &spectrum, const FockConfig &cfg,
                               int truncation) {
    cfg.validate();
    seq.validate();
    detail::check_pair(spectrum, seq.addressed_pair);
    detail::require(spectrum.mode_count() <= cfg.max_modes, "fock oracle supports at most max_modes modes");
    detail::require(truncation >= 8 && truncation <= cfg.max_truncation, "truncation outside [8, max_truncation]");

    FockSimulation sim;
    sim.truncation = truncation;
    for (int s = 0; s < 4; ++s) {
        const auto [s1, s2] = basis_states[s];
        FockBranch &br = sim.branches[s];
        for (int m = 0; m < spectrum.mode_count(); ++m) {
            const double c = spectrum.lamb_dicke_per_mode[m] *
                             detail::mode_coupling(spectrum, seq.addressed_pair, m, s1, s2);
            br.mode_states.push_back(detail::propagate_mode(seq.kicks, spectrum.frequencies[m], c, truncation,
                                                            br.norm_deficit, br.max_step_loss));
            br.vacuum_amplitude *= br.mode_states.back()[0];
        }
        br.phase = std::arg(br.vacuum_amplitude);
        if (br.norm_deficit > cfg.tolerance) {
            throw TruncationLeakage("fock truncation " + std::to_string(truncation) + " leaks norm " +
                                        std::to_string(br.norm_deficit),
                                    br.norm_deficit);
        }
    }
    return sim;
}

inline FockSimulation simulate(const PulseSequence &seq, const ModeSpectrum &spectrum, const FockConfig &cfg = {}) {
    return simulate(seq, spectrum, cfg, cfg.truncation);
}

/// <n> of a single-mode state.
inline double mean_occupation(const Eigen::VectorXcd &psi) {
    double n = 0.0;
    for (Eigen::Index k = 0; k < psi.size(); ++k) n += static_cast<double>(k) * std::norm(psi[k]);
    return n;
}

struct FockFidelity {
    double fidelity = 0.0;
    int truncation = 0;      // truncation at which the value converged
    double last_change = 0.0;
    FockSimulation simulation;
};

inline double fidelity_of(const FockSimulation &sim, const FidelityOptions &opt) {
    std::array<cplx, 4> amp{};
    for (int s = 0; s < 4; ++s) {
        const auto [s1, s2] = basis_states[s];
        amp[s] = sim.branches[s].vacuum_amplitude * std::polar(1.0, -opt.target_phase * s1 * s2);
    }
    return fidelity_from_amplitudes(amp, opt.averaging);
}

/// State-averaged fidelity from simulated states, doubling the truncation
/// until successive estimates agree to cfg.tolerance.
inline FockFidelity fidelity_oracle(const PulseSequence &seq, const ModeSpectrum &spectrum,
                                    const FockConfig &cfg = {}, const FidelityOptions &opt = {}) {
    cfg.validate();
    bool have_previous = false;
    double previous = 0.0;
    double change = INFINITY;
    for (int dim = cfg.truncation; dim <= cfg.max_truncation; dim *= 2) {
        FockSimulation sim;
        try {
            sim = simulate(seq, spectrum, cfg, dim);
        } catch (const TruncationLeakage &) {
            have_previous = false;
            continue;
        }
        const double f = fidelity_of(sim, opt);
        if (have_previous) {
            change = std::abs(f - previous);
            if (change < cfg.tolerance) {
                return {f, dim, change, std::move(sim)};
            }
        }
        previous = f;
        have_previous = true;
    }
    throw SolverFailure("fock fidelity did not converge below max_truncation", change);
}

}  // namespace fastgate

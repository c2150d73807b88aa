#pragma once

// Closed-form evaluation of a train of instantaneous state-dependent kicks:
// residual phase-space displacement of every mode, the accumulated
// two-qubit phase, and the state-averaged gate fidelity.
//
// A kick of weight z at time t displaces mode m by i*eta_m*B_m(s)*z*e^{i w_m t}
// in the interaction picture, where B_m(s) = b_{i,m} s1 + b_{i',m} s2 and
// s1, s2 are the sigma_z eigenvalues of the addressed pair. Composing
// displacements gives
//     Delta_m(s) = i eta_m B_m(s) C_m,         C_m = sum_j z_j e^{i w_m t_j}
//     phi(s)     = sum_m eta_m^2 B_m(s)^2 S_m, S_m = sum_{j<k} z_j z_k sin(w_m (t_k - t_j))

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fastgate/errors.hpp"
#include "fastgate/modes.hpp"

namespace fastgate {

using cplx = std::complex<double>;

struct Kick {
    double time = 0.0;  // s
    int weight = 0;     // signed number of counter-propagating pi-pulse pairs

    friend bool operator==(const Kick &, const Kick &) = default;
};

struct IonPair {
    int first = 0;
    int second = 1;

    friend bool operator==(const IonPair &, const IonPair &) = default;
};

struct PulseSequence {
    std::vector<Kick> kicks;
    IonPair addressed_pair;

    double gate_time() const {
        if (kicks.empty()) return 0.0;
        return kicks.back().time - kicks.front().time;
    }

    /// Gate time in trap periods.
    double tau(double trap_frequency) const {
        return trap_frequency * gate_time() / (2.0 * std::numbers::pi);
    }

    int total_pulse_pairs() const {
        int total = 0;
        for (const auto &k : kicks) total += std::abs(k.weight);
        return total;
    }

    void validate() const {
        for (std::size_t j = 0; j < kicks.size(); ++j) {
            detail::require(std::isfinite(kicks[j].time), "kick times must be finite");
            detail::require(kicks[j].weight != 0, "kick weights must be non-zero");
            if (j > 0) {
                detail::require(kicks[j].time >= kicks[j - 1].time, "kick times must be non-decreasing");
            }
        }
        detail::require(addressed_pair.first != addressed_pair.second,
                        "addressed pair must be two distinct ions");
    }
};

struct MotionalState {
    std::vector<double> mean_occupations;  // empty means ground state for every mode

    double occupation(int m) const {
        return m < static_cast<int>(mean_occupations.size()) ? mean_occupations[m] : 0.0;
    }
};

/// Convention for averaging the gate fidelity over input states.
enum class Averaging {
    Haar,     // uniform over pure two-qubit inputs: (sum|A|^2 + |sum A|^2) / 20
    Process,  // entanglement fidelity |sum A|^2 / 16
};

struct FidelityOptions {
    double target_phase = std::numbers::pi / 4.0;  // coefficient of s1 s2 in the target
    Averaging averaging = Averaging::Haar;
};

/// Qubit basis states ordered (++, +-, -+, --).
inline constexpr std::array<std::pair<int, int>, 4> basis_states{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

struct FidelityReport {
    std::array<std::vector<cplx>, 4> residual_displacements;  // [basis state][mode]
    std::array<double, 4> phases{};                           // phi(s), full quadratic phase
    double conditional_phase = 0.0;
    double fidelity = 0.0;
    double infidelity = 0.0;
};

namespace detail {

struct ModeSums {
    cplx closure;     // C_m
    double twist = 0; // S_m
};

inline ModeSums mode_sums(std::span<const Kick> kicks, double omega) {
    // S = Im sum_k z_k e^{i w t_k} conj(P_{k-1}) with P the prefix sum of C.
    ModeSums out{cplx(0.0, 0.0), 0.0};
    for (const auto &k : kicks) {
        const cplx e = std::polar(1.0, omega * k.time);
        const double z = k.weight;
        out.twist += z * std::imag(e * std::conj(out.closure));
        out.closure += z * e;
    }
    return out;
}

inline double mode_coupling(const ModeSpectrum &spec, const IonPair &pair, int m, int s1, int s2) {
    return spec.mode_matrix(pair.first, m) * s1 + spec.mode_matrix(pair.second, m) * s2;
}

inline void check_pair(const ModeSpectrum &spec, const IonPair &pair) {
    require(pair.first >= 0 && pair.first < spec.ion_count() && pair.second >= 0 &&
                pair.second < spec.ion_count() && pair.first != pair.second,
            "addressed pair lies outside the chain");
}

/// Infidelity from per-state log-decay x_s and phase error theta_s,
/// written as sums of non-negative terms so that small values keep
/// their relative precision.
inline double infidelity_from_amplitudes(const std::array<double, 4> &decay,
                                         const std::array<double, 4> &theta, Averaging avg) {
    double mismatch = 0.0;  // 16 - |sum A|^2
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            const double amp = std::exp(-(decay[a] + decay[b]));
            const double half = 0.5 * (theta[a] - theta[b]);
            mismatch += -std::expm1(-(decay[a] + decay[b])) + amp * 2.0 * std::sin(half) * std::sin(half);
        }
    }
    if (avg == Averaging::Process) {
        return mismatch / 16.0;
    }
    double loss = 0.0;  // 4 - sum |A|^2
    for (int a = 0; a < 4; ++a) loss += -std::expm1(-2.0 * decay[a]);
    return (loss + mismatch) / 20.0;
}

/// Allocation-free infidelity for a validated kick list; no report is built.
inline double kick_infidelity(std::span<const Kick> kicks, const ModeSpectrum &spectrum, const IonPair &pair,
                              const MotionalState &motional, const FidelityOptions &opt) {
    std::array<double, 4> decay{};
    std::array<double, 4> theta{};
    for (int m = 0; m < spectrum.mode_count(); ++m) {
        const auto sums = mode_sums(kicks, spectrum.frequencies[m]);
        const double eta2 = spectrum.lamb_dicke_per_mode[m] * spectrum.lamb_dicke_per_mode[m];
        const double thermal = 2.0 * motional.occupation(m) + 1.0;
        const double c2 = std::norm(sums.closure);
        for (int s = 0; s < 4; ++s) {
            const auto [s1, s2] = basis_states[s];
            const double b = mode_coupling(spectrum, pair, m, s1, s2);
            decay[s] += eta2 * b * b * c2 * thermal / 2.0;
            theta[s] += eta2 * b * b * sums.twist;
        }
    }
    for (int s = 0; s < 4; ++s) {
        const auto [s1, s2] = basis_states[s];
        theta[s] -= opt.target_phase * s1 * s2;
    }
    return infidelity_from_amplitudes(decay, theta, opt.averaging);
}

}  // namespace detail

/// C_m = sum_j z_j e^{i w_m t_j} for the given mode.
inline cplx mode_kick_sum(const PulseSequence &seq, const ModeSpectrum &spectrum, int mode) {
    detail::require(mode >= 0 && mode < spectrum.mode_count(), "mode index out of range");
    return detail::mode_sums(seq.kicks, spectrum.frequencies[mode]).closure;
}

/// Coefficient of s1*s2 in the accumulated phase.
inline double conditional_phase(const PulseSequence &seq, const ModeSpectrum &spectrum) {
    seq.validate();
    detail::check_pair(spectrum, seq.addressed_pair);
    double theta = 0.0;
    for (int m = 0; m < spectrum.mode_count(); ++m) {
        const double eta = spectrum.lamb_dicke_per_mode[m];
        const double coupling = spectrum.mode_matrix(seq.addressed_pair.first, m) *
                                spectrum.mode_matrix(seq.addressed_pair.second, m);
        theta += 2.0 * eta * eta * coupling * detail::mode_sums(seq.kicks, spectrum.frequencies[m]).twist;
    }
    return theta;
}

inline FidelityReport state_averaged_fidelity(const PulseSequence &seq, const ModeSpectrum &spectrum,
                                              const MotionalState &motional = {},
                                              const FidelityOptions &opt = {}) {
    seq.validate();
    detail::check_pair(spectrum, seq.addressed_pair);
    const int modes = spectrum.mode_count();
    FidelityReport report;
    std::array<double, 4> decay{};
    for (auto &r : report.residual_displacements) r.resize(modes);

    for (int m = 0; m < modes; ++m) {
        const auto sums = detail::mode_sums(seq.kicks, spectrum.frequencies[m]);
        const double eta = spectrum.lamb_dicke_per_mode[m];
        const double nbar = motional.occupation(m);
        detail::require(nbar >= 0.0, "mean occupations must be non-negative");
        for (int s = 0; s < 4; ++s) {
            const auto [s1, s2] = basis_states[s];
            const double b = detail::mode_coupling(spectrum, seq.addressed_pair, m, s1, s2);
            const cplx delta = cplx(0.0, eta * b) * sums.closure;
            report.residual_displacements[s][m] = delta;
            report.phases[s] += eta * eta * b * b * sums.twist;
            decay[s] += std::norm(delta) * (2.0 * nbar + 1.0) / 2.0;
        }
    }
    std::array<double, 4> theta{};
    for (int s = 0; s < 4; ++s) {
        const auto [s1, s2] = basis_states[s];
        theta[s] = report.phases[s] - opt.target_phase * s1 * s2;
    }
    report.conditional_phase =
        (report.phases[0] - report.phases[1] - report.phases[2] + report.phases[3]) / 4.0;
    report.infidelity = detail::infidelity_from_amplitudes(decay, theta, opt.averaging);
    report.fidelity = 1.0 - report.infidelity;
    return report;
}

/// Infidelity only; the hot path of the optimizer.
inline double gate_infidelity(const PulseSequence &seq, const ModeSpectrum &spectrum,
                              const MotionalState &motional = {}, const FidelityOptions &opt = {}) {
    seq.validate();
    detail::check_pair(spectrum, seq.addressed_pair);
    return detail::kick_infidelity(seq.kicks, spectrum, seq.addressed_pair, motional, opt);
}

/// Fidelity assembled from per-basis-state amplitudes A_s = <0|U_s|0> e^{-i target s1 s2}.
inline double fidelity_from_amplitudes(const std::array<cplx, 4> &amplitudes, Averaging avg) {
    cplx total(0.0, 0.0);
    double sum_sq = 0.0;
    for (const auto &a : amplitudes) {
        total += a;
        sum_sq += std::norm(a);
    }
    if (avg == Averaging::Process) return std::norm(total) / 16.0;
    return (sum_sq + std::norm(total)) / 20.0;
}

/// Analytic derivative of the infidelity with respect to every kick time.
inline std::vector<double> infidelity_time_gradient(const PulseSequence &seq, const ModeSpectrum &spectrum,
                                                    const MotionalState &motional = {},
                                                    const FidelityOptions &opt = {}) {
    seq.validate();
    detail::check_pair(spectrum, seq.addressed_pair);
    const int modes = spectrum.mode_count();
    const auto k = seq.kicks.size();

    // Forward pass: amplitudes.
    std::array<double, 4> decay{};
    std::array<double, 4> theta{};
    std::vector<detail::ModeSums> sums(modes);
    std::vector<std::array<double, 4>> decay_weight(modes);  // d x_s / d|C_m|^2
    std::vector<std::array<double, 4>> phase_weight(modes);  // d phi_s / d S_m
    for (int m = 0; m < modes; ++m) {
        sums[m] = detail::mode_sums(seq.kicks, spectrum.frequencies[m]);
        const double eta = spectrum.lamb_dicke_per_mode[m];
        const double nbar = motional.occupation(m);
        for (int s = 0; s < 4; ++s) {
            const auto [s1, s2] = basis_states[s];
            const double b = detail::mode_coupling(spectrum, seq.addressed_pair, m, s1, s2);
            decay_weight[m][s] = eta * eta * b * b * (2.0 * nbar + 1.0) / 2.0;
            phase_weight[m][s] = eta * eta * b * b;
            decay[s] += decay_weight[m][s] * std::norm(sums[m].closure);
            theta[s] += phase_weight[m][s] * sums[m].twist;
        }
    }
    std::array<cplx, 4> amp{};
    cplx total(0.0, 0.0);
    for (int s = 0; s < 4; ++s) {
        const auto [s1, s2] = basis_states[s];
        theta[s] -= opt.target_phase * s1 * s2;
        amp[s] = std::polar(std::exp(-decay[s]), theta[s]);
        total += amp[s];
    }
    // dI/dx_s and dI/dtheta_s.
    std::array<double, 4> d_decay{};
    std::array<double, 4> d_theta{};
    const bool haar = opt.averaging == Averaging::Haar;
    const double norm = haar ? 20.0 : 16.0;
    for (int s = 0; s < 4; ++s) {
        const double cross = std::real(std::conj(total) * amp[s]);
        const double dfdx = (haar ? -2.0 * std::norm(amp[s]) : 0.0) - 2.0 * cross;
        const double dfdt = 2.0 * std::real(std::conj(total) * cplx(0.0, 1.0) * amp[s]);
        d_decay[s] = -dfdx / norm;
        d_theta[s] = -dfdt / norm;
    }

    std::vector<double> grad(k, 0.0);
    for (int m = 0; m < modes; ++m) {
        const double omega = spectrum.frequencies[m];
        double g_norm = 0.0;   // dI / d|C_m|^2
        double g_twist = 0.0;  // dI / dS_m
        for (int s = 0; s < 4; ++s) {
            g_norm += d_decay[s] * decay_weight[m][s];
            g_twist += d_theta[s] * phase_weight[m][s];
        }
        const cplx c = sums[m].closure;
        cplx prefix(0.0, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            const cplx e = std::polar(1.0, omega * seq.kicks[j].time);
            const double z = seq.kicks[j].weight;
            const cplx after = c - prefix - z * e;
            const double d_norm = -2.0 * omega * z * std::imag(std::conj(c) * e);
            const double d_twist =
                omega * z * (std::real(e * std::conj(prefix)) - std::real(std::conj(e) * after));
            grad[j] += g_norm * d_norm + g_twist * d_twist;
            prefix += z * e;
        }
    }
    return grad;
}

}  // namespace fastgate

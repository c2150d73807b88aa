#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fastgate/dynamics.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/modes.hpp"
#include "fastgate/random.hpp"

using namespace fastgate;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double w = 2.0 * pi * 1e6;
constexpr double period = 2.0 * pi / w;

PulseSequence random_sequence(Rng &rng, int kicks, double span_periods) {
    PulseSequence seq;
    std::vector<double> t;
    for (int k = 0; k < kicks; ++k) t.push_back(rng.uniform(0.0, span_periods) * period);
    std::sort(t.begin(), t.end());
    for (double x : t) {
        int z = 1 + static_cast<int>(rng.below(5));
        seq.kicks.push_back({x, rng.uniform() < 0.5 ? -z : z});
    }
    return seq;
}

// Theta from the explicit pairwise double sum.
double pairwise_theta(const PulseSequence &seq, const ModeSpectrum &s) {
    double theta = 0.0;
    const auto [i, j] = seq.addressed_pair;
    for (int m = 0; m < s.mode_count(); ++m) {
        double sum = 0.0;
        for (std::size_t a = 0; a < seq.kicks.size(); ++a) {
            for (std::size_t b = a + 1; b < seq.kicks.size(); ++b) {
                sum += seq.kicks[a].weight * seq.kicks[b].weight *
                       std::sin(s.frequencies[m] * (seq.kicks[b].time - seq.kicks[a].time));
            }
        }
        theta += 2.0 * s.lamb_dicke_per_mode[m] * s.lamb_dicke_per_mode[m] * s.mode_matrix(i, m) *
                 s.mode_matrix(j, m) * sum;
    }
    return theta;
}

}  // namespace

TEST(ModeKickSum, Examples) {
    const auto s = two_ion_spectrum(0.1, 0.2, w);
    PulseSequence empty;
    EXPECT_EQ(mode_kick_sum(empty, s, 0), cplx(0.0, 0.0));

    PulseSequence half{{{0.0, 1}, {pi / s.frequencies[1], 1}}, {}};
    EXPECT_LT(std::abs(mode_kick_sum(half, s, 1)), 1e-15);

    const double t = (pi / 3.0) / s.frequencies[0];
    PulseSequence three{{{0.0, 2}, {t, -3}, {2 * t, 2}}, {}};
    const cplx c = mode_kick_sum(three, s, 0);
    EXPECT_NEAR(c.real(), -0.5, 1e-14);
    EXPECT_NEAR(c.imag(), -std::sqrt(3.0) / 2.0, 1e-14);
    EXPECT_NEAR(std::abs(c), 1.0, 1e-14);
    EXPECT_THROW(mode_kick_sum(three, s, 2), InvalidArgument);
}

TEST(ConditionalPhase, SingleGroupIsZero) {
    const auto s = two_ion_spectrum(0.05, 0.2, w);
    PulseSequence seq{{{1e-7, 7}}, {}};
    EXPECT_EQ(conditional_phase(seq, s), 0.0);
}

TEST(ConditionalPhase, SineZerosGiveZero) {
    const auto s = two_ion_spectrum(1.0, 0.2, w);  // w_BR = 2w
    PulseSequence seq{{{0.0, 2}, {0.5 * period, -1}, {period, 3}, {2.5 * period, -4}}, {}};
    EXPECT_LT(std::abs(conditional_phase(seq, s)), 1e-13);
}

TEST(ConditionalPhase, MatchesPairwiseDoubleSum) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = mode_spectrum(TrapArrayConfig{4, 20e-6});
        auto seq = random_sequence(rng, 1 + trial % 9, 2.0);
        seq.addressed_pair = {1, 2};
        const double ref = pairwise_theta(seq, spec);
        EXPECT_NEAR(conditional_phase(seq, spec), ref, 1e-12 * (1.0 + std::abs(ref)));
        EXPECT_NEAR(state_averaged_fidelity(seq, spec).conditional_phase, ref, 1e-12 * (1.0 + std::abs(ref)));
    }
}

TEST(Fidelity, NoKicks) {
    const auto s = two_ion_spectrum(0.01, 0.2, w);
    PulseSequence seq;
    FidelityOptions zero;
    zero.target_phase = 0.0;
    EXPECT_DOUBLE_EQ(state_averaged_fidelity(seq, s, {}, zero).fidelity, 1.0);
    EXPECT_EQ(state_averaged_fidelity(seq, s, {}, zero).infidelity, 0.0);
    // Identity against the controlled-phase target: (4 + 8) / 20.
    EXPECT_NEAR(state_averaged_fidelity(seq, s).fidelity, 0.6, 1e-15);
    FidelityOptions process;
    process.averaging = Averaging::Process;
    EXPECT_NEAR(state_averaged_fidelity(seq, s, {}, process).fidelity, 0.5, 1e-15);
}

TEST(Fidelity, PerfectAmplitudes) {
    std::array<cplx, 4> a;
    a.fill(std::polar(1.0, 0.3));
    EXPECT_NEAR(fidelity_from_amplitudes(a, Averaging::Haar), 1.0, 1e-15);
    EXPECT_NEAR(detail::infidelity_from_amplitudes({0, 0, 0, 0}, {0.3, 0.3, 0.3, 0.3}, Averaging::Haar), 0.0,
                1e-16);
}

TEST(Fidelity, GlobalPhaseInvariance) {
    const std::array<double, 4> decay{0.01, 0.2, 0.0, 0.05};
    const std::array<double, 4> theta{0.1, -0.4, 0.7, 0.0};
    const double base = detail::infidelity_from_amplitudes(decay, theta, Averaging::Haar);
    for (double c : {0.5, -2.0, 10.0}) {
        std::array<double, 4> shifted = theta;
        for (auto &t : shifted) t += c;
        EXPECT_NEAR(detail::infidelity_from_amplitudes(decay, shifted, Averaging::Haar), base, 1e-15);
    }
}

TEST(Fidelity, MonotoneInDisplacementAndBounded) {
    const std::array<double, 4> theta{0.1, -0.2, 0.05, 0.3};
    double previous = -1.0;
    for (double x = 0.0; x < 5.0; x += 0.25) {
        const double inf = detail::infidelity_from_amplitudes({0.0, x, 0.0, 0.0}, theta, Averaging::Haar);
        EXPECT_GT(inf, previous);
        EXPECT_GE(inf, 0.0);
        EXPECT_LE(inf, 1.0);
        previous = inf;
    }
}

TEST(Fidelity, KickSignSymmetry) {
    Rng rng(5);
    const auto spec = mode_spectrum(TrapArrayConfig{3, 15e-6});
    for (int trial = 0; trial < 10; ++trial) {
        auto seq = random_sequence(rng, 6, 1.5);
        seq.addressed_pair = {0, 1};
        auto flipped = seq;
        for (auto &k : flipped.kicks) k.weight = -k.weight;
        const auto a = state_averaged_fidelity(seq, spec);
        const auto b = state_averaged_fidelity(flipped, spec);
        for (int s = 0; s < 4; ++s) {
            for (int m = 0; m < spec.mode_count(); ++m) {
                EXPECT_NEAR(std::abs(a.residual_displacements[s][m]), std::abs(b.residual_displacements[3 - s][m]),
                            1e-13);
                EXPECT_NEAR(std::abs(a.residual_displacements[s][m]), std::abs(b.residual_displacements[s][m]),
                            1e-13);
            }
        }
        EXPECT_NEAR(a.conditional_phase, b.conditional_phase, 1e-15);
        EXPECT_NEAR(a.fidelity, b.fidelity, 1e-15);
    }
}

TEST(Fidelity, TimeTranslationInvariance) {
    Rng rng(8);
    const auto spec = two_ion_spectrum(0.02, 0.19, w);
    for (int trial = 0; trial < 10; ++trial) {
        auto seq = random_sequence(rng, 5, 1.2);
        auto shifted = seq;
        for (auto &k : shifted.kicks) k.time += 0.37 * period;
        EXPECT_NEAR(std::abs(mode_kick_sum(seq, spec, 1)), std::abs(mode_kick_sum(shifted, spec, 1)), 1e-12);
        EXPECT_NEAR(conditional_phase(seq, spec), conditional_phase(shifted, spec), 1e-12);
        EXPECT_NEAR(gate_infidelity(seq, spec), gate_infidelity(shifted, spec), 1e-12);
    }
}

TEST(Fidelity, DoublingWeightsQuadruplesPhaseAndDisplacementSquared) {
    Rng rng(3);
    const auto spec = two_ion_spectrum(0.03, 0.1, w);
    auto seq = random_sequence(rng, 6, 1.0);
    auto doubled = seq;
    for (auto &k : doubled.kicks) k.weight *= 2;
    const auto a = state_averaged_fidelity(seq, spec);
    const auto b = state_averaged_fidelity(doubled, spec);
    EXPECT_NEAR(b.conditional_phase, 4.0 * a.conditional_phase, 1e-12);
    EXPECT_NEAR(std::norm(b.residual_displacements[1][1]), 4.0 * std::norm(a.residual_displacements[1][1]), 1e-12);
    EXPECT_EQ(doubled.total_pulse_pairs(), 2 * seq.total_pulse_pairs());
}

TEST(Fidelity, ClosedFormMatchesHaarSampling) {
    // Sequence with closure on the COM mode only, so the residual
    // displacement lives on the breathing mode for the odd-parity states.
    const auto spec = two_ion_spectrum(0.1, 0.2, w);
    PulseSequence seq{{{0.0, 1}, {0.5 * period, 1}}, {}};
    const auto rep = state_averaged_fidelity(seq, spec);
    EXPECT_LT(std::abs(rep.residual_displacements[0][0]), 1e-15);
    EXPECT_LT(std::abs(rep.residual_displacements[1][0]), 1e-15);
    EXPECT_LT(std::abs(rep.residual_displacements[0][1]), 1e-15);
    EXPECT_GT(std::abs(rep.residual_displacements[1][1]), 1e-3);

    std::array<cplx, 4> amp;
    for (int s = 0; s < 4; ++s) {
        double d2 = 0.0;
        for (const auto &d : rep.residual_displacements[s]) d2 += std::norm(d);
        const auto [s1, s2] = basis_states[s];
        amp[s] = std::polar(std::exp(-d2 / 2.0), rep.phases[s] - (pi / 4.0) * s1 * s2);
    }

    std::mt19937_64 gen(99);
    std::normal_distribution<double> normal;
    const int samples = 1000000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < samples; ++k) {
        std::array<double, 4> p;
        double total = 0.0;
        for (auto &x : p) {
            const double re = normal(gen);
            const double im = normal(gen);
            x = re * re + im * im;
            total += x;
        }
        cplx overlap(0.0, 0.0);
        for (int s = 0; s < 4; ++s) overlap += (p[s] / total) * amp[s];
        const double f = std::norm(overlap);
        sum += f;
        sum_sq += f * f;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sum_sq / samples - mean * mean) / samples);
    EXPECT_LT(std::abs(mean - rep.fidelity), 3.0 * se) << mean << " vs " << rep.fidelity << " se " << se;
}

TEST(Fidelity, AmplitudeModelMatchesImplementation) {
    // |Delta|^2 = 0.1 on one mode for the odd-parity states, no phase error.
    const double x = 0.05;
    std::array<cplx, 4> a{1.0, std::exp(-x), std::exp(-x), 1.0};
    const double expected = (2.0 + 2.0 * std::exp(-2 * x) + std::pow(2.0 + 2.0 * std::exp(-x), 2)) / 20.0;
    EXPECT_NEAR(fidelity_from_amplitudes(a, Averaging::Haar), expected, 1e-15);
    EXPECT_NEAR(1.0 - detail::infidelity_from_amplitudes({0, x, x, 0}, {0, 0, 0, 0}, Averaging::Haar), expected,
                1e-15);
}

TEST(Fidelity, ThermalOccupationLowersFidelity) {
    Rng rng(1);
    const auto spec = two_ion_spectrum(0.02, 0.15, w);
    const auto seq = random_sequence(rng, 4, 1.0);
    MotionalState hot{{0.5, 0.5}};
    EXPECT_GT(gate_infidelity(seq, spec, hot), gate_infidelity(seq, spec));
}

TEST(Fidelity, InfidelityAgreesWithReport) {
    Rng rng(21);
    const auto spec = mode_spectrum(TrapArrayConfig{3, 12e-6});
    for (int trial = 0; trial < 10; ++trial) {
        auto seq = random_sequence(rng, 7, 2.0);
        seq.addressed_pair = {2, 1};
        const auto rep = state_averaged_fidelity(seq, spec);
        EXPECT_NEAR(gate_infidelity(seq, spec), rep.infidelity, 1e-15);
        EXPECT_NEAR(rep.fidelity + rep.infidelity, 1.0, 1e-15);
    }
}

TEST(Gradient, MatchesCentralDifferences) {
    Rng rng(17);
    const auto spec = mode_spectrum(TrapArrayConfig{3, 15e-6});
    for (auto avg : {Averaging::Haar, Averaging::Process}) {
        FidelityOptions opt;
        opt.averaging = avg;
        for (int trial = 0; trial < 8; ++trial) {
            auto seq = random_sequence(rng, 6, 1.5);
            for (auto &k : seq.kicks) k.weight = (k.weight > 0 ? 1 : -1) * (1 + std::abs(k.weight) % 2);
            const auto g = infidelity_time_gradient(seq, spec, {}, opt);
            for (std::size_t j = 0; j < seq.kicks.size(); ++j) {
                const double h = 1e-6 * period;
                auto plus = seq;
                auto minus = seq;
                plus.kicks[j].time += h;
                minus.kicks[j].time -= h;
                // Re-sorting is unnecessary: weights are attached to the perturbed kick.
                const double fd = (detail::kick_infidelity(plus.kicks, spec, seq.addressed_pair, {}, opt) -
                                   detail::kick_infidelity(minus.kicks, spec, seq.addressed_pair, {}, opt)) /
                                  (2.0 * h);
                EXPECT_NEAR(g[j], fd, 1e-5 * std::abs(fd) + 1e-9 / period) << trial << " " << j;
            }
        }
    }
}

TEST(Validation, RejectsMalformedSequences) {
    const auto spec = two_ion_spectrum(0.01, 0.2, w);
    PulseSequence zero{{{0.0, 0}}, {}};
    EXPECT_THROW(gate_infidelity(zero, spec), InvalidArgument);
    PulseSequence backwards{{{1e-6, 1}, {0.0, 1}}, {}};
    EXPECT_THROW(gate_infidelity(backwards, spec), InvalidArgument);
    PulseSequence outside{{{0.0, 1}}, {0, 2}};
    EXPECT_THROW(gate_infidelity(outside, spec), InvalidArgument);
    PulseSequence same{{{0.0, 1}}, {1, 1}};
    EXPECT_THROW(state_averaged_fidelity(same, spec), InvalidArgument);
    MotionalState negative{{-1.0}};
    PulseSequence ok{{{0.0, 1}}, {}};
    EXPECT_THROW(state_averaged_fidelity(ok, spec, negative), InvalidArgument);
}

TEST(Sequence, GateTimeAndTau) {
    PulseSequence seq{{{0.25 * period, 1}, {1.75 * period, -2}}, {}};
    EXPECT_NEAR(seq.gate_time(), 1.5 * period, 1e-20);
    EXPECT_NEAR(seq.tau(w), 1.5, 1e-12);
    EXPECT_EQ(seq.total_pulse_pairs(), 3);
}

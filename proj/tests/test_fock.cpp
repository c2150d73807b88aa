#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fastgate/dynamics.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/fock.hpp"
#include "fastgate/modes.hpp"
#include "fastgate/oracle_check.hpp"
#include "fastgate/random.hpp"

using namespace fastgate;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double w = 2.0 * pi * 1e6;
constexpr double period = 2.0 * pi / w;

// Closes both modes when w_BR = 2w, with S_COM = 2 and S_BR = 0.
PulseSequence closed_four_kick() {
    return {{{0.0, 1}, {0.25 * period, 1}, {period, -1}, {1.25 * period, -1}}, {}};
}

}  // namespace

TEST(FockOracle, ZeroKicksStayInGround) {
    const auto spec = two_ion_spectrum(0.01, 0.2, w);
    const auto sim = simulate(PulseSequence{}, spec);
    for (const auto &br : sim.branches) {
        EXPECT_NEAR(std::abs(br.vacuum_amplitude), 1.0, 1e-15);
        EXPECT_NEAR(br.phase, 0.0, 1e-15);
        for (const auto &psi : br.mode_states) EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
    }
}

TEST(FockOracle, SingleKickCoherentOccupation) {
    const auto spec = two_ion_spectrum(0.05, 0.1, w);
    const int z = 3;
    PulseSequence seq{{{0.0, z}}, {}};
    FockConfig cfg;
    const auto sim = simulate(seq, spec, cfg, 64);
    for (int s = 0; s < 4; ++s) {
        const auto [s1, s2] = basis_states[s];
        for (int m = 0; m < 2; ++m) {
            const double amp = spec.lamb_dicke_per_mode[m] * detail::mode_coupling(spec, {}, m, s1, s2) * z;
            EXPECT_NEAR(mean_occupation(sim.branches[s].mode_states[m]), amp * amp, 1e-8);
        }
    }
}

TEST(FockOracle, ClosedSequenceReturnsToGround) {
    const auto spec = two_ion_spectrum(1.0, 0.3, w);
    const auto seq = closed_four_kick();
    for (int m = 0; m < 2; ++m) EXPECT_LT(std::abs(mode_kick_sum(seq, spec, m)), 1e-14);
    const auto sim = simulate(seq, spec, FockConfig{}, 32);
    for (const auto &br : sim.branches) EXPECT_GT(std::norm(br.vacuum_amplitude), 1.0 - 1e-8);
}

TEST(FockOracle, AnalyticPerfectGate) {
    const double eta = std::sqrt(pi / 8.0);
    const auto spec = two_ion_spectrum(1.0, eta, w);
    const auto seq = closed_four_kick();
    EXPECT_NEAR(conditional_phase(seq, spec), pi / 4.0, 1e-13);
    EXPECT_GT(state_averaged_fidelity(seq, spec).fidelity, 1.0 - 1e-13);
    EXPECT_GT(fidelity_oracle(seq, spec).fidelity, 1.0 - 1e-6);
}

TEST(FockOracle, UnclosedSequenceLosesFidelity) {
    // |Delta|^2 = 1 on the COM mode for the even-parity states.
    const auto spec = two_ion_spectrum(1e-3, 1.0 / std::sqrt(2.0), w);
    PulseSequence seq{{{0.0, 1}}, {}};
    const auto rep = state_averaged_fidelity(seq, spec);
    EXPECT_NEAR(std::norm(rep.residual_displacements[0][0]), 1.0, 1e-12);
    const auto f = fidelity_oracle(seq, spec);
    EXPECT_LT(f.fidelity, 1.0 - 0.1);
    EXPECT_NEAR(f.fidelity, rep.fidelity, 1e-6);
}

TEST(FockOracle, ConditionalPhaseAtReferenceParameters) {
    const auto spec = two_ion_spectrum(1.8e-4, 0.194, w);
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        PulseSequence seq;
        std::vector<double> t;
        for (int k = 0; k < 4; ++k) t.push_back(rng.uniform(0.0, 1.0) * period);
        std::sort(t.begin(), t.end());
        for (double x : t) seq.kicks.push_back({x, rng.uniform() < 0.5 ? -2 : 2});
        const auto f = fidelity_oracle(seq, spec);
        EXPECT_NEAR(f.simulation.conditional_phase(), conditional_phase(seq, spec), 1e-6) << trial;
    }
}

TEST(FockOracle, RandomizedEquivalenceSuite) {
    OracleCaseOptions opt;
    opt.count = 100;
    const auto cases = random_oracle_cases(opt, 2024);
    FockConfig cfg;
    const auto records = run_oracle_check(cases, 0.194, w, cfg);
    ASSERT_EQ(records.size(), 100u);
    int multi = 0;
    for (const auto &r : records) {
        EXPECT_LT(r.difference, 1e-6) << r.index;
        if (r.kicks > 1) ++multi;
    }
    EXPECT_GT(multi, 50);
}

TEST(FockOracle, LeakageIsReported) {
    const auto spec = two_ion_spectrum(0.01, 0.5, w);
    PulseSequence seq{{{0.0, 8}}, {}};
    EXPECT_THROW(simulate(seq, spec, FockConfig{}, 8), TruncationLeakage);
    // The doubling loop recovers.
    const auto f = fidelity_oracle(seq, spec);
    EXPECT_GT(f.truncation, 8);
    EXPECT_NEAR(f.fidelity, state_averaged_fidelity(seq, spec).fidelity, 1e-6);
}

TEST(FockOracle, TruncationConvergesAndPreservesNorm) {
    const auto spec = two_ion_spectrum(0.2, 0.3, w);
    PulseSequence seq{{{0.0, 3}, {0.3 * period, -2}, {0.9 * period, 4}, {1.2 * period, -5}}, {}};
    const auto f = fidelity_oracle(seq, spec);
    EXPECT_LT(f.last_change, 1e-9);
    for (const auto &br : f.simulation.branches) EXPECT_LT(br.max_step_loss, 1e-10);
    double previous_error = INFINITY;
    const double closed = state_averaged_fidelity(seq, spec).fidelity;
    for (int dim : {64, 128, 256}) {
        const double err = std::abs(fidelity_of(simulate(seq, spec, FockConfig{}, dim), {}) - closed);
        EXPECT_LE(err, previous_error + 1e-12);
        previous_error = err;
    }
    EXPECT_LT(previous_error, 1e-9);
}

TEST(FockOracle, RejectsTooManyModes) {
    TrapArrayConfig cfg;
    cfg.ion_count = 4;
    const auto spec = mode_spectrum(cfg);
    PulseSequence seq{{{0.0, 1}}, {}};
    EXPECT_THROW(simulate(seq, spec), InvalidArgument);
    FockConfig bad;
    bad.truncation = 4;
    EXPECT_THROW(simulate(seq, two_ion_spectrum(0.1, 0.1, w), bad), InvalidArgument);
}

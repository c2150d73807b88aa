#pragma once

// Randomized agreement test between the closed-form fidelity and the
// number-state simulation.

#include <cstdint>
#include <numbers>
#include <vector>

#include "fastgate/dynamics.hpp"
#include "fastgate/fock.hpp"
#include "fastgate/modes.hpp"
#include "fastgate/parallel.hpp"
#include "fastgate/random.hpp"

namespace fastgate {

struct OracleCase {
    PulseSequence sequence;
    double chi = 0.0;
};

struct OracleRecord {
    int index = 0;
    int kicks = 0;
    double chi = 0.0;
    double closed = 0.0;  // closed-form fidelity
    double fock = 0.0;    // simulated fidelity
    double difference = 0.0;
    int truncation = 0;
};

struct OracleCaseOptions {
    int count = 100;
    int max_weight = 4;
    int max_kicks = 6;
    double max_time = 1.5;             // trap periods
    double chi_min = 1e-3;             // log-uniform chi range
    double chi_max = 0.3;
    double trap_frequency = 2.0 * std::numbers::pi * 1e6;
};

/// Random two-ion sequences: 1..max_kicks kicks with weights in
/// [-max_weight, max_weight] \ {0} at sorted uniform times.
inline std::vector<OracleCase> random_oracle_cases(const OracleCaseOptions &opt, std::uint64_t seed) {
    detail::require(opt.count >= 1 && opt.max_weight >= 1 && opt.max_kicks >= 1, "oracle case options must be positive");
    std::vector<OracleCase> out;
    const double period = 2.0 * std::numbers::pi / opt.trap_frequency;
    for (int i = 0; i < opt.count; ++i) {
        Rng rng(stream_seed(seed, static_cast<std::uint64_t>(i)));
        OracleCase c;
        c.chi = opt.chi_min * std::pow(opt.chi_max / opt.chi_min, rng.uniform());
        const int kicks = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_kicks)));
        std::vector<double> times;
        for (int k = 0; k < kicks; ++k) times.push_back(rng.uniform(0.0, opt.max_time) * period);
        std::sort(times.begin(), times.end());
        for (int k = 0; k < kicks; ++k) {
            int w = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_weight)));
            if (rng.uniform() < 0.5) w = -w;
            c.sequence.kicks.push_back({times[k], w});
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<OracleRecord> run_oracle_check(const std::vector<OracleCase> &cases, double eta,
                                                  double trap_frequency, const FockConfig &cfg = {},
                                                  const FidelityOptions &opt = {}, int workers = 1) {
    return parallel_map<OracleRecord>(cases.size(), workers, [&](std::size_t i) {
        const auto &c = cases[i];
        const auto spec = two_ion_spectrum(c.chi, eta, trap_frequency);
        OracleRecord r;
        r.index = static_cast<int>(i);
        r.kicks = static_cast<int>(c.sequence.kicks.size());
        r.chi = c.chi;
        r.closed = state_averaged_fidelity(c.sequence, spec, {}, opt).fidelity;
        const auto f = fidelity_oracle(c.sequence, spec, cfg, opt);
        r.fock = f.fidelity;
        r.truncation = f.truncation;
        r.difference = std::abs(r.closed - r.fock);
        return r;
    });
}

}  // namespace fastgate

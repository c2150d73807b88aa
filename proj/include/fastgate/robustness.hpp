#pragma once

// Gate degradation under timing jitter and under a finite pulse
// repetition rate, where each kick group becomes a train of unit kicks on a
// fixed slot grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "fastgate/dynamics.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/parallel.hpp"
#include "fastgate/random.hpp"

namespace fastgate {

struct JitterConfig {
    double sigma = 0.0;  // trap periods
    int samples = 1000;
    std::uint64_t seed = 1;
    bool per_pulse = false;  // jitter every unit pulse instead of every group
    int workers = 1;

    void validate() const {
        detail::require(std::isfinite(sigma) && sigma >= 0.0, "jitter sigma must be >= 0");
        detail::require(samples >= 1, "jitter samples must be >= 1");
        detail::require(workers >= 1, "workers must be >= 1");
    }
};

struct JitterSummary {
    double sigma = 0.0;
    double noiseless = 0.0;
    double mean = 0.0;
    double standard_error = 0.0;
    double minimum = 0.0;
    double maximum = 0.0;
    double exponential_location = 0.0;  // shifted-exponential fit
    double exponential_rate = 0.0;
    double ks_statistic = 0.0;          // against the fitted distribution
    double coefficient_of_variation = 0.0;  // of the excess over the fitted location
    std::vector<double> samples;
};

namespace detail {

/// Kolmogorov-Smirnov distance between a sorted sample and
/// 1 - exp(-rate (x - loc)).
inline double ks_exponential(const std::vector<double> &sorted, double loc, double rate) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = sorted[i] <= loc ? 0.0 : -std::expm1(-rate * (sorted[i] - loc));
        d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
    }
    return d;
}

}  // namespace detail

/// Monte-Carlo mean infidelity with Gaussian timing noise. Sample i always
/// draws from stream i of the seed, so results do not depend on the worker
/// count and runs at different sigma share the same normal deviates.
inline JitterSummary mc_mean_infidelity(const GateSolution &solution, const JitterConfig &cfg,
                                        const MotionalState &motional = {}, const FidelityOptions &opt = {}) {
    cfg.validate();
    const auto spectrum = solution.model().spectrum();
    const PulseSequence ideal = solution.sequence();
    const double sigma_s = cfg.sigma * solution.model().trap_period();

    std::vector<Kick> base;
    if (cfg.per_pulse) {
        for (const auto &k : ideal.kicks) {
            for (int p = 0; p < std::abs(k.weight); ++p) base.push_back({k.time, k.weight > 0 ? 1 : -1});
        }
    } else {
        base = ideal.kicks;
    }

    JitterSummary out;
    out.sigma = cfg.sigma;
    out.noiseless = gate_infidelity(ideal, spectrum, motional, opt);
    out.samples = parallel_map<double>(static_cast<std::size_t>(cfg.samples), cfg.workers, [&](std::size_t i) {
        Rng rng(stream_seed(cfg.seed, i));
        std::vector<Kick> kicks = base;
        for (auto &k : kicks) k.time += sigma_s * rng.normal();
        std::stable_sort(kicks.begin(), kicks.end(), [](const Kick &a, const Kick &b) { return a.time < b.time; });
        return detail::kick_infidelity(kicks, spectrum, ideal.addressed_pair, motional, opt);
    });

    const double n = static_cast<double>(out.samples.size());
    // Accumulate offsets from the noiseless value so that sigma = 0 reproduces it exactly.
    double sum = 0.0;
    for (double v : out.samples) sum += v - out.noiseless;
    out.mean = out.noiseless + sum / n;
    double var = 0.0;
    for (double v : out.samples) var += (v - out.mean) * (v - out.mean);
    var = out.samples.size() > 1 ? var / (n - 1.0) : 0.0;
    out.standard_error = std::sqrt(var / n);

    std::vector<double> sorted = out.samples;
    std::sort(sorted.begin(), sorted.end());
    out.minimum = sorted.front();
    out.maximum = sorted.back();
    out.exponential_location = out.minimum;
    const double excess = out.mean - out.minimum;
    if (excess > 0.0) {
        out.exponential_rate = 1.0 / excess;
        out.ks_statistic = detail::ks_exponential(sorted, out.exponential_location, out.exponential_rate);
        out.coefficient_of_variation = std::sqrt(var) / excess;
    } else {
        out.exponential_rate = std::numeric_limits<double>::infinity();
    }
    return out;
}

struct RepRateConfig {
    double rate = 300e6;            // Hz
    std::optional<double> alignment;  // s, slot grid offset; default minimizes the worst centre shift

    void validate() const {
        detail::require(std::isfinite(rate) && rate > 0.0, "repetition rate must be > 0");
        if (alignment) detail::require(std::isfinite(*alignment), "slot alignment must be finite");
    }
};

struct Discretization {
    PulseSequence sequence;
    double alignment = 0.0;        // s
    double max_center_shift = 0.0; // s
};

namespace detail {

/// Fractional slot position of the first pulse of a group centred on t.
inline double first_slot_position(double t, int pulses, double rate) {
    return t * rate - 0.5 * (pulses - 1);
}

/// Grid offset (in slots) that minimises the largest rounding distance:
/// the centre of the shortest arc covering every fractional position.
inline double minimax_alignment(const std::vector<double> &positions) {
    std::vector<double> frac;
    for (double p : positions) frac.push_back(p - std::floor(p));
    std::sort(frac.begin(), frac.end());
    double widest = 1.0 - frac.back() + frac.front();
    double arc_start = frac.front();
    for (std::size_t i = 1; i < frac.size(); ++i) {
        const double gap = frac[i] - frac[i - 1];
        if (gap > widest) {
            widest = gap;
            arc_start = frac[i];
        }
    }
    double centre = arc_start + 0.5 * (1.0 - widest);
    return centre - std::floor(centre);
}

}  // namespace detail

/// Expand each kick group into |z| unit kicks on consecutive grid slots,
/// centred as closely as the grid allows on the ideal group time. When a
/// centre falls exactly between two placements the later one is used.
inline Discretization discretize_pulses(const PulseSequence &seq, double rate,
                                        std::optional<double> alignment = std::nullopt) {
    RepRateConfig{rate, alignment}.validate();
    seq.validate();
    std::vector<double> positions;
    for (const auto &k : seq.kicks) positions.push_back(detail::first_slot_position(k.time, std::abs(k.weight), rate));
    const double offset_slots = alignment ? *alignment * rate : detail::minimax_alignment(positions);

    Discretization out;
    out.alignment = offset_slots / rate;
    out.sequence.addressed_pair = seq.addressed_pair;
    long long last_slot = std::numeric_limits<long long>::min();
    for (std::size_t j = 0; j < seq.kicks.size(); ++j) {
        const auto &k = seq.kicks[j];
        const int pulses = std::abs(k.weight);
        const long long first = static_cast<long long>(std::floor(positions[j] - offset_slots + 0.5));
        if (first <= last_slot) {
            throw SlotOverlap("groups " + std::to_string(j - 1) + " and " + std::to_string(j) +
                              " need the same slot at rate " + std::to_string(rate) + " Hz");
        }
        const double first_time = (static_cast<double>(first) + offset_slots) / rate;
        const double centre = first_time + 0.5 * (pulses - 1) / rate;
        out.max_center_shift = std::max(out.max_center_shift, std::abs(centre - k.time));
        for (int p = 0; p < pulses; ++p) {
            out.sequence.kicks.push_back({first_time + p / rate, k.weight > 0 ? 1 : -1});
        }
        last_slot = first + pulses - 1;
    }
    return out;
}

inline Discretization discretize_pulses(const GateSolution &solution, const RepRateConfig &cfg) {
    cfg.validate();
    return discretize_pulses(solution.sequence(), cfg.rate, cfg.alignment);
}

/// Lowest rate at which neighbouring groups can sit on the grid centred on
/// their ideal times: groups of p and q pulses whose centres are g apart need
/// (p + q) / 2 slots of spacing 1/rate between them.
inline double threshold_rate(const PulseSequence &seq) {
    seq.validate();
    double rate = 0.0;
    for (std::size_t j = 0; j + 1 < seq.kicks.size(); ++j) {
        const double pulses = 0.5 * (std::abs(seq.kicks[j].weight) + std::abs(seq.kicks[j + 1].weight));
        const double gap = seq.kicks[j + 1].time - seq.kicks[j].time;
        if (gap <= 0.0) return std::numeric_limits<double>::infinity();
        rate = std::max(rate, pulses / gap);
    }
    return rate;
}

struct GridSearchOptions {
    int alignment_trials = 16;    // grid offsets tried when rounding the ideal times
    int max_step = 4;             // largest single-group slot move tried
    int max_sweeps = 200;
    double min_separation_rate = 0.0;  // Hz; keeps the result resolvable at this rate
    MotionalState motional{};
    FidelityOptions fidelity{};
};

/// Move a solution onto the slot grid of `rate`: every group becomes a train
/// of |z| consecutive slots and whole trains are shifted slot by slot while
/// the infidelity falls. The returned solution has train_rate = rate and
/// group times at train centres, so discretizing it at `rate` is exact.
inline GateSolution optimize_on_grid(const GateSolution &solution, double rate, const GridSearchOptions &opt = {}) {
    detail::require(std::isfinite(rate) && rate > 0.0, "grid rate must be > 0");
    const auto spectrum = solution.model().spectrum();
    const auto z = solution.scheme.weights();
    const double period = solution.model().trap_period();
    const double cap_slots = solution.tau_cap * period * rate;

    std::array<long long, group_count> need{};  // minimum start-to-start spacing in slots
    for (int j = 0; j + 1 < group_count; ++j) {
        const double pulses = 0.5 * (std::abs(z[j]) + std::abs(z[j + 1]));
        long long slots = std::abs(z[j]);
        if (opt.min_separation_rate > 0.0) {
            // centre gap >= pulses / min_rate, expressed in start-to-start slots
            const double centre_slots = pulses * rate / opt.min_separation_rate;
            slots = std::max<long long>(
                slots, static_cast<long long>(std::ceil(centre_slots - 0.5 * (std::abs(z[j + 1]) - std::abs(z[j])) - 1e-9)));
        }
        need[j] = slots;
    }
    auto centre = [&](const std::array<long long, group_count> &k, int j) {
        return (static_cast<double>(k[j]) + 0.5 * (std::abs(z[j]) - 1)) / rate;
    };
    auto feasible = [&](const std::array<long long, group_count> &k) {
        if (k[0] != 0) return false;
        for (int j = 0; j + 1 < group_count; ++j) {
            if (k[j + 1] - k[j] < need[j]) return false;
        }
        return (centre(k, group_count - 1) - centre(k, 0)) * rate <= cap_slots + 1e-9;
    };
    std::vector<Kick> kicks;
    auto value = [&](const std::array<long long, group_count> &k) {
        kicks.clear();
        for (int j = 0; j < group_count; ++j) {
            for (int p = 0; p < std::abs(z[j]); ++p) {
                kicks.push_back({static_cast<double>(k[j] + p) / rate, z[j] > 0 ? 1 : -1});
            }
        }
        return detail::kick_infidelity(kicks, spectrum, IonPair{}, opt.motional, opt.fidelity);
    };

    // Round the ideal placement under several grid offsets and search the
    // +-1 slot neighbourhood of every rounding exhaustively.
    std::array<long long, group_count> k{};
    double best = std::numeric_limits<double>::infinity();
    std::array<double, group_count> pos{};
    for (int j = 0; j < group_count; ++j) {
        pos[j] = detail::first_slot_position(solution.timings[j], std::abs(z[j]), rate);
    }
    for (int a = 0; a < opt.alignment_trials; ++a) {
        const double shift = static_cast<double>(a) / opt.alignment_trials;
        std::array<long long, group_count> base{};
        const double origin = std::floor(pos[0] + shift);
        for (int j = 0; j < group_count; ++j) {
            base[j] = static_cast<long long>(std::floor(pos[j] + shift)) - static_cast<long long>(origin);
        }
        int combos = 1;
        for (int j = 1; j < group_count; ++j) combos *= 3;
        for (int c = 0; c < combos; ++c) {
            auto trial = base;
            int code = c;
            for (int j = 1; j < group_count; ++j) {
                trial[j] += code % 3 - 1;
                code /= 3;
            }
            if (!feasible(trial)) continue;
            const double v = value(trial);
            if (v < best || (v == best && trial < k)) {
                best = v;
                k = trial;
            }
        }
    }
    detail::require(std::isfinite(best), "slot grid cannot fit the scheme near its ideal timings");

    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        bool improved = false;
        for (int j = 1; j < group_count; ++j) {
            for (int step = 1; step <= opt.max_step; ++step) {
                for (int dir : {-1, 1}) {
                    // Move group j alone, or group j together with everything after it.
                    for (int tail = 0; tail < 2; ++tail) {
                        auto trial = k;
                        for (int i = j; i < (tail ? group_count : j + 1); ++i) trial[i] += dir * step;
                        if (!feasible(trial)) continue;
                        const double v = value(trial);
                        if (v < best) {
                            best = v;
                            k = trial;
                            improved = true;
                        }
                    }
                }
            }
        }
        if (!improved) break;
    }

    GateSolution out = solution;
    out.train_rate = rate;
    for (int j = 0; j < group_count; ++j) out.timings[j] = centre(k, j) - centre(k, 0);
    out.achieved_tau = out.timings[group_count - 1] / period;
    out.report = state_averaged_fidelity(out.design_sequence(), spectrum, opt.motional, opt.fidelity);
    return out;
}

struct RepRateRecord {
    double rate = 0.0;  // Hz
    bool resolvable = false;
    double infidelity = std::numeric_limits<double>::quiet_NaN();
    double max_center_shift = std::numeric_limits<double>::quiet_NaN();  // s
};

struct RepRateScan {
    double ideal_infidelity = 0.0;
    double threshold_rate = 0.0;  // Hz
    std::vector<RepRateRecord> records;
};

/// Discretize and evaluate at every rate. Rates below the slot-counting
/// threshold, or where groups collide on the grid, are marked unresolvable.
inline RepRateScan rep_rate_scan(const GateSolution &solution, const std::vector<double> &rates,
                                 std::optional<double> alignment = std::nullopt, const MotionalState &motional = {},
                                 const FidelityOptions &opt = {}, int workers = 1) {
    for (double r : rates) detail::require(std::isfinite(r) && r > 0.0, "rates must be > 0");
    const auto spectrum = solution.model().spectrum();
    const auto ideal = solution.sequence();
    RepRateScan out;
    out.ideal_infidelity = gate_infidelity(ideal, spectrum, motional, opt);
    out.threshold_rate = threshold_rate(ideal);
    out.records = parallel_map<RepRateRecord>(rates.size(), workers, [&](std::size_t i) {
        RepRateRecord rec;
        rec.rate = rates[i];
        if (rates[i] < out.threshold_rate) return rec;
        try {
            const auto d = discretize_pulses(ideal, rates[i], alignment);
            rec.resolvable = true;
            rec.max_center_shift = d.max_center_shift;
            rec.infidelity = gate_infidelity(d.sequence, spectrum, motional, opt);
        } catch (const SlotOverlap &) {
            rec.resolvable = false;
        }
        return rec;
    });
    return out;
}

}  // namespace fastgate

#pragma once

// Timing optimization for kick schemes under a gate-time cap.
//
// Variables are the gaps between consecutive kick groups. Each gap is a
// fixed minimum plus a free part; the free parts are non-negative and their
// sum is capped so the total gate time never exceeds the cap. Every start
// runs a projected Levenberg-Marquardt descent on the small-error residuals
// (mode closures and conditional phase error), and the most promising starts
// are polished with Nelder-Mead on the exact infidelity.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fastgate/dynamics.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/modes.hpp"
#include "fastgate/nelder_mead.hpp"
#include "fastgate/parallel.hpp"
#include "fastgate/random.hpp"
#include "fastgate/scheme.hpp"

namespace fastgate {

struct TwoIonModel {
    double chi = 1.8e-4;
    double eta = 0.194;
    double trap_frequency = 2.0 * std::numbers::pi * 1e6;  // rad/s

    double trap_period() const { return 2.0 * std::numbers::pi / trap_frequency; }

    ModeSpectrum spectrum() const { return two_ion_spectrum(chi, eta, trap_frequency); }

    void validate() const {
        detail::require(std::isfinite(chi) && chi > 0.0, "chi must be > 0");
        detail::require(std::isfinite(eta) && eta > 0.0, "eta must be > 0");
        detail::require(std::isfinite(trap_frequency) && trap_frequency > 0.0, "trap frequency must be > 0");
    }
};

struct OptimizerOptions {
    int starts = 8;            // random starts per ordering, on top of the symmetric one
    std::uint64_t seed = 1;
    int lm_iterations = 200;
    int polish_top = 4;        // starts handed to Nelder-Mead
    NelderMeadOptions polish{};
    double min_separation_rate = 0.0;  // Hz; > 0 keeps neighbouring groups resolvable at this pulse rate
    double train_rate = 0.0;           // Hz; > 0 models each group as a pulse train at this rate
    MotionalState motional{};
    FidelityOptions fidelity{};
    int workers = 1;

    void validate() const {
        detail::require(starts >= 0, "starts must be >= 0");
        detail::require(lm_iterations >= 0, "lm_iterations must be >= 0");
        detail::require(polish_top >= 0, "polish_top must be >= 0");
        detail::require(min_separation_rate >= 0.0, "min_separation_rate must be >= 0");
        detail::require(train_rate >= 0.0, "train_rate must be >= 0");
        detail::require(workers >= 1, "workers must be >= 1");
    }
};

struct OptimizerDiagnostics {
    int starts_run = 0;
    int converged_starts = 0;
    long evaluations = 0;
    bool converged = false;
};

/// Best timing set found for a list of kick weights.
struct KickTimingResult {
    std::vector<double> times;  // trap periods, first kick at 0
    double infidelity = std::numeric_limits<double>::infinity();
    OptimizerDiagnostics diagnostics;
};

struct GateSolution {
    Scheme scheme;
    std::array<double, group_count> timings{};  // s, first group at 0
    double chi = 0.0;
    double eta = 0.0;
    double trap_frequency = 0.0;
    double tau_cap = 0.0;       // trap periods
    double achieved_tau = 0.0;  // trap periods
    std::uint64_t seed = 0;
    double train_rate = 0.0;  // Hz, 0 for instantaneous groups
    FidelityReport report;
    OptimizerDiagnostics diagnostics;

    double infidelity() const { return report.infidelity; }

    TwoIonModel model() const { return {chi, eta, trap_frequency}; }

    PulseSequence sequence(IonPair pair = {}) const {
        PulseSequence seq;
        seq.addressed_pair = pair;
        const auto z = scheme.weights();
        for (int j = 0; j < group_count; ++j) seq.kicks.push_back({timings[j], z[j]});
        return seq;
    }

    /// The sequence the optimizer evaluated: groups as trains when train_rate > 0.
    PulseSequence design_sequence(IonPair pair = {}) const;
};

/// Replace each kick of weight z by |z| unit kicks spaced 1/rate and
/// centred on the original time.
inline PulseSequence expand_trains(const PulseSequence &seq, double rate) {
    detail::require(rate > 0.0, "train rate must be > 0");
    PulseSequence out;
    out.addressed_pair = seq.addressed_pair;
    for (const auto &k : seq.kicks) {
        const int pulses = std::abs(k.weight);
        for (int p = 0; p < pulses; ++p) {
            out.kicks.push_back({k.time + (p - 0.5 * (pulses - 1)) / rate, k.weight > 0 ? 1 : -1});
        }
    }
    return out;
}

inline PulseSequence GateSolution::design_sequence(IonPair pair) const {
    return train_rate > 0.0 ? expand_trains(sequence(pair), train_rate) : sequence(pair);
}

namespace detail {

struct TimingProblem {
    std::vector<int> weights;     // per group
    std::vector<int> unit_group;  // group of every evaluated kick
    std::vector<int> unit_weight;
    std::vector<double> unit_offset;  // trap periods from the group time
    ModeSpectrum scaled;  // frequencies in radians per trap period
    IonPair pair;
    MotionalState motional;
    FidelityOptions fidelity;
    std::vector<double> min_gap;  // trap periods
    double slack = 0.0;           // cap minus the summed minimum gaps
    mutable std::vector<Kick> kicks;
    mutable std::vector<double> group_times;
    mutable long evaluations = 0;

    int dims() const { return static_cast<int>(min_gap.size()); }

    /// Clamp free parts at zero and shrink them onto the cap.
    void project(std::vector<double> &x) const {
        double sum = 0.0;
        for (auto &v : x) {
            v = std::max(0.0, v);
            sum += v;
        }
        if (sum > slack && sum > 0.0) {
            const double scale = slack / sum;
            for (auto &v : x) v *= scale;
        }
    }

    std::vector<double> times(const std::vector<double> &x) const {
        std::vector<double> t(weights.size(), 0.0);
        for (int i = 0; i < dims(); ++i) t[i + 1] = t[i] + min_gap[i] + x[i];
        return t;
    }

    /// Kicks are either the groups themselves or their trains.
    void expand(double train_periods) {
        unit_group.clear();
        unit_weight.clear();
        unit_offset.clear();
        for (std::size_t j = 0; j < weights.size(); ++j) {
            const int pulses = train_periods > 0.0 ? std::abs(weights[j]) : 1;
            for (int p = 0; p < pulses; ++p) {
                unit_group.push_back(static_cast<int>(j));
                unit_weight.push_back(train_periods > 0.0 ? (weights[j] > 0 ? 1 : -1) : weights[j]);
                unit_offset.push_back(train_periods * (p - 0.5 * (pulses - 1)));
            }
        }
        kicks.resize(unit_group.size());
    }

    /// Infidelity at a feasible point.
    double value(const std::vector<double> &x) const {
        ++evaluations;
        group_times.resize(weights.size());
        group_times[0] = 0.0;
        for (int i = 0; i < dims(); ++i) group_times[i + 1] = group_times[i] + min_gap[i] + x[i];
        for (std::size_t k = 0; k < kicks.size(); ++k) {
            kicks[k] = Kick{group_times[unit_group[k]] + unit_offset[k], unit_weight[k]};
        }
        return kick_infidelity(kicks, scaled, pair, motional, fidelity);
    }

    /// Infidelity at an arbitrary point, projected first.
    double projected_value(std::vector<double> x) const {
        project(x);
        return value(x);
    }

    /// Small-error residuals r with I ~ |r|^2 and their Jacobian in x.
    void residuals(const std::vector<double> &x, Eigen::VectorXd &r, Eigen::MatrixXd &jac) const {
        const int modes = scaled.mode_count();
        const int k = static_cast<int>(unit_group.size());
        const auto tg = times(x);
        std::vector<double> t(k);
        for (int j = 0; j < k; ++j) t[j] = tg[unit_group[j]] + unit_offset[j];
        r.setZero(2 * modes + 1);
        Eigen::MatrixXd jt = Eigen::MatrixXd::Zero(2 * modes + 1, k);
        const double phase_scale = std::sqrt(0.8);
        double theta = 0.0;
        for (int m = 0; m < modes; ++m) {
            const double omega = scaled.frequencies[m];
            const double eta = scaled.lamb_dicke_per_mode[m];
            const double b1 = scaled.mode_matrix(pair.first, m);
            const double b2 = scaled.mode_matrix(pair.second, m);
            const double wgt = eta * std::sqrt((b1 * b1 + b2 * b2) * (2.0 * motional.occupation(m) + 1.0));
            const double cross = 2.0 * eta * eta * b1 * b2;
            cplx c(0.0, 0.0);
            double s = 0.0;
            for (int j = 0; j < k; ++j) {
                const cplx e = std::polar(1.0, omega * t[j]);
                s += unit_weight[j] * std::imag(e * std::conj(c));
                c += static_cast<double>(unit_weight[j]) * e;
            }
            r[2 * m] = wgt * c.real();
            r[2 * m + 1] = wgt * c.imag();
            theta += cross * s;
            cplx prefix(0.0, 0.0);
            for (int j = 0; j < k; ++j) {
                const double z = unit_weight[j];
                const cplx e = std::polar(1.0, omega * t[j]);
                const cplx dc = cplx(0.0, omega * z) * e;
                jt(2 * m, j) = wgt * dc.real();
                jt(2 * m + 1, j) = wgt * dc.imag();
                const cplx after = c - prefix - z * e;
                const double ds = omega * z * (std::real(e * std::conj(prefix)) - std::real(std::conj(e) * after));
                jt(2 * modes, j) += phase_scale * cross * ds;
                prefix += z * e;
            }
        }
        r[2 * modes] = phase_scale * (theta - fidelity.target_phase);
        // Gap i shifts every kick of every later group.
        jac.setZero(2 * modes + 1, dims());
        for (int j = 0; j < k; ++j) {
            for (int i = 0; i < unit_group[j]; ++i) jac.col(i) += jt.col(j);
        }
    }
};

struct StartOutcome {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    bool converged = false;
};

inline StartOutcome levenberg_marquardt(const TimingProblem &prob, std::vector<double> x, int iterations) {
    prob.project(x);
    StartOutcome out{x, prob.value(x), false};
    const int d = prob.dims();
    double lambda = 1e-3;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    for (int it = 0; it < iterations; ++it) {
        if (out.value <= 1e-30) {
            out.converged = true;
            break;
        }
        prob.residuals(out.x, r, jac);
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        bool accepted = false;
        for (int attempt = 0; attempt < 20; ++attempt) {
            Eigen::MatrixXd b = a;
            for (int i = 0; i < d; ++i) b(i, i) += lambda * (a(i, i) + 1e-12);
            const Eigen::VectorXd step = b.ldlt().solve(-g);
            std::vector<double> trial = out.x;
            for (int i = 0; i < d; ++i) trial[i] += step[i];
            prob.project(trial);
            const double v = prob.value(trial);
            if (v < out.value) {
                const double gain = out.value - v;
                out.x = std::move(trial);
                out.value = v;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (gain <= 1e-15 * out.value) out.converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            out.converged = true;
            break;
        }
        if (out.converged) break;
    }
    return out;
}

/// Ordering used for every comparison between candidate solutions:
/// infidelity (with a 1e-15 tie band), then gate time, then timings.
inline bool better_timing(double value_a, const std::vector<double> &times_a, double value_b,
                          const std::vector<double> &times_b) {
    if (std::abs(value_a - value_b) > 1e-15) return value_a < value_b;
    if (times_a.back() != times_b.back()) return times_a.back() < times_b.back();
    return times_a < times_b;
}

inline std::uint64_t hash_string(const std::string &s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t hash_double(double v) { return splitmix64(std::bit_cast<std::uint64_t>(v)); }

/// Gaps that keep neighbouring trains of |z| pulses at the given rate
/// from sharing a slot; the slowest rate wins.
inline std::vector<double> minimum_gaps(const std::vector<int> &weights, std::initializer_list<double> rates,
                                        double trap_frequency) {
    std::vector<double> gaps(weights.size() - 1, 0.0);
    const double periods_per_second = trap_frequency / (2.0 * std::numbers::pi);
    for (double rate : rates) {
        if (rate <= 0.0) continue;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            const double pulses = 0.5 * (std::abs(weights[i]) + std::abs(weights[i + 1]));
            gaps[i] = std::max(gaps[i], pulses / rate * periods_per_second);
        }
    }
    return gaps;
}

}  // namespace detail

/// Optimize the times of a kick train with fixed weights. Warm starts are
/// gate timings in trap periods (first kick at 0) and are tried first.
inline KickTimingResult optimize_kick_times(const std::vector<int> &weights, const ModeSpectrum &spectrum,
                                            IonPair pair, double tau_cap, const OptimizerOptions &opt,
                                            const std::vector<std::vector<double>> &warm_starts = {}) {
    opt.validate();
    detail::require(weights.size() >= 2, "need at least two kicks to optimize");
    detail::require(std::isfinite(tau_cap) && tau_cap > 0.0, "tau_cap must be > 0");
    detail::check_pair(spectrum, pair);

    detail::TimingProblem prob;
    prob.weights = weights;
    prob.scaled = spectrum;
    const double period = 2.0 * std::numbers::pi / spectrum.trap_frequency;
    for (auto &w : prob.scaled.frequencies) w *= period;
    prob.pair = pair;
    prob.motional = opt.motional;
    prob.fidelity = opt.fidelity;
    prob.min_gap =
        detail::minimum_gaps(weights, {opt.min_separation_rate, opt.train_rate}, spectrum.trap_frequency);
    double reserved = 0.0;
    for (double g : prob.min_gap) reserved += g;
    detail::require(reserved <= tau_cap, "tau_cap is shorter than the minimum group separation allows");
    prob.slack = tau_cap - reserved;
    prob.expand(opt.train_rate > 0.0 ? spectrum.trap_frequency / (2.0 * std::numbers::pi) / opt.train_rate : 0.0);
    const int d = prob.dims();

    std::vector<std::vector<double>> inits;
    for (const auto &w : warm_starts) {
        if (w.size() != weights.size()) continue;
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i) x[i] = w[i + 1] - w[i] - prob.min_gap[i];
        inits.push_back(std::move(x));
    }
    inits.emplace_back(d, prob.slack / d);  // evenly spaced, time-symmetric
    for (int s = 0; s < opt.starts; ++s) {
        Rng rng(stream_seed(opt.seed, static_cast<std::uint64_t>(s)));
        std::vector<double> x(d);
        for (auto &v : x) v = rng.uniform(0.0, 1.2 * prob.slack / d);
        inits.push_back(std::move(x));
    }

    std::vector<detail::StartOutcome> outcomes;
    outcomes.reserve(inits.size());
    for (auto &x : inits) outcomes.push_back(detail::levenberg_marquardt(prob, x, opt.lm_iterations));

    std::vector<std::size_t> order(outcomes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detail::better_timing(outcomes[a].value, prob.times(outcomes[a].x), outcomes[b].value,
                                     prob.times(outcomes[b].x));
    });
    const std::size_t polish = std::min<std::size_t>(static_cast<std::size_t>(opt.polish_top), order.size());
    const std::vector<double> step(d, std::max(prob.slack, 1e-3) / 50.0);
    for (std::size_t p = 0; p < polish; ++p) {
        auto &o = outcomes[order[p]];
        if (o.value <= 1e-30) continue;
        auto nm = nelder_mead([&](const std::vector<double> &y) { return prob.projected_value(y); }, o.x, step,
                              opt.polish);
        prob.project(nm.x);
        const double v = prob.value(nm.x);
        if (v <= o.value) {
            o.x = nm.x;
            o.value = v;
        }
        o.converged = o.converged || nm.converged;
    }

    KickTimingResult result;
    const detail::StartOutcome *best = nullptr;
    for (const auto &o : outcomes) {
        if (o.converged) ++result.diagnostics.converged_starts;
        if (!best || detail::better_timing(o.value, prob.times(o.x), best->value, prob.times(best->x))) best = &o;
    }
    result.times = prob.times(best->x);
    result.infidelity = best->value;
    result.diagnostics.starts_run = static_cast<int>(outcomes.size());
    result.diagnostics.evaluations = prob.evaluations;
    result.diagnostics.converged = result.diagnostics.converged_starts > 0;
    return result;
}

namespace detail {

inline GateSolution make_solution(const Scheme &scheme, const TwoIonModel &model, double tau_cap,
                                  std::uint64_t seed, const KickTimingResult &r, const OptimizerOptions &opt) {
    GateSolution sol;
    sol.scheme = scheme;
    sol.chi = model.chi;
    sol.eta = model.eta;
    sol.trap_frequency = model.trap_frequency;
    sol.tau_cap = tau_cap;
    sol.seed = seed;
    const double period = model.trap_period();
    for (int j = 0; j < group_count; ++j) sol.timings[j] = r.times[j] * period;
    sol.achieved_tau = std::min(r.times.back(), tau_cap);
    sol.train_rate = opt.train_rate;
    sol.report = state_averaged_fidelity(sol.design_sequence(), model.spectrum(), opt.motional, opt.fidelity);
    sol.diagnostics = r.diagnostics;
    return sol;
}

inline std::uint64_t scheme_seed(std::uint64_t seed, const Scheme &scheme, double tau_cap) {
    return stream_seed(stream_seed(seed, hash_string(scheme.label())), hash_double(tau_cap));
}

inline std::vector<std::vector<double>> warm_periods(const GateSolution &sol) {
    const double f = sol.trap_frequency / (2.0 * std::numbers::pi);
    std::vector<double> t(group_count);
    for (int j = 0; j < group_count; ++j) t[j] = sol.timings[j] * f;
    return {t};
}

}  // namespace detail

inline bool better_solution(const GateSolution &a, const GateSolution &b) {
    const std::vector<double> ta(a.timings.begin(), a.timings.end());
    const std::vector<double> tb(b.timings.begin(), b.timings.end());
    return detail::better_timing(a.infidelity(), ta, b.infidelity(), tb);
}

/// Best timings for one ordering; the seed is mixed with the scheme label
/// and the cap so a result never depends on which other runs share a scan.
inline GateSolution optimize_timings(const Scheme &scheme, const TwoIonModel &model, double tau_cap,
                                     const OptimizerOptions &opt = {},
                                     const std::optional<GateSolution> &warm = std::nullopt) {
    scheme.validate();
    model.validate();
    const auto z = scheme.weights();
    OptimizerOptions local = opt;
    local.seed = detail::scheme_seed(opt.seed, scheme, tau_cap);
    std::vector<std::vector<double>> warm_starts;
    if (warm && warm->scheme == scheme) warm_starts = detail::warm_periods(*warm);
    const auto r = optimize_kick_times({z.begin(), z.end()}, model.spectrum(), IonPair{}, tau_cap, local,
                                       warm_starts);
    return detail::make_solution(scheme, model, tau_cap, opt.seed, r, opt);
}

/// Best solution over a set of orderings, with optional per-ordering warm
/// starts (matched by scheme).
inline GateSolution optimize_orderings(const std::vector<Scheme> &orderings, const TwoIonModel &model,
                                       double tau_cap, const OptimizerOptions &opt = {},
                                       std::vector<GateSolution> *per_ordering = nullptr,
                                       const std::vector<GateSolution> *warm = nullptr) {
    detail::require(!orderings.empty(), "need at least one ordering");
    OptimizerOptions inner = opt;
    inner.workers = 1;
    auto sols = parallel_map<GateSolution>(orderings.size(), opt.workers, [&](std::size_t i) {
        std::optional<GateSolution> w;
        if (warm && i < warm->size()) w = (*warm)[i];
        return optimize_timings(orderings[i], model, tau_cap, inner, w);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < sols.size(); ++i) {
        if (better_solution(sols[i], sols[best])) best = i;
    }
    GateSolution out = sols[best];
    if (per_ordering) *per_ordering = std::move(sols);
    return out;
}

/// One best-over-orderings solution per cap. Each ordering restarts from
/// its own solution at the previous cap, so the envelope cannot rise.
inline std::vector<GateSolution> sweep_time_caps(const std::vector<Scheme> &orderings, const TwoIonModel &model,
                                                 const std::vector<double> &caps,
                                                 const OptimizerOptions &opt = {}) {
    detail::require(!caps.empty(), "need at least one cap");
    for (std::size_t i = 1; i < caps.size(); ++i) {
        detail::require(caps[i] > caps[i - 1], "caps must be strictly ascending");
    }
    std::vector<GateSolution> best;
    std::vector<GateSolution> previous;
    for (double cap : caps) {
        std::vector<GateSolution> current;
        best.push_back(optimize_orderings(orderings, model, cap, opt, &current,
                                          previous.empty() ? nullptr : &previous));
        previous = std::move(current);
    }
    return best;
}

struct LandscapeRecord {
    int n = 0;
    double chi = 0.0;
    double n2_chi = 0.0;
    double n2_over_chi = 0.0;
    double tau_cap = 0.0;
    double achieved_tau = 0.0;
    double infidelity = 0.0;
    std::string ordering;

    /// Whether the best solution uses the whole allowed gate time.
    bool at_cap(double rel_tol = 1e-6) const { return achieved_tau >= tau_cap * (1.0 - rel_tol); }
};

inline LandscapeRecord landscape_record(const GateSolution &sol) {
    const double n = sol.scheme.n;
    return {sol.scheme.n, sol.chi,       n * n * sol.chi, n * n / sol.chi, sol.tau_cap, sol.achieved_tau,
            sol.infidelity(), sol.scheme.label()};
}

struct LandscapeResult {
    std::vector<LandscapeRecord> records;  // sorted by (cap, n, chi)
    std::vector<GateSolution> solutions;   // same order
};

/// Best-over-orderings solutions on the full (n, chi, cap) grid.
inline LandscapeResult landscape_scan(const RatioPattern &pattern, const std::vector<int> &ns,
                                      const std::vector<double> &chis, const std::vector<double> &caps,
                                      double eta, double trap_frequency, const OptimizerOptions &opt = {}) {
    detail::require(!ns.empty() && !chis.empty() && !caps.empty(), "landscape grids must be non-empty");
    std::vector<double> sorted_caps = caps;
    std::sort(sorted_caps.begin(), sorted_caps.end());
    sorted_caps.erase(std::unique(sorted_caps.begin(), sorted_caps.end()), sorted_caps.end());
    std::vector<int> sorted_ns = ns;
    std::sort(sorted_ns.begin(), sorted_ns.end());
    sorted_ns.erase(std::unique(sorted_ns.begin(), sorted_ns.end()), sorted_ns.end());
    std::vector<double> sorted_chis = chis;
    std::sort(sorted_chis.begin(), sorted_chis.end());
    sorted_chis.erase(std::unique(sorted_chis.begin(), sorted_chis.end()), sorted_chis.end());

    const std::size_t cells = sorted_ns.size() * sorted_chis.size();
    OptimizerOptions inner = opt;
    inner.workers = 1;
    auto sweeps = parallel_map<std::vector<GateSolution>>(cells, opt.workers, [&](std::size_t c) {
        const int n = sorted_ns[c / sorted_chis.size()];
        const double chi = sorted_chis[c % sorted_chis.size()];
        return sweep_time_caps(enumerate_orderings(pattern, n), TwoIonModel{chi, eta, trap_frequency},
                               sorted_caps, inner);
    });

    LandscapeResult out;
    for (std::size_t k = 0; k < sorted_caps.size(); ++k) {
        for (std::size_t c = 0; c < cells; ++c) {
            out.records.push_back(landscape_record(sweeps[c][k]));
            out.solutions.push_back(sweeps[c][k]);
        }
    }
    return out;
}

}  // namespace fastgate

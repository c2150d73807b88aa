#pragma once

// Two-ion-optimized gates applied unchanged to one adjacent pair of an
// N-ion microtrap chain, where every collective mode picks up residual
// motion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "fastgate/dynamics.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/modes.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/parallel.hpp"
#include "fastgate/physics.hpp"
#include "fastgate/random.hpp"
#include "fastgate/stats.hpp"

namespace fastgate {

/// Chain geometry used by the scaling study: ions at their trap centres,
/// so two ions reproduce the two-ion spectrum exactly.
inline ModeOptions scaling_mode_options() {
    ModeOptions opt;
    opt.equilibrium = EquilibriumMode::TrapCenters;
    return opt;
}

inline IonPair inner_pair(int ion_count) { return {ion_count / 2 - 1, ion_count / 2}; }
inline IonPair outer_pair(int) { return {0, 1}; }

struct ChainGateEvaluation {
    int ion_count = 0;
    IonPair pair;
    double infidelity = 0.0;
    std::array<std::vector<double>, 4> per_mode_residuals;  // |Delta_m| per basis state
};

inline ModeSpectrum chain_spectrum_for(const GateSolution &solution, int ion_count,
                                       const ModeOptions &opt = scaling_mode_options()) {
    detail::require(ion_count >= 2, "chain needs at least two ions");
    return chain_spectrum(ion_count, xi_from_chi(solution.chi), solution.trap_frequency, solution.eta, opt);
}

inline ChainGateEvaluation chain_infidelity(const GateSolution &solution, const ModeSpectrum &spectrum, IonPair pair,
                                            const MotionalState &motional = {}, const FidelityOptions &opt = {}) {
    detail::require(std::abs(pair.second - pair.first) == 1, "only nearest-neighbour pairs can be gated");
    detail::check_pair(spectrum, pair);
    const auto report = state_averaged_fidelity(solution.design_sequence(pair), spectrum, motional, opt);
    ChainGateEvaluation out;
    out.ion_count = spectrum.ion_count();
    out.pair = pair;
    out.infidelity = report.infidelity;
    for (int s = 0; s < 4; ++s) {
        for (const auto &d : report.residual_displacements[s]) out.per_mode_residuals[s].push_back(std::abs(d));
    }
    return out;
}

inline ChainGateEvaluation chain_infidelity(const GateSolution &solution, int ion_count, IonPair pair,
                                            const ModeOptions &mode_opt = scaling_mode_options(),
                                            const MotionalState &motional = {}, const FidelityOptions &opt = {}) {
    return chain_infidelity(solution, chain_spectrum_for(solution, ion_count, mode_opt), pair, motional, opt);
}

struct PlateauRecord {
    int ion_count = 0;
    double inner = 0.0;  // centre pair
    double outer = 0.0;  // edge pair
};

inline std::vector<PlateauRecord> plateau_scan(const GateSolution &solution, const std::vector<int> &ion_counts,
                                               const ModeOptions &mode_opt = scaling_mode_options(),
                                               int workers = 1) {
    return parallel_map<PlateauRecord>(ion_counts.size(), workers, [&](std::size_t i) {
        const int n = ion_counts[i];
        const auto spec = chain_spectrum_for(solution, n, mode_opt);
        return PlateauRecord{n, chain_infidelity(solution, spec, inner_pair(n)).infidelity,
                             chain_infidelity(solution, spec, outer_pair(n)).infidelity};
    });
}

/// Seeded uniform sample, without replacement, of archived solutions below
/// the infidelity threshold. The result keeps archive order.
inline std::vector<GateSolution> select_high_fidelity_gates(const std::vector<GateSolution> &archive,
                                                            std::size_t count, std::uint64_t seed,
                                                            double threshold = 1e-2) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < archive.size(); ++i) {
        if (archive[i].infidelity() < threshold) eligible.push_back(i);
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < eligible.size() && i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }
    eligible.resize(std::min(count, eligible.size()));
    std::sort(eligible.begin(), eligible.end());
    std::vector<GateSolution> out;
    for (auto i : eligible) out.push_back(archive[i]);
    return out;
}

enum class PairChoice { Inner, Outer };

struct ScalingRecord {
    double chi = 0.0;
    double two_ion = 0.0;
    double chain = 0.0;
    double ratio = 0.0;
    bool included = false;  // false when the two-ion infidelity is too small for a ratio
};

struct ScalingScan {
    int ion_count = 0;
    std::vector<ScalingRecord> records;
    LinearFit fit;  // log10(ratio) against log10(chi), included records only
};

inline constexpr double minimum_ratio_infidelity = 1e-14;

inline ScalingScan scaling_ratio_scan(const std::vector<GateSolution> &gates, int ion_count = 50,
                                      PairChoice choice = PairChoice::Inner, int workers = 1) {
    detail::require(ion_count >= 2, "chain needs at least two ions");
    ScalingScan out;
    out.ion_count = ion_count;
    out.records = parallel_map<ScalingRecord>(gates.size(), workers, [&](std::size_t i) {
        const auto &g = gates[i];
        ScalingRecord rec;
        rec.chi = g.chi;
        rec.two_ion = chain_infidelity(g, 2, {0, 1}).infidelity;
        const IonPair pair = choice == PairChoice::Inner ? inner_pair(ion_count) : outer_pair(ion_count);
        rec.chain = chain_infidelity(g, ion_count, pair).infidelity;
        rec.included = rec.two_ion >= minimum_ratio_infidelity;
        rec.ratio = rec.chain / rec.two_ion;
        return rec;
    });
    std::vector<double> x, y;
    std::set<double> distinct;
    for (const auto &r : out.records) {
        if (!r.included) continue;
        x.push_back(std::log10(r.chi));
        y.push_back(std::log10(r.ratio));
        distinct.insert(r.chi);
    }
    if (distinct.size() < 2) {
        throw UnderdeterminedFit("scaling fit needs gates at two or more distinct chi values");
    }
    out.fit = linear_fit(x, y);
    return out;
}

}  // namespace fastgate

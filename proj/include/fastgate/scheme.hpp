#pragma once

// Six-group kick schemes: a signed ratio pattern scaled by an integer n.
// Time reversal and a global sign flip both leave the gate fidelity
// unchanged, so orderings are enumerated as classes under that group.

#include <algorithm>
#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fastgate/errors.hpp"

namespace fastgate {

inline constexpr int group_count = 6;

using RatioPattern = std::array<int, group_count>;

inline constexpr RatioPattern default_pattern{-1, 2, -2, 2, -2, 1};

inline void validate_pattern(const RatioPattern &p) {
    for (int r : p) {
        detail::require(r == 1 || r == -1 || r == 2 || r == -2, "ratio entries must be +-1 or +-2");
    }
}

inline RatioPattern reversed(RatioPattern p) {
    std::reverse(p.begin(), p.end());
    return p;
}

inline RatioPattern negated(RatioPattern p) {
    for (auto &r : p) r = -r;
    return p;
}

/// Smallest representative of the pattern's class under reversal and sign flip.
inline RatioPattern canonical_ordering(const RatioPattern &p) {
    return std::min({p, reversed(p), negated(p), negated(reversed(p))});
}

inline std::string pattern_label(const RatioPattern &p) {
    std::string out;
    for (int r : p) {
        out += r > 0 ? '+' : '-';
        out += std::to_string(r > 0 ? r : -r);
    }
    return out;
}

/// Inverse of pattern_label.
inline RatioPattern parse_pattern_label(const std::string &label) {
    detail::require(label.size() == 2 * group_count, "pattern label must have 6 signed digits: " + label);
    RatioPattern p{};
    for (int j = 0; j < group_count; ++j) {
        const char sign = label[2 * j];
        const char digit = label[2 * j + 1];
        detail::require((sign == '+' || sign == '-') && (digit == '1' || digit == '2'),
                        "malformed pattern label: " + label);
        p[j] = (sign == '+' ? 1 : -1) * (digit - '0');
    }
    return p;
}

struct Scheme {
    RatioPattern ratios = default_pattern;  // in time order
    int n = 1;

    std::string label() const { return pattern_label(ratios); }

    std::array<int, group_count> weights() const {
        std::array<int, group_count> z{};
        for (int j = 0; j < group_count; ++j) z[j] = n * ratios[j];
        return z;
    }

    int total_pulse_pairs() const {
        int total = 0;
        for (int r : ratios) total += n * (r > 0 ? r : -r);
        return total;
    }

    void validate() const {
        validate_pattern(ratios);
        detail::require(n >= 1, "scheme scale n must be a positive integer");
    }

    friend bool operator==(const Scheme &, const Scheme &) = default;
};

/// Distinct time orderings of the pattern's entries, one canonical
/// representative per symmetry class, in ascending order.
inline std::vector<Scheme> enumerate_orderings(const RatioPattern &pattern, int n = 1) {
    validate_pattern(pattern);
    RatioPattern p = pattern;
    std::sort(p.begin(), p.end());
    std::set<RatioPattern> classes;
    do {
        classes.insert(canonical_ordering(p));
    } while (std::next_permutation(p.begin(), p.end()));
    std::vector<Scheme> out;
    out.reserve(classes.size());
    for (const auto &c : classes) out.push_back(Scheme{c, n});
    return out;
}

/// All patterns over {+-1, +-2} whose signs alternate group to group,
/// reduced to canonical representatives.
inline std::vector<RatioPattern> sign_alternating_patterns(bool zero_sum_only = true) {
    std::set<RatioPattern> found;
    for (int mask = 0; mask < (1 << group_count); ++mask) {
        RatioPattern p{};
        int sum = 0;
        for (int j = 0; j < group_count; ++j) {
            const int mag = (mask >> j) & 1 ? 2 : 1;
            p[j] = (j % 2 == 0 ? -1 : 1) * mag;
            sum += p[j];
        }
        if (zero_sum_only && sum != 0) continue;
        found.insert(canonical_ordering(p));
    }
    return {found.begin(), found.end()};
}

}  // namespace fastgate

#pragma once

// Run configuration. Values are kept in the units the file uses
// (micrometres, MHz, trap periods) so parse -> write -> parse is exact;
// the to_* helpers convert to SI angular units for the library.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "fastgate/dynamics.hpp"
#include "fastgate/errors.hpp"
#include "fastgate/fock.hpp"
#include "fastgate/modes.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/physics.hpp"
#include "fastgate/scheme.hpp"

namespace fastgate::io {

/// Malformed or invalid configuration; the message names the field and line.
class ConfigError : public InvalidArgument {
  public:
    using InvalidArgument::InvalidArgument;
};

enum class StudyKind { Modes, Optimize, Landscape, RobustnessJitter, RobustnessReprate, Scaling, OracleCheck };

inline constexpr std::array<std::pair<StudyKind, std::string_view>, 7> study_names{{
    {StudyKind::Modes, "modes"},
    {StudyKind::Optimize, "optimize"},
    {StudyKind::Landscape, "landscape"},
    {StudyKind::RobustnessJitter, "robustness-jitter"},
    {StudyKind::RobustnessReprate, "robustness-reprate"},
    {StudyKind::Scaling, "scaling"},
    {StudyKind::OracleCheck, "oracle-check"},
}};

inline std::string to_string(StudyKind k) {
    for (const auto &[kind, name] : study_names) {
        if (kind == k) return std::string(name);
    }
    throw InternalError("unknown study kind");
}

inline std::optional<StudyKind> study_from_string(std::string_view s) {
    for (const auto &[kind, name] : study_names) {
        if (name == s) return kind;
    }
    return std::nullopt;
}

struct PhysicsSection {
    int ion_count = 2;
    double spacing_um = 100.0;
    double trap_frequency_mhz = 1.0;
    double wavelength_nm = 729.0;
    std::optional<double> chi;  // overrides the value derived from the spacing
    std::optional<double> eta;  // overrides the value derived from the wavelength
    std::vector<double> occupations;
    std::string equilibrium = "relaxed";  // relaxed | trap-centers
    std::string coupling = "all";         // all | nearest-neighbour

    friend bool operator==(const PhysicsSection &, const PhysicsSection &) = default;
};

struct SchemeSection {
    std::array<int, 6> pattern = default_pattern;
    int n = 50;
    std::vector<std::string> orderings;  // labels; empty means every ordering class

    friend bool operator==(const SchemeSection &, const SchemeSection &) = default;
};

struct OptimizerSection {
    std::vector<double> caps{1.4};  // trap periods
    int starts = 8;
    int lm_iterations = 200;
    int polish_top = 4;
    int polish_evaluations = 4000;
    double min_separation_mhz = 0.0;
    double train_rate_mhz = 0.0;
    std::string averaging = "haar";  // haar | process

    friend bool operator==(const OptimizerSection &, const OptimizerSection &) = default;
};

struct LandscapeSection {
    std::vector<int> n{10, 20, 40, 80, 160};
    std::vector<double> chi{1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
    std::vector<double> caps{0.7, 1.0, 1.4};

    friend bool operator==(const LandscapeSection &, const LandscapeSection &) = default;
};

struct JitterSection {
    std::vector<double> sigma{0.0, 1e-5, 1e-4, 1e-3};  // trap periods
    int samples = 1000;
    bool per_pulse = false;

    friend bool operator==(const JitterSection &, const JitterSection &) = default;
};

struct RepRateSection {
    std::vector<double> rates_mhz{100, 135, 150, 200, 250, 300, 400, 600, 1000};
    std::optional<double> alignment_ns;
    double grid_rate_mhz = 0.0;        // > 0 moves the gate onto this slot grid before the scan
    double grid_separation_mhz = 0.0;  // resolvability kept during the grid search

    friend bool operator==(const RepRateSection &, const RepRateSection &) = default;
};

struct ScalingSection {
    std::vector<int> ion_counts{2, 3, 4, 6, 8, 10, 14, 20, 30, 50};
    std::vector<double> chi{1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
    std::vector<int> n{20, 50, 100};
    int gates = 10;
    double threshold = 1e-2;
    int ratio_ion_count = 50;
    std::string pair = "inner";  // inner | outer

    friend bool operator==(const ScalingSection &, const ScalingSection &) = default;
};

struct OracleSection {
    int sequences = 100;
    int max_weight = 4;
    int max_kicks = 6;
    double max_time = 1.5;  // trap periods
    int truncation = 16;
    double tolerance = 1e-9;
    double threshold = 1e-6;

    friend bool operator==(const OracleSection &, const OracleSection &) = default;
};

struct RunConfig {
    StudyKind study = StudyKind::Optimize;
    std::uint64_t seed = 1;
    std::string output = "out";
    int workers = 1;
    PhysicsSection physics;
    SchemeSection scheme;
    OptimizerSection optimizer;
    LandscapeSection landscape;
    JitterSection jitter;
    RepRateSection reprate;
    ScalingSection scaling;
    OracleSection oracle;

    friend bool operator==(const RunConfig &, const RunConfig &) = default;
};

namespace detail {

using fastgate::detail::require;

[[noreturn]] inline void fail(const std::string &path, const toml::node *node, const std::string &msg) {
    std::string where = path;
    if (node && node->source().begin.line > 0) where += " (line " + std::to_string(node->source().begin.line) + ")";
    throw ConfigError(where + ": " + msg);
}

inline void check(bool ok, const std::string &path, const toml::node *node, const std::string &msg) {
    if (!ok) fail(path, node, msg);
}

class Reader {
  public:
    Reader(const toml::table &table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

    std::string path(std::string_view key) const { return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key); }

    const toml::node *node(std::string_view key) {
        seen_.insert(std::string(key));
        return table_.get(key);
    }

    void get(std::string_view key, double &out) {
        if (const auto *n = node(key)) out = as_double(*n, path(key));
    }
    void get(std::string_view key, std::optional<double> &out) {
        if (const auto *n = node(key)) out = as_double(*n, path(key));
    }
    void get(std::string_view key, int &out) {
        if (const auto *n = node(key)) out = as_int(*n, path(key));
    }
    void get(std::string_view key, std::uint64_t &out) {
        if (const auto *n = node(key)) {
            const auto v = n->value<std::int64_t>();
            check(n->is_integer() && v && *v >= 0, path(key), n, "expected a non-negative integer");
            out = static_cast<std::uint64_t>(*v);
        }
    }
    void get(std::string_view key, bool &out) {
        if (const auto *n = node(key)) {
            check(n->is_boolean(), path(key), n, "expected true or false");
            out = *n->value<bool>();
        }
    }
    void get(std::string_view key, std::string &out) {
        if (const auto *n = node(key)) {
            check(n->is_string(), path(key), n, "expected a string");
            out = *n->value<std::string>();
        }
    }
    void get(std::string_view key, std::vector<double> &out) {
        if (const auto *n = node(key)) {
            const auto *arr = n->as_array();
            check(arr != nullptr, path(key), n, "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(as_double((*arr)[i], path(key) + "[" + std::to_string(i) + "]"));
        }
    }
    void get(std::string_view key, std::vector<int> &out) {
        if (const auto *n = node(key)) {
            const auto *arr = n->as_array();
            check(arr != nullptr, path(key), n, "expected an array of integers");
            out.clear();
            for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(as_int((*arr)[i], path(key) + "[" + std::to_string(i) + "]"));
        }
    }
    void get(std::string_view key, std::vector<std::string> &out) {
        if (const auto *n = node(key)) {
            const auto *arr = n->as_array();
            check(arr != nullptr, path(key), n, "expected an array of strings");
            out.clear();
            for (std::size_t i = 0; i < arr->size(); ++i) {
                const auto &e = (*arr)[i];
                check(e.is_string(), path(key) + "[" + std::to_string(i) + "]", &e, "expected a string");
                out.push_back(*e.value<std::string>());
            }
        }
    }

    /// Every key the schema did not ask for is an error.
    void reject_unknown() const {
        for (const auto &[k, v] : table_) {
            if (!seen_.count(std::string(k.str()))) fail(path(k.str()), &v, "unknown key");
        }
    }

  private:
    static double as_double(const toml::node &n, const std::string &path) {
        if (n.is_floating_point()) return *n.value<double>();
        if (n.is_integer()) return static_cast<double>(*n.value<std::int64_t>());
        fail(path, &n, "expected a number");
    }
    static int as_int(const toml::node &n, const std::string &path) {
        check(n.is_integer(), path, &n, "expected an integer");
        const auto v = *n.value<std::int64_t>();
        check(v >= -2147483647 && v <= 2147483647, path, &n, "integer out of range");
        return static_cast<int>(v);
    }

    const toml::table &table_;
    std::string prefix_;
    std::set<std::string> seen_;
};

inline const toml::table *sub_table(Reader &top, std::string_view key) {
    const auto *n = top.node(key);
    if (!n) return nullptr;
    const auto *t = n->as_table();
    check(t != nullptr, std::string(key), n, "expected a table");
    return t;
}

}  // namespace detail

/// Range and consistency checks; `field` paths match the file layout.
inline void validate(const RunConfig &c) {
    auto need = [](bool ok, const std::string &field, const std::string &msg) {
        if (!ok) throw ConfigError(field + ": " + msg);
    };
    auto positive = [&](double v, const std::string &field) { need(std::isfinite(v) && v > 0.0, field, "must be > 0"); };
    auto non_negative = [&](double v, const std::string &field) { need(std::isfinite(v) && v >= 0.0, field, "must be >= 0"); };
    auto non_empty = [&](std::size_t n, const std::string &field) { need(n > 0, field, "must not be empty"); };

    need(c.workers >= 1, "workers", "must be >= 1");
    need(c.seed <= static_cast<std::uint64_t>(INT64_MAX), "seed", "must fit in a signed 64-bit TOML integer");
    need(!c.output.empty(), "output", "must not be empty");

    const auto &p = c.physics;
    need(p.ion_count >= 2, "physics.ion_count", "must be >= 2");
    positive(p.spacing_um, "physics.spacing_um");
    positive(p.trap_frequency_mhz, "physics.trap_frequency_mhz");
    positive(p.wavelength_nm, "physics.wavelength_nm");
    if (p.chi) positive(*p.chi, "physics.chi");
    if (p.eta) positive(*p.eta, "physics.eta");
    for (std::size_t i = 0; i < p.occupations.size(); ++i) non_negative(p.occupations[i], "physics.occupations[" + std::to_string(i) + "]");
    need(p.equilibrium == "relaxed" || p.equilibrium == "trap-centers", "physics.equilibrium", "must be relaxed or trap-centers");
    need(p.coupling == "all" || p.coupling == "nearest-neighbour", "physics.coupling", "must be all or nearest-neighbour");

    try {
        validate_pattern(c.scheme.pattern);
    } catch (const InvalidArgument &e) {
        throw ConfigError(std::string("scheme.pattern: ") + e.what());
    }
    need(c.scheme.n >= 1, "scheme.n", "must be >= 1");
    for (std::size_t i = 0; i < c.scheme.orderings.size(); ++i) {
        const auto field = "scheme.orderings[" + std::to_string(i) + "]";
        RatioPattern p2{};
        try {
            p2 = parse_pattern_label(c.scheme.orderings[i]);
        } catch (const InvalidArgument &e) {
            throw ConfigError(field + ": " + e.what());
        }
        auto a = p2, b = c.scheme.pattern;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        need(a == b, field, "is not an ordering of scheme.pattern");
    }

    const auto &o = c.optimizer;
    non_empty(o.caps.size(), "optimizer.caps");
    for (std::size_t i = 0; i < o.caps.size(); ++i) {
        positive(o.caps[i], "optimizer.caps[" + std::to_string(i) + "]");
        if (i > 0) need(o.caps[i] > o.caps[i - 1], "optimizer.caps", "must be strictly ascending");
    }
    need(o.starts >= 0, "optimizer.starts", "must be >= 0");
    need(o.lm_iterations >= 0, "optimizer.lm_iterations", "must be >= 0");
    need(o.polish_top >= 0, "optimizer.polish_top", "must be >= 0");
    need(o.polish_evaluations >= 1, "optimizer.polish_evaluations", "must be >= 1");
    non_negative(o.min_separation_mhz, "optimizer.min_separation_mhz");
    non_negative(o.train_rate_mhz, "optimizer.train_rate_mhz");
    need(o.averaging == "haar" || o.averaging == "process", "optimizer.averaging", "must be haar or process");

    const auto &l = c.landscape;
    if (c.study == StudyKind::Landscape) {
        non_empty(l.n.size(), "landscape.n");
        non_empty(l.chi.size(), "landscape.chi");
        non_empty(l.caps.size(), "landscape.caps");
    }
    for (std::size_t i = 0; i < l.n.size(); ++i) need(l.n[i] >= 1, "landscape.n[" + std::to_string(i) + "]", "must be >= 1");
    for (std::size_t i = 0; i < l.chi.size(); ++i) positive(l.chi[i], "landscape.chi[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < l.caps.size(); ++i) positive(l.caps[i], "landscape.caps[" + std::to_string(i) + "]");

    if (c.study == StudyKind::RobustnessJitter) non_empty(c.jitter.sigma.size(), "jitter.sigma");
    for (std::size_t i = 0; i < c.jitter.sigma.size(); ++i) non_negative(c.jitter.sigma[i], "jitter.sigma[" + std::to_string(i) + "]");
    need(c.jitter.samples >= 1, "jitter.samples", "must be >= 1");

    if (c.study == StudyKind::RobustnessReprate) non_empty(c.reprate.rates_mhz.size(), "reprate.rates_mhz");
    for (std::size_t i = 0; i < c.reprate.rates_mhz.size(); ++i) positive(c.reprate.rates_mhz[i], "reprate.rates_mhz[" + std::to_string(i) + "]");
    if (c.reprate.alignment_ns) need(std::isfinite(*c.reprate.alignment_ns), "reprate.alignment_ns", "must be finite");
    non_negative(c.reprate.grid_rate_mhz, "reprate.grid_rate_mhz");
    non_negative(c.reprate.grid_separation_mhz, "reprate.grid_separation_mhz");

    const auto &s = c.scaling;
    if (c.study == StudyKind::Scaling) {
        non_empty(s.ion_counts.size(), "scaling.ion_counts");
        non_empty(s.chi.size(), "scaling.chi");
        non_empty(s.n.size(), "scaling.n");
    }
    for (std::size_t i = 0; i < s.ion_counts.size(); ++i) need(s.ion_counts[i] >= 2, "scaling.ion_counts[" + std::to_string(i) + "]", "must be >= 2");
    for (std::size_t i = 0; i < s.chi.size(); ++i) positive(s.chi[i], "scaling.chi[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < s.n.size(); ++i) need(s.n[i] >= 1, "scaling.n[" + std::to_string(i) + "]", "must be >= 1");
    need(s.gates >= 1, "scaling.gates", "must be >= 1");
    positive(s.threshold, "scaling.threshold");
    need(s.ratio_ion_count >= 2, "scaling.ratio_ion_count", "must be >= 2");
    need(s.pair == "inner" || s.pair == "outer", "scaling.pair", "must be inner or outer");

    const auto &q = c.oracle;
    need(q.sequences >= 1, "oracle.sequences", "must be >= 1");
    need(q.max_weight >= 1, "oracle.max_weight", "must be >= 1");
    need(q.max_kicks >= 1, "oracle.max_kicks", "must be >= 1");
    positive(q.max_time, "oracle.max_time");
    need(q.truncation >= 8, "oracle.truncation", "must be >= 8");
    positive(q.tolerance, "oracle.tolerance");
    positive(q.threshold, "oracle.threshold");
}

/// Parse TOML text. When the file has no `study` key, `fallback_study`
/// supplies it (the CLI subcommand); otherwise the two must agree.
inline RunConfig parse_config_text(std::string_view text, const std::string &source_name = "config",
                                   std::optional<StudyKind> fallback_study = std::nullopt) {
    toml::table root;
    try {
        root = toml::parse(text, source_name);
    } catch (const toml::parse_error &e) {
        throw ConfigError(source_name + " (line " + std::to_string(e.source().begin.line) + "): " +
                          std::string(e.description()));
    }
    RunConfig c;
    detail::Reader top(root, "");
    std::string study;
    if (const auto *n = top.node("study")) {
        detail::check(n->is_string(), "study", n, "expected a string");
        study = *n->value<std::string>();
        const auto kind = study_from_string(study);
        detail::check(kind.has_value(), "study", n, "unknown study kind '" + study + "'");
        if (fallback_study && *fallback_study != *kind) {
            detail::fail("study", n, "config is for '" + study + "' but '" + to_string(*fallback_study) + "' was requested");
        }
        c.study = *kind;
    } else if (fallback_study) {
        c.study = *fallback_study;
    } else {
        throw ConfigError("study: missing; give one of modes, optimize, landscape, robustness-jitter, "
                          "robustness-reprate, scaling, oracle-check");
    }
    top.get("seed", c.seed);
    top.get("output", c.output);
    top.get("workers", c.workers);

    auto section = [&](std::string_view name, auto &&fill) {
        if (const auto *t = detail::sub_table(top, name)) {
            detail::Reader r(*t, std::string(name));
            fill(r);
            r.reject_unknown();
        }
    };
    section("physics", [&](detail::Reader &r) {
        auto &p = c.physics;
        r.get("ion_count", p.ion_count);
        r.get("spacing_um", p.spacing_um);
        r.get("trap_frequency_mhz", p.trap_frequency_mhz);
        r.get("wavelength_nm", p.wavelength_nm);
        r.get("chi", p.chi);
        r.get("eta", p.eta);
        r.get("occupations", p.occupations);
        r.get("equilibrium", p.equilibrium);
        r.get("coupling", p.coupling);
    });
    section("scheme", [&](detail::Reader &r) {
        std::vector<int> pattern;
        if (const auto *n = r.node("pattern")) {
            r.get("pattern", pattern);
            detail::check(pattern.size() == 6, "scheme.pattern", n, "must have exactly 6 entries");
            std::copy(pattern.begin(), pattern.end(), c.scheme.pattern.begin());
        }
        r.get("n", c.scheme.n);
        r.get("orderings", c.scheme.orderings);
    });
    section("optimizer", [&](detail::Reader &r) {
        auto &o = c.optimizer;
        r.get("caps", o.caps);
        r.get("starts", o.starts);
        r.get("lm_iterations", o.lm_iterations);
        r.get("polish_top", o.polish_top);
        r.get("polish_evaluations", o.polish_evaluations);
        r.get("min_separation_mhz", o.min_separation_mhz);
        r.get("train_rate_mhz", o.train_rate_mhz);
        r.get("averaging", o.averaging);
    });
    section("landscape", [&](detail::Reader &r) {
        r.get("n", c.landscape.n);
        r.get("chi", c.landscape.chi);
        r.get("caps", c.landscape.caps);
    });
    section("jitter", [&](detail::Reader &r) {
        r.get("sigma", c.jitter.sigma);
        r.get("samples", c.jitter.samples);
        r.get("per_pulse", c.jitter.per_pulse);
    });
    section("reprate", [&](detail::Reader &r) {
        r.get("rates_mhz", c.reprate.rates_mhz);
        r.get("alignment_ns", c.reprate.alignment_ns);
        r.get("grid_rate_mhz", c.reprate.grid_rate_mhz);
        r.get("grid_separation_mhz", c.reprate.grid_separation_mhz);
    });
    section("scaling", [&](detail::Reader &r) {
        auto &s = c.scaling;
        r.get("ion_counts", s.ion_counts);
        r.get("chi", s.chi);
        r.get("n", s.n);
        r.get("gates", s.gates);
        r.get("threshold", s.threshold);
        r.get("ratio_ion_count", s.ratio_ion_count);
        r.get("pair", s.pair);
    });
    section("oracle", [&](detail::Reader &r) {
        auto &q = c.oracle;
        r.get("sequences", q.sequences);
        r.get("max_weight", q.max_weight);
        r.get("max_kicks", q.max_kicks);
        r.get("max_time", q.max_time);
        r.get("truncation", q.truncation);
        r.get("tolerance", q.tolerance);
        r.get("threshold", q.threshold);
    });
    top.reject_unknown();
    validate(c);
    return c;
}

inline RunConfig parse_config(const std::filesystem::path &file, std::optional<StudyKind> fallback_study = std::nullopt) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError(file.string() + ": cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), file.string(), fallback_study);
}

namespace detail {

/// Shortest text that reads back to the same double, always TOML-float shaped.
inline std::string format_double(double v) {
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline std::string quote(const std::string &s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out + "\"";
}

template <class T, class F>
std::string list(const std::vector<T> &v, F &&fmt) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out + "]";
}

inline std::string doubles(const std::vector<double> &v) { return list(v, format_double); }
inline std::string ints(const std::vector<int> &v) {
    return list(v, [](int x) { return std::to_string(x); });
}

}  // namespace detail

/// Fully resolved TOML: every field, defaults included.
inline std::string serialize_config(const RunConfig &c) {
    using namespace detail;
    std::ostringstream o;
    o << "study = " << quote(to_string(c.study)) << "\n";
    o << "seed = " << c.seed << "\n";
    o << "output = " << quote(c.output) << "\n";
    o << "workers = " << c.workers << "\n";
    const auto &p = c.physics;
    o << "\n[physics]\n";
    o << "ion_count = " << p.ion_count << "\n";
    o << "spacing_um = " << format_double(p.spacing_um) << "\n";
    o << "trap_frequency_mhz = " << format_double(p.trap_frequency_mhz) << "\n";
    o << "wavelength_nm = " << format_double(p.wavelength_nm) << "\n";
    if (p.chi) o << "chi = " << format_double(*p.chi) << "\n";
    if (p.eta) o << "eta = " << format_double(*p.eta) << "\n";
    o << "occupations = " << doubles(p.occupations) << "\n";
    o << "equilibrium = " << quote(p.equilibrium) << "\n";
    o << "coupling = " << quote(p.coupling) << "\n";
    o << "\n[scheme]\n";
    o << "pattern = " << ints({c.scheme.pattern.begin(), c.scheme.pattern.end()}) << "\n";
    o << "n = " << c.scheme.n << "\n";
    o << "orderings = " << list(c.scheme.orderings, quote) << "\n";
    const auto &opt = c.optimizer;
    o << "\n[optimizer]\n";
    o << "caps = " << doubles(opt.caps) << "\n";
    o << "starts = " << opt.starts << "\n";
    o << "lm_iterations = " << opt.lm_iterations << "\n";
    o << "polish_top = " << opt.polish_top << "\n";
    o << "polish_evaluations = " << opt.polish_evaluations << "\n";
    o << "min_separation_mhz = " << format_double(opt.min_separation_mhz) << "\n";
    o << "train_rate_mhz = " << format_double(opt.train_rate_mhz) << "\n";
    o << "averaging = " << quote(opt.averaging) << "\n";
    o << "\n[landscape]\n";
    o << "n = " << ints(c.landscape.n) << "\n";
    o << "chi = " << doubles(c.landscape.chi) << "\n";
    o << "caps = " << doubles(c.landscape.caps) << "\n";
    o << "\n[jitter]\n";
    o << "sigma = " << doubles(c.jitter.sigma) << "\n";
    o << "samples = " << c.jitter.samples << "\n";
    o << "per_pulse = " << (c.jitter.per_pulse ? "true" : "false") << "\n";
    o << "\n[reprate]\n";
    o << "rates_mhz = " << doubles(c.reprate.rates_mhz) << "\n";
    if (c.reprate.alignment_ns) o << "alignment_ns = " << format_double(*c.reprate.alignment_ns) << "\n";
    o << "grid_rate_mhz = " << format_double(c.reprate.grid_rate_mhz) << "\n";
    o << "grid_separation_mhz = " << format_double(c.reprate.grid_separation_mhz) << "\n";
    const auto &s = c.scaling;
    o << "\n[scaling]\n";
    o << "ion_counts = " << ints(s.ion_counts) << "\n";
    o << "chi = " << doubles(s.chi) << "\n";
    o << "n = " << ints(s.n) << "\n";
    o << "gates = " << s.gates << "\n";
    o << "threshold = " << format_double(s.threshold) << "\n";
    o << "ratio_ion_count = " << s.ratio_ion_count << "\n";
    o << "pair = " << quote(s.pair) << "\n";
    const auto &q = c.oracle;
    o << "\n[oracle]\n";
    o << "sequences = " << q.sequences << "\n";
    o << "max_weight = " << q.max_weight << "\n";
    o << "max_kicks = " << q.max_kicks << "\n";
    o << "max_time = " << format_double(q.max_time) << "\n";
    o << "truncation = " << q.truncation << "\n";
    o << "tolerance = " << format_double(q.tolerance) << "\n";
    o << "threshold = " << format_double(q.threshold) << "\n";
    return o.str();
}

// Conversions to library units.

inline double angular_frequency(double mhz) { return 2.0 * std::numbers::pi * mhz * 1e6; }

inline TrapArrayConfig trap_config(const RunConfig &c) {
    TrapArrayConfig t;
    t.ion_count = c.physics.ion_count;
    t.spacing = c.physics.spacing_um * 1e-6;
    t.trap_frequency = angular_frequency(c.physics.trap_frequency_mhz);
    t.effective_wavenumber = counter_propagating_wavenumber(c.physics.wavelength_nm * 1e-9);
    return t;
}

inline ModeOptions mode_options(const RunConfig &c) {
    ModeOptions m;
    m.equilibrium = c.physics.equilibrium == "trap-centers" ? EquilibriumMode::TrapCenters : EquilibriumMode::Relaxed;
    m.coupling = c.physics.coupling == "nearest-neighbour" ? CouplingRange::NearestNeighbour : CouplingRange::All;
    return m;
}

/// Two-ion model; chi and eta come from the geometry unless overridden.
inline TwoIonModel two_ion_model(const RunConfig &c) {
    const auto derived = derive_params(trap_config(c));
    return {c.physics.chi.value_or(derived.chi), c.physics.eta.value_or(derived.eta),
            angular_frequency(c.physics.trap_frequency_mhz)};
}

inline MotionalState motional_state(const RunConfig &c) { return {c.physics.occupations}; }

inline FidelityOptions fidelity_options(const RunConfig &c) {
    FidelityOptions f;
    f.averaging = c.optimizer.averaging == "process" ? Averaging::Process : Averaging::Haar;
    return f;
}

inline OptimizerOptions optimizer_options(const RunConfig &c) {
    OptimizerOptions o;
    o.starts = c.optimizer.starts;
    o.seed = c.seed;
    o.lm_iterations = c.optimizer.lm_iterations;
    o.polish_top = c.optimizer.polish_top;
    o.polish.max_evaluations = c.optimizer.polish_evaluations;
    o.min_separation_rate = c.optimizer.min_separation_mhz * 1e6;
    o.train_rate = c.optimizer.train_rate_mhz * 1e6;
    o.motional = motional_state(c);
    o.fidelity = fidelity_options(c);
    o.workers = c.workers;
    return o;
}

/// Orderings named in the config, or every class of the pattern.
inline std::vector<Scheme> scheme_orderings(const RunConfig &c, int n) {
    if (c.scheme.orderings.empty()) return enumerate_orderings(c.scheme.pattern, n);
    std::vector<Scheme> out;
    for (const auto &label : c.scheme.orderings) out.push_back(Scheme{parse_pattern_label(label), n});
    return out;
}

inline FockConfig fock_config(const RunConfig &c) {
    FockConfig f;
    f.truncation = c.oracle.truncation;
    f.tolerance = c.oracle.tolerance;
    return f;
}

}  // namespace fastgate::io

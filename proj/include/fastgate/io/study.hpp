#pragma once

// Study runners behind the CLI. Each study writes <study>.csv (or one CSV
// per record kind), a <name>.json sidecar carrying the resolved config,
// and appends optimized gates to archive.jsonl in the output directory.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastgate/fock.hpp"
#include "fastgate/io/config.hpp"
#include "fastgate/io/output.hpp"
#include "fastgate/modes.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/oracle_check.hpp"
#include "fastgate/robustness.hpp"
#include "fastgate/scaling.hpp"
#include "fastgate/version.hpp"

namespace fastgate::io {

inline constexpr int csv_schema_version = 1;

struct StudyOutcome {
    int exit_code = 0;
    std::vector<std::filesystem::path> files;
    std::string summary;
};

namespace detail {

inline nlohmann::json resolved_parameters(const RunConfig &c) {
    const auto trap = trap_config(c);
    const auto derived = derive_params(trap);
    const auto model = two_ion_model(c);
    return {
        {"ion_count", trap.ion_count},
        {"spacing_m", trap.spacing},
        {"trap_frequency_rad_s", trap.trap_frequency},
        {"effective_wavenumber_per_m", trap.effective_wavenumber},
        {"mass_kg", trap.species.mass},
        {"xi", derived.xi},
        {"chi_geometry", derived.chi},
        {"eta_geometry", derived.eta},
        {"chi", model.chi},
        {"eta", model.eta},
        {"occupations", c.physics.occupations},
    };
}

class StudyWriter {
  public:
    StudyWriter(const RunConfig &cfg) : cfg_(cfg), dir_(cfg.output), start_(std::chrono::steady_clock::now()) {}

    const std::filesystem::path &dir() const { return dir_; }

    void csv(const std::string &name, const CsvTable &table, std::vector<std::string> columns) {
        tables_.push_back({name, table.str(), std::move(columns)});
    }

    void note(const std::string &key, nlohmann::json value) { extra_[key] = std::move(value); }

    /// Promote everything to its final name; nothing is visible before this.
    std::vector<std::filesystem::path> commit(const std::string &sidecar_name) {
        std::vector<std::filesystem::path> files;
        for (const auto &t : tables_) {
            write_atomic(dir_ / (t.name + ".csv"), t.content);
            files.push_back(dir_ / (t.name + ".csv"));
        }
        nlohmann::json meta;
        meta["study"] = to_string(cfg_.study);
        meta["code_version"] = version;
        meta["seed"] = cfg_.seed;
        meta["workers"] = cfg_.workers;
        meta["csv_schema_version"] = csv_schema_version;
        nlohmann::json csvs = nlohmann::json::object();
        for (const auto &t : tables_) csvs[t.name + ".csv"] = t.columns;
        meta["csv_columns"] = csvs;
        meta["config_toml"] = serialize_config(cfg_);
        meta["resolved"] = resolved_parameters(cfg_);
        meta["results"] = extra_;
        meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_atomic(dir_ / (sidecar_name + ".json"), meta.dump(2) + "\n");
        files.push_back(dir_ / (sidecar_name + ".json"));
        return files;
    }

  private:
    struct Table {
        std::string name;
        std::string content;
        std::vector<std::string> columns;
    };
    const RunConfig &cfg_;
    std::filesystem::path dir_;
    std::chrono::steady_clock::time_point start_;
    std::vector<Table> tables_;
    nlohmann::json extra_ = nlohmann::json::object();
};

inline const std::vector<std::string> solution_columns{
    "scheme", "n", "chi", "eta", "tau_cap", "achieved_tau", "infidelity", "conditional_phase",
    "t0_s", "t1_s", "t2_s", "t3_s", "t4_s", "t5_s"};

inline void solution_row(CsvTable &t, const GateSolution &s) {
    auto r = t.row();
    r << s.scheme.label() << s.scheme.n << s.chi << s.eta << s.tau_cap << s.achieved_tau << s.infidelity()
      << s.report.conditional_phase;
    for (double v : s.timings) r << v;
}

/// The reference gate of a config: best over orderings at the largest cap.
inline GateSolution reference_gate(const RunConfig &c) {
    auto sols = sweep_time_caps(scheme_orderings(c, c.scheme.n), two_ion_model(c), c.optimizer.caps, optimizer_options(c));
    return sols.back();
}

inline StudyOutcome run_modes(const RunConfig &c) {
    StudyWriter w(c);
    const auto spec = mode_spectrum(trap_config(c), mode_options(c));
    const std::vector<std::string> cols{"mode", "ion", "frequency_mhz", "relative_shift", "lamb_dicke", "amplitude"};
    CsvTable t(cols);
    for (int m = 0; m < spec.mode_count(); ++m) {
        for (int i = 0; i < spec.ion_count(); ++i) {
            t.row() << m << i << spec.frequencies[m] / (2.0 * std::numbers::pi * 1e6) << spec.relative_shift(m)
                    << spec.lamb_dicke_per_mode[m] << spec.mode_matrix(i, m);
        }
    }
    w.csv("modes", t, cols);
    return {0, w.commit("modes"), std::to_string(spec.mode_count()) + " modes"};
}

inline StudyOutcome run_optimize(const RunConfig &c) {
    StudyWriter w(c);
    const auto sols = sweep_time_caps(scheme_orderings(c, c.scheme.n), two_ion_model(c), c.optimizer.caps,
                                      optimizer_options(c));
    CsvTable t(solution_columns);
    SolutionArchive archive(w.dir() / "archive.jsonl");
    for (const auto &s : sols) {
        solution_row(t, s);
        archive.add(s);
    }
    w.csv("optimize", t, solution_columns);
    archive.flush();
    auto files = w.commit("optimize");
    files.push_back(w.dir() / "archive.jsonl");
    char buf[96];
    std::snprintf(buf, sizeof buf, "best infidelity %.3e at tau %.4f", sols.back().infidelity(), sols.back().achieved_tau);
    return {0, files, buf};
}

inline StudyOutcome run_landscape(const RunConfig &c) {
    StudyWriter w(c);
    const auto model = two_ion_model(c);
    const auto res = landscape_scan(c.scheme.pattern, c.landscape.n, c.landscape.chi, c.landscape.caps, model.eta,
                                    model.trap_frequency, optimizer_options(c));
    const std::vector<std::string> cols{"tau_cap", "n", "chi", "n2_chi", "n2_over_chi", "achieved_tau", "at_cap",
                                        "infidelity", "ordering"};
    CsvTable t(cols);
    SolutionArchive archive(w.dir() / "archive.jsonl");
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        const auto &r = res.records[i];
        t.row() << r.tau_cap << r.n << r.chi << r.n2_chi << r.n2_over_chi << r.achieved_tau << r.at_cap()
                << r.infidelity << r.ordering;
        archive.add(res.solutions[i]);
    }
    w.csv("landscape", t, cols);
    archive.flush();
    auto files = w.commit("landscape");
    files.push_back(w.dir() / "archive.jsonl");
    return {0, files, std::to_string(res.records.size()) + " records"};
}

inline StudyOutcome run_jitter(const RunConfig &c) {
    StudyWriter w(c);
    const auto gate = reference_gate(c);
    const std::vector<std::string> cols{"sigma", "samples", "noiseless", "mean", "standard_error",
                                        "exponential_location", "exponential_rate", "ks_statistic",
                                        "coefficient_of_variation"};
    CsvTable t(cols);
    for (double sigma : c.jitter.sigma) {
        JitterConfig j{sigma, c.jitter.samples, c.seed, c.jitter.per_pulse, c.workers};
        const auto s = mc_mean_infidelity(gate, j, motional_state(c), fidelity_options(c));
        t.row() << s.sigma << c.jitter.samples << s.noiseless << s.mean << s.standard_error << s.exponential_location
                << s.exponential_rate << s.ks_statistic << s.coefficient_of_variation;
    }
    w.csv("robustness-jitter", t, cols);
    w.note("gate", to_json(gate));
    SolutionArchive archive(w.dir() / "archive.jsonl");
    archive.add(gate);
    archive.flush();
    auto files = w.commit("robustness-jitter");
    files.push_back(w.dir() / "archive.jsonl");
    return {0, files, std::to_string(c.jitter.sigma.size()) + " sigma values"};
}

inline StudyOutcome run_reprate(const RunConfig &c) {
    StudyWriter w(c);
    const auto opt = optimizer_options(c);
    const auto model = two_ion_model(c);
    std::vector<GateSolution> per;
    GateSolution gate = optimize_orderings(scheme_orderings(c, c.scheme.n), model, c.optimizer.caps.back(), opt, &per);
    if (c.reprate.grid_rate_mhz > 0.0) {
        std::sort(per.begin(), per.end(), better_solution);
        GridSearchOptions g;
        g.min_separation_rate = c.reprate.grid_separation_mhz * 1e6;
        g.motional = opt.motional;
        g.fidelity = opt.fidelity;
        std::optional<GateSolution> best;
        for (std::size_t i = 0; i < std::min<std::size_t>(4, per.size()); ++i) {
            auto s = optimize_on_grid(per[i], c.reprate.grid_rate_mhz * 1e6, g);
            if (!best || better_solution(s, *best)) best = s;
        }
        gate = *best;
    }
    std::vector<double> rates;
    for (double r : c.reprate.rates_mhz) rates.push_back(r * 1e6);
    std::optional<double> alignment;
    if (c.reprate.alignment_ns) alignment = *c.reprate.alignment_ns * 1e-9;
    const auto scan = rep_rate_scan(gate, rates, alignment, opt.motional, opt.fidelity, c.workers);
    const std::vector<std::string> cols{"rate_mhz", "resolvable", "infidelity", "max_center_shift_ns"};
    CsvTable t(cols);
    for (const auto &r : scan.records) {
        t.row() << r.rate / 1e6 << r.resolvable << r.infidelity << r.max_center_shift * 1e9;
    }
    w.csv("robustness-reprate", t, cols);
    w.note("gate", to_json(gate));
    w.note("ideal_infidelity", scan.ideal_infidelity);
    w.note("threshold_rate_mhz", scan.threshold_rate / 1e6);
    SolutionArchive archive(w.dir() / "archive.jsonl");
    archive.add(gate);
    archive.flush();
    auto files = w.commit("robustness-reprate");
    files.push_back(w.dir() / "archive.jsonl");
    char buf[96];
    std::snprintf(buf, sizeof buf, "threshold %.1f MHz", scan.threshold_rate / 1e6);
    return {0, files, buf};
}

inline StudyOutcome run_scaling(const RunConfig &c) {
    StudyWriter w(c);
    const auto opt = optimizer_options(c);
    const auto model = two_ion_model(c);
    const auto gate = reference_gate(c);
    const auto plateau = plateau_scan(gate, c.scaling.ion_counts, scaling_mode_options(), c.workers);
    const std::vector<std::string> pcols{"ion_count", "inner", "outer"};
    CsvTable pt(pcols);
    for (const auto &p : plateau) pt.row() << p.ion_count << p.inner << p.outer;
    w.csv("scaling-plateau", pt, pcols);

    SolutionArchive archive(w.dir() / "archive.jsonl");
    archive.add(gate);
    std::vector<GateSolution> pool;
    for (double chi : c.scaling.chi) {
        for (int n : c.scaling.n) {
            const auto sols = sweep_time_caps(scheme_orderings(c, n), TwoIonModel{chi, model.eta, model.trap_frequency},
                                              c.optimizer.caps, opt);
            for (const auto &s : sols) {
                pool.push_back(s);
                archive.add(s);
            }
        }
    }
    archive.flush();
    const auto chosen = select_high_fidelity_gates(pool, static_cast<std::size_t>(c.scaling.gates), c.seed,
                                                   c.scaling.threshold);
    const auto scan = scaling_ratio_scan(chosen, c.scaling.ratio_ion_count,
                                         c.scaling.pair == "outer" ? PairChoice::Outer : PairChoice::Inner, c.workers);
    const std::vector<std::string> rcols{"chi", "scheme", "n", "tau_cap", "two_ion", "chain", "ratio", "included"};
    CsvTable rt(rcols);
    for (std::size_t i = 0; i < scan.records.size(); ++i) {
        const auto &r = scan.records[i];
        rt.row() << r.chi << chosen[i].scheme.label() << chosen[i].scheme.n << chosen[i].tau_cap << r.two_ion
                 << r.chain << r.ratio << r.included;
    }
    w.csv("scaling-ratio", rt, rcols);
    w.note("reference_gate", to_json(gate));
    w.note("slope", scan.fit.slope);
    w.note("slope_stderr", scan.fit.slope_stderr);
    w.note("intercept", scan.fit.intercept);
    auto files = w.commit("scaling");
    files.push_back(w.dir() / "archive.jsonl");
    char buf[96];
    std::snprintf(buf, sizeof buf, "log-log slope %.3f", scan.fit.slope);
    return {0, files, buf};
}

inline std::vector<OracleRecord> oracle_records(const RunConfig &c) {
    const auto model = two_ion_model(c);
    OracleCaseOptions o;
    o.count = c.oracle.sequences;
    o.max_weight = c.oracle.max_weight;
    o.max_kicks = c.oracle.max_kicks;
    o.max_time = c.oracle.max_time;
    o.trap_frequency = model.trap_frequency;
    return run_oracle_check(random_oracle_cases(o, c.seed), model.eta, model.trap_frequency, fock_config(c),
                            fidelity_options(c), c.workers);
}

inline StudyOutcome run_oracle(const RunConfig &c) {
    StudyWriter w(c);
    const auto records = oracle_records(c);
    const std::vector<std::string> cols{"index", "kicks", "chi", "closed", "fock", "difference", "truncation"};
    CsvTable t(cols);
    double worst = 0.0;
    for (const auto &r : records) {
        t.row() << r.index << r.kicks << r.chi << r.closed << r.fock << r.difference << r.truncation;
        worst = std::max(worst, r.difference);
    }
    const bool pass = worst < c.oracle.threshold;
    w.csv("oracle-check", t, cols);
    w.note("max_difference", worst);
    w.note("pass", pass);
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |F_closed - F_fock| = %.3e (%s)", worst, pass ? "pass" : "FAIL");
    return {pass ? 0 : 1, w.commit("oracle-check"), buf};
}

}  // namespace detail

inline StudyOutcome run_study(const RunConfig &cfg) {
    validate(cfg);
    switch (cfg.study) {
        case StudyKind::Modes: return detail::run_modes(cfg);
        case StudyKind::Optimize: return detail::run_optimize(cfg);
        case StudyKind::Landscape: return detail::run_landscape(cfg);
        case StudyKind::RobustnessJitter: return detail::run_jitter(cfg);
        case StudyKind::RobustnessReprate: return detail::run_reprate(cfg);
        case StudyKind::Scaling: return detail::run_scaling(cfg);
        case StudyKind::OracleCheck: return detail::run_oracle(cfg);
    }
    throw InternalError("unhandled study kind");
}

}  // namespace fastgate::io

// fastgate: run one study from a TOML config and write its data files.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fastgate/io/study.hpp"

namespace fg = fastgate::io;

int main(int argc, char **argv) {
    CLI::App app{"Fast two-qubit gates in microtrap arrays: optimization, scans and robustness studies"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
    bool verify = false;

    for (const auto &[kind, name] : fg::study_names) {
        auto *sub = app.add_subcommand(std::string(name), "run the " + std::string(name) + " study");
        sub->add_option("--config", config_path, "TOML config; defaults are used for everything it omits");
        sub->add_option("--seed", seed, "random seed, overrides the config");
        sub->add_option("--out", out, "output directory, overrides the config");
        sub->add_option("--workers", workers, "worker threads, overrides the config")->check(CLI::PositiveNumber);
        sub->add_flag("--verify", verify, "run the oracle check first and stop if it fails");
    }
    CLI11_PARSE(app, argc, argv);

    const auto kind = fg::study_from_string(app.get_subcommands().front()->get_name());
    try {
        fg::RunConfig cfg;
        if (!config_path.empty()) {
            cfg = fg::parse_config(config_path, kind);
        } else {
            cfg = fg::parse_config_text("", "defaults", kind);
        }
        if (seed) cfg.seed = *seed;
        if (out) cfg.output = *out;
        if (workers) cfg.workers = *workers;
        fg::validate(cfg);

        if (verify && cfg.study != fg::StudyKind::OracleCheck) {
            auto check = cfg;
            check.study = fg::StudyKind::OracleCheck;
            const auto r = fg::run_study(check);
            std::cerr << "oracle-check: " << r.summary << "\n";
            if (r.exit_code != 0) return r.exit_code;
        }
        const auto r = fg::run_study(cfg);
        std::cerr << fg::to_string(cfg.study) << ": " << r.summary << "\n";
        for (const auto &f : r.files) std::cout << f.string() << "\n";
        return r.exit_code;
    } catch (const fg::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

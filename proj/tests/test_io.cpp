#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fastgate/io/study.hpp"

namespace fs = std::filesystem;
using namespace fastgate;
using namespace fastgate::io;

namespace {

fs::path scratch(const std::string &name) {
    auto p = fs::temp_directory_path() / ("fastgate_io_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::string error_of(const std::string &text, std::optional<StudyKind> fallback = std::nullopt) {
    try {
        parse_config_text(text, "cfg.toml", fallback);
    } catch (const ConfigError &e) {
        return e.what();
    }
    return {};
}

RunConfig fast_optimize(const fs::path &out, int workers) {
    auto c = parse_config_text("study = \"optimize\"\n", "cfg.toml");
    c.output = out.string();
    c.workers = workers;
    c.scheme.n = 10;
    c.scheme.orderings = {"-1+2-2+2-2+1", "-1-2+2-2+2+1", "+2-1-2+1+2-2"};
    c.optimizer.caps = {0.8, 1.2};
    c.optimizer.starts = 3;
    c.optimizer.lm_iterations = 40;
    c.optimizer.polish_top = 1;
    c.optimizer.polish_evaluations = 300;
    return c;
}

std::size_t data_rows(const std::string &csv) {
    std::size_t lines = 0;
    for (std::size_t p = csv.find("\r\n"); p != std::string::npos; p = csv.find("\r\n", p + 2)) ++lines;
    return lines - 1;
}

RunConfig random_config(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> small(1, 9);
    auto pos = [&] { return std::exp(std::log(1e-6) + u(rng) * std::log(1e9)); };
    auto pick = [&](std::initializer_list<const char *> xs) {
        std::vector<std::string> v(xs.begin(), xs.end());
        return v[rng() % v.size()];
    };
    RunConfig c;
    c.study = study_names[rng() % study_names.size()].first;
    c.seed = rng() >> 1;
    c.output = "out/" + std::to_string(rng() % 1000) + " dir \"q\"";
    c.workers = small(rng);
    c.physics.ion_count = 2 + small(rng);
    c.physics.spacing_um = pos();
    c.physics.trap_frequency_mhz = pos();
    c.physics.wavelength_nm = pos();
    if (rng() % 2) c.physics.chi = pos();
    if (rng() % 2) c.physics.eta = pos();
    for (int i = small(rng) % 4; i > 0; --i) c.physics.occupations.push_back(u(rng) * 3);
    c.physics.equilibrium = pick({"relaxed", "trap-centers"});
    c.physics.coupling = pick({"all", "nearest-neighbour"});
    c.scheme.n = small(rng) * 7;
    if (rng() % 2) c.scheme.orderings = {"-1-2+2-2+2+1", "+1-2+2-2+2-1"};
    c.optimizer.caps.clear();
    double cap = 0.0;
    for (int i = small(rng) % 4 + 1; i > 0; --i) c.optimizer.caps.push_back(cap += pos());
    c.optimizer.starts = small(rng);
    c.optimizer.min_separation_mhz = u(rng) * 300;
    c.optimizer.averaging = pick({"haar", "process"});
    c.landscape.n = {small(rng), small(rng) * 3};
    c.landscape.chi = {pos(), 1.0 / 3.0, 0.1};
    c.jitter.sigma = {0.0, pos()};
    c.jitter.per_pulse = rng() % 2;
    c.jitter.samples = small(rng) * 11;
    c.reprate.rates_mhz = {pos(), 123.456};
    if (rng() % 2) c.reprate.alignment_ns = u(rng) - 0.5;
    c.reprate.grid_rate_mhz = pos();
    c.scaling.ion_counts = {2, 3 + small(rng)};
    c.scaling.threshold = pos();
    c.scaling.pair = pick({"inner", "outer"});
    c.oracle.max_time = pos();
    c.oracle.tolerance = pos();
    return c;
}

}  // namespace

TEST(Config, UnknownKeyNamesPathAndLine) {
    const auto msg = error_of("study = \"optimize\"\n\n[physics]\nspacing_um = 100.0\nspacnig_um = 3.0\n");
    EXPECT_NE(msg.find("physics.spacnig_um"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;

    const auto top = error_of("study = \"optimize\"\nbogus = 1\n");
    EXPECT_NE(top.find("bogus"), std::string::npos) << top;
    EXPECT_NE(top.find("line 2"), std::string::npos) << top;
}

TEST(Config, InvalidValueNamesField) {
    EXPECT_NE(error_of("study = \"modes\"\n[physics]\nspacing_um = 0.0\n").find("physics.spacing_um: must be > 0"),
              std::string::npos);
    EXPECT_NE(error_of("study = \"modes\"\n[physics]\nspacing_um = -4.0\n").find("physics.spacing_um"),
              std::string::npos);
    EXPECT_NE(error_of("study = \"optimize\"\n[optimizer]\ncaps = [1.0, 0.7]\n").find("optimizer.caps"),
              std::string::npos);
    EXPECT_NE(error_of("study = \"optimize\"\n[scheme]\npattern = [1, 2]\n").find("scheme.pattern"),
              std::string::npos);
    EXPECT_NE(error_of("study = \"optimize\"\n[physics]\nion_count = \"two\"\n").find("physics.ion_count"),
              std::string::npos);
    EXPECT_NE(error_of("study = \"optimize\"\n[scheme]\norderings = [\"+1+1+1+1+1+1\"]\n").find("scheme.orderings[0]"),
              std::string::npos);
    EXPECT_NE(error_of("study = \"optimize\"\nthis is not toml\n").find("line 2"), std::string::npos);
}

TEST(Config, StudyKindResolution) {
    EXPECT_NE(error_of("seed = 3\n").find("study"), std::string::npos);
    EXPECT_NE(error_of("study = \"nonsense\"\n").find("unknown study kind"), std::string::npos);
    EXPECT_NE(error_of("study = \"modes\"\n", StudyKind::Optimize).find("optimize"), std::string::npos);
    EXPECT_EQ(parse_config_text("seed = 3\n", "cfg", StudyKind::Scaling).study, StudyKind::Scaling);
}

TEST(Config, MinimalOptimizeResolvesDefaults) {
    const auto c = parse_config_text("study = \"optimize\"\n", "cfg.toml");
    EXPECT_EQ(c.study, StudyKind::Optimize);
    EXPECT_EQ(c.physics.ion_count, 2);
    EXPECT_DOUBLE_EQ(c.physics.spacing_um, 100.0);
    EXPECT_DOUBLE_EQ(c.physics.trap_frequency_mhz, 1.0);
    EXPECT_TRUE(c.physics.occupations.empty());
    EXPECT_EQ(c.scheme.n, 50);
    EXPECT_EQ(c.optimizer.caps, std::vector<double>{1.4});

    const auto m = two_ion_model(c);
    EXPECT_NEAR(m.eta / 0.194, 1.0, 0.01);
    EXPECT_NEAR(m.chi / 1.8e-4, 1.0, 0.03);
    EXPECT_NEAR(m.trap_frequency, 2.0 * std::numbers::pi * 1e6, 1e-6);
    EXPECT_TRUE(motional_state(c).mean_occupations.empty());
    EXPECT_EQ(scheme_orderings(c, c.scheme.n).size(), 51u);
}

TEST(Config, OverridesReplaceDerivedValues) {
    const auto c = parse_config_text("study = \"optimize\"\n[physics]\nchi = 1e-3\neta = 0.25\noccupations = [0.1]\n");
    const auto m = two_ion_model(c);
    EXPECT_DOUBLE_EQ(m.chi, 1e-3);
    EXPECT_DOUBLE_EQ(m.eta, 0.25);
    EXPECT_EQ(motional_state(c).mean_occupations, std::vector<double>{0.1});
}

TEST(Config, RoundTripIsExact) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 200; ++i) {
        const auto c = random_config(rng);
        ASSERT_NO_THROW(validate(c));
        const auto text = serialize_config(c);
        const auto back = parse_config_text(text, "roundtrip");
        ASSERT_TRUE(back == c) << text;
        EXPECT_EQ(serialize_config(back), text);
    }
}

TEST(Config, DefaultsRoundTrip) {
    for (const auto &[kind, name] : study_names) {
        const auto c = parse_config_text("", "defaults", kind);
        EXPECT_TRUE(parse_config_text(serialize_config(c), "again") == c) << name;
    }
}

TEST(Output, CsvFormatting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    EXPECT_EQ(csv_number(0.1), "1.0000000000000001e-01");
    EXPECT_EQ(std::stod(csv_number(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_EQ(csv_number(std::nan("")), "nan");

    CsvTable t({"a", "b"});
    t.row() << 1 << "x,y";
    EXPECT_EQ(t.str(), "a,b\r\n1,\"x,y\"\r\n");
    EXPECT_THROW(t.row() << 1, InternalError);
}

TEST(Output, AtomicWriteLeavesNoTemporary) {
    const auto dir = scratch("atomic");
    write_atomic(dir / "f.txt", "one");
    write_atomic(dir / "f.txt", "two");
    EXPECT_EQ(read_file(dir / "f.txt"), "two");
    EXPECT_FALSE(fs::exists(dir / "f.txt.tmp"));
    fs::remove_all(dir);
}

TEST(Output, ArchiveKeysAreUnique) {
    const auto dir = scratch("archive");
    auto cfg = fast_optimize(dir, 1);
    const auto sol = optimize_timings(Scheme{default_pattern, 10}, two_ion_model(cfg), 1.0, optimizer_options(cfg));
    {
        SolutionArchive a(dir / "archive.jsonl");
        EXPECT_TRUE(a.add(sol));
        EXPECT_FALSE(a.add(sol));
        auto other = sol;
        other.seed += 1;
        EXPECT_TRUE(a.add(other));
        a.flush();
    }
    SolutionArchive b(dir / "archive.jsonl");
    EXPECT_EQ(b.size(), 2u);
    EXPECT_TRUE(b.contains(sol));
    EXPECT_FALSE(b.add(sol));
    const auto restored = b.solutions().front();
    EXPECT_EQ(restored.timings, sol.timings);
    EXPECT_EQ(restored.scheme.label(), sol.scheme.label());
    EXPECT_NEAR(restored.infidelity(), sol.infidelity(), 1e-15);
    fs::remove_all(dir);
}

TEST(Study, OptimizeWritesRowsArchiveAndSidecar) {
    const auto dir = scratch("optimize");
    auto c = fast_optimize(dir, 1);
    c.optimizer.caps = {1.2};
    const auto r = run_study(c);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(data_rows(read_file(dir / "optimize.csv")), 1u);
    EXPECT_EQ(SolutionArchive(dir / "archive.jsonl").size(), 1u);

    const auto meta = nlohmann::json::parse(read_file(dir / "optimize.json"));
    EXPECT_EQ(meta.at("study"), "optimize");
    EXPECT_EQ(meta.at("seed"), c.seed);
    EXPECT_EQ(meta.at("code_version"), std::string(version));
    EXPECT_EQ(meta.at("csv_columns").at("optimize.csv").size(), io::detail::solution_columns.size());
    EXPECT_TRUE(parse_config_text(meta.at("config_toml").get<std::string>(), "sidecar") == c);

    // A rerun with the same seed finds the same key and leaves the archive alone.
    run_study(c);
    EXPECT_EQ(SolutionArchive(dir / "archive.jsonl").size(), 1u);
    fs::remove_all(dir);
}

TEST(Study, CsvIsByteStableAcrossWorkers) {
    const auto a = scratch("w1"), b = scratch("w3");
    run_study(fast_optimize(a, 1));
    run_study(fast_optimize(b, 3));
    const auto csv = read_file(a / "optimize.csv");
    EXPECT_EQ(data_rows(csv), 2u);
    EXPECT_EQ(csv, read_file(b / "optimize.csv"));
    EXPECT_EQ(read_file(a / "archive.jsonl"), read_file(b / "archive.jsonl"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Study, LandscapeGridIsCompleteAndSorted) {
    const auto dir = scratch("landscape");
    auto c = fast_optimize(dir, 2);
    c.study = StudyKind::Landscape;
    c.landscape.n = {12, 4, 8, 6, 10};
    c.landscape.chi = {1e-3, 1e-5, 1e-4, 3e-5, 3e-4};
    c.landscape.caps = {1.0, 0.6, 0.8};
    c.optimizer.starts = 1;
    c.optimizer.lm_iterations = 10;
    c.optimizer.polish_top = 0;
    run_study(c);

    const auto csv = read_file(dir / "landscape.csv");
    ASSERT_EQ(data_rows(csv), 75u);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "tau_cap,n,chi,n2_chi,n2_over_chi,achieved_tau,at_cap,infidelity,ordering\r");
    std::tuple<double, int, double> prev{-1, -1, -1};
    while (std::getline(in, line)) {
        double cap, chi;
        int n;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%d,%lf", &cap, &n, &chi), 3);
        const std::tuple<double, int, double> key{cap, n, chi};
        EXPECT_LT(prev, key);
        prev = key;
    }
    EXPECT_EQ(SolutionArchive(dir / "archive.jsonl").size(), 75u);
    fs::remove_all(dir);
}

TEST(Study, ModesAndOracleCheck) {
    const auto dir = scratch("modes");
    auto c = parse_config_text("study = \"modes\"\n[physics]\nion_count = 4\n");
    c.output = dir.string();
    run_study(c);
    EXPECT_EQ(data_rows(read_file(dir / "modes.csv")), 16u);

    c.study = StudyKind::OracleCheck;
    c.oracle.sequences = 20;
    const auto r = run_study(c);
    EXPECT_EQ(r.exit_code, 0) << r.summary;
    EXPECT_EQ(data_rows(read_file(dir / "oracle-check.csv")), 20u);
    const auto meta = nlohmann::json::parse(read_file(dir / "oracle-check.json"));
    EXPECT_TRUE(meta.at("results").at("pass").get<bool>());
    EXPECT_LT(meta.at("results").at("max_difference").get<double>(), 1e-6);
    fs::remove_all(dir);
}

#ifdef FASTGATE_CLI_PATH
namespace {
int run_cli(const std::string &args) {
    const auto cmd = std::string(FASTGATE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    write_atomic(dir / "bad.toml", "study = \"modes\"\n[physics]\nspacing_um = -1.0\n");
    write_atomic(dir / "good.toml", "study = \"modes\"\n[physics]\nion_count = 3\n");
    write_atomic(dir / "oracle.toml", "[oracle]\nsequences = 10\n");

    EXPECT_EQ(run_cli("modes --config " + (dir / "bad.toml").string()), 2);
    EXPECT_EQ(run_cli("optimize --config " + (dir / "good.toml").string()), 2);
    EXPECT_EQ(run_cli("modes --config " + (dir / "missing.toml").string()), 2);
    EXPECT_NE(run_cli("no-such-study"), 0);
    EXPECT_EQ(run_cli("modes --config " + (dir / "good.toml").string() + " --out " + (dir / "m").string()), 0);
    EXPECT_EQ(data_rows(read_file(dir / "m" / "modes.csv")), 9u);
    EXPECT_EQ(run_cli("oracle-check --config " + (dir / "oracle.toml").string() + " --out " + (dir / "o").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "o" / "oracle-check.json"));
    fs::remove_all(dir);
}
#endif

#pragma once

// Result persistence: RFC 4180 CSV with round-trip floating point, a JSON
// metadata sidecar, and the append-only solution archive. Every file is
// written under a temporary name and renamed into place.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastgate/errors.hpp"
#include "fastgate/optimizer.hpp"
#include "fastgate/version.hpp"

namespace fastgate::io {

/// Write `content` to `path` via a sibling temporary file and rename.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// 17 significant digits in scientific notation.
inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    class Row {
      public:
        explicit Row(CsvTable &t) : table_(t) {}
        Row &operator<<(double v) { return add(csv_number(v)); }
        Row &operator<<(int v) { return add(std::to_string(v)); }
        Row &operator<<(long v) { return add(std::to_string(v)); }
        Row &operator<<(std::uint64_t v) { return add(std::to_string(v)); }
        Row &operator<<(bool v) { return add(v ? "true" : "false"); }
        Row &operator<<(const std::string &v) { return add(csv_field(v)); }
        Row &operator<<(const char *v) { return add(csv_field(v)); }
        ~Row() noexcept(false) {
            if (cells_.size() != table_.columns_.size()) throw InternalError("csv row width does not match the header");
            table_.rows_.push_back(std::move(cells_));
        }

      private:
        Row &add(std::string s) {
            cells_.push_back(std::move(s));
            return *this;
        }
        CsvTable &table_;
        std::vector<std::string> cells_;
    };

    Row row() { return Row(*this); }

    std::size_t size() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string> &cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
            out += "\r\n";
        };
        std::vector<std::string> header;
        for (const auto &c : columns_) header.push_back(csv_field(c));
        line(header);
        for (const auto &r : rows_) line(r);
        return out;
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

// Solution archive.

inline nlohmann::json to_json(const GateSolution &s) {
    nlohmann::json j;
    j["scheme"] = s.scheme.label();
    j["n"] = s.scheme.n;
    j["timings_s"] = std::vector<double>(s.timings.begin(), s.timings.end());
    j["chi"] = s.chi;
    j["eta"] = s.eta;
    j["trap_frequency_rad_s"] = s.trap_frequency;
    j["tau_cap"] = s.tau_cap;
    j["achieved_tau"] = s.achieved_tau;
    j["seed"] = s.seed;
    j["train_rate_hz"] = s.train_rate;
    j["infidelity"] = s.report.infidelity;
    j["conditional_phase"] = s.report.conditional_phase;
    return j;
}

/// Timings and parameters are restored; the report is recomputed.
inline GateSolution solution_from_json(const nlohmann::json &j, const MotionalState &motional = {},
                                       const FidelityOptions &opt = {}) {
    GateSolution s;
    s.scheme = Scheme{parse_pattern_label(j.at("scheme").get<std::string>()), j.at("n").get<int>()};
    const auto t = j.at("timings_s").get<std::vector<double>>();
    detail::require(t.size() == group_count, "archived timings must have 6 entries");
    std::copy(t.begin(), t.end(), s.timings.begin());
    s.chi = j.at("chi").get<double>();
    s.eta = j.at("eta").get<double>();
    s.trap_frequency = j.at("trap_frequency_rad_s").get<double>();
    s.tau_cap = j.at("tau_cap").get<double>();
    s.achieved_tau = j.at("achieved_tau").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.train_rate = j.value("train_rate_hz", 0.0);
    s.report = state_averaged_fidelity(s.design_sequence(), s.model().spectrum(), motional, opt);
    return s;
}

using ArchiveKey = std::tuple<std::string, int, double, double, double, std::uint64_t>;

inline ArchiveKey archive_key(const GateSolution &s) {
    return {s.scheme.label(), s.scheme.n, s.chi, s.eta, s.tau_cap, s.seed};
}

/// Append-only store of solutions, one JSON object per line. A key that is
/// already present is never rewritten.
class SolutionArchive {
  public:
    explicit SolutionArchive(std::filesystem::path path) : path_(std::move(path)) {
        if (!std::filesystem::exists(path_)) return;
        std::istringstream in(read_file(path_));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            lines_.push_back(line);
            const auto j = nlohmann::json::parse(line);
            keys_.insert({j.at("scheme").get<std::string>(), j.at("n").get<int>(), j.at("chi").get<double>(),
                          j.at("eta").get<double>(), j.at("tau_cap").get<double>(), j.at("seed").get<std::uint64_t>()});
        }
    }

    /// Returns false when the key already exists.
    bool add(const GateSolution &s) {
        if (!keys_.insert(archive_key(s)).second) return false;
        lines_.push_back(to_json(s).dump());
        dirty_ = true;
        return true;
    }

    bool contains(const GateSolution &s) const { return keys_.count(archive_key(s)) > 0; }

    std::size_t size() const { return lines_.size(); }

    std::vector<GateSolution> solutions(const MotionalState &motional = {}, const FidelityOptions &opt = {}) const {
        std::vector<GateSolution> out;
        for (const auto &l : lines_) out.push_back(solution_from_json(nlohmann::json::parse(l), motional, opt));
        return out;
    }

    void flush() {
        if (!dirty_) return;
        std::string content;
        for (const auto &l : lines_) content += l + "\n";
        write_atomic(path_, content);
        dirty_ = false;
    }

  private:
    std::filesystem::path path_;
    std::vector<std::string> lines_;
    std::set<ArchiveKey> keys_;
    bool dirty_ = false;
};

}  // namespace fastgate::io

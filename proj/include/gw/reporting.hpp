// reporting.hpp — ensemble reports: per-observable statistics with explicit
// pass/fail thresholds, plus deterministic CSV/JSON writers. Every report
// embeds the configuration hash, code version, and the tolerances used, so a
// result can always be traced back to its inputs.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gw {

inline constexpr const char* kCodeVersion = "gibbswave 0.1.0";

struct ReportRow {
    std::string observable;
    double time = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double half_width_95 = 0.0;  // from between-trajectory variance only
    double tolerance = 0.0;      // pass threshold for |mean| or the named stat
    bool has_check = false;
    bool pass = true;
    std::string note;
};

struct EnsembleReport {
    std::string experiment;
    nlohmann::json metadata;  // config echo, hash, seed, tolerances, version
    std::vector<ReportRow> rows;
    bool all_pass = true;

    void add_row(ReportRow row);
    std::string to_csv() const;
    nlohmann::json to_json() const;
    std::string summary_lines() const;  // one line per checked row
};

// FNV-1a over the canonical (sorted-key) JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);

// Writes report.csv and report.json into the directory (created on demand).
void write_report(const EnsembleReport& report, const std::string& directory);

} // namespace gw

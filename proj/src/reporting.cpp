#include "gw/reporting.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace gw {

void EnsembleReport::add_row(ReportRow row) {
    if (row.has_check && !row.pass) all_pass = false;
    rows.push_back(std::move(row));
}

std::string EnsembleReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "observable,time,mean,variance,half_width_95,tolerance,checked,pass,note\n";
    for (const ReportRow& r : rows) {
        os << r.observable << ',' << r.time << ',' << r.mean << ',' << r.variance << ','
           << r.half_width_95 << ',' << r.tolerance << ',' << (r.has_check ? 1 : 0) << ','
           << (r.pass ? 1 : 0) << ',' << r.note << "\n";
    }
    return os.str();
}

nlohmann::json EnsembleReport::to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["metadata"] = metadata;
    j["all_pass"] = all_pass;
    j["rows"] = nlohmann::json::array();
    for (const ReportRow& r : rows) {
        j["rows"].push_back({{"observable", r.observable},
                             {"time", r.time},
                             {"mean", r.mean},
                             {"variance", r.variance},
                             {"half_width_95", r.half_width_95},
                             {"tolerance", r.tolerance},
                             {"checked", r.has_check},
                             {"pass", r.pass},
                             {"note", r.note}});
    }
    return j;
}

std::string EnsembleReport::summary_lines() const {
    std::ostringstream os;
    for (const ReportRow& r : rows) {
        if (!r.has_check) continue;
        os << (r.pass ? "[PASS] " : "[FAIL] ") << r.observable;
        if (!r.note.empty()) os << " — " << r.note;
        os << "\n";
    }
    os << (all_pass ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << "\n";
    return os.str();
}

std::uint64_t config_hash(const nlohmann::json& config) {
    const std::string dump = config.dump();  // object keys are sorted
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void write_report(const EnsembleReport& report, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    {
        std::ofstream csv(fs::path(directory) / "report.csv", std::ios::binary);
        csv << report.to_csv();
    }
    {
        std::ofstream js(fs::path(directory) / "report.json", std::ios::binary);
        js << report.to_json().dump(2) << "\n";
    }
}

} // namespace gw

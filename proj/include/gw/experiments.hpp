// experiments.hpp — configuration, validation and drivers for the desk-scale
// experiments; the only layer the CLI talks to.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gw/coupling.hpp"
#include "gw/reporting.hpp"

#include "json.hpp"

namespace gw {

// Configuration problems carry the offending field for field-level messages.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string field_name, const std::string& message)
        : std::runtime_error(field_name + ": " + message), field(std::move(field_name)) {}
};

enum class ExperimentKind {
    invariance,
    cutoff_convergence,
    tail_bound,
    semigroup_bound,
    picard_contraction,
    bourgain_drift,
    flux_exploratory,
    measure_moments,
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::measure_moments;

    // physics
    int m_grid = 64;
    int cutoff = 8;
    double dt = 1e-3;
    double t_final = 1.0;
    double mu = 0.0;
    std::vector<double> temperatures;
    std::vector<nlohmann::json> alpha_specs;
    std::vector<double> s_values;

    // sampling
    std::size_t ensemble = 1000;
    std::size_t burn_in = 1000;
    std::size_t thin = 1;
    std::uint64_t master_seed = 0;

    // output
    std::string output_directory = "out";
    bool write_samples = false;

    unsigned threads = 0;  // 0 = hardware default

    nlohmann::json experiment_params;  // per-experiment extras
    nlohmann::json raw;                // canonical config echo for hashing

    CouplingConfig coupling() const;
};

// Parse + validate; throws ConfigError with the offending field name.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// JSON schema of the accepted configuration (printed by `gibbswave schema`).
nlohmann::json config_schema();

// Runs the experiment and returns the report (does not write files).
EnsembleReport run_experiment(const ExperimentConfig& cfg);

// Individual drivers (exposed for tests and the acceptance suite).
EnsembleReport run_measure_moments(const ExperimentConfig& cfg);
EnsembleReport run_invariance(const ExperimentConfig& cfg);
EnsembleReport run_cutoff_convergence(const ExperimentConfig& cfg);
EnsembleReport run_tail_bound(const ExperimentConfig& cfg);
EnsembleReport run_semigroup_bound(const ExperimentConfig& cfg);
EnsembleReport run_picard_contraction(const ExperimentConfig& cfg);
EnsembleReport run_bourgain_drift(const ExperimentConfig& cfg);
EnsembleReport run_flux_exploratory(const ExperimentConfig& cfg);

} // namespace gw

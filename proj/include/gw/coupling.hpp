// coupling.hpp — physical configuration of the reservoir coupling: the
// coupling functions alpha_j, reservoir temperatures, and the nonlinearity
// strength.

#pragma once

#include <optional>
#include <vector>

#include "gw/fourier_field.hpp"

namespace gw {

struct CouplingConfig {
    int m_grid = 0;
    std::vector<ModeArray> alphas;       // one Hermitian array per reservoir
    std::vector<double> temperatures;    // T_j > 0
    double mu = 0.0;                     // nonlinearity strength, >= 0
    std::optional<double> gamma_check;   // regularity exponent for diagnostics

    int n_reservoirs() const { return static_cast<int>(alphas.size()); }

    // Throws std::invalid_argument naming the offending field.
    void validate() const;

    // Same configuration with every alpha_j truncated to |k| <= cutoff.
    CouplingConfig projected(int cutoff) const;

    // All reservoirs at one temperature?
    bool equal_temperatures(double tol = 0.0) const;
};

// Convenience: K = 1, alpha = amplitude * cos(k x), equal temperature.
CouplingConfig single_cosine_coupling(int m_grid, int wavenumber, double amplitude,
                                      double temperature, double mu);

// Diagnostic for alpha_j in H^gamma: largest component H^gamma norm.
double coupling_regularity_norm(const CouplingConfig& cfg, double gamma);

} // namespace gw

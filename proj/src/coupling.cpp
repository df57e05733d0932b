#include "gw/coupling.hpp"

#include <algorithm>
#include <cmath>

namespace gw {

void CouplingConfig::validate() const {
    if (m_grid < 1) throw std::invalid_argument("m_grid: must be >= 1");
    if (alphas.empty()) throw std::invalid_argument("alphas: need K >= 1 coupling functions");
    if (temperatures.size() != alphas.size())
        throw std::invalid_argument("temperatures: need one temperature per coupling function");
    // T = 0 is admitted as the deterministic limit (noise and sampling off).
    for (double t : temperatures)
        if (!(t >= 0.0)) throw std::invalid_argument("temperatures: all T_j must be nonnegative");
    if (!(mu >= 0.0)) throw std::invalid_argument("mu: must be nonnegative");
    for (const ModeArray& a : alphas) {
        if (grid_of(a) != m_grid)
            throw std::invalid_argument("alphas: grid size does not match m_grid");
        validate_hermitian(a, "alphas");
    }
}

CouplingConfig CouplingConfig::projected(int cutoff) const {
    CouplingConfig out = *this;
    for (ModeArray& a : out.alphas) a = project_low(a, std::min(cutoff, m_grid));
    return out;
}

bool CouplingConfig::equal_temperatures(double tol) const {
    for (double t : temperatures)
        if (std::abs(t - temperatures.front()) > tol) return false;
    return true;
}

CouplingConfig single_cosine_coupling(int m_grid, int wavenumber, double amplitude,
                                      double temperature, double mu) {
    CouplingConfig cfg;
    cfg.m_grid = m_grid;
    cfg.alphas.push_back(cosine_coeffs(m_grid, wavenumber, amplitude));
    cfg.temperatures.push_back(temperature);
    cfg.mu = mu;
    return cfg;
}

double coupling_regularity_norm(const CouplingConfig& cfg, double gamma) {
    double worst = 0.0;
    for (const ModeArray& a : cfg.alphas)
        worst = std::max(worst, component_sobolev_norm(a, gamma));
    return worst;
}

} // namespace gw

// measures.hpp — exact sampling of the Gaussian free measure, independence
// Metropolis sampling of the quartically reweighted Gibbs measures, partition
// function and tightness estimators.
//
// Free measure on the m_grid representation (unitary Fourier convention):
//   phi_hat(0) ~ N(0, T),  Re/Im phi_hat(k) ~ N(0, T/(2(1+k^2))) for k >= 1,
//   pi_hat(0)  ~ N(0, T),  Re/Im pi_hat(k)  ~ N(0, T/2),
//   r_j ~ N(0, T_j),
// all independent, negative modes by Hermitian reflection. This gives
//   E ||u||_{H^s}^2 = 2T sum_{|k|<=m} (1+k^2)^{s-1}.

#pragma once

#include <cstdint>
#include <vector>

#include "gw/fourier_field.hpp"
#include "gw/rng.hpp"

namespace gw {

// Analytic second moment of the free field, truncated to the grid.
double nu0_field_moment(double T, int m_grid, double s);

// One exact draw. Draw order is fixed (phi_hat 0..m, pi_hat 0..m, r) so
// streams are reproducible. Field temperature T; reservoirs at their own
// temperatures (equal to T in equilibrium use).
SystemState sample_nu0(double T, int m_grid, const std::vector<double>& reservoir_T,
                       RngStream& rng);
SystemState sample_nu0(double T, int m_grid, int n_reservoirs, RngStream& rng);

// Quartic reweighting exponent (mu/4T) * \int (P_{<=cutoff} phi)^4 dx;
// cutoff < 0 means the full field.
double quartic_action(const SystemState& state, double mu, double T, int cutoff);

constexpr int kFullField = -1;

// --------------------------------------------------------------------------
// Independence Metropolis chain with nu^0 proposals. The acceptance ratio
// exp(S_current - S_proposal) is bounded by e^{S_current}; the action is
// nonnegative so the chain is uniformly ergodic. With mu = 0 every proposal
// is accepted. Reservoir coordinates are an untouched Gaussian factor of the
// target and are attached as fresh exact draws on output.
// --------------------------------------------------------------------------
struct GibbsSampler {
    double temperature = 1.0;
    double mu = 0.0;
    int m_grid = 0;
    int reweight_cutoff = kFullField;  // kFullField selects nu, otherwise nu_M
    int n_reservoirs = 1;
    RngStream rng;

    struct Result {
        std::vector<SystemState> samples;
        double acceptance_rate = 0.0;
        std::size_t n_proposals = 0;
        bool low_acceptance_warning = false;  // raised below 1%
        std::vector<double> actions;          // of the emitted samples
        double action_ess = 0.0;              // autocorrelation-based ESS
    };

    Result sample(std::size_t n_samples, std::size_t burn_in, std::size_t thin = 1);
};

// Effective sample size of a series from its autocorrelation (initial
// positive sequence truncation).
double effective_sample_size(const std::vector<double>& series);

// Several independent chains with disjoint streams, pooled in chain-major
// order, with the split-Rhat convergence diagnostic over the action series.
struct PooledGibbsResult {
    std::vector<SystemState> samples;
    double acceptance_rate = 0.0;
    double split_rhat = 1.0;
    double action_ess = 0.0;
    bool low_acceptance_warning = false;
};

PooledGibbsResult sample_gibbs_pooled(double temperature, double mu, int m_grid,
                                      int reweight_cutoff, int n_reservoirs,
                                      std::size_t n_samples, std::size_t burn_in,
                                      std::size_t thin, std::uint64_t master_seed,
                                      int n_chains, unsigned threads);

// Monte Carlo Z_M = E_{nu^0} exp(-action) with jackknife standard error.
struct ZEstimate {
    double value = 1.0;
    double stderr_value = 0.0;
    std::size_t n = 0;
};

ZEstimate estimate_Z(double mu, double T, int m_grid, int cutoff, std::size_t n,
                     RngStream& rng);

// Self-normalized importance estimate of E_{nu_M}[f] from nu^0 draws,
// f given as per-draw values, weights exp(-action). Returns mean and a
// linearized standard error.
struct ImportanceEstimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

ImportanceEstimate importance_mean(const std::vector<double>& f_values,
                                   const std::vector<double>& actions);

// --------------------------------------------------------------------------
// Tail mass table: empirical nu_M{ ||(u,r)||_{H^s} > beta } against the
// Markov/Cauchy-Schwarz bound (beta Z_M)^{-1} (E_{nu^0} ||u||^2_{H^s} + K T)^{1/2}.
// --------------------------------------------------------------------------
struct TightnessCell {
    int cutoff = 0;
    double beta = 0.0;
    double empirical = 0.0;
    double empirical_se = 0.0;
    double bound = 0.0;
    bool pass = false;  // empirical <= bound within 3 sigma
};

std::vector<TightnessCell> tightness_report(double mu, double T, int m_grid,
                                            const std::vector<int>& cutoffs, double s,
                                            const std::vector<double>& betas,
                                            std::size_t n, int n_reservoirs,
                                            std::uint64_t master_seed);

} // namespace gw

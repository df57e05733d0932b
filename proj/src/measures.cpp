#include "gw/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gw/parallel.hpp"
#include "gw/stats.hpp"

namespace gw {

double nu0_field_moment(double T, int m_grid, double s) {
    double acc = 0.0;
    for (int k = -m_grid; k <= m_grid; ++k)
        acc += std::pow(1.0 + double(k) * k, s - 1.0);
    return 2.0 * T * acc;
}

SystemState sample_nu0(double T, int m_grid, const std::vector<double>& reservoir_T,
                       RngStream& rng) {
    if (!(T >= 0.0)) throw std::invalid_argument("sample_nu0: T must be nonnegative");
    SystemState s = SystemState::zero(m_grid, static_cast<int>(reservoir_T.size()));
    const double sT = std::sqrt(T);
    mode(s.field.phi_hat, 0) = Complex(sT * rng.normal(), 0.0);
    for (int k = 1; k <= m_grid; ++k) {
        const double sig = std::sqrt(T / (2.0 * (1.0 + double(k) * k)));
        const Complex ph(sig * rng.normal(), sig * rng.normal());
        mode(s.field.phi_hat, k) = ph;
        mode(s.field.phi_hat, -k) = std::conj(ph);
    }
    mode(s.field.pi_hat, 0) = Complex(sT * rng.normal(), 0.0);
    const double sig_pi = std::sqrt(T / 2.0);
    for (int k = 1; k <= m_grid; ++k) {
        const Complex pi(sig_pi * rng.normal(), sig_pi * rng.normal());
        mode(s.field.pi_hat, k) = pi;
        mode(s.field.pi_hat, -k) = std::conj(pi);
    }
    for (std::size_t j = 0; j < reservoir_T.size(); ++j)
        s.r[j] = std::sqrt(reservoir_T[j]) * rng.normal();
    return s;
}

SystemState sample_nu0(double T, int m_grid, int n_reservoirs, RngStream& rng) {
    return sample_nu0(T, m_grid, std::vector<double>(static_cast<std::size_t>(n_reservoirs), T), rng);
}

double quartic_action(const SystemState& state, double mu, double T, int cutoff) {
    if (mu == 0.0) return 0.0;
    if (!(T > 0.0)) throw std::invalid_argument("quartic_action: T must be positive");
    const ModeArray phi = cutoff == kFullField
                              ? state.field.phi_hat
                              : project_low(state.field.phi_hat, cutoff);
    const double l4 = lp_norm(phi, 4);
    return mu / (4.0 * T) * l4 * l4 * l4 * l4;
}

GibbsSampler::Result GibbsSampler::sample(std::size_t n_samples, std::size_t burn_in,
                                          std::size_t thin) {
    if (n_samples < 1) throw std::invalid_argument("GibbsSampler: n_samples >= 1 required");
    if (thin < 1) thin = 1;

    Result out;
    out.samples.reserve(n_samples);
    out.actions.reserve(n_samples);

    // chain state lives on (phi, pi); r is an independent factor drawn fresh
    SystemState current = sample_nu0(temperature, m_grid, 0, rng);
    double current_action = quartic_action(current, mu, temperature, reweight_cutoff);
    std::size_t accepted = 0, proposed = 0;

    const std::size_t total_steps = burn_in + n_samples * thin;
    for (std::size_t step = 0; step < total_steps; ++step) {
        SystemState proposal = sample_nu0(temperature, m_grid, 0, rng);
        const double proposal_action =
            quartic_action(proposal, mu, temperature, reweight_cutoff);
        ++proposed;
        const double log_ratio = current_action - proposal_action;
        bool accept;
        if (log_ratio >= 0.0) {
            accept = true;
            rng.uniform();  // burn one uniform either way: fixed draw schedule
        } else {
            accept = rng.uniform() < std::exp(log_ratio);
        }
        if (accept) {
            current = std::move(proposal);
            current_action = proposal_action;
            ++accepted;
        }
        if (step >= burn_in && (step - burn_in + 1) % thin == 0) {
            SystemState emitted = current;
            emitted.r.resize(static_cast<std::size_t>(n_reservoirs));
            for (double& rj : emitted.r) rj = std::sqrt(temperature) * rng.normal();
            out.samples.push_back(std::move(emitted));
            out.actions.push_back(current_action);
            if (out.samples.size() == n_samples) break;
        }
    }
    out.n_proposals = proposed;
    out.acceptance_rate = proposed ? static_cast<double>(accepted) / proposed : 0.0;
    out.low_acceptance_warning = out.acceptance_rate < 0.01;
    out.action_ess = effective_sample_size(out.actions);
    return out;
}

double effective_sample_size(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 4) return static_cast<double>(n);
    const Summary stat = summarize(series);
    const double var = stat.variance();
    if (var == 0.0) return static_cast<double>(n);
    double rho_sum = 0.0;
    for (std::size_t lag = 1; lag < n / 2; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i)
            acc += (series[i] - stat.mean) * (series[i + lag] - stat.mean);
        const double rho = acc / (static_cast<double>(n - lag) * var);
        if (rho <= 0.0) break;
        rho_sum += rho;
    }
    return static_cast<double>(n) / (1.0 + 2.0 * rho_sum);
}

PooledGibbsResult sample_gibbs_pooled(double temperature, double mu, int m_grid,
                                      int reweight_cutoff, int n_reservoirs,
                                      std::size_t n_samples, std::size_t burn_in,
                                      std::size_t thin, std::uint64_t master_seed,
                                      int n_chains, unsigned threads) {
    if (n_chains < 1) throw std::invalid_argument("sample_gibbs_pooled: need n_chains >= 1");
    const std::size_t per_chain = (n_samples + n_chains - 1) / n_chains;
    std::vector<GibbsSampler::Result> chains(static_cast<std::size_t>(n_chains));
    parallel_for(static_cast<std::size_t>(n_chains), threads, [&](std::size_t c) {
        GibbsSampler sampler;
        sampler.temperature = temperature;
        sampler.mu = mu;
        sampler.m_grid = m_grid;
        sampler.reweight_cutoff = reweight_cutoff;
        sampler.n_reservoirs = n_reservoirs;
        sampler.rng = make_stream(master_seed, RngDomain::sampler, c);
        chains[c] = sampler.sample(per_chain, burn_in, thin);
    });

    PooledGibbsResult out;
    out.samples.reserve(n_samples);
    double acc = 0.0, ess = 0.0;
    for (auto& chain : chains) {
        for (auto& s : chain.samples) {
            if (out.samples.size() == n_samples) break;
            out.samples.push_back(std::move(s));
        }
        acc += chain.acceptance_rate;
        ess += chain.action_ess;
        out.low_acceptance_warning = out.low_acceptance_warning || chain.low_acceptance_warning;
    }
    out.acceptance_rate = acc / n_chains;
    out.action_ess = ess;

    // split-Rhat over the action series: each chain split in half
    std::vector<Summary> halves;
    for (const auto& chain : chains) {
        const std::size_t half = chain.actions.size() / 2;
        if (half < 2) continue;
        Summary a, b;
        for (std::size_t i = 0; i < half; ++i) a.add(chain.actions[i]);
        for (std::size_t i = half; i < 2 * half; ++i) b.add(chain.actions[i]);
        halves.push_back(a);
        halves.push_back(b);
    }
    if (halves.size() >= 2) {
        const double len = static_cast<double>(halves.front().n);
        Summary means;
        double w_acc = 0.0;
        for (const Summary& h : halves) {
            means.add(h.mean);
            w_acc += h.variance();
        }
        const double W = w_acc / static_cast<double>(halves.size());
        const double B = len * means.variance();
        if (W > 0.0) {
            const double var_plus = (len - 1.0) / len * W + B / len;
            out.split_rhat = std::sqrt(var_plus / W);
        }
    }
    return out;
}

ZEstimate estimate_Z(double mu, double T, int m_grid, int cutoff, std::size_t n,
                     RngStream& rng) {
    if (n < 1000) throw std::invalid_argument("estimate_Z: need n >= 1e3");
    std::vector<double> weights;
    weights.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const SystemState s = sample_nu0(T, m_grid, 0, rng);
        weights.push_back(std::exp(-quartic_action(s, mu, T, cutoff)));
    }
    ZEstimate z;
    z.n = n;
    z.value = summarize(weights).mean;
    z.stderr_value = jackknife_mean_stderr(weights);
    return z;
}

ImportanceEstimate importance_mean(const std::vector<double>& f_values,
                                   const std::vector<double>& actions) {
    if (f_values.size() != actions.size() || f_values.empty())
        throw std::invalid_argument("importance_mean: size mismatch");
    const std::size_t n = f_values.size();
    double sw = 0.0, swf = 0.0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(-actions[i]);
        sw += w[i];
        swf += w[i] * f_values[i];
    }
    ImportanceEstimate est;
    est.mean = swf / sw;
    // linearization: Var( sum w (f - mean) / sum w )
    double acc = 0.0;
    const double wbar = sw / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = w[i] * (f_values[i] - est.mean) / wbar;
        acc += z * z;
    }
    est.stderr_mean = std::sqrt(acc) / static_cast<double>(n);
    return est;
}

std::vector<TightnessCell> tightness_report(double mu, double T, int m_grid,
                                            const std::vector<int>& cutoffs, double s,
                                            const std::vector<double>& betas,
                                            std::size_t n, int n_reservoirs,
                                            std::uint64_t master_seed) {
    if (!(s < 0.5)) throw std::invalid_argument("tightness_report: needs s < 1/2");
    std::vector<TightnessCell> table;
    const double second_moment =
        nu0_field_moment(T, m_grid, s) + static_cast<double>(n_reservoirs) * T;

    std::uint64_t stream = 0;
    for (int M : cutoffs) {
        auto chain = sample_gibbs_pooled(T, mu, m_grid, M, n_reservoirs, n,
                                         /*burn_in=*/1000, /*thin=*/5,
                                         master_seed + stream, /*n_chains=*/4,
                                         /*threads=*/0);
        stream += 16;

        RngStream zrng = make_stream(master_seed, RngDomain::sampler, 100 + stream);
        const ZEstimate z = estimate_Z(mu, T, m_grid, M, std::max<std::size_t>(n, 1000), zrng);

        std::vector<double> norms;
        norms.reserve(chain.samples.size());
        for (const SystemState& st : chain.samples) norms.push_back(sobolev_norm(st, s));

        for (double beta : betas) {
            TightnessCell cell;
            cell.cutoff = M;
            cell.beta = beta;
            std::size_t hits = 0;
            for (double nrm : norms)
                if (nrm > beta) ++hits;
            const double p = static_cast<double>(hits) / norms.size();
            cell.empirical = p;
            cell.empirical_se = std::sqrt(std::max(p * (1.0 - p), 1.0 / norms.size()) / norms.size());
            const double z_low = std::max(z.value - 3.0 * z.stderr_value, 1e-12);
            cell.bound = std::min(1.0, std::sqrt(second_moment) / (beta * z_low));
            cell.pass = cell.empirical <= cell.bound + 3.0 * cell.empirical_se;
            table.push_back(cell);
        }
    }
    return table;
}

} // namespace gw

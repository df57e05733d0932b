#include "gw/linear_system.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gw {

namespace {

// packed index helpers; off 0 = phi block, off 2m+1 = pi block
inline int idx_zero(int off) { return off; }
inline int idx_re(int off, int k) { return off + 2 * k - 1; }
inline int idx_im(int off, int k) { return off + 2 * k; }

} // namespace

int state_dim(int m_grid, int n_reservoirs) {
    return 2 * mode_count(m_grid) + n_reservoirs;
}

Eigen::VectorXd pack_state(const SystemState& state) {
    const int m = state.field.m_grid;
    const int K = static_cast<int>(state.r.size());
    const int nm = mode_count(m);
    Eigen::VectorXd x(state_dim(m, K));
    x(idx_zero(0)) = mode(state.field.phi_hat, 0).real();
    x(idx_zero(nm)) = mode(state.field.pi_hat, 0).real();
    for (int k = 1; k <= m; ++k) {
        x(idx_re(0, k)) = mode(state.field.phi_hat, k).real();
        x(idx_im(0, k)) = mode(state.field.phi_hat, k).imag();
        x(idx_re(nm, k)) = mode(state.field.pi_hat, k).real();
        x(idx_im(nm, k)) = mode(state.field.pi_hat, k).imag();
    }
    for (int j = 0; j < K; ++j) x(2 * nm + j) = state.r[static_cast<std::size_t>(j)];
    return x;
}

SystemState unpack_state(const Eigen::VectorXd& x, int m_grid, int n_reservoirs,
                         double time) {
    if (x.size() != state_dim(m_grid, n_reservoirs))
        throw std::invalid_argument("unpack_state: dimension mismatch");
    const int nm = mode_count(m_grid);
    SystemState s = SystemState::zero(m_grid, n_reservoirs);
    s.time = time;
    mode(s.field.phi_hat, 0) = Complex(x(idx_zero(0)), 0.0);
    mode(s.field.pi_hat, 0) = Complex(x(idx_zero(nm)), 0.0);
    for (int k = 1; k <= m_grid; ++k) {
        const Complex ph(x(idx_re(0, k)), x(idx_im(0, k)));
        const Complex pi(x(idx_re(nm, k)), x(idx_im(nm, k)));
        mode(s.field.phi_hat, k) = ph;
        mode(s.field.phi_hat, -k) = std::conj(ph);
        mode(s.field.pi_hat, k) = pi;
        mode(s.field.pi_hat, -k) = std::conj(pi);
    }
    for (int j = 0; j < n_reservoirs; ++j) s.r[static_cast<std::size_t>(j)] = x(2 * nm + j);
    return s;
}

Eigen::VectorXd hs_weights(int m_grid, int n_reservoirs, double s) {
    const int nm = mode_count(m_grid);
    Eigen::VectorXd w(state_dim(m_grid, n_reservoirs));
    w(idx_zero(0)) = 1.0;
    w(idx_zero(nm)) = 1.0;
    for (int k = 1; k <= m_grid; ++k) {
        const double base = 1.0 + double(k) * k;
        w(idx_re(0, k)) = w(idx_im(0, k)) = 2.0 * std::pow(base, s);
        w(idx_re(nm, k)) = w(idx_im(nm, k)) = 2.0 * std::pow(base, s - 1.0);
    }
    for (int j = 0; j < n_reservoirs; ++j) w(2 * nm + j) = 1.0;
    return w;
}

Eigen::MatrixXd assemble_generator(const CouplingConfig& cfg) {
    cfg.validate();
    const int m = cfg.m_grid;
    const int K = cfg.n_reservoirs();
    const int nm = mode_count(m);
    const int D = state_dim(m, K);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(D, D);

    // phi' = pi
    L(idx_zero(0), idx_zero(nm)) = 1.0;
    for (int k = 1; k <= m; ++k) {
        L(idx_re(0, k), idx_re(nm, k)) = 1.0;
        L(idx_im(0, k), idx_im(nm, k)) = 1.0;
    }
    // pi' = (d_xx - 1) phi - sum_j r_j alpha_j
    L(idx_zero(nm), idx_zero(0)) = -1.0;
    for (int k = 1; k <= m; ++k) {
        const double w2 = 1.0 + double(k) * k;
        L(idx_re(nm, k), idx_re(0, k)) = -w2;
        L(idx_im(nm, k), idx_im(0, k)) = -w2;
    }
    for (int j = 0; j < K; ++j) {
        const ModeArray& a = cfg.alphas[static_cast<std::size_t>(j)];
        const int rj = 2 * nm + j;
        L(idx_zero(nm), rj) = -mode(a, 0).real();
        for (int k = 1; k <= m; ++k) {
            L(idx_re(nm, k), rj) = -mode(a, k).real();
            L(idx_im(nm, k), rj) = -mode(a, k).imag();
        }
        // r_j' = <alpha_j, pi> - r_j
        L(rj, rj) = -1.0;
        L(rj, idx_zero(nm)) = mode(a, 0).real();
        for (int k = 1; k <= m; ++k) {
            L(rj, idx_re(nm, k)) = 2.0 * mode(a, k).real();
            L(rj, idx_im(nm, k)) = 2.0 * mode(a, k).imag();
        }
    }
    return L;
}

SystemState apply_generator_complex(const CouplingConfig& cfg, const SystemState& state) {
    const int m = cfg.m_grid;
    SystemState d = SystemState::zero(m, cfg.n_reservoirs());
    d.field.phi_hat = state.field.pi_hat;
    for (int k = -m; k <= m; ++k) {
        Complex acc = -(1.0 + double(k) * k) * mode(state.field.phi_hat, k);
        for (int j = 0; j < cfg.n_reservoirs(); ++j)
            acc -= state.r[static_cast<std::size_t>(j)] *
                   mode(cfg.alphas[static_cast<std::size_t>(j)], k);
        mode(d.field.pi_hat, k) = acc;
    }
    for (int j = 0; j < cfg.n_reservoirs(); ++j) {
        d.r[static_cast<std::size_t>(j)] =
            real_inner_product(cfg.alphas[static_cast<std::size_t>(j)], state.field.pi_hat) -
            state.r[static_cast<std::size_t>(j)];
    }
    return d;
}

SystemState apply_generator_u_form(const CouplingConfig& cfg, const SystemState& state) {
    const int m = cfg.m_grid;
    const ModeArray u = complex_field(state.field);
    // du = -i B u - i B^{-1} sum_j alpha_j r_j
    ModeArray du(u.size());
    for (int k = -m; k <= m; ++k) {
        const double w = std::sqrt(1.0 + double(k) * k);
        Complex forcing(0.0, 0.0);
        for (int j = 0; j < cfg.n_reservoirs(); ++j)
            forcing += state.r[static_cast<std::size_t>(j)] *
                       mode(cfg.alphas[static_cast<std::size_t>(j)], k);
        mode(du, k) = Complex(0.0, -w) * mode(u, k) + Complex(0.0, -1.0 / w) * forcing;
    }
    // Back to (phi, pi): u = phi + i B^{-1} pi is linear in its parts, so
    // phi' = Re-part recombination: du = dphi + i B^{-1} dpi where dphi and
    // dpi are themselves Hermitian arrays. Split du accordingly:
    //   dphi(k) = (du(k) + conj(du(-k))) / 2
    //   dpi(k)  = B * (du(k) - conj(du(-k))) / (2i)
    SystemState d = SystemState::zero(m, cfg.n_reservoirs());
    for (int k = -m; k <= m; ++k) {
        const Complex a = mode(du, k);
        const Complex b = std::conj(mode(du, -k));
        const double w = std::sqrt(1.0 + double(k) * k);
        mode(d.field.phi_hat, k) = 0.5 * (a + b);
        mode(d.field.pi_hat, k) = w * (a - b) / Complex(0.0, 2.0);
    }
    // dr_j = <B alpha_j, Im u> - r_j; Im u = B^{-1} pi, so this is
    // <alpha_j, pi>, computed here through the stated u-form.
    for (int j = 0; j < cfg.n_reservoirs(); ++j) {
        const ModeArray b_alpha = apply_dispersion(cfg.alphas[static_cast<std::size_t>(j)]);
        ModeArray im_u(u.size());
        for (int k = -m; k <= m; ++k) {
            const Complex uk = mode(u, k);
            const Complex conj_refl = std::conj(mode(u, -k));
            mode(im_u, k) = (uk - conj_refl) / Complex(0.0, 2.0);
        }
        d.r[static_cast<std::size_t>(j)] =
            real_inner_product(b_alpha, im_u) - state.r[static_cast<std::size_t>(j)];
    }
    return d;
}

double verify_generator_forms(const CouplingConfig& cfg, int n_states, RngStream& rng) {
    const Eigen::MatrixXd L = assemble_generator(cfg);
    double worst = 0.0;
    for (int i = 0; i < n_states; ++i) {
        SystemState s = SystemState::zero(cfg.m_grid, cfg.n_reservoirs());
        for (int k = 0; k <= cfg.m_grid; ++k) {
            const Complex ph(rng.normal(), k == 0 ? 0.0 : rng.normal());
            const Complex pi(rng.normal(), k == 0 ? 0.0 : rng.normal());
            mode(s.field.phi_hat, k) = ph;
            mode(s.field.pi_hat, k) = pi;
            if (k > 0) {
                mode(s.field.phi_hat, -k) = std::conj(ph);
                mode(s.field.pi_hat, -k) = std::conj(pi);
            }
        }
        for (double& rj : s.r) rj = rng.normal();
        const Eigen::VectorXd via_matrix = L * pack_state(s);
        const Eigen::VectorXd via_complex = pack_state(apply_generator_complex(cfg, s));
        const Eigen::VectorXd via_u = pack_state(apply_generator_u_form(cfg, s));
        worst = std::max(worst, (via_matrix - via_complex).cwiseAbs().maxCoeff());
        worst = std::max(worst, (via_matrix - via_u).cwiseAbs().maxCoeff());
    }
    return worst;
}

Eigen::MatrixXd noise_injection(const CouplingConfig& cfg) {
    const int K = cfg.n_reservoirs();
    const int D = state_dim(cfg.m_grid, K);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(D, K);
    for (int j = 0; j < K; ++j)
        v(D - K + j, j) = std::sqrt(2.0 * cfg.temperatures[static_cast<std::size_t>(j)]);
    return v;
}

Eigen::MatrixXd transition_covariance(const Eigen::MatrixXd& L, const Eigen::MatrixXd& V,
                                      double dt) {
    const int n = static_cast<int>(L.rows());
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    big.topLeftCorner(n, n) = L;
    big.topRightCorner(n, n) = V;
    big.bottomRightCorner(n, n) = -L.transpose();
    const Eigen::MatrixXd E = (big * dt).exp();
    // exp of the block matrix: top-left = exp(dt L), top-right = G1 with
    // Cov = G1 * exp(dt L)^T (Van Loan 1978).
    const Eigen::MatrixXd cov =
        E.topRightCorner(n, n) * E.topLeftCorner(n, n).transpose();
    return 0.5 * (cov + cov.transpose());
}

namespace {

// Indices of the coupled dense block: every mode k carried by some alpha_j,
// both phi and pi coordinates, plus all reservoirs.
std::vector<int> coupled_indices(const CouplingConfig& cfg) {
    const int m = cfg.m_grid;
    const int K = cfg.n_reservoirs();
    const int nm = mode_count(m);
    std::vector<bool> mode_coupled(static_cast<std::size_t>(m + 1), false);
    for (const ModeArray& a : cfg.alphas)
        for (int k = 0; k <= m; ++k)
            if (std::abs(mode(a, k)) != 0.0) mode_coupled[static_cast<std::size_t>(k)] = true;
    std::vector<int> idx;
    if (mode_coupled[0]) {
        idx.push_back(idx_zero(0));
        idx.push_back(idx_zero(nm));
    }
    for (int k = 1; k <= m; ++k) {
        if (!mode_coupled[static_cast<std::size_t>(k)]) continue;
        idx.push_back(idx_re(0, k));
        idx.push_back(idx_im(0, k));
        idx.push_back(idx_re(nm, k));
        idx.push_back(idx_im(nm, k));
    }
    for (int j = 0; j < K; ++j) idx.push_back(2 * nm + j);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace

LinearPropagator build_propagator(const CouplingConfig& cfg, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("build_propagator: dt must be positive");
    cfg.validate();
    const int m = cfg.m_grid;
    const int K = cfg.n_reservoirs();
    const int nm = mode_count(m);
    const int D = state_dim(m, K);

    LinearPropagator prop;
    prop.dt = dt;
    prop.m_grid = m;
    prop.n_reservoirs = K;
    prop.coupled = coupled_indices(cfg);
    prop.noise_amp.resize(K);
    for (int j = 0; j < K; ++j)
        prop.noise_amp(j) = std::sqrt(2.0 * cfg.temperatures[static_cast<std::size_t>(j)]);

    const Eigen::MatrixXd L = assemble_generator(cfg);
    const Eigen::MatrixXd v = noise_injection(cfg);
    const int c = static_cast<int>(prop.coupled.size());

    // dense coupled block: restriction of L (the block is L-invariant and
    // complementary coordinates never feed into it)
    Eigen::MatrixXd Lcc(c, c);
    for (int a = 0; a < c; ++a)
        for (int b = 0; b < c; ++b) Lcc(a, b) = L(prop.coupled[a], prop.coupled[b]);
    Eigen::MatrixXd vc = Eigen::MatrixXd::Zero(c, K);
    for (int a = 0; a < c; ++a)
        for (int j = 0; j < K; ++j) vc(a, j) = v(prop.coupled[a], j);

    prop.block_mean = (Lcc * dt).exp();
    const Eigen::MatrixXd cov = transition_covariance(Lcc, vc * vc.transpose(), dt);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("build_propagator: covariance eigendecomposition failed");
    const Eigen::VectorXd evals = es.eigenvalues();   // ascending
    const double lam_max = std::max(0.0, evals.maxCoeff());
    const double clip = 1e-12 * lam_max;
    if (evals.minCoeff() < -1e-10 * std::max(1.0, lam_max))
        throw std::runtime_error("build_propagator: covariance has a significantly negative eigenvalue");
    std::vector<int> keep;
    for (int i = static_cast<int>(evals.size()) - 1; i >= 0; --i)
        if (evals(i) > clip && evals(i) > 0.0) keep.push_back(i);
    prop.block_noise.resize(c, static_cast<int>(keep.size()));
    for (std::size_t col = 0; col < keep.size(); ++col)
        prop.block_noise.col(static_cast<int>(col)) =
            es.eigenvectors().col(keep[col]) * std::sqrt(evals(keep[col]));

    // rotations for every mode outside the block
    std::vector<bool> in_block(static_cast<std::size_t>(D), false);
    for (int i : prop.coupled) in_block[static_cast<std::size_t>(i)] = true;
    auto add_rotation = [&](int iphi, int ipi, double w) {
        const double cwt = std::cos(w * dt);
        const double swt = std::sin(w * dt);
        prop.rotations.push_back({iphi, ipi, cwt, swt / w, w * swt});
    };
    if (!in_block[static_cast<std::size_t>(idx_zero(0))]) add_rotation(idx_zero(0), idx_zero(nm), 1.0);
    for (int k = 1; k <= m; ++k) {
        if (in_block[static_cast<std::size_t>(idx_re(0, k))]) continue;
        const double w = std::sqrt(1.0 + double(k) * k);
        add_rotation(idx_re(0, k), idx_re(nm, k), w);
        add_rotation(idx_im(0, k), idx_im(nm, k), w);
    }

    // dense views for the contract and for diagnostics
    prop.mean_map = Eigen::MatrixXd::Zero(D, D);
    for (int a = 0; a < c; ++a)
        for (int b = 0; b < c; ++b)
            prop.mean_map(prop.coupled[a], prop.coupled[b]) = prop.block_mean(a, b);
    for (const auto& rot : prop.rotations) {
        prop.mean_map(rot.idx_phi, rot.idx_phi) = rot.cos_wt;
        prop.mean_map(rot.idx_phi, rot.idx_pi) = rot.sin_wt_over_w;
        prop.mean_map(rot.idx_pi, rot.idx_phi) = -rot.w_sin_wt;
        prop.mean_map(rot.idx_pi, rot.idx_pi) = rot.cos_wt;
    }
    prop.noise_factor = Eigen::MatrixXd::Zero(D, prop.block_noise.cols());
    for (int a = 0; a < c; ++a)
        prop.noise_factor.row(prop.coupled[a]) = prop.block_noise.row(a);

    if (!prop.mean_map.allFinite() || !prop.noise_factor.allFinite())
        throw std::runtime_error("build_propagator: non-finite entries in the transition maps");
    return prop;
}

LinearPropagator build_propagator(const Eigen::MatrixXd& L0, const CouplingConfig& cfg,
                                  double dt) {
    const Eigen::MatrixXd ref = assemble_generator(cfg);
    if (L0.rows() != ref.rows() || L0.cols() != ref.cols() ||
        (L0 - ref).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("build_propagator: L0 does not match the configuration");
    return build_propagator(cfg, dt);
}

void LinearPropagator::apply_mean(Eigen::VectorXd& x, Eigen::VectorXd& scratch) const {
    const int c = static_cast<int>(coupled.size());
    scratch.resize(c);
    for (int a = 0; a < c; ++a) scratch(a) = x(coupled[a]);
    Eigen::VectorXd out = block_mean * scratch;
    for (int a = 0; a < c; ++a) x(coupled[a]) = out(a);
    for (const Rotation& rot : rotations) {
        const double ph = x(rot.idx_phi);
        const double pi = x(rot.idx_pi);
        x(rot.idx_phi) = rot.cos_wt * ph + rot.sin_wt_over_w * pi;
        x(rot.idx_pi) = -rot.w_sin_wt * ph + rot.cos_wt * pi;
    }
}

void LinearPropagator::apply_step(Eigen::VectorXd& x, RngStream& rng,
                                  Eigen::VectorXd& scratch, Eigen::VectorXd& xi) const {
    apply_mean(x, scratch);
    const int rank = noise_rank();
    if (rank == 0) return;
    xi.resize(rank);
    for (int i = 0; i < rank; ++i) xi(i) = rng.normal();
    const Eigen::VectorXd kick = block_noise * xi;
    for (std::size_t a = 0; a < coupled.size(); ++a) x(coupled[a]) += kick(static_cast<int>(a));
}

void LinearPropagator::apply_step_path(Eigen::VectorXd& x, const double* dW,
                                       Eigen::VectorXd& scratch) const {
    const int D = static_cast<int>(x.size());
    for (int j = 0; j < n_reservoirs; ++j)
        x(D - n_reservoirs + j) += noise_amp(j) * dW[j];
    apply_mean(x, scratch);
}

SystemState step_linear(const SystemState& state, const LinearPropagator& prop,
                        RngStream& rng) {
    if (state.field.m_grid != prop.m_grid ||
        static_cast<int>(state.r.size()) != prop.n_reservoirs)
        throw std::invalid_argument("step_linear: state grid does not match propagator");
    Eigen::VectorXd x = pack_state(state);
    Eigen::VectorXd scratch, xi;
    prop.apply_step(x, rng, scratch, xi);
    return unpack_state(x, prop.m_grid, prop.n_reservoirs, state.time + prop.dt);
}

double SemigroupCurve::sup_up_to(std::size_t s_index, double t_cap) const {
    double sup = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] <= t_cap * (1.0 + 1e-12)) sup = std::max(sup, max_ratio[s_index][i]);
    return sup;
}

SemigroupCurve check_semigroup_bound(const CouplingConfig& cfg,
                                     const std::vector<double>& s_values,
                                     double t_max, int n_time_points,
                                     int n_samples, RngStream& rng) {
    if (!(t_max > 0.0) || n_time_points < 2)
        throw std::invalid_argument("check_semigroup_bound: bad time grid");
    const int D = state_dim(cfg.m_grid, cfg.n_reservoirs());
    const Eigen::MatrixXd L = assemble_generator(cfg);

    // random sample states, columns normalized per s below
    Eigen::MatrixXd samples(D, n_samples);
    for (int i = 0; i < n_samples; ++i)
        for (int d = 0; d < D; ++d) samples(d, i) = rng.normal();

    SemigroupCurve curve;
    curve.s_values = s_values;
    curve.max_ratio.assign(s_values.size(), {});
    std::vector<Eigen::VectorXd> weights;
    std::vector<Eigen::MatrixXd> normalized;
    for (double s : s_values) {
        weights.push_back(hs_weights(cfg.m_grid, cfg.n_reservoirs(), s));
        Eigen::MatrixXd cols = samples;
        for (int i = 0; i < n_samples; ++i) {
            const double nrm = std::sqrt(cols.col(i).cwiseAbs2().dot(weights.back()));
            cols.col(i) /= nrm;
        }
        normalized.push_back(std::move(cols));
    }

    const double t_min = t_max * 1e-3;
    const double ratio = std::pow(t_max / t_min, 1.0 / (n_time_points - 1));
    for (int it = 0; it < n_time_points; ++it) {
        const double t = t_min * std::pow(ratio, it);
        const Eigen::MatrixXd E = (L * t).exp();
        curve.times.push_back(t);
        for (std::size_t is = 0; is < s_values.size(); ++is) {
            const Eigen::MatrixXd evolved = E * normalized[is];
            double mx = 0.0;
            for (int i = 0; i < n_samples; ++i) {
                const double nrm = std::sqrt(evolved.col(i).cwiseAbs2().dot(weights[is]));
                mx = std::max(mx, nrm);
            }
            curve.max_ratio[is].push_back(mx);
        }
    }
    return curve;
}

} // namespace gw

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>

#include "gw/linear_system.hpp"
#include "gw/measures.hpp"
#include "gw/stats.hpp"
#include "test_helpers.hpp"

using namespace gw;
using namespace gwtest;

namespace {
const double kPi = 3.14159265358979323846264338328;

CouplingConfig cos_coupling(int m_grid, double T, double mu = 0.0) {
    return single_cosine_coupling(m_grid, 1, 1.0, T, mu);
}
} // namespace

TEST_CASE("packing round trip and H^s weights") {
    RngStream rng(31, 0);
    for (int rep = 0; rep < 10; ++rep) {
        SystemState s = random_state(10, 2, rng);
        const Eigen::VectorXd x = pack_state(s);
        const SystemState back = unpack_state(x, 10, 2);
        for (int k = -10; k <= 10; ++k) {
            CHECK(std::abs(mode(back.field.phi_hat, k) - mode(s.field.phi_hat, k)) < 1e-15);
            CHECK(std::abs(mode(back.field.pi_hat, k) - mode(s.field.pi_hat, k)) < 1e-15);
        }
        for (double sv : {0.0, 1.0 / 3.0, 0.49, 1.0}) {
            const Eigen::VectorXd w = hs_weights(10, 2, sv);
            const double via_weights = std::sqrt(x.cwiseAbs2().dot(w));
            CHECK(via_weights == doctest::Approx(sobolev_norm(s, sv)).epsilon(1e-12));
        }
    }
}

TEST_CASE("generator: decoupled spectrum") {
    // alpha = 0: eigenvalues {+-i omega_k} and {-1} with multiplicity K
    CouplingConfig cfg = single_cosine_coupling(3, 1, 0.0, 1.0, 0.0);
    const Eigen::MatrixXd L = assemble_generator(cfg);
    Eigen::EigenSolver<Eigen::MatrixXd> es(L);
    std::vector<std::complex<double>> expected;
    for (int k = -3; k <= 3; ++k) {
        const double w = std::sqrt(1.0 + double(k) * k);
        expected.emplace_back(0.0, w);
        expected.emplace_back(0.0, -w);
    }
    expected.emplace_back(-1.0, 0.0);
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const std::complex<double> lam = es.eigenvalues()(i);
        double best = 1e9;
        for (const auto& e : expected) best = std::min(best, std::abs(lam - e));
        CHECK(best < 1e-10);
    }
}

TEST_CASE("generator: reservoir reads the field through the coupling") {
    // K = 1, alpha = cos x, state (phi = 0, pi = cos x, r = 0): dr = <cos, cos> = pi
    CouplingConfig cfg = cos_coupling(2, 1.0);
    SystemState s = SystemState::zero(2, 1);
    s.field.pi_hat = cosine_coeffs(2, 1, 1.0);
    const Eigen::VectorXd dx = assemble_generator(cfg) * pack_state(s);
    const SystemState ds = unpack_state(dx, 2, 1);
    CHECK(ds.r[0] == doctest::Approx(kPi).epsilon(1e-13));
}

TEST_CASE("generator: three independent routes agree") {
    RngStream rng(37, 0);
    CouplingConfig cfg = single_cosine_coupling(8, 2, 0.8, 1.5, 0.0);
    cfg.alphas.push_back(random_hermitian(8, rng, 0.8));
    cfg.temperatures.push_back(0.7);
    CHECK(verify_generator_forms(cfg, 25, rng) < 1e-12);
}

TEST_CASE("generator: flow derivative by Richardson finite differences") {
    RngStream rng(41, 0);
    CouplingConfig cfg = cos_coupling(6, 1.0);
    const Eigen::MatrixXd L = assemble_generator(cfg);
    const SystemState s = random_state(6, 1, rng);
    const Eigen::VectorXd x = pack_state(s);
    const double h = 1e-4;
    auto flow = [&](double t) -> Eigen::VectorXd { return (L * t).exp() * x; };
    // Richardson-extrapolated centered difference, error O(h^4)
    const Eigen::VectorXd d_h = (flow(h) - flow(-h)) / (2.0 * h);
    const Eigen::VectorXd d_h2 = (flow(h / 2) - flow(-h / 2)) / h;
    const Eigen::VectorXd richardson = (4.0 * d_h2 - d_h) / 3.0;
    CHECK((richardson - L * x).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("propagator: free rotation blocks") {
    // alpha = 0 within machine zero: each mode evolves by the harmonic rotation
    CouplingConfig cfg = single_cosine_coupling(4, 1, 0.0, 1.0, 0.0);
    const double dt = 0.3;
    const LinearPropagator prop = build_propagator(cfg, dt);
    const int nm = mode_count(4);
    for (int k = 1; k <= 4; ++k) {
        const double w = std::sqrt(1.0 + double(k) * k);
        const int iphi = 2 * k - 1, ipi = nm + 2 * k - 1;
        CHECK(prop.mean_map(iphi, iphi) == doctest::Approx(std::cos(w * dt)).epsilon(1e-12));
        CHECK(prop.mean_map(iphi, ipi) == doctest::Approx(std::sin(w * dt) / w).epsilon(1e-12));
        CHECK(prop.mean_map(ipi, iphi) == doctest::Approx(-w * std::sin(w * dt)).epsilon(1e-12));
        CHECK(prop.mean_map(ipi, ipi) == doctest::Approx(std::cos(w * dt)).epsilon(1e-12));
    }
}

TEST_CASE("propagator: scalar OU block") {
    CouplingConfig cfg = single_cosine_coupling(3, 1, 0.0, 2.0, 0.0);  // alpha = 0
    const double dt = 0.25, T = 2.0;
    const LinearPropagator prop = build_propagator(cfg, dt);
    const int ir = state_dim(3, 1) - 1;
    CHECK(prop.mean_map(ir, ir) == doctest::Approx(std::exp(-dt)).epsilon(1e-12));
    const Eigen::MatrixXd cov = prop.noise_factor * prop.noise_factor.transpose();
    CHECK(cov(ir, ir) == doctest::Approx(T * (1.0 - std::exp(-2.0 * dt))).epsilon(1e-12));
}

TEST_CASE("propagator: Van Loan covariance against quadrature oracle") {
    RngStream rng(43, 0);
    CouplingConfig cfg;
    cfg.m_grid = 3;
    cfg.alphas = {random_hermitian(3, rng, 0.5), random_hermitian(3, rng, 0.5)};
    cfg.temperatures = {1.3, 0.4};
    cfg.mu = 0.0;
    const double dt = 0.2;
    const Eigen::MatrixXd L = assemble_generator(cfg);
    const Eigen::MatrixXd v = noise_injection(cfg);
    const Eigen::MatrixXd V = v * v.transpose();
    const Eigen::MatrixXd via_vanloan = transition_covariance(L, V, dt);

    // brute-force trapezoid quadrature of int_0^dt e^{sL} V e^{sL^T} ds
    const int n_q = 10000;
    const double h = dt / n_q;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(L.rows(), L.cols());
    const Eigen::MatrixXd Eh = (L * h).exp();
    Eigen::MatrixXd Es = Eigen::MatrixXd::Identity(L.rows(), L.cols());
    for (int i = 0; i <= n_q; ++i) {
        const Eigen::MatrixXd term = Es * V * Es.transpose();
        acc += (i == 0 || i == n_q) ? 0.5 * term : term;
        Es = Eh * Es;
    }
    acc *= h;
    CHECK((via_vanloan - acc).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("propagator: noise factor invariants") {
    CouplingConfig cfg = cos_coupling(5, 1.7);
    const LinearPropagator prop = build_propagator(cfg, 0.1);
    const Eigen::MatrixXd GGt = prop.noise_factor * prop.noise_factor.transpose();
    CHECK((GGt - GGt.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(GGt);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);

    // T -> 0 kills the noise entirely
    CouplingConfig cold = cos_coupling(5, 0.0);
    const LinearPropagator frozen = build_propagator(cold, 0.1);
    CHECK(frozen.noise_rank() == 0);
}

TEST_CASE("propagator: fast apply equals the dense map") {
    RngStream rng(47, 0);
    CouplingConfig cfg = cos_coupling(12, 1.0);
    const LinearPropagator prop = build_propagator(cfg, 0.05);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd x = pack_state(random_state(12, 1, rng));
        const Eigen::VectorXd dense = prop.mean_map * x;
        Eigen::VectorXd scratch;
        prop.apply_mean(x, scratch);
        CHECK((x - dense).cwiseAbs().maxCoeff() < 1e-13 * std::max(1.0, dense.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("gaussian transition exactness under composition") {
    CouplingConfig cfg = cos_coupling(6, 1.2);
    const double dt = 0.08;
    const LinearPropagator full = build_propagator(cfg, dt);
    const LinearPropagator half = build_propagator(cfg, dt / 2.0);
    const double scale = full.mean_map.cwiseAbs().maxCoeff();
    CHECK((full.mean_map - half.mean_map * half.mean_map).cwiseAbs().maxCoeff() < 1e-10 * scale);

    const Eigen::MatrixXd cov_full = full.noise_factor * full.noise_factor.transpose();
    const Eigen::MatrixXd cov_half = half.noise_factor * half.noise_factor.transpose();
    const Eigen::MatrixXd composed =
        half.mean_map * cov_half * half.mean_map.transpose() + cov_half;
    CHECK((cov_full - composed).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, cov_full.cwiseAbs().maxCoeff()));
}

TEST_CASE("step_linear: conservation and decay in the decoupled case") {
    // T = 0, alpha = 0: every |u_hat_k| is conserved, r decays like e^{-t}
    CouplingConfig cfg = single_cosine_coupling(6, 1, 0.0, 0.0, 0.0);
    const double dt = 0.05;
    const LinearPropagator prop = build_propagator(cfg, dt);
    RngStream rng(53, 0);
    SystemState s = random_state(6, 1, rng);
    s.r[0] = 2.0;
    const ModeArray u0 = complex_field(s.field);
    SystemState cur = s;
    for (int i = 0; i < 200; ++i) cur = step_linear(cur, prop, rng);
    const ModeArray uT = complex_field(cur.field);
    for (int k = -6; k <= 6; ++k)
        CHECK(std::abs(std::abs(mode(uT, k)) - std::abs(mode(u0, k))) < 1e-11);
    CHECK(cur.r[0] == doctest::Approx(2.0 * std::exp(-200.0 * dt)).epsilon(1e-9));
    CHECK(cur.time == doctest::Approx(200.0 * dt));
}

TEST_CASE("step_linear: equal-temperature stationarity of nu0") {
    // start from nu0 and check second moments after many steps (3 sigma)
    const int m = 8, K = 1;
    const double T = 1.0;
    CouplingConfig cfg = cos_coupling(m, T);
    const double dt = 0.05;
    const int n_steps = 100;
    const std::size_t n_traj = 10000;
    const LinearPropagator prop = build_propagator(cfg, dt);

    Summary hs0_before, hs0_after, r2_before, r2_after;
    for (std::size_t i = 0; i < n_traj; ++i) {
        RngStream rng(59, i);
        SystemState s = sample_nu0(T, m, K, rng);
        const double n0 = sobolev_norm(s, 1.0 / 3.0);
        hs0_before.add(n0 * n0);
        r2_before.add(s.r[0] * s.r[0]);
        Eigen::VectorXd x = pack_state(s);
        Eigen::VectorXd scratch, xi;
        for (int step = 0; step < n_steps; ++step) prop.apply_step(x, rng, scratch, xi);
        const SystemState sT = unpack_state(x, m, K);
        const double nT = sobolev_norm(sT, 1.0 / 3.0);
        hs0_after.add(nT * nT);
        r2_after.add(sT.r[0] * sT.r[0]);
    }
    const double se_hs = std::sqrt(hs0_before.stderr_mean() * hs0_before.stderr_mean() +
                                   hs0_after.stderr_mean() * hs0_after.stderr_mean());
    CHECK(std::abs(hs0_after.mean - hs0_before.mean) < 3.0 * se_hs);
    const double se_r2 = std::sqrt(r2_before.stderr_mean() * r2_before.stderr_mean() +
                                   r2_after.stderr_mean() * r2_after.stderr_mean());
    CHECK(std::abs(r2_after.mean - r2_before.mean) < 3.0 * se_r2);
}

TEST_CASE("zero-noise energy dissipation is monotone") {
    // T = 0, mu = 0: E_0 = (||u||_{H^1}^2 + r^2)/2 never increases
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, 0.0, 0.0);
    const LinearPropagator prop = build_propagator(cfg, 0.02);
    RngStream rng(61, 0);
    SystemState s = random_state(8, 1, rng);
    auto e0 = [](const SystemState& st) {
        const double n = sobolev_norm(st, 1.0);
        return 0.5 * n * n;
    };
    double prev = e0(s);
    for (int i = 0; i < 500; ++i) {
        s = step_linear(s, prop, rng);
        const double cur = e0(s);
        CHECK(cur <= prev + 1e-10 * std::max(1.0, prev));
        prev = cur;
    }
}

TEST_CASE("semigroup bound diagnostic") {
    RngStream rng(67, 0);
    SUBCASE("alpha = 0 never grows") {
        CouplingConfig cfg = single_cosine_coupling(6, 1, 0.0, 1.0, 0.0);
        const SemigroupCurve curve = check_semigroup_bound(cfg, {0.3, 0.7}, 20.0, 50, 16, rng);
        for (std::size_t is = 0; is < 2; ++is)
            CHECK(curve.sup_up_to(is, 20.0) <= 1.0 + 1e-10);
    }
    SUBCASE("coupled case: finite and stable under horizon doubling") {
        CouplingConfig cfg = cos_coupling(8, 1.0);
        const SemigroupCurve curve = check_semigroup_bound(cfg, {0.5}, 100.0, 60, 24, rng);
        const double sup50 = curve.sup_up_to(0, 50.0);
        const double sup100 = curve.sup_up_to(0, 100.0);
        CHECK(std::isfinite(sup100));
        CHECK(sup100 < 10.0);  // recorded constant stays modest
        CHECK(std::abs(sup100 - sup50) / sup50 < 0.01);
    }
}

TEST_CASE("linear tail bound: gaussian-tail regression (small)") {
    // miniature of the acceptance criterion: 2000 trajectories, negative
    // slope of log-exceedance vs (lambda - c beta)^2 with good fit
    const int m = 8, K = 1;
    CouplingConfig cfg = cos_coupling(m, 1.0);
    const double s = 1.0 / 3.0, dt = 0.01;
    const int n_steps = 100;
    const std::size_t n_traj = 2000;

    RngStream shape(71, 0);
    SystemState init = sample_nu0(1.0, m, K, shape);
    const double beta = 1.0;
    {
        const double scale = beta / sobolev_norm(init, s);
        for (Complex& c : init.field.phi_hat) c *= scale;
        for (Complex& c : init.field.pi_hat) c *= scale;
        for (double& rj : init.r) rj *= scale;
    }
    const LinearPropagator prop = build_propagator(cfg, dt);
    const Eigen::VectorXd w = hs_weights(m, K, s);
    const Eigen::VectorXd x0 = pack_state(init);
    std::vector<double> sups(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
        RngStream rng(73, i);
        Eigen::VectorXd x = x0;
        Eigen::VectorXd scratch, xi;
        double sup = std::sqrt(x.cwiseAbs2().dot(w));
        for (int step = 0; step < n_steps; ++step) {
            prop.apply_step(x, rng, scratch, xi);
            sup = std::max(sup, std::sqrt(x.cwiseAbs2().dot(w)));
        }
        sups[i] = sup;
    }
    std::vector<double> sorted = sups;
    std::sort(sorted.begin(), sorted.end());
    const double med = sorted[n_traj / 2];
    std::vector<double> xs, ys;
    for (int l = 0; l < 10; ++l) {
        const double lam = med + (sorted[static_cast<std::size_t>(0.998 * n_traj)] - med) * (l + 1) / 10.0;
        std::size_t hits = 0;
        for (double v : sups)
            if (v > lam) ++hits;
        if (hits == 0) break;
        xs.push_back((lam - med) * (lam - med));
        ys.push_back(std::log(static_cast<double>(hits) / n_traj));
    }
    const LineFit fit = fit_line(xs, ys);
    CHECK(fit.slope < 0.0);
    CHECK(fit.r2 > 0.9);
}

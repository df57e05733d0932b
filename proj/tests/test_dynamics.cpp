#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gw/dynamics.hpp"
#include "gw/measures.hpp"
#include "gw/stats.hpp"
#include "test_helpers.hpp"

using namespace gw;
using namespace gwtest;

namespace {
const double kPi = 3.14159265358979323846264338328;

SystemState beta_state(int m, int K, double beta, double s, std::uint64_t seed) {
    RngStream rng(seed, 0);
    SystemState init = sample_nu0(1.0, m, K, rng);
    const double scale = beta / sobolev_norm(init, s);
    for (Complex& c : init.field.phi_hat) c *= scale;
    for (Complex& c : init.field.pi_hat) c *= scale;
    for (double& rj : init.r) rj *= scale;
    return init;
}
} // namespace

TEST_CASE("energy examples") {
    SystemState s = SystemState::zero(8, 1);
    s.field.phi_hat = cosine_coeffs(8, 1, 1.0);
    CHECK(energy(s, 0.0) == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(energy(s, 4.0) == doctest::Approx(kPi + 3.0 * kPi / 4.0).epsilon(1e-12));
    CHECK(energy(SystemState::zero(8, 2), 1.0) == 0.0);
}

TEST_CASE("mu = 0 step is bitwise the linear step composition") {
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, 1.3, 0.0);
    const double dt = 0.01;
    NonlinearStepper stepper(cfg, 8, dt);
    const LinearPropagator half = build_propagator(cfg.projected(8), dt / 2.0);

    RngStream rng_a(151, 9), rng_b(151, 9);
    RngStream init_rng(152, 0);
    Eigen::VectorXd x = pack_state(random_state(8, 1, init_rng));
    Eigen::VectorXd y = x;
    Eigen::VectorXd scratch, xi;
    for (int i = 0; i < 50; ++i) {
        stepper.step(x, rng_a);
        half.apply_step(y, rng_b, scratch, xi);
        half.apply_step(y, rng_b, scratch, xi);
    }
    for (int d = 0; d < x.size(); ++d) CHECK(x(d) == y(d));
}

TEST_CASE("conservative case: energy drift is second order in dt") {
    // T = 0, alpha = 0, r = 0: the field is Hamiltonian, drift ~ C dt^2
    CouplingConfig cfg = single_cosine_coupling(8, 1, 0.0, 0.0, 1.0);
    SystemState init = beta_state(8, 1, 1.0, 0.5, 157);
    std::fill(init.r.begin(), init.r.end(), 0.0);
    auto drift = [&](double dt) {
        NonlinearStepper stepper(cfg, 8, dt);
        RngStream rng(1, 1);  // unused: T = 0
        Eigen::VectorXd x = pack_state(init);
        const double e0 = energy(unpack_state(x, 8, 1), 1.0);
        double worst = 0.0;
        const int n = static_cast<int>(std::llround(1.0 / dt));
        for (int i = 0; i < n; ++i) {
            stepper.step(x, rng);
            worst = std::max(worst, std::abs(energy(unpack_state(x, 8, 1), 1.0) - e0));
        }
        return worst;
    };
    const double d1 = drift(4e-3);
    const double d2 = drift(2e-3);
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.5));  // halving dt => ~4x smaller
}

TEST_CASE("single-mode reduction matches an independent ODE oracle") {
    // m_grid = 1, T = 0, alpha = 0, mu = 1, phi = a cos x:
    // the system reduces to a'' = -2a - (3/4) mu a^3. Reference: RK4 at 1e-5.
    const double mu = 1.0, a0 = 0.5;
    CouplingConfig cfg = single_cosine_coupling(1, 1, 0.0, 0.0, mu);
    SystemState init = SystemState::zero(1, 1);
    init.field.phi_hat = cosine_coeffs(1, 1, a0);

    // oracle on (a, b): da = b, db = -2a - (3/4) mu a^3
    double a = a0, b = 0.0;
    const double h = 1e-5;
    auto f_a = [](double, double bb) { return bb; };
    auto f_b = [&](double aa, double) { return -2.0 * aa - 0.75 * mu * aa * aa * aa; };
    for (int i = 0; i < 100000; ++i) {
        const double k1a = f_a(a, b), k1b = f_b(a, b);
        const double k2a = f_a(a + 0.5 * h * k1a, b + 0.5 * h * k1b),
                     k2b = f_b(a + 0.5 * h * k1a, b + 0.5 * h * k1b);
        const double k3a = f_a(a + 0.5 * h * k2a, b + 0.5 * h * k2b),
                     k3b = f_b(a + 0.5 * h * k2a, b + 0.5 * h * k2b);
        const double k4a = f_a(a + h * k3a, b + h * k3b), k4b = f_b(a + h * k3a, b + h * k3b);
        a += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
        b += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
    }

    NonlinearStepper stepper(cfg, 1, 1e-4);
    RngStream rng(1, 1);
    Eigen::VectorXd x = pack_state(init);
    for (int i = 0; i < 10000; ++i) stepper.step(x, rng);
    const SystemState got = unpack_state(x, 1, 1);
    // amplitude of cos x: phi_hat(1) = a sqrt(pi/2)
    const double a_num = mode(got.field.phi_hat, 1).real() / std::sqrt(kPi / 2.0);
    const double b_num = mode(got.field.pi_hat, 1).real() / std::sqrt(kPi / 2.0);
    CHECK(std::abs(a_num - a) < 1e-6);
    CHECK(std::abs(b_num - b) < 1e-6);
}

TEST_CASE("coupled pair: identical noise by construction") {
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, 1.0, 0.0);
    SUBCASE("mu = 0 makes both members bitwise identical") {
        RngStream init_rng(163, 0);
        const SystemState init = random_state(8, 1, init_rng);
        CoupledPairRunner pair(cfg, 8, 1e-2, init, 167, 0);
        for (int i = 0; i < 100; ++i) {
            pair.step();
            for (int d = 0; d < pair.nonlinear().size(); ++d)
                CHECK(pair.nonlinear()(d) == pair.linear()(d));
        }
    }
    SUBCASE("mu > 0: the reservoir difference has no diffusive part") {
        CouplingConfig nl = cfg;
        nl.mu = 1.0;
        RngStream init_rng(173, 0);
        const SystemState init = random_state(8, 1, init_rng);
        CoupledPairRunner pair(nl, 8, 1e-3, init, 179, 0);
        double qv_rtilde = 0.0, qv_r = 0.0;
        double prev_rt = 0.0, prev_r = init.r[0];
        const int ir = state_dim(8, 1) - 1;
        for (int i = 0; i < 1000; ++i) {
            pair.step();
            const double rt = pair.nonlinear()(ir) - pair.linear()(ir);
            const double r = pair.nonlinear()(ir);
            qv_rtilde += (rt - prev_rt) * (rt - prev_rt);
            qv_r += (r - prev_r) * (r - prev_r);
            prev_rt = rt;
            prev_r = r;
        }
        CHECK(qv_rtilde < 0.01 * qv_r);
    }
}

TEST_CASE("bourgain functional degenerate cases") {
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, 1.0, 0.0);
    RngStream init_rng(181, 0);
    const SystemState init = random_state(8, 1, init_rng);

    SUBCASE("t = 0: I_N(0) = E(P_{<=N} u(0)) with r_tilde = 0") {
        const double i_n = bourgain_functional(init, init, 4, 0.7);
        SystemState low = project_low(init, 4);
        std::fill(low.r.begin(), low.r.end(), 0.0);
        CHECK(i_n == doctest::Approx(energy(low, 0.7)).epsilon(1e-12));
    }
    SUBCASE("mu = 0 coupled pair keeps I_N = E(P_{<=N} u0)") {
        CoupledPairRunner pair(cfg, 8, 1e-2, init, 191, 0);
        for (int i = 0; i < 20; ++i) pair.step();
        const SystemState nl = pair.nonlinear_state();
        const SystemState lin = pair.linear_state();
        const double i_n = bourgain_functional(nl, lin, 3, 0.0);
        SystemState low = project_low(lin, 3);
        std::fill(low.r.begin(), low.r.end(), 0.0);
        CHECK(i_n == doctest::Approx(energy(low, 0.0)).epsilon(1e-10));
    }
    SUBCASE("N = m_grid reduces to E(u, r - r0)") {
        CouplingConfig nl = cfg;
        nl.mu = 0.5;
        CoupledPairRunner pair(nl, 8, 1e-2, init, 193, 0);
        for (int i = 0; i < 20; ++i) pair.step();
        const SystemState a = pair.nonlinear_state();
        const SystemState b = pair.linear_state();
        SystemState expect = a;
        for (std::size_t j = 0; j < expect.r.size(); ++j) expect.r[j] -= b.r[j];
        CHECK(bourgain_functional(a, b, 8, 0.5) ==
              doctest::Approx(energy(expect, 0.5)).epsilon(1e-12));
    }
    SUBCASE("time mismatch is rejected") {
        SystemState late = init;
        late.time = 1.0;
        CHECK_THROWS_AS(bourgain_functional(late, init, 2, 0.0), std::invalid_argument);
    }
}

TEST_CASE("bourgain drift formula: deterministic self-convergence") {
    // T = 0: centered FD of I_N against the formula, second order in dt
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, 0.0, 1.0);
    const SystemState init = beta_state(8, 1, 1.0, 0.5, 197);
    std::vector<double> log_dt, log_res;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        const DriftCheck check = verify_bourgain_drift(cfg, 8, dt, 0.5, 4, init, 199, 0);
        log_dt.push_back(std::log(dt));
        log_res.push_back(std::log(check.max_residual));
    }
    const LineFit fit = fit_line(log_dt, log_res);
    CHECK(fit.slope >= 1.8);
    CHECK(fit.r2 > 0.95);
}

TEST_CASE("bourgain drift formula: mu = 0 reduction converges at the same order") {
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, 0.0, 0.0);
    const SystemState init = beta_state(8, 1, 1.0, 0.5, 211);
    std::vector<double> log_dt, log_res;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        const DriftCheck check = verify_bourgain_drift(cfg, 8, dt, 0.5, 4, init, 223, 0);
        log_dt.push_back(std::log(dt));
        log_res.push_back(std::log(check.max_residual));
    }
    const LineFit fit = fit_line(log_dt, log_res);
    CHECK(fit.slope >= 1.8);
}

TEST_CASE("bourgain drift formula: conservative case has zero right side") {
    // alpha = 0, T = 0, N = m_grid: u = u0 + same data => r_tilde = 0 and the
    // formula collapses to Im<Bu, mu phi^3 - mu phi^3> = 0; the FD picks up
    // only the splitting's energy drift and shrinks with dt.
    CouplingConfig cfg = single_cosine_coupling(6, 1, 0.0, 0.0, 1.0);
    const SystemState init = beta_state(6, 1, 1.0, 0.5, 227);
    const CouplingConfig projected = cfg.projected(6);

    CoupledPairRunner pair(cfg, 6, 1e-3, init, 229, 0);
    for (int i = 0; i < 50; ++i) {
        pair.step();
        const double rhs = bourgain_drift_rhs(pair.nonlinear_state(), pair.linear_state(),
                                              6, 1.0, projected);
        CHECK(std::abs(rhs) < 1e-12);
    }
    const DriftCheck coarse = verify_bourgain_drift(cfg, 6, 2e-3, 0.3, 6, init, 229, 0);
    const DriftCheck fine = verify_bourgain_drift(cfg, 6, 1e-3, 0.3, 6, init, 229, 0);
    CHECK(fine.max_residual < coarse.max_residual);
}

TEST_CASE("galerkin nesting: the cubic spreads modes") {
    // data and coupling in |k| <= 2, cutoff 8: higher modes appear
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, 0.0, 1.0);
    SystemState init = SystemState::zero(8, 1);
    init.field.phi_hat = cosine_coeffs(8, 2, 1.0);
    NonlinearStepper stepper(cfg, 8, 1e-3);
    RngStream rng(233, 0);
    Eigen::VectorXd x = pack_state(init);
    for (int i = 0; i < 100; ++i) stepper.step(x, rng);
    const SystemState out = unpack_state(x, 8, 1);
    const double high = component_sobolev_norm(project_high(out.field.phi_hat, 2), 0.0);
    CHECK(high > 1e-8);
}

TEST_CASE("cutoff nesting: discrepancy decreases with M (small)") {
    CouplingConfig cfg = single_cosine_coupling(16, 1, 1.0, 1.0, 1.0);
    RngStream init_rng(239, 0);
    const SystemState data = sample_nu0(1.0, 16, 1, init_rng);
    const Eigen::VectorXd w = hs_weights(16, 1, 1.0 / 3.0 + 0.02);

    std::vector<int> Ms = {4, 8};
    const int m_ref = 16;
    std::vector<NonlinearStepper> steppers;
    for (int M : Ms) steppers.emplace_back(cfg, M, 1e-3);
    NonlinearStepper ref(cfg, m_ref, 1e-3);
    std::vector<Eigen::VectorXd> xs;
    for (int M : Ms) xs.push_back(pack_state(project_low(data, M)));
    Eigen::VectorXd x_ref = pack_state(project_low(data, m_ref));

    RngStream noise(241, 0);
    std::vector<double> dw1(1), dw2(1);
    const double sd = std::sqrt(1e-3 / 2.0);
    std::vector<double> sup(Ms.size(), 0.0);
    for (int step = 0; step < 1000; ++step) {
        dw1[0] = sd * noise.normal();
        dw2[0] = sd * noise.normal();
        for (std::size_t c = 0; c < Ms.size(); ++c) {
            steppers[c].step_path(xs[c], dw1.data(), dw2.data());
            sup[c] = std::max(sup[c], std::sqrt((xs[c] - x_ref).cwiseAbs2().dot(w)));
        }
        ref.step_path(x_ref, dw1.data(), dw2.data());
    }
    CHECK(sup[1] < sup[0]);
}

TEST_CASE("run_trajectory basics") {
    CouplingConfig cfg = single_cosine_coupling(6, 1, 1.0, 0.0, 1.0);
    TrajectorySpec spec;
    spec.cutoff = 6;
    spec.dt = 1e-2;
    spec.t_final = 0.5;
    spec.observe_stride = 5;
    spec.observers = {"energy", "r2", "hs2:0.333333", "phi4", "umode2:1"};
    spec.master_seed = 251;
    spec.stream_index = 0;

    SUBCASE("zero data, zero temperature: all-zero log") {
        const SystemState zero = SystemState::zero(6, 1);
        const ObservationLog log = run_trajectory(zero, cfg, spec);
        CHECK(log.times.size() > 1);
        for (const auto& row : log.rows)
            for (double v : row) CHECK(v == 0.0);
    }
    SUBCASE("bitwise reproducibility") {
        CouplingConfig warm = cfg;
        warm.temperatures = {0.8};
        RngStream init_rng(257, 0);
        const SystemState init = random_state(6, 1, init_rng);
        const ObservationLog a = run_trajectory(init, warm, spec);
        const ObservationLog b = run_trajectory(init, warm, spec);
        CHECK(a.to_csv() == b.to_csv());
        TrajectorySpec other = spec;
        other.stream_index = 1;
        const ObservationLog c = run_trajectory(init, warm, other);
        CHECK(a.to_csv() != c.to_csv());
    }
    SUBCASE("IN observer runs the coupled pair") {
        TrajectorySpec pair_spec = spec;
        pair_spec.observers = {"IN:3", "energy"};
        RngStream init_rng(263, 0);
        const SystemState init = random_state(6, 1, init_rng);
        const ObservationLog log = run_trajectory(init, cfg, pair_spec);
        CHECK(log.columns[0] == "IN:3");
        CHECK(log.rows.front()[0] > 0.0);
    }
    SUBCASE("log files: csv plus metadata sidecar") {
        CouplingConfig warm = cfg;
        warm.temperatures = {0.5};
        RngStream init_rng(269, 0);
        const SystemState init = random_state(6, 1, init_rng);
        const ObservationLog log = run_trajectory(init, warm, spec);
        save_observation_log(log, "out/test_log");
        std::ifstream csv("out/test_log.csv");
        std::string header;
        std::getline(csv, header);
        CHECK(header == "time,energy,r2,hs2:0.333333,phi4,umode2:1");
        std::ifstream meta("out/test_log.meta.json");
        CHECK(meta.good());
    }
}

TEST_CASE("long-run linear equilibrium: time-averaged r^2 matches T") {
    // mu = 0, equal T: average r^2 over t in [10, 210] within 3 batch SEs
    const double T = 1.0;
    CouplingConfig cfg = single_cosine_coupling(8, 1, 1.0, T, 0.0);
    NonlinearStepper stepper(cfg, 8, 0.02);
    RngStream init_rng(269, 0);
    RngStream rng(271, 0);
    Eigen::VectorXd x = pack_state(sample_nu0(T, 8, 1, init_rng));
    const int ir = state_dim(8, 1) - 1;
    std::vector<double> r2;
    const int burn = 500, total = 10500;
    for (int i = 0; i < total; ++i) {
        stepper.step(x, rng);
        if (i >= burn) r2.push_back(x(ir) * x(ir));
    }
    const Summary stat = summarize(r2);
    const double se = batch_means_stderr(r2, 20);
    CHECK(std::abs(stat.mean - T) < 3.0 * se);
}

TEST_CASE("blow-up detection") {
    CouplingConfig cfg = single_cosine_coupling(4, 1, 1.0, 0.0, 50.0);
    SystemState init = SystemState::zero(4, 1);
    init.field.phi_hat = cosine_coeffs(4, 1, 20.0);
    NonlinearStepper stepper(cfg, 4, 0.5);  // far too coarse: guaranteed escape
    RngStream rng(277, 0);
    Eigen::VectorXd x = pack_state(init);
    CHECK_THROWS_AS(
        [&]() {
            for (int i = 0; i < 100; ++i) stepper.step(x, rng);
        }(),
        BlowUpError);

    TrajectorySpec spec;
    spec.cutoff = 4;
    spec.dt = 0.5;
    spec.t_final = 50.0;
    spec.observe_stride = 1;
    spec.observers = {"r2"};
    spec.master_seed = 281;
    const ObservationLog log = run_trajectory(init, cfg, spec);
    CHECK(log.truncated_by_blowup);
    CHECK(log.rows.size() >= 1);
    CHECK(log.blowup_time > 0.0);
}

TEST_CASE("picard solver") {
    const int m = 8, K = 1;
    SUBCASE("affine case converges in one iteration") {
        CouplingConfig cfg = single_cosine_coupling(m, 1, 1.0, 0.5, 0.0);
        const SystemState init = beta_state(m, K, 0.5, 0.5, 283);
        RngStream noise(293, 0);
        const int n_steps = 100;
        Eigen::MatrixXd dW(n_steps, K);
        const double sd = std::sqrt(0.1 / n_steps);
        for (int i = 0; i < n_steps; ++i) dW(i, 0) = sd * noise.normal();
        const PicardResult res = picard_solve(init, cfg, m, 0.1, n_steps, dW, 0.5);
        CHECK(res.converged);
        CHECK(res.iterations == 1);
    }
    SUBCASE("small data: contraction below one half and linear in t_span") {
        CouplingConfig cfg = single_cosine_coupling(m, 1, 1.0, 1e-4, 1.0);
        const SystemState init = beta_state(m, K, 0.1, 0.5, 307);
        RngStream noise(311, 0);
        const int n_fine = 2000;  // dt = 1e-4 over t = 0.2
        Eigen::MatrixXd dW(n_fine, K);
        const double sd = std::sqrt(0.2 / n_fine);
        for (int i = 0; i < n_fine; ++i) dW(i, 0) = sd * noise.normal();

        const PicardResult at1 = picard_solve(init, cfg, m, 0.1, n_fine / 2,
                                              dW.topRows(n_fine / 2), 0.5);
        CHECK(at1.converged);
        CHECK(at1.contraction_factor > 0.0);
        CHECK(at1.contraction_factor < 0.5);

        const PicardResult at2 = picard_solve(init, cfg, m, 0.2, n_fine, dW, 0.5);
        const double growth = at2.contraction_factor / at1.contraction_factor;
        CHECK(growth >= 1.5);
        CHECK(growth <= 2.5);
    }
    SUBCASE("fixed point agrees with the splitting integrator on one path") {
        CouplingConfig cfg = single_cosine_coupling(m, 1, 1.0, 1e-4, 1.0);
        const SystemState init = beta_state(m, K, 0.1, 0.5, 313);
        const double dt = 1e-4, t_span = 0.1;
        const int n_half = static_cast<int>(std::llround(t_span / (dt / 2.0)));
        RngStream noise(317, 0);
        Eigen::MatrixXd dW(n_half, K);
        const double sd = std::sqrt(dt / 2.0);
        for (int i = 0; i < n_half; ++i) dW(i, 0) = sd * noise.normal();

        const PicardResult fp = picard_solve(init, cfg, m, t_span, n_half, dW, 0.5);
        REQUIRE(fp.converged);

        NonlinearStepper stepper(cfg, m, dt);
        Eigen::VectorXd x = pack_state(init);
        for (int i = 0; i < n_half / 2; ++i) {
            double d1 = dW(2 * i, 0), d2 = dW(2 * i + 1, 0);
            stepper.step_path(x, &d1, &d2);
        }
        const Eigen::VectorXd w = hs_weights(m, K, 0.5);
        const double dist = std::sqrt((x - fp.trajectory.back()).cwiseAbs2().dot(w));
        CHECK(dist < 1e-5);
    }
    SUBCASE("non-contraction is reported with the observed ratio") {
        CouplingConfig cfg = single_cosine_coupling(m, 1, 1.0, 0.0, 5.0);
        const SystemState init = beta_state(m, K, 3.0, 0.5, 331);
        const Eigen::MatrixXd no_noise;
        CHECK_THROWS_AS(picard_solve(init, cfg, m, 2.0, 200, no_noise, 0.5),
                        PicardNonContraction);
    }
}

// dynamics.hpp — full nonlinear Galerkin dynamics: Strang-split stepping with
// exact linear-stochastic half steps, the Duhamel/Picard fixed-point solver,
// the energy functional, and the high-low splitting functional on coupled
// trajectory pairs.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gw/coupling.hpp"
#include "gw/linear_system.hpp"

#include "json.hpp"

namespace gw {

// Total energy 1/2 ||u||_{H^1}^2 + 1/2 |r|^2 + (mu/4) \int phi^4, with
// ||u||_{H^1}^2 = ||phi||_{H^1}^2 + ||pi||_{L^2}^2.
double energy(const SystemState& state, double mu);

// Thrown when a trajectory leaves the finite regime.
struct BlowUpError : std::runtime_error {
    double time;
    explicit BlowUpError(double t)
        : std::runtime_error("trajectory blow-up at t = " + std::to_string(t)), time(t) {}
};

// --------------------------------------------------------------------------
// One Strang step of the cutoff-M dynamics on the m_grid representation:
//   (a) exact linear-stochastic half step (coupling alpha projected to <= M),
//   (b) full nonlinear kick pi_hat -= dt * mu * P_{<=M} ( (P_{<=M} phi)^3 )^,
//   (c) exact linear-stochastic half step.
// Deterministic order 2; the kick is exact for its frozen-phi subflow.
// Modes above M rotate freely inside the half steps and are never kicked.
// --------------------------------------------------------------------------
class NonlinearStepper {
public:
    NonlinearStepper(const CouplingConfig& cfg, int cutoff, double dt);

    int m_grid() const { return cfg_.m_grid; }
    int cutoff() const { return cutoff_; }
    double dt() const { return dt_; }
    const CouplingConfig& config() const { return cfg_; }
    const LinearPropagator& half_propagator() const { return half_; }

    // Exact-noise step (half steps draw fresh normals through the factored
    // transition covariance).
    void step(Eigen::VectorXd& x, RngStream& rng);

    // Path-driven step: two raw Brownian increments of variance dt/2 per
    // component enter the half steps at their left endpoints.
    void step_path(Eigen::VectorXd& x, const double* dW_first, const double* dW_second);

    SystemState step(const SystemState& state, RngStream& rng);

    // Nonlinear kick alone (used by the Strang composition and by tests).
    void apply_kick(Eigen::VectorXd& x, double dt_kick);

private:
    void check_finite(const Eigen::VectorXd& x) const;

    CouplingConfig cfg_;       // alphas already projected to the cutoff
    int cutoff_;
    double dt_;
    LinearPropagator half_;
    Eigen::VectorXd scratch_, xi_;
    ModeArray phi_low_, cubic_buf_;
};

// --------------------------------------------------------------------------
// Coupled pair: the nonlinear solution and the mu = 0 solution driven by
// identical noise. Both consume the same Gaussian draws each half step (the
// propagator is shared, so increments match coordinatewise), and they start
// from the same data.
// --------------------------------------------------------------------------
class CoupledPairRunner {
public:
    CoupledPairRunner(const CouplingConfig& cfg, int cutoff, double dt,
                      const SystemState& initial, std::uint64_t master_seed,
                      std::uint64_t stream_index);

    void step();                    // advances both members by dt
    double time() const { return time_; }
    const Eigen::VectorXd& nonlinear() const { return x_nonlinear_; }
    const Eigen::VectorXd& linear() const { return x_linear_; }
    SystemState nonlinear_state() const;
    SystemState linear_state() const;
    const NonlinearStepper& stepper() const { return stepper_; }

private:
    NonlinearStepper stepper_;
    Eigen::VectorXd x_nonlinear_, x_linear_;
    Eigen::VectorXd scratch_, xi_;
    double time_ = 0.0;
    RngStream rng_;
};

// Splitting functional I_N = E(u - P_{>N} u0, r - r0) evaluated on a pair of
// states at equal times.
double bourgain_functional(const SystemState& nonlinear, const SystemState& linear,
                           int split_mode, double mu);

// Drift of I_N predicted by the pathwise differential (no noise terms):
//   Im< B u_tilde, mu (Re u)^3 - mu (Re u_tilde)^3 + r0 . P_{<=N} alpha >
//   - |r_tilde|^2 + sum_j r_tilde_j Im< B u0, P_{<=N} alpha_j >.
double bourgain_drift_rhs(const SystemState& nonlinear, const SystemState& linear,
                          int split_mode, double mu, const CouplingConfig& cfg);

struct DriftCheck {
    double max_residual = 0.0;         // max |centered FD - rhs|
    std::vector<double> residuals;     // one per interior sample
    double quadratic_variation = 0.0;  // sum of squared I_N increments
};

// Runs a coupled pair to t_final with the given dt and compares the centered
// finite difference of I_N against the formula at every interior step.
DriftCheck verify_bourgain_drift(const CouplingConfig& cfg, int cutoff, double dt,
                                 double t_final, int split_mode,
                                 const SystemState& initial,
                                 std::uint64_t master_seed, std::uint64_t stream_index);

// --------------------------------------------------------------------------
// Observation logging
// --------------------------------------------------------------------------
struct ObservationLog {
    std::vector<std::string> columns;       // observable names, fixed order
    std::vector<double> times;
    std::vector<std::vector<double>> rows;  // rows[i][j] = column j at times[i]
    nlohmann::json metadata;
    bool truncated_by_blowup = false;
    double blowup_time = 0.0;

    std::string to_csv() const;  // "time,<columns...>" header then rows
};

// Writes <prefix>.csv and <prefix>.meta.json.
void save_observation_log(const ObservationLog& log, const std::string& prefix);

// Named observables over packed coordinates. Supported names:
//   energy | hs2:<s> | r2 | r:<j> | phi4 | umode2:<k> | IN:<N> (pair runs)
class ObserverSet {
public:
    ObserverSet(std::vector<std::string> names, const CouplingConfig& cfg, int cutoff);
    const std::vector<std::string>& names() const { return names_; }
    // linear may be null when no IN observers are configured.
    std::vector<double> evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd* linear,
                                 double time) const;
    bool needs_pair() const { return needs_pair_; }

private:
    std::vector<std::string> names_;
    CouplingConfig cfg_;
    int cutoff_;
    bool needs_pair_ = false;
};

struct TrajectorySpec {
    int cutoff = 0;
    double dt = 1e-3;
    double t_final = 1.0;
    int observe_stride = 10;
    std::vector<std::string> observers;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

ObservationLog run_trajectory(const SystemState& initial, const CouplingConfig& cfg,
                              const TrajectorySpec& spec);

// --------------------------------------------------------------------------
// Picard iteration of the Duhamel map on a uniform time grid with exact
// matrix-exponential factors and left-endpoint (Ito) quadrature.
// --------------------------------------------------------------------------
struct PicardNonContraction : std::runtime_error {
    double observed_ratio;
    explicit PicardNonContraction(double ratio)
        : std::runtime_error(
              "picard_solve: iteration is not contracting (ratio " +
              std::to_string(ratio) + " >= 1 three times in a row); t_span too "
              "large for the data size"),
          observed_ratio(ratio) {}
};

struct PicardResult {
    std::vector<Eigen::VectorXd> trajectory;  // iterate at each grid point
    std::vector<double> ratios;               // per-iteration distance ratios
    // Lipschitz estimate of the Duhamel map at the solution along a generic
    // trajectory perturbation; the contraction number of the fixed-point map
    // (0 for the affine mu = 0 problem).
    double contraction_factor = 0.0;
    int iterations = 0;
    bool converged = false;
};

// noise_increments: n_steps x K raw Brownian increments (variance dt each);
// pass an empty matrix for the deterministic problem.
PicardResult picard_solve(const SystemState& initial, const CouplingConfig& cfg,
                          int cutoff, double t_span, int n_steps,
                          const Eigen::MatrixXd& noise_increments, double s_norm,
                          double tolerance = 1e-10, int max_iterations = 50);

} // namespace gw

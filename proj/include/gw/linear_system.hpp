// linear_system.hpp — the truncated linear generator, its exact deterministic
// and stochastic propagation, and semigroup diagnostics.
//
// Real coordinates: a state on m_grid with K reservoirs is packed into a
// vector of dimension D = 2*(2*m_grid+1) + K laid out as
//   [ phi_hat(0), {Re phi_hat(k), Im phi_hat(k)}_{k=1..m},
//     pi_hat(0),  {Re pi_hat(k),  Im pi_hat(k)}_{k=1..m},  r_1..r_K ].
// Hermitian symmetry makes these 2*(2m+1) reals a complete chart of the
// field pair. In this chart both the H^s norms and the generator are simple:
//   ||(u,r)||_{H^s}^2 = sum_i w_i x_i^2     (hs_weights below)
//   d phi = pi,  d pi_k = -(1+k^2) phi_k - sum_j r_j alpha_jk,
//   d r_j = <alpha_j, pi> - r_j  (+ sqrt(2 T_j) dW_j).

#pragma once

#include <Eigen/Dense>

#include <vector>

#include "gw/coupling.hpp"
#include "gw/fourier_field.hpp"
#include "gw/rng.hpp"

namespace gw {

int state_dim(int m_grid, int n_reservoirs);

Eigen::VectorXd pack_state(const SystemState& state);
SystemState unpack_state(const Eigen::VectorXd& x, int m_grid, int n_reservoirs,
                         double time = 0.0);

// Diagonal weights of the squared H^s norm in packed coordinates.
Eigen::VectorXd hs_weights(int m_grid, int n_reservoirs, double s);

// Dense real-coordinate generator L0 = B0 + P for the coupled linear system.
Eigen::MatrixXd assemble_generator(const CouplingConfig& cfg);

// Time derivative evaluated through the complex (phi, pi, r) equations;
// independent route used to cross-check assemble_generator.
SystemState apply_generator_complex(const CouplingConfig& cfg, const SystemState& state);

// Same through the u = phi + i B^{-1} pi form: du = -iBu - i B^{-1} alpha r,
// dr_j = <B alpha_j, Im u> - r_j.
SystemState apply_generator_u_form(const CouplingConfig& cfg, const SystemState& state);

// Largest |two routes - matrix route| over n random states; should be ~1e-12.
double verify_generator_forms(const CouplingConfig& cfg, int n_states, RngStream& rng);

// --------------------------------------------------------------------------
// Exact one-step Gaussian transition of the linear system.
//
// mean_map = exp(dt L0). noise_factor G satisfies
//   G G^T = \int_0^dt exp(s L0) V exp(s L0^T) ds,  V = v diag(2 T_j) v^T,
// built by the Van Loan block-exponential and factored by symmetric
// eigendecomposition with eigenvalues clipped at zero, so G has one column
// per numerically nonzero covariance direction (rank R, R >= K in general:
// the reservoir noise mixes into field coordinates over a finite step).
//
// Stepping exploits structure: modes not present in any alpha_j evolve by
// exact 2x2 rotations and stay outside the dense coupled block. apply_* and
// the dense mean_map agree to rounding (asserted in tests).
// --------------------------------------------------------------------------
struct LinearPropagator {
    double dt = 0.0;
    int m_grid = 0;
    int n_reservoirs = 0;
    Eigen::MatrixXd mean_map;      // D x D
    Eigen::MatrixXd noise_factor;  // D x R
    Eigen::VectorXd noise_amp;     // sqrt(2 T_j), used by the path-driven step

    // structured fast path
    std::vector<int> coupled;        // packed indices of the dense block
    Eigen::MatrixXd block_mean;      // c x c
    Eigen::MatrixXd block_noise;     // c x R
    struct Rotation {
        int idx_phi;   // packed index of the phi coordinate
        int idx_pi;    // matching pi coordinate
        double cos_wt, sin_wt_over_w, w_sin_wt;
    };
    std::vector<Rotation> rotations;

    int noise_rank() const { return static_cast<int>(noise_factor.cols()); }

    // x <- mean_map * x without forming the dense product.
    void apply_mean(Eigen::VectorXd& x, Eigen::VectorXd& scratch) const;

    // x <- mean_map * x + noise_factor * xi, xi fresh standard normals.
    void apply_step(Eigen::VectorXd& x, RngStream& rng, Eigen::VectorXd& scratch,
                    Eigen::VectorXd& xi) const;

    // Path-driven variant: the raw Brownian increment dW (length K, variance
    // dt per component) enters at the left endpoint,
    // x <- mean_map * (x + sqrt(2T) dW). Used where trajectories at different
    // cutoffs must share one driving path; strong order suffers, the
    // deterministic part stays exact.
    void apply_step_path(Eigen::VectorXd& x, const double* dW,
                         Eigen::VectorXd& scratch) const;
};

// Noise injection amplitudes: v_col(j) has sqrt(2 T_j) at the r_j coordinate.
Eigen::MatrixXd noise_injection(const CouplingConfig& cfg);

LinearPropagator build_propagator(const CouplingConfig& cfg, double dt);

// Spec-shaped overload; L0 must equal assemble_generator(cfg).
LinearPropagator build_propagator(const Eigen::MatrixXd& L0, const CouplingConfig& cfg,
                                  double dt);

// Exact transition covariance by the Van Loan construction (for tests).
Eigen::MatrixXd transition_covariance(const Eigen::MatrixXd& L, const Eigen::MatrixXd& V,
                                      double dt);

SystemState step_linear(const SystemState& state, const LinearPropagator& prop,
                        RngStream& rng);

// --------------------------------------------------------------------------
// Semigroup growth diagnostic: sup over a geometric time grid and random
// unit-H^s states of ||exp(t L0) x||_{H^s}.
// --------------------------------------------------------------------------
struct SemigroupCurve {
    std::vector<double> times;                       // increasing
    std::vector<std::vector<double>> max_ratio;      // [s index][time index]
    std::vector<double> s_values;

    // sup of max_ratio over times <= t_cap.
    double sup_up_to(std::size_t s_index, double t_cap) const;
};

SemigroupCurve check_semigroup_bound(const CouplingConfig& cfg,
                                     const std::vector<double>& s_values,
                                     double t_max, int n_time_points,
                                     int n_samples, RngStream& rng);

} // namespace gw

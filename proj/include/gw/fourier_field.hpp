// fourier_field.hpp — spectral representation of real periodic field pairs on
// [0, 2pi] and the primitive operations everything else builds on.
//
// Conventions (fixed project-wide):
//   * coefficients are stored for k = -m .. m at index k + m (full Hermitian
//     array, no packed half-spectrum),
//   * the transform is unitary: f_hat(k) = (2pi)^{-1/2} \int f(x) e^{-ikx} dx,
//     so Parseval reads ||f||_L2^2 = sum_k |f_hat(k)|^2 with no 2pi factor,
//   * a real field satisfies f_hat(-k) = conj(f_hat(k)) and Im f_hat(0) = 0.

#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gw/dft.hpp"

namespace gw {

using ModeArray = std::vector<Complex>;

inline int mode_count(int m_grid) { return 2 * m_grid + 1; }

// m such that arr covers k = -m..m.
inline int grid_of(const ModeArray& arr) {
    if (arr.empty() || arr.size() % 2 == 0)
        throw std::invalid_argument("ModeArray must have odd size 2m+1");
    return static_cast<int>(arr.size() / 2);
}

inline Complex& mode(ModeArray& arr, int k) { return arr[static_cast<std::size_t>(k + grid_of(arr))]; }
inline const Complex& mode(const ModeArray& arr, int k) { return arr[static_cast<std::size_t>(k + grid_of(arr))]; }

// --------------------------------------------------------------------------
// Field pair (phi, pi). The complex combination u = phi + i B^{-1} pi is
// derived on demand; it is never stored.
// --------------------------------------------------------------------------
struct FourierField {
    ModeArray phi_hat;
    ModeArray pi_hat;
    int m_grid = 0;

    static FourierField zero(int m_grid) {
        FourierField f;
        f.m_grid = m_grid;
        f.phi_hat.assign(static_cast<std::size_t>(mode_count(m_grid)), Complex(0.0, 0.0));
        f.pi_hat = f.phi_hat;
        return f;
    }
};

// Full system state: field pair plus reservoir coordinates.
struct SystemState {
    FourierField field;
    std::vector<double> r;
    double time = 0.0;

    static SystemState zero(int m_grid, int n_reservoirs) {
        SystemState s;
        s.field = FourierField::zero(m_grid);
        s.r.assign(static_cast<std::size_t>(n_reservoirs), 0.0);
        return s;
    }
};

// Index of Sobolev regularity; thin wrapper so call sites read clearly.
struct SobolevIndex {
    double s = 0.0;
    SobolevIndex() = default;
    explicit SobolevIndex(double value) : s(value) {}
};

// --------------------------------------------------------------------------
// Hermitian-symmetry validation
// --------------------------------------------------------------------------
bool is_hermitian(const ModeArray& f, double tol = 1e-12);
void validate_hermitian(const ModeArray& f, const char* what, double tol = 1e-12);
void validate_hermitian(const FourierField& f, const char* what, double tol = 1e-12);

#ifndef NDEBUG
#define GW_DEBUG_CHECK_HERMITIAN(f, what) ::gw::validate_hermitian((f), (what))
#else
#define GW_DEBUG_CHECK_HERMITIAN(f, what) ((void)0)
#endif

// --------------------------------------------------------------------------
// Transforms. Synthesis/analysis are exact for trig polynomials whenever the
// grid resolves them (n >= 2m+1).
// --------------------------------------------------------------------------

// Values of (2pi)^{-1/2} sum_k f_hat(k) e^{ikx_j} on x_j = 2pi j/n.
std::vector<Complex> to_physical_complex(const ModeArray& f, int n_points);
std::vector<double> to_physical_real(const ModeArray& f, int n_points);

// Inverse of to_physical_real for trig polynomials of degree <= m_out.
ModeArray from_physical_real(const std::vector<double>& values, int m_out);

// --------------------------------------------------------------------------
// Operator primitives
// --------------------------------------------------------------------------

// Multiply coefficients by the dispersion symbol (1+k^2)^{1/2} (the positive
// square root of 1 - d^2/dx^2), or by its inverse.
ModeArray apply_dispersion(const ModeArray& f);
ModeArray apply_inverse_dispersion(const ModeArray& f);

// Zero modes |k| > cutoff (low) or |k| <= cutoff (high). 0 <= cutoff <= m.
ModeArray project_low(const ModeArray& f, int cutoff);
ModeArray project_high(const ModeArray& f, int cutoff);
SystemState project_low(const SystemState& state, int cutoff);   // r passes through
SystemState project_high(const SystemState& state, int cutoff);  // r zeroed

// Derived complex field u_hat(k) = phi_hat(k) + i (1+k^2)^{-1/2} pi_hat(k).
ModeArray complex_field(const FourierField& f);

// --------------------------------------------------------------------------
// Norms and inner products
// --------------------------------------------------------------------------

// ( sum_k (1+k^2)^s |f_hat(k)|^2 )^{1/2} for one coefficient array.
double component_sobolev_norm(const ModeArray& f, double s);

// || (u, r) ||_{H^s} = ( |r|^2 + sum_k (1+k^2)^s |u_hat(k)|^2 )^{1/2} with
// u_hat formed from phi_hat, pi_hat as above. This is evaluated through the
// u_hat definition directly; the per-mode split |u_hat|^2 = |phi_hat|^2 +
// (1+k^2)^{-1}|pi_hat|^2 is false pointwise and is not used.
double sobolev_norm(const SystemState& state, double s);

// L^p([0,2pi]) norm by synthesis on an oversampled grid; p in {2,4,6} or
// p = 0 meaning infinity. Quadrature is exact for p in {2,4} with the
// default oversampling; p = 6 and infinity are grid approximations.
double lp_norm(const ModeArray& f, int p, int oversample = 2);
constexpr int kLpInfinity = 0;

// Real L^2 pairing sum_k conj(a_k) b_k = \int a b dx for Hermitian inputs;
// throws if the imaginary part survives above rounding (non-real inputs).
double real_inner_product(const ModeArray& a, const ModeArray& b);

// --------------------------------------------------------------------------
// Nonlinearity
// --------------------------------------------------------------------------

// Coefficients of f^3 truncated to |k| <= m, alias-free: synthesis on a
// padded grid of >= 4m+1 points (the 3/2-rule extended to cubic powers),
// pointwise cube, analysis, truncate. min_points can force a larger pad for
// certification runs; the result is padding-independent up to rounding.
ModeArray cubic(const ModeArray& f, int min_points = 0);

// Exact product of three fields, output on 3m modes (no truncation).
ModeArray triple_product(const ModeArray& a, const ModeArray& b, const ModeArray& c);

// Coefficient array of amplitude * cos(kx) (k = 0 gives the constant).
ModeArray cosine_coeffs(int m_grid, int k, double amplitude);

} // namespace gw

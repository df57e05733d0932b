#include "gw/fourier_field.hpp"

#include <algorithm>
#include <cmath>

namespace gw {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
const double kSqrtTwoPi = std::sqrt(kTwoPi);

// Scatter coefficients k=-m..m into DFT bin layout of size n (bin k mod n).
void pack_spectrum(const ModeArray& f, std::vector<Complex>& bins, int n) {
    const int m = grid_of(f);
    bins.assign(static_cast<std::size_t>(n), Complex(0.0, 0.0));
    for (int k = -m; k <= m; ++k) {
        const int b = ((k % n) + n) % n;
        bins[static_cast<std::size_t>(b)] += mode(f, k);
    }
}

} // namespace

bool is_hermitian(const ModeArray& f, double tol) {
    const int m = grid_of(f);
    double scale = 0.0;
    for (const Complex& c : f) scale = std::max(scale, std::abs(c));
    const double bound = tol * std::max(1.0, scale);
    if (std::abs(mode(f, 0).imag()) > bound) return false;
    for (int k = 1; k <= m; ++k) {
        if (std::abs(mode(f, -k) - std::conj(mode(f, k))) > bound) return false;
    }
    return true;
}

void validate_hermitian(const ModeArray& f, const char* what, double tol) {
    if (!is_hermitian(f, tol)) {
        throw std::invalid_argument(std::string(what) + ": coefficients are not Hermitian-symmetric");
    }
}

void validate_hermitian(const FourierField& f, const char* what, double tol) {
    validate_hermitian(f.phi_hat, what, tol);
    validate_hermitian(f.pi_hat, what, tol);
}

std::vector<Complex> to_physical_complex(const ModeArray& f, int n_points) {
    const int m = grid_of(f);
    if (n_points < mode_count(m))
        throw std::invalid_argument("to_physical: grid too coarse for the spectrum");
    std::vector<Complex> bins;
    pack_spectrum(f, bins, n_points);
    std::vector<Complex> out(static_cast<std::size_t>(n_points));
    dft(bins.data(), out.data(), n_points, +1);
    const double scale = 1.0 / kSqrtTwoPi;
    for (Complex& v : out) v *= scale;
    return out;
}

std::vector<double> to_physical_real(const ModeArray& f, int n_points) {
    std::vector<Complex> cv = to_physical_complex(f, n_points);
    std::vector<double> out(cv.size());
    for (std::size_t i = 0; i < cv.size(); ++i) out[i] = cv[i].real();
    return out;
}

ModeArray from_physical_real(const std::vector<double>& values, int m_out) {
    const int n = static_cast<int>(values.size());
    if (n < mode_count(m_out))
        throw std::invalid_argument("from_physical: grid too coarse for requested modes");
    std::vector<Complex> in(values.begin(), values.end());
    std::vector<Complex> bins(in.size());
    dft(in.data(), bins.data(), n, -1);
    ModeArray f(static_cast<std::size_t>(mode_count(m_out)));
    const double scale = kSqrtTwoPi / n;
    for (int k = -m_out; k <= m_out; ++k) {
        const int b = ((k % n) + n) % n;
        mode(f, k) = bins[static_cast<std::size_t>(b)] * scale;
    }
    return f;
}

ModeArray apply_dispersion(const ModeArray& f) {
    GW_DEBUG_CHECK_HERMITIAN(f, "apply_dispersion");
    const int m = grid_of(f);
    ModeArray out(f.size());
    for (int k = -m; k <= m; ++k)
        mode(out, k) = mode(f, k) * std::sqrt(1.0 + double(k) * k);
    return out;
}

ModeArray apply_inverse_dispersion(const ModeArray& f) {
    const int m = grid_of(f);
    ModeArray out(f.size());
    for (int k = -m; k <= m; ++k)
        mode(out, k) = mode(f, k) / std::sqrt(1.0 + double(k) * k);
    return out;
}

ModeArray project_low(const ModeArray& f, int cutoff) {
    const int m = grid_of(f);
    if (cutoff < 0 || cutoff > m)
        throw std::invalid_argument("project_low: cutoff outside [0, m_grid]");
    ModeArray out(f.size(), Complex(0.0, 0.0));
    for (int k = -cutoff; k <= cutoff; ++k) mode(out, k) = mode(f, k);
    return out;
}

ModeArray project_high(const ModeArray& f, int cutoff) {
    const int m = grid_of(f);
    if (cutoff < 0 || cutoff > m)
        throw std::invalid_argument("project_high: cutoff outside [0, m_grid]");
    ModeArray out = f;
    for (int k = -cutoff; k <= cutoff; ++k) mode(out, k) = Complex(0.0, 0.0);
    return out;
}

SystemState project_low(const SystemState& state, int cutoff) {
    SystemState out = state;
    out.field.phi_hat = project_low(state.field.phi_hat, cutoff);
    out.field.pi_hat = project_low(state.field.pi_hat, cutoff);
    return out;
}

SystemState project_high(const SystemState& state, int cutoff) {
    SystemState out = state;
    out.field.phi_hat = project_high(state.field.phi_hat, cutoff);
    out.field.pi_hat = project_high(state.field.pi_hat, cutoff);
    std::fill(out.r.begin(), out.r.end(), 0.0);
    return out;
}

ModeArray complex_field(const FourierField& f) {
    const int m = f.m_grid;
    ModeArray u(static_cast<std::size_t>(mode_count(m)));
    for (int k = -m; k <= m; ++k) {
        const double c = 1.0 / std::sqrt(1.0 + double(k) * k);
        mode(u, k) = mode(f.phi_hat, k) + Complex(0.0, c) * mode(f.pi_hat, k);
    }
    return u;
}

double component_sobolev_norm(const ModeArray& f, double s) {
    const int m = grid_of(f);
    double acc = 0.0;
    for (int k = -m; k <= m; ++k)
        acc += std::pow(1.0 + double(k) * k, s) * std::norm(mode(f, k));
    return std::sqrt(acc);
}

double sobolev_norm(const SystemState& state, double s) {
    const int m = state.field.m_grid;
    double acc = 0.0;
    for (double rj : state.r) acc += rj * rj;
    for (int k = -m; k <= m; ++k) {
        const double w = 1.0 + double(k) * k;
        const Complex u = mode(state.field.phi_hat, k) +
                          Complex(0.0, 1.0 / std::sqrt(w)) * mode(state.field.pi_hat, k);
        acc += std::pow(w, s) * std::norm(u);
    }
    return std::sqrt(acc);
}

double lp_norm(const ModeArray& f, int p, int oversample) {
    const int m = grid_of(f);
    if (p != 2 && p != 4 && p != 6 && p != kLpInfinity)
        throw std::invalid_argument("lp_norm: supported p are 2, 4, 6 and infinity");
    if (oversample < 1) throw std::invalid_argument("lp_norm: oversample must be >= 1");
    int n = fast_size(std::max(oversample, p == kLpInfinity ? 16 : oversample) * mode_count(m));
    std::vector<double> v = to_physical_real(f, n);
    if (p == kLpInfinity) {
        double mx = 0.0;
        for (double x : v) mx = std::max(mx, std::abs(x));
        return mx;
    }
    double acc = 0.0;
    for (double x : v) {
        double t = x * x;
        if (p >= 4) t *= x * x;
        if (p == 6) t *= x * x;
        acc += t;
    }
    acc *= kTwoPi / n;
    return std::pow(acc, 1.0 / p);
}

double real_inner_product(const ModeArray& a, const ModeArray& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("real_inner_product: grid mismatch");
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    const double scale = std::max(1.0, std::abs(acc.real()));
    if (std::abs(acc.imag()) > 1e-12 * scale)
        throw std::runtime_error("real_inner_product: pairing has a non-real part; inputs not Hermitian");
    return acc.real();
}

ModeArray cubic(const ModeArray& f, int min_points) {
    GW_DEBUG_CHECK_HERMITIAN(f, "cubic");
    const int m = grid_of(f);
    const int n = fast_size(std::max(4 * m + 1, min_points));
    std::vector<double> values = to_physical_real(f, n);
    std::vector<double> cubed(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = values[i];
        cubed[i] = x * x * x;
    }
    ModeArray out = from_physical_real(cubed, m);
    GW_DEBUG_CHECK_HERMITIAN(out, "cubic output");
    return out;
}

ModeArray triple_product(const ModeArray& a, const ModeArray& b, const ModeArray& c) {
    const int m = std::max({grid_of(a), grid_of(b), grid_of(c)});
    const int m_out = 3 * m;
    const int n = fast_size(2 * m_out + 1);
    std::vector<double> va = to_physical_real(a, n);
    std::vector<double> vb = to_physical_real(b, n);
    std::vector<double> vc = to_physical_real(c, n);
    std::vector<double> prod(va.size());
    for (std::size_t i = 0; i < va.size(); ++i)
        prod[i] = va[i] * vb[i] * vc[i];
    return from_physical_real(prod, m_out);
}

ModeArray cosine_coeffs(int m_grid, int k, double amplitude) {
    if (k < 0 || k > m_grid)
        throw std::invalid_argument("cosine_coeffs: wavenumber outside grid");
    ModeArray f(static_cast<std::size_t>(mode_count(m_grid)), Complex(0.0, 0.0));
    if (k == 0) {
        mode(f, 0) = Complex(amplitude * kSqrtTwoPi, 0.0);
    } else {
        const double half = amplitude * kSqrtTwoPi / 2.0;
        mode(f, k) = Complex(half, 0.0);
        mode(f, -k) = Complex(half, 0.0);
    }
    return f;
}

} // namespace gw

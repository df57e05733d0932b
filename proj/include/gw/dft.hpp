// dft.hpp — thin FFTW wrapper: complex transforms of arbitrary (small) size
// with per-thread plan caching. FFTW's planner is not thread-safe, so plan
// creation is serialized behind a mutex; execution runs on thread-local
// buffers and needs no locks.

#pragma once

#include <complex>
#include <vector>

namespace gw {

using Complex = std::complex<double>;

// Unnormalized DFT: out[j] = sum_k in[k] * exp(sign * 2*pi*i*j*k/n),
// sign = -1 for analysis, +1 for synthesis (matches FFTW's convention).
void dft(const Complex* in, Complex* out, int n, int sign);

// Smallest 5-smooth (2^a 3^b 5^c) integer >= n; cheap sizes for FFTW.
int fast_size(int n);

} // namespace gw

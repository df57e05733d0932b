#include "gw/dft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace gw {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanEntry {
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
    int n = 0;

    PlanEntry(int size, int sign) : n(size) {
        in = fftw_alloc_complex(static_cast<std::size_t>(size));
        out = fftw_alloc_complex(static_cast<std::size_t>(size));
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_1d(size, in, out, sign, FFTW_ESTIMATE);
        if (!plan) throw std::runtime_error("dft: FFTW plan creation failed");
    }

    PlanEntry(const PlanEntry&) = delete;
    PlanEntry& operator=(const PlanEntry&) = delete;

    ~PlanEntry() {
        if (plan) {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fftw_destroy_plan(plan);
        }
        fftw_free(in);
        fftw_free(out);
    }
};

// key: (n, sign)
using PlanCache = std::map<std::pair<int, int>, std::unique_ptr<PlanEntry>>;

PlanEntry& cached_plan(int n, int sign) {
    thread_local PlanCache cache;
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it == cache.end()) {
        it = cache.emplace(key, std::make_unique<PlanEntry>(n, sign)).first;
    }
    return *it->second;
}

} // namespace

void dft(const Complex* in, Complex* out, int n, int sign) {
    if (n <= 0) throw std::invalid_argument("dft: size must be positive");
    if (sign != 1 && sign != -1) throw std::invalid_argument("dft: sign must be +-1");
    PlanEntry& e = cached_plan(n, sign == -1 ? FFTW_FORWARD : FFTW_BACKWARD);
    for (int i = 0; i < n; ++i) {
        e.in[i][0] = in[i].real();
        e.in[i][1] = in[i].imag();
    }
    fftw_execute(e.plan);
    for (int i = 0; i < n; ++i) out[i] = Complex(e.out[i][0], e.out[i][1]);
}

int fast_size(int n) {
    if (n <= 1) return 1;
    for (int candidate = n;; ++candidate) {
        int rem = candidate;
        while (rem % 2 == 0) rem /= 2;
        while (rem % 3 == 0) rem /= 3;
        while (rem % 5 == 0) rem /= 5;
        if (rem == 1) return candidate;
    }
}

} // namespace gw

// rng.hpp — counter-based random streams for reproducible parallel ensembles.
//
// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3",
// SC'11). A stream is addressed by (key = master seed, stream id); the stream
// id occupies the upper 64 bits of the 128-bit counter, so distinct streams
// enumerate disjoint counter blocks under one key and are statistically
// independent by construction. Draw sequences are bitwise reproducible on any
// platform with IEEE doubles.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace gw {

namespace detail {

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b,
                           std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// One 10-round Philox4x32 block: counter -> 4x32 bits of output.
inline void philox4x32_block(const std::uint32_t ctr_in[4],
                             const std::uint32_t key_in[2],
                             std::uint32_t out[4]) {
    std::uint32_t c0 = ctr_in[0], c1 = ctr_in[1], c2 = ctr_in[2], c3 = ctr_in[3];
    std::uint32_t k0 = key_in[0], k1 = key_in[1];
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        philox_mulhilo(0xD2511F53u, c0, hi0, lo0);
        philox_mulhilo(0xCD9E8D57u, c2, hi1, lo1);
        const std::uint32_t n0 = hi1 ^ c1 ^ k0;
        const std::uint32_t n1 = lo1;
        const std::uint32_t n2 = hi0 ^ c3 ^ k1;
        const std::uint32_t n3 = lo0;
        c0 = n0; c1 = n1; c2 = n2; c3 = n3;
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
}

} // namespace detail

class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(master_seed),
               static_cast<std::uint32_t>(master_seed >> 32)},
          stream_id_(stream_id) {}

    std::uint64_t stream_id() const { return stream_id_; }

    std::uint32_t next_u32() {
        if (buf_pos_ == 4) refill();
        return buf_[buf_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; one spare value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();   // (0, 1]
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

    void fill_normal(double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = normal();
    }

    std::vector<double> normal_vector(std::size_t n) {
        std::vector<double> v(n);
        fill_normal(v.data(), n);
        return v;
    }

private:
    void refill() {
        const std::uint32_t ctr[4] = {
            static_cast<std::uint32_t>(draw_counter_),
            static_cast<std::uint32_t>(draw_counter_ >> 32),
            static_cast<std::uint32_t>(stream_id_),
            static_cast<std::uint32_t>(stream_id_ >> 32)};
        detail::philox4x32_block(ctr, key_, buf_);
        ++draw_counter_;
        buf_pos_ = 0;
    }

    std::uint32_t key_[2];
    std::uint64_t stream_id_ = 0;
    std::uint64_t draw_counter_ = 0;
    std::uint32_t buf_[4] = {0, 0, 0, 0};
    int buf_pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stream-id convention used across the code base: the top 16 bits name the
// purpose domain, the rest index within it. Keeps e.g. sampler chains and
// trajectory noise on provably disjoint streams of one master seed.
enum class RngDomain : std::uint16_t {
    sampler = 1,
    trajectory = 2,
    richardson = 3,
    generator_probe = 4,
    picard_noise = 5,
    misc = 15,
};

inline RngStream make_stream(std::uint64_t master_seed, RngDomain domain,
                             std::uint64_t index) {
    const std::uint64_t sid =
        (static_cast<std::uint64_t>(domain) << 48) | (index & 0xFFFFFFFFFFFFull);
    return RngStream(master_seed, sid);
}

} // namespace gw

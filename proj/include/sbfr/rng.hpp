// rng.hpp — counter-based random streams (Philox4x32-10).
//
// Every stream is addressed by (master_seed, domain, index). Streams with
// distinct addresses are statistically independent and can be consumed in any
// order or in parallel without affecting each other, which is what makes
// cloud generation reproducible regardless of scheduling.
#pragma once

#include <array>
#include <cstdint>

#include "sbfr/geometry.hpp"

namespace sbfr {

// Purpose tags baked into the stream key so that unrelated consumers of the
// same master seed never share a stream.
enum class StreamDomain : std::uint64_t {
    forward_path = 0x01,
    reverse_path = 0x02,
    start_sample_forward = 0x03,
    start_sample_reverse = 0x04,
    fdd_forward = 0x05,
    fdd_reverse = 0x06,
    fdd_draw_start = 0x07,
    fdd_draw_end = 0x08,
    fdd_aux = 0x09,
    residual_forward = 0x0a,
    residual_reverse = 0x0b,
    h_transform = 0x0c,
    potential_sampler = 0x0d,
    oracle_init = 0x0e,
    generic = 0x0f,
};

std::uint64_t splitmix64(std::uint64_t x);

// One Philox4x32-10 block: 128-bit counter, 64-bit key -> 128 random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

class RandomStream {
  public:
    RandomStream(std::uint64_t master_seed, StreamDomain domain, std::uint64_t index);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1).
    double uniform01();
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }
    Vec uniform_in(const Box& box);

    // Standard normal via Box-Muller (second variate cached).
    double normal();
    Vec normal_vec(int d);

  private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::uint64_t stream_index_ = 0;  // counter words 2..3
    std::uint64_t position_ = 0;      // counter words 0..1, incremented per block
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;  // unread words left in buffer_
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace sbfr

#pragma once

// Reproducible per-path random streams: xoshiro256** seeded through SplitMix64
// from (seed, stream_id), Gaussian variates by Box-Muller.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "szcbf/errors.hpp"

namespace szcbf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

class Xoshiro256 {
 public:
  explicit Xoshiro256(RngStream stream) {
    std::uint64_t sm = stream.seed;
    // Fold the stream id through its own SplitMix pass so that neighbouring
    // (seed, id) pairs land on unrelated states.
    std::uint64_t id_state = stream.stream_id ^ 0xD1B54A32D192ED03ULL;
    sm ^= splitmix64(id_state);
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

/// Standard normal variates; each Box-Muller pair is consumed in order.
class NormalSource {
 public:
  explicit NormalSource(RngStream stream) : gen_(stream) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - gen_.uniform();  // (0, 1]
    const double u2 = gen_.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double uniform() { return gen_.uniform(); }

 private:
  Xoshiro256 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// n_steps i.i.d. N(0, dt) Wiener increments for one stream.
inline std::vector<double> normal_increments(RngStream stream, std::size_t n_steps, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("normal_increments: dt must be positive");
  NormalSource src(stream);
  const double sd = std::sqrt(dt);
  std::vector<double> out(n_steps);
  for (auto& w : out) w = sd * src.next();
  return out;
}

}  // namespace szcbf

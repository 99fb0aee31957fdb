#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace becopt {

// Deterministic, platform-independent random stream. All randomness in a run
// derives from one config seed through named sub-streams, so components can
// be reseeded and replayed independently of each other.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state ? state : 0x9e3779b97f4a7c15ULL) {}

  // Derives a stream from (seed, name, counter). Same triple, same sequence.
  static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t counter = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    std::uint64_t s = seed;
    s = splitmix(s + h);
    s = splitmix(s + counter * 0x9e3779b97f4a7c15ULL);
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ = splitmix_advance(state_);
    return splitmix_output(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; no cached spare so the draw count per
  // sample is fixed.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Fisher-Yates index helper: uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

 private:
  static std::uint64_t splitmix(std::uint64_t x) { return splitmix_output(splitmix_advance(x)); }
  static std::uint64_t splitmix_advance(std::uint64_t x) { return x + 0x9e3779b97f4a7c15ULL; }
  static std::uint64_t splitmix_output(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace becopt

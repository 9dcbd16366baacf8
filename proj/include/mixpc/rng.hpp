#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mixpc {

/// SplitMix64 step (Steele/Lea/Flood). Used to derive independent child
/// seeds from one master seed; also the seed scrambler for Rng itself.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Child seed for a named purpose stream. Streams for distinct tags are
/// independent for all practical purposes.
inline uint64_t derive_seed(uint64_t master, uint64_t stream_tag) {
  uint64_t s = master ^ (0x6a09e667f3bcc909ull * (stream_tag + 1));
  uint64_t a = splitmix64(s);
  uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

/// Deterministic random stream: MT19937-64 (engine output is fully specified
/// by the C++ standard) with explicit 53-bit uniforms and a Box-Muller
/// normal transform, so draws do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n) by rejection on the top bits.
  int uniform_int(int n) {
    uint64_t bound = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return static_cast<int>(v % bound);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mixpc

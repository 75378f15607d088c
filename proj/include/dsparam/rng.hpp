#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dsparam {

// SplitMix64 finalizer. Used to derive well-separated stream seeds from a
// master seed plus structural indices (segment, ensemble member, stage...).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed derivation: independent of evaluation order, so
// parallel or re-ordered loops see the same per-task seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ mix64(a ^ 0x6a09e667f3bcc909ULL));
  s = mix64(s ^ mix64(b ^ 0xbb67ae8584caa73bULL));
  return s;
}

// Gaussian stream over std::mt19937_64. The engine's output sequence is
// fully specified by the standard; the uniform->normal transform is done
// by hand (Box-Muller) because std::normal_distribution is
// implementation-defined and would break cross-platform determinism.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal deviate; consumes engine output in pairs.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dsparam

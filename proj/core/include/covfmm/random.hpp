#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace covfmm {

// splitmix64 step; used to derive stream seeds from a master seed.
constexpr std::uint64_t split_seed(std::uint64_t state) noexcept {
  std::uint64_t z = state + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic scalar random stream.  All randomness in the library flows
// through a stream the caller constructs and seeds explicitly; identical
// seeds give bit-identical sequences on any platform, because mt19937_64 is
// fully specified by the standard and the normal transform below is spelled
// out instead of relying on the implementation-defined
// std::normal_distribution.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // uniform in [0, 1), 53 bits
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, bound); bound in (0, 2^53)
  std::uint64_t uniform_int(std::uint64_t bound) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
  }

  // standard normal via Box-Muller; draws come in deterministic pairs
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace covfmm

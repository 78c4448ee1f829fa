#pragma once

// Deterministic random number generation.  Every stochastic routine takes an
// explicit Rng (or derives named substreams from one seed), so runs are
// byte-reproducible regardless of thread count.  Samplers are written out
// explicitly rather than relying on std::*_distribution, whose algorithms are
// implementation-defined.

#include <cstdint>
#include <random>
#include <string_view>

namespace degrade {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent substream for (seed, stream index), splitmix64-mixed so
  /// nearby indices decorrelate.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_index);

  /// Named substream, e.g. stream(seed, "bootstrap", replicate).
  static Rng stream(std::uint64_t seed, std::string_view name,
                    std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on (0,1); never returns 0 or 1.
  double uniform() {
    const std::uint64_t bits = engine_() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, scale), Marsaglia-Tsang with the boost for shape < 1.
  double gamma(double shape, double scale);

  /// Inverse Gaussian(mean, shape), Michael-Schucany-Haas transform.
  double inverse_gaussian(double mean, double shape);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace degrade

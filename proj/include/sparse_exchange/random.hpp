#ifndef SPARSE_EXCHANGE_RANDOM_HPP
#define SPARSE_EXCHANGE_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace sparse_exchange {

/// Seeded generator with a portable output sequence. The engine is
/// std::mt19937_64, whose output is fixed by the standard; the
/// distributions are implemented here because the standard library's are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double radius = std::sqrt(-2.0 * std::log(uniform_open_low()));
    const double angle = kTwoPi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sparse_exchange

#endif  // SPARSE_EXCHANGE_RANDOM_HPP

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace mafw {

/// Seeded random source with platform-stable derived distributions.
///
/// The standard distributions are implementation-defined, so uniform and
/// Gaussian draws are derived here directly from the mt19937_64 bit stream.
/// Two Rng objects with the same seed produce identical sequences on every
/// toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-free rejection keeps it simple and unbiased.
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller, caching the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Child stream for an independent component (agent, cell, ...).
  Rng split(std::uint64_t stream) {
    std::seed_seq seq{engine_(), stream};
    std::uint64_t s[1];
    seq.generate(reinterpret_cast<std::uint32_t*>(s), reinterpret_cast<std::uint32_t*>(s) + 2);
    return Rng(s[0]);
  }

  /// Textual engine state, restorable with restore().
  std::string state() const;
  void restore(const std::string& text);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mafw

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gbsde {

// Finalizer from splitmix64. Used to turn (seed, purpose, id) triples into
// well-spread engine seeds.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// One independent substream of randomness. A stream is fully determined by
/// (master seed, purpose, stream id), so any unit of work that owns its
/// stream draws the same numbers regardless of thread count or schedule.
///
/// Draw order matters: a stream consumed step by step yields a bit-identical
/// prefix when the same work is re-run with a longer horizon.
class RngStream {
 public:
  RngStream(std::uint64_t master, std::uint64_t purpose, std::uint64_t id) {
    std::uint64_t x = 0x9e3779b97f4a7c15ull;
    x = mix64(x ^ master);
    x = mix64(x ^ (purpose + 0xbf58476d1ce4e5b9ull));
    x = mix64(x ^ (id + 0x94d049bb133111ebull));
    engine_.seed(x);
  }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as a log argument.
  double uniform_pos() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. The spare value is cached, so a fixed
  /// call sequence consumes a fixed number of engine words.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Poisson count with the given mean. Knuth's product method, applied in
  /// chunks so the exp() limit never underflows; chunk sums are exact because
  /// independent Poisson counts add.
  std::uint32_t poisson(double mean) {
    std::uint32_t total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

 private:
  std::uint32_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::uint32_t n = 0;
    double prod = uniform();
    while (prod > limit) {
      ++n;
      prod *= uniform();
    }
    return n;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Hands out substreams keyed by id. Distinct purposes (path simulation,
/// nested conditional expectations, hypothesis sampling, ...) use distinct
/// factories so their streams never collide.
class RngFactory {
 public:
  explicit RngFactory(std::uint64_t master_seed, std::uint64_t purpose = 0)
      : master_(master_seed), purpose_(purpose) {}

  RngStream stream(std::uint64_t id) const {
    return RngStream(master_, purpose_, id);
  }

 private:
  std::uint64_t master_;
  std::uint64_t purpose_;
};

// Stream purposes used across the library.
inline constexpr std::uint64_t kPurposeSimulate = 0;
inline constexpr std::uint64_t kPurposeNested = 1;
inline constexpr std::uint64_t kPurposeAudit = 2;
inline constexpr std::uint64_t kPurposeOracle = 3;

}  // namespace gbsde

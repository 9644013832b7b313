#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace sspg {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// FNV-1a over the bytes of a purpose tag.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based random stream. The k-th draw is a pure function of
/// (key, k), so a stream can be recreated anywhere from its key alone.
///
/// All distributions are implemented here (not via <random>) so that the
/// produced sequences do not depend on the standard library vendor.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Unbiased integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t r;
    do {
      r = (*this)();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Box-Muller (second variate cached).
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Laplace(0, 1) by inverse CDF.
  double laplace() noexcept {
    double u = uniform() - 0.5;
    while (u == -0.5) u = uniform() - 0.5;
    return u < 0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
  }

  /// Exponential(rate) by inverse CDF: -log(1 - U) / rate.
  double exponential(double rate) noexcept {
    return -std::log1p(-uniform()) / rate;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Root of all randomness in a run. Substreams are addressed by
/// (purpose tag, iteration, term index); identical addresses give identical
/// streams, so per-term work can be scheduled on any worker.
struct RngSpec {
  std::uint64_t root_seed = 0;

  RngStream stream(std::string_view purpose, std::uint64_t iteration = 0,
                   std::uint64_t term = 0) const noexcept {
    std::uint64_t k = mix64(root_seed ^ mix64(tag_hash(purpose)));
    k = mix64(k + 0xd1b54a32d192ed03ULL * (iteration + 1));
    k = mix64(k + 0x8cb92ba72f3d8dd7ULL * (term + 1));
    return RngStream(k);
  }
};

}  // namespace sspg

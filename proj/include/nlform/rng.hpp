#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace nlform {

/// Counter-based random stream.  Every output is a pure function of
/// (key, counter), and child streams are derived by mixing the key with a
/// stream index, so a fixed root seed plus a fixed block partition yields
/// the same draws no matter how work is scheduled.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static RngStream root(std::uint64_t seed) { return RngStream(mix(seed ^ kRootSalt)); }

  /// Independent child stream; children of distinct indices do not overlap.
  RngStream substream(std::uint64_t idx) const {
    return RngStream(mix(key_ ^ mix((idx + 1) * kStreamSalt)));
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  /// Index i with probability weights[i]/sum(weights); weights need not be
  /// normalized.  Consumes one uniform.
  int pick(std::span<const double> weights, double total) {
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u <= 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  // SplitMix64 finalizer (Stafford mix 13).
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kStreamSalt = 0xd1342543de82ef95ULL;
  static constexpr std::uint64_t kRootSalt = 0x5851f42d4c957f2dULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nlform

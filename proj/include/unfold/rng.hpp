#ifndef UNFOLD_RNG_HPP
#define UNFOLD_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace unfold {

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Philox4x32-10 block function (Salmon, Moraes, Dror & Shaw, 2011).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(kMul0, ctr[0], hi0, lo0);
    detail::mulhilo32(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Mixes a kernel tag, an iteration number and an entity index into one stream id.
inline std::uint64_t stream_id(std::uint64_t tag, std::uint64_t iteration, std::uint64_t entity) {
  return detail::splitmix64(tag ^ detail::splitmix64(iteration ^ detail::splitmix64(entity)));
}

/// Counter-based random stream. The output at draw index n depends only on
/// (seed, stream_id, n), so any partition of the work over threads yields the
/// same numbers as a serial sweep.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t draws() const { return counter_ * 2 - buffered_; }

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53; }

  /// Standard normal via Box-Muller; the paired variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    double first;
    box_muller(u1, u2, first, spare_);
    has_spare_ = true;
    return first;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  // Out of line so every call site gets the same code: inlined copies may or
  // may not fuse sin/cos into sincos, which differs in the last bit.
  [[gnu::noinline]] static void box_muller(double u1, double u2, double& c, double& s) {
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    c = radius * std::cos(angle);
    s = radius * std::sin(angle);
  }

  void refill() {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                           static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = philox4x32_10(ctr, key);
    // buffer_ is consumed back to front
    buffer_[1] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[0] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
    ++counter_;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace unfold

#endif  // UNFOLD_RNG_HPP

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace lss {

/// 64-bit FNV-1a, used to turn experiment labels into stream tags.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Philox4x32-10 block function (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

/// Which independent sequence of a trajectory a stream feeds.
enum class Substream : std::uint32_t {
  kSwitching = 0,
  kNoise = 1,
  kAuxiliary = 2,
};

/**
 * Counter-based random stream.
 *
 * A stream is identified by (master seed, tag, index, substream). The key is
 * a hash of (seed, tag, substream); the 128-bit counter holds the trajectory
 * index in its upper half and the block number in its lower half, so any two
 * distinct identities give non-overlapping sequences and a stream can be
 * rebuilt anywhere without touching the others.
 */
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index,
               Substream substream = Substream::kAuxiliary);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box-Muller (pairs are cached).
  double normal();
  double exponential(double rate);

 private:
  void refill();

  Philox4x32::Key key_{};
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int position_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lss

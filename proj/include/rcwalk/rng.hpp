#pragma once

#include <cstdint>
#include <limits>

namespace rcwalk {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h + kGolden + mix64(v));
}

constexpr std::uint64_t hash_words(std::uint64_t a, std::uint64_t b) { return hash_combine(mix64(a), b); }

constexpr std::uint64_t hash_words(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_combine(hash_words(a, b), c);
}

// 53-bit uniform in (0,1].
constexpr double to_unit_open_closed(std::uint64_t x) {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

// 53-bit uniform in [0,1).
constexpr double to_unit_closed_open(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

enum class StreamTag : std::uint64_t {
  Field = 0x6669656c64ULL,
  Walk = 0x77616c6bULL,
  Resample = 0x7265736dULL,
  Aux = 0x617578ULL,
};

// Counter-based stream: the i-th draw is a pure function of (key, i), so
// streams can be split by replica and repositioned without shared state.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(mix64(key)), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ ^ mix64(++counter_ * kGolden)); }

  double uniform() { return to_unit_open_closed((*this)()); }
  double uniform01() { return to_unit_closed_open((*this)()); }

  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

inline std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index) {
  return hash_words(master, static_cast<std::uint64_t>(tag), index);
}

inline CounterRng make_stream(std::uint64_t master, StreamTag tag, std::uint64_t replica) {
  return CounterRng(derive_seed(master, tag, replica));
}

}  // namespace rcwalk

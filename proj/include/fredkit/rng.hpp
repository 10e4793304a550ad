#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace fredkit {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic random stream keyed by (seed, stream key). Boost distributions
// are used instead of <random> ones because their output is specified, so
// draws are identical across standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string stream_key)
      : seed_(seed),
        key_(std::move(stream_key)),
        engine_(detail::splitmix64(seed ^ detail::splitmix64(detail::fnv1a(key_)))) {}

  std::uint64_t seed() const { return seed_; }
  const std::string& stream_key() const { return key_; }

  // Independent child stream; does not advance this one.
  RngStream fork(std::string_view suffix) const { return RngStream(seed_, key_ + "/" + std::string(suffix)); }

  double uniform(double lo, double hi) {
    if (lo == hi) {
      engine_.discard(1);
      return lo;
    }
    return boost::random::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  // Inclusive on both ends.
  long long uniform_int(long long lo, long long hi) {
    return boost::random::uniform_int_distribution<long long>(lo, hi)(engine_);
  }

  double beta(double alpha, double beta) {
    return boost::random::beta_distribution<double>(alpha, beta)(engine_);
  }

 private:
  std::uint64_t seed_;
  std::string key_;
  boost::random::mt19937_64 engine_;
};

}  // namespace fredkit

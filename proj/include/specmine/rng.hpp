#pragma once

#include <cstdint>

namespace specmine {

// splitmix64: tiny, fast, and identical on every platform.  std:: engines
// are reproducible, but std::uniform_int_distribution is not, so all
// sampling goes through this class.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n); n must be positive.  Modulo bias is negligible for
  // the small ranges used here and keeps the stream layout simple.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Derive an independent child stream (one per simulation instance).
  Rng fork() { return Rng(next() ^ 0xd1b54a32d192ed03ULL); }

 private:
  std::uint64_t state_;
};

}  // namespace specmine

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace patrol {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed fanout: streams derived from (master, index...) are
// stable, so adding episodes or rounds never shifts earlier streams.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b, uint64_t c) {
  return derive_seed(derive_seed(master, a, b), c);
}

// Seeded random stream. All randomness in the project flows through this so
// that runs are bit-reproducible for a fixed seed.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // uniform in [0, 1)
  double next_double() { return (engine_() >> 11) * (1.0 / 9007199254740992.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Box-Muller; draws two uniforms per sample
  double normal() {
    double u1 = next_double();
    while (u1 <= 1e-300) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace patrol

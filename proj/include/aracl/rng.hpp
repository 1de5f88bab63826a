#ifndef ARACL_RNG_HPP_
#define ARACL_RNG_HPP_

#include <cstdint>
#include <random>

namespace aracl {

// Seeded random source with self-contained samplers. The standard
// distributions keep hidden state and are not pinned across library
// versions, so every sampler here is written out explicitly; a given
// (seed, call sequence) yields the same stream on every platform.
//
// derive(stream) produces an independent generator for parallel or
// per-instance work: substreams are keyed by (seed, stream id), never by
// generator state, so task order cannot change results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  Rng derive(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ (0x9E3779B97F4A7C15ULL + stream * 0xBF58476D1CE4E5B9ULL)));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() {
    return (next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller; no cached spare, two uniforms per draw.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang; boosted for shape < 1.
  double gamma(double shape);

  double beta(double a, double b);

  // Poisson via inversion-by-sequential-search; fine for the small means
  // used by the attack iteration prior.
  int poisson(double lambda);

  // Index draw from unnormalized nonnegative weights.
  int categorical(const double* w, int n);

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace aracl

#endif  // ARACL_RNG_HPP_

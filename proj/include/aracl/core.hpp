#ifndef ARACL_CORE_HPP_
#define ARACL_CORE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "aracl/types.hpp"

namespace aracl {

// Number of differing coordinates between two binary vectors of equal
// dimension. Symmetric, zero iff equal.
int hamming_distance(const FeatureVector& a, const FeatureVector& b);

// All binary vectors within Hamming distance `radius` of the center,
// flipping only masked features. Deterministic: flipped index sets are
// emitted in lexicographic order, center (empty set) first. Attacker
// tie-breaking relies on this order.
std::vector<FeatureVector> enumerate_neighborhood(const Neighborhood& n);

// Size the enumeration will have: sum_{j=0..radius} C(mask, j).
std::uint64_t neighborhood_size(int mask_size, int radius);

// Numerically stable softmax (max subtraction). Throws NumericError on NaN.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// log(sum(exp(v))), overflow-safe. Throws ConfigError on empty input.
double log_sum_exp(const Eigen::VectorXd& v);

// Packs a binary vector of dimension <= 64 into an integer key. Used for
// memo tables over small binary spaces.
std::uint64_t pack_bits(const FeatureVector& x);

}  // namespace aracl

#endif  // ARACL_CORE_HPP_

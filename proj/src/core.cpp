#include "aracl/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "aracl/rng.hpp"

namespace aracl {

void FeatureVector::validate() const {
  for (int i = 0; i < dim(); ++i) {
    const double v = values[i];
    if (domain == Domain::Binary) {
      if (v != 0.0 && v != 1.0)
        throw DataError("binary feature vector holds non 0/1 value at coordinate " +
                        std::to_string(i));
    } else {
      if (!(v >= 0.0 && v <= 1.0))
        throw DataError("unit-interval feature outside [0,1] at coordinate " +
                        std::to_string(i));
    }
  }
}

void LabeledDataset::validate() const {
  if (n() == 0) throw DataError("dataset is empty");
  if (k < 1 || l < 0 || l > k) throw ConfigError("invalid class counts (k, l)");
  if (static_cast<int>(labels.size()) != n())
    throw DataError("label count does not match instance count");
  for (int i = 0; i < n(); ++i) {
    if (labels[i] < 1 || labels[i] > k)
      throw DataError("label out of range at row " + std::to_string(i));
    instance(i).validate();
  }
}

void UtilityMatrix::validate() const {
  if (u.rows() != u.cols() || u.rows() < 1) throw ConfigError("utility matrix must be square");
  if (!u.allFinite()) throw ConfigError("utility matrix has non-finite entries");
}

void OriginDistribution::validate() const {
  if (support.empty()) throw NumericError("origin distribution has empty support");
  if (weights.size() != static_cast<Eigen::Index>(support.size()))
    throw NumericError("origin distribution weight/support size mismatch");
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw NumericError("origin distribution weights do not sum to 1");
}

Neighborhood Neighborhood::full_mask(FeatureVector center, int radius) {
  Neighborhood n;
  n.mask.resize(center.dim());
  for (int i = 0; i < center.dim(); ++i) n.mask[i] = i;
  n.center = std::move(center);
  n.radius = radius;
  return n;
}

int hamming_distance(const FeatureVector& a, const FeatureVector& b) {
  if (a.dim() != b.dim()) throw DataError("hamming_distance: dimension mismatch");
  if (a.domain != Domain::Binary || b.domain != Domain::Binary)
    throw DataError("hamming_distance: inputs must be binary");
  a.validate();
  b.validate();
  int d = 0;
  for (int i = 0; i < a.dim(); ++i)
    if (a.values[i] != b.values[i]) ++d;
  return d;
}

std::uint64_t neighborhood_size(int mask_size, int radius) {
  std::uint64_t total = 0;
  for (int j = 0; j <= radius; ++j) {
    std::uint64_t c = 1;
    for (int i = 0; i < j; ++i) c = c * (mask_size - i) / (i + 1);
    total += c;
  }
  return total;
}

namespace {

void enumerate_rec(const Neighborhood& n, FeatureVector& current, int next_mask_pos,
                   int flips_used, std::vector<FeatureVector>& out) {
  out.push_back(current);
  if (flips_used == n.radius) return;
  for (int p = next_mask_pos; p < static_cast<int>(n.mask.size()); ++p) {
    const int j = n.mask[p];
    current.values[j] = 1.0 - current.values[j];
    enumerate_rec(n, current, p + 1, flips_used + 1, out);
    current.values[j] = 1.0 - current.values[j];
  }
}

}  // namespace

std::vector<FeatureVector> enumerate_neighborhood(const Neighborhood& n) {
  if (n.center.domain != Domain::Binary)
    throw DataError("enumerate_neighborhood: center must be binary");
  n.center.validate();
  if (n.radius < 0 || n.radius > static_cast<int>(n.mask.size()))
    throw ConfigError("enumerate_neighborhood: radius exceeds mask size");
  for (int j : n.mask)
    if (j < 0 || j >= n.center.dim())
      throw ConfigError("enumerate_neighborhood: mask index out of range");
  std::vector<FeatureVector> out;
  out.reserve(neighborhood_size(static_cast<int>(n.mask.size()), n.radius));
  FeatureVector current = n.center;
  enumerate_rec(n, current, 0, 0, out);
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw ConfigError("softmax: empty input");
  if (logits.hasNaN()) throw NumericError("softmax: NaN input");
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

double log_sum_exp(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw ConfigError("log_sum_exp: empty input");
  if (v.hasNaN()) throw NumericError("log_sum_exp: NaN input");
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

std::uint64_t pack_bits(const FeatureVector& x) {
  if (x.dim() > 64) throw ConfigError("pack_bits: dimension exceeds 64");
  std::uint64_t key = 0;
  for (int i = 0; i < x.dim(); ++i)
    if (x.values[i] != 0.0) key |= (1ULL << i);
  return key;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection against the largest multiple of n to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  // Box-Muller; u1 bounded away from 0 so log stays finite.
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) throw ConfigError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^{1/a}.
    const double g = gamma(shape + 1.0);
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  if (a <= 0.0 || b <= 0.0) throw ConfigError("beta: parameters must be positive");
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

int Rng::poisson(double lambda) {
  if (lambda <= 0.0) throw ConfigError("poisson: mean must be positive");
  // Sequential search on the CDF; adequate for the small means we use.
  double p = std::exp(-lambda);
  double cdf = p;
  const double u = uniform();
  int n = 0;
  while (u > cdf && n < 10000) {
    ++n;
    p *= lambda / n;
    cdf += p;
  }
  return n;
}

int Rng::categorical(const double* w, int n) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += w[i];
  if (total <= 0.0) throw NumericError("categorical: weights sum to zero");
  double u = uniform() * total;
  for (int i = 0; i < n; ++i) {
    u -= w[i];
    if (u < 0.0) return i;
  }
  return n - 1;
}

}  // namespace aracl

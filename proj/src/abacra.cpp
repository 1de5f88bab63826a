#include "aracl/abacra.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aracl/core.hpp"

namespace aracl {

int FeatureModel::dim() const {
  return kind == Kind::ProductBernoulli ? static_cast<int>(means.size())
                                        : static_cast<int>(multiset.cols());
}

FeatureVector FeatureModel::sample(Rng& rng) const {
  if (kind == Kind::ProductBernoulli) {
    Eigen::VectorXd v(means.size());
    for (Eigen::Index j = 0; j < means.size(); ++j) v[j] = rng.uniform() < means[j] ? 1.0 : 0.0;
    return FeatureVector(std::move(v), Domain::Binary);
  }
  const Eigen::Index row = static_cast<Eigen::Index>(rng.uniform_int(multiset.rows()));
  return FeatureVector(multiset.row(row).transpose(), Domain::Binary);
}

double FeatureModel::prob(const FeatureVector& x) const {
  if (x.dim() != dim()) throw DataError("feature model: dimension mismatch");
  if (kind == Kind::ProductBernoulli) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < means.size(); ++j)
      p *= x.values[j] != 0.0 ? means[j] : 1.0 - means[j];
    return p;
  }
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < multiset.rows(); ++i)
    if (multiset.row(i).transpose() == x.values) ++hits;
  return static_cast<double>(hits) / static_cast<double>(multiset.rows());
}

OriginDistribution FeatureModel::enumerate() const {
  OriginDistribution out;
  if (kind == Kind::ProductBernoulli) {
    const int d = dim();
    if (d > 20) throw ConfigError("feature model enumeration limited to d <= 20");
    const std::uint64_t total = 1ULL << d;
    out.support.reserve(total);
    std::vector<double> w;
    w.reserve(total);
    for (std::uint64_t bits = 0; bits < total; ++bits) {
      Eigen::VectorXd v(d);
      for (int j = 0; j < d; ++j) v[j] = (bits >> j) & 1ULL ? 1.0 : 0.0;
      FeatureVector x(std::move(v), Domain::Binary);
      w.push_back(prob(x));
      out.support.push_back(std::move(x));
    }
    out.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  } else {
    std::map<std::vector<double>, int> counts;
    for (Eigen::Index i = 0; i < multiset.rows(); ++i) {
      std::vector<double> key(multiset.cols());
      for (Eigen::Index j = 0; j < multiset.cols(); ++j) key[j] = multiset(i, j);
      ++counts[key];
    }
    out.weights.resize(static_cast<Eigen::Index>(counts.size()));
    Eigen::Index p = 0;
    for (const auto& [key, count] : counts) {
      Eigen::VectorXd v =
          Eigen::Map<const Eigen::VectorXd>(key.data(), static_cast<Eigen::Index>(key.size()));
      out.support.emplace_back(std::move(v), Domain::Binary);
      out.weights[p++] = static_cast<double>(count) / static_cast<double>(multiset.rows());
    }
  }
  out.weights /= out.weights.sum();
  return out;
}

FeatureModel fit_feature_model(const LabeledDataset& data, FeatureModel::Kind kind,
                               double smoothing) {
  data.validate();
  if (data.domain != Domain::Binary) throw DataError("feature model requires binary data");
  FeatureModel m;
  m.kind = kind;
  m.smoothing = smoothing;
  if (kind == FeatureModel::Kind::ProductBernoulli) {
    if (smoothing <= 0.0)
      throw ConfigError("product-Bernoulli model needs positive smoothing to keep means in (0,1)");
    const double n = static_cast<double>(data.n());
    m.means = (data.features.colwise().sum().transpose().array() + smoothing) /
              (n + 2.0 * smoothing);
  } else {
    m.multiset = data.features;
  }
  return m;
}

OriginDistribution heuristic_origin(const FeatureVector& xp, int rho,
                                    const std::vector<int>& mask, OriginHeuristicKind mode) {
  Neighborhood n;
  n.center = xp;
  n.radius = rho;
  n.mask = mask;
  std::vector<FeatureVector> ball = enumerate_neighborhood(n);
  OriginDistribution out;
  if (mode == OriginHeuristicKind::Uniform) {
    out.support = std::move(ball);
    out.weights =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(out.support.size()),
                                  1.0 / static_cast<double>(out.support.size()));
    return out;
  }
  // Inverse distance: drop the center, weight by 1/lambda.
  std::vector<double> w;
  for (auto& z : ball) {
    const int dist = hamming_distance(z, xp);
    if (dist == 0) continue;
    out.support.push_back(std::move(z));
    w.push_back(1.0 / dist);
  }
  if (out.support.empty())
    throw NumericError("inverse-distance heuristic has empty support (rho = 0?)");
  out.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  out.weights /= out.weights.sum();
  return out;
}

OriginDistribution heuristic_origin(const FeatureVector& xp, int rho, OriginHeuristicKind mode) {
  std::vector<int> mask(xp.dim());
  for (int i = 0; i < xp.dim(); ++i) mask[i] = i;
  return heuristic_origin(xp, rho, mask, mode);
}

int summary_distance(const FeatureVector& a, const FeatureVector& b,
                     const std::vector<int>& summary_indices) {
  if (a.dim() != b.dim()) throw DataError("summary_distance: dimension mismatch");
  if (summary_indices.empty()) {
    int d = 0;
    for (int i = 0; i < a.dim(); ++i)
      if (a.values[i] != b.values[i]) ++d;
    return d;
  }
  int d = 0;
  for (int j : summary_indices) {
    if (j < 0 || j >= a.dim()) throw ConfigError("summary index out of range");
    if (a.values[j] != b.values[j]) ++d;
  }
  return d;
}

ABCResult abc_sample_origin(const FeatureVector& xp, const FeatureModel& px,
                            const Predictive& pred, int k, int l, const AttackKernel& attack,
                            const ABCConfig& cfg, Rng& rng) {
  if (cfg.n_samples < 1) throw ConfigError("abc_sample_origin: N must be at least 1");
  if (cfg.tol < 0) throw ConfigError("abc_sample_origin: negative tolerance");
  ABCResult out;
  while (static_cast<int>(out.samples.size()) < cfg.n_samples &&
         out.proposals < cfg.max_proposals) {
    ++out.proposals;
    FeatureVector x = px.sample(rng);
    Eigen::VectorXd py = pred(x);
    const int yi = 1 + rng.categorical(py.data(), k);
    FeatureVector simulated = yi > l ? x : attack(x, Label{yi}, rng);
    if (summary_distance(simulated, xp, cfg.summary_indices) <= cfg.tol)
      out.samples.push_back(std::move(x));
  }
  if (out.samples.empty())
    throw BudgetExhausted("ABC budget exhausted with zero acceptances after " +
                              std::to_string(out.proposals) + " proposals",
                          out.proposals);
  return out;
}

OriginDistribution exact_origin_posterior(const FeatureVector& xp, const FeatureModel& px,
                                          const Predictive& pred, int k, int l,
                                          const AttackKernel& attack, int nested_draws,
                                          Rng& rng) {
  if (px.kind == FeatureModel::Kind::ProductBernoulli && px.dim() > 12)
    throw ConfigError("exact_origin_posterior limited to d <= 12");
  if (nested_draws < 1) throw ConfigError("exact_origin_posterior: nested_draws must be >= 1");
  OriginDistribution prior = px.enumerate();
  OriginDistribution post;
  std::vector<double> w;
  for (int i = 0; i < prior.size(); ++i) {
    const FeatureVector& x = prior.support[i];
    Eigen::VectorXd py = pred(x);
    double channel = 0.0;
    // Good classes pass through: contribute only when x equals x'.
    if (x == xp)
      for (int c = l + 1; c <= k; ++c) channel += py[c - 1];
    for (int yi = 1; yi <= l; ++yi) {
      int hits = 0;
      for (int r = 0; r < nested_draws; ++r)
        if (attack(x, Label{yi}, rng) == xp) ++hits;
      channel += py[yi - 1] * static_cast<double>(hits) / nested_draws;
    }
    const double weight = prior.weights[i] * channel;
    if (weight > 0.0) {
      post.support.push_back(x);
      w.push_back(weight);
    }
  }
  if (post.support.empty())
    throw NumericError("exact_origin_posterior: observed instance unreachable (all weights zero)");
  post.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  post.weights /= post.weights.sum();
  return post;
}

namespace {

DecisionDetail decide_from_mixture(const Eigen::VectorXd& mixed_predictive,
                                   const UtilityMatrix& u) {
  u.validate();
  if (u.k() != mixed_predictive.size())
    throw ConfigError("robust_classify: utility matrix size mismatch");
  DecisionDetail out;
  out.psi = u.u * mixed_predictive;
  int best = 0;
  for (int i = 1; i < out.psi.size(); ++i)
    if (out.psi[i] > out.psi[best]) best = i;
  out.decision = Label{best + 1};
  return out;
}

}  // namespace

DecisionDetail robust_classify(const std::vector<FeatureVector>& origins, const Predictive& pred,
                               const UtilityMatrix& u) {
  if (origins.empty()) throw ConfigError("robust_classify: empty origin sample");
  Eigen::VectorXd acc = pred(origins.front());
  for (std::size_t i = 1; i < origins.size(); ++i) acc += pred(origins[i]);
  return decide_from_mixture(acc / static_cast<double>(origins.size()), u);
}

DecisionDetail robust_classify(const OriginDistribution& origins, const Predictive& pred,
                               const UtilityMatrix& u) {
  origins.validate();
  Eigen::VectorXd acc = origins.weights[0] * pred(origins.support[0]);
  for (int i = 1; i < origins.size(); ++i) acc += origins.weights[i] * pred(origins.support[i]);
  return decide_from_mixture(acc, u);
}

}  // namespace aracl

#ifndef ARACL_ABACRA_HPP_
#define ARACL_ABACRA_HPP_

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "aracl/rng.hpp"
#include "aracl/types.hpp"

namespace aracl {

// Generative model of untainted features p(x). Product-Bernoulli keeps one
// smoothed mean per feature; empirical keeps the training multiset.
struct FeatureModel {
  enum class Kind { ProductBernoulli, Empirical };

  Kind kind = Kind::ProductBernoulli;
  Eigen::VectorXd means;      // product-Bernoulli means, each in (0,1)
  Eigen::MatrixXd multiset;   // empirical rows
  double smoothing = 1.0;

  int dim() const;
  FeatureVector sample(Rng& rng) const;
  double prob(const FeatureVector& x) const;
  // Distinct support with probabilities; product kind enumerates all 2^d
  // (guarded to d <= 20), empirical kind the distinct training rows.
  OriginDistribution enumerate() const;
};

FeatureModel fit_feature_model(const LabeledDataset& data, FeatureModel::Kind kind,
                               double smoothing = 1.0);

// Metric heuristics for p(x|x') over the Hamming ball. Uniform includes x'
// itself; inverse-distance ignores x' as possible origin and weights
// candidates by 1/lambda(x, x').
OriginDistribution heuristic_origin(const FeatureVector& xp, int rho,
                                    const std::vector<int>& mask,
                                    OriginHeuristicKind mode);
OriginDistribution heuristic_origin(const FeatureVector& xp, int rho,
                                    OriginHeuristicKind mode);

// Attack channel used by the samplers: one draw from p(x'|x, y).
using AttackKernel = std::function<FeatureVector(const FeatureVector& x, Label y, Rng& rng)>;

struct ABCConfig {
  std::vector<int> summary_indices;  // s; empty = identity (all coordinates)
  int tol = 0;                       // Hamming tolerance on summaries
  int n_samples = 1;                 // accepted-sample target N
  long long max_proposals = 1'000'000;
};

struct ABCResult {
  std::vector<FeatureVector> samples;
  long long proposals = 0;

  double acceptance_rate() const {
    return proposals > 0 ? static_cast<double>(samples.size()) / proposals : 0.0;
  }
};

// Hamming distance restricted to the summary coordinates (all if empty).
int summary_distance(const FeatureVector& a, const FeatureVector& b,
                     const std::vector<int>& summary_indices);

// Rejection-ABC sampler for p(x|x'): propose x ~ p(x), push it through the
// label draw + attack decomposition, accept when the simulated observation
// is summary-close to x'. Throws BudgetExhausted if the budget ends with
// zero acceptances; a short but nonempty sample is returned as-is.
ABCResult abc_sample_origin(const FeatureVector& xp, const FeatureModel& px,
                            const Predictive& pred, int k, int l,
                            const AttackKernel& attack, const ABCConfig& cfg, Rng& rng);

// Brute-force posterior p(x|x') over an enumerable feature space, with the
// attack kernel estimated by `nested_draws` simulations per (x, bad class).
// Testing oracle for the ABC sampler.
OriginDistribution exact_origin_posterior(const FeatureVector& xp, const FeatureModel& px,
                                          const Predictive& pred, int k, int l,
                                          const AttackKernel& attack, int nested_draws,
                                          Rng& rng);

// Maximum expected utility decision from origin samples:
// psi(y_C) = (1/N) sum_i u(y_C, y_i) sum_n p(y_i | x_n). Ties break to the
// lowest class index.
DecisionDetail robust_classify(const std::vector<FeatureVector>& origins,
                               const Predictive& pred, const UtilityMatrix& u);
// Weighted variant for closed-form origin distributions.
DecisionDetail robust_classify(const OriginDistribution& origins, const Predictive& pred,
                               const UtilityMatrix& u);

}  // namespace aracl

#endif  // ARACL_ABACRA_HPP_

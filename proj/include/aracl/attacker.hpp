#ifndef ARACL_ATTACKER_HPP_
#define ARACL_ATTACKER_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "aracl/rng.hpp"
#include "aracl/types.hpp"

namespace aracl {

// Utility the attacker derives when a bad instance of class i is classified
// as good class c. Zero outside bad->good cells by construction; only the
// nonzero block is representable. Entries are either fixed values in [0,1]
// or Beta hyperparameters expressing the defender's uncertainty about them.
struct AttackerUtilitySpec {
  struct Entry {
    double value = 0.7;  // fixed utility when !random
    bool random = false;
    double alpha = 0.0, beta = 0.0;

    double mean() const { return random ? alpha / (alpha + beta) : value; }
    static Entry fixed(double v);
    static Entry beta_params(double a, double b);
    // Beta centered at `mean` with variance = fraction * concavity bound.
    static Entry beta_around(double mean, double variance_fraction);
  };

  Entry default_entry = Entry::fixed(0.7);
  // Overrides keyed by (good class c, bad class i), both 1-based.
  std::map<std::pair<int, int>, Entry> overrides;

  const Entry& entry(int good_c, int bad_i) const;
};

// How the defender models the attacker's probability estimates P_A^c(z):
// Beta around mean_c(z) = E_{x ~ p*(.|z)} p(c|x), with the variance a fixed
// fraction of the concavity bound. worst_case drops the uncertainty and uses
// the exact means (and utility means), giving a deterministic best response.
struct AttackerProbModel {
  OriginHeuristicKind pstar = OriginHeuristicKind::Uniform;
  int M = 40;               // Monte-Carlo draws for mean_c when !exact_mean
  bool exact_mean = true;   // enumerate p* support instead of sampling
  double variance_fraction = 0.1;
  bool worst_case = false;
  bool renormalize_draws = true;  // rescale prob draws when they sum past 1
};

struct AttackSample {
  FeatureVector origin;
  Label label;
  FeatureVector attacked;
  bool was_attacked = false;
};

// Loadable attacker description: utilities, prob model and the attack
// neighborhood (radius + mutable-feature mask; empty mask = all features).
struct AttackerConfig {
  AttackerUtilitySpec utilities;
  AttackerProbModel prob;
  int rho = 1;
  std::vector<int> mask;

  Neighborhood neighborhood_of(const FeatureVector& x) const;
};

AttackerConfig attacker_config_from_json(const std::string& text);
AttackerConfig load_attacker_config(const std::string& path);
std::string attacker_config_to_json(const AttackerConfig& cfg);

// Beta(alpha, beta) with exactly the given mean and variance.
// Requires mean in (0,1) and 0 < var < mean(1-mean).
std::pair<double, double> beta_from_mean_var(double mean, double var);

// Mean and variance of Beta(alpha, beta); inverse of the above.
std::pair<double, double> beta_moments(double alpha, double beta);

// Upper bound on the variance keeping Beta(mean, var) concave on (0,1):
// min{ mu^2(1-mu)/(1+mu), mu(1-mu)^2/(2-mu) }.
double concavity_variance_bound(double mean);

// Monte-Carlo estimate of sum_x p(c|x) p*(x) with M draws from p*.
double estimate_mean_c(const OriginDistribution& pstar, const Predictive& pred,
                       int c, int M, Rng& rng);
// Exact enumeration of the same sum.
double exact_mean_c(const OriginDistribution& pstar, const Predictive& pred, int c);

// argmax over candidates of sum_c utilities[c] * probs[candidate][c]; ties
// resolved by the first maximizer in candidate order.
int attacker_best_response_index(const std::vector<Eigen::VectorXd>& probs,
                                 const Eigen::VectorXd& utilities);
FeatureVector attacker_best_response(const std::vector<FeatureVector>& candidates,
                                     const Eigen::VectorXd& utilities,
                                     const std::vector<Eigen::VectorXd>& probs);

// Memo for exact candidate means, keyed by packed candidate bits. Only
// consulted when the prob model is exact_mean and d <= 64; entries depend
// on (predictive, pstar kind, rho, mask), which the owner keeps fixed.
struct MeanCache {
  std::unordered_map<std::uint64_t, Eigen::VectorXd> map;
};

// One draw from p(x'|x, y). Good labels pass through unattacked. Bad labels
// realize u_A ~ U_A and P_A^c per candidate, then best-respond. Draw order
// is fixed (utilities by class, then candidates in enumeration order) so a
// seeded rng reproduces the attack.
AttackSample sample_attack(const FeatureVector& x, Label y,
                           const AttackerUtilitySpec& spec,
                           const AttackerProbModel& prob,
                           const AttackerConfig& geometry,  // rho + mask
                           const Predictive& pred, int k, int l, Rng& rng,
                           MeanCache* cache = nullptr);

// Convenience using the config's own utility spec and prob model.
AttackSample sample_attack(const FeatureVector& x, Label y, const AttackerConfig& cfg,
                           const Predictive& pred, int k, int l, Rng& rng,
                           MeanCache* cache = nullptr);

}  // namespace aracl

#endif  // ARACL_ATTACKER_HPP_

#include "aracl/attacker.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aracl/abacra.hpp"
#include "aracl/core.hpp"

namespace aracl {

using nlohmann::json;

AttackerUtilitySpec::Entry AttackerUtilitySpec::Entry::fixed(double v) {
  if (v < 0.0 || v > 1.0) throw ConfigError("attacker utility must lie in [0,1]");
  Entry e;
  e.value = v;
  e.random = false;
  return e;
}

AttackerUtilitySpec::Entry AttackerUtilitySpec::Entry::beta_params(double a, double b) {
  if (a <= 0.0 || b <= 0.0) throw ConfigError("attacker utility Beta parameters must be positive");
  Entry e;
  e.random = true;
  e.alpha = a;
  e.beta = b;
  return e;
}

AttackerUtilitySpec::Entry AttackerUtilitySpec::Entry::beta_around(double mean,
                                                                   double variance_fraction) {
  const double var = variance_fraction * concavity_variance_bound(mean);
  auto [a, b] = beta_from_mean_var(mean, var);
  return beta_params(a, b);
}

const AttackerUtilitySpec::Entry& AttackerUtilitySpec::entry(int good_c, int bad_i) const {
  auto it = overrides.find({good_c, bad_i});
  return it != overrides.end() ? it->second : default_entry;
}

Neighborhood AttackerConfig::neighborhood_of(const FeatureVector& x) const {
  Neighborhood n;
  n.center = x;
  n.radius = rho;
  if (mask.empty()) {
    n.mask.resize(x.dim());
    for (int i = 0; i < x.dim(); ++i) n.mask[i] = i;
  } else {
    n.mask = mask;
  }
  return n;
}

std::pair<double, double> beta_from_mean_var(double mean, double var) {
  if (!(mean > 0.0 && mean < 1.0)) throw ConfigError("beta_from_mean_var: mean must lie in (0,1)");
  if (!(var > 0.0)) throw ConfigError("beta_from_mean_var: variance must be positive");
  if (var >= mean * (1.0 - mean))
    throw ConfigError("beta_from_mean_var: variance too large for a Beta with this mean");
  const double alpha = ((1.0 - mean) / var - 1.0 / mean) * mean * mean;
  const double beta = alpha * (1.0 / mean - 1.0);
  return {alpha, beta};
}

std::pair<double, double> beta_moments(double alpha, double beta) {
  if (alpha <= 0.0 || beta <= 0.0) throw ConfigError("beta_moments: parameters must be positive");
  const double s = alpha + beta;
  return {alpha / s, alpha * beta / (s * s * (s + 1.0))};
}

double concavity_variance_bound(double mean) {
  if (!(mean > 0.0 && mean < 1.0))
    throw ConfigError("concavity_variance_bound: mean must lie in (0,1)");
  const double a = mean * mean * (1.0 - mean) / (1.0 + mean);
  const double b = mean * (1.0 - mean) * (1.0 - mean) / (2.0 - mean);
  return std::min(a, b);
}

double estimate_mean_c(const OriginDistribution& pstar, const Predictive& pred, int c, int M,
                       Rng& rng) {
  pstar.validate();
  if (M < 1) throw ConfigError("estimate_mean_c: M must be at least 1");
  double acc = 0.0;
  for (int m = 0; m < M; ++m) {
    const int idx = rng.categorical(pstar.weights.data(), pstar.size());
    acc += pred(pstar.support[idx])[c - 1];
  }
  return acc / M;
}

double exact_mean_c(const OriginDistribution& pstar, const Predictive& pred, int c) {
  pstar.validate();
  double acc = 0.0;
  for (int i = 0; i < pstar.size(); ++i) acc += pstar.weights[i] * pred(pstar.support[i])[c - 1];
  return acc;
}

int attacker_best_response_index(const std::vector<Eigen::VectorXd>& probs,
                                 const Eigen::VectorXd& utilities) {
  if (probs.empty()) throw ConfigError("attacker_best_response: empty candidate set");
  int best = 0;
  double best_value = -1.0;
  for (int z = 0; z < static_cast<int>(probs.size()); ++z) {
    const double v = utilities.dot(probs[z]);
    if (v > best_value) {
      best_value = v;
      best = z;
    }
  }
  return best;
}

FeatureVector attacker_best_response(const std::vector<FeatureVector>& candidates,
                                     const Eigen::VectorXd& utilities,
                                     const std::vector<Eigen::VectorXd>& probs) {
  if (candidates.size() != probs.size())
    throw ConfigError("attacker_best_response: candidate/prob size mismatch");
  return candidates[attacker_best_response_index(probs, utilities)];
}

namespace {

// Exact good-class means for one candidate z: mean_c(z) = E_{x~p*(.|z)} p(c|x).
Eigen::VectorXd candidate_means(const FeatureVector& z, const AttackerProbModel& prob,
                                const AttackerConfig& geometry, const Predictive& pred, int k,
                                int l, Rng& rng, MeanCache* cache) {
  const bool cacheable = prob.exact_mean && z.dim() <= 64 && cache != nullptr;
  std::uint64_t key = 0;
  if (cacheable) {
    key = pack_bits(z);
    auto it = cache->map.find(key);
    if (it != cache->map.end()) return it->second;
  }
  Neighborhood ball = geometry.neighborhood_of(z);
  OriginDistribution pstar = heuristic_origin(z, ball.radius, ball.mask, prob.pstar);
  Eigen::VectorXd means(k - l);
  for (int c = l + 1; c <= k; ++c) {
    means[c - l - 1] = prob.exact_mean ? exact_mean_c(pstar, pred, c)
                                       : estimate_mean_c(pstar, pred, c, prob.M, rng);
  }
  if (cacheable) cache->map.emplace(key, means);
  return means;
}

}  // namespace

AttackSample sample_attack(const FeatureVector& x, Label y, const AttackerUtilitySpec& spec,
                           const AttackerProbModel& prob, const AttackerConfig& geometry,
                           const Predictive& pred, int k, int l, Rng& rng, MeanCache* cache) {
  if (y.index < 1 || y.index > k) throw ConfigError("sample_attack: label out of range");
  AttackSample out;
  out.origin = x;
  out.label = y;
  if (!is_bad(y, l)) {
    out.attacked = x;
    out.was_attacked = false;
    return out;
  }

  // Realized utilities u_A^{ci} for this bad class, c = l+1..k.
  Eigen::VectorXd utilities(k - l);
  for (int c = l + 1; c <= k; ++c) {
    const auto& e = spec.entry(c, y.index);
    if (prob.worst_case || !e.random)
      utilities[c - l - 1] = e.mean();
    else
      utilities[c - l - 1] = rng.beta(e.alpha, e.beta);
  }

  const std::vector<FeatureVector> candidates =
      enumerate_neighborhood(geometry.neighborhood_of(x));

  std::vector<Eigen::VectorXd> probs(candidates.size());
  for (std::size_t zi = 0; zi < candidates.size(); ++zi) {
    Eigen::VectorXd means =
        candidate_means(candidates[zi], prob, geometry, pred, k, l, rng, cache);
    if (prob.worst_case) {
      probs[zi] = means;
      continue;
    }
    Eigen::VectorXd draw(k - l);
    for (int c = 0; c < k - l; ++c) {
      const double m = std::min(1.0 - 1e-9, std::max(1e-9, means[c]));
      const double var = prob.variance_fraction * concavity_variance_bound(m);
      auto [a, b] = beta_from_mean_var(m, var);
      draw[c] = rng.beta(a, b);
    }
    if (prob.renormalize_draws && k - l > 1) {
      const double s = draw.sum();
      if (s > 1.0) draw /= s;
    }
    probs[zi] = draw;
  }

  out.attacked = attacker_best_response(candidates, utilities, probs);
  out.was_attacked = true;
  return out;
}

AttackSample sample_attack(const FeatureVector& x, Label y, const AttackerConfig& cfg,
                           const Predictive& pred, int k, int l, Rng& rng, MeanCache* cache) {
  return sample_attack(x, y, cfg.utilities, cfg.prob, cfg, pred, k, l, rng, cache);
}

namespace {

AttackerUtilitySpec::Entry entry_from_json(const json& j, double variance_fraction) {
  if (j.is_number()) return AttackerUtilitySpec::Entry::fixed(j.get<double>());
  if (j.is_object()) {
    if (j.contains("alpha"))
      return AttackerUtilitySpec::Entry::beta_params(j.at("alpha").get<double>(),
                                                     j.at("beta").get<double>());
    if (j.contains("mean"))
      return AttackerUtilitySpec::Entry::beta_around(
          j.at("mean").get<double>(), j.value("variance_fraction", variance_fraction));
  }
  throw ConfigError("attacker config: utility entry must be a number, {alpha,beta} or {mean}");
}

json entry_to_json(const AttackerUtilitySpec::Entry& e) {
  if (!e.random) return e.value;
  return json{{"alpha", e.alpha}, {"beta", e.beta}};
}

}  // namespace

AttackerConfig attacker_config_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("attacker config: malformed JSON");
  AttackerConfig cfg;
  cfg.prob.M = doc.value("M", cfg.prob.M);
  cfg.prob.exact_mean = doc.value("exact_mean", cfg.prob.exact_mean);
  cfg.prob.variance_fraction = doc.value("variance_fraction", cfg.prob.variance_fraction);
  cfg.prob.worst_case = doc.value("worst_case", cfg.prob.worst_case);
  cfg.prob.renormalize_draws = doc.value("renormalize_draws", cfg.prob.renormalize_draws);
  const std::string pstar = doc.value("pstar", "uniform");
  if (pstar == "uniform")
    cfg.prob.pstar = OriginHeuristicKind::Uniform;
  else if (pstar == "inverse_distance")
    cfg.prob.pstar = OriginHeuristicKind::InverseDistance;
  else
    throw ConfigError("attacker config: pstar must be 'uniform' or 'inverse_distance'");
  cfg.rho = doc.value("rho", cfg.rho);
  if (cfg.rho < 0) throw ConfigError("attacker config: rho must be nonnegative");
  if (doc.contains("mask")) cfg.mask = doc.at("mask").get<std::vector<int>>();
  if (cfg.prob.M < 1) throw ConfigError("attacker config: M must be at least 1");
  if (!(cfg.prob.variance_fraction > 0.0 && cfg.prob.variance_fraction <= 1.0))
    throw ConfigError("attacker config: variance_fraction must lie in (0,1]");
  if (doc.contains("utilities")) {
    const auto& u = doc.at("utilities");
    if (u.contains("default"))
      cfg.utilities.default_entry = entry_from_json(u.at("default"), cfg.prob.variance_fraction);
    if (u.contains("entries")) {
      for (const auto& e : u.at("entries")) {
        const int c = e.at("good").get<int>();
        const int i = e.at("bad").get<int>();
        cfg.utilities.overrides[{c, i}] =
            entry_from_json(e.at("utility"), cfg.prob.variance_fraction);
      }
    }
  }
  return cfg;
}

AttackerConfig load_attacker_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attacker config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return attacker_config_from_json(ss.str());
}

std::string attacker_config_to_json(const AttackerConfig& cfg) {
  json doc;
  doc["M"] = cfg.prob.M;
  doc["exact_mean"] = cfg.prob.exact_mean;
  doc["variance_fraction"] = cfg.prob.variance_fraction;
  doc["worst_case"] = cfg.prob.worst_case;
  doc["renormalize_draws"] = cfg.prob.renormalize_draws;
  doc["pstar"] =
      cfg.prob.pstar == OriginHeuristicKind::Uniform ? "uniform" : "inverse_distance";
  doc["rho"] = cfg.rho;
  if (!cfg.mask.empty()) doc["mask"] = cfg.mask;
  json utilities;
  utilities["default"] = entry_to_json(cfg.utilities.default_entry);
  if (!cfg.utilities.overrides.empty()) {
    json entries = json::array();
    for (const auto& [key, e] : cfg.utilities.overrides)
      entries.push_back(
          {{"good", key.first}, {"bad", key.second}, {"utility", entry_to_json(e)}});
    utilities["entries"] = std::move(entries);
  }
  doc["utilities"] = std::move(utilities);
  return doc.dump(2);
}

}  // namespace aracl

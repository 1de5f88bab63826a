#ifndef ARACL_ROBUST_TRAIN_HPP_
#define ARACL_ROBUST_TRAIN_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "aracl/classifiers.hpp"
#include "aracl/gradient_attacks.hpp"
#include "aracl/types.hpp"

namespace aracl {

enum class TrainMode { Standard, AT, ALP, ARA };

TrainMode train_mode_from_string(const std::string& s);
std::string to_string(TrainMode m);

struct LossWeights {
  double clean = 1.0;
  double adv = 1.0;
  double pair = 1.0;
  double energy = 1.0;
  int pair_norm = 1;  // 1 (default, matches the |.| notation) or 2
};

struct LossBreakdown {
  double clean_ce = 0.0;
  double adv_ce = 0.0;
  double pairing = 0.0;
  double energy = 0.0;
  double total = 0.0;
};

struct TrainingConfig {
  TrainMode mode = TrainMode::Standard;
  std::string arch = "mlp";  // "mlp" | "mr"
  int hidden = 128;
  int epochs = 5;
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.5;          // Standard/AT/ALP only
  int particles = 1;              // K (ARA)
  LossWeights weights;            // ARA loss terms; `pair` also weights ALP
  double fgsm_eps = 0.25;         // AT/ALP training attack strength
  AttackHyperPrior attack_prior;  // ARA attack sampler
  bool ara_attack_enabled = true; // off = identity perturbation (diagnostics)
  double noise_scale = 1.0;       // scales the SGLD parameter noise; 0 = plain SGD
  std::uint64_t seed = 0;

  void validate() const;
};

// Negated joint objective for one (clean, attacked) pair:
//   -log p(y|x) - log p(y|x') + ||f(x)-f(x')||_1 + |LSE f(x) - LSE f(x')|,
// each term weighted. The energy term is evaluated through log_sum_exp so
// the partition function never appears.
LossBreakdown ara_loss(const SoftmaxModel& m, const FeatureVector& x, const FeatureVector& xp,
                       Label y, const LossWeights& w = {});

// Batched mean loss with flat parameter gradient.
LossBreakdown ara_loss_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Xp, const std::vector<int>& labels,
                             const LossWeights& w, Eigen::VectorXd* grad_out = nullptr);

// Posterior particles by minibatch SGLD on the joint loss; attacks are
// regenerated each iteration from the evolving particle they train
// (index-matched). The Langevin step acts on the dataset-summed objective,
// so the configured learning rate is the effective mean-gradient step and
// the injected noise has variance 2 * lr / n per coordinate.
ParticleSet sgld_train(const LabeledDataset& data, const TrainingConfig& cfg,
                       std::vector<LossBreakdown>* epoch_log = nullptr);

// Standard = SGD with momentum on cross-entropy; AT mixes clean and
// FGSM-attacked batches 50/50; ALP adds the logit-pairing penalty.
SoftmaxModel baseline_train(const LabeledDataset& data, const TrainingConfig& cfg,
                            std::vector<LossBreakdown>* epoch_log = nullptr);

// Delta-E = mean_x[-LSE f(x)] - mean_x'[-LSE f(x')] on paired sets of equal
// size; log Z cancels in the difference. Particle sets average the gap.
double energy_gap(const SoftmaxModel& m, const Eigen::MatrixXd& clean,
                  const Eigen::MatrixXd& attacked);
double energy_gap(const ParticleSet& p, const Eigen::MatrixXd& clean,
                  const Eigen::MatrixXd& attacked);

// Test-time decision rule over the robustified posterior:
// argmax_yC sum_i u(yC, yi) (1/K) sum_j p(yi | x', beta_j).
DecisionDetail robust_decide(const FeatureVector& xp, const ParticleSet& particles,
                             const UtilityMatrix& u);

}  // namespace aracl

#endif  // ARACL_ROBUST_TRAIN_HPP_

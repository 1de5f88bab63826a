#ifndef ARACL_GRADIENT_ATTACKS_HPP_
#define ARACL_GRADIENT_ATTACKS_HPP_

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "aracl/classifiers.hpp"
#include "aracl/rng.hpp"
#include "aracl/types.hpp"

namespace aracl {

enum class AttackNorm { LInf, L1 };

// Defender-side uncertainty over the attacker's optimizer: step size from a
// re-scaled Beta on [eps_min, eps_max] (or a Gamma), iteration count from a
// Poisson truncated to >= 1.
struct AttackHyperPrior {
  enum class StepPrior { RescaledBeta, Gamma };

  StepPrior step_prior = StepPrior::RescaledBeta;
  double eps_min = 0.05, eps_max = 0.4;  // re-scaled Beta support
  double beta_a = 2.0, beta_b = 2.0;
  double gamma_shape = 2.0, gamma_scale = 0.1;
  double poisson_mean = 2.0;  // iteration prior, truncated to >= 1
  bool sign_mode = true;      // sign of the gradient vs raw gradient
  bool noise = true;          // Langevin noise on/off
  bool redraw_per_particle = false;

  void validate() const;
  double draw_eps(Rng& rng) const;
  int draw_iters(Rng& rng) const;
};

struct AttackResult {
  std::vector<FeatureVector> perturbed;  // one per particle
  std::vector<double> eps_drawn;         // one entry, or one per particle if redrawn
  std::vector<int> iters_drawn;
  std::vector<std::vector<FeatureVector>> trace;  // per particle, if requested
};

// One signed-gradient step against log p(y|x,beta), clipped to [0,1]^d.
FeatureVector fgsm(const SoftmaxModel& m, const FeatureVector& x, Label y, double eps);
FeatureVector fgsm(const ParticleSet& p, const FeatureVector& x, Label y, double eps);
// Batched over rows of X with per-row labels.
Eigen::MatrixXd fgsm_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                           const std::vector<int>& labels, double eps);
Eigen::MatrixXd fgsm_batch(const ParticleSet& p, const Eigen::MatrixXd& X,
                           const std::vector<int>& labels, double eps);

// Iterated ascent on -log p(y|x,beta), each step projected onto the
// eps-ball around the original input and onto [0,1]^d. alpha <= 0 selects
// the default step 2.5 * eps / steps.
FeatureVector pgd(const SoftmaxModel& m, const FeatureVector& x, Label y, double eps, int steps,
                  double alpha, AttackNorm norm);
FeatureVector pgd(const ParticleSet& p, const FeatureVector& x, Label y, double eps, int steps,
                  double alpha, AttackNorm norm);
Eigen::MatrixXd pgd_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                          const std::vector<int>& labels, double eps, int steps, double alpha,
                          AttackNorm norm);
Eigen::MatrixXd pgd_batch(const ParticleSet& p, const Eigen::MatrixXd& X,
                          const std::vector<int>& labels, double eps, int steps, double alpha,
                          AttackNorm norm);

// Project v onto the L1 ball of the given radius (Duchi et al. pivot method).
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

// ARA-randomized attack: draws (eps, T) from the prior once per call, then
// runs T Langevin steps per particle ascending -log p(y|x, beta_i) with step
// decay eps_t = eps/(1+t)^0.55 and noise variance 2*eps_t per coordinate,
// clipping to [0,1]^d each step.
AttackResult sgld_attack(const ParticleSet& particles, const FeatureVector& x, Label y,
                         const AttackHyperPrior& prior, Rng& rng, bool keep_trace = false);

// Batched counterpart used by the trainer: attacks every row of X with the
// given single model, drawing (eps, T) once for the whole batch.
Eigen::MatrixXd sgld_attack_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                                  const std::vector<int>& labels, const AttackHyperPrior& prior,
                                  Rng& rng, double* eps_out = nullptr, int* iters_out = nullptr);

using AttackFn = std::function<FeatureVector(const FeatureVector&, Label)>;

// Bernoulli(p) mixture: apply attack_a on success, attack_b otherwise.
FeatureVector mixture_attack(const FeatureVector& x, Label y, double p, const AttackFn& attack_a,
                             const AttackFn& attack_b, Rng& rng);

}  // namespace aracl

#endif  // ARACL_GRADIENT_ATTACKS_HPP_

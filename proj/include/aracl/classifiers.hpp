#ifndef ARACL_CLASSIFIERS_HPP_
#define ARACL_CLASSIFIERS_HPP_

#include <Eigen/Core>
#include <variant>
#include <vector>

#include "aracl/rng.hpp"
#include "aracl/types.hpp"

namespace aracl {

// Multinomial regression: logits f(x) = W x + b, optionally L1-penalized.
struct MRModel {
  Eigen::MatrixXd W;  // k x d
  Eigen::VectorXd b;  // k
  double l1_strength = 0.0;

  int k() const { return static_cast<int>(W.rows()); }
  int d() const { return static_cast<int>(W.cols()); }
};

// Two-layer feed-forward network with rectifier activation:
// f(x) = W2 relu(W1 x + b1) + b2.
struct MLPModel {
  Eigen::MatrixXd W1;  // h x d
  Eigen::VectorXd b1;  // h
  Eigen::MatrixXd W2;  // k x h
  Eigen::VectorXd b2;  // k

  int k() const { return static_cast<int>(W2.rows()); }
  int d() const { return static_cast<int>(W1.cols()); }
  int h() const { return static_cast<int>(W1.rows()); }
};

using SoftmaxModel = std::variant<MRModel, MLPModel>;

int model_k(const SoftmaxModel& m);
int model_d(const SoftmaxModel& m);

// Uniform init in +-1/sqrt(fan_in), seeded.
MLPModel init_mlp(int d, int hidden, int k, Rng& rng);

// Posterior sample of parameters, all of identical architecture.
struct ParticleSet {
  std::vector<SoftmaxModel> particles;

  int size() const { return static_cast<int>(particles.size()); }
  void validate() const;  // nonempty, matching shapes
};

// ---- Forward / prediction ----------------------------------------------

Eigen::VectorXd logits(const SoftmaxModel& m, const FeatureVector& x);
// Batched: X has one instance per row, result one logit row per instance.
Eigen::MatrixXd logits_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X);

Eigen::VectorXd predict_proba(const SoftmaxModel& m, const FeatureVector& x);
// Particle average (1/K) sum_i softmax(f_{beta_i}(x)).
Eigen::VectorXd predict_proba(const ParticleSet& p, const FeatureVector& x);
Eigen::MatrixXd predict_proba_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X);
Eigen::MatrixXd predict_proba_batch(const ParticleSet& p, const Eigen::MatrixXd& X);

Predictive make_predictive(const SoftmaxModel& m);
Predictive make_predictive(const ParticleSet& p);

// ---- Reverse mode -------------------------------------------------------

// Cached activations for one batched forward pass.
struct ForwardCache {
  Eigen::MatrixXd hidden_pre;  // n x h (MLP only)
  Eigen::MatrixXd hidden;      // n x h (MLP only)
  Eigen::MatrixXd logits;      // n x k
};

ForwardCache forward(const SoftmaxModel& m, const Eigen::MatrixXd& X);

// Flat parameter views. Order: MR = [W row-major, b]; MLP = [W1, b1, W2, b2],
// matrices row-major. unflatten is the exact inverse.
Eigen::VectorXd param_vector(const SoftmaxModel& m);
void set_params(SoftmaxModel& m, const Eigen::VectorXd& theta);
int param_count(const SoftmaxModel& m);

// Accumulated d(scalar)/d(params) given d(scalar)/d(logits) for each row.
Eigen::VectorXd backward_params(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                                const ForwardCache& cache, const Eigen::MatrixXd& dlogits);
// d(scalar)/d(inputs), one row per instance.
Eigen::MatrixXd backward_inputs(const SoftmaxModel& m, const ForwardCache& cache,
                                const Eigen::MatrixXd& dlogits);

// Gradient of log softmax(f(x))[y] with respect to the input.
Eigen::VectorXd grad_input_logprob(const SoftmaxModel& m, const FeatureVector& x, Label y);
// Same for the particle-averaged predictive log (1/K) sum_i p_i(y|x).
Eigen::VectorXd grad_input_logprob(const ParticleSet& p, const FeatureVector& x, Label y);

// Scalar objective over the logits of a stacked input batch; grad_params
// pulls its gradient back onto the flat parameter vector.
struct LogitsObjective {
  virtual ~LogitsObjective() = default;
  virtual double value(const Eigen::MatrixXd& logits) const = 0;
  virtual Eigen::MatrixXd grad(const Eigen::MatrixXd& logits) const = 0;
};

Eigen::VectorXd grad_params(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                            const LogitsObjective& objective, double* value_out = nullptr);

// ---- MAP fitting (tabular track) ----------------------------------------

struct MRFitConfig {
  int max_iters = 500;
  double step = 1.0;       // initial proximal step, halved by backtracking
  double tol = 1e-8;       // stop when the parameter update norm falls below
  std::uint64_t seed = 0;  // recorded for the config hash; the fit is deterministic
};

// Maximizes sum log softmax(f(x))[y] - l1_strength * ||W||_1 by proximal
// gradient with soft-thresholding. Deterministic given data and config.
MRModel fit_map_multinomial(const LabeledDataset& data, double l1_strength,
                            const MRFitConfig& cfg = {});

// Indices of the `count` features with the largest per-feature relevance
// max_c |W[c][j]|, in descending score order, ties broken by lower index.
std::vector<int> select_summary_features(const MRModel& m, int count);

}  // namespace aracl

#endif  // ARACL_CLASSIFIERS_HPP_

#include "aracl/gradient_attacks.hpp"

#include <algorithm>
#include <cmath>

#include "aracl/core.hpp"

namespace aracl {

void AttackHyperPrior::validate() const {
  if (!(eps_min > 0.0) || eps_max < eps_min)
    throw ConfigError("attack prior: need 0 < eps_min <= eps_max");
  if (beta_a <= 0.0 || beta_b <= 0.0) throw ConfigError("attack prior: Beta parameters");
  if (gamma_shape <= 0.0 || gamma_scale <= 0.0) throw ConfigError("attack prior: Gamma parameters");
  if (!(poisson_mean > 0.0)) throw ConfigError("attack prior: Poisson mean must be positive");
}

double AttackHyperPrior::draw_eps(Rng& rng) const {
  if (step_prior == StepPrior::RescaledBeta)
    return eps_min + (eps_max - eps_min) * rng.beta(beta_a, beta_b);
  return rng.gamma(gamma_shape) * gamma_scale;
}

int AttackHyperPrior::draw_iters(Rng& rng) const {
  int t;
  do {
    t = rng.poisson(poisson_mean);
  } while (t < 1);
  return t;
}

namespace {

void clip_unit(Eigen::MatrixXd& X) {
  X = X.cwiseMax(0.0).cwiseMin(1.0);
}

// d(sum_i log p(y_i | x_i)) / d(logits): one-hot minus softmax, per row.
Eigen::MatrixXd logprob_dlogits(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  Eigen::MatrixXd d(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    d.row(i) = -softmax(logits.row(i).transpose()).transpose();
    d(i, labels[i] - 1) += 1.0;
  }
  return d;
}

Eigen::MatrixXd grad_logprob_inputs(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                                    const std::vector<int>& labels) {
  ForwardCache cache = forward(m, X);
  Eigen::MatrixXd g = backward_inputs(m, cache, logprob_dlogits(cache.logits, labels));
  if (!g.allFinite()) throw NumericError("attack gradient is not finite");
  return g;
}

// Gradient rows of log of the particle-averaged predictive.
Eigen::MatrixXd grad_logprob_inputs(const ParticleSet& p, const Eigen::MatrixXd& X,
                                    const std::vector<int>& labels) {
  p.validate();
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(X.rows());
  for (const auto& m : p.particles) {
    ForwardCache cache = forward(m, X);
    Eigen::MatrixXd g = backward_inputs(m, cache, logprob_dlogits(cache.logits, labels));
    Eigen::MatrixXd probs = predict_proba_batch(m, X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double pi = probs(i, labels[i] - 1);
      num.row(i) += pi * g.row(i);
      den[i] += pi;
    }
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (den[i] <= 0.0) throw NumericError("attack gradient: zero predictive mass");
    num.row(i) /= den[i];
  }
  if (!num.allFinite()) throw NumericError("attack gradient is not finite");
  return num;
}

void check_labels(const std::vector<int>& labels, Eigen::Index n, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DataError("attack: label count mismatch");
  for (int y : labels)
    if (y < 1 || y > k) throw DataError("attack: label out of range");
}

template <typename ModelLike>
Eigen::MatrixXd fgsm_batch_impl(const ModelLike& m, const Eigen::MatrixXd& X,
                                const std::vector<int>& labels, double eps, int k) {
  if (eps < 0.0) throw ConfigError("fgsm: negative step size");
  check_labels(labels, X.rows(), k);
  Eigen::MatrixXd g = grad_logprob_inputs(m, X, labels);
  Eigen::MatrixXd out = X - eps * g.unaryExpr([](double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  });
  clip_unit(out);
  return out;
}

template <typename ModelLike>
Eigen::MatrixXd pgd_batch_impl(const ModelLike& m, const Eigen::MatrixXd& X,
                               const std::vector<int>& labels, double eps, int steps, double alpha,
                               AttackNorm norm, int k) {
  if (eps < 0.0) throw ConfigError("pgd: negative radius");
  if (steps < 1) throw ConfigError("pgd: steps must be >= 1");
  check_labels(labels, X.rows(), k);
  if (alpha <= 0.0) alpha = 2.5 * eps / steps;
  Eigen::MatrixXd cur = X;
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd g = -grad_logprob_inputs(m, cur, labels);  // ascend -log p
    if (norm == AttackNorm::LInf) {
      cur += alpha * g.unaryExpr([](double v) {
        return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      });
      Eigen::MatrixXd delta = (cur - X).cwiseMax(-eps).cwiseMin(eps);
      cur = X + delta;
    } else {
      // Steepest ascent under l1: move the single largest-gradient coordinate.
      for (Eigen::Index i = 0; i < cur.rows(); ++i) {
        Eigen::Index j;
        const double mx = g.row(i).cwiseAbs().maxCoeff(&j);
        if (mx > 0.0) cur(i, j) += alpha * (g(i, j) > 0.0 ? 1.0 : -1.0);
        Eigen::VectorXd delta = project_l1_ball((cur.row(i) - X.row(i)).transpose(), eps);
        cur.row(i) = X.row(i) + delta.transpose();
      }
    }
    clip_unit(cur);
  }
  return cur;
}

}  // namespace

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (radius < 0.0) throw ConfigError("project_l1_ball: negative radius");
  if (v.lpNorm<1>() <= radius) return v;
  if (radius == 0.0) return Eigen::VectorXd::Zero(v.size());
  std::vector<double> u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - radius) / static_cast<double>(j + 1);
    if (u[j] - t <= 0.0) break;
    theta = t;
  }
  Eigen::VectorXd w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - theta, 0.0);
    w[i] = v[i] >= 0.0 ? mag : -mag;
  }
  return w;
}

Eigen::MatrixXd fgsm_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                           const std::vector<int>& labels, double eps) {
  return fgsm_batch_impl(m, X, labels, eps, model_k(m));
}

Eigen::MatrixXd fgsm_batch(const ParticleSet& p, const Eigen::MatrixXd& X,
                           const std::vector<int>& labels, double eps) {
  p.validate();
  return fgsm_batch_impl(p, X, labels, eps, model_k(p.particles.front()));
}

namespace {

FeatureVector check_continuous(const FeatureVector& x) {
  if (x.domain != Domain::UnitInterval)
    throw DataError("gradient attacks require unit-interval inputs");
  x.validate();
  return x;
}

}  // namespace

FeatureVector fgsm(const SoftmaxModel& m, const FeatureVector& x, Label y, double eps) {
  check_continuous(x);
  Eigen::MatrixXd out = fgsm_batch(m, x.values.transpose(), {y.index}, eps);
  return FeatureVector(out.row(0).transpose(), Domain::UnitInterval);
}

FeatureVector fgsm(const ParticleSet& p, const FeatureVector& x, Label y, double eps) {
  check_continuous(x);
  Eigen::MatrixXd out = fgsm_batch(p, x.values.transpose(), {y.index}, eps);
  return FeatureVector(out.row(0).transpose(), Domain::UnitInterval);
}

Eigen::MatrixXd pgd_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                          const std::vector<int>& labels, double eps, int steps, double alpha,
                          AttackNorm norm) {
  return pgd_batch_impl(m, X, labels, eps, steps, alpha, norm, model_k(m));
}

Eigen::MatrixXd pgd_batch(const ParticleSet& p, const Eigen::MatrixXd& X,
                          const std::vector<int>& labels, double eps, int steps, double alpha,
                          AttackNorm norm) {
  p.validate();
  return pgd_batch_impl(p, X, labels, eps, steps, alpha, norm, model_k(p.particles.front()));
}

FeatureVector pgd(const SoftmaxModel& m, const FeatureVector& x, Label y, double eps, int steps,
                  double alpha, AttackNorm norm) {
  check_continuous(x);
  Eigen::MatrixXd out = pgd_batch(m, x.values.transpose(), {y.index}, eps, steps, alpha, norm);
  return FeatureVector(out.row(0).transpose(), Domain::UnitInterval);
}

FeatureVector pgd(const ParticleSet& p, const FeatureVector& x, Label y, double eps, int steps,
                  double alpha, AttackNorm norm) {
  check_continuous(x);
  Eigen::MatrixXd out = pgd_batch(p, x.values.transpose(), {y.index}, eps, steps, alpha, norm);
  return FeatureVector(out.row(0).transpose(), Domain::UnitInterval);
}

namespace {

// T Langevin steps on one batch against a single model; eps_t decays as
// eps/(1+t)^0.55 (Robbins-Monro), noise variance 2*eps_t per coordinate.
Eigen::MatrixXd sgld_chain(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                           const std::vector<int>& labels, const AttackHyperPrior& prior,
                           double eps, int iters, Rng& rng,
                           std::vector<FeatureVector>* trace) {
  Eigen::MatrixXd cur = X;
  for (int t = 0; t < iters; ++t) {
    const double eps_t = eps / std::pow(1.0 + t, 0.55);
    Eigen::MatrixXd g = -grad_logprob_inputs(m, cur, labels);
    if (prior.sign_mode)
      g = g.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    cur += eps_t * g;
    if (prior.noise) {
      const double sd = std::sqrt(2.0 * eps_t);
      for (Eigen::Index i = 0; i < cur.rows(); ++i)
        for (Eigen::Index j = 0; j < cur.cols(); ++j) cur(i, j) += sd * rng.normal();
    }
    clip_unit(cur);
    if (trace)
      trace->emplace_back(Eigen::VectorXd(cur.row(0).transpose()), Domain::UnitInterval);
  }
  return cur;
}

}  // namespace

AttackResult sgld_attack(const ParticleSet& particles, const FeatureVector& x, Label y,
                         const AttackHyperPrior& prior, Rng& rng, bool keep_trace) {
  particles.validate();
  prior.validate();
  check_continuous(x);
  AttackResult out;
  int iters = prior.draw_iters(rng);
  double eps = prior.draw_eps(rng);
  out.iters_drawn.push_back(iters);
  out.eps_drawn.push_back(eps);
  for (int i = 0; i < particles.size(); ++i) {
    if (prior.redraw_per_particle && i > 0) {
      iters = prior.draw_iters(rng);
      eps = prior.draw_eps(rng);
      out.iters_drawn.push_back(iters);
      out.eps_drawn.push_back(eps);
    }
    std::vector<FeatureVector> trace;
    Eigen::MatrixXd res = sgld_chain(particles.particles[i], x.values.transpose(), {y.index},
                                     prior, eps, iters, rng, keep_trace ? &trace : nullptr);
    out.perturbed.emplace_back(res.row(0).transpose(), Domain::UnitInterval);
    if (keep_trace) out.trace.push_back(std::move(trace));
  }
  return out;
}

Eigen::MatrixXd sgld_attack_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                                  const std::vector<int>& labels, const AttackHyperPrior& prior,
                                  Rng& rng, double* eps_out, int* iters_out) {
  prior.validate();
  check_labels(labels, X.rows(), model_k(m));
  const int iters = prior.draw_iters(rng);
  const double eps = prior.draw_eps(rng);
  if (eps_out) *eps_out = eps;
  if (iters_out) *iters_out = iters;
  return sgld_chain(m, X, labels, prior, eps, iters, rng, nullptr);
}

FeatureVector mixture_attack(const FeatureVector& x, Label y, double p, const AttackFn& attack_a,
                             const AttackFn& attack_b, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("mixture_attack: probability outside [0,1]");
  return rng.uniform() < p ? attack_a(x, y) : attack_b(x, y);
}

}  // namespace aracl

#include "aracl/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aracl/core.hpp"

namespace aracl {

int model_k(const SoftmaxModel& m) {
  return std::visit([](const auto& mm) { return mm.k(); }, m);
}

int model_d(const SoftmaxModel& m) {
  return std::visit([](const auto& mm) { return mm.d(); }, m);
}

MLPModel init_mlp(int d, int hidden, int k, Rng& rng) {
  if (d < 1 || hidden < 1 || k < 1) throw ConfigError("init_mlp: invalid sizes");
  MLPModel m;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto fill = [&rng](Eigen::MatrixXd& M, double s) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = (2.0 * rng.uniform() - 1.0) * s;
  };
  m.W1.resize(hidden, d);
  m.W2.resize(k, hidden);
  fill(m.W1, s1);
  fill(m.W2, s2);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.b2 = Eigen::VectorXd::Zero(k);
  return m;
}

namespace {

bool same_shape(const SoftmaxModel& a, const SoftmaxModel& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<MRModel>(a)) {
    const auto& x = std::get<MRModel>(a);
    const auto& y = std::get<MRModel>(b);
    return x.k() == y.k() && x.d() == y.d();
  }
  const auto& x = std::get<MLPModel>(a);
  const auto& y = std::get<MLPModel>(b);
  return x.k() == y.k() && x.d() == y.d() && x.h() == y.h();
}

}  // namespace

void ParticleSet::validate() const {
  if (particles.empty()) throw ConfigError("particle set is empty");
  for (const auto& p : particles)
    if (!same_shape(p, particles.front()))
      throw ConfigError("particle set mixes architectures");
}

Eigen::MatrixXd logits_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X) {
  if (X.cols() != model_d(m)) throw DataError("logits: input dimension mismatch");
  if (std::holds_alternative<MRModel>(m)) {
    const auto& mr = std::get<MRModel>(m);
    return (X * mr.W.transpose()).rowwise() + mr.b.transpose();
  }
  const auto& mlp = std::get<MLPModel>(m);
  Eigen::MatrixXd h = (X * mlp.W1.transpose()).rowwise() + mlp.b1.transpose();
  h = h.cwiseMax(0.0);
  return (h * mlp.W2.transpose()).rowwise() + mlp.b2.transpose();
}

Eigen::VectorXd logits(const SoftmaxModel& m, const FeatureVector& x) {
  return logits_batch(m, x.values.transpose()).row(0).transpose();
}

Eigen::VectorXd predict_proba(const SoftmaxModel& m, const FeatureVector& x) {
  return softmax(logits(m, x));
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd P(Z.rows(), Z.cols());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double mx = Z.row(i).maxCoeff();
    Eigen::ArrayXd e = (Z.row(i).array() - mx).exp();
    P.row(i) = (e / e.sum()).matrix();
  }
  return P;
}

}  // namespace

Eigen::MatrixXd predict_proba_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X) {
  return softmax_rows(logits_batch(m, X));
}

Eigen::VectorXd predict_proba(const ParticleSet& p, const FeatureVector& x) {
  p.validate();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(model_k(p.particles.front()));
  for (const auto& m : p.particles) acc += predict_proba(m, x);
  return acc / p.size();
}

Eigen::MatrixXd predict_proba_batch(const ParticleSet& p, const Eigen::MatrixXd& X) {
  p.validate();
  Eigen::MatrixXd acc = predict_proba_batch(p.particles.front(), X);
  for (int i = 1; i < p.size(); ++i) acc += predict_proba_batch(p.particles[i], X);
  return acc / p.size();
}

Predictive make_predictive(const SoftmaxModel& m) {
  return [m](const FeatureVector& x) { return predict_proba(m, x); };
}

Predictive make_predictive(const ParticleSet& p) {
  return [p](const FeatureVector& x) { return predict_proba(p, x); };
}

ForwardCache forward(const SoftmaxModel& m, const Eigen::MatrixXd& X) {
  ForwardCache c;
  if (std::holds_alternative<MRModel>(m)) {
    c.logits = logits_batch(m, X);
    return c;
  }
  const auto& mlp = std::get<MLPModel>(m);
  if (X.cols() != mlp.d()) throw DataError("forward: input dimension mismatch");
  c.hidden_pre = (X * mlp.W1.transpose()).rowwise() + mlp.b1.transpose();
  c.hidden = c.hidden_pre.cwiseMax(0.0);
  c.logits = (c.hidden * mlp.W2.transpose()).rowwise() + mlp.b2.transpose();
  return c;
}

namespace {

void append_matrix(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out[pos++] = M(i, j);
}

void read_matrix(const Eigen::VectorXd& in, Eigen::Index& pos, Eigen::MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = in[pos++];
}

}  // namespace

int param_count(const SoftmaxModel& m) {
  if (std::holds_alternative<MRModel>(m)) {
    const auto& mr = std::get<MRModel>(m);
    return mr.k() * mr.d() + mr.k();
  }
  const auto& p = std::get<MLPModel>(m);
  return p.h() * p.d() + p.h() + p.k() * p.h() + p.k();
}

Eigen::VectorXd param_vector(const SoftmaxModel& m) {
  Eigen::VectorXd theta(param_count(m));
  Eigen::Index pos = 0;
  if (std::holds_alternative<MRModel>(m)) {
    const auto& mr = std::get<MRModel>(m);
    append_matrix(theta, pos, mr.W);
    theta.segment(pos, mr.k()) = mr.b;
  } else {
    const auto& p = std::get<MLPModel>(m);
    append_matrix(theta, pos, p.W1);
    theta.segment(pos, p.h()) = p.b1;
    pos += p.h();
    append_matrix(theta, pos, p.W2);
    theta.segment(pos, p.k()) = p.b2;
  }
  return theta;
}

void set_params(SoftmaxModel& m, const Eigen::VectorXd& theta) {
  if (theta.size() != param_count(m)) throw ConfigError("set_params: size mismatch");
  Eigen::Index pos = 0;
  if (std::holds_alternative<MRModel>(m)) {
    auto& mr = std::get<MRModel>(m);
    read_matrix(theta, pos, mr.W);
    mr.b = theta.segment(pos, mr.k());
  } else {
    auto& p = std::get<MLPModel>(m);
    read_matrix(theta, pos, p.W1);
    p.b1 = theta.segment(pos, p.h());
    pos += p.h();
    read_matrix(theta, pos, p.W2);
    p.b2 = theta.segment(pos, p.k());
  }
}

Eigen::VectorXd backward_params(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                                const ForwardCache& cache, const Eigen::MatrixXd& dlogits) {
  Eigen::VectorXd g(param_count(m));
  Eigen::Index pos = 0;
  if (std::holds_alternative<MRModel>(m)) {
    const auto& mr = std::get<MRModel>(m);
    Eigen::MatrixXd dW = dlogits.transpose() * X;  // k x d
    append_matrix(g, pos, dW);
    g.segment(pos, mr.k()) = dlogits.colwise().sum().transpose();
  } else {
    const auto& p = std::get<MLPModel>(m);
    Eigen::MatrixXd dHidden = dlogits * p.W2;  // n x h
    // Rectifier subgradient at 0 taken as 0.
    Eigen::MatrixXd dPre =
        dHidden.cwiseProduct((cache.hidden_pre.array() > 0.0).cast<double>().matrix());
    Eigen::MatrixXd dW1 = dPre.transpose() * X;           // h x d
    Eigen::MatrixXd dW2 = dlogits.transpose() * cache.hidden;  // k x h
    append_matrix(g, pos, dW1);
    g.segment(pos, p.h()) = dPre.colwise().sum().transpose();
    pos += p.h();
    append_matrix(g, pos, dW2);
    g.segment(pos, p.k()) = dlogits.colwise().sum().transpose();
  }
  return g;
}

Eigen::MatrixXd backward_inputs(const SoftmaxModel& m, const ForwardCache& cache,
                                const Eigen::MatrixXd& dlogits) {
  if (std::holds_alternative<MRModel>(m)) {
    return dlogits * std::get<MRModel>(m).W;
  }
  const auto& p = std::get<MLPModel>(m);
  Eigen::MatrixXd dHidden = dlogits * p.W2;
  Eigen::MatrixXd dPre =
      dHidden.cwiseProduct((cache.hidden_pre.array() > 0.0).cast<double>().matrix());
  return dPre * p.W1;
}

Eigen::VectorXd grad_input_logprob(const SoftmaxModel& m, const FeatureVector& x, Label y) {
  if (y.index < 1 || y.index > model_k(m)) throw ConfigError("grad_input_logprob: label range");
  Eigen::MatrixXd X = x.values.transpose();
  ForwardCache cache = forward(m, X);
  Eigen::MatrixXd dlogits = -softmax_rows(cache.logits);
  dlogits(0, y.index - 1) += 1.0;  // d log softmax[y] / d logits = onehot - p
  return backward_inputs(m, cache, dlogits).row(0).transpose();
}

Eigen::VectorXd grad_input_logprob(const ParticleSet& p, const FeatureVector& x, Label y) {
  p.validate();
  // d/dx log((1/K) sum_i p_i(y|x)) = sum_i p_i(y|x) dlog p_i / sum_i p_i(y|x).
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.dim());
  double total = 0.0;
  for (const auto& m : p.particles) {
    const double pi = predict_proba(m, x)[y.index - 1];
    acc += pi * grad_input_logprob(m, x, y);
    total += pi;
  }
  if (total <= 0.0) throw NumericError("grad_input_logprob: zero predictive mass");
  return acc / total;
}

Eigen::VectorXd grad_params(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                            const LogitsObjective& objective, double* value_out) {
  ForwardCache cache = forward(m, X);
  if (value_out) *value_out = objective.value(cache.logits);
  Eigen::MatrixXd dlogits = objective.grad(cache.logits);
  if (dlogits.rows() != cache.logits.rows() || dlogits.cols() != cache.logits.cols())
    throw NumericError("grad_params: objective gradient shape mismatch");
  if (!dlogits.allFinite()) throw NumericError("grad_params: NaN in backward pass");
  return backward_params(m, X, cache, dlogits);
}

namespace {

// Mean negative log-likelihood and its logits gradient for a labeled batch.
double nll_and_grad(const Eigen::MatrixXd& Z, const std::vector<int>& labels,
                    Eigen::MatrixXd* dlogits) {
  const Eigen::Index n = Z.rows();
  Eigen::MatrixXd P = softmax_rows(Z);
  double nll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = Z.row(i).maxCoeff();
    const double lse = mx + std::log((Z.row(i).array() - mx).exp().sum());
    nll += lse - Z(i, labels[i] - 1);
  }
  nll /= static_cast<double>(n);
  if (dlogits) {
    *dlogits = P;
    for (Eigen::Index i = 0; i < n; ++i) (*dlogits)(i, labels[i] - 1) -= 1.0;
    *dlogits /= static_cast<double>(n);
  }
  return nll;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

MRModel fit_map_multinomial(const LabeledDataset& data, double l1_strength,
                            const MRFitConfig& cfg) {
  data.validate();
  if (l1_strength < 0.0) throw ConfigError("fit_map_multinomial: negative l1_strength");
  const int k = data.k;
  const int d = data.dim();
  const double n = static_cast<double>(data.n());
  // Optimize mean NLL + (l1/n)||W||_1; same argmax as the summed objective.
  const double lam = l1_strength / n;

  MRModel m;
  m.W = Eigen::MatrixXd::Zero(k, d);
  m.b = Eigen::VectorXd::Zero(k);
  m.l1_strength = l1_strength;

  double step = cfg.step;
  Eigen::MatrixXd dlogits;
  double loss = nll_and_grad(logits_batch(m, data.features), data.labels, &dlogits);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (!std::isfinite(loss)) throw NumericError("fit_map_multinomial: non-finite loss");
    Eigen::MatrixXd gW = dlogits.transpose() * data.features;
    Eigen::VectorXd gb = dlogits.colwise().sum().transpose();

    // Backtracking on the smooth part, then soft-threshold W.
    double update_norm = 0.0;
    for (;;) {
      Eigen::MatrixXd Wn = m.W - step * gW;
      for (Eigen::Index i = 0; i < Wn.rows(); ++i)
        for (Eigen::Index j = 0; j < Wn.cols(); ++j)
          Wn(i, j) = soft_threshold(Wn(i, j), step * lam);
      Eigen::VectorXd bn = m.b - step * gb;
      MRModel trial = m;
      trial.W = Wn;
      trial.b = bn;
      Eigen::MatrixXd dl_trial;
      const double trial_loss =
          nll_and_grad(logits_batch(trial, data.features), data.labels, &dl_trial);
      const double dist2 = (Wn - m.W).squaredNorm() + (bn - m.b).squaredNorm();
      const double quad = loss + gW.cwiseProduct(Wn - m.W).sum() +
                          gb.dot(bn - m.b) + dist2 / (2.0 * step);
      if (trial_loss <= quad + 1e-12 || step < 1e-10) {
        update_norm = std::sqrt(dist2);
        m.W = std::move(Wn);
        m.b = std::move(bn);
        loss = trial_loss;
        dlogits = std::move(dl_trial);
        break;
      }
      step *= 0.5;
    }
    if (update_norm < cfg.tol) break;
  }
  return m;
}

std::vector<int> select_summary_features(const MRModel& m, int count) {
  if (count < 1 || count > m.d())
    throw ConfigError("select_summary_features: count out of range");
  std::vector<int> idx(m.d());
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::VectorXd score = m.W.cwiseAbs().colwise().maxCoeff().transpose();
  std::stable_sort(idx.begin(), idx.end(), [&score](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  idx.resize(count);
  return idx;
}

}  // namespace aracl

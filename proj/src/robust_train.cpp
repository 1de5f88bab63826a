#include "aracl/robust_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aracl/core.hpp"

namespace aracl {

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "standard") return TrainMode::Standard;
  if (s == "at") return TrainMode::AT;
  if (s == "alp") return TrainMode::ALP;
  if (s == "ara") return TrainMode::ARA;
  throw ConfigError("unknown training mode '" + s + "'");
}

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Standard: return "standard";
    case TrainMode::AT: return "at";
    case TrainMode::ALP: return "alp";
    case TrainMode::ARA: return "ara";
  }
  return "standard";
}

void TrainingConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("training: learning rate must be positive");
  if (epochs < 1 || batch_size < 1) throw ConfigError("training: epochs/batch size");
  if (particles < 1) throw ConfigError("training: particle count must be >= 1");
  if (arch != "mlp" && arch != "mr") throw ConfigError("training: arch must be 'mlp' or 'mr'");
  if (hidden < 1) throw ConfigError("training: hidden width must be >= 1");
  if (weights.pair_norm != 1 && weights.pair_norm != 2)
    throw ConfigError("training: pair_norm must be 1 or 2");
  if (fgsm_eps < 0.0) throw ConfigError("training: negative FGSM epsilon");
  if ((mode == TrainMode::ARA) && ara_attack_enabled) attack_prior.validate();
}

namespace {

Eigen::VectorXd softmax_row(const Eigen::MatrixXd& Z, Eigen::Index i) {
  return softmax(Z.row(i).transpose());
}

double row_lse(const Eigen::MatrixXd& Z, Eigen::Index i) {
  return log_sum_exp(Z.row(i).transpose());
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

LossBreakdown ara_loss_batch(const SoftmaxModel& m, const Eigen::MatrixXd& X,
                             const Eigen::MatrixXd& Xp, const std::vector<int>& labels,
                             const LossWeights& w, Eigen::VectorXd* grad_out) {
  if (X.rows() != Xp.rows() || X.cols() != Xp.cols())
    throw DataError("ara_loss: clean/attacked shape mismatch");
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw DataError("ara_loss: label count");

  // One stacked forward pass: rows [0,n) are clean, [n,2n) attacked.
  Eigen::MatrixXd stacked(2 * n, X.cols());
  stacked << X, Xp;
  ForwardCache cache = forward(m, stacked);
  if (!cache.logits.allFinite()) throw NumericError("ara_loss: non-finite logits");

  LossBreakdown bd;
  Eigen::MatrixXd dlogits;
  if (grad_out) dlogits = Eigen::MatrixXd::Zero(2 * n, cache.logits.cols());

  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i] - 1;
    const Eigen::VectorXd pc = softmax_row(cache.logits, i);
    const Eigen::VectorXd pa = softmax_row(cache.logits, n + i);
    const double lse_c = row_lse(cache.logits, i);
    const double lse_a = row_lse(cache.logits, n + i);
    bd.clean_ce += lse_c - cache.logits(i, y);
    bd.adv_ce += lse_a - cache.logits(n + i, y);

    Eigen::VectorXd diff =
        (cache.logits.row(i) - cache.logits.row(n + i)).transpose();
    double pair_term;
    Eigen::VectorXd pair_grad;  // d(pair)/d(logits of x); negated for x'
    if (w.pair_norm == 1) {
      pair_term = diff.lpNorm<1>();
      pair_grad = diff.unaryExpr([](double v) { return sgn(v); });
    } else {
      pair_term = diff.norm();
      pair_grad = pair_term > 0.0 ? Eigen::VectorXd(diff / pair_term)
                                  : Eigen::VectorXd::Zero(diff.size());
    }
    bd.pairing += pair_term;

    const double e = lse_c - lse_a;
    bd.energy += std::abs(e);

    if (grad_out) {
      Eigen::VectorXd dc = w.clean * pc;
      dc[y] -= w.clean;
      Eigen::VectorXd da = w.adv * pa;
      da[y] -= w.adv;
      dc += w.pair * pair_grad;
      da -= w.pair * pair_grad;
      dc += w.energy * sgn(e) * pc;
      da -= w.energy * sgn(e) * pa;
      dlogits.row(i) = dc.transpose();
      dlogits.row(n + i) = da.transpose();
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  bd.clean_ce *= inv_n;
  bd.adv_ce *= inv_n;
  bd.pairing *= inv_n;
  bd.energy *= inv_n;
  bd.total = w.clean * bd.clean_ce + w.adv * bd.adv_ce + w.pair * bd.pairing +
             w.energy * bd.energy;
  if (!std::isfinite(bd.total)) throw NumericError("ara_loss: non-finite total");

  if (grad_out) {
    dlogits *= inv_n;
    *grad_out = backward_params(m, stacked, cache, dlogits);
  }
  return bd;
}

LossBreakdown ara_loss(const SoftmaxModel& m, const FeatureVector& x, const FeatureVector& xp,
                       Label y, const LossWeights& w) {
  if (x.dim() != xp.dim()) throw DataError("ara_loss: dimension mismatch");
  return ara_loss_batch(m, x.values.transpose(), xp.values.transpose(), {y.index}, w, nullptr);
}

namespace {

SoftmaxModel init_model(const TrainingConfig& cfg, int d, int k, Rng& rng) {
  if (cfg.arch == "mlp") return init_mlp(d, cfg.hidden, k, rng);
  MRModel mr;
  mr.W = Eigen::MatrixXd::Zero(k, d);
  mr.b = Eigen::VectorXd::Zero(k);
  return mr;
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

struct Batch {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Batch gather(const LabeledDataset& data, const std::vector<int>& idx, int begin, int end) {
  Batch b;
  b.X.resize(end - begin, data.dim());
  b.y.resize(end - begin);
  for (int i = begin; i < end; ++i) {
    b.X.row(i - begin) = data.features.row(idx[i]);
    b.y[i - begin] = data.labels[idx[i]];
  }
  return b;
}

// Mean cross-entropy with flat parameter gradient.
double ce_and_grad(const SoftmaxModel& m, const Eigen::MatrixXd& X, const std::vector<int>& y,
                   Eigen::VectorXd* grad) {
  ForwardCache cache = forward(m, X);
  const Eigen::Index n = X.rows();
  double nll = 0.0;
  Eigen::MatrixXd dlogits(n, cache.logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    nll += row_lse(cache.logits, i) - cache.logits(i, y[i] - 1);
    dlogits.row(i) = softmax_row(cache.logits, i).transpose();
    dlogits(i, y[i] - 1) -= 1.0;
  }
  nll /= static_cast<double>(n);
  if (grad) {
    dlogits /= static_cast<double>(n);
    *grad = backward_params(m, X, cache, dlogits);
  }
  return nll;
}

}  // namespace

SoftmaxModel baseline_train(const LabeledDataset& data, const TrainingConfig& cfg,
                            std::vector<LossBreakdown>* epoch_log) {
  cfg.validate();
  data.validate();
  if (cfg.mode == TrainMode::ARA)
    throw ConfigError("baseline_train: use sgld_train for ARA mode");
  Rng rng = Rng(cfg.seed).derive(1);
  Rng shuffle_rng = Rng(cfg.seed).derive(2);
  SoftmaxModel model = init_model(cfg, data.dim(), data.k, rng);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(param_count(model));

  LossWeights pair_only;  // ALP pairing penalty reuses the ARA machinery
  pair_only.clean = 0.5;
  pair_only.adv = 0.5;
  pair_only.pair = cfg.weights.pair;
  pair_only.energy = 0.0;
  pair_only.pair_norm = cfg.weights.pair_norm;

  long long iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossBreakdown epoch_bd;
    int batches = 0;
    std::vector<int> order = shuffled_indices(data.n(), shuffle_rng);
    for (int begin = 0; begin < data.n(); begin += cfg.batch_size, ++iteration) {
      const int end = std::min(begin + cfg.batch_size, data.n());
      Batch b = gather(data, order, begin, end);
      Eigen::VectorXd grad;
      LossBreakdown bd;
      if (cfg.mode == TrainMode::Standard) {
        bd.clean_ce = ce_and_grad(model, b.X, b.y, &grad);
        bd.total = bd.clean_ce;
      } else {
        Eigen::MatrixXd Xadv = fgsm_batch(model, b.X, b.y, cfg.fgsm_eps);
        if (cfg.mode == TrainMode::AT) {
          Eigen::VectorXd g_clean, g_adv;
          bd.clean_ce = ce_and_grad(model, b.X, b.y, &g_clean);
          bd.adv_ce = ce_and_grad(model, Xadv, b.y, &g_adv);
          grad = 0.5 * (g_clean + g_adv);
          bd.total = 0.5 * (bd.clean_ce + bd.adv_ce);
        } else {  // ALP
          bd = ara_loss_batch(model, b.X, Xadv, b.y, pair_only, &grad);
        }
      }
      if (!std::isfinite(bd.total))
        throw NumericError("training diverged (NaN loss) at iteration " +
                           std::to_string(iteration));
      velocity = cfg.momentum * velocity - cfg.learning_rate * grad;
      Eigen::VectorXd theta = param_vector(model) + velocity;
      set_params(model, theta);
      epoch_bd.clean_ce += bd.clean_ce;
      epoch_bd.adv_ce += bd.adv_ce;
      epoch_bd.pairing += bd.pairing;
      epoch_bd.energy += bd.energy;
      epoch_bd.total += bd.total;
      ++batches;
    }
    if (epoch_log) {
      epoch_bd.clean_ce /= batches;
      epoch_bd.adv_ce /= batches;
      epoch_bd.pairing /= batches;
      epoch_bd.energy /= batches;
      epoch_bd.total /= batches;
      epoch_log->push_back(epoch_bd);
    }
  }
  return model;
}

ParticleSet sgld_train(const LabeledDataset& data, const TrainingConfig& cfg,
                       std::vector<LossBreakdown>* epoch_log) {
  cfg.validate();
  data.validate();
  if (cfg.mode != TrainMode::ARA) throw ConfigError("sgld_train requires ARA mode");

  Rng init_rng = Rng(cfg.seed).derive(1);
  Rng shuffle_rng = Rng(cfg.seed).derive(2);
  ParticleSet set;
  std::vector<Rng> chain_rng;
  for (int i = 0; i < cfg.particles; ++i) {
    set.particles.push_back(init_model(cfg, data.dim(), data.k, init_rng));
    chain_rng.push_back(Rng(cfg.seed).derive(100 + static_cast<std::uint64_t>(i)));
  }

  // Langevin step on the dataset-summed loss: eta = lr / n. The minibatch
  // mean gradient estimates (1/n) of the summed gradient, so the parameter
  // move is lr * mean-gradient and the noise sd is sqrt(2 * lr / n).
  const double noise_sd =
      cfg.noise_scale * std::sqrt(2.0 * cfg.learning_rate / static_cast<double>(data.n()));

  long long iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossBreakdown epoch_bd;
    int batches = 0;
    std::vector<int> order = shuffled_indices(data.n(), shuffle_rng);
    for (int begin = 0; begin < data.n(); begin += cfg.batch_size, ++iteration) {
      const int end = std::min(begin + cfg.batch_size, data.n());
      Batch b = gather(data, order, begin, end);
      for (int i = 0; i < cfg.particles; ++i) {
        SoftmaxModel& particle = set.particles[i];
        Eigen::MatrixXd Xadv =
            cfg.ara_attack_enabled
                ? sgld_attack_batch(particle, b.X, b.y, cfg.attack_prior, chain_rng[i])
                : b.X;
        Eigen::VectorXd grad;
        LossBreakdown bd = ara_loss_batch(particle, b.X, Xadv, b.y, cfg.weights, &grad);
        if (!std::isfinite(bd.total))
          throw NumericError("ARA training diverged (NaN loss) at iteration " +
                             std::to_string(iteration));
        Eigen::VectorXd theta = param_vector(particle) - cfg.learning_rate * grad;
        if (noise_sd > 0.0)
          for (Eigen::Index j = 0; j < theta.size(); ++j)
            theta[j] += noise_sd * chain_rng[i].normal();
        set_params(particle, theta);
        if (i == 0) {
          epoch_bd.clean_ce += bd.clean_ce;
          epoch_bd.adv_ce += bd.adv_ce;
          epoch_bd.pairing += bd.pairing;
          epoch_bd.energy += bd.energy;
          epoch_bd.total += bd.total;
        }
      }
      ++batches;
    }
    if (epoch_log) {
      epoch_bd.clean_ce /= batches;
      epoch_bd.adv_ce /= batches;
      epoch_bd.pairing /= batches;
      epoch_bd.energy /= batches;
      epoch_bd.total /= batches;
      epoch_log->push_back(epoch_bd);
    }
  }
  return set;
}

namespace {

double mean_negative_lse(const SoftmaxModel& m, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = logits_batch(m, X);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) acc -= log_sum_exp(Z.row(i).transpose());
  return acc / static_cast<double>(Z.rows());
}

}  // namespace

double energy_gap(const SoftmaxModel& m, const Eigen::MatrixXd& clean,
                  const Eigen::MatrixXd& attacked) {
  if (clean.rows() != attacked.rows() || clean.cols() != attacked.cols())
    throw DataError("energy_gap: paired sets must have equal shape");
  if (clean.rows() == 0) throw DataError("energy_gap: empty sets");
  return mean_negative_lse(m, clean) - mean_negative_lse(m, attacked);
}

double energy_gap(const ParticleSet& p, const Eigen::MatrixXd& clean,
                  const Eigen::MatrixXd& attacked) {
  p.validate();
  double acc = 0.0;
  for (const auto& m : p.particles) acc += energy_gap(m, clean, attacked);
  return acc / p.size();
}

DecisionDetail robust_decide(const FeatureVector& xp, const ParticleSet& particles,
                             const UtilityMatrix& u) {
  particles.validate();
  u.validate();
  Eigen::VectorXd mixed = predict_proba(particles, xp);
  if (u.k() != mixed.size()) throw ConfigError("robust_decide: utility matrix size mismatch");
  DecisionDetail out;
  out.psi = u.u * mixed;
  int best = 0;
  for (int i = 1; i < out.psi.size(); ++i)
    if (out.psi[i] > out.psi[best]) best = i;
  out.decision = Label{best + 1};
  return out;
}

}  // namespace aracl

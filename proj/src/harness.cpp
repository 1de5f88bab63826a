#include "aracl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "aracl/core.hpp"

namespace aracl {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
}

// ---- CSV -------------------------------------------------------------------

void CsvSchema::validate() const {
  if (class_names.empty()) throw ConfigError("csv schema: class list is empty");
  if (bad_count < 0 || bad_count > static_cast<int>(class_names.size()))
    throw ConfigError("csv schema: bad class count out of range");
  if (label_column.empty()) throw ConfigError("csv schema: label column name is empty");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

LabeledDataset load_csv_dataset(const std::string& path, const CsvSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw DataError(path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  int label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == schema.label_column) label_col = static_cast<int>(i);
  if (label_col < 0) throw DataError(path + ": missing label column '" + schema.label_column + "'");
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw DataError(path + ": no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> tokens = split_csv_line(line);
    if (tokens.size() != header.size())
      throw DataError(path + ": line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(tokens.size()));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (static_cast<int>(i) == label_col) {
        int idx = -1;
        for (std::size_t c = 0; c < schema.class_names.size(); ++c)
          if (tokens[i] == schema.class_names[c]) idx = static_cast<int>(c) + 1;
        if (idx < 0)
          throw DataError(path + ": line " + std::to_string(line_no) + ": unknown label '" +
                          tokens[i] + "'");
        labels.push_back(idx);
      } else {
        if (tokens[i] == "0")
          values.push_back(0.0);
        else if (tokens[i] == "1")
          values.push_back(1.0);
        else
          throw DataError(path + ": line " + std::to_string(line_no) +
                          ": non-binary value '" + tokens[i] + "' in column '" + header[i] + "'");
      }
    }
  }
  if (labels.empty()) throw DataError(path + ": no data rows");

  LabeledDataset data;
  data.domain = Domain::Binary;
  data.k = static_cast<int>(schema.class_names.size());
  data.l = schema.bad_count;
  data.labels = std::move(labels);
  data.features.resize(static_cast<Eigen::Index>(data.labels.size()), d);
  for (Eigen::Index i = 0; i < data.features.rows(); ++i)
    for (int j = 0; j < d; ++j) data.features(i, j) = values[i * d + j];
  data.validate();
  return data;
}

void save_csv_dataset(const LabeledDataset& data, const CsvSchema& schema,
                      const std::string& path) {
  schema.validate();
  data.validate();
  if (data.domain != Domain::Binary) throw DataError("csv datasets are binary-only");
  if (data.k != static_cast<int>(schema.class_names.size()))
    throw ConfigError("csv schema class count does not match dataset");
  std::ostringstream out;
  for (int j = 0; j < data.dim(); ++j) out << 'f' << (j + 1) << ',';
  out << schema.label_column << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.dim(); ++j)
      out << (data.features(i, j) != 0.0 ? '1' : '0') << ',';
    out << schema.class_names[data.labels[i] - 1] << '\n';
  }
  write_text_file(path, out.str());
}

Eigen::MatrixXd load_csv_features(const std::string& path, Domain domain) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw DataError(path + ": empty file");
  const int d = static_cast<int>(split_csv_line(line).size());
  std::vector<double> values;
  int line_no = 1, rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> tokens = split_csv_line(line);
    if (static_cast<int>(tokens.size()) != d)
      throw DataError(path + ": line " + std::to_string(line_no) + ": field count mismatch");
    for (const auto& t : tokens) {
      double v = 0.0;
      auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw DataError(path + ": line " + std::to_string(line_no) + ": bad number '" + t + "'");
      if (domain == Domain::Binary && v != 0.0 && v != 1.0)
        throw DataError(path + ": line " + std::to_string(line_no) + ": non-binary value");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw DataError(path + ": no data rows");
  Eigen::MatrixXd X(rows, d);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = values[static_cast<std::size_t>(i) * d + j];
  return X;
}

// ---- IDX -------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError(path + ": truncated header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(b), 4);
}

}  // namespace

LabeledDataset load_idx_images(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw DataError("cannot open file: " + images_path);
  if (read_be32(imgs, images_path) != 0x00000803u)
    throw DataError(images_path + ": bad magic number for an IDX image file");
  const std::uint32_t n = read_be32(imgs, images_path);
  const std::uint32_t rows = read_be32(imgs, images_path);
  const std::uint32_t cols = read_be32(imgs, images_path);
  const std::size_t pixels = std::size_t(n) * rows * cols;
  std::vector<unsigned char> buf(pixels);
  imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
  if (static_cast<std::size_t>(imgs.gcount()) != pixels)
    throw DataError(images_path + ": truncated pixel payload");

  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw DataError("cannot open file: " + labels_path);
  if (read_be32(labs, labels_path) != 0x00000801u)
    throw DataError(labels_path + ": bad magic number for an IDX label file");
  const std::uint32_t nl = read_be32(labs, labels_path);
  if (nl != n)
    throw DataError("IDX image/label count mismatch: " + std::to_string(n) + " vs " +
                    std::to_string(nl));
  std::vector<unsigned char> lab(n);
  labs.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(labs.gcount()) != n)
    throw DataError(labels_path + ": truncated label payload");

  LabeledDataset data;
  data.domain = Domain::UnitInterval;
  data.l = 0;
  const int d = static_cast<int>(rows * cols);
  data.features.resize(n, d);
  for (std::uint32_t i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      data.features(i, j) = buf[std::size_t(i) * d + j] / 255.0;
  data.labels.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    data.labels[i] = int(lab[i]) + 1;  // 1-based classes
    max_label = std::max(max_label, data.labels[i]);
  }
  data.k = max_label;
  data.validate();
  return data;
}

void save_idx_images(const LabeledDataset& data, int rows, int cols,
                     const std::string& images_path, const std::string& labels_path) {
  data.validate();
  if (rows * cols != data.dim()) throw ConfigError("save_idx_images: rows*cols != dimension");
  std::ofstream imgs(images_path, std::ios::binary);
  if (!imgs) throw DataError("cannot write file: " + images_path);
  write_be32(imgs, 0x00000803u);
  write_be32(imgs, static_cast<std::uint32_t>(data.n()));
  write_be32(imgs, static_cast<std::uint32_t>(rows));
  write_be32(imgs, static_cast<std::uint32_t>(cols));
  for (int i = 0; i < data.n(); ++i)
    for (int j = 0; j < data.dim(); ++j) {
      const unsigned char b =
          static_cast<unsigned char>(std::lround(data.features(i, j) * 255.0));
      imgs.put(static_cast<char>(b));
    }
  std::ofstream labs(labels_path, std::ios::binary);
  if (!labs) throw DataError("cannot write file: " + labels_path);
  write_be32(labs, 0x00000801u);
  write_be32(labs, static_cast<std::uint32_t>(data.n()));
  for (int i = 0; i < data.n(); ++i)
    labs.put(static_cast<char>(data.labels[i] - 1));
}

// ---- Synthetic tabular ------------------------------------------------------

void SyntheticTabularSpec::validate() const {
  if (d < 1 || k < 1 || l < 0 || l > k || rows < 1)
    throw ConfigError("synthetic spec: invalid shape");
  if (class_means.rows() != k || class_means.cols() != d)
    throw ConfigError("synthetic spec: class_means must be k x d");
  for (Eigen::Index i = 0; i < class_means.rows(); ++i)
    for (Eigen::Index j = 0; j < class_means.cols(); ++j)
      if (!(class_means(i, j) > 0.0 && class_means(i, j) < 1.0))
        throw ConfigError("synthetic spec: class means must lie in (0,1)");
  if (priors.size() != k) throw ConfigError("synthetic spec: priors must have k entries");
  if (std::abs(priors.sum() - 1.0) > 1e-9 || priors.minCoeff() < 0.0)
    throw ConfigError("synthetic spec: priors must be a distribution");
}

SyntheticTabularSpec SyntheticTabularSpec::blocks(int d, int k, int l, int rows, double baseline,
                                                  double signature, int signature_width,
                                                  double good_fraction) {
  SyntheticTabularSpec s;
  s.d = d;
  s.k = k;
  s.l = l;
  s.rows = rows;
  s.class_means = Eigen::MatrixXd::Constant(k, d, baseline);
  const int stride = std::max(1, signature_width - 2);  // adjacent blocks overlap by 2
  for (int c = 0; c < l; ++c) {
    int start = std::min(c * stride, std::max(0, d - signature_width));
    for (int j = start; j < std::min(d, start + signature_width); ++j)
      s.class_means(c, j) = signature;
  }
  s.priors.resize(k);
  const int good = k - l;
  for (int c = 0; c < k; ++c)
    s.priors[c] = c < l ? (1.0 - good_fraction) / std::max(1, l) : good_fraction / std::max(1, good);
  s.priors /= s.priors.sum();
  return s;
}

LabeledDataset generate_synthetic(const SyntheticTabularSpec& spec, Rng& rng) {
  spec.validate();
  LabeledDataset data;
  data.domain = Domain::Binary;
  data.k = spec.k;
  data.l = spec.l;
  data.features.resize(spec.rows, spec.d);
  data.labels.resize(spec.rows);
  for (int i = 0; i < spec.rows; ++i) {
    const int c = rng.categorical(spec.priors.data(), spec.k);
    data.labels[i] = c + 1;
    for (int j = 0; j < spec.d; ++j)
      data.features(i, j) = rng.uniform() < spec.class_means(c, j) ? 1.0 : 0.0;
  }
  return data;
}

// ---- Protocols ---------------------------------------------------------------

std::vector<std::pair<std::vector<int>, std::vector<int>>> repeated_holdout(
    int n, double split, int repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw ConfigError("repeated_holdout: repetitions must be >= 1");
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("repeated_holdout: split must lie in (0,1)");
  const int n_train = static_cast<int>(std::floor(split * n));
  if (n_train < 1 || n_train >= n) throw DataError("repeated_holdout: dataset too small to split");
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  Rng base(seed);
  for (int r = 0; r < repetitions; ++r) {
    Rng rng = base.derive(static_cast<std::uint64_t>(r));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(idx[i], idx[j]);
    }
    out.emplace_back(std::vector<int>(idx.begin(), idx.begin() + n_train),
                     std::vector<int>(idx.begin() + n_train, idx.end()));
  }
  return out;
}

LabeledDataset subset(const LabeledDataset& data, const std::vector<int>& idx) {
  LabeledDataset out;
  out.domain = data.domain;
  out.k = data.k;
  out.l = data.l;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), data.dim());
  out.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(idx[i]);
    out.labels[i] = data.labels[idx[i]];
  }
  return out;
}

AttackerConfig default_eval_attacker() {
  AttackerConfig cfg;
  cfg.prob.worst_case = true;
  cfg.prob.exact_mean = true;
  cfg.utilities.default_entry = AttackerUtilitySpec::Entry::fixed(0.7);
  cfg.rho = 1;
  return cfg;
}

AttackerConfig default_sim_attacker() {
  AttackerConfig cfg;
  cfg.prob.worst_case = false;
  cfg.prob.exact_mean = true;
  cfg.prob.variance_fraction = 0.1;
  cfg.utilities.default_entry = AttackerUtilitySpec::Entry::beta_around(0.7, 0.1);
  cfg.rho = 1;
  return cfg;
}

DefenceKind defence_from_string(const std::string& s) {
  if (s == "raw") return DefenceKind::Raw;
  if (s == "heuristic-uniform") return DefenceKind::HeuristicUniform;
  if (s == "heuristic-inverse-distance") return DefenceKind::HeuristicInverseDistance;
  if (s == "abacra") return DefenceKind::Abacra;
  if (s == "robust-particles") return DefenceKind::RobustParticles;
  throw ConfigError("unknown defence '" + s + "'");
}

std::string to_string(DefenceKind d) {
  switch (d) {
    case DefenceKind::Raw: return "raw";
    case DefenceKind::HeuristicUniform: return "heuristic-uniform";
    case DefenceKind::HeuristicInverseDistance: return "heuristic-inverse-distance";
    case DefenceKind::Abacra: return "abacra";
    case DefenceKind::RobustParticles: return "robust-particles";
  }
  return "raw";
}

void TabularProtocolConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("protocol: split must lie in (0,1)");
  if (repetitions < 1) throw ConfigError("protocol: repetitions must be >= 1");
  if (l1_strength < 0.0) throw ConfigError("protocol: negative l1_strength");
  if (summary_count < 1) throw ConfigError("protocol: summary_count must be >= 1");
  if (abc_tol < 0 || abc_n < 1 || abc_budget < 1) throw ConfigError("protocol: ABC parameters");
}

namespace {

// Predictive with a memo over packed binary inputs; only used when d <= 64.
Predictive cached_predictive(const MRModel& m) {
  auto cache = std::make_shared<std::unordered_map<std::uint64_t, Eigen::VectorXd>>();
  SoftmaxModel model = m;
  return [cache, model](const FeatureVector& x) {
    if (x.domain != Domain::Binary || x.dim() > 64) return predict_proba(model, x);
    const std::uint64_t key = pack_bits(x);
    auto it = cache->find(key);
    if (it != cache->end()) return it->second;
    Eigen::VectorXd p = predict_proba(model, x);
    cache->emplace(key, p);
    return p;
  };
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

EvalSummary evaluate_under_attack(const LabeledDataset& data, const TabularProtocolConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.domain != Domain::Binary)
    throw DataError("evaluate_under_attack runs on the binary tabular track");

  const int k = data.k;
  const int l = data.l;
  const UtilityMatrix utility = UtilityMatrix::zero_one(k);
  auto holdouts = repeated_holdout(data.n(), cfg.split, cfg.repetitions, cfg.seed);

  EvalSummary out;
  Rng base(cfg.seed);
  for (int r = 0; r < cfg.repetitions; ++r) {
    const auto& [train_idx, test_idx] = holdouts[r];
    LabeledDataset train = subset(data, train_idx);
    LabeledDataset test = subset(data, test_idx);

    MRModel mr = fit_map_multinomial(train, cfg.l1_strength, cfg.fit);
    Predictive pred = cached_predictive(mr);

    FeatureModel px;
    std::vector<int> summaries;
    if (cfg.defence == DefenceKind::Abacra) {
      px = fit_feature_model(train, cfg.feature_kind, cfg.smoothing);
      summaries = select_summary_features(mr, std::min(cfg.summary_count, data.dim()));
    }
    ParticleSet particles;
    if (cfg.defence == DefenceKind::RobustParticles) {
      TrainingConfig tc = cfg.particle_training;
      tc.mode = TrainMode::ARA;
      tc.seed = Rng(cfg.seed).derive(500 + static_cast<std::uint64_t>(r)).seed();
      LabeledDataset relaxed = train;
      relaxed.domain = Domain::UnitInterval;
      particles = sgld_train(relaxed, tc);
    }

    MeanCache eval_cache, sim_cache;
    Rng rep_rng = base.derive(10000ULL * (r + 1));

    int correct = 0;
    for (int i = 0; i < test.n(); ++i) {
      FeatureVector x = test.instance(i);
      const Label y = test.label(i);
      FeatureVector observed = x;
      if (cfg.attack_enabled && is_bad(y, l)) {
        Rng atk_rng = rep_rng.derive(2ULL * i);
        observed =
            sample_attack(x, y, cfg.eval_attacker, pred, k, l, atk_rng, &eval_cache).attacked;
      }

      Label decision{1};
      switch (cfg.defence) {
        case DefenceKind::Raw:
          decision = robust_classify({observed}, pred, utility).decision;
          break;
        case DefenceKind::HeuristicUniform:
        case DefenceKind::HeuristicInverseDistance: {
          const auto kind = cfg.defence == DefenceKind::HeuristicUniform
                                ? OriginHeuristicKind::Uniform
                                : OriginHeuristicKind::InverseDistance;
          Neighborhood ball = cfg.sim_attacker.neighborhood_of(observed);
          OriginDistribution origins =
              heuristic_origin(observed, ball.radius, ball.mask, kind);
          decision = robust_classify(origins, pred, utility).decision;
          break;
        }
        case DefenceKind::Abacra: {
          Rng abc_rng = rep_rng.derive(2ULL * i + 1);
          ABCConfig abc;
          abc.summary_indices = summaries;
          abc.tol = cfg.abc_tol;
          abc.n_samples = cfg.abc_n;
          abc.max_proposals = cfg.abc_budget;
          AttackKernel kernel = [&](const FeatureVector& xo, Label yo, Rng& rng) {
            return sample_attack(xo, yo, cfg.sim_attacker, pred, k, l, rng, &sim_cache).attacked;
          };
          ++out.abc_decisions;
          try {
            ABCResult res = abc_sample_origin(observed, px, pred, k, l, kernel, abc, abc_rng);
            out.abc_proposals += res.proposals;
            decision = robust_classify(res.samples, pred, utility).decision;
          } catch (const BudgetExhausted& e) {
            ++out.abc_failures;
            out.abc_proposals += e.proposals_used;
            decision = robust_classify({observed}, pred, utility).decision;
          }
          break;
        }
        case DefenceKind::RobustParticles:
          decision =
              robust_decide(FeatureVector(observed.values, Domain::UnitInterval), particles,
                            utility)
                  .decision;
          break;
      }
      if (decision.index == y.index) ++correct;
    }
    out.per_rep_accuracy.push_back(static_cast<double>(correct) / test.n());
  }

  out.mean_accuracy =
      std::accumulate(out.per_rep_accuracy.begin(), out.per_rep_accuracy.end(), 0.0) /
      out.per_rep_accuracy.size();
  out.std_accuracy = sample_std(out.per_rep_accuracy, out.mean_accuracy);
  return out;
}

// ---- Security curves ----------------------------------------------------------

Eigen::MatrixXd defender_proba_batch(const Defender& d, const Eigen::MatrixXd& X) {
  return std::visit([&X](const auto& m) { return predict_proba_batch(m, X); }, d);
}

double defender_accuracy(const Defender& d, const Eigen::MatrixXd& X,
                         const std::vector<int>& labels) {
  Eigen::MatrixXd P = defender_proba_batch(d, X);
  int correct = 0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < P.cols(); ++c)
      if (P(i, c) > P(i, best)) best = c;
    if (best + 1 == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(P.rows());
}

namespace {

Eigen::MatrixXd attack_batch(const Defender& d, const std::string& attack,
                             const Eigen::MatrixXd& X, const std::vector<int>& labels,
                             double eps, const CurveAttackConfig& cfg) {
  if (attack == "fgsm")
    return std::visit([&](const auto& m) { return fgsm_batch(m, X, labels, eps); }, d);
  if (attack == "pgd")
    return std::visit(
        [&](const auto& m) {
          return pgd_batch(m, X, labels, eps, cfg.pgd_steps, cfg.pgd_alpha, cfg.pgd_norm);
        },
        d);
  throw ConfigError("unknown attack '" + attack + "'");
}

}  // namespace

CurveTable security_curve(const std::vector<CurveDefence>& defences,
                          const std::vector<std::string>& attacks,
                          const std::vector<double>& eps_grid, const LabeledDataset& test,
                          const CurveAttackConfig& cfg) {
  if (defences.empty() || attacks.empty() || eps_grid.empty())
    throw ConfigError("security_curve: empty defence/attack/eps inputs");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (eps_grid[i] < eps_grid[i - 1])
      throw ConfigError("security_curve: eps grid must be sorted ascending");
  test.validate();

  CurveTable table;
  for (double eps : eps_grid) {
    for (const auto& defence : defences) {
      if (defence.reps.empty()) throw ConfigError("security_curve: defence with no models");
      for (const auto& attack : attacks) {
        std::vector<double> accs;
        for (const auto& defender : defence.reps) {
          Eigen::MatrixXd Xadv =
              eps == 0.0 ? test.features
                         : attack_batch(defender, attack, test.features, test.labels, eps, cfg);
          accs.push_back(defender_accuracy(defender, Xadv, test.labels));
        }
        const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
        table.push_back({eps, defence.name, attack, mean, sample_std(accs, mean)});
      }
    }
  }
  return table;
}

std::string curve_to_csv(const CurveTable& t) {
  std::ostringstream out;
  out << "eps,defence,attack,mean_accuracy,std_accuracy\n";
  for (const auto& row : t)
    out << format_double(row.eps) << ',' << row.defence << ',' << row.attack << ','
        << format_double(row.mean_accuracy) << ',' << format_double(row.std_accuracy) << '\n';
  return out.str();
}

// ---- Experiment configuration ---------------------------------------------------

void ExperimentConfig::validate() const {
  const int sources = (csv_path.empty() ? 0 : 1) + (idx_images.empty() ? 0 : 1) +
                      (has_synthetic ? 1 : 0);
  if (sources != 1) throw ConfigError("experiment config: exactly one dataset source required");
  protocol.validate();
  if (!eps_grid.empty()) {
    if (eps_grid.front() != 0.0) throw ConfigError("experiment config: eps grid must start at 0");
    for (std::size_t i = 1; i < eps_grid.size(); ++i)
      if (eps_grid[i] <= eps_grid[i - 1])
        throw ConfigError("experiment config: eps grid must be strictly ascending");
  }
}

namespace {

AttackerConfig attacker_from_subjson(const json& j) {
  return attacker_config_from_json(j.dump());
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("experiment config: malformed JSON");
  ExperimentConfig cfg;

  const auto& ds = doc.at("dataset");
  if (ds.contains("csv")) {
    cfg.csv_path = ds.at("csv").get<std::string>();
    const auto& schema = ds.at("schema");
    cfg.csv_schema.label_column = schema.value("label_column", "label");
    cfg.csv_schema.class_names = schema.at("classes").get<std::vector<std::string>>();
    cfg.csv_schema.bad_count = schema.at("bad").get<int>();
  } else if (ds.contains("idx")) {
    cfg.idx_images = ds.at("idx").at("images").get<std::string>();
    cfg.idx_labels = ds.at("idx").at("labels").get<std::string>();
  } else if (ds.contains("synthetic")) {
    cfg.has_synthetic = true;
    const auto& syn = ds.at("synthetic");
    const int d = syn.value("d", 20);
    const int k = syn.value("k", 4);
    const int l = syn.value("l", 3);
    const int rows = syn.value("rows", 4000);
    if (syn.contains("class_means")) {
      SyntheticTabularSpec s;
      s.d = d;
      s.k = k;
      s.l = l;
      s.rows = rows;
      const auto means = syn.at("class_means").get<std::vector<std::vector<double>>>();
      if (static_cast<int>(means.size()) != k)
        throw ConfigError("experiment config: class_means must have k rows");
      s.class_means.resize(k, d);
      for (int c = 0; c < k; ++c) {
        if (static_cast<int>(means[c].size()) != d)
          throw ConfigError("experiment config: class_means row length mismatch");
        for (int j = 0; j < d; ++j) s.class_means(c, j) = means[c][j];
      }
      const auto priors = syn.at("priors").get<std::vector<double>>();
      if (static_cast<int>(priors.size()) != k)
        throw ConfigError("experiment config: priors length mismatch");
      s.priors = Eigen::Map<const Eigen::VectorXd>(priors.data(), k);
      cfg.synthetic = s;
    } else {
      cfg.synthetic = SyntheticTabularSpec::blocks(
          d, k, l, rows, syn.value("baseline", 0.2), syn.value("signature", 0.7),
          syn.value("signature_width", 5), syn.value("good_fraction", 0.5));
    }
  } else {
    throw ConfigError("experiment config: dataset must be csv, idx or synthetic");
  }

  if (doc.contains("protocol")) {
    const auto& p = doc.at("protocol");
    auto& proto = cfg.protocol;
    proto.split = p.value("split", proto.split);
    proto.repetitions = p.value("repetitions", proto.repetitions);
    proto.seed = p.value("seed", proto.seed);
    proto.l1_strength = p.value("l1_strength", proto.l1_strength);
    proto.attack_enabled = p.value("attack_enabled", proto.attack_enabled);
    if (p.contains("defence")) proto.defence = defence_from_string(p.at("defence"));
    proto.summary_count = p.value("summary_count", proto.summary_count);
    proto.abc_tol = p.value("abc_tol", proto.abc_tol);
    proto.abc_n = p.value("abc_n", proto.abc_n);
    proto.abc_budget = p.value("abc_budget", proto.abc_budget);
    if (p.contains("feature_model"))
      proto.feature_kind = p.at("feature_model").get<std::string>() == "empirical"
                               ? FeatureModel::Kind::Empirical
                               : FeatureModel::Kind::ProductBernoulli;
    proto.smoothing = p.value("smoothing", proto.smoothing);
    if (p.contains("eval_attacker")) proto.eval_attacker = attacker_from_subjson(p.at("eval_attacker"));
    if (p.contains("sim_attacker")) proto.sim_attacker = attacker_from_subjson(p.at("sim_attacker"));
  }
  if (doc.contains("eps_grid")) cfg.eps_grid = doc.at("eps_grid").get<std::vector<double>>();
  cfg.validate();
  return cfg;
}

LabeledDataset load_experiment_dataset(const ExperimentConfig& cfg, Rng& rng) {
  if (!cfg.csv_path.empty()) return load_csv_dataset(cfg.csv_path, cfg.csv_schema);
  if (!cfg.idx_images.empty()) return load_idx_images(cfg.idx_images, cfg.idx_labels);
  return generate_synthetic(cfg.synthetic, rng);
}

}  // namespace aracl

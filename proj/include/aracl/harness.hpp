#ifndef ARACL_HARNESS_HPP_
#define ARACL_HARNESS_HPP_

#include <Eigen/Core>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "aracl/abacra.hpp"
#include "aracl/attacker.hpp"
#include "aracl/classifiers.hpp"
#include "aracl/gradient_attacks.hpp"
#include "aracl/robust_train.hpp"
#include "aracl/types.hpp"

namespace aracl {

// ---- Text / number formatting --------------------------------------------

// Shortest decimal form that parses back to the same double; keeps output
// tables byte-stable across runs.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// ---- Dataset I/O ----------------------------------------------------------

struct CsvSchema {
  std::string label_column = "label";
  std::vector<std::string> class_names;  // declared class order, bad classes first
  int bad_count = 0;

  void validate() const;
};

// Header row required: feature columns plus the label column. Binary values
// must be literal 0/1; violations are reported with their line number.
LabeledDataset load_csv_dataset(const std::string& path, const CsvSchema& schema);
void save_csv_dataset(const LabeledDataset& data, const CsvSchema& schema,
                      const std::string& path);
// Feature-only CSV (no label column): rows to classify.
Eigen::MatrixXd load_csv_features(const std::string& path, Domain domain);

// IDX containers (big-endian): images magic 0x00000803, labels 0x00000801.
// Pixels scale to [0,1] by /255; label byte b maps to class b+1.
LabeledDataset load_idx_images(const std::string& images_path, const std::string& labels_path);
void save_idx_images(const LabeledDataset& data, int rows, int cols,
                     const std::string& images_path, const std::string& labels_path);

// ---- Synthetic tabular data ------------------------------------------------

struct SyntheticTabularSpec {
  int d = 20;
  int k = 4;
  int l = 3;
  int rows = 4000;
  Eigen::MatrixXd class_means;  // k x d, each in (0,1)
  Eigen::VectorXd priors;       // k, sums to 1

  void validate() const;

  // Overlapping per-class signature blocks over a low baseline; bad classes
  // share half the signature mass, the good class stays at baseline. Priors
  // split evenly over bad classes with `good_fraction` on the good ones.
  static SyntheticTabularSpec blocks(int d, int k, int l, int rows, double baseline = 0.2,
                                     double signature = 0.7, int signature_width = 5,
                                     double good_fraction = 0.5);
};

LabeledDataset generate_synthetic(const SyntheticTabularSpec& spec, Rng& rng);

// ---- Protocols --------------------------------------------------------------

// Independent seeded shuffles; train/test disjoint and exhaustive per pair.
std::vector<std::pair<std::vector<int>, std::vector<int>>> repeated_holdout(
    int n, double split, int repetitions, std::uint64_t seed);

LabeledDataset subset(const LabeledDataset& data, const std::vector<int>& idx);

enum class DefenceKind { Raw, HeuristicUniform, HeuristicInverseDistance, Abacra,
                         RobustParticles };

DefenceKind defence_from_string(const std::string& s);
std::string to_string(DefenceKind d);

// Default evaluation attacker: deterministic worst case (exact means, fixed
// utility 0.7), single-feature attacks.
AttackerConfig default_eval_attacker();
// Default simulation attacker: the defender's uncertain copy, Beta draws
// around the same utilities and candidate means (variance 10% of the
// concavity bound).
AttackerConfig default_sim_attacker();

struct TabularProtocolConfig {
  double split = 0.8;
  int repetitions = 10;
  std::uint64_t seed = 0;

  double l1_strength = 1.0;
  MRFitConfig fit;

  AttackerConfig eval_attacker = default_eval_attacker();
  AttackerConfig sim_attacker = default_sim_attacker();
  bool attack_enabled = true;

  DefenceKind defence = DefenceKind::Raw;
  int summary_count = 12;
  int abc_tol = 1;
  int abc_n = 5;
  long long abc_budget = 50'000;
  FeatureModel::Kind feature_kind = FeatureModel::Kind::ProductBernoulli;
  double smoothing = 1.0;

  TrainingConfig particle_training;  // RobustParticles defence only

  void validate() const;
};

struct EvalSummary {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> per_rep_accuracy;
  long long abc_decisions = 0;
  long long abc_failures = 0;  // budget exhausted, fell back to the raw decision
  long long abc_proposals = 0;
};

// Repeated hold-out: fit the defender per repetition, attack every bad-class
// test instance with the evaluation attacker (good instances pass through),
// decide with the configured defence, report accuracy mean/std.
EvalSummary evaluate_under_attack(const LabeledDataset& data, const TabularProtocolConfig& cfg);

// ---- Security evaluation curves ---------------------------------------------

using Defender = std::variant<SoftmaxModel, ParticleSet>;

Eigen::MatrixXd defender_proba_batch(const Defender& d, const Eigen::MatrixXd& X);
double defender_accuracy(const Defender& d, const Eigen::MatrixXd& X,
                         const std::vector<int>& labels);

struct CurveDefence {
  std::string name;
  std::vector<Defender> reps;  // one defender per repetition
};

struct CurveAttackConfig {
  int pgd_steps = 10;
  double pgd_alpha = 0.0;  // <= 0 selects 2.5 * eps / steps
  AttackNorm pgd_norm = AttackNorm::LInf;
};

struct CurveRow {
  double eps;
  std::string defence;
  std::string attack;
  double mean_accuracy;
  double std_accuracy;
};

using CurveTable = std::vector<CurveRow>;

// Full (eps x defence x attack) cross product; attacks are white-box against
// each defender. eps = 0 rows equal clean accuracy exactly.
CurveTable security_curve(const std::vector<CurveDefence>& defences,
                          const std::vector<std::string>& attacks,
                          const std::vector<double>& eps_grid, const LabeledDataset& test,
                          const CurveAttackConfig& cfg = {});

std::string curve_to_csv(const CurveTable& t);

// ---- Experiment configuration (CLI) ----------------------------------------

struct ExperimentConfig {
  // dataset source: exactly one of csv / idx pair / synthetic
  std::string csv_path;
  CsvSchema csv_schema;
  std::string idx_images, idx_labels;
  bool has_synthetic = false;
  SyntheticTabularSpec synthetic;

  TabularProtocolConfig protocol;
  std::vector<double> eps_grid;  // curves; sorted ascending from 0

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const std::string& text);
LabeledDataset load_experiment_dataset(const ExperimentConfig& cfg, Rng& rng);

}  // namespace aracl

#endif  // ARACL_HARNESS_HPP_

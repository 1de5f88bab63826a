#ifndef ARACL_TYPES_HPP_
#define ARACL_TYPES_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aracl/errors.hpp"

namespace aracl {

// Feature domains. Binary vectors hold exact 0/1 values stored as doubles so
// the same container serves the tabular and the image track.
enum class Domain { Binary, UnitInterval };

struct FeatureVector {
  Eigen::VectorXd values;
  Domain domain = Domain::Binary;

  FeatureVector() = default;
  FeatureVector(Eigen::VectorXd v, Domain d) : values(std::move(v)), domain(d) {}

  int dim() const { return static_cast<int>(values.size()); }

  bool operator==(const FeatureVector& o) const {
    return domain == o.domain && values.size() == o.values.size() && values == o.values;
  }

  // Throws DataError if a coordinate falls outside the tagged domain.
  void validate() const;
};

// 1-based class index. Classes 1..l are "bad", l+1..k are "good".
struct Label {
  int index = 1;
};

inline bool is_bad(Label y, int l) { return y.index <= l; }

struct LabeledDataset {
  Eigen::MatrixXd features;  // one row per instance
  std::vector<int> labels;   // 1-based, in 1..k
  Domain domain = Domain::Binary;
  int k = 2;  // class count
  int l = 0;  // bad-class count (first l classes)

  int n() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }

  FeatureVector instance(int i) const {
    return FeatureVector(features.row(i).transpose(), domain);
  }
  Label label(int i) const { return Label{labels[i]}; }

  // Checks shape agreement, label ranges and domain membership of every row.
  void validate() const;
};

// u(row = decision y_C, col = truth y_i).
struct UtilityMatrix {
  Eigen::MatrixXd u;

  int k() const { return static_cast<int>(u.rows()); }

  static UtilityMatrix zero_one(int k) {
    UtilityMatrix m;
    m.u = Eigen::MatrixXd::Identity(k, k);
    return m;
  }

  void validate() const;
};

// Hamming ball around a binary center, restricted to the mutable features in
// `mask` (0-based indices). Enumeration includes the center itself.
struct Neighborhood {
  FeatureVector center;
  int radius = 0;
  std::vector<int> mask;  // 0-based feature indices that may be flipped

  static Neighborhood full_mask(FeatureVector center, int radius);
};

// Discrete distribution over candidate feature vectors.
struct OriginDistribution {
  std::vector<FeatureVector> support;
  Eigen::VectorXd weights;  // sums to 1

  int size() const { return static_cast<int>(support.size()); }
  void validate() const;
};

enum class OriginHeuristicKind { Uniform, InverseDistance };

// Class-probability map of a fitted defender: x -> p(y | x), length k.
using Predictive = std::function<Eigen::VectorXd(const FeatureVector&)>;

// Outcome of an expected-utility decision rule.
struct DecisionDetail {
  Label decision;
  Eigen::VectorXd psi;  // expected utility per decision class
};

}  // namespace aracl

#endif  // ARACL_TYPES_HPP_

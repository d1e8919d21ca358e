#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "tabshift/data.hpp"
#include "tabshift/gmm.hpp"

namespace tabshift {

// Continuous column encoding: a mode scalar alpha plus a one-hot mode block.
// alpha standardizes the value within the selected mixture mode, divided by
// four standard deviations so that +-4 sigma of data lands inside [-1, 1].
struct ContinuousTransform {
  GaussianMixtureModel gmm;
  double alpha_clip = 1.0;
};

struct CategoricalTransform {
  int n_categories = 0;
};

struct ColumnSpan {
  int offset = 0;
  int width = 0;
  ColumnKind kind = ColumnKind::continuous;
};

struct TransformConfig {
  EmConfig em;
  double alpha_clip = 1.0;
  // Select the encoding mode by highest responsibility instead of sampling.
  bool deterministic_modes = false;
};

// Reversible row <-> encoded-vector mapping. Continuous columns map to
// [alpha, beta one-hot], categorical columns to a one-hot block; spans are
// laid out in schema order and cover [0, width) without gaps.
class TableTransformer {
 public:
  TableTransformer() = default;

  static TableTransformer fit(const Dataset& ds, const TransformConfig& config, std::uint64_t seed);

  const TableSchema& schema() const { return schema_; }
  const TransformConfig& config() const { return config_; }
  int width() const { return width_; }
  const ColumnSpan& span(int col) const { return spans_.at(static_cast<std::size_t>(col)); }
  const std::vector<ColumnSpan>& spans() const { return spans_; }
  // The fitted mixture for a continuous column (by schema index).
  const ContinuousTransform& continuous_transform(int col) const;

  Eigen::VectorXd encode_row(const Row& row, std::mt19937_64& rng) const;
  Eigen::MatrixXd encode_dataset(const Dataset& ds, std::mt19937_64& rng) const;

  // Hardens beta and categorical blocks by argmax, then inverts the
  // mode-specific normalization. Clipped alphas decode to the clip boundary.
  Row decode_row(const Eigen::VectorXd& encoded) const;
  Dataset decode_rows(const Eigen::MatrixXd& encoded, DatasetRole role) const;

  // Rebuild from persisted parts; spans are recomputed and checked.
  static TableTransformer from_parts(TableSchema schema, TransformConfig config,
                                     std::vector<ContinuousTransform> continuous);

 private:
  TableSchema schema_;
  TransformConfig config_;
  std::vector<ColumnSpan> spans_;              // per schema column
  std::vector<int> cont_index_;                // schema col -> index into continuous_, or -1
  std::vector<ContinuousTransform> continuous_;
  int width_ = 0;

  void build_spans();
};

}  // namespace tabshift

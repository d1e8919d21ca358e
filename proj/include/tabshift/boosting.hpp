#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "tabshift/data.hpp"

namespace tabshift {

// Smoothed mean target encoding for categorical features. Fitted per
// categorical column; continuous columns pass through unchanged. The target
// column itself is never part of the feature space.
struct TargetEncoder {
  struct Column {
    int schema_index = -1;
    bool categorical = false;
    std::vector<double> encodings;  // per category index (categorical only)
  };

  double prior = 10.0;
  double global_rate = 0.5;
  std::vector<Column> columns;  // feature columns in schema order

  int feature_width() const { return static_cast<int>(columns.size()); }
  // Encoded value of a category in the given feature column; out-of-range
  // categories fall back to the global rate.
  double encode(int feature_col, int category) const;
};

// Per-category smoothed means (sum_y + prior * global_rate) / (count + prior),
// computed from the given rows only. Unseen categories decay to global_rate.
TargetEncoder fit_target_encoder(const Dataset& ds, const Eigen::VectorXd& labels,
                                 double prior = 10.0);

// Numeric feature matrix: continuous columns as-is, categorical columns
// target-encoded, the schema's target column excluded.
Eigen::MatrixXd build_features(const Dataset& ds, const TargetEncoder& encoder);

struct GbdtConfig {
  int n_trees = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 5;
  double l2 = 1.0;  // ridge term in leaf values
};

// Axis-aligned regression tree; nodes with feature < 0 are leaves. Rows with
// feature value <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

// Gradient-boosted trees for binary classification with logistic loss.
// Trees fit residuals (label minus predicted probability); leaf values take
// a ridge-damped Newton step.
struct GbdtModel {
  double base_score = 0.0;  // initial log-odds
  double learning_rate = 0.1;
  int n_features = 0;
  std::vector<RegressionTree> trees;
  std::vector<double> train_loss;  // mean logistic loss before boosting and after each round
};

GbdtModel fit_gbdt(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                   const GbdtConfig& config);

Eigen::VectorXd predict_margin(const GbdtModel& model, const Eigen::MatrixXd& features);
Eigen::VectorXd predict_proba(const GbdtModel& model, const Eigen::MatrixXd& features);

struct EvalScore {
  double roc_auc = 0.0;
  long n_pos = 0;
  long n_neg = 0;
};

// Probability that a random positive outscores a random negative, ties
// counted half (normalized Mann-Whitney U). Throws when a class is missing.
double roc_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// Disjoint (train, valid) row indices with per-class proportional sizes;
// every class keeps at least one training row. Indices ascend within each
// part.
std::pair<std::vector<long>, std::vector<long>> stratified_holdout(const Eigen::VectorXd& labels,
                                                                   double valid_fraction,
                                                                   std::mt19937_64& rng);

// Target encoder + GBDT trained on a stratified holdout split: encodings and
// trees see only the training part, the validation part yields an unbiased
// score when it contains both classes.
struct ClassifierModel {
  TargetEncoder encoder;
  GbdtModel gbdt;
  std::optional<EvalScore> validation;
};

ClassifierModel fit_classifier(const Dataset& ds, const Eigen::VectorXd& labels,
                               const GbdtConfig& config, double encoder_prior,
                               double valid_fraction, std::mt19937_64& rng);

Eigen::VectorXd predict_proba(const ClassifierModel& model, const Dataset& ds);

}  // namespace tabshift

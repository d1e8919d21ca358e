#include "tabshift/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tabshift {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double clamp_prob(double p) { return std::min(1.0 - 1e-12, std::max(1e-12, p)); }

void check_binary_labels(const Eigen::VectorXd& labels) {
  long pos = 0;
  for (long i = 0; i < labels.size(); ++i) {
    const double y = labels[i];
    if (y != 0.0 && y != 1.0) fail("labels must be 0 or 1");
    if (y == 1.0) ++pos;
  }
  if (pos == 0 || pos == labels.size()) fail("labels must contain both classes");
}

double mean_logistic_loss(const Eigen::VectorXd& labels, const Eigen::VectorXd& margins) {
  double loss = 0.0;
  for (long i = 0; i < labels.size(); ++i) {
    const double p = clamp_prob(sigmoid(margins[i]));
    loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return loss / static_cast<double>(labels.size());
}

}  // namespace

double TargetEncoder::encode(int feature_col, int category) const {
  const Column& c = columns.at(static_cast<std::size_t>(feature_col));
  if (!c.categorical) fail("encode: column is continuous");
  if (category < 0 || category >= static_cast<int>(c.encodings.size())) return global_rate;
  return c.encodings[static_cast<std::size_t>(category)];
}

TargetEncoder fit_target_encoder(const Dataset& ds, const Eigen::VectorXd& labels, double prior) {
  if (ds.n_rows() == 0) fail("fit_target_encoder: empty dataset");
  if (labels.size() != ds.n_rows()) fail("fit_target_encoder: labels do not align with rows");
  if (prior < 0.0) fail("fit_target_encoder: negative prior");
  TargetEncoder enc;
  enc.prior = prior;
  enc.global_rate = labels.mean();
  const int target = ds.schema().target_index();
  for (int col = 0; col < ds.n_columns(); ++col) {
    if (col == target) continue;
    TargetEncoder::Column c;
    c.schema_index = col;
    if (ds.schema().column(col).kind == ColumnKind::categorical) {
      c.categorical = true;
      const int n_cat = ds.schema().column(col).n_categories();
      std::vector<double> sums(static_cast<std::size_t>(n_cat), 0.0);
      std::vector<long> counts(static_cast<std::size_t>(n_cat), 0);
      const Eigen::VectorXi& cats = ds.categorical_column(col);
      for (long i = 0; i < ds.n_rows(); ++i) {
        const auto k = static_cast<std::size_t>(cats[i]);
        sums[k] += labels[i];
        ++counts[k];
      }
      c.encodings.resize(static_cast<std::size_t>(n_cat));
      for (std::size_t k = 0; k < c.encodings.size(); ++k) {
        const double denom = static_cast<double>(counts[k]) + prior;
        c.encodings[k] = denom > 0.0
                             ? (sums[k] + prior * enc.global_rate) / denom
                             : enc.global_rate;
      }
    }
    enc.columns.push_back(std::move(c));
  }
  if (enc.columns.empty()) fail("fit_target_encoder: no feature columns");
  return enc;
}

Eigen::MatrixXd build_features(const Dataset& ds, const TargetEncoder& encoder) {
  Eigen::MatrixXd features(ds.n_rows(), encoder.feature_width());
  for (int f = 0; f < encoder.feature_width(); ++f) {
    const TargetEncoder::Column& c = encoder.columns[static_cast<std::size_t>(f)];
    if (c.schema_index >= ds.n_columns()) fail("build_features: schema narrower than encoder");
    const ColumnSpec& spec = ds.schema().column(c.schema_index);
    if (c.categorical != (spec.kind == ColumnKind::categorical)) {
      fail("build_features: column kind mismatch with encoder for '" + spec.name + "'");
    }
    if (c.categorical) {
      const Eigen::VectorXi& cats = ds.categorical_column(c.schema_index);
      for (long i = 0; i < ds.n_rows(); ++i) features(i, f) = encoder.encode(f, cats[i]);
    } else {
      features.col(f) = ds.continuous_column(c.schema_index);
    }
  }
  return features;
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(at)];
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

namespace {

// Recursive split search on (gradient, hessian) sums with a ridge term:
// leaf value g/(h + l2), split gain from the usual sum-of-squares score.
struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& grad;
  const Eigen::VectorXd& hess;
  const GbdtConfig& cfg;
  std::vector<TreeNode> nodes;

  double leaf_value(const std::vector<long>& idx) const {
    double g = 0.0, h = 0.0;
    for (long i : idx) {
      g += grad[i];
      h += hess[i];
    }
    return g / (h + cfg.l2);
  }

  double score(double g, double h) const { return g * g / (h + cfg.l2); }

  int build(const std::vector<long>& idx, int depth) {
    double g_all = 0.0, h_all = 0.0;
    for (long i : idx) {
      g_all += grad[i];
      h_all += hess[i];
    }
    const auto make_leaf = [&]() {
      nodes.push_back(TreeNode{-1, 0.0, -1, -1, g_all / (h_all + cfg.l2)});
      return static_cast<int>(nodes.size()) - 1;
    };
    if (depth >= cfg.max_depth || static_cast<long>(idx.size()) < 2 * cfg.min_leaf) {
      return make_leaf();
    }

    int best_feature = -1;
    double best_gain = 1e-12;
    double best_threshold = 0.0;
    const double parent_score = score(g_all, h_all);
    std::vector<long> order;
    for (int f = 0; f < X.cols(); ++f) {
      order = idx;
      std::stable_sort(order.begin(), order.end(),
                       [&](long a, long b) { return X(a, f) < X(b, f); });
      double g_left = 0.0, h_left = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        g_left += grad[order[i]];
        h_left += hess[order[i]];
        const long n_left = static_cast<long>(i) + 1;
        const long n_right = static_cast<long>(order.size()) - n_left;
        if (n_left < cfg.min_leaf || n_right < cfg.min_leaf) continue;
        const double v = X(order[i], f);
        const double v_next = X(order[i + 1], f);
        if (v == v_next) continue;
        const double gain =
            score(g_left, h_left) + score(g_all - g_left, h_all - h_left) - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = v + (v_next - v) / 2.0;
        }
      }
    }
    if (best_feature < 0) return make_leaf();

    std::vector<long> left_idx, right_idx;
    for (long i : idx) {
      (X(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    const int node = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{best_feature, best_threshold, -1, -1, 0.0});
    nodes[static_cast<std::size_t>(node)].left = build(left_idx, depth + 1);
    nodes[static_cast<std::size_t>(node)].right = build(right_idx, depth + 1);
    return node;
  }
};

}  // namespace

GbdtModel fit_gbdt(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                   const GbdtConfig& config) {
  if (features.rows() < 2) fail("fit_gbdt: need at least 2 rows");
  if (features.rows() != labels.size()) fail("fit_gbdt: labels do not align with rows");
  if (!features.allFinite()) fail("fit_gbdt: non-finite feature");
  if (config.n_trees < 0 || config.max_depth < 1 || config.min_leaf < 1 ||
      config.learning_rate <= 0.0 || config.l2 < 0.0) {
    fail("fit_gbdt: invalid config");
  }
  check_binary_labels(labels);

  GbdtModel model;
  model.learning_rate = config.learning_rate;
  model.n_features = static_cast<int>(features.cols());
  model.base_score = [&] {
    const double rate = clamp_prob(labels.mean());
    return std::log(rate / (1.0 - rate));
  }();

  Eigen::VectorXd margins = Eigen::VectorXd::Constant(labels.size(), model.base_score);
  model.train_loss.push_back(mean_logistic_loss(labels, margins));

  std::vector<long> all(static_cast<std::size_t>(labels.size()));
  std::iota(all.begin(), all.end(), 0);
  Eigen::VectorXd grad(labels.size()), hess(labels.size());
  for (int t = 0; t < config.n_trees; ++t) {
    for (long i = 0; i < labels.size(); ++i) {
      const double p = sigmoid(margins[i]);
      grad[i] = labels[i] - p;  // negative gradient of logistic loss
      hess[i] = p * (1.0 - p);
    }
    TreeBuilder builder{features, grad, hess, config, {}};
    builder.build(all, 0);
    RegressionTree tree{std::move(builder.nodes)};
    for (long i = 0; i < labels.size(); ++i) {
      margins[i] += config.learning_rate * tree.predict(features.row(i));
    }
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(mean_logistic_loss(labels, margins));
  }
  return model;
}

Eigen::VectorXd predict_margin(const GbdtModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.n_features) fail("predict: feature width mismatch");
  Eigen::VectorXd margins = Eigen::VectorXd::Constant(features.rows(), model.base_score);
  for (const RegressionTree& tree : model.trees) {
    for (long i = 0; i < features.rows(); ++i) {
      margins[i] += model.learning_rate * tree.predict(features.row(i));
    }
  }
  return margins;
}

Eigen::VectorXd predict_proba(const GbdtModel& model, const Eigen::MatrixXd& features) {
  Eigen::VectorXd p = predict_margin(model, features);
  for (long i = 0; i < p.size(); ++i) p[i] = sigmoid(p[i]);
  return p;
}

double roc_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size()) fail("roc_auc: size mismatch");
  if (scores.size() == 0) fail("roc_auc: empty input");
  check_binary_labels(labels);

  const long n = scores.size();
  std::vector<long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](long a, long b) { return scores[a] < scores[b]; });

  // Average ranks across tied scores, then normalized Mann-Whitney U.
  double rank_sum_pos = 0.0;
  long i = 0;
  while (i < n) {
    long j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = static_cast<double>(i + 1 + j) / 2.0;  // 1-based
    for (long k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double n_pos = labels.sum();
  const double n_neg = static_cast<double>(n) - n_pos;
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::pair<std::vector<long>, std::vector<long>> stratified_holdout(const Eigen::VectorXd& labels,
                                                                   double valid_fraction,
                                                                   std::mt19937_64& rng) {
  if (valid_fraction < 0.0 || valid_fraction >= 1.0) fail("stratified_holdout: bad fraction");
  std::vector<long> pos, neg;
  for (long i = 0; i < labels.size(); ++i) (labels[i] == 1.0 ? pos : neg).push_back(i);

  std::vector<long> train, valid;
  for (std::vector<long>* cls : {&neg, &pos}) {
    if (cls->empty()) continue;
    std::shuffle(cls->begin(), cls->end(), rng);
    long k = std::lround(valid_fraction * static_cast<double>(cls->size()));
    k = std::min(k, static_cast<long>(cls->size()) - 1);  // keep one training row per class
    valid.insert(valid.end(), cls->begin(), cls->begin() + k);
    train.insert(train.end(), cls->begin() + k, cls->end());
  }
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());
  return {std::move(train), std::move(valid)};
}

ClassifierModel fit_classifier(const Dataset& ds, const Eigen::VectorXd& labels,
                               const GbdtConfig& config, double encoder_prior,
                               double valid_fraction, std::mt19937_64& rng) {
  if (ds.n_rows() != labels.size()) fail("fit_classifier: labels do not align with rows");
  auto [train_idx, valid_idx] = stratified_holdout(labels, valid_fraction, rng);

  Dataset train = ds.subset(train_idx, ds.role());
  Eigen::VectorXd y_train(static_cast<long>(train_idx.size()));
  for (std::size_t i = 0; i < train_idx.size(); ++i) y_train[static_cast<long>(i)] = labels[train_idx[i]];

  ClassifierModel model;
  model.encoder = fit_target_encoder(train, y_train, encoder_prior);
  model.gbdt = fit_gbdt(build_features(train, model.encoder), y_train, config);

  if (!valid_idx.empty()) {
    Dataset valid = ds.subset(valid_idx, ds.role());
    Eigen::VectorXd y_valid(static_cast<long>(valid_idx.size()));
    for (std::size_t i = 0; i < valid_idx.size(); ++i) y_valid[static_cast<long>(i)] = labels[valid_idx[i]];
    const double n_pos = y_valid.sum();
    if (n_pos > 0.0 && n_pos < static_cast<double>(y_valid.size())) {
      const Eigen::VectorXd p = predict_proba(model.gbdt, build_features(valid, model.encoder));
      model.validation = EvalScore{roc_auc(p, y_valid), static_cast<long>(n_pos),
                                   y_valid.size() - static_cast<long>(n_pos)};
    }
  }
  return model;
}

Eigen::VectorXd predict_proba(const ClassifierModel& model, const Dataset& ds) {
  return predict_proba(model.gbdt, build_features(ds, model.encoder));
}

}  // namespace tabshift

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "tabshift/data.hpp"
#include "tabshift/nn.hpp"
#include "tabshift/transform.hpp"

namespace tabshift {

// Layout of the conditional vector: one one-hot block per categorical column
// (the target included), concatenated in schema order.
struct CondLayout {
  std::vector<int> column_indices;   // schema indices of the categorical columns
  std::vector<int> category_counts;  // per block
  std::vector<int> offsets;          // block offsets inside the cond vector
  int width = 0;

  int n_columns() const { return static_cast<int>(column_indices.size()); }
  static CondLayout from_schema(const TableSchema& schema);
};

// One-hot condition: a single selected (column, category) pair.
struct CondVector {
  Eigen::VectorXd vec;  // 0/1, exactly one 1 (empty when no categorical columns)
  int column = -1;      // layout column index
  int category = -1;
};

CondVector build_cond(const CondLayout& layout, int column, int category);

// Raw category counts per conditional column, with the training-by-sampling
// probabilities p_k proportional to log(1 + count_k); zero-count categories
// are never selected.
struct FrequencyTable {
  std::vector<std::vector<long>> counts;  // [layout column][category]
  // p_k = log(1 + count_k) normalized per column; zero-count categories get 0.
  std::vector<std::vector<double>> probs;
};

FrequencyTable count_frequencies(const Dataset& ds, const CondLayout& layout);

// Column chosen uniformly, category by log-frequency.
CondVector sample_training_cond(const CondLayout& layout, const FrequencyTable& freq,
                                std::mt19937_64& rng);

// Row ids grouped by category per conditional column, so real-data draws can
// honour a condition.
struct RealRowIndex {
  std::vector<std::vector<std::vector<long>>> rows;  // [layout column][category] -> row ids
  static RealRowIndex build(const Dataset& ds, const CondLayout& layout);
};

// Uniform draw among the rows matching the condition; throws when none do.
long draw_matching_row(const RealRowIndex& index, const CondVector& cond, std::mt19937_64& rng);
Eigen::RowVectorXd draw_matching_real(const Eigen::MatrixXd& encoded, const RealRowIndex& index,
                                      const CondVector& cond, std::mt19937_64& rng);

// Mean cross-entropy between each instance's conditioned softmax block and
// the condition's one-hot mask; only the conditioned column contributes.
// When grad is given, it receives d(loss)/d(generated) (zero outside the
// conditioned blocks).
double generator_ce_loss(const Eigen::MatrixXd& generated, const std::vector<CondVector>& conds,
                         const TableTransformer& transformer, const CondLayout& layout,
                         Eigen::MatrixXd* grad = nullptr);

struct CtganConfig {
  int batch_size = 256;
  int noise_dim = 64;
  std::vector<int> generator_hidden{128, 128};
  std::vector<int> critic_hidden{128, 128};
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double gp_lambda = 10.0;
  int epochs = 300;
  int n_critic = 1;   // critic updates per generator update
  double tau = 0.2;   // softmax temperature of the generator's discrete heads
  TransformConfig transform;

  void validate() const;
};

// Trained conditional GAN plus everything needed to sample from it.
struct CtganModel {
  TableSchema schema;
  TableTransformer transformer;
  CondLayout layout;
  FrequencyTable freq;
  Mlp generator;
  Mlp critic;
  CtganConfig config;
  std::uint64_t seed = 0;
};

struct TrainTrace {
  std::vector<double> critic_loss;
  std::vector<double> generator_loss;
  long skipped_steps = 0;
};

// WGAN-GP training with the conditional vector, training-by-sampling, and
// the generator's cross-entropy penalty. Deterministic under (config, seed).
// Throws std::runtime_error when a loss turns non-finite.
CtganModel train_ctgan(const Dataset& train, const CtganConfig& config, std::uint64_t seed,
                       TrainTrace* trace = nullptr);

// Generates n rows (role = synthetic). The optional condition fixes
// (schema column index, category index) for every row; otherwise conditions
// follow training-by-sampling. Discrete blocks are hardened by argmax before
// decoding.
Dataset sample_ctgan(const CtganModel& model, long n,
                     std::optional<std::pair<int, int>> condition, std::uint64_t seed);

}  // namespace tabshift

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabshift/boosting.hpp"
#include "tabshift/ctgan.hpp"
#include "tabshift/data.hpp"

namespace tabshift {

enum class Strategy { none, gan, sample_original };
inline constexpr int kNumStrategies = 3;

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// Train/test target rates may differ by at most this much for the
// same-target flag to be 1.
inline constexpr double kSameTargetThreshold = 0.05;

struct FilterConfig {
  long keep_n = 0;  // 0 keeps every pool row
  GbdtConfig model;
  double encoder_prior = 10.0;
  double valid_fraction = 0.25;
  std::uint64_t seed = 0;
};

struct FilterResult {
  Dataset kept;                         // keep_n pool rows, ground-truth labels intact
  std::vector<long> kept_indices;       // pool row ids, most test-like first
  Eigen::VectorXd pool_scores;          // predicted test-likeness per pool row
  std::optional<EvalScore> validation;  // adversarial holdout score
};

// Trains pool(0) vs test(1) on features only — the ground-truth target is
// stripped before any adversarial code sees the rows — then returns the
// keep_n most test-like pool rows (descending score, ties by original row
// order) with their original labels reattached.
FilterResult adversarial_filter_detailed(const Dataset& pool, const Dataset& test,
                                         const FilterConfig& config);
Dataset adversarial_filter(const Dataset& pool, const Dataset& test, const FilterConfig& config);

struct StrategyConfig {
  CtganConfig gan;
  GbdtConfig gbdt;
  double encoder_prior = 10.0;
  double valid_fraction = 0.25;
  long synth_size = 0;  // 0 matches |T_train|
  long keep_n = 0;      // 0 matches |T_train|
};

struct StrategyResult {
  Strategy strategy = Strategy::none;
  double train_fraction = 1.0;  // filled by the benchmark driver
  std::uint64_t seed = 0;
  double test_roc_auc = 0.0;
  double train_target_rate = 0.0;  // of the rows the final model trained on
  double test_target_rate = 0.0;
  int same_target = 0;
  std::optional<EvalScore> adversarial_validation;
};

// One experiment cell: none trains directly on T_train; gan synthesizes
// |T_train| rows, pools them with T_train and filters back to |T_train|;
// sample_original filters T_train alone. The final classifier is always
// scored on T_test, whose labels are read through the final_scoring path
// only.
StrategyResult run_strategy(Strategy strategy, const Dataset& train, const Dataset& test,
                            const StrategyConfig& config, std::uint64_t seed);

// Best score of one (dataset, strategy) pair, input to aggregation.
struct BestCell {
  std::string dataset;
  Strategy strategy;
  double score = 0.0;
  int same_target = 0;
};

struct StrategySummary {
  double wins = 0.0;  // fractional under raw-score ties
  double mean_scaled = 0.0;
  double std_scaled = 0.0;
  double mean_scaled_same = 0.0;  // NaN when the group is empty
  double mean_scaled_diff = 0.0;
  long n_same = 0;
  long n_diff = 0;
};

struct BenchmarkReport {
  std::vector<std::string> datasets;
  std::vector<std::array<double, kNumStrategies>> raw;     // best ROC AUC
  std::vector<std::array<double, kNumStrategies>> scaled;  // per-dataset min-max
  std::vector<std::array<int, kNumStrategies>> same_target;
  std::vector<std::array<double, kNumStrategies>> winner_share;
  std::array<StrategySummary, kNumStrategies> strategies;
};

// Per-dataset min-max scaling (all-equal scores scale to 1.0), fractional
// winner counts, and per-strategy means/stds of the scaled scores, grouped
// overall and by the same-target flag. Every dataset must supply exactly one
// cell per strategy.
BenchmarkReport aggregate(const std::vector<BestCell>& cells);

struct DatasetSpec {
  std::string name;
  std::string csv_path;
  std::string schema_path;
  double test_fraction = 0.4;
};

struct RunConfig {
  std::uint64_t master_seed = 0;
  std::string output_dir = ".";
  int threads = 1;
  std::vector<double> fractions{0.05, 0.10, 0.25, 0.50, 0.75};
  std::vector<std::uint64_t> seeds{1};
  std::vector<Strategy> strategies{Strategy::none, Strategy::gan, Strategy::sample_original};
  std::vector<DatasetSpec> datasets;
  StrategyConfig strategy;

  void validate() const;  // domain checks; throws std::invalid_argument
};

// JSON config; unknown keys are rejected with a message naming the field.
RunConfig run_config_from_json_text(const std::string& text);
RunConfig run_config_from_json_file(const std::string& path);

struct CellResult {
  std::string dataset;
  Strategy strategy = Strategy::none;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::optional<StrategyResult> result;
  std::string error;  // non-empty when the cell failed
};

struct BenchmarkOutput {
  std::vector<CellResult> cells;
  std::optional<BenchmarkReport> report;  // absent when no dataset completed
};

// Runs every (dataset x strategy x fraction x seed) cell; failures are
// recorded per cell (a dataset that fails to load yields one errored cell)
// and the run continues. Cells are independent and may execute on
// config.threads workers; results and reports are identical regardless of
// thread count.
BenchmarkOutput run_benchmark(const RunConfig& config);

void write_cells_csv(const std::string& path, const std::vector<CellResult>& cells);
void write_summary_csv(const std::string& path, const BenchmarkReport& report);
void write_summary_text(const std::string& path, const BenchmarkReport& report);

}  // namespace tabshift

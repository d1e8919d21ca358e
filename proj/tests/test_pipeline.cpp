#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tabshift/data.hpp"
#include "tabshift/pipeline.hpp"

using namespace tabshift;

namespace {

TableSchema labeled_schema() {
  TableSchema schema;
  schema.columns = {{"x", ColumnKind::continuous, {}},
                    {"group", ColumnKind::categorical, {"A", "B"}},
                    {"label", ColumnKind::categorical, {"no", "yes"}}};
  schema.target = "label";
  return schema;
}

// Rows where x ~ N(center, 0.5) and the label is sign(x - center) with 10%
// flips, so a boosted model can learn the rule in any region.
Dataset region_dataset(long n, double center, DatasetRole role, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> x_src(center, 0.5);
  std::bernoulli_distribution flip(0.1);
  std::vector<Row> rows;
  for (long i = 0; i < n; ++i) {
    const double x = x_src(rng);
    bool y = x > center;
    if (flip(rng)) y = !y;
    rows.push_back(
        Row{{Cell{x}, Cell{static_cast<std::int32_t>(i % 2)}, Cell{static_cast<std::int32_t>(y)}}});
  }
  return Dataset(labeled_schema(), rows, role);
}

std::string temp_dir(const std::string& leaf) {
  const std::string dir = "/tmp/tabshift_pipeline_test/" + leaf;
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

GbdtConfig small_gbdt() {
  GbdtConfig config;
  config.n_trees = 25;
  return config;
}

StrategyConfig fast_strategy_config() {
  StrategyConfig config;
  config.gbdt = small_gbdt();
  config.gan.batch_size = 32;
  config.gan.noise_dim = 8;
  config.gan.generator_hidden = {16};
  config.gan.critic_hidden = {16};
  config.gan.epochs = 3;
  config.gan.transform.em.m_max = 2;
  return config;
}

}  // namespace

TEST_CASE("strategy names round trip") {
  CHECK(strategy_from_string("none") == Strategy::none);
  CHECK(strategy_from_string("gan") == Strategy::gan);
  CHECK(strategy_from_string("sample_original") == Strategy::sample_original);
  CHECK(std::string(to_string(Strategy::gan)) == "gan");
  CHECK_THROWS_AS(strategy_from_string("GAN"), std::invalid_argument);
}

TEST_CASE("aggregate scales per dataset and splits wins on raw-score ties") {
  std::vector<BestCell> cells = {
      {"d1", Strategy::none, 0.6, 1},            {"d1", Strategy::gan, 0.8, 0},
      {"d1", Strategy::sample_original, 0.7, 1}, {"d2", Strategy::none, 0.9, 1},
      {"d2", Strategy::gan, 0.9, 1},             {"d2", Strategy::sample_original, 0.5, 0},
      {"d3", Strategy::none, 0.4, 0},            {"d3", Strategy::gan, 0.4, 0},
      {"d3", Strategy::sample_original, 0.4, 0},
  };
  BenchmarkReport report = aggregate(cells);
  REQUIRE(report.datasets.size() == 3);

  // d1: min 0.6, max 0.8 -> scaled {0, 1, 0.5}; winner gan.
  CHECK(report.scaled[0][0] == doctest::Approx(0.0));
  CHECK(report.scaled[0][1] == doctest::Approx(1.0));
  CHECK(report.scaled[0][2] == doctest::Approx(0.5));
  CHECK(report.winner_share[0][1] == 1.0);

  // d2: two-way tie at the top splits the win.
  CHECK(report.winner_share[1][0] == 0.5);
  CHECK(report.winner_share[1][1] == 0.5);
  CHECK(report.winner_share[1][2] == 0.0);
  CHECK(report.scaled[1][2] == doctest::Approx(0.0));

  // d3: all equal scales to 1.0 everywhere; three-way tie.
  for (int s = 0; s < kNumStrategies; ++s) {
    CHECK(report.scaled[2][static_cast<std::size_t>(s)] == 1.0);
    CHECK(report.winner_share[2][static_cast<std::size_t>(s)] == doctest::Approx(1.0 / 3));
  }

  // Strategy summaries: means/stds of the scaled column plus fractional wins.
  const StrategySummary& none = report.strategies[0];
  CHECK(none.wins == doctest::Approx(0.5 + 1.0 / 3));
  CHECK(none.mean_scaled == doctest::Approx((0.0 + 1.0 + 1.0) / 3));
  const double mean = 2.0 / 3;
  const double var = ((0 - mean) * (0 - mean) + (1 - mean) * (1 - mean) + (1 - mean) * (1 - mean)) / 3;
  CHECK(none.std_scaled == doctest::Approx(std::sqrt(var)));

  // Same-target grouping for strategy none: same on d1, d2 (scaled 0, 1).
  CHECK(none.n_same == 2);
  CHECK(none.n_diff == 1);
  CHECK(none.mean_scaled_same == doctest::Approx(0.5));
  CHECK(none.mean_scaled_diff == doctest::Approx(1.0));

  const StrategySummary& gan = report.strategies[1];
  CHECK(gan.wins == doctest::Approx(1.0 + 0.5 + 1.0 / 3));
}

TEST_CASE("aggregate rejects incomplete or duplicated grids") {
  std::vector<BestCell> missing = {{"d1", Strategy::none, 0.5, 0}, {"d1", Strategy::gan, 0.6, 0}};
  CHECK_THROWS_WITH_AS(aggregate(missing), doctest::Contains("missing"), std::invalid_argument);

  std::vector<BestCell> dup = {{"d1", Strategy::none, 0.5, 0},
                               {"d1", Strategy::gan, 0.6, 0},
                               {"d1", Strategy::sample_original, 0.6, 0},
                               {"d1", Strategy::none, 0.7, 0}};
  CHECK_THROWS_WITH_AS(aggregate(dup), doctest::Contains("duplicate"), std::invalid_argument);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}

TEST_CASE("adversarial filter keeps the rows that resemble the test region") {
  // Pool: 60 rows near x = 0 and 60 near x = 5; test lives near x = 5.
  Dataset near = region_dataset(60, 0.0, DatasetRole::train, 1);
  Dataset far = region_dataset(60, 5.0, DatasetRole::train, 2);
  Dataset pool = concat(near, far, DatasetRole::train);
  Dataset test = region_dataset(80, 5.0, DatasetRole::test, 3);

  FilterConfig config;
  config.keep_n = 60;
  config.model = small_gbdt();
  config.seed = 9;
  FilterResult result = adversarial_filter_detailed(pool, test, config);

  REQUIRE(result.kept.n_rows() == 60);
  REQUIRE(result.pool_scores.size() == 120);
  CHECK(result.kept_indices.size() == 60u);

  long far_kept = 0;
  for (long id : result.kept_indices)
    if (id >= 60) ++far_kept;
  CHECK(far_kept >= 55);  // almost everything kept comes from the x = 5 region

  // Kept rows carry their original ground-truth labels.
  CHECK(result.kept.schema().target.has_value());
  (void)result.kept.target_labels(TargetUse::statistics);

  // Scores arrive sorted descending through kept_indices.
  for (std::size_t i = 1; i < result.kept_indices.size(); ++i)
    CHECK(result.pool_scores(result.kept_indices[i - 1]) >=
          result.pool_scores(result.kept_indices[i]));

  REQUIRE(result.validation.has_value());
  // Half the pool is indistinguishable from test (tied scores earn half
  // credit), so the ideal holdout AUC is 0.5 + 0.25 = 0.75.
  CHECK(result.validation->roc_auc > 0.65);
  CHECK(result.validation->roc_auc < 0.85);
}

TEST_CASE("adversarial filter breaks score ties by original row order") {
  // A pool of identical rows ties every score; keep_n must take a prefix.
  std::vector<Row> rows;
  for (int i = 0; i < 10; ++i)
    rows.push_back(Row{{Cell{1.0}, Cell{static_cast<std::int32_t>(0)},
                        Cell{static_cast<std::int32_t>(i % 2)}}});
  Dataset pool(labeled_schema(), rows, DatasetRole::train);
  Dataset test(labeled_schema(), rows, DatasetRole::test);

  FilterConfig config;
  config.keep_n = 4;
  config.model = small_gbdt();
  FilterResult result = adversarial_filter_detailed(pool, test, config);
  REQUIRE(result.kept_indices.size() == 4u);
  for (long i = 0; i < 4; ++i) CHECK(result.kept_indices[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("adversarial filter never reads ground-truth labels") {
  Dataset pool = region_dataset(80, 0.0, DatasetRole::train, 4);
  Dataset test = region_dataset(40, 1.0, DatasetRole::test, 5);
  auto pool_log = std::make_shared<TargetAuditLog>();
  auto test_log = std::make_shared<TargetAuditLog>();
  pool.attach_audit(pool_log);
  test.attach_audit(test_log);

  FilterConfig config;
  config.model = small_gbdt();
  Dataset kept = adversarial_filter(pool, test, config);
  CHECK(kept.n_rows() == pool.n_rows());  // keep_n defaults to the whole pool

  CHECK(pool_log->accesses.empty());
  CHECK(test_log->accesses.empty());
}

TEST_CASE("filter validates sizes") {
  Dataset pool = region_dataset(20, 0.0, DatasetRole::train, 6);
  Dataset test = region_dataset(20, 0.0, DatasetRole::test, 7);
  FilterConfig config;
  config.keep_n = 21;
  CHECK_THROWS_AS(adversarial_filter(pool, test, config), std::invalid_argument);
  Dataset empty(labeled_schema(), {}, DatasetRole::train);
  config.keep_n = 0;
  CHECK_THROWS_AS(adversarial_filter(empty, test, config), std::invalid_argument);
}

TEST_CASE("run_strategy none trains on the raw data and scores the test labels once") {
  Dataset train = region_dataset(200, 0.0, DatasetRole::train, 8);
  Dataset test = region_dataset(100, 0.0, DatasetRole::test, 9);
  auto train_log = std::make_shared<TargetAuditLog>();
  auto test_log = std::make_shared<TargetAuditLog>();
  train.attach_audit(train_log);
  test.attach_audit(test_log);

  StrategyConfig config = fast_strategy_config();
  StrategyResult result = run_strategy(Strategy::none, train, test, config, 31);

  CHECK(result.strategy == Strategy::none);
  CHECK(result.seed == 31);
  CHECK(result.test_roc_auc > 0.85);  // the rule is learnable
  CHECK_FALSE(result.adversarial_validation.has_value());
  CHECK(result.same_target == 1);
  CHECK(std::abs(result.train_target_rate - target_rate(train)) < 1e-12);

  // Test labels: never for model training; exactly one final-scoring read.
  CHECK(test_log->count(TargetUse::model_training) == 0);
  CHECK(test_log->count(TargetUse::final_scoring) == 1);
  // Train labels feed the model and the reported rate.
  CHECK(train_log->count(TargetUse::model_training) == 1);
  CHECK(train_log->count(TargetUse::final_scoring) == 0);
}

TEST_CASE("run_strategy sample_original filters before fitting") {
  Dataset train_a = region_dataset(120, 0.0, DatasetRole::train, 10);
  Dataset train_b = region_dataset(120, 3.0, DatasetRole::train, 11);
  Dataset train = concat(train_a, train_b, DatasetRole::train);
  Dataset test = region_dataset(120, 3.0, DatasetRole::test, 12);
  auto test_log = std::make_shared<TargetAuditLog>();
  test.attach_audit(test_log);

  StrategyConfig config = fast_strategy_config();
  config.keep_n = 120;
  StrategyResult result = run_strategy(Strategy::sample_original, train, test, config, 77);

  CHECK(result.strategy == Strategy::sample_original);
  REQUIRE(result.adversarial_validation.has_value());
  // Half the pool matches the test region, so the ideal separation is 0.75.
  CHECK(result.adversarial_validation->roc_auc > 0.65);
  CHECK(result.test_roc_auc > 0.7);
  CHECK(test_log->count(TargetUse::model_training) == 0);
  CHECK(test_log->count(TargetUse::final_scoring) == 1);

  CHECK_THROWS_AS(
      run_strategy(Strategy::none, train.strip_target(), test.strip_target(), config, 1),
      std::invalid_argument);
}

TEST_CASE("run_strategy gan synthesizes, pools, and filters") {
  Dataset train = region_dataset(150, 0.0, DatasetRole::train, 13);
  Dataset test = region_dataset(80, 0.0, DatasetRole::test, 14);

  StrategyConfig config = fast_strategy_config();
  StrategyResult result = run_strategy(Strategy::gan, train, test, config, 5);
  CHECK(result.strategy == Strategy::gan);
  REQUIRE(result.adversarial_validation.has_value());
  CHECK(std::isfinite(result.test_roc_auc));
  CHECK(result.test_roc_auc > 0.5);  // learnable even from the filtered pool

  // Deterministic per seed.
  StrategyResult again = run_strategy(Strategy::gan, train, test, config, 5);
  CHECK(again.test_roc_auc == result.test_roc_auc);
}

TEST_CASE("run config json applies defaults and rejects unknown fields") {
  const char* good = R"({
    "master_seed": 7,
    "datasets": [{"name": "toy", "csv": "toy.csv", "schema": "toy.json"}],
    "gan": {"epochs": 5, "batch_size": 64},
    "gbdt": {"n_trees": 50},
    "fractions": [0.5, 1.0],
    "seeds": [1, 2],
    "threads": 2
  })";
  RunConfig config = run_config_from_json_text(good);
  CHECK(config.master_seed == 7);
  CHECK(config.strategy.gan.epochs == 5);
  CHECK(config.strategy.gan.batch_size == 64);
  CHECK(config.strategy.gan.noise_dim == 64);  // untouched default
  CHECK(config.strategy.gbdt.n_trees == 50);
  CHECK(config.strategies.size() == 3u);  // default: all three
  CHECK(config.datasets[0].test_fraction == 0.4);
  CHECK(config.threads == 2);

  CHECK_THROWS_WITH_AS(run_config_from_json_text(R"({"datasets": [], "fracions": [0.5]})"),
                       doctest::Contains("fracions"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(
          R"({"datasets": [{"name": "a", "csv": "b", "schema": "c"}], "gan": {"lrate": 1}})"),
      doctest::Contains("lrate"), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json_text("{"), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json_text(R"({"datasets": []})"), std::invalid_argument);

  // Domain validation names the offending field.
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(
          R"({"datasets": [{"name": "a", "csv": "b", "schema": "c"}], "fractions": [1.5]})"),
      doctest::Contains("fractions"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(
          R"({"datasets": [{"name": "a", "csv": "b", "schema": "c"}], "strategies": ["gan", "gan"]})"),
      doctest::Contains("strategy"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      run_config_from_json_text(
          R"({"datasets": [{"name": "a", "csv": "b", "schema": "c"}], "threads": 0})"),
      doctest::Contains("threads"), std::invalid_argument);
}

TEST_CASE("benchmark isolates per-dataset failures and stays deterministic") {
  const std::string dir = temp_dir("bench");
  // Two datasets: one loadable, one whose csv is missing.
  Dataset full = region_dataset(260, 0.0, DatasetRole::train, 15);
  write_csv(full, dir + "/good.csv");
  {
    std::ofstream schema_file(dir + "/schema.json");
    schema_file << R"({"columns": [
      {"name": "x", "kind": "continuous"},
      {"name": "group", "kind": "categorical", "categories": ["A", "B"]},
      {"name": "label", "kind": "categorical", "categories": ["no", "yes"]}
    ], "target": "label"})";
  }

  RunConfig config;
  config.master_seed = 3;
  config.output_dir = dir;
  config.fractions = {0.5};
  config.seeds = {1};
  config.datasets = {{"good", dir + "/good.csv", dir + "/schema.json", 0.4},
                     {"broken", dir + "/missing.csv", dir + "/schema.json", 0.4}};
  config.strategy = fast_strategy_config();

  BenchmarkOutput output = run_benchmark(config);

  // One errored load cell plus 3 strategy cells for the good dataset.
  REQUIRE(output.cells.size() == 4u);
  long errors = 0, ok = 0;
  for (const CellResult& cell : output.cells) {
    if (cell.error.empty())
      ++ok;
    else
      ++errors;
  }
  CHECK(errors == 1);
  CHECK(ok == 3);
  REQUIRE(output.report.has_value());
  CHECK(output.report->datasets == std::vector<std::string>{"good"});

  // Thread count must not change any result.
  RunConfig threaded = config;
  threaded.threads = 3;
  BenchmarkOutput parallel = run_benchmark(threaded);
  REQUIRE(parallel.cells.size() == output.cells.size());
  for (std::size_t i = 0; i < output.cells.size(); ++i) {
    CHECK(parallel.cells[i].dataset == output.cells[i].dataset);
    CHECK(parallel.cells[i].error == output.cells[i].error);
    if (output.cells[i].result)
      CHECK(parallel.cells[i].result->test_roc_auc == output.cells[i].result->test_roc_auc);
  }

  // Report files are deterministic byte for byte.
  write_cells_csv(dir + "/cells_a.csv", output.cells);
  write_cells_csv(dir + "/cells_b.csv", parallel.cells);
  CHECK(read_file(dir + "/cells_a.csv") == read_file(dir + "/cells_b.csv"));
  write_summary_csv(dir + "/summary_a.csv", *output.report);
  write_summary_csv(dir + "/summary_b.csv", *parallel.report);
  CHECK(read_file(dir + "/summary_a.csv") == read_file(dir + "/summary_b.csv"));
  write_summary_text(dir + "/summary_a.txt", *output.report);
  CHECK(read_file(dir + "/summary_a.txt").find("Strategy summary") != std::string::npos);

  // Cells csv carries one line per cell plus the header.
  const std::string cells_text = read_file(dir + "/cells_a.csv");
  CHECK(std::count(cells_text.begin(), cells_text.end(), '\n') == 5);
  CHECK(cells_text.find("error") != std::string::npos);
  CHECK(cells_text.find("dataset failed to load") != std::string::npos);

  std::filesystem::remove_all("/tmp/tabshift_pipeline_test");
}

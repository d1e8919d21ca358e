#include "tabshift/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

#include "tabshift/rng.hpp"

namespace tabshift {

namespace {

using nlohmann::json;

[[noreturn]] void fail_config(const std::string& message) {
  throw std::invalid_argument(message);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[32];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buffer, end);
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::none:
      return "none";
    case Strategy::gan:
      return "gan";
    case Strategy::sample_original:
      return "sample_original";
  }
  throw std::invalid_argument("to_string: bad strategy value");
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "none") return Strategy::none;
  if (name == "gan") return Strategy::gan;
  if (name == "sample_original") return Strategy::sample_original;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected none, gan, or sample_original)");
}

// ---------------------------------------------------------------------------
// Adversarial filtering
// ---------------------------------------------------------------------------

FilterResult adversarial_filter_detailed(const Dataset& pool, const Dataset& test,
                                         const FilterConfig& config) {
  if (pool.n_rows() == 0) throw std::invalid_argument("adversarial_filter: empty pool");
  if (test.n_rows() == 0) throw std::invalid_argument("adversarial_filter: empty test set");

  Dataset pool_features = pool.strip_target();
  Dataset test_features = test.strip_target();
  if (!(pool_features.schema() == test_features.schema()))
    throw std::invalid_argument("adversarial_filter: pool and test feature schemas differ");

  const long keep_n = config.keep_n > 0 ? config.keep_n : pool.n_rows();
  if (keep_n > pool.n_rows())
    throw std::invalid_argument("adversarial_filter: keep_n exceeds pool size");

  // Membership labels: pool rows 0, test rows 1. Ground-truth targets were
  // stripped above, so the discriminator cannot condition on them.
  Dataset combined = concat(pool_features, test_features, DatasetRole::train);
  Eigen::VectorXd membership(combined.n_rows());
  membership.head(pool.n_rows()).setZero();
  membership.tail(test.n_rows()).setOnes();

  auto rng = make_rng(config.seed, "filter");
  ClassifierModel discriminator = fit_classifier(combined, membership, config.model,
                                                 config.encoder_prior, config.valid_fraction, rng);

  FilterResult out;
  out.pool_scores = predict_proba(discriminator, pool_features);
  out.validation = discriminator.validation;

  std::vector<long> order(static_cast<std::size_t>(pool.n_rows()));
  std::iota(order.begin(), order.end(), 0L);
  const Eigen::VectorXd& scores = out.pool_scores;
  std::stable_sort(order.begin(), order.end(),
                   [&scores](long a, long b) { return scores(a) > scores(b); });
  order.resize(static_cast<std::size_t>(keep_n));

  out.kept_indices = order;
  out.kept = pool.subset(order, pool.role());
  return out;
}

Dataset adversarial_filter(const Dataset& pool, const Dataset& test, const FilterConfig& config) {
  return adversarial_filter_detailed(pool, test, config).kept;
}

// ---------------------------------------------------------------------------
// Strategy runner
// ---------------------------------------------------------------------------

StrategyResult run_strategy(Strategy strategy, const Dataset& train, const Dataset& test,
                            const StrategyConfig& config, std::uint64_t seed) {
  if (!(train.schema() == test.schema()))
    throw std::invalid_argument("run_strategy: train and test schemas differ");
  if (!train.schema().target) throw std::invalid_argument("run_strategy: schema has no target");
  if (train.n_rows() == 0) throw std::invalid_argument("run_strategy: empty training set");

  Dataset final_train = train;
  std::optional<EvalScore> adversarial;
  if (strategy != Strategy::none) {
    Dataset pool = train;
    if (strategy == Strategy::gan) {
      CtganModel model = train_ctgan(train, config.gan, stream_seed(seed, "gan"));
      const long n_synth = config.synth_size > 0 ? config.synth_size : train.n_rows();
      Dataset synthetic =
          sample_ctgan(model, n_synth, std::nullopt, stream_seed(seed, "gan:sample"));
      pool = concat(train, synthetic, DatasetRole::train);
    }
    FilterConfig filter;
    filter.keep_n = config.keep_n > 0 ? config.keep_n : train.n_rows();
    filter.model = config.gbdt;
    filter.encoder_prior = config.encoder_prior;
    filter.valid_fraction = config.valid_fraction;
    filter.seed = stream_seed(seed, "filter");
    FilterResult filtered = adversarial_filter_detailed(pool, test, filter);
    final_train = std::move(filtered.kept);
    adversarial = filtered.validation;
  }

  Eigen::VectorXd labels = final_train.target_labels(TargetUse::model_training).cast<double>();
  auto rng = make_rng(seed, "gbdt");
  ClassifierModel model = fit_classifier(final_train, labels, config.gbdt, config.encoder_prior,
                                         config.valid_fraction, rng);

  Eigen::VectorXd scores = predict_proba(model, test);
  Eigen::VectorXd truth = test.target_labels(TargetUse::final_scoring).cast<double>();

  StrategyResult result;
  result.strategy = strategy;
  result.seed = seed;
  result.test_roc_auc = roc_auc(scores, truth);
  result.train_target_rate = target_rate(final_train);
  result.test_target_rate = target_rate(test);
  result.same_target =
      std::abs(result.train_target_rate - result.test_target_rate) <= kSameTargetThreshold ? 1 : 0;
  result.adversarial_validation = adversarial;
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

BenchmarkReport aggregate(const std::vector<BestCell>& cells) {
  if (cells.empty()) throw std::invalid_argument("aggregate: no cells");

  BenchmarkReport report;
  std::vector<std::array<bool, kNumStrategies>> seen;
  for (const BestCell& cell : cells) {
    if (!std::isfinite(cell.score)) throw std::invalid_argument("aggregate: non-finite score");
    std::size_t d = 0;
    while (d < report.datasets.size() && report.datasets[d] != cell.dataset) ++d;
    if (d == report.datasets.size()) {
      report.datasets.push_back(cell.dataset);
      report.raw.push_back({});
      report.scaled.push_back({});
      report.same_target.push_back({});
      report.winner_share.push_back({});
      seen.push_back({false, false, false});
    }
    const int s = static_cast<int>(cell.strategy);
    if (s < 0 || s >= kNumStrategies) throw std::invalid_argument("aggregate: bad strategy value");
    if (seen[d][static_cast<std::size_t>(s)])
      throw std::invalid_argument("aggregate: duplicate cell for dataset '" + cell.dataset +
                                  "', strategy " + to_string(cell.strategy));
    seen[d][static_cast<std::size_t>(s)] = true;
    report.raw[d][static_cast<std::size_t>(s)] = cell.score;
    report.same_target[d][static_cast<std::size_t>(s)] = cell.same_target;
  }
  for (std::size_t d = 0; d < seen.size(); ++d)
    for (int s = 0; s < kNumStrategies; ++s)
      if (!seen[d][static_cast<std::size_t>(s)])
        throw std::invalid_argument("aggregate: dataset '" + report.datasets[d] +
                                    "' is missing strategy " +
                                    to_string(static_cast<Strategy>(s)));

  const std::size_t n = report.datasets.size();
  for (std::size_t d = 0; d < n; ++d) {
    const auto& raw = report.raw[d];
    const double lo = *std::min_element(raw.begin(), raw.end());
    const double hi = *std::max_element(raw.begin(), raw.end());
    int n_best = 0;
    for (double v : raw)
      if (v == hi) ++n_best;
    for (std::size_t s = 0; s < kNumStrategies; ++s) {
      report.scaled[d][s] = hi > lo ? (raw[s] - lo) / (hi - lo) : 1.0;
      report.winner_share[d][s] = raw[s] == hi ? 1.0 / n_best : 0.0;
    }
  }

  for (std::size_t s = 0; s < kNumStrategies; ++s) {
    StrategySummary& summary = report.strategies[s];
    double sum = 0.0, sum_sq = 0.0, sum_same = 0.0, sum_diff = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      const double v = report.scaled[d][s];
      summary.wins += report.winner_share[d][s];
      sum += v;
      sum_sq += v * v;
      if (report.same_target[d][s]) {
        sum_same += v;
        ++summary.n_same;
      } else {
        sum_diff += v;
        ++summary.n_diff;
      }
    }
    const double mean = sum / static_cast<double>(n);
    summary.mean_scaled = mean;
    summary.std_scaled = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean));
    summary.mean_scaled_same = summary.n_same > 0
                                   ? sum_same / static_cast<double>(summary.n_same)
                                   : std::numeric_limits<double>::quiet_NaN();
    summary.mean_scaled_diff = summary.n_diff > 0
                                   ? sum_diff / static_cast<double>(summary.n_diff)
                                   : std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (fractions.empty()) fail_config("run config: fractions must be non-empty");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) fail_config("run config: fractions must lie in (0, 1]");
  if (seeds.empty()) fail_config("run config: seeds must be non-empty");
  if (strategies.empty()) fail_config("run config: strategies must be non-empty");
  for (std::size_t i = 0; i < strategies.size(); ++i)
    for (std::size_t j = i + 1; j < strategies.size(); ++j)
      if (strategies[i] == strategies[j])
        fail_config(std::string("run config: duplicate strategy '") + to_string(strategies[i]) +
                    "'");
  if (datasets.empty()) fail_config("run config: datasets must be non-empty");
  for (const DatasetSpec& spec : datasets) {
    if (spec.name.empty()) fail_config("run config: datasets[].name must be non-empty");
    if (spec.csv_path.empty()) fail_config("run config: datasets[].csv must be non-empty");
    if (spec.schema_path.empty()) fail_config("run config: datasets[].schema must be non-empty");
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
      fail_config("run config: datasets[].test_fraction must lie in (0, 1)");
  }
  for (std::size_t i = 0; i < datasets.size(); ++i)
    for (std::size_t j = i + 1; j < datasets.size(); ++j)
      if (datasets[i].name == datasets[j].name)
        fail_config("run config: duplicate dataset name '" + datasets[i].name + "'");
  if (threads < 1) fail_config("run config: threads must be at least 1");
  if (output_dir.empty()) fail_config("run config: output_dir must be non-empty");

  strategy.gan.validate();
  if (strategy.gbdt.n_trees < 1) fail_config("run config: gbdt.n_trees must be at least 1");
  if (strategy.gbdt.max_depth < 1) fail_config("run config: gbdt.max_depth must be at least 1");
  if (!(strategy.gbdt.learning_rate > 0.0))
    fail_config("run config: gbdt.learning_rate must be positive");
  if (strategy.gbdt.min_leaf < 1) fail_config("run config: gbdt.min_leaf must be at least 1");
  if (strategy.gbdt.l2 < 0.0) fail_config("run config: gbdt.l2 must be non-negative");
  if (strategy.encoder_prior < 0.0) fail_config("run config: encoder_prior must be non-negative");
  if (!(strategy.valid_fraction > 0.0 && strategy.valid_fraction < 1.0))
    fail_config("run config: valid_fraction must lie in (0, 1)");
  if (strategy.synth_size < 0) fail_config("run config: synth_size must be non-negative");
  if (strategy.keep_n < 0) fail_config("run config: keep_n must be non-negative");
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) fail_config(context + ": unknown key '" + item.key() + "'");
  }
}

void parse_gan_config(const json& j, CtganConfig& c) {
  check_keys(j,
             {"batch_size", "noise_dim", "generator_hidden", "critic_hidden", "lr", "beta1",
              "beta2", "gp_lambda", "epochs", "n_critic", "tau", "em_m_max", "em_tol",
              "em_max_iter", "em_prune_weight", "alpha_clip", "deterministic_modes"},
             "run config: gan");
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
  if (j.contains("noise_dim")) c.noise_dim = j["noise_dim"].get<int>();
  if (j.contains("generator_hidden")) c.generator_hidden = j["generator_hidden"].get<std::vector<int>>();
  if (j.contains("critic_hidden")) c.critic_hidden = j["critic_hidden"].get<std::vector<int>>();
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
  if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
  if (j.contains("gp_lambda")) c.gp_lambda = j["gp_lambda"].get<double>();
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
  if (j.contains("n_critic")) c.n_critic = j["n_critic"].get<int>();
  if (j.contains("tau")) c.tau = j["tau"].get<double>();
  if (j.contains("em_m_max")) c.transform.em.m_max = j["em_m_max"].get<int>();
  if (j.contains("em_tol")) c.transform.em.tol = j["em_tol"].get<double>();
  if (j.contains("em_max_iter")) c.transform.em.max_iter = j["em_max_iter"].get<int>();
  if (j.contains("em_prune_weight")) c.transform.em.prune_weight = j["em_prune_weight"].get<double>();
  if (j.contains("alpha_clip")) c.transform.alpha_clip = j["alpha_clip"].get<double>();
  if (j.contains("deterministic_modes")) c.transform.deterministic_modes = j["deterministic_modes"].get<bool>();
}

void parse_gbdt_config(const json& j, GbdtConfig& c) {
  check_keys(j, {"n_trees", "max_depth", "learning_rate", "min_leaf", "l2"}, "run config: gbdt");
  if (j.contains("n_trees")) c.n_trees = j["n_trees"].get<int>();
  if (j.contains("max_depth")) c.max_depth = j["max_depth"].get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("min_leaf")) c.min_leaf = j["min_leaf"].get<int>();
  if (j.contains("l2")) c.l2 = j["l2"].get<double>();
}

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) fail_config("run config: top level must be an object");
  check_keys(j,
             {"master_seed", "output_dir", "threads", "fractions", "seeds", "strategies",
              "datasets", "gan", "gbdt", "encoder_prior", "valid_fraction", "synth_size",
              "keep_n"},
             "run config");

  RunConfig cfg;
  if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("fractions")) cfg.fractions = j["fractions"].get<std::vector<double>>();
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("strategies")) {
    cfg.strategies.clear();
    if (!j["strategies"].is_array()) fail_config("run config: strategies must be an array");
    for (const json& item : j["strategies"])
      cfg.strategies.push_back(strategy_from_string(item.get<std::string>()));
  }
  if (!j.contains("datasets")) fail_config("run config: missing key 'datasets'");
  if (!j["datasets"].is_array()) fail_config("run config: datasets must be an array");
  for (const json& item : j["datasets"]) {
    if (!item.is_object()) fail_config("run config: datasets entries must be objects");
    check_keys(item, {"name", "csv", "schema", "test_fraction"}, "run config: datasets");
    DatasetSpec spec;
    if (!item.contains("name")) fail_config("run config: datasets[].name is required");
    if (!item.contains("csv")) fail_config("run config: datasets[].csv is required");
    if (!item.contains("schema")) fail_config("run config: datasets[].schema is required");
    spec.name = item["name"].get<std::string>();
    spec.csv_path = item["csv"].get<std::string>();
    spec.schema_path = item["schema"].get<std::string>();
    if (item.contains("test_fraction")) spec.test_fraction = item["test_fraction"].get<double>();
    cfg.datasets.push_back(std::move(spec));
  }
  if (j.contains("gan")) parse_gan_config(j["gan"], cfg.strategy.gan);
  if (j.contains("gbdt")) parse_gbdt_config(j["gbdt"], cfg.strategy.gbdt);
  if (j.contains("encoder_prior")) cfg.strategy.encoder_prior = j["encoder_prior"].get<double>();
  if (j.contains("valid_fraction")) cfg.strategy.valid_fraction = j["valid_fraction"].get<double>();
  if (j.contains("synth_size")) cfg.strategy.synth_size = j["synth_size"].get<long>();
  if (j.contains("keep_n")) cfg.strategy.keep_n = j["keep_n"].get<long>();

  cfg.validate();
  return cfg;
}

}  // namespace

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail_config(std::string("run config: invalid JSON: ") + e.what());
  }
  try {
    return parse_run_config(j);
  } catch (const json::exception& e) {
    fail_config(std::string("run config: ") + e.what());
  }
}

RunConfig run_config_from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_config("run config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json_text(buffer.str());
}

// ---------------------------------------------------------------------------
// Benchmark driver
// ---------------------------------------------------------------------------

BenchmarkOutput run_benchmark(const RunConfig& config) {
  config.validate();
  BenchmarkOutput out;

  struct Prepared {
    std::string name;
    Dataset train;
    Dataset test;
  };
  std::vector<Prepared> prepared;
  for (const DatasetSpec& spec : config.datasets) {
    try {
      TableSchema schema = schema_from_json_file(spec.schema_path);
      if (!schema.target)
        throw std::invalid_argument("dataset '" + spec.name + "': schema declares no target");
      Dataset full = load_csv(spec.csv_path, schema, MissingPolicy::impute, DatasetRole::train);
      auto [train, test] =
          split(full, spec.test_fraction, stream_seed(config.master_seed, spec.name + "/split"));
      prepared.push_back({spec.name, std::move(train), std::move(test)});
    } catch (const std::exception& e) {
      CellResult cell;
      cell.dataset = spec.name;
      cell.error = std::string("dataset failed to load: ") + e.what();
      out.cells.push_back(std::move(cell));
    }
  }

  struct Job {
    const Prepared* data;
    Strategy strategy;
    double fraction;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const Prepared& p : prepared)
    for (Strategy s : config.strategies)
      for (double f : config.fractions)
        for (std::uint64_t rep : config.seeds) jobs.push_back({&p, s, f, rep});

  std::vector<CellResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      CellResult& cell = results[i];
      cell.dataset = job.data->name;
      cell.strategy = job.strategy;
      cell.fraction = job.fraction;
      cell.seed = job.seed;
      try {
        // Every cell derives its randomness from the master seed and its own
        // coordinates, so results are independent of execution order.
        const std::string key = cell.dataset + "/" + to_string(job.strategy) + "/" +
                                format_double(job.fraction) + "/" + std::to_string(job.seed);
        const std::uint64_t cell_seed = stream_seed(config.master_seed, key);
        Dataset train =
            sample_fraction(job.data->train, job.fraction, stream_seed(cell_seed, "subsample"));
        StrategyResult result =
            run_strategy(job.strategy, train, job.data->test, config.strategy, cell_seed);
        result.train_fraction = job.fraction;
        cell.result = std::move(result);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };

  const int n_threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(config.threads), jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (CellResult& cell : results) out.cells.push_back(std::move(cell));

  // Best cell per (dataset, strategy); the report needs all three strategies,
  // so it covers only datasets where each strategy has a successful cell.
  std::vector<BestCell> best;
  for (const Prepared& p : prepared) {
    std::vector<BestCell> dataset_best;
    bool complete = true;
    for (int s = 0; s < kNumStrategies && complete; ++s) {
      const Strategy strategy = static_cast<Strategy>(s);
      const CellResult* top = nullptr;
      for (const CellResult& cell : out.cells) {
        if (cell.dataset != p.name || cell.strategy != strategy || !cell.result) continue;
        if (top == nullptr || cell.result->test_roc_auc > top->result->test_roc_auc) top = &cell;
      }
      if (top == nullptr) {
        complete = false;
      } else {
        dataset_best.push_back(
            {p.name, strategy, top->result->test_roc_auc, top->result->same_target});
      }
    }
    if (complete)
      for (BestCell& cell : dataset_best) best.push_back(std::move(cell));
  }
  if (!best.empty()) out.report = aggregate(best);
  return out;
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

void write_cells_csv(const std::string& path, const std::vector<CellResult>& cells) {
  std::string text =
      "dataset,strategy,fraction,seed,status,test_roc_auc,train_target_rate,test_target_rate,"
      "same_target,adversarial_valid_auc,error\n";
  for (const CellResult& cell : cells) {
    text += csv_field(cell.dataset);
    text += ',';
    text += to_string(cell.strategy);
    text += ',';
    text += format_double(cell.fraction);
    text += ',';
    text += std::to_string(cell.seed);
    text += ',';
    if (cell.result) {
      const StrategyResult& r = *cell.result;
      text += "ok,";
      text += format_double(r.test_roc_auc);
      text += ',';
      text += format_double(r.train_target_rate);
      text += ',';
      text += format_double(r.test_target_rate);
      text += ',';
      text += std::to_string(r.same_target);
      text += ',';
      if (r.adversarial_validation) text += format_double(r.adversarial_validation->roc_auc);
      text += ',';
    } else {
      text += "error,,,,,,";
      text += csv_field(cell.error);
      text += '\n';
      continue;
    }
    text += '\n';
  }
  write_text_file(path, text);
}

void write_summary_csv(const std::string& path, const BenchmarkReport& report) {
  std::string text =
      "dataset,none_auc,gan_auc,sample_original_auc,none_scaled,gan_scaled,"
      "sample_original_scaled,winner\n";
  for (std::size_t d = 0; d < report.datasets.size(); ++d) {
    text += csv_field(report.datasets[d]);
    for (std::size_t s = 0; s < kNumStrategies; ++s) {
      text += ',';
      text += format_double(report.raw[d][s]);
    }
    for (std::size_t s = 0; s < kNumStrategies; ++s) {
      text += ',';
      text += format_double(report.scaled[d][s]);
    }
    text += ',';
    std::string winner;
    for (std::size_t s = 0; s < kNumStrategies; ++s) {
      if (report.winner_share[d][s] > 0.0) {
        if (!winner.empty()) winner += '+';
        winner += to_string(static_cast<Strategy>(s));
      }
    }
    text += csv_field(winner);
    text += '\n';
  }
  text += "\nstrategy,wins,mean_scaled,std_scaled,mean_scaled_same_target,n_same_target,";
  text += "mean_scaled_diff_target,n_diff_target\n";
  for (std::size_t s = 0; s < kNumStrategies; ++s) {
    const StrategySummary& summary = report.strategies[s];
    text += to_string(static_cast<Strategy>(s));
    text += ',';
    text += format_double(summary.wins);
    text += ',';
    text += format_double(summary.mean_scaled);
    text += ',';
    text += format_double(summary.std_scaled);
    text += ',';
    if (summary.n_same > 0) text += format_double(summary.mean_scaled_same);
    text += ',';
    text += std::to_string(summary.n_same);
    text += ',';
    if (summary.n_diff > 0) text += format_double(summary.mean_scaled_diff);
    text += ',';
    text += std::to_string(summary.n_diff);
    text += '\n';
  }
  write_text_file(path, text);
}

void write_summary_text(const std::string& path, const BenchmarkReport& report) {
  char line[256];
  std::string text = "Benchmark summary over " + std::to_string(report.datasets.size()) +
                     " dataset(s)\n\n";
  text += "Best test ROC AUC per dataset (higher is better)\n";
  std::snprintf(line, sizeof(line), "  %-20s %10s %10s %18s   %s\n", "dataset", "none", "gan",
                "sample_original", "winner");
  text += line;
  for (std::size_t d = 0; d < report.datasets.size(); ++d) {
    std::string winner;
    for (std::size_t s = 0; s < kNumStrategies; ++s) {
      if (report.winner_share[d][s] > 0.0) {
        if (!winner.empty()) winner += '+';
        winner += to_string(static_cast<Strategy>(s));
      }
    }
    std::snprintf(line, sizeof(line), "  %-20s %10.4f %10.4f %18.4f   %s\n",
                  report.datasets[d].c_str(), report.raw[d][0], report.raw[d][1],
                  report.raw[d][2], winner.c_str());
    text += line;
  }

  text += "\nMin-max scaled within each dataset (all-equal scores scale to 1)\n";
  std::snprintf(line, sizeof(line), "  %-20s %10s %10s %18s\n", "dataset", "none", "gan",
                "sample_original");
  text += line;
  for (std::size_t d = 0; d < report.datasets.size(); ++d) {
    std::snprintf(line, sizeof(line), "  %-20s %10.4f %10.4f %18.4f\n",
                  report.datasets[d].c_str(), report.scaled[d][0], report.scaled[d][1],
                  report.scaled[d][2]);
    text += line;
  }

  text += "\nStrategy summary (wins are fractional under ties)\n";
  std::snprintf(line, sizeof(line), "  %-18s %8s %12s %12s\n", "strategy", "wins", "mean_scaled",
                "std_scaled");
  text += line;
  for (std::size_t s = 0; s < kNumStrategies; ++s) {
    const StrategySummary& summary = report.strategies[s];
    std::snprintf(line, sizeof(line), "  %-18s %8.2f %12.4f %12.4f\n",
                  to_string(static_cast<Strategy>(s)), summary.wins, summary.mean_scaled,
                  summary.std_scaled);
    text += line;
  }

  text += "\nGrouped by target-rate agreement (train vs test within ";
  text += format_double(kSameTargetThreshold);
  text += ")\n";
  std::snprintf(line, sizeof(line), "  %-18s %16s %6s %16s %6s\n", "strategy", "mean_same",
                "n_same", "mean_diff", "n_diff");
  text += line;
  for (std::size_t s = 0; s < kNumStrategies; ++s) {
    const StrategySummary& summary = report.strategies[s];
    std::string mean_same = summary.n_same > 0 ? format_double(summary.mean_scaled_same) : "-";
    std::string mean_diff = summary.n_diff > 0 ? format_double(summary.mean_scaled_diff) : "-";
    std::snprintf(line, sizeof(line), "  %-18s %16s %6ld %16s %6ld\n",
                  to_string(static_cast<Strategy>(s)), mean_same.c_str(), summary.n_same,
                  mean_diff.c_str(), summary.n_diff);
    text += line;
  }
  write_text_file(path, text);
}

}  // namespace tabshift

// tabshift command line: GAN fitting/sampling, adversarial filtering, the
// strategy benchmark, and a plain train/test evaluation.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tabshift/boosting.hpp"
#include "tabshift/ctgan.hpp"
#include "tabshift/data.hpp"
#include "tabshift/model_io.hpp"
#include "tabshift/pipeline.hpp"
#include "tabshift/rng.hpp"

namespace {

using namespace tabshift;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct FitGanArgs {
  std::string data_path;
  std::string schema_path;
  std::string out_path;
  std::string config_path;  // optional run config supplying the gan block
  std::uint64_t seed = 0;
  int epochs = -1;      // -1 keeps the config value
  int batch_size = -1;  // -1 keeps the config value
  bool quiet = false;
};

int cmd_fit_gan(const FitGanArgs& args) {
  CtganConfig config;
  if (!args.config_path.empty()) config = run_config_from_json_file(args.config_path).strategy.gan;
  if (args.epochs >= 0) config.epochs = args.epochs;
  if (args.batch_size >= 0) config.batch_size = args.batch_size;
  config.validate();

  TableSchema schema = schema_from_json_file(args.schema_path);
  Dataset train = load_csv(args.data_path, schema, MissingPolicy::impute, DatasetRole::train);

  TrainTrace trace;
  CtganModel model = train_ctgan(train, config, args.seed, &trace);
  save_model(model, args.out_path);
  if (!args.quiet) {
    std::cout << "fit-gan: trained on " << train.n_rows() << " rows, "
              << trace.critic_loss.size() << " steps";
    if (!trace.critic_loss.empty())
      std::cout << ", final critic loss " << trace.critic_loss.back() << ", generator loss "
                << trace.generator_loss.back();
    if (trace.skipped_steps > 0) std::cout << ", " << trace.skipped_steps << " skipped updates";
    std::cout << "\nfit-gan: model written to " << args.out_path << "\n";
  }
  return kExitOk;
}

struct SampleArgs {
  std::string model_path;
  std::string out_path;
  std::string condition;  // "column=label", empty for unconditional
  long n = 0;
  std::uint64_t seed = 0;
  bool quiet = false;
};

int cmd_sample(const SampleArgs& args) {
  if (args.n < 1) throw std::invalid_argument("sample: --n must be at least 1");
  CtganModel model = load_model(args.model_path);

  std::optional<std::pair<int, int>> condition;
  std::string cond_column, cond_label;
  if (!args.condition.empty()) {
    const std::size_t eq = args.condition.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == args.condition.size())
      throw std::invalid_argument("sample: --condition must look like column=label");
    cond_column = args.condition.substr(0, eq);
    cond_label = args.condition.substr(eq + 1);
    const int col = model.schema.column_index(cond_column);
    if (col < 0)
      throw std::invalid_argument("sample: unknown condition column '" + cond_column + "'");
    if (model.schema.column(col).kind != ColumnKind::categorical)
      throw std::invalid_argument("sample: condition column '" + cond_column +
                                  "' is not categorical");
    const int cat = model.schema.column(col).category_index(cond_label);
    if (cat < 0)
      throw std::invalid_argument("sample: unknown category '" + cond_label + "' for column '" +
                                  cond_column + "'");
    condition = std::make_pair(col, cat);
  }

  Dataset synthetic = sample_ctgan(model, args.n, condition, args.seed);
  write_csv(synthetic, args.out_path);

  if (!args.quiet) {
    std::cout << "sample: wrote " << synthetic.n_rows() << " rows to " << args.out_path << "\n";
    if (condition) {
      const Eigen::VectorXi& values = synthetic.categorical_column(condition->first);
      const long hits = (values.array() == condition->second).count();
      std::cout << "sample: condition " << cond_column << "=" << cond_label << " satisfied by "
                << hits << "/" << synthetic.n_rows() << " rows ("
                << 100.0 * static_cast<double>(hits) / static_cast<double>(synthetic.n_rows())
                << "%)\n";
    }
  }
  return kExitOk;
}

struct FilterArgs {
  std::string pool_path;
  std::string test_path;
  std::string schema_path;
  std::string out_path;
  long keep_n = 0;  // 0 keeps every pool row
  std::uint64_t seed = 0;
  bool quiet = false;
};

int cmd_filter(const FilterArgs& args) {
  TableSchema schema = schema_from_json_file(args.schema_path);
  Dataset pool = load_csv(args.pool_path, schema, MissingPolicy::impute, DatasetRole::train);
  Dataset test = load_csv(args.test_path, pool.schema(), MissingPolicy::impute, DatasetRole::test);

  FilterConfig config;
  config.keep_n = args.keep_n;
  config.seed = args.seed;
  FilterResult result = adversarial_filter_detailed(pool, test, config);
  write_csv(result.kept, args.out_path);

  if (!args.quiet) {
    std::cout << "filter: kept " << result.kept.n_rows() << "/" << pool.n_rows() << " rows to "
              << args.out_path << "\n";
    if (result.validation)
      std::cout << "filter: adversarial holdout ROC AUC " << result.validation->roc_auc << " ("
                << result.validation->n_pos << " test vs " << result.validation->n_neg
                << " pool rows)\n";
  }
  return kExitOk;
}

struct BenchmarkArgs {
  std::string config_path;
  bool quiet = false;
};

int cmd_benchmark(const BenchmarkArgs& args) {
  RunConfig config = run_config_from_json_file(args.config_path);
  if (const char* env = std::getenv("TABSHIFT_THREADS")) {
    try {
      config.threads = std::stoi(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("TABSHIFT_THREADS must be an integer");
    }
    if (config.threads < 1) throw std::invalid_argument("TABSHIFT_THREADS must be at least 1");
  }

  std::filesystem::create_directories(config.output_dir);
  BenchmarkOutput output = run_benchmark(config);

  const std::string cells_path = config.output_dir + "/cells.csv";
  write_cells_csv(cells_path, output.cells);
  long failures = 0;
  for (const CellResult& cell : output.cells)
    if (!cell.error.empty()) ++failures;

  if (!args.quiet) {
    std::cout << "benchmark: " << output.cells.size() << " cells (" << failures
              << " failed), results in " << cells_path << "\n";
    for (const CellResult& cell : output.cells)
      if (!cell.error.empty())
        std::cout << "benchmark: cell " << cell.dataset << "/" << to_string(cell.strategy) << "/"
                  << cell.fraction << "/" << cell.seed << " failed: " << cell.error << "\n";
  }

  if (output.report) {
    const std::string summary_csv = config.output_dir + "/summary.csv";
    const std::string summary_txt = config.output_dir + "/summary.txt";
    write_summary_csv(summary_csv, *output.report);
    write_summary_text(summary_txt, *output.report);
    if (!args.quiet)
      std::cout << "benchmark: summary in " << summary_csv << " and " << summary_txt << "\n";
  } else if (!args.quiet) {
    std::cout << "benchmark: no dataset completed all strategies; summary not written\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string train_path;
  std::string test_path;
  std::string schema_path;
  std::uint64_t seed = 0;
  bool quiet = false;
};

int cmd_eval(const EvalArgs& args) {
  TableSchema schema = schema_from_json_file(args.schema_path);
  if (!schema.target) throw std::invalid_argument("eval: schema declares no target");
  Dataset train = load_csv(args.train_path, schema, MissingPolicy::impute, DatasetRole::train);
  Dataset test = load_csv(args.test_path, train.schema(), MissingPolicy::impute, DatasetRole::test);
  if (!(train.schema() == test.schema()))
    throw std::invalid_argument("eval: train and test schemas differ");

  Eigen::VectorXd labels = train.target_labels(TargetUse::model_training).cast<double>();
  GbdtConfig config;
  auto rng = make_rng(args.seed, "gbdt");
  ClassifierModel model = fit_classifier(train, labels, config, 10.0, 0.25, rng);
  Eigen::VectorXd scores = predict_proba(model, test);
  Eigen::VectorXd truth = test.target_labels(TargetUse::final_scoring).cast<double>();
  const double auc = roc_auc(scores, truth);

  std::cout << "eval: test ROC AUC " << auc << "\n";
  if (!args.quiet && model.validation)
    std::cout << "eval: holdout ROC AUC " << model.validation->roc_auc << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "tabshift: tabular data synthesis and adversarial filtering under distribution shift"};
  app.require_subcommand(1);
  app.footer(
      "Environment:\n"
      "  TABSHIFT_THREADS  overrides the run config's worker thread count (benchmark)");

  FitGanArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit-gan", "Train a conditional GAN on a CSV table");
  fit->add_option("--data", fit_args.data_path, "training CSV")->required();
  fit->add_option("--schema", fit_args.schema_path, "schema JSON")->required();
  fit->add_option("--out", fit_args.out_path, "output model file")->required();
  fit->add_option("--config", fit_args.config_path, "run config JSON supplying the gan block");
  fit->add_option("--seed", fit_args.seed, "master seed (default 0)");
  fit->add_option("--epochs", fit_args.epochs, "override training epochs");
  fit->add_option("--batch-size", fit_args.batch_size, "override batch size");
  fit->add_flag("--quiet", fit_args.quiet, "suppress progress output");

  SampleArgs sample_args;
  CLI::App* sample = app.add_subcommand("sample", "Draw rows from a trained GAN model");
  sample->add_option("--model", sample_args.model_path, "model file from fit-gan")->required();
  sample->add_option("--n", sample_args.n, "number of rows (at least 1)")->required();
  sample->add_option("--out", sample_args.out_path, "output CSV")->required();
  sample->add_option("--condition", sample_args.condition,
                     "fix a categorical column, e.g. job=engineer");
  sample->add_option("--seed", sample_args.seed, "sampling seed (default 0)");
  sample->add_flag("--quiet", sample_args.quiet, "suppress the condition stats line");

  FilterArgs filter_args;
  CLI::App* filter =
      app.add_subcommand("filter", "Keep the pool rows that look most like the test set");
  filter->add_option("--pool", filter_args.pool_path, "candidate training CSV")->required();
  filter->add_option("--test", filter_args.test_path, "test CSV")->required();
  filter->add_option("--schema", filter_args.schema_path, "schema JSON")->required();
  filter->add_option("--out", filter_args.out_path, "output CSV")->required();
  filter->add_option("--keep-n", filter_args.keep_n, "rows to keep (default: all)");
  filter->add_option("--seed", filter_args.seed, "seed (default 0)");
  filter->add_flag("--quiet", filter_args.quiet, "suppress progress output");

  BenchmarkArgs benchmark_args;
  CLI::App* benchmark =
      app.add_subcommand("benchmark", "Run the strategy grid described by a run config");
  benchmark->add_option("--config", benchmark_args.config_path, "run config JSON")->required();
  benchmark->add_flag("--quiet", benchmark_args.quiet, "suppress progress output");

  EvalArgs eval_args;
  CLI::App* eval =
      app.add_subcommand("eval", "Train a boosted classifier and report its test ROC AUC");
  eval->add_option("--train", eval_args.train_path, "training CSV")->required();
  eval->add_option("--test", eval_args.test_path, "test CSV")->required();
  eval->add_option("--schema", eval_args.schema_path, "schema JSON")->required();
  eval->add_option("--seed", eval_args.seed, "seed (default 0)");
  eval->add_flag("--quiet", eval_args.quiet, "suppress the holdout line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit_gan(fit_args);
    if (sample->parsed()) return cmd_sample(sample_args);
    if (filter->parsed()) return cmd_filter(filter_args);
    if (benchmark->parsed()) return cmd_benchmark(benchmark_args);
    if (eval->parsed()) return cmd_eval(eval_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cerr << "error: no subcommand\n";
  return kExitUsage;
}

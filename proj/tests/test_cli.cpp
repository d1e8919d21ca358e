// End-to-end tests driving the installed command line binary. The test runner
// exports TABSHIFT_CLI with the binary's path (set by CMake).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace {

std::string cli_path() {
  const char* env = std::getenv("TABSHIFT_CLI");
  REQUIRE_MESSAGE(env != nullptr, "TABSHIFT_CLI must point at the tabshift binary");
  return env;
}

const std::string kDir = "/tmp/tabshift_cli_test";

// Runs the binary with the given arguments, captures stdout+stderr into
// `captured`, and returns the decoded exit code.
int run_cli(const std::string& args, std::string* captured = nullptr) {
  const std::string out_path = kDir + "/last_output.txt";
  const std::string cmd = cli_path() + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (captured) {
    std::ifstream in(out_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    *captured = buffer.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Writes a csv where the label tracks sign(x) with a little noise; group is a
// two-level categorical correlated with x so the GAN has discrete structure.
void write_region_csv(const std::string& path, long n, double center, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> x_src(center, 0.5);
  std::bernoulli_distribution flip(0.1);
  std::ofstream out(path);
  out << "x,group,label\n";
  for (long i = 0; i < n; ++i) {
    const double x = x_src(rng);
    bool y = x > center;
    if (flip(rng)) y = !y;
    out << x << "," << (x > center ? "B" : "A") << "," << (y ? "yes" : "no") << "\n";
  }
}

void write_schema(const std::string& path) {
  std::ofstream out(path);
  out << R"({"columns": [
    {"name": "x", "kind": "continuous"},
    {"name": "group", "kind": "categorical", "categories": ["A", "B"]},
    {"name": "label", "kind": "categorical", "categories": ["no", "yes"]}
  ], "target": "label"})";
}

struct Workspace {
  Workspace() {
    std::filesystem::create_directories(kDir);
    write_region_csv(kDir + "/train.csv", 240, 0.0, 11);
    write_region_csv(kDir + "/test.csv", 120, 0.0, 12);
    write_schema(kDir + "/schema.json");
  }
};

const Workspace& workspace() {
  static Workspace ws;
  return ws;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  workspace();
  std::string out;
  CHECK(run_cli("", &out) == 1);  // a subcommand is required
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("frobnicate", &out) == 1);
  CHECK(run_cli("sample --model nowhere.bin --n 0 --out x.csv", &out) == 1);
  CHECK(out.find("--n") != std::string::npos);
}

TEST_CASE("missing input files are runtime failures") {
  workspace();
  std::string out;
  CHECK(run_cli("sample --model " + kDir + "/nowhere.bin --n 5 --out " + kDir + "/s.csv", &out) ==
        2);
  CHECK(run_cli("eval --train " + kDir + "/absent.csv --test " + kDir + "/test.csv --schema " +
                    kDir + "/schema.json",
                &out) == 2);
  CHECK(out.find("absent.csv") != std::string::npos);
}

TEST_CASE("eval reports the test roc auc") {
  workspace();
  std::string out;
  const int code = run_cli("eval --train " + kDir + "/train.csv --test " + kDir +
                               "/test.csv --schema " + kDir + "/schema.json --seed 3",
                           &out);
  CHECK(code == 0);
  CHECK(out.find("eval: test ROC AUC") != std::string::npos);
  CHECK(out.find("eval: holdout ROC AUC") != std::string::npos);
}

TEST_CASE("fit-gan, sample, and filter chain together") {
  workspace();
  std::string out;
  const std::string model = kDir + "/model.bin";

  const int fit_code =
      run_cli("fit-gan --data " + kDir + "/train.csv --schema " + kDir + "/schema.json --out " +
                  model + " --seed 5 --epochs 2 --batch-size 32",
              &out);
  CHECK(fit_code == 0);
  CHECK(out.find("model written") != std::string::npos);
  CHECK(std::filesystem::exists(model));

  // Sampling is deterministic per seed.
  CHECK(run_cli("sample --model " + model + " --n 40 --out " + kDir + "/s1.csv --seed 7") == 0);
  CHECK(run_cli("sample --model " + model + " --n 40 --out " + kDir + "/s2.csv --seed 7") == 0);
  CHECK(read_file(kDir + "/s1.csv") == read_file(kDir + "/s2.csv"));
  CHECK(run_cli("sample --model " + model + " --n 40 --out " + kDir + "/s3.csv --seed 8") == 0);
  CHECK(read_file(kDir + "/s1.csv") != read_file(kDir + "/s3.csv"));

  // Conditional sampling reports compliance; bad conditions are usage errors.
  CHECK(run_cli("sample --model " + model + " --n 30 --out " + kDir +
                    "/sc.csv --condition group=B --seed 7",
                &out) == 0);
  CHECK(out.find("condition group=B satisfied by") != std::string::npos);
  CHECK(run_cli("sample --model " + model + " --n 5 --out " + kDir + "/x.csv --condition x=1",
                &out) == 1);
  CHECK(out.find("not categorical") != std::string::npos);
  CHECK(run_cli("sample --model " + model + " --n 5 --out " + kDir + "/x.csv --condition group=Z",
                &out) == 1);

  // Filtering keeps the requested number of rows.
  const int filter_code =
      run_cli("filter --pool " + kDir + "/train.csv --test " + kDir + "/test.csv --schema " +
                  kDir + "/schema.json --out " + kDir + "/kept.csv --keep-n 50 --seed 2",
              &out);
  CHECK(filter_code == 0);
  CHECK(out.find("filter: kept 50/240 rows") != std::string::npos);
  const std::string kept = read_file(kDir + "/kept.csv");
  CHECK(std::count(kept.begin(), kept.end(), '\n') == 51);  // header + 50 rows
}

TEST_CASE("benchmark writes cell and summary reports") {
  workspace();
  const std::string out_dir = kDir + "/bench";
  std::filesystem::remove_all(out_dir);
  {
    std::ofstream config(kDir + "/run.json");
    config << R"({
      "master_seed": 4,
      "output_dir": ")" << out_dir << R"(",
      "fractions": [0.6],
      "seeds": [1],
      "datasets": [{"name": "toy", "csv": ")" << kDir << R"(/train.csv",
                    "schema": ")" << kDir << R"(/schema.json"}],
      "gan": {"epochs": 2, "batch_size": 32, "noise_dim": 8,
              "generator_hidden": [16], "critic_hidden": [16], "em_m_max": 2},
      "gbdt": {"n_trees": 25}
    })";
  }

  std::string out;
  CHECK(run_cli("benchmark --config " + kDir + "/run.json", &out) == 0);
  CHECK(out.find("benchmark:") != std::string::npos);
  CHECK(std::filesystem::exists(out_dir + "/cells.csv"));
  CHECK(std::filesystem::exists(out_dir + "/summary.csv"));
  CHECK(std::filesystem::exists(out_dir + "/summary.txt"));
  const std::string cells_first = read_file(out_dir + "/cells.csv");
  CHECK(cells_first.find("toy,none,") != std::string::npos);
  CHECK(cells_first.find("toy,gan,") != std::string::npos);
  CHECK(cells_first.find("toy,sample_original,") != std::string::npos);

  // Re-running the same config reproduces the cell report byte for byte,
  // also under a different worker count.
  const int rerun = std::system(("TABSHIFT_THREADS=2 " + cli_path() + " benchmark --config " +
                                 kDir + "/run.json > /dev/null 2>&1")
                                    .c_str());
  CHECK(WIFEXITED(rerun));
  CHECK(WEXITSTATUS(rerun) == 0);
  CHECK(read_file(out_dir + "/cells.csv") == cells_first);

  // Unknown config keys are named in the error.
  {
    std::ofstream config(kDir + "/bad.json");
    config << R"({"datasets": [{"name": "a", "csv": "b", "schema": "c"}], "fracions": [0.5]})";
  }
  CHECK(run_cli("benchmark --config " + kDir + "/bad.json", &out) == 1);
  CHECK(out.find("fracions") != std::string::npos);

  std::filesystem::remove_all(kDir);
}

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tabshift {

enum class ColumnKind { continuous, categorical };

// Label used when a categorical cell is missing or (under the lenient
// policy) carries a category outside the declared universe.
inline constexpr const char* kMissingCategory = "<missing>";

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<std::string> categories;  // categorical only

  int n_categories() const { return static_cast<int>(categories.size()); }
  // Index of a category label, -1 when unknown.
  int category_index(const std::string& label) const;
};

struct TableSchema {
  std::vector<ColumnSpec> columns;
  std::optional<std::string> target;  // binary categorical column

  int width() const { return static_cast<int>(columns.size()); }
  int column_index(const std::string& name) const;  // -1 when absent
  int target_index() const;                         // -1 when no target
  const ColumnSpec& column(int i) const { return columns.at(static_cast<std::size_t>(i)); }

  // Throws std::invalid_argument on duplicate names, continuous columns with
  // category lists, duplicate category labels, or a target that is absent,
  // non-categorical, or not binary. Categorical columns may have an empty
  // category list before data is seen; load_csv fills them in.
  void validate(bool require_categories = false) const;

  bool operator==(const TableSchema& other) const;
};

// A cell holds either a finite real (continuous) or a category index.
using Cell = std::variant<double, std::int32_t>;

struct Row {
  std::vector<Cell> cells;
};

enum class DatasetRole { train, test, synthetic };

const char* to_string(DatasetRole role);

// Purpose tag attached to every extraction of ground-truth labels.
enum class TargetUse { model_training, final_scoring, statistics };

// Records each extraction of a dataset's ground-truth labels. Attach one to
// a dataset (all copies and subsets share it) to audit which code paths read
// the target column.
struct TargetAuditLog {
  std::vector<TargetUse> accesses;
  int count(TargetUse use) const;
};

using ColumnData = std::variant<Eigen::VectorXd, Eigen::VectorXi>;

// Immutable typed table. Storage is columnar: continuous columns are dense
// real vectors, categorical columns are index vectors into the schema's
// category lists. All mutation happens at construction; instances are safe
// to share across threads.
class Dataset {
 public:
  Dataset() = default;
  Dataset(TableSchema schema, const std::vector<Row>& rows, DatasetRole role);
  static Dataset from_columns(TableSchema schema, std::vector<ColumnData> columns,
                              DatasetRole role);

  const TableSchema& schema() const { return schema_; }
  DatasetRole role() const { return role_; }
  long n_rows() const { return n_rows_; }
  int n_columns() const { return schema_.width(); }

  double continuous_at(long row, int col) const;
  std::int32_t category_at(long row, int col) const;
  Row row(long i) const;

  const Eigen::VectorXd& continuous_column(int col) const;
  const Eigen::VectorXi& categorical_column(int col) const;

  // The sanctioned reader of ground-truth labels (0/1 category indices of
  // the target column; index 1 is the positive class). Logs the purpose to
  // the attached audit, when any. Throws when the schema has no target.
  Eigen::VectorXi target_labels(TargetUse use) const;

  // Row subset in the given index order; indices may repeat. Shares the
  // audit log and keeps per-row provenance.
  Dataset subset(const std::vector<long>& indices, DatasetRole new_role) const;

  // Copy without the target column (schema loses the target). Used to build
  // feature views that cannot touch ground-truth labels by construction.
  Dataset strip_target() const;

  // Per-row provenance; differs from role() only for concatenated pools.
  DatasetRole row_origin(long i) const;

  void attach_audit(std::shared_ptr<TargetAuditLog> log) { audit_ = std::move(log); }
  const std::shared_ptr<TargetAuditLog>& audit() const { return audit_; }

  // Concatenates two datasets with identical schemas, keeping each row's
  // origin role.
  friend Dataset concat(const Dataset& a, const Dataset& b, DatasetRole role);

 private:
  TableSchema schema_;
  std::vector<ColumnData> columns_;
  long n_rows_ = 0;
  DatasetRole role_ = DatasetRole::train;
  std::vector<DatasetRole> row_origin_;  // empty: uniform role_
  std::shared_ptr<TargetAuditLog> audit_;

  void validate_columns() const;
};

Dataset concat(const Dataset& a, const Dataset& b, DatasetRole role);

enum class MissingPolicy { strict, impute };

struct LoadStats {
  std::vector<long> imputed_continuous;   // per schema column
  std::vector<long> missing_categorical;  // per schema column
  long n_rows = 0;
};

// Reads an RFC-4180 CSV with a header row. The header must contain exactly
// the schema's column names (any order). Under MissingPolicy::impute, empty
// or non-finite continuous cells become the column mean and unknown or empty
// categorical labels map to the "<missing>" category, appended to the
// returned dataset's schema when first needed. Under strict, any of those is
// an error. Categorical columns declared with an empty category list get
// their universe inferred in order of first appearance.
Dataset load_csv(const std::string& path, const TableSchema& schema, MissingPolicy policy,
                 DatasetRole role = DatasetRole::train, LoadStats* stats = nullptr);

// Writes the dataset as CSV (header + rows). Continuous cells use
// shortest-round-trip formatting, so write/load cycles are exact.
void write_csv(const Dataset& ds, const std::string& path);

// Deterministic disjoint partition into (train, test); the test part gets
// round(test_fraction * n) rows.
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed);

// Uniform sample without replacement of round(fraction * n) rows, keeping
// original row order.
Dataset sample_fraction(const Dataset& ds, double fraction, std::uint64_t seed);

// Fraction of rows whose target equals the positive category (index 1).
double target_rate(const Dataset& ds);

// Schema config file: a JSON object with keys "columns" (list of {name,
// kind, categories}) and optional "target".
TableSchema schema_from_json_file(const std::string& path);
TableSchema schema_from_json_text(const std::string& text);

}  // namespace tabshift

#include "tabshift/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "tabshift/rng.hpp"

namespace tabshift {

namespace {

// Misuse of the API or malformed configuration.
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Problems with the files being read or written at run time.
[[noreturn]] void fail_data(const std::string& msg) { throw std::runtime_error(msg); }

}  // namespace

int ColumnSpec::category_index(const std::string& label) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == label) return static_cast<int>(i);
  }
  return -1;
}

int TableSchema::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int TableSchema::target_index() const {
  if (!target) return -1;
  return column_index(*target);
}

void TableSchema::validate(bool require_categories) const {
  std::unordered_set<std::string> names;
  for (const auto& col : columns) {
    if (col.name.empty()) fail("schema: empty column name");
    if (!names.insert(col.name).second) fail("schema: duplicate column name '" + col.name + "'");
    if (col.kind == ColumnKind::continuous && !col.categories.empty()) {
      fail("schema: continuous column '" + col.name + "' carries a category list");
    }
    if (col.kind == ColumnKind::categorical) {
      std::unordered_set<std::string> labels;
      for (const auto& c : col.categories) {
        if (!labels.insert(c).second) {
          fail("schema: duplicate category '" + c + "' in column '" + col.name + "'");
        }
      }
      if (require_categories && col.categories.empty()) {
        fail("schema: column '" + col.name + "' has no categories");
      }
    }
  }
  if (target) {
    int ti = column_index(*target);
    if (ti < 0) fail("schema: target column '" + *target + "' does not exist");
    const ColumnSpec& t = columns[static_cast<std::size_t>(ti)];
    if (t.kind != ColumnKind::categorical) fail("schema: target '" + *target + "' is not categorical");
    // An empty list means "infer at load"; a declared list must be binary.
    if ((require_categories || !t.categories.empty()) && t.n_categories() != 2) {
      fail("schema: target '" + *target + "' must have exactly 2 categories, has " +
           std::to_string(t.n_categories()));
    }
  }
}

bool TableSchema::operator==(const TableSchema& other) const {
  if (target != other.target) return false;
  if (columns.size() != other.columns.size()) return false;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name != other.columns[i].name) return false;
    if (columns[i].kind != other.columns[i].kind) return false;
    if (columns[i].categories != other.columns[i].categories) return false;
  }
  return true;
}

const char* to_string(DatasetRole role) {
  switch (role) {
    case DatasetRole::train: return "train";
    case DatasetRole::test: return "test";
    case DatasetRole::synthetic: return "synthetic";
  }
  return "?";
}

int TargetAuditLog::count(TargetUse use) const {
  int n = 0;
  for (TargetUse u : accesses) {
    if (u == use) ++n;
  }
  return n;
}

Dataset::Dataset(TableSchema schema, const std::vector<Row>& rows, DatasetRole role)
    : schema_(std::move(schema)), role_(role) {
  schema_.validate(true);
  n_rows_ = static_cast<long>(rows.size());
  columns_.reserve(static_cast<std::size_t>(schema_.width()));
  for (int c = 0; c < schema_.width(); ++c) {
    if (schema_.column(c).kind == ColumnKind::continuous) {
      Eigen::VectorXd v(n_rows_);
      for (long r = 0; r < n_rows_; ++r) {
        const Row& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<int>(row.cells.size()) != schema_.width()) {
          fail("dataset: row " + std::to_string(r) + " has " + std::to_string(row.cells.size()) +
               " cells, schema width is " + std::to_string(schema_.width()));
        }
        const double* p = std::get_if<double>(&row.cells[static_cast<std::size_t>(c)]);
        if (!p) fail("dataset: row " + std::to_string(r) + " column " + std::to_string(c) + " is not continuous");
        v[r] = *p;
      }
      columns_.emplace_back(std::move(v));
    } else {
      Eigen::VectorXi v(n_rows_);
      for (long r = 0; r < n_rows_; ++r) {
        const Row& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<int>(row.cells.size()) != schema_.width()) {
          fail("dataset: row " + std::to_string(r) + " has " + std::to_string(row.cells.size()) +
               " cells, schema width is " + std::to_string(schema_.width()));
        }
        const std::int32_t* p = std::get_if<std::int32_t>(&row.cells[static_cast<std::size_t>(c)]);
        if (!p) fail("dataset: row " + std::to_string(r) + " column " + std::to_string(c) + " is not categorical");
        v[r] = *p;
      }
      columns_.emplace_back(std::move(v));
    }
  }
  validate_columns();
}

Dataset Dataset::from_columns(TableSchema schema, std::vector<ColumnData> columns, DatasetRole role) {
  Dataset ds;
  ds.schema_ = std::move(schema);
  ds.schema_.validate(true);
  ds.columns_ = std::move(columns);
  ds.role_ = role;
  if (ds.columns_.size() != static_cast<std::size_t>(ds.schema_.width())) {
    fail("dataset: column count does not match schema width");
  }
  long n = -1;
  for (const auto& col : ds.columns_) {
    long rows = std::holds_alternative<Eigen::VectorXd>(col)
                    ? std::get<Eigen::VectorXd>(col).size()
                    : std::get<Eigen::VectorXi>(col).size();
    if (n < 0) n = rows;
    if (rows != n) fail("dataset: ragged columns");
  }
  ds.n_rows_ = std::max(n, 0L);
  ds.validate_columns();
  return ds;
}

void Dataset::validate_columns() const {
  for (int c = 0; c < schema_.width(); ++c) {
    const ColumnSpec& spec = schema_.column(c);
    if (spec.kind == ColumnKind::continuous) {
      if (!std::holds_alternative<Eigen::VectorXd>(columns_[static_cast<std::size_t>(c)])) {
        fail("dataset: column '" + spec.name + "' storage kind mismatch");
      }
      const auto& v = std::get<Eigen::VectorXd>(columns_[static_cast<std::size_t>(c)]);
      if (!v.allFinite()) fail("dataset: non-finite value in continuous column '" + spec.name + "'");
    } else {
      if (!std::holds_alternative<Eigen::VectorXi>(columns_[static_cast<std::size_t>(c)])) {
        fail("dataset: column '" + spec.name + "' storage kind mismatch");
      }
      const auto& v = std::get<Eigen::VectorXi>(columns_[static_cast<std::size_t>(c)]);
      for (long r = 0; r < v.size(); ++r) {
        if (v[r] < 0 || v[r] >= spec.n_categories()) {
          fail("dataset: invalid category index " + std::to_string(v[r]) + " in column '" + spec.name + "'");
        }
      }
    }
  }
}

double Dataset::continuous_at(long row, int col) const {
  const ColumnData& data = columns_.at(static_cast<std::size_t>(col));
  if (!std::holds_alternative<Eigen::VectorXd>(data)) {
    fail("dataset: column '" + schema_.column(col).name + "' is not continuous");
  }
  return std::get<Eigen::VectorXd>(data)[row];
}

std::int32_t Dataset::category_at(long row, int col) const {
  const ColumnData& data = columns_.at(static_cast<std::size_t>(col));
  if (!std::holds_alternative<Eigen::VectorXi>(data)) {
    fail("dataset: column '" + schema_.column(col).name + "' is not categorical");
  }
  return std::get<Eigen::VectorXi>(data)[row];
}

Row Dataset::row(long i) const {
  Row r;
  r.cells.reserve(static_cast<std::size_t>(schema_.width()));
  for (int c = 0; c < schema_.width(); ++c) {
    if (schema_.column(c).kind == ColumnKind::continuous) {
      r.cells.emplace_back(continuous_at(i, c));
    } else {
      r.cells.emplace_back(category_at(i, c));
    }
  }
  return r;
}

const Eigen::VectorXd& Dataset::continuous_column(int col) const {
  return std::get<Eigen::VectorXd>(columns_.at(static_cast<std::size_t>(col)));
}

const Eigen::VectorXi& Dataset::categorical_column(int col) const {
  return std::get<Eigen::VectorXi>(columns_.at(static_cast<std::size_t>(col)));
}

Eigen::VectorXi Dataset::target_labels(TargetUse use) const {
  int ti = schema_.target_index();
  if (ti < 0) fail("dataset: no target column declared");
  if (audit_) audit_->accesses.push_back(use);
  return categorical_column(ti);
}

Dataset Dataset::subset(const std::vector<long>& indices, DatasetRole new_role) const {
  Dataset out;
  out.schema_ = schema_;
  out.role_ = new_role;
  out.n_rows_ = static_cast<long>(indices.size());
  out.audit_ = audit_;
  out.columns_.reserve(columns_.size());
  for (long idx : indices) {
    if (idx < 0 || idx >= n_rows_) fail("dataset: subset index out of range");
  }
  for (const auto& col : columns_) {
    if (std::holds_alternative<Eigen::VectorXd>(col)) {
      const auto& src = std::get<Eigen::VectorXd>(col);
      Eigen::VectorXd v(out.n_rows_);
      for (long i = 0; i < out.n_rows_; ++i) v[i] = src[indices[static_cast<std::size_t>(i)]];
      out.columns_.emplace_back(std::move(v));
    } else {
      const auto& src = std::get<Eigen::VectorXi>(col);
      Eigen::VectorXi v(out.n_rows_);
      for (long i = 0; i < out.n_rows_; ++i) v[i] = src[indices[static_cast<std::size_t>(i)]];
      out.columns_.emplace_back(std::move(v));
    }
  }
  if (!row_origin_.empty()) {
    out.row_origin_.reserve(indices.size());
    for (long idx : indices) out.row_origin_.push_back(row_origin_[static_cast<std::size_t>(idx)]);
  } else if (new_role != role_) {
    out.row_origin_.assign(indices.size(), role_);
  }
  return out;
}

Dataset Dataset::strip_target() const {
  if (!schema_.target) return *this;
  int ti = schema_.target_index();
  Dataset out;
  out.schema_.target = std::nullopt;
  out.role_ = role_;
  out.n_rows_ = n_rows_;
  out.row_origin_ = row_origin_;
  out.audit_ = audit_;
  for (int c = 0; c < schema_.width(); ++c) {
    if (c == ti) continue;
    out.schema_.columns.push_back(schema_.column(c));
    out.columns_.push_back(columns_[static_cast<std::size_t>(c)]);
  }
  return out;
}

DatasetRole Dataset::row_origin(long i) const {
  if (row_origin_.empty()) return role_;
  return row_origin_.at(static_cast<std::size_t>(i));
}

Dataset concat(const Dataset& a, const Dataset& b, DatasetRole role) {
  if (!(a.schema_ == b.schema_)) fail("concat: schema mismatch");
  Dataset out;
  out.schema_ = a.schema_;
  out.role_ = role;
  out.n_rows_ = a.n_rows_ + b.n_rows_;
  out.columns_.reserve(a.columns_.size());
  for (std::size_t c = 0; c < a.columns_.size(); ++c) {
    if (std::holds_alternative<Eigen::VectorXd>(a.columns_[c])) {
      Eigen::VectorXd v(out.n_rows_);
      v << std::get<Eigen::VectorXd>(a.columns_[c]), std::get<Eigen::VectorXd>(b.columns_[c]);
      out.columns_.emplace_back(std::move(v));
    } else {
      Eigen::VectorXi v(out.n_rows_);
      v << std::get<Eigen::VectorXi>(a.columns_[c]), std::get<Eigen::VectorXi>(b.columns_[c]);
      out.columns_.emplace_back(std::move(v));
    }
  }
  out.row_origin_.reserve(static_cast<std::size_t>(out.n_rows_));
  for (long i = 0; i < a.n_rows_; ++i) out.row_origin_.push_back(a.row_origin(i));
  for (long i = 0; i < b.n_rows_; ++i) out.row_origin_.push_back(b.row_origin(i));
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

// RFC-4180 field splitter: quoted fields, doubled quotes, newlines inside
// quotes, LF or CRLF records.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text, const std::string& path) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && !field_started && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
    } else {
      field.push_back(ch);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) fail_data("csv: unterminated quoted field in " + path);
  if (!field.empty() || !record.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_record();
  }
  return records;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

std::string csv_escape(const std::string& s) {
  bool needs_quotes = s.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, const TableSchema& schema, MissingPolicy policy,
                 DatasetRole role, LoadStats* stats) {
  schema.validate(false);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("load_csv: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto records = parse_csv_records(text, path);
  if (records.empty()) fail_data("load_csv: '" + path + "' has no header row");

  const auto& header = records.front();
  const int ncols = schema.width();
  std::vector<int> file_col_of(static_cast<std::size_t>(ncols), -1);
  for (int c = 0; c < ncols; ++c) {
    for (std::size_t f = 0; f < header.size(); ++f) {
      if (header[f] == schema.column(c).name) {
        file_col_of[static_cast<std::size_t>(c)] = static_cast<int>(f);
        break;
      }
    }
    if (file_col_of[static_cast<std::size_t>(c)] < 0) {
      fail_data("load_csv: header of '" + path + "' is missing column '" + schema.column(c).name + "'");
    }
  }
  if (header.size() != static_cast<std::size_t>(ncols)) {
    fail_data("load_csv: header of '" + path + "' has " + std::to_string(header.size()) +
         " columns, schema expects " + std::to_string(ncols));
  }

  TableSchema out_schema = schema;
  const long n = static_cast<long>(records.size()) - 1;
  LoadStats local;
  local.imputed_continuous.assign(static_cast<std::size_t>(ncols), 0);
  local.missing_categorical.assign(static_cast<std::size_t>(ncols), 0);
  local.n_rows = n;

  std::vector<ColumnData> columns;
  columns.reserve(static_cast<std::size_t>(ncols));
  for (int c = 0; c < ncols; ++c) {
    ColumnSpec& spec = out_schema.columns[static_cast<std::size_t>(c)];
    const int fc = file_col_of[static_cast<std::size_t>(c)];
    auto cell_at = [&](long r) -> const std::string& {
      const auto& rec = records[static_cast<std::size_t>(r) + 1];
      if (rec.size() != static_cast<std::size_t>(ncols)) {
        fail_data("load_csv: row " + std::to_string(r + 1) + " of '" + path + "' has " +
             std::to_string(rec.size()) + " fields, expected " + std::to_string(ncols));
      }
      return rec[static_cast<std::size_t>(fc)];
    };
    if (spec.kind == ColumnKind::continuous) {
      Eigen::VectorXd v(n);
      std::vector<long> missing;
      double sum = 0.0;
      long present = 0;
      for (long r = 0; r < n; ++r) {
        const std::string& s = cell_at(r);
        double x = 0.0;
        if (s.empty()) {
          if (policy == MissingPolicy::strict) {
            fail_data("load_csv: missing value at row " + std::to_string(r + 1) + ", column '" + spec.name + "'");
          }
          missing.push_back(r);
          continue;
        }
        if (!parse_double(s, x)) {
          fail_data("load_csv: unparseable cell '" + s + "' at row " + std::to_string(r + 1) +
               ", column '" + spec.name + "'");
        }
        if (!std::isfinite(x)) {
          if (policy == MissingPolicy::strict) {
            fail_data("load_csv: non-finite value at row " + std::to_string(r + 1) + ", column '" + spec.name + "'");
          }
          missing.push_back(r);
          continue;
        }
        v[r] = x;
        sum += x;
        ++present;
      }
      if (!missing.empty()) {
        if (present == 0) fail_data("load_csv: column '" + spec.name + "' has no parseable values");
        const double mean = sum / static_cast<double>(present);
        for (long r : missing) v[r] = mean;
        local.imputed_continuous[static_cast<std::size_t>(c)] = static_cast<long>(missing.size());
      }
      columns.emplace_back(std::move(v));
    } else {
      const bool infer = spec.categories.empty();
      std::unordered_map<std::string, int> index;
      for (std::size_t k = 0; k < spec.categories.size(); ++k) {
        index[spec.categories[k]] = static_cast<int>(k);
      }
      Eigen::VectorXi v(n);
      for (long r = 0; r < n; ++r) {
        const std::string& s = cell_at(r);
        if (s.empty()) {
          if (policy == MissingPolicy::strict) {
            fail_data("load_csv: missing value at row " + std::to_string(r + 1) + ", column '" + spec.name + "'");
          }
          auto it = index.find(kMissingCategory);
          if (it == index.end()) {
            it = index.emplace(kMissingCategory, static_cast<int>(spec.categories.size())).first;
            spec.categories.push_back(kMissingCategory);
          }
          v[r] = it->second;
          ++local.missing_categorical[static_cast<std::size_t>(c)];
          continue;
        }
        auto it = index.find(s);
        if (it == index.end()) {
          if (infer) {
            it = index.emplace(s, static_cast<int>(spec.categories.size())).first;
            spec.categories.push_back(s);
          } else if (policy == MissingPolicy::strict) {
            fail_data("load_csv: unknown category '" + s + "' at row " + std::to_string(r + 1) +
                 ", column '" + spec.name + "'");
          } else {
            it = index.find(kMissingCategory);
            if (it == index.end()) {
              it = index.emplace(kMissingCategory, static_cast<int>(spec.categories.size())).first;
              spec.categories.push_back(kMissingCategory);
            }
            ++local.missing_categorical[static_cast<std::size_t>(c)];
          }
        }
        v[r] = it->second;
      }
      columns.emplace_back(std::move(v));
    }
  }
  if (stats) *stats = local;
  return Dataset::from_columns(std::move(out_schema), std::move(columns), role);
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("write_csv: cannot open '" + path + "' for writing");
  const auto& schema = ds.schema();
  for (int c = 0; c < schema.width(); ++c) {
    if (c) out << ',';
    out << csv_escape(schema.column(c).name);
  }
  out << '\n';
  for (long r = 0; r < ds.n_rows(); ++r) {
    for (int c = 0; c < schema.width(); ++c) {
      if (c) out << ',';
      if (schema.column(c).kind == ColumnKind::continuous) {
        out << format_double(ds.continuous_at(r, c));
      } else {
        out << csv_escape(schema.column(c).categories[static_cast<std::size_t>(ds.category_at(r, c))]);
      }
    }
    out << '\n';
  }
  if (!out) fail_data("write_csv: write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Sampling and splits
// ---------------------------------------------------------------------------

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  const long n = ds.n_rows();
  if (n < 2) fail("split: dataset needs at least 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("split: test_fraction must be in (0,1)");
  const long k = std::lround(test_fraction * static_cast<double>(n));
  if (k < 1 || k >= n) fail("split: degenerate fraction for dataset of " + std::to_string(n) + " rows");
  std::vector<long> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);
  auto rng = make_rng(seed, "split");
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<long> test_idx(idx.begin(), idx.begin() + k);
  std::vector<long> train_idx(idx.begin() + k, idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {ds.subset(train_idx, DatasetRole::train), ds.subset(test_idx, DatasetRole::test)};
}

Dataset sample_fraction(const Dataset& ds, double fraction, std::uint64_t seed) {
  const long n = ds.n_rows();
  if (!(fraction > 0.0 && fraction <= 1.0)) fail("sample_fraction: fraction must be in (0,1]");
  const long k = std::lround(fraction * static_cast<double>(n));
  if (k < 1) fail("sample_fraction: empty result for fraction " + std::to_string(fraction));
  std::vector<long> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0L);
  auto rng = make_rng(seed, "sample_fraction");
  for (long i = 0; i < k; ++i) {
    std::uniform_int_distribution<long> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<long> chosen(idx.begin(), idx.begin() + k);
  std::sort(chosen.begin(), chosen.end());
  return ds.subset(chosen, ds.role());
}

double target_rate(const Dataset& ds) {
  Eigen::VectorXi labels = ds.target_labels(TargetUse::statistics);
  if (labels.size() == 0) return 0.0;
  return static_cast<double>((labels.array() == 1).count()) / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Schema config
// ---------------------------------------------------------------------------

namespace {

TableSchema schema_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("schema config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "columns" && key != "target") fail("schema config: unknown key '" + key + "'");
  }
  if (!j.contains("columns") || !j["columns"].is_array()) {
    fail("schema config: missing 'columns' array");
  }
  TableSchema schema;
  for (const auto& jc : j["columns"]) {
    if (!jc.is_object()) fail("schema config: each column must be an object");
    for (const auto& [key, value] : jc.items()) {
      (void)value;
      if (key != "name" && key != "kind" && key != "categories") {
        fail("schema config: unknown column key '" + key + "'");
      }
    }
    ColumnSpec spec;
    if (!jc.contains("name") || !jc["name"].is_string()) fail("schema config: column needs a 'name' string");
    spec.name = jc["name"].get<std::string>();
    if (!jc.contains("kind") || !jc["kind"].is_string()) {
      fail("schema config: column '" + spec.name + "' needs a 'kind' string");
    }
    const std::string kind = jc["kind"].get<std::string>();
    if (kind == "continuous") {
      spec.kind = ColumnKind::continuous;
    } else if (kind == "categorical") {
      spec.kind = ColumnKind::categorical;
    } else {
      fail("schema config: column '" + spec.name + "': kind must be 'continuous' or 'categorical', got '" +
           kind + "'");
    }
    if (jc.contains("categories")) {
      if (spec.kind != ColumnKind::categorical) {
        fail("schema config: column '" + spec.name + "' is continuous but lists categories");
      }
      for (const auto& c : jc["categories"]) {
        if (!c.is_string()) fail("schema config: categories of '" + spec.name + "' must be strings");
        spec.categories.push_back(c.get<std::string>());
      }
    }
    schema.columns.push_back(std::move(spec));
  }
  if (j.contains("target")) {
    if (!j["target"].is_string()) fail("schema config: 'target' must be a string");
    schema.target = j["target"].get<std::string>();
  }
  schema.validate(false);
  return schema;
}

}  // namespace

TableSchema schema_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("schema config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail("schema config: '" + path + "' is not valid JSON: " + e.what());
  }
  return schema_from_json(j);
}

TableSchema schema_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("schema config: invalid JSON: ") + e.what());
  }
  return schema_from_json(j);
}

}  // namespace tabshift

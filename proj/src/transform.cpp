#include "tabshift/transform.hpp"

#include <cmath>
#include <stdexcept>

#include "tabshift/rng.hpp"

namespace tabshift {

namespace {

int argmax_block(const Eigen::VectorXd& v, int offset, int width) {
  int best = 0;
  for (int k = 1; k < width; ++k) {
    if (v[offset + k] > v[offset + best]) best = k;
  }
  return best;
}

// CDF-inversion draw; ties and zero-probability tails resolve to the lowest
// admissible index.
int sample_index(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (int k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

void TableTransformer::build_spans() {
  long n_continuous = 0;
  for (const ColumnSpec& spec : schema_.columns)
    if (spec.kind == ColumnKind::continuous) ++n_continuous;
  if (n_continuous != static_cast<long>(continuous_.size())) {
    throw std::invalid_argument("transformer: continuous transform count does not match schema");
  }

  spans_.clear();
  cont_index_.assign(static_cast<std::size_t>(schema_.width()), -1);
  int offset = 0;
  int next_cont = 0;
  for (int c = 0; c < schema_.width(); ++c) {
    const ColumnSpec& spec = schema_.column(c);
    ColumnSpan span;
    span.offset = offset;
    span.kind = spec.kind;
    if (spec.kind == ColumnKind::continuous) {
      cont_index_[static_cast<std::size_t>(c)] = next_cont;
      span.width = 1 + continuous_[static_cast<std::size_t>(next_cont)].gmm.n_components();
      ++next_cont;
    } else {
      span.width = spec.n_categories();
    }
    offset += span.width;
    spans_.push_back(span);
  }
  width_ = offset;
}

TableTransformer TableTransformer::fit(const Dataset& ds, const TransformConfig& config, std::uint64_t seed) {
  if (ds.n_rows() == 0) throw std::invalid_argument("transformer: empty dataset");
  TableTransformer t;
  t.schema_ = ds.schema();
  t.config_ = config;
  for (int c = 0; c < t.schema_.width(); ++c) {
    const ColumnSpec& spec = t.schema_.column(c);
    if (spec.kind != ColumnKind::continuous) continue;
    ContinuousTransform ct;
    ct.alpha_clip = config.alpha_clip;
    ct.gmm = fit_em(ds.continuous_column(c), config.em, stream_seed(seed, "gmm:" + spec.name));
    t.continuous_.push_back(std::move(ct));
  }
  t.build_spans();
  return t;
}

TableTransformer TableTransformer::from_parts(TableSchema schema, TransformConfig config,
                                              std::vector<ContinuousTransform> continuous) {
  TableTransformer t;
  t.schema_ = std::move(schema);
  t.config_ = config;
  t.continuous_ = std::move(continuous);
  t.build_spans();
  return t;
}

const ContinuousTransform& TableTransformer::continuous_transform(int col) const {
  const int idx = cont_index_.at(static_cast<std::size_t>(col));
  if (idx < 0) throw std::invalid_argument("transformer: column is not continuous");
  return continuous_[static_cast<std::size_t>(idx)];
}

Eigen::VectorXd TableTransformer::encode_row(const Row& row, std::mt19937_64& rng) const {
  if (static_cast<int>(row.cells.size()) != schema_.width()) {
    throw std::invalid_argument("encode_row: row width does not match schema");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(width_);
  for (int c = 0; c < schema_.width(); ++c) {
    const ColumnSpan& span = spans_[static_cast<std::size_t>(c)];
    if (span.kind == ColumnKind::continuous) {
      const double value = std::get<double>(row.cells[static_cast<std::size_t>(c)]);
      const ContinuousTransform& ct = continuous_transform(c);
      const Eigen::VectorXd resp = responsibilities(ct.gmm, value);
      int mode;
      if (config_.deterministic_modes) {
        mode = 0;
        for (int k = 1; k < resp.size(); ++k) {
          if (resp[k] > resp[mode]) mode = k;
        }
      } else {
        mode = sample_index(resp, rng);
      }
      const double alpha = (value - ct.gmm.means[mode]) / (4.0 * ct.gmm.stddevs[mode]);
      out[span.offset] = std::clamp(alpha, -ct.alpha_clip, ct.alpha_clip);
      out[span.offset + 1 + mode] = 1.0;
    } else {
      const int cat = std::get<std::int32_t>(row.cells[static_cast<std::size_t>(c)]);
      if (cat < 0 || cat >= span.width) throw std::invalid_argument("encode_row: category index out of range");
      out[span.offset + cat] = 1.0;
    }
  }
  return out;
}

Eigen::MatrixXd TableTransformer::encode_dataset(const Dataset& ds, std::mt19937_64& rng) const {
  Eigen::MatrixXd out(ds.n_rows(), width_);
  for (long r = 0; r < ds.n_rows(); ++r) {
    out.row(r) = encode_row(ds.row(r), rng).transpose();
  }
  return out;
}

Row TableTransformer::decode_row(const Eigen::VectorXd& encoded) const {
  if (encoded.size() != width_) throw std::invalid_argument("decode_row: encoded width mismatch");
  Row row;
  row.cells.reserve(static_cast<std::size_t>(schema_.width()));
  for (int c = 0; c < schema_.width(); ++c) {
    const ColumnSpan& span = spans_[static_cast<std::size_t>(c)];
    if (span.kind == ColumnKind::continuous) {
      const ContinuousTransform& ct = continuous_transform(c);
      const int mode = argmax_block(encoded, span.offset + 1, span.width - 1);
      const double alpha = std::clamp(encoded[span.offset], -ct.alpha_clip, ct.alpha_clip);
      row.cells.emplace_back(alpha * 4.0 * ct.gmm.stddevs[mode] + ct.gmm.means[mode]);
    } else {
      row.cells.emplace_back(static_cast<std::int32_t>(argmax_block(encoded, span.offset, span.width)));
    }
  }
  return row;
}

Dataset TableTransformer::decode_rows(const Eigen::MatrixXd& encoded, DatasetRole role) const {
  if (encoded.cols() != width_) throw std::invalid_argument("decode_rows: encoded width mismatch");
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(encoded.rows()));
  for (long r = 0; r < encoded.rows(); ++r) {
    rows.push_back(decode_row(encoded.row(r).transpose()));
  }
  return Dataset(schema_, rows, role);
}

}  // namespace tabshift

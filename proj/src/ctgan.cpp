#include "tabshift/ctgan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tabshift/rng.hpp"

namespace tabshift {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

Eigen::MatrixXd hcat(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (b.cols() == 0) return a;
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

CondLayout CondLayout::from_schema(const TableSchema& schema) {
  CondLayout layout;
  for (int col = 0; col < schema.width(); ++col) {
    const ColumnSpec& spec = schema.column(col);
    if (spec.kind != ColumnKind::categorical) continue;
    if (spec.n_categories() < 1) fail("cond layout: categorical column '" + spec.name + "' has no categories");
    layout.column_indices.push_back(col);
    layout.category_counts.push_back(spec.n_categories());
    layout.offsets.push_back(layout.width);
    layout.width += spec.n_categories();
  }
  return layout;
}

CondVector build_cond(const CondLayout& layout, int column, int category) {
  if (column < 0 || column >= layout.n_columns()) fail("build_cond: column out of range");
  if (category < 0 || category >= layout.category_counts[static_cast<std::size_t>(column)]) {
    fail("build_cond: category out of range");
  }
  CondVector cond;
  cond.vec = Eigen::VectorXd::Zero(layout.width);
  cond.vec[layout.offsets[static_cast<std::size_t>(column)] + category] = 1.0;
  cond.column = column;
  cond.category = category;
  return cond;
}

FrequencyTable count_frequencies(const Dataset& ds, const CondLayout& layout) {
  FrequencyTable freq;
  for (int c = 0; c < layout.n_columns(); ++c) {
    const int col = layout.column_indices[static_cast<std::size_t>(c)];
    const int n_cat = layout.category_counts[static_cast<std::size_t>(c)];
    std::vector<long> counts(static_cast<std::size_t>(n_cat), 0);
    const Eigen::VectorXi& cats = ds.categorical_column(col);
    for (long i = 0; i < ds.n_rows(); ++i) ++counts[static_cast<std::size_t>(cats[i])];

    std::vector<double> probs(static_cast<std::size_t>(n_cat), 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] > 0) {
        probs[k] = std::log1p(static_cast<double>(counts[k]));
        total += probs[k];
      }
    }
    if (total > 0.0) {
      for (double& p : probs) p /= total;
    }
    freq.counts.push_back(std::move(counts));
    freq.probs.push_back(std::move(probs));
  }
  return freq;
}

CondVector sample_training_cond(const CondLayout& layout, const FrequencyTable& freq,
                                std::mt19937_64& rng) {
  if (layout.n_columns() == 0) fail("sample_training_cond: no categorical columns");
  if (freq.probs.size() != static_cast<std::size_t>(layout.n_columns())) {
    fail("sample_training_cond: frequency table does not match layout");
  }
  std::uniform_int_distribution<int> pick_column(0, layout.n_columns() - 1);
  const int column = pick_column(rng);
  const std::vector<double>& probs = freq.probs[static_cast<std::size_t>(column)];

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cum = 0.0;
  int category = -1;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    cum += probs[k];
    if (u <= cum) {
      category = static_cast<int>(k);
      break;
    }
  }
  if (category < 0) {  // counts all zero, or u landed past cum due to rounding
    for (std::size_t k = probs.size(); k-- > 0;) {
      if (probs[k] > 0.0) {
        category = static_cast<int>(k);
        break;
      }
    }
  }
  if (category < 0) fail("sample_training_cond: column has no observed categories");
  return build_cond(layout, column, category);
}

RealRowIndex RealRowIndex::build(const Dataset& ds, const CondLayout& layout) {
  RealRowIndex index;
  index.rows.resize(static_cast<std::size_t>(layout.n_columns()));
  for (int c = 0; c < layout.n_columns(); ++c) {
    const int col = layout.column_indices[static_cast<std::size_t>(c)];
    auto& per_cat = index.rows[static_cast<std::size_t>(c)];
    per_cat.resize(static_cast<std::size_t>(layout.category_counts[static_cast<std::size_t>(c)]));
    const Eigen::VectorXi& cats = ds.categorical_column(col);
    for (long i = 0; i < ds.n_rows(); ++i) per_cat[static_cast<std::size_t>(cats[i])].push_back(i);
  }
  return index;
}

long draw_matching_row(const RealRowIndex& index, const CondVector& cond, std::mt19937_64& rng) {
  const auto& rows =
      index.rows.at(static_cast<std::size_t>(cond.column)).at(static_cast<std::size_t>(cond.category));
  if (rows.empty()) fail("draw_matching_row: no row matches the condition");
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  return rows[pick(rng)];
}

Eigen::RowVectorXd draw_matching_real(const Eigen::MatrixXd& encoded, const RealRowIndex& index,
                                      const CondVector& cond, std::mt19937_64& rng) {
  return encoded.row(draw_matching_row(index, cond, rng));
}

double generator_ce_loss(const Eigen::MatrixXd& generated, const std::vector<CondVector>& conds,
                         const TableTransformer& transformer, const CondLayout& layout,
                         Eigen::MatrixXd* grad) {
  if (conds.size() != static_cast<std::size_t>(generated.rows())) {
    fail("generator_ce_loss: cond batch does not align with generated batch");
  }
  if (grad) *grad = Eigen::MatrixXd::Zero(generated.rows(), generated.cols());
  if (generated.rows() == 0) return 0.0;

  const double n = static_cast<double>(generated.rows());
  double loss = 0.0;
  for (long i = 0; i < generated.rows(); ++i) {
    const CondVector& cond = conds[static_cast<std::size_t>(i)];
    if (cond.column < 0) continue;  // unconditioned instance
    const int schema_col = layout.column_indices.at(static_cast<std::size_t>(cond.column));
    const ColumnSpan& span = transformer.span(schema_col);
    const double p = std::max(1e-12, generated(i, span.offset + cond.category));
    loss -= std::log(p);
    if (grad) (*grad)(i, span.offset + cond.category) = -1.0 / (n * p);
  }
  return loss / n;
}

void CtganConfig::validate() const {
  if (batch_size < 1) fail("ctgan config: batch_size must be >= 1");
  if (noise_dim < 1) fail("ctgan config: noise_dim must be >= 1");
  if (epochs < 0) fail("ctgan config: epochs must be >= 0");
  if (n_critic < 1) fail("ctgan config: n_critic must be >= 1");
  if (lr <= 0.0) fail("ctgan config: lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    fail("ctgan config: betas must lie in [0, 1)");
  }
  if (gp_lambda < 0.0) fail("ctgan config: gp_lambda must be >= 0");
  if (tau <= 0.0) fail("ctgan config: tau must be positive");
  for (int h : generator_hidden) {
    if (h < 1) fail("ctgan config: generator_hidden widths must be positive");
  }
  for (int h : critic_hidden) {
    if (h < 1) fail("ctgan config: critic_hidden widths must be positive");
  }
}

namespace {

// Per-batch sampling state shared by critic and generator updates.
struct BatchDraw {
  std::vector<CondVector> conds;
  Eigen::MatrixXd cond_mat;   // B x cond_width
  Eigen::MatrixXd gen_input;  // B x (noise + cond_width)
};

BatchDraw draw_batch(const CtganModel& model, std::mt19937_64& rng) {
  const int b = model.config.batch_size;
  BatchDraw batch;
  batch.conds.resize(static_cast<std::size_t>(b));
  batch.cond_mat = Eigen::MatrixXd::Zero(b, model.layout.width);
  for (int i = 0; i < b; ++i) {
    if (model.layout.width > 0) {
      batch.conds[static_cast<std::size_t>(i)] = sample_training_cond(model.layout, model.freq, rng);
      batch.cond_mat.row(i) = batch.conds[static_cast<std::size_t>(i)].vec.transpose();
    }
  }
  Eigen::MatrixXd z(b, model.config.noise_dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (long i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  batch.gen_input = hcat(z, batch.cond_mat);
  return batch;
}

}  // namespace

CtganModel train_ctgan(const Dataset& train, const CtganConfig& config, std::uint64_t seed,
                       TrainTrace* trace) {
  config.validate();
  if (train.n_rows() == 0) fail("train_ctgan: empty dataset");

  CtganModel model;
  model.schema = train.schema();
  model.config = config;
  model.seed = seed;
  model.transformer = TableTransformer::fit(train, config.transform, stream_seed(seed, "gan:gmm"));
  model.layout = CondLayout::from_schema(model.schema);
  model.freq = count_frequencies(train, model.layout);
  const RealRowIndex real_index = RealRowIndex::build(train, model.layout);

  auto rng_encode = make_rng(seed, "gan:encode");
  const Eigen::MatrixXd encoded = model.transformer.encode_dataset(train, rng_encode);
  const int enc_width = model.transformer.width();
  const int cond_width = model.layout.width;
  const int b = config.batch_size;

  // Output heads: tanh on each alpha, temperature softmax on each mode and
  // categorical block.
  std::vector<HeadSegment> head;
  for (int col = 0; col < model.schema.width(); ++col) {
    const ColumnSpan& s = model.transformer.span(col);
    if (s.kind == ColumnKind::continuous) {
      head.push_back({Activation::tanh_act, s.offset, 1, 1.0});
      head.push_back({Activation::softmax, s.offset + 1, s.width - 1, config.tau});
    } else {
      head.push_back({Activation::softmax, s.offset, s.width, config.tau});
    }
  }
  auto rng_init = make_rng(seed, "gan:init");
  MlpOptions gen_options;
  gen_options.hidden_batch_norm = true;
  gen_options.head = head;
  model.generator =
      make_mlp(config.noise_dim + cond_width, config.generator_hidden, enc_width, gen_options, rng_init);
  MlpOptions critic_options;  // LeakyReLU hidden, identity output, no batch norm
  model.critic = make_mlp(enc_width + cond_width, config.critic_hidden, 1, critic_options, rng_init);

  Eigen::VectorXd gen_params = flatten_parameters(model.generator);
  Eigen::VectorXd critic_params = flatten_parameters(model.critic);
  const AdamConfig adam{config.lr, config.beta1, config.beta2, 1e-8};
  AdamState gen_state(gen_params.size(), adam);
  AdamState critic_state(critic_params.size(), adam);

  auto rng = make_rng(seed, "gan:loop");
  const long steps_per_epoch = std::max<long>(1, train.n_rows() / b);
  const long total_steps = steps_per_epoch * config.epochs;
  const Eigen::MatrixXd ones_over_b = Eigen::MatrixXd::Constant(b, 1, 1.0 / b);

  for (long step = 0; step < total_steps; ++step) {
    double critic_loss = 0.0;
    for (int cu = 0; cu < config.n_critic; ++cu) {
      BatchDraw batch = draw_batch(model, rng);
      Eigen::MatrixXd real_rows(b, enc_width);
      for (int i = 0; i < b; ++i) {
        if (cond_width > 0) {
          real_rows.row(i) =
              draw_matching_real(encoded, real_index, batch.conds[static_cast<std::size_t>(i)], rng);
        } else {
          std::uniform_int_distribution<long> pick(0, train.n_rows() - 1);
          real_rows.row(i) = encoded.row(pick(rng));
        }
      }
      const Eigen::MatrixXd real = hcat(real_rows, batch.cond_mat);
      const Eigen::MatrixXd fake =
          hcat(forward_train(model.generator, batch.gen_input), batch.cond_mat);

      Tape tape_real, tape_fake;
      const double mean_real = forward(model.critic, real, &tape_real).mean();
      const double mean_fake = forward(model.critic, fake, &tape_fake).mean();
      const PenaltyResult gp = gradient_penalty(model.critic, real, fake, config.gp_lambda, rng);
      critic_loss = mean_fake - mean_real + gp.penalty;

      BackwardResult back_real = backward(model.critic, tape_real, -ones_over_b);
      BackwardResult back_fake = backward(model.critic, tape_fake, ones_over_b);
      const Eigen::VectorXd grads = flatten_gradients(model.critic, back_real.grads) +
                                    flatten_gradients(model.critic, back_fake.grads) +
                                    flatten_gradients(model.critic, gp.grads);
      if (adam_step(critic_params, grads, critic_state)) {
        set_parameters(model.critic, critic_params);
      }
    }

    BatchDraw batch = draw_batch(model, rng);
    Tape tape_gen;
    const Eigen::MatrixXd fake_rows = forward_train(model.generator, batch.gen_input, &tape_gen);
    Tape tape_critic;
    const Eigen::MatrixXd scores =
        forward(model.critic, hcat(fake_rows, batch.cond_mat), &tape_critic);
    Eigen::MatrixXd ce_grad;
    const double ce =
        generator_ce_loss(fake_rows, batch.conds, model.transformer, model.layout, &ce_grad);
    const double gen_loss = -scores.mean() + ce;

    BackwardResult back_critic = backward(model.critic, tape_critic, -ones_over_b);
    const Eigen::MatrixXd fake_grad = back_critic.input_grad.leftCols(enc_width) + ce_grad;
    BackwardResult back_gen = backward(model.generator, tape_gen, fake_grad);
    if (adam_step(gen_params, flatten_gradients(model.generator, back_gen.grads), gen_state)) {
      set_parameters(model.generator, gen_params);
    }

    if (trace) {
      trace->critic_loss.push_back(critic_loss);
      trace->generator_loss.push_back(gen_loss);
    }
    if (!std::isfinite(critic_loss) || !std::isfinite(gen_loss)) {
      std::ostringstream msg;
      msg << "train_ctgan: non-finite loss at step " << step << " (critic=" << critic_loss
          << ", generator=" << gen_loss << ")";
      throw std::runtime_error(msg.str());
    }
  }
  if (trace) trace->skipped_steps = critic_state.skipped + gen_state.skipped;
  return model;
}

Dataset sample_ctgan(const CtganModel& model, long n,
                     std::optional<std::pair<int, int>> condition, std::uint64_t seed) {
  if (n < 1) fail("sample_ctgan: n must be >= 1");
  std::optional<CondVector> fixed;
  if (condition) {
    const auto [schema_col, category] = *condition;
    int layout_col = -1;
    for (int c = 0; c < model.layout.n_columns(); ++c) {
      if (model.layout.column_indices[static_cast<std::size_t>(c)] == schema_col) layout_col = c;
    }
    if (layout_col < 0) fail("sample_ctgan: condition column is not categorical");
    fixed = build_cond(model.layout, layout_col, category);
  }

  auto rng = make_rng(seed, "gan:sample");
  std::normal_distribution<double> normal(0.0, 1.0);
  const int cond_width = model.layout.width;
  Eigen::MatrixXd cond_mat = Eigen::MatrixXd::Zero(n, cond_width);
  for (long i = 0; i < n; ++i) {
    if (fixed) {
      cond_mat.row(i) = fixed->vec.transpose();
    } else if (cond_width > 0) {
      cond_mat.row(i) = sample_training_cond(model.layout, model.freq, rng).vec.transpose();
    }
  }
  Eigen::MatrixXd z(n, model.config.noise_dim);
  for (long i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);

  const Eigen::MatrixXd generated = forward(model.generator, hcat(z, cond_mat));
  return model.transformer.decode_rows(generated, DatasetRole::synthetic);
}

}  // namespace tabshift

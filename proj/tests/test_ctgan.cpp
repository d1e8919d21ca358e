#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tabshift/ctgan.hpp"
#include "tabshift/rng.hpp"

using namespace tabshift;

namespace {

// Two categorical columns (3 and 2 categories) around one continuous column;
// the cond layout must skip the continuous column entirely.
TableSchema cond_schema() {
  TableSchema schema;
  schema.columns = {{"d1", ColumnKind::categorical, {"a", "b", "c"}},
                    {"amount", ColumnKind::continuous, {}},
                    {"d2", ColumnKind::categorical, {"x", "y"}}};
  return schema;
}

Dataset cond_dataset(const std::vector<std::int32_t>& d1, const std::vector<double>& amount,
                     const std::vector<std::int32_t>& d2) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < d1.size(); ++i)
    rows.push_back(Row{{Cell{d1[i]}, Cell{amount[i]}, Cell{d2[i]}}});
  return Dataset(cond_schema(), rows, DatasetRole::train);
}

TableSchema toy_gan_schema() {
  TableSchema schema;
  schema.columns = {{"value", ColumnKind::continuous, {}},
                    {"group", ColumnKind::categorical, {"A", "B"}}};
  return schema;
}

Dataset toy_gan_dataset(long n, double share_b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution pick_b(share_b);
  std::normal_distribution<double> lo(-2.0, 0.3), hi(2.0, 0.3);
  std::vector<Row> rows;
  for (long i = 0; i < n; ++i) {
    const bool b = pick_b(rng);
    rows.push_back(Row{{Cell{b ? hi(rng) : lo(rng)}, Cell{static_cast<std::int32_t>(b)}}});
  }
  return Dataset(toy_gan_schema(), rows, DatasetRole::train);
}

CtganConfig tiny_config() {
  CtganConfig config;
  config.batch_size = 32;
  config.noise_dim = 8;
  config.generator_hidden = {16};
  config.critic_hidden = {16};
  config.epochs = 3;
  config.transform.em.m_max = 2;
  return config;
}

}  // namespace

TEST_CASE("cond layout indexes the categorical columns in schema order") {
  CondLayout layout = CondLayout::from_schema(cond_schema());
  REQUIRE(layout.n_columns() == 2);
  CHECK(layout.column_indices[0] == 0);
  CHECK(layout.column_indices[1] == 2);
  CHECK(layout.category_counts[0] == 3);
  CHECK(layout.category_counts[1] == 2);
  CHECK(layout.offsets[0] == 0);
  CHECK(layout.offsets[1] == 3);
  CHECK(layout.width == 5);

  TableSchema no_cats;
  no_cats.columns = {{"x", ColumnKind::continuous, {}}};
  CHECK(CondLayout::from_schema(no_cats).width == 0);

  TableSchema empty_universe;
  empty_universe.columns = {{"d", ColumnKind::categorical, {}}};
  CHECK_THROWS_AS(CondLayout::from_schema(empty_universe), std::invalid_argument);
}

TEST_CASE("selecting the second column's first category yields [0,0,0,1,0]") {
  CondLayout layout = CondLayout::from_schema(cond_schema());
  CondVector cond = build_cond(layout, 1, 0);
  Eigen::VectorXd expect(5);
  expect << 0, 0, 0, 1, 0;
  CHECK(cond.vec == expect);
  CHECK(cond.column == 1);
  CHECK(cond.category == 0);

  CHECK_THROWS_AS(build_cond(layout, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_cond(layout, 1, 2), std::invalid_argument);
}

TEST_CASE("frequency table applies log smoothing to category counts") {
  std::vector<std::int32_t> d1, d2;
  std::vector<double> amount;
  for (int i = 0; i < 100; ++i) {
    d1.push_back(i < 99 ? 0 : 1);  // counts {99, 1, 0}
    d2.push_back(i % 2);
    amount.push_back(0.1 * i);
  }
  Dataset ds = cond_dataset(d1, amount, d2);
  CondLayout layout = CondLayout::from_schema(ds.schema());
  FrequencyTable freq = count_frequencies(ds, layout);

  CHECK(freq.counts[0][0] == 99);
  CHECK(freq.counts[0][1] == 1);
  CHECK(freq.counts[0][2] == 0);

  const double z = std::log(100.0) + std::log(2.0);
  CHECK(freq.probs[0][0] == doctest::Approx(std::log(100.0) / z).epsilon(1e-12));
  CHECK(freq.probs[0][1] == doctest::Approx(std::log(2.0) / z).epsilon(1e-12));
  CHECK(freq.probs[0][2] == 0.0);
}

TEST_CASE("training-by-sampling picks columns uniformly and categories by log frequency") {
  std::vector<std::int32_t> d1, d2;
  std::vector<double> amount;
  for (int i = 0; i < 100; ++i) {
    d1.push_back(i < 99 ? 0 : 1);
    d2.push_back(i < 50 ? 0 : 1);
    amount.push_back(1.0 * i);
  }
  Dataset ds = cond_dataset(d1, amount, d2);
  CondLayout layout = CondLayout::from_schema(ds.schema());
  FrequencyTable freq = count_frequencies(ds, layout);

  auto rng = make_rng(5, "cond");
  const int draws = 40000;
  long col0 = 0;
  long cat_b = 0;
  long zero_count_hits = 0;
  for (int i = 0; i < draws; ++i) {
    CondVector cond = sample_training_cond(layout, freq, rng);
    CHECK(cond.vec.sum() == 1.0);
    if (cond.column == 0) {
      ++col0;
      if (cond.category == 1) ++cat_b;
      if (cond.category == 2) ++zero_count_hits;
    }
  }
  CHECK(zero_count_hits == 0);  // zero-count categories are never selected
  CHECK(static_cast<double>(col0) / draws == doctest::Approx(0.5).epsilon(0.05));
  const double expect_b = std::log(2.0) / (std::log(100.0) + std::log(2.0));
  CHECK(static_cast<double>(cat_b) / col0 == doctest::Approx(expect_b).epsilon(0.15));
}

TEST_CASE("matching real rows honour the condition") {
  std::vector<std::int32_t> d1 = {0, 1, 2, 0, 1};
  std::vector<std::int32_t> d2 = {0, 0, 1, 1, 0};
  std::vector<double> amount = {1, 2, 3, 4, 5};
  Dataset ds = cond_dataset(d1, amount, d2);
  CondLayout layout = CondLayout::from_schema(ds.schema());
  RealRowIndex index = RealRowIndex::build(ds, layout);

  auto rng = make_rng(1, "draw");
  CondVector cond = build_cond(layout, 0, 1);  // d1 == "b": rows 1 and 4
  for (int i = 0; i < 20; ++i) {
    const long row = draw_matching_row(index, cond, rng);
    CHECK((row == 1 || row == 4));
  }

  // A category with no matching rows cannot be drawn from.
  Dataset no_c = cond_dataset({0, 1}, {1, 2}, {0, 1});
  RealRowIndex sparse = RealRowIndex::build(no_c, layout);
  CHECK_THROWS_AS(draw_matching_row(sparse, build_cond(layout, 0, 2), rng),
                  std::invalid_argument);
}

TEST_CASE("generator cross-entropy loss matches -log p on the conditioned block") {
  Dataset ds = cond_dataset({0, 1, 2, 0}, {1, 2, 3, 4}, {0, 1, 0, 1});
  CondLayout layout = CondLayout::from_schema(ds.schema());
  TransformConfig tconfig;
  tconfig.em.m_max = 1;
  TableTransformer transformer = TableTransformer::fit(ds, tconfig, 3);

  const int width = transformer.width();
  Eigen::MatrixXd generated = Eigen::MatrixXd::Constant(2, width, 0.125);
  // Put probability 0.25 on d1 = "a" for row 0; d2 = "y" gets 0.75 for row 1.
  const ColumnSpan& d1_span = transformer.span(0);
  const ColumnSpan& d2_span = transformer.span(2);
  generated(0, d1_span.offset + 0) = 0.25;
  generated(1, d2_span.offset + 1) = 0.75;

  std::vector<CondVector> conds = {build_cond(layout, 0, 0), build_cond(layout, 1, 1)};
  Eigen::MatrixXd grad;
  const double loss = generator_ce_loss(generated, conds, transformer, layout, &grad);
  const double expect = 0.5 * (-std::log(0.25) - std::log(0.75));
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));

  // Gradient: -1 / (n p) exactly at the conditioned slots, zero elsewhere.
  CHECK(grad(0, d1_span.offset + 0) == doctest::Approx(-1.0 / (2 * 0.25)).epsilon(1e-12));
  CHECK(grad(1, d2_span.offset + 1) == doctest::Approx(-1.0 / (2 * 0.75)).epsilon(1e-12));
  grad(0, d1_span.offset + 0) = 0.0;
  grad(1, d2_span.offset + 1) = 0.0;
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);

  // Unconditioned rows contribute nothing.
  std::vector<CondVector> empty_conds(2);
  CHECK(generator_ce_loss(generated, empty_conds, transformer, layout) == 0.0);
}

TEST_CASE("ctgan config validation names bad fields") {
  CtganConfig config = tiny_config();
  CHECK_NOTHROW(config.validate());
  config.batch_size = 0;
  CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("batch_size"),
                       std::invalid_argument);
  config = tiny_config();
  config.tau = 0.0;
  CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("tau"), std::invalid_argument);
  config = tiny_config();
  config.generator_hidden = {16, 0};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("ctgan training is deterministic in the seed") {
  Dataset train = toy_gan_dataset(200, 0.5, 3);
  CtganConfig config = tiny_config();

  TrainTrace trace;
  CtganModel a = train_ctgan(train, config, 17, &trace);
  CtganModel b = train_ctgan(train, config, 17);
  CHECK(flatten_parameters(a.generator) == flatten_parameters(b.generator));
  CHECK(flatten_parameters(a.critic) == flatten_parameters(b.critic));

  CtganModel c = train_ctgan(train, config, 18);
  CHECK(flatten_parameters(a.generator) != flatten_parameters(c.generator));

  // One trace entry per step: ceil semantics come from max(1, n / batch).
  const long steps_per_epoch = std::max<long>(1, train.n_rows() / config.batch_size);
  CHECK(trace.critic_loss.size() ==
        static_cast<std::size_t>(steps_per_epoch * config.epochs));
  CHECK(trace.generator_loss.size() == trace.critic_loss.size());
  for (double v : trace.critic_loss) CHECK(std::isfinite(v));
}

TEST_CASE("ctgan sampling produces schema-conforming synthetic rows") {
  Dataset train = toy_gan_dataset(200, 0.5, 5);
  CtganModel model = train_ctgan(train, tiny_config(), 7);

  Dataset synth = sample_ctgan(model, 50, std::nullopt, 9);
  CHECK(synth.n_rows() == 50);
  CHECK(synth.role() == DatasetRole::synthetic);
  CHECK(synth.schema() == train.schema());
  for (long i = 0; i < synth.n_rows(); ++i) {
    CHECK(std::isfinite(synth.continuous_at(i, 0)));
    const std::int32_t g = synth.category_at(i, 1);
    CHECK(g >= 0);
    CHECK(g < 2);
  }

  Dataset again = sample_ctgan(model, 50, std::nullopt, 9);
  for (long i = 0; i < 50; ++i) {
    CHECK(again.continuous_at(i, 0) == synth.continuous_at(i, 0));
    CHECK(again.category_at(i, 1) == synth.category_at(i, 1));
  }

  Dataset conditioned = sample_ctgan(model, 30, std::make_pair(1, 1), 11);
  CHECK(conditioned.n_rows() == 30);

  CHECK_THROWS_AS(sample_ctgan(model, 0, std::nullopt, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_ctgan(model, 5, std::make_pair(0, 0), 1), std::invalid_argument);
}

TEST_CASE("ctgan trains on purely continuous tables") {
  TableSchema schema;
  schema.columns = {{"x", ColumnKind::continuous, {}}};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> src(1.0, 0.5);
  std::vector<Row> rows;
  for (int i = 0; i < 150; ++i) rows.push_back(Row{{Cell{src(rng)}}});
  Dataset train(schema, rows, DatasetRole::train);

  CtganConfig config = tiny_config();
  config.transform.em.m_max = 1;
  CtganModel model = train_ctgan(train, config, 5);
  CHECK(model.layout.width == 0);
  Dataset synth = sample_ctgan(model, 20, std::nullopt, 3);
  CHECK(synth.n_rows() == 20);
  for (long i = 0; i < 20; ++i) CHECK(std::isfinite(synth.continuous_at(i, 0)));
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "tdb/dataset.hpp"
#include "tdb/error.hpp"
#include "tdb/trainer.hpp"

using namespace tdb;

namespace {

constexpr PresetKind kAll[] = {PresetKind::cp,      PresetKind::distmult, PresetKind::complex,
                               PresetKind::simple,  PresetKind::analogy,  PresetKind::quate,
                               PresetKind::tucker};

std::size_t dim_for(PresetKind k) {
  switch (k) {
    case PresetKind::analogy:
    case PresetKind::quate:
      return 8;
    case PresetKind::tucker:
      return 3;
    default:
      return 4;
  }
}

void check_batch_gradient(TdbModel m, const std::vector<Triplet>& batch, const RegConfig& reg) {
  TrainConfig cfg;
  cfg.reg = reg;
  cfg.threads = 1;
  const auto res = batch_gradients(m, batch, cfg);
  auto f = [&] { return oracle::batch_objective(m, batch, reg); };
  EXPECT_LE(oracle::rel_err(res.mean_loss * static_cast<double>(batch.size()), f()), 1e-12);
  auto check = [&](std::span<double> param, const std::vector<double>& g, const char* what) {
    ASSERT_EQ(param.size(), g.size());
    for (std::size_t q = 0; q < param.size(); ++q) {
      const double fd = oracle::central_difference(param, q, f);
      ASSERT_LE(oracle::rel_err(g[q], fd), 1e-5)
          << what << "[" << q << "] analytic " << g[q] << " fd " << fd << " preset " << m.preset()
          << " reg " << reg_kind_name(reg.kind);
    }
  };
  check(m.head().values(), res.grads.head, "head");
  check(m.rel().values(), res.grads.rel, "rel");
  if (!m.tied()) check(m.tail().values(), res.grads.tail, "tail");
  if (m.core().trainable) check(m.core().values.values(), res.grads.core, "core");
}

Dataset toy_dataset() {
  return parse_dataset("a\tr\tb\nb\tr\tc\nc\ts\ta\na\ts\tc\nd\tr\ta\nb\ts\td\nc\tr\td\n",
                       "a\tr\tc\nd\ts\tb\n", "b\tr\ta\nd\tr\tc\n", "toy");
}

}  // namespace

TEST(Loss, UniformScores) {
  const std::vector<double> s(7, 0.3);
  EXPECT_NEAR(loss_triplet(s, 2, 0.0), std::log(7.0), 1e-15);
  EXPECT_NEAR(loss_triplet(std::vector<double>{0.0, 0.0}, 0, 0.0), 0.693147180559945, 1e-15);
}

TEST(Loss, MatchesExtendedPrecisionAndShiftInvariant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(1 + rng() % 20);
    for (double& v : s) v = normal(rng);
    const std::size_t k = rng() % s.size();
    long double mx = s[0];
    for (double v : s) mx = std::max<long double>(mx, v);
    long double z = 0.0L;
    for (double v : s) z += std::exp(static_cast<long double>(v) - mx);
    const long double want = -static_cast<long double>(s[k]) + mx + std::log(z);
    const double got = loss_triplet(s, k, 0.0);
    EXPECT_LE(std::abs(static_cast<long double>(got) - want),
              1e-12L * std::max<long double>(1.0L, std::abs(want)));
    EXPECT_GE(got, 0.0);
    std::vector<double> shifted = s;
    for (double& v : shifted) v += 123.0;
    EXPECT_NEAR(loss_triplet(shifted, k, 0.0), got, 1e-11);
    EXPECT_NEAR(loss_triplet(s, k, 2.5) - 2.5, got, 1e-13);
  }
}

TEST(Loss, ExtremeScoresStayFinite) {
  const std::vector<double> s{1000.0, -1000.0, 0.0};
  EXPECT_NEAR(loss_triplet(s, 1, 0.0), 2000.0, 1e-9);
  EXPECT_TRUE(std::isfinite(loss_triplet(s, 0, 0.0)));
}

TEST(BatchGradients, CpMatchesFiniteDifferences) {
  const auto m = oracle::random_model(PresetKind::cp, 3, 4, 2, 1, 0.8);
  check_batch_gradient(m, {{0, 1, 2}, {3, 0, 3}, {0, 1, 2}}, RegConfig{});
}

TEST(BatchGradients, TuckerCoreMatchesFiniteDifferences) {
  const auto m = oracle::random_model(PresetKind::tucker, 2, 4, 2, 2, 0.8);
  check_batch_gradient(m, {{0, 1, 2}, {3, 0, 1}}, RegConfig{});
  check_batch_gradient(m, {{0, 1, 2}, {2, 0, 2}}, RegConfig{RegKind::ivr, 0.1, 0.2, 0.3, 0.4, 3.0});
}

TEST(BatchGradients, EveryPresetEveryRegularizer) {
  for (auto k : kAll)
    for (const RegConfig& reg :
         {RegConfig{}, RegConfig{RegKind::f2, 0.05}, RegConfig{RegKind::n3, 0.05},
          RegConfig{RegKind::ivr, 0.01, 0.02, 0.03, 0.04, 2.25}}) {
      const auto m = oracle::random_model(k, dim_for(k), 5, 3, 3, 0.6);
      check_batch_gradient(m, {{0, 1, 2}, {4, 2, 4}, {1, 0, 3}}, reg);
    }
}

TEST(BatchGradients, SymmetricZeroPoint) {
  const auto m = make_model(make_preset(PresetKind::distmult, 4), 4, 5, 2);
  TrainConfig cfg;
  cfg.reg = RegConfig{RegKind::ivr, 0.1, 0.0, 0.0, 0.0, 2.0};
  const auto res = batch_gradients(m, std::vector<Triplet>{{0, 1, 2}}, cfg);
  EXPECT_NEAR(res.mean_loss, std::log(5.0), 1e-15);
  for (double g : res.grads.head) EXPECT_EQ(g, 0.0);
  for (double g : res.grads.rel) EXPECT_EQ(g, 0.0);
}

TEST(BatchGradients, ThreadCountDoesNotChangeResultsBeyondRounding) {
  const auto m = oracle::random_model(PresetKind::complex, 4, 6, 3, 4);
  std::vector<Triplet> batch;
  for (std::size_t q = 0; q < 17; ++q) batch.push_back({q % 6, q % 3, (q * 5 + 1) % 6});
  TrainConfig one, three;
  one.threads = 1;
  three.threads = 3;
  const auto a = batch_gradients(m, batch, one);
  const auto b = batch_gradients(m, batch, three);
  const auto c = batch_gradients(m, batch, three);
  EXPECT_NEAR(a.mean_loss, b.mean_loss, 1e-12);
  for (std::size_t q = 0; q < a.grads.head.size(); ++q)
    EXPECT_NEAR(a.grads.head[q], b.grads.head[q], 1e-12);
  EXPECT_EQ(b.grads.head, c.grads.head);
  EXPECT_EQ(b.mean_loss, c.mean_loss);
}

TEST(Adagrad, UpdateRule) {
  auto m = make_model(make_preset(PresetKind::cp, 1), 1, 1, 1);
  auto state = AdagradState::for_model(m, 1e-10);
  GradientSet g = GradientSet::zeros_like(m);
  adagrad_update(m, state, g, 0.1);
  EXPECT_EQ(m.head().values()[0], 0.0);
  g.head[0] = 1.0;
  adagrad_update(m, state, g, 0.1);
  EXPECT_NEAR(m.head().values()[0], -0.1, 1e-9);
  const double before = m.head().values()[0];
  adagrad_update(m, state, g, 0.1);
  EXPECT_NEAR(m.head().values()[0] - before, -0.1 / std::sqrt(2.0), 1e-9);
  double last = 0.1 / std::sqrt(2.0);
  for (int step = 0; step < 10; ++step) {
    const double prev = m.head().values()[0];
    adagrad_update(m, state, g, 0.1);
    const double mag = std::abs(m.head().values()[0] - prev);
    EXPECT_LE(mag, last);
    last = mag;
    EXPECT_GE(state.head[0], 0.0);
  }
}

TEST(Fit, ZeroEpochsLeavesModelUnchanged) {
  const auto ds = toy_dataset();
  auto m = make_model(make_preset(PresetKind::complex, 4), 4, ds.entities.size(), ds.relations.size());
  initialize(m, 3);
  const auto before = m;
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto res = fit(m, ds, cfg);
  EXPECT_TRUE(res.trace.empty());
  EXPECT_TRUE(m == before);
}

TEST(Fit, DeterministicAndDecreasing) {
  const auto ds = toy_dataset();
  auto run = [&] {
    auto m = make_model(make_preset(PresetKind::tucker, 4), 4, ds.entities.size(), ds.relations.size());
    initialize(m, 5);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 3;
    cfg.seed = 11;
    cfg.valid_interval = 5;
    cfg.reg = RegConfig::ivr_tied(0.001, 0.001, 2.0);
    const auto res = fit(m, ds, cfg);
    return std::make_pair(res, m);
  };
  const auto [a, ma] = run();
  const auto [b, mb] = run();
  ASSERT_EQ(a.trace.size(), 20u);
  for (std::size_t e = 0; e < a.trace.size(); ++e) {
    EXPECT_EQ(a.trace[e].loss, b.trace[e].loss);
    EXPECT_EQ(std::isnan(a.trace[e].valid_mrr), std::isnan(b.trace[e].valid_mrr));
  }
  EXPECT_TRUE(ma == mb);
  EXPECT_LT(a.trace.back().loss, a.trace.front().loss);
  EXPECT_FALSE(std::isnan(a.trace[4].valid_mrr));
  EXPECT_TRUE(std::isnan(a.trace[3].valid_mrr));
  EXPECT_GE(a.best_epoch, 5u);
}

TEST(Fit, WritesTabSeparatedLog) {
  const auto ds = toy_dataset();
  auto m = make_model(make_preset(PresetKind::distmult, 4), 4, ds.entities.size(), ds.relations.size());
  initialize(m, 1);
  const auto path = std::filesystem::temp_directory_path() / "tdb_fit_log_test.tsv";
  std::filesystem::remove(path);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.log_path = path;
  fit(m, ds, cfg);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch\tloss\tvalid_mrr");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
  std::filesystem::remove(path);
}

TEST(Fit, NonFiniteLossAbortsWithContext) {
  const auto ds = toy_dataset();
  auto m = make_model(make_preset(PresetKind::distmult, 4), 4, ds.entities.size(), ds.relations.size());
  initialize(m, 1);
  m.rel().values()[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 3;
  try {
    fit(m, ds, cfg);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch 0"), std::string::npos) << e.what();
  }
}

TEST(Fit, RejectsInvalidConfig) {
  const auto ds = toy_dataset();
  auto m = make_model(make_preset(PresetKind::distmult, 4), 4, ds.entities.size(), ds.relations.size());
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(fit(m, ds, cfg), ConfigError);
  cfg.batch_size = 10;
  cfg.learning_rate = -1.0;
  EXPECT_THROW(fit(m, ds, cfg), ConfigError);
}

TEST(Fit, KinshipTuckerLossTraceMatchesFixture) {
  const auto ds = load_dataset(std::filesystem::path(TDB_DATA_DIR) / "kinship");
  auto m = make_model(make_preset(PresetKind::tucker, 16), 16, ds.entities.size(), ds.relations.size());
  initialize(m, 0);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.valid_interval = 0;
  cfg.threads = 1;
  const auto res = fit(m, ds, cfg);

  std::ifstream in(std::filesystem::path(TDB_FIXTURE_DIR) / "kinship_tucker16_trace.tsv");
  std::string header;
  std::getline(in, header);
  std::vector<double> frozen;
  for (std::size_t epoch; in >> epoch;) {
    double loss;
    std::string mrr;
    in >> loss >> mrr;
    frozen.push_back(loss);
  }
  ASSERT_EQ(frozen.size(), res.trace.size());
  for (std::size_t e = 0; e < frozen.size(); ++e) {
    EXPECT_LE(std::abs(res.trace[e].loss - frozen[e]), 1e-9 * frozen[e]) << "epoch " << e + 1;
    if (e > 0) EXPECT_LT(res.trace[e].loss, res.trace[e - 1].loss);
  }
}

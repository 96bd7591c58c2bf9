#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tdb/error.hpp"
#include "tdb/regularizer.hpp"

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

RegConfig only(int which, double alpha) {
  RegConfig c{RegKind::ivr, 0, 0, 0, 0, alpha};
  (which == 1 ? c.lambda1 : which == 2 ? c.lambda2 : which == 3 ? c.lambda3 : c.lambda4) = 1.0;
  return c;
}

// Analytic penalty gradient vs central differences over every parameter.
void check_penalty_gradient(TdbModel m, const Triplet& x, const RegConfig& cfg) {
  std::vector<double> gh(m.head().values().size()), gr(m.rel().values().size()),
      gt(m.tied() ? 0 : m.tail().values().size()), gc(m.core().trainable ? m.core().values.size() : 0);
  const std::size_t dim = m.dim();
  auto& tail_sink = m.tied() ? gh : gt;
  const TripletGrad sink{std::span<double>(gh).subspan(x.head * dim, dim),
                         std::span<double>(gr).subspan(x.rel * dim, dim),
                         std::span<double>(tail_sink).subspan(x.tail * dim, dim),
                         std::span<double>(gc)};
  penalty_triplet(m, x, cfg, &sink);
  auto f = [&] { return penalty_triplet(m, x, cfg); };
  auto check = [&](std::span<double> param, const std::vector<double>& g, const char* what) {
    for (std::size_t q = 0; q < param.size(); ++q) {
      const double fd = oracle::central_difference(param, q, f);
      ASSERT_LE(oracle::rel_err(g[q], fd), 1e-5)
          << what << "[" << q << "] analytic " << g[q] << " fd " << fd << " reg "
          << reg_kind_name(cfg.kind) << " preset " << m.preset();
    }
  };
  check(m.head().values(), gh, "head");
  check(m.rel().values(), gr, "rel");
  if (!m.tied()) check(m.tail().values(), gt, "tail");
  if (m.core().trainable) check(m.core().values.values(), gc, "core");
}

}  // namespace

TEST(Ivr, ZeroEmbeddingsGiveZero) {
  for (auto k : kAll) {
    auto m = make_model(make_preset(k, dim_for(k)), dim_for(k), 3, 2);
    const auto cfg = RegConfig{RegKind::ivr, 0.1, 0.2, 0.3, 0.4, 2.5};
    EXPECT_EQ(ivr_triplet(m, {0, 1, 2}, cfg), 0.0);
    EXPECT_EQ(ivr_full(m, cfg), 0.0);
  }
}

TEST(Ivr, CpSymbolicReduction) {
  const auto m = oracle::random_model(PresetKind::cp, 5, 3, 2, 1);
  const RegConfig cfg{RegKind::ivr, 0.3, 0.7, 0.11, 0.05, 2.0};
  const Triplet x{0, 1, 2};
  double want = 0.0;
  for (std::size_t d = 0; d < 5; ++d) {
    const double h = m.head().row(0)[d], r = m.rel().row(1)[d], t = m.tail().row(2)[d];
    want += (cfg.lambda1 + cfg.lambda3) * (h * h + r * r + t * t) +
            (cfg.lambda2 + cfg.lambda4) * ((r * t) * (r * t) + (t * h) * (t * h) + (r * h) * (r * h));
  }
  EXPECT_LE(oracle::rel_err(ivr_triplet(m, x, cfg), want), 1e-12);
}

TEST(Ivr, ComplexMatchesStraightLineTranscription) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = oracle::random_model(PresetKind::complex, 4, 3, 2, seed);
    const RegConfig cfg{RegKind::ivr, 0.2, 0.3, 0.4, 0.5, 3.0};
    const Triplet x{seed % 3, seed % 2, (seed + 1) % 3};
    EXPECT_LE(oracle::rel_err(ivr_triplet(m, x, cfg), oracle::ivr_straightline(m, x, cfg)), 1e-12);
  }
}

TEST(Ivr, AllPresetsMatchStraightLineTranscription) {
  for (auto k : kAll)
    for (double alpha : {1.5, 2.0, 2.25, 3.0}) {
      const auto m = oracle::random_model(k, dim_for(k) * (k == PresetKind::tucker ? 1 : 2), 3, 2, 3);
      const RegConfig cfg{RegKind::ivr, 0.2, 0.3, 0.4, 0.5, alpha};
      const Triplet x{1, 0, 2};
      EXPECT_LE(oracle::rel_err(ivr_triplet(m, x, cfg), oracle::ivr_straightline(m, x, cfg)), 1e-12)
          << preset_name(k) << " alpha " << alpha;
    }
}

TEST(Ivr, NonNegativeAndZeroOnlyAtZeroRows) {
  for (auto k : kAll) {
    auto m = oracle::random_model(k, dim_for(k), 3, 2, 4);
    const RegConfig cfg{RegKind::ivr, 0.1, 0.0, 0.0, 0.0, 2.0};
    EXPECT_GT(ivr_triplet(m, {0, 0, 1}, cfg), 0.0);
    for (double& v : m.head().row(0)) v = 0.0;
    for (double& v : m.rel().row(0)) v = 0.0;
    for (double& v : m.tail().row(1)) v = 0.0;
    EXPECT_EQ(ivr_triplet(m, {0, 0, 1}, cfg), 0.0);
  }
}

TEST(Ivr, ReducesToF2Family) {
  const auto m = oracle::random_model(PresetKind::complex, 6, 3, 2, 5);
  const double lambda1 = 0.37;
  const RegConfig cfg{RegKind::ivr, lambda1, 0.0, 0.0, 0.0, 2.0};
  const Triplet x{0, 1, 2};
  EXPECT_LE(oracle::rel_err(ivr_triplet(m, x, cfg), lambda1 * f2_triplet(m, x, 1.0)), 1e-12);
}

TEST(Ivr, CpAndComplexTermRelations) {
  // cp: the lambda3 terms equal the lambda1 terms and lambda4 equals lambda2.
  // complex: lambda4 equals lambda2, but |W x1 h|_F = sqrt(2)|h|, so lambda3 = 2^(alpha/2) lambda1.
  for (double alpha : {2.0, 3.0}) {
    const auto cp = oracle::random_model(PresetKind::cp, 4, 3, 2, 6);
    const Triplet x{0, 1, 2};
    EXPECT_LE(oracle::rel_err(ivr_triplet(cp, x, only(1, alpha)), ivr_triplet(cp, x, only(3, alpha))),
              1e-12);
    EXPECT_LE(oracle::rel_err(ivr_triplet(cp, x, only(2, alpha)), ivr_triplet(cp, x, only(4, alpha))),
              1e-12);
    const auto cx = oracle::random_model(PresetKind::complex, 4, 3, 2, 6);
    EXPECT_LE(oracle::rel_err(ivr_triplet(cx, x, only(2, alpha)), ivr_triplet(cx, x, only(4, alpha))),
              1e-12);
    EXPECT_LE(oracle::rel_err(std::pow(2.0, alpha / 2) * ivr_triplet(cx, x, only(1, alpha)),
                              ivr_triplet(cx, x, only(3, alpha))),
              1e-12);
  }
}

TEST(IvrFull, TwelveSummandsMatchModeProducts) {
  const auto m = oracle::random_model(PresetKind::complex, 4, 3, 2, 7);
  const double a = 2.5;
  const auto terms = ivr_full_terms(m, a);
  std::array<double, 12> want{};
  for (std::size_t d = 0; d < m.blocks(); ++d) {
    const auto h = m.head().slice(d), r = m.rel().slice(d), t = m.tail().slice(d);
    const auto& w = m.core().values;
    const double nh = h.frobenius_norm(), nr = r.frobenius_norm(), nt = t.frobenius_norm();
    const double vals[12] = {
        std::pow(nh, a),
        std::pow(nr, a),
        std::pow(nt, a),
        std::pow(kronecker(t, r).frobenius_norm(), a),
        std::pow(kronecker(t, h).frobenius_norm(), a),
        std::pow(kronecker(r, h).frobenius_norm(), a),
        std::pow(mode_n_product(w, h, 1).frobenius_norm(), a),
        std::pow(mode_n_product(w, r, 2).frobenius_norm(), a),
        std::pow(mode_n_product(w, t, 3).frobenius_norm(), a),
        std::pow(mode_n_product(mode_n_product(w, r, 2), t, 3).frobenius_norm(), a),
        std::pow(mode_n_product(mode_n_product(w, t, 3), h, 1).frobenius_norm(), a),
        std::pow(mode_n_product(mode_n_product(w, h, 1), r, 2).frobenius_norm(), a),
    };
    for (int q = 0; q < 12; ++q) want[q] += vals[q];
  }
  const double got[12] = {terms.l1[0], terms.l1[1], terms.l1[2], terms.l2[0],
                          terms.l2[1], terms.l2[2], terms.l3[0], terms.l3[1],
                          terms.l3[2], terms.l4[0], terms.l4[1], terms.l4[2]};
  for (int q = 0; q < 12; ++q) EXPECT_LE(oracle::rel_err(got[q], want[q]), 1e-12) << "summand " << q;
}

TEST(IvrFull, DegenerateSizeEqualsTriplet) {
  for (auto k : kAll) {
    const auto m = oracle::random_model(k, dim_for(k), 1, 1, 8);
    const RegConfig cfg{RegKind::ivr, 0.2, 0.3, 0.4, 0.5, 2.25};
    EXPECT_LE(oracle::rel_err(ivr_full(m, cfg), ivr_triplet(m, {0, 0, 0}, cfg)), 1e-12)
        << preset_name(k);
  }
}

TEST(F2, Examples) {
  auto m = make_model(make_preset(PresetKind::cp, 2), 2, 1, 1);
  EXPECT_EQ(f2_triplet(m, {0, 0, 0}, 1.0), 0.0);
  for (auto* t : {&m.head(), &m.rel(), &m.tail()})
    for (double& v : t->values()) v = 1.0;
  EXPECT_DOUBLE_EQ(f2_triplet(m, {0, 0, 0}, 1.0), 6.0);
  for (auto* t : {&m.head(), &m.rel(), &m.tail()})
    for (double& v : t->values()) v *= -3.0;
  EXPECT_DOUBLE_EQ(f2_triplet(m, {0, 0, 0}, 1.0), 54.0);
}

TEST(N3, Examples) {
  auto m = make_model(make_preset(PresetKind::cp, 2), 2, 1, 1);
  EXPECT_EQ(n3_triplet(m, {0, 0, 0}, 1.0), 0.0);
  for (auto* t : {&m.head(), &m.rel(), &m.tail()})
    for (double& v : t->values()) v = 1.0;
  EXPECT_DOUBLE_EQ(n3_triplet(m, {0, 0, 0}, 1.0), 6.0);
  for (auto* t : {&m.head(), &m.rel(), &m.tail()})
    for (double& v : t->values()) v *= -2.0;
  EXPECT_DOUBLE_EQ(n3_triplet(m, {0, 0, 0}, 1.0), 48.0);
}

TEST(Penalty, GradientsMatchFiniteDifferences) {
  for (auto k : kAll) {
    const auto m = oracle::random_model(k, dim_for(k), 4, 3, 9, 0.7);
    for (const RegConfig& cfg :
         {RegConfig{RegKind::f2, 0.3}, RegConfig{RegKind::n3, 0.3},
          RegConfig{RegKind::ivr, 0.1, 0.2, 0.3, 0.4, 2.0},
          RegConfig{RegKind::ivr, 0.1, 0.2, 0.3, 0.4, 2.25},
          RegConfig{RegKind::ivr, 0.1, 0.2, 0.3, 0.4, 3.0}}) {
      check_penalty_gradient(m, {0, 2, 1}, cfg);
      check_penalty_gradient(m, {3, 0, 3}, cfg);  // head == tail
    }
  }
}

TEST(RegConfig, Validation) {
  EXPECT_THROW((RegConfig{RegKind::ivr, 0, 0, 0, 0, 2.0}.validate()), ConfigError);
  EXPECT_THROW((RegConfig{RegKind::ivr, -1, 0, 0, 0, 2.0}.validate()), ConfigError);
  EXPECT_THROW((RegConfig{RegKind::ivr, 1, 0, 0, 0, 0.0}.validate()), ConfigError);
  EXPECT_NO_THROW((RegConfig{RegKind::none}.validate()));
  const auto tied = RegConfig::ivr_tied(0.01, 0.03, 2.0);
  EXPECT_EQ(tied.lambda3, 0.01);
  EXPECT_EQ(tied.lambda4, 0.03);
  EXPECT_THROW(reg_kind_from_name("dura"), ConfigError);
  EXPECT_EQ(reg_kind_from_name("n3"), RegKind::n3);
}

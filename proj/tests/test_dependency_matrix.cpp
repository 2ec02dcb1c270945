#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace mdc;

namespace {
const Matrix kP = Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
}

TEST(TvDistance, Examples) {
  const std::vector<double> a{0.7, 0.3}, b{0.4, 0.6};
  EXPECT_EQ(tv_distance(a, a), 0.0);
  EXPECT_EQ(tv_distance(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
  EXPECT_NEAR(tv_distance(a, b), 0.3, 1e-15);
  EXPECT_THROW(tv_distance(a, std::vector<double>{1.0}), ArgumentError);
}

TEST(TvDistance, IsAMetric) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t a = 2 + rng() % 4;
    const auto p = oracle::random_distribution(rng, a), q = oracle::random_distribution(rng, a),
               r = oracle::random_distribution(rng, a);
    EXPECT_GE(tv_distance(p, q), 0.0);
    EXPECT_LE(tv_distance(p, q), 1.0 + 1e-15);
    EXPECT_EQ(tv_distance(p, q), tv_distance(q, p));
    EXPECT_LE(tv_distance(p, r), tv_distance(p, q) + tv_distance(q, r) + 1e-15);
  }
}

TEST(TvDistance, EqualsMaxEventGap) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t a = 2 + rng() % 4;
    const auto p = oracle::random_distribution(rng, a), q = oracle::random_distribution(rng, a);
    double best = 0.0;
    for (unsigned mask = 0; mask < (1u << a); ++mask) {
      double gap = 0.0;
      for (std::size_t s = 0; s < a; ++s)
        if (mask >> s & 1u) gap += p[s] - q[s];
      best = std::max(best, std::abs(gap));
    }
    EXPECT_NEAR(tv_distance(p, q), best, 1e-14);
  }
}

TEST(ComputeH, IndependentIsZero) {
  const auto H = compute_interdependence(build_independent(Alphabet(2), 4, {{0.5, 0.5}}));
  EXPECT_EQ(H.matrix(), Matrix(4, 4));
}

TEST(ComputeH, MarkovSuperdiagonal) {
  const auto H = compute_interdependence(build_markov(kP, {0.5, 0.5}, 4));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == i + 1)
        EXPECT_NEAR(H(i, j), 0.7, 1e-12);
      else
        EXPECT_EQ(H(i, j), 0.0);
    }
}

TEST(ComputeH, StarTree) {
  const auto edge = Matrix::from_rows({{0.6, 0.4}, {0.4, 0.6}});  // TV 0.2
  const auto H = compute_interdependence(build_causal_tree({std::nullopt, 0, 0, 0, 0}, {edge}, {0.5, 0.5}));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(H(i, j), i == 0 && j > 0 ? 0.2 : 0.0, 1e-15);
  EXPECT_NEAR(column_sum_alpha(H), 0.2, 1e-15);
}

TEST(ComputeH, MatchesLiteralDefinition) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rng() % 5, a = 1 + rng() % 3;
    const auto spec = oracle::random_table_spec(rng, n, a);
    const auto H = compute_interdependence(spec);
    EXPECT_LE(H.matrix().max_abs_diff(oracle::literal_H(spec)), 1e-12);
  }
}

TEST(ComputeH, PrunedEqualsUnpruned) {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + rng() % 4, a = 2 + rng() % 2;
    const auto spec = oracle::random_table_spec(rng, n, a);
    const auto pruned = compute_interdependence(spec, {kDefaultBudget, true});
    const auto full = compute_interdependence(spec, {kDefaultBudget, false});
    EXPECT_LE(pruned.matrix().max_abs_diff(full.matrix()), 1e-12);
  }
  // Structured specs where pruning actually removes coordinates.
  const auto window = mixture_window_spec(Alphabet(3), 2, 5, {0.3, 0.9, 0.6, 1.0, 0.2});
  EXPECT_LE(compute_interdependence(window, {kDefaultBudget, true})
                .matrix()
                .max_abs_diff(compute_interdependence(window, {kDefaultBudget, false}).matrix()),
            1e-12);
  EXPECT_LE(compute_interdependence(window).matrix().max_abs_diff(oracle::literal_H(window)), 1e-12);
}

TEST(ComputeH, MarkovZeroStructureIsExact) {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t a = 2 + rng() % 3, n = 3 + rng() % 6;
    const auto P = oracle::random_stochastic(rng, a);
    const auto H = compute_interdependence(build_markov(P, oracle::random_distribution(rng, a, false), n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 2; j < n; ++j) EXPECT_EQ(H(i, j), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) EXPECT_NEAR(H(i, i + 1), dobrushin_alpha(P), 1e-12);
  }
}

TEST(ComputeH, InvariantsOnRandomSpecs) {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    const auto spec = oracle::random_table_spec(rng, 1 + rng() % 5, 1 + rng() % 3);
    const auto H = compute_interdependence(spec);
    const auto& M = H.matrix();
    EXPECT_TRUE(M.strictly_upper_triangular());
    for (double v : M.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(ComputeH, BudgetAndCost) {
  const auto spec = build_markov(kP, {0.5, 0.5}, 10);
  EXPECT_GT(interdependence_cost(spec, false), interdependence_cost(spec, true));
  EXPECT_THROW(compute_interdependence(spec, {10, true}), BudgetError);
  std::mt19937_64 rng(3);
  const auto table = oracle::random_table_spec(rng, 4, 2);
  EXPECT_NO_THROW(compute_interdependence(table, {interdependence_cost(table, true), true}));
}

TEST(InterdependenceMatrix, Validation) {
  EXPECT_THROW(InterdependenceMatrix(Matrix::from_rows({{0, 0}, {0.1, 0}})), ArgumentError);
  EXPECT_THROW(InterdependenceMatrix(Matrix::from_rows({{0, 1.5}, {0, 0}})), ArgumentError);
  EXPECT_THROW(InterdependenceMatrix(Matrix::from_rows({{0, -0.1}, {0, 0}})), ArgumentError);
}

TEST(ColumnSum, Examples) {
  EXPECT_EQ(column_sum_alpha(InterdependenceMatrix(Matrix(3, 3))), 0.0);
  EXPECT_NEAR(column_sum_alpha(compute_interdependence(build_markov(kP, {0.5, 0.5}, 5))), 0.7, 1e-12);
}

TEST(DecayProfile, Examples) {
  const auto markov = uniform_decay_profile(compute_interdependence(build_markov(kP, {0.5, 0.5}, 5)));
  ASSERT_EQ(markov.phi.size(), 4u);
  EXPECT_NEAR(markov.phi[0], 0.7, 1e-12);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_EQ(markov.phi[k], 0.0);
  EXPECT_NEAR(markov.total, 0.7, 1e-12);
  EXPECT_TRUE(markov.subcritical);

  const auto zero = uniform_decay_profile(InterdependenceMatrix(Matrix(4, 4)));
  EXPECT_EQ(zero.total, 0.0);
  EXPECT_TRUE(zero.subcritical);

  Matrix two(4, 4);
  for (std::size_t i = 0; i + 1 < 4; ++i) two(i, i + 1) = 0.7;
  for (std::size_t i = 0; i + 2 < 4; ++i) two(i, i + 2) = 0.5;
  const auto super = uniform_decay_profile(InterdependenceMatrix(two));
  EXPECT_NEAR(super.total, 1.2, 1e-15);
  EXPECT_FALSE(super.subcritical);
}

TEST(CalibratedWindow, HitsTargetColumnSum) {
  const auto cw = calibrate_window(Alphabet(2), 5, 12, 0.8);
  EXPECT_NEAR(column_sum_alpha(compute_interdependence(cw.spec)), 0.8, 1e-9);
  EXPECT_NEAR(cw.achieved_alpha, 0.8, 1e-9);
  EXPECT_LE(compute_interdependence(cw.spec).matrix().max_abs_diff(oracle::literal_H(cw.spec)), 1e-12);
}

TEST(CalibratedWindow, UnreachableTargetThrows) {
  // Single-coordinate windows cap each column at TV 1 between point masses,
  // and binary point masses already give TV 1, so alpha 1.5 is unreachable.
  EXPECT_THROW(calibrate_window(Alphabet(2), 1, 6, 1.5), CalibrationError);
  EXPECT_THROW(calibrate_window(Alphabet(2), 2, 6, -0.1), CalibrationError);
}

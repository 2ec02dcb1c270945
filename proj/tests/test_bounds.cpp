#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"

using namespace mdc;

namespace {

Matrix superdiagonal(std::size_t n, double v) {
  Matrix H(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) H(i, i + 1) = v;
  return H;
}

const Matrix kP = Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});

}  // namespace

TEST(TailShape, MdcExamples) {
  const auto zero = mdc_tail(InterdependenceMatrix(Matrix(4, 4)), SensitivityVector::unit(4));
  EXPECT_NEAR(zero.delta_at(2.0), 2.0 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(zero.delta_at(2.0), 0.27067, 1e-5);
  const auto chain = mdc_tail(InterdependenceMatrix(superdiagonal(3, 0.7)), SensitivityVector::terminal(3));
  EXPECT_NEAR(chain.delta_at(1.0), 2.0 * std::exp(-2.0 / 1.7301), 1e-12);
  EXPECT_NEAR(chain.delta_at(1.0), 0.62948, 1e-5);
  EXPECT_EQ(chain.delta_at(0.0), 1.0);
  EXPECT_EQ(chain.delta_at(0.1), 1.0);  // clipped
  EXPECT_THROW(mdc_tail(InterdependenceMatrix(Matrix(3, 3)), SensitivityVector::unit(4)), ArgumentError);
}

TEST(TailShape, MonotoneAndBounded) {
  const TailBound b{"x", 3.7, true, "", true};
  double prev = 1.0;
  for (double t = 0.0; t < 10.0; t += 0.05) {
    const double d = b.delta_at(t);
    EXPECT_LE(d, 1.0);
    EXPECT_LE(d, prev);
    prev = d;
  }
  const TailBound zero{"z", 0.0, true, "", true};
  EXPECT_EQ(zero.delta_at(0.5), 0.0);
  const TailBound na{"n", kInfinity, false, "no", true};
  EXPECT_EQ(na.delta_at(100.0), 1.0);
}

TEST(KappaTail, Examples) {
  const auto c4 = SensitivityVector::unit(4);
  const auto g0 = resolvent(Matrix(4, 4));
  EXPECT_NEAR(kappa_tail(g0, c4).proxy, mdc_tail(g0, c4).proxy, 1e-12);

  const auto g = resolvent(superdiagonal(3, 0.7));
  const double kp = kappa_tail(g, SensitivityVector::unit(3)).proxy;
  EXPECT_LE(kp, 3.0 / 0.09);
  EXPECT_GE(kp, 8.6861);
  EXPECT_GT(kappa_tail(g, SensitivityVector::terminal(3)).proxy, 1.7301);
}

TEST(MarkovTail, Examples) {
  EXPECT_NEAR(markov_tail(0.7, SensitivityVector::unit(3)).proxy, 3.0 / 0.09, 1e-12);
  EXPECT_EQ(markov_tail(0.0, SensitivityVector({1.0, 2.0})).proxy, 5.0);
  EXPECT_FALSE(markov_tail(1.0, SensitivityVector::unit(3)).applicable);
}

TEST(TreeTail, Examples) {
  EXPECT_NEAR(tree_tail(0.3, 2, 15).proxy, 93.75, 1e-12);
  EXPECT_EQ(tree_tail(0.0, 3, 7).proxy, 7.0);
  EXPECT_FALSE(tree_tail(0.5, 2, 10).applicable);
}

TEST(SparseTerminalTail, Examples) {
  EXPECT_NEAR(sparse_terminal_tail(0.8, 1.0).proxy, 25.0, 1e-12);
  EXPECT_EQ(sparse_terminal_tail(0.0, 3.0).proxy, 9.0);
  EXPECT_FALSE(sparse_terminal_tail(1.0, 1.0).applicable);
}

TEST(Kontorovich, Examples) {
  const auto c = SensitivityVector::unit(200);
  const auto k4 = kontorovich_baseline(0.4, c);
  EXPECT_FALSE(k4.divergent);
  EXPECT_NEAR(k4.delta_inf_norm, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(k4.multiplier, 9.0, 1e-12);
  EXPECT_NEAR(k4.bound.proxy, 200 * 9.0, 1e-9);
  EXPECT_FALSE(k4.bound.certified);
  const auto k6 = kontorovich_baseline(0.6, c);
  EXPECT_TRUE(k6.divergent);
  EXPECT_FALSE(k6.bound.applicable);
  EXPECT_NEAR(k6.delta_inf_norm, 1.5, 1e-9);
}

TEST(Samson, Examples) {
  EXPECT_NEAR(samson_baseline(0.49, SensitivityVector::unit(1)).proxy, 1.0 / 0.09, 1e-12);
  EXPECT_EQ(samson_baseline(0.0, SensitivityVector::unit(1)).proxy, 1.0);
  for (double a = 0.01; a < 1.0; a += 0.01)
    EXPECT_GE(samson_baseline(a, SensitivityVector::unit(1)).proxy, 1.0 / ((1 - a) * (1 - a)));
}

TEST(ScalarCollapse, Formula) {
  const auto g = resolvent(superdiagonal(3, 0.7));
  // Row sums of Gamma: 2.19, 1.7, 1.
  EXPECT_NEAR(scalar_collapse_tail(g, SensitivityVector({0.5, 2.0, 1.0})).proxy, 3 * 2.19 * 2.19 * 4.0, 1e-12);
}

TEST(CompareBounds, IndependentCollapses) {
  const auto spec = build_independent(Alphabet(2), 5, {{0.5, 0.5}});
  const auto f = targets::symbol_count(5, 1);
  const auto rep = compare_bounds(spec, f, *f.declared_sensitivity);
  for (const auto& b : rep.bounds) {
    ASSERT_TRUE(b.applicable) << b.name;
    // Scalar collapse uses N ||c||_inf^2, which equals ||c||^2 for unit c.
    EXPECT_NEAR(b.proxy, 5.0, 1e-9) << b.name;
  }
  EXPECT_NE(rep.find("markov"), nullptr);
  EXPECT_EQ(rep.find("tree"), nullptr);
}

TEST(CompareBounds, MarkovOrdering) {
  const auto spec = build_markov(kP, {0.5, 0.5}, 6);
  const auto f = targets::symbol_count(6, 1);
  const auto rep = compare_bounds(spec, f, *f.declared_sensitivity);
  const double mdc = rep.find("mdc")->proxy;
  const double markov = rep.find("markov")->proxy;
  const double samson = rep.find("samson")->proxy;
  EXPECT_LT(mdc, markov);
  EXPECT_LE(markov, samson);
  ASSERT_TRUE(rep.markov_alpha);
  EXPECT_NEAR(*rep.markov_alpha, 0.7, 1e-12);
  EXPECT_TRUE(rep.find("kontorovich")->reason.find("divergent") != std::string::npos);
  for (std::size_t i = 1; i < rep.bounds.size(); ++i) EXPECT_LE(rep.bounds[i - 1].proxy, rep.bounds[i].proxy);
}

TEST(CompareBounds, TreeAndSparseRows) {
  const auto edge = Matrix::from_rows({{0.6, 0.4}, {0.4, 0.6}});
  const auto tree = build_causal_tree({std::nullopt, 0, 0, 1, 1, 2, 2}, {edge}, {0.5, 0.5});
  const auto f = targets::symbol_count(7, 1);
  const auto rep = compare_bounds(tree, f, *f.declared_sensitivity);
  ASSERT_NE(rep.find("tree"), nullptr);
  EXPECT_NEAR(rep.find("tree")->proxy, 7.0 / 0.36, 1e-12);
  EXPECT_EQ(*rep.max_out_degree, 2u);

  const auto term = targets::terminal_indicator(7);
  const auto rep2 = compare_bounds(tree, term, *term.declared_sensitivity);
  ASSERT_NE(rep2.find("sparse_terminal"), nullptr);
  EXPECT_LE(rep2.find("mdc")->proxy, rep2.find("sparse_terminal")->proxy);
}

TEST(CompareBounds, RelaxationOrderingOnRandomSpecs) {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 2 + rng() % 4, a = 2 + rng() % 2;
    const auto spec = oracle::random_table_spec(rng, n, a);
    const auto f = oracle::random_table_target(rng, n, a);
    const auto c = lipschitz_vector_oracle(f, Alphabet(a), n);
    const auto r = compare_bounds(spec, f, c);  // throws if mdc is not minimal
    const double mdc = r.find("mdc")->proxy, kappa = r.find("kappa")->proxy;
    EXPECT_LE(mdc, kappa * (1 + 1e-9) + 1e-12);
    const auto* ud = r.find("uniform_decay");
    if (ud->applicable) EXPECT_LE(kappa, ud->proxy * (1 + 1e-9) + 1e-12);
  }
}

TEST(CompareBounds, Csv) {
  const auto spec = build_markov(kP, {0.5, 0.5}, 4);
  const auto f = targets::symbol_count(4, 1);
  const auto rep = compare_bounds(spec, f, *f.declared_sensitivity);
  std::ostringstream os;
  write_bounds_csv(os, rep, {0.5, 1.0});
  const std::string csv = os.str();
  EXPECT_EQ(csv.rfind("bound,proxy,applicable,reason,t,delta\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 1 + 2 * rep.bounds.size());
  EXPECT_NE(csv.find("mdc,"), std::string::npos);
  std::ostringstream table;
  print_bounds_table(table, rep, {0.5, 1.0});
  EXPECT_NE(table.str().find("comparison-only"), std::string::npos);
}

TEST(Report, FormatReal) {
  EXPECT_EQ(format_real(0.1 + 0.2), "0.3");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_real(kInfinity), "inf");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
}

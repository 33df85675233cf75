#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "evbet/multiround.hpp"

namespace evbet::test {
namespace {

double one(std::span<const double>) { return 1.0; }

// Random level-order tree with coefficients anywhere in [0,1] straddling mu.
TreeHypothesis continuous_tree(double mu, std::size_t depth, std::mt19937_64& gen) {
  std::vector<std::pair<double, double>> nodes((std::size_t{1} << depth) - 1);
  for (auto& n : nodes) {
    const double u = unit_uniform(gen);
    // Occasionally a degenerate (mu, mu) node.
    n = u < 0.05 ? std::make_pair(mu, mu) : std::make_pair(mu * unit_uniform(gen), mu + (1 - mu) * unit_uniform(gen));
  }
  return TreeHypothesis(mu, std::move(nodes));
}

}  // namespace

TEST(EvalMultiround, Examples) {
  const SampleSpace s({0.0, 0.5, 1.0}, 0.5);
  // lambda_1 = 2, lambda_2 = -2 after every first observation.
  const MultiRoundCoinBet e(s, {{2.0}, {-2.0, -2.0, -2.0}});
  const double x10[2] = {1.0, 0.0};
  EXPECT_DOUBLE_EQ(eval_multiround(e, x10), 4.0);
  const double mid[2] = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(eval_multiround(e, mid), 1.0);
  const double x01[2] = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(eval_multiround(e, x01), 0.0);

  const MultiRoundCoinBet zero(s, {{0.0}, {0.0, 0.0, 0.0}});
  for (double a : s.points())
    for (double b : s.points()) {
      const double xs[2] = {a, b};
      EXPECT_DOUBLE_EQ(zero(xs), 1.0);
    }
}

TEST(EvalMultiround, Validation) {
  const SampleSpace s({0.0, 0.5, 1.0}, 0.5);
  EXPECT_THROW(MultiRoundCoinBet(s, {{2.0}, {0.0}}), InvalidArgument);
  EXPECT_THROW(MultiRoundCoinBet(s, {{2.5}, {0.0, 0.0, 0.0}}), OutOfRange);
  const MultiRoundCoinBet e(s, {{1.0}, {0.0, 0.0, 0.0}});
  const double off[2] = {0.3, 0.5};
  EXPECT_THROW(e(off), InvalidArgument);
}

TEST(EvalMultiround, PrefixIndexingFollowsFirstObservation) {
  const SampleSpace s({0.0, 0.5, 1.0}, 0.5);
  const MultiRoundCoinBet e(s, {{0.0}, {1.0, -1.0, 2.0}});
  const double p0[1] = {0.0};
  const double p1[1] = {1.0};
  EXPECT_DOUBLE_EQ(e.lambda_at(p0), 1.0);
  EXPECT_DOUBLE_EQ(e.lambda_at(p1), 2.0);
  const double xs[2] = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(e(xs), 2.0);
}

TEST(EnumerateMasks, CountsFollowRecursion) {
  const std::size_t expected[] = {1, 2, 5, 26, 677};
  for (std::size_t t = 0; t <= 4; ++t) {
    const auto masks = enumerate_masks(t);
    EXPECT_EQ(masks.size(), expected[t]) << "T=" << t;
    std::set<std::string> distinct;
    for (const auto& m : masks) distinct.insert(m.to_string());
    EXPECT_EQ(distinct.size(), masks.size());
  }
  EXPECT_EQ(enumerate_masks(5).size(), 458330u);
  EXPECT_THROW(enumerate_masks(6), DepthTooLarge);
}

TEST(EnumerateMasks, DepthOneMasks) {
  const auto masks = enumerate_masks(1);
  EXPECT_EQ(masks[0].to_string(), "s..");
  EXPECT_EQ(masks[1].to_string(), "bss");
}

TEST(StoppingMask, ParseRoundTripAndValidation) {
  for (const auto& m : enumerate_masks(3)) EXPECT_EQ(StoppingMask::parse(m.to_string()), m);
  EXPECT_THROW(StoppingMask::parse("bs"), ParseError);
  EXPECT_THROW(StoppingMask::parse("bsx"), ParseError);
  EXPECT_THROW(StoppingMask::parse("bs."), InvalidArgument);   // branch with an unreached child
  EXPECT_THROW(StoppingMask::parse("sss"), InvalidArgument);   // node below a stop
  EXPECT_EQ(StoppingMask::full(2).to_string(), "bbbssss");
  EXPECT_EQ(StoppingMask::stop_at(2, 1).to_string(), "bss....");
}

TEST(TreeHypothesis, Validation) {
  EXPECT_THROW(TreeHypothesis(0.5, {{0.6, 1.0}}), MeanOutsideSpan);
  EXPECT_THROW(TreeHypothesis(0.5, {{0.0, 1.0}, {0.0, 1.0}}), InvalidArgument);
  const TreeHypothesis d(0.5, {{0.5, 0.5}});
  EXPECT_DOUBLE_EQ(d.weight(0), 1.0);
}

TEST(TreeExpectation, StopAtRootGivesInitialValue) {
  std::mt19937_64 gen(1);
  const auto d = continuous_tree(0.4, 3, gen);
  const auto f = [](std::span<const double> p) { return p.empty() ? 0.7 : 100.0; };
  EXPECT_DOUBLE_EQ(tree_expectation(d, StoppingMask::stop_at(3, 0), f), 0.7);
}

TEST(TreeExpectation, SymmetricDepthOne) {
  const TreeHypothesis d(0.5, {{0.0, 1.0}});
  const auto f = [](std::span<const double> p) { return p.empty() ? 1.0 : (p[0] == 0.0 ? 3.0 : 5.0); };
  EXPECT_DOUBLE_EQ(tree_expectation(d, StoppingMask::full(1), f), 4.0);
}

TEST(TreeExpectation, HandExpandedPrunedTree) {
  // Stop after a1; after a2 stop on b4, continue on b3 to depth three.
  const double mu = 0.4;
  const std::vector<std::pair<double, double>> nodes = {
      {0.1, 0.9},                                                 // (a1, a2)
      {0.0, 0.5}, {0.3, 0.7},                                     // (b1, b2), (b3, b4)
      {0.2, 0.6}, {0.4, 0.4}, {0.05, 0.95}, {0.35, 0.45}};        // c pairs
  const TreeHypothesis d(mu, nodes);
  const auto mask = StoppingMask::parse("bsb..bs....ss..");
  const auto f = [](std::span<const double> p) {
    double v = 1.0 + 0.1 * static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) v += std::sin(3.0 * p[i] + static_cast<double>(i));
    return v;
  };
  auto W = [mu](double a, double b) { return (b - mu) / (b - a); };
  const double a1 = 0.1, a2 = 0.9, b3 = 0.3, b4 = 0.7, c5 = 0.05, c6 = 0.95;
  auto f1 = [&](double x) { const double p[1] = {x}; return f(p); };
  auto f2 = [&](double x, double y) { const double p[2] = {x, y}; return f(p); };
  auto f3 = [&](double x, double y, double z) { const double p[3] = {x, y, z}; return f(p); };
  const double expected = W(a1, a2) * f1(a1) + (1 - W(a1, a2)) * (1 - W(b3, b4)) * f2(a2, b4) +
                          (1 - W(a1, a2)) * W(b3, b4) * (W(c5, c6) * f3(a2, b3, c5) + (1 - W(c5, c6)) * f3(a2, b3, c6));
  EXPECT_NEAR(tree_expectation(d, mask, f), expected, 1e-14);
}

TEST(TreeExpectation, MassConservation) {
  std::mt19937_64 gen(77);
  const auto masks = enumerate_masks(3);
  for (int rep = 0; rep < 1000; ++rep) {
    const double mu = 0.05 + 0.9 * unit_uniform(gen);
    const auto d = continuous_tree(mu, 3, gen);
    const auto& m = masks[static_cast<std::size_t>(unit_uniform(gen) * static_cast<double>(masks.size()))];
    ASSERT_NEAR(tree_expectation(d, m, one), 1.0, 1e-12);
  }
}

TEST(TreeExpectation, LeafMassesMatchFullMask) {
  std::mt19937_64 gen(4);
  const auto d = continuous_tree(0.3, 3, gen);
  const auto masses = d.leaf_masses();
  double total = 0.0;
  for (double m : masses) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Indicator of the first leaf.
  const auto [a1, a2] = d.node(0);
  const auto [b1, b2] = d.node(1);
  const auto [c1, c2] = d.node(3);
  const auto f = [&](std::span<const double> p) {
    return p.size() == 3 && p[0] == a1 && p[1] == b1 && p[2] == c1 ? 1.0 : 0.0;
  };
  (void)a2, (void)b2, (void)c2;
  EXPECT_NEAR(tree_expectation(d, StoppingMask::full(3), f), masses[0], 1e-14);
}

TEST(TreeExpectation, MaskDeeperThanTreeThrows) {
  const TreeHypothesis d(0.5, {{0.0, 1.0}});
  EXPECT_THROW(tree_expectation(d, StoppingMask::full(2), one), InvalidArgument);
  // A deep mask that only reaches depth one is fine.
  EXPECT_DOUBLE_EQ(tree_expectation(d, StoppingMask::stop_at(3, 1), one), 1.0);
}

TEST(TreeExpectation, CoinBetIsAMartingale) {
  std::mt19937_64 gen(12);
  const auto s = SampleSpace::equispaced(5, 0.5);
  const auto bets = MultiRoundCoinBet::random(s, 3, gen);
  const auto e = EProcess::coin_bet(bets);
  const auto masks = enumerate_masks(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto d = detail::random_tree(s, 3, gen);
    for (const auto& m : masks) ASSERT_NEAR(tree_expectation(d, m, e), 1.0, 1e-9);
  }
}

TEST(Audit, ConstantOnePasses) {
  const auto s = SampleSpace::equispaced(5, 0.5);
  const std::vector<double> coarse = {0.0, 0.5, 1.0};
  const auto r = audit_eprocess(EProcess::constant(0.5, 3, 1.0), s, 3, coarse, 50, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.max_expectation, 1.0);
  EXPECT_EQ(r.trees_examined, 51u);
}

TEST(Audit, CoinBetProcessesPass) {
  std::mt19937_64 gen(5);
  for (double mu : {0.25, 0.5}) {
    const auto s = SampleSpace::equispaced(5, mu);
    const std::vector<double> coarse = {0.0, mu, 1.0};
    for (std::size_t depth = 1; depth <= 3; ++depth) {
      const auto e = EProcess::coin_bet(MultiRoundCoinBet::random(s, depth, gen));
      const auto r = audit_eprocess(e, s, depth, coarse, 1000, 9);
      EXPECT_TRUE(r.pass);
      EXPECT_NEAR(r.max_expectation, 1.0, 1e-9) << "mu=" << mu << " T=" << depth;
    }
  }
}

TEST(Audit, ScaledProcessIsRefutedWithWitness) {
  std::mt19937_64 gen(6);
  const auto s = SampleSpace::equispaced(5, 0.5);
  const auto e = EProcess::coin_bet(MultiRoundCoinBet::random(s, 2, gen)).scaled_at(2, 1.5);
  const std::vector<double> coarse = {0.0, 0.5, 1.0};
  const auto r = audit_eprocess(e, s, 2, coarse, 100, 3);
  ASSERT_FALSE(r.pass);
  ASSERT_TRUE(r.d && r.mask);
  EXPECT_NEAR(r.max_expectation, 1.5, 1e-9);
  // The witness is concrete: re-evaluating it reproduces the violation.
  EXPECT_NEAR(tree_expectation(*r.d, *r.mask, e), r.max_expectation, 1e-12);
  EXPECT_GT(tree_expectation(*r.d, StoppingMask::full(2), e), 1.0 + 1e-9);
}

TEST(Audit, RandomSearchAloneFindsViolation) {
  std::mt19937_64 gen(6);
  const auto s = SampleSpace::equispaced(5, 0.5);
  const auto e = EProcess::coin_bet(MultiRoundCoinBet::random(s, 2, gen)).scaled_at(2, 1.5);
  const auto r = audit_eprocess(e, s, 2, {}, 20, 3);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.max_expectation, 1.5, 1e-9);
}

TEST(Audit, ReportIndependentOfThreads) {
  std::mt19937_64 gen(2);
  const auto s = SampleSpace::equispaced(6, 0.3);
  std::map<Path, double> table;
  // Random non-negative process on every path up to depth 2.
  table[{}] = 1.0;
  for (double a : s.points()) {
    table[{a}] = 1.2 * unit_uniform(gen);
    for (double b : s.points()) table[{a, b}] = 1.5 * unit_uniform(gen);
  }
  const auto e = EProcess::from_table(0.3, table);
  const auto r1 = audit_eprocess(e, s, 2, {}, 300, 8, 1);
  const auto r4 = audit_eprocess(e, s, 2, {}, 300, 8, 4);
  EXPECT_EQ(r1.max_expectation, r4.max_expectation);
  EXPECT_EQ(r1.mask->to_string(), r4.mask->to_string());
  EXPECT_EQ(r1.d->nodes(), r4.d->nodes());
}

TEST(Audit, CoarseOptimumMatchesExhaustiveEnumeration) {
  std::mt19937_64 gen(31);
  const double mu = 0.4;
  const auto s = SampleSpace::equispaced(6, mu);  // 0, .2, .4, .6, .8, 1
  const std::vector<double> coarse = {0.0, 0.2, 0.4, 0.8, 1.0};
  std::vector<std::pair<double, double>> pairs;
  for (double a : coarse)
    for (double b : coarse)
      if (a <= mu + 1e-15 && b >= mu - 1e-15) pairs.emplace_back(a, b);
  const auto masks = enumerate_masks(2);
  for (int rep = 0; rep < 5; ++rep) {
    std::map<Path, double> table;
    table[{}] = 0.5 + unit_uniform(gen);
    for (double a : s.points()) {
      table[{a}] = 2.0 * unit_uniform(gen);
      for (double b : s.points()) table[{a, b}] = 2.0 * unit_uniform(gen);
    }
    const auto e = EProcess::from_table(mu, table);
    double brute = -1.0;
    for (const auto& p0 : pairs)
      for (const auto& p1 : pairs)
        for (const auto& p2 : pairs) {
          const TreeHypothesis d(mu, {p0, p1, p2});
          for (const auto& m : masks) brute = std::max(brute, tree_expectation(d, m, e));
        }
    const auto r = audit_eprocess(e, s, 2, coarse, 0, 0);
    EXPECT_NEAR(r.max_expectation, brute, 1e-12) << "rep " << rep;
    EXPECT_NEAR(tree_expectation(*r.d, *r.mask, e), r.max_expectation, 1e-12);
  }
}

TEST(Audit, BestMaskMatchesEnumeration) {
  std::mt19937_64 gen(13);
  const auto s = SampleSpace::equispaced(5, 0.5);
  std::map<Path, double> table;
  table[{}] = 1.0;
  std::vector<Path> frontier{{}};
  for (int depth = 1; depth <= 3; ++depth) {
    std::vector<Path> next;
    for (const auto& p : frontier)
      for (double x : s.points()) {
        Path q = p;
        q.push_back(x);
        table[q] = 2.0 * unit_uniform(gen);
        next.push_back(q);
      }
    frontier = std::move(next);
  }
  const auto e = EProcess::from_table(0.5, table);
  const auto masks = enumerate_masks(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = detail::random_tree(s, 3, gen);
    double brute = -1.0;
    for (const auto& m : masks) brute = std::max(brute, tree_expectation(d, m, e));
    const auto [m, v] = best_mask(d, e);
    EXPECT_NEAR(v, brute, 1e-12);
    EXPECT_NEAR(tree_expectation(d, m, e), v, 1e-12);
  }
}

TEST(Audit, Guards) {
  const auto s = SampleSpace::equispaced(5, 0.5);
  const auto e = EProcess::constant(0.5, 5, 1.0);
  EXPECT_THROW(audit_eprocess(e, s, 5, {}, 1, 0), DepthTooLarge);
  const std::vector<double> off = {0.0, 0.3, 1.0};
  EXPECT_THROW(audit_eprocess(e, s, 2, off, 1, 0), InvalidArgument);
}

TEST(EProcess, TableLookupMissingPathThrows) {
  const auto e = EProcess::from_table(0.5, {{{}, 1.0}, {{0.0}, 2.0}});
  const double p[1] = {1.0};
  EXPECT_THROW(e(p), InvalidArgument);
  EXPECT_THROW(EProcess::from_table(0.5, {{{}, -1.0}}), InvalidArgument);
}

TEST(DominateT2, ConstantOne) {
  const auto s = SampleSpace::equispaced(5, 0.5);
  const auto out = dominate_t2(PairTable::tabulate(s, [](double, double) { return 1.0; }));
  ASSERT_TRUE(std::holds_alternative<T2Dominator>(out));
  const auto& dom = std::get<T2Dominator>(out);
  EXPECT_DOUBLE_EQ(dom.bets.lambdas()[0][0], 0.0);
  for (double l : dom.bets.lambdas()[1]) EXPECT_DOUBLE_EQ(l, 0.0);
}

TEST(DominateT2, RecoversCoinBets) {
  std::mt19937_64 gen(19);
  const auto s = SampleSpace::equispaced(5, 0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto bets = MultiRoundCoinBet::random(s, 2, gen);
    const auto table = PairTable::tabulate(s, [&](double x, double y) {
      const double xs[2] = {x, y};
      return bets(xs);
    });
    const auto out = dominate_t2(table);
    ASSERT_TRUE(std::holds_alternative<T2Dominator>(out));
    const auto& dom = std::get<T2Dominator>(out);
    EXPECT_LE(dom.max_shortfall, 1e-9);
    EXPECT_NEAR(dom.bets.lambdas()[0][0], bets.lambdas()[0][0], 1e-9);
    for (std::size_t i = 0; i < s.size(); ++i)
      EXPECT_NEAR(dom.bets.lambdas()[1][i], bets.lambdas()[1][i], 1e-9) << "rep " << rep << " x=" << s[i];
  }
}

TEST(DominateT2, MajorisesValidNonCoinBetTables) {
  // Coin-bet products scaled down and mixed: valid but not exact.
  std::mt19937_64 gen(23);
  const auto s = SampleSpace::equispaced(5, 0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto b1 = MultiRoundCoinBet::random(s, 2, gen);
    const auto b2 = MultiRoundCoinBet::random(s, 2, gen);
    const double w = unit_uniform(gen);
    const double scale = unit_uniform(gen);
    const auto table = PairTable::tabulate(s, [&](double x, double y) {
      const double xs[2] = {x, y};
      return scale * (w * b1(xs) + (1 - w) * b2(xs));
    });
    const auto out = dominate_t2(table);
    ASSERT_TRUE(std::holds_alternative<T2Dominator>(out));
    const auto& dom = std::get<T2Dominator>(out);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j) {
        const double xs[2] = {s[i], s[j]};
        ASSERT_GE(dom.bets(xs), table(i, j) - 1e-9);
      }
  }
}

TEST(DominateT2, RefutesConditionalCounterexample) {
  const SampleSpace s({0.0, 0.5, 1.0}, 0.5);
  const auto table = PairTable::tabulate(s, [](double x, double y) { return x == 1.0 && y == 0.5 ? 4.0 : 0.0; });
  const auto out = dominate_t2(table);
  ASSERT_TRUE(std::holds_alternative<T2Refutation>(out));
  const auto& ref = std::get<T2Refutation>(out);
  EXPECT_DOUBLE_EQ(ref.expectation, 2.0);
  // First round fair on {0, 1}; second round a point mass at 1/2.
  EXPECT_EQ(ref.witness.node(0), std::make_pair(0.0, 1.0));
  EXPECT_DOUBLE_EQ(ref.witness.weight(0), 0.5);
  EXPECT_EQ(ref.witness.node(2), std::make_pair(0.5, 0.5));
  EXPECT_DOUBLE_EQ(ref.witness.weight(2), 1.0);
  const auto f = [&](std::span<const double> p) { return p.size() == 2 ? table.at(p[0], p[1]) : 0.0; };
  EXPECT_DOUBLE_EQ(tree_expectation(ref.witness, StoppingMask::full(2), f), 2.0);
}

}  // namespace evbet::test

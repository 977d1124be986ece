#include <gtest/gtest.h>

#include "spinbus/errors.hpp"
#include "spinbus/optimize.hpp"

using namespace spinbus;

namespace {

StrategySpec tiny_s1() {
  StrategySpec s = default_strategy(Strategy::S1, 2);
  s.j0 = {0.2, 0.4, 0.1};
  s.h = {{0.0, 0.4, 0.2}, {-0.3, 0.0, 0.3}};
  s.tau = {1.0, 20.0, 0.5};
  return s;
}

}  // namespace

TEST(Grid, ValuesIncludeEndpoints) {
  EXPECT_EQ((GridRange{0.0, 1.0, 0.25}.values()), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ((GridRange{0.01, 1.0, 0.01}.values().size()), 100U);
  EXPECT_EQ((GridRange{1.0, 500.0, 0.25}.values().size()), 1997U);
  EXPECT_EQ((GridRange{0.0, 0.9, 0.4}.values()), (std::vector<double>{0.0, 0.4, 0.8}));
  EXPECT_EQ(GridRange::single(3.5).values(), std::vector<double>{3.5});
  EXPECT_THROW((GridRange{1.0, 0.0, 0.1}.values()), DomainError);
  EXPECT_THROW((GridRange{0.0, 1.0, 0.0}.values()), DomainError);
}

TEST(Strategy, ParseAndDefaults) {
  EXPECT_EQ(parse_strategy("S2"), Strategy::S2);
  EXPECT_EQ(parse_strategy("s1"), Strategy::S1);
  EXPECT_THROW(parse_strategy("S3"), DomainError);
  const StrategySpec s = default_strategy(Strategy::S2, 3);
  ASSERT_EQ(s.h.size(), 3U);
  EXPECT_EQ(s.h[0].min, 0.0);
  EXPECT_EQ(s.h[1].max, 0.0);
  EXPECT_EQ(s.h[2].min, 0.0);
  EXPECT_NO_THROW(s.validate(SystemLayout(4, 3)));
}

TEST(Strategy, ValidateRejectsBadRanges) {
  const SystemLayout l(4, 2);
  StrategySpec s = tiny_s1();
  s.h[1] = {0.0, 0.5, 0.1};
  EXPECT_THROW(s.validate(l), DomainError);
  s = tiny_s1();
  s.h.pop_back();
  EXPECT_THROW(s.validate(l), DomainError);
  s = tiny_s1();
  s.tau = {-1.0, 2.0, 1.0};
  EXPECT_THROW(s.validate(l), DomainError);
  s = tiny_s1();
  s.J = 0.0;
  EXPECT_THROW(s.validate(l), DomainError);
  s = tiny_s1();
  s.refine_passes = -1;
  EXPECT_THROW(s.validate(l), DomainError);
}

TEST(Strategy, ParamsInUnitsOfJ) {
  StrategySpec s = tiny_s1();
  s.J = 2.0;
  const double fields[] = {0.3, -0.2};
  const HamiltonianParams p1 = strategy_params(s, 0.05, fields);
  EXPECT_DOUBLE_EQ(p1.J0, 0.1);
  EXPECT_DOUBLE_EQ(p1.h0, 0.0);
  EXPECT_DOUBLE_EQ(p1.h[1], -0.4);
  s.kind = Strategy::S2;
  const HamiltonianParams p2 = strategy_params(s, 25.0, fields);
  EXPECT_DOUBLE_EQ(p2.J0, 2.0);
  EXPECT_DOUBLE_EQ(p2.h0, 50.0);
}

TEST(EvaluatePoint, ReportsTheFirstMaximumOverTau) {
  const SystemLayout l(3, 2);
  HamiltonianParams p;
  p.J0 = 0.3;
  p.h = {0.2, -0.2};
  const std::vector<double> taus = GridRange{0.0, 30.0, 0.5}.values();
  std::vector<FidelityReport> seen;
  const PointResult r = evaluate_point(l, p, taus, EvaluationOptions{}, [&](const FidelityReport& f) { seen.push_back(f); });
  ASSERT_TRUE(r.ok) << r.error;
  ASSERT_EQ(seen.size(), taus.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < seen.size(); ++i) {
    if (seen[i].mean > seen[best].mean) best = i;
  }
  EXPECT_EQ(r.tau, taus[best]);
  EXPECT_EQ(r.fidelity, seen[best].mean);
  EXPECT_EQ(r.per_pair, seen[best].per_pair);
}

TEST(EvaluatePoint, CapturesErrors) {
  HamiltonianParams p;
  p.h = {0.1};
  const double taus[] = {1.0};
  const PointResult r = evaluate_point(SystemLayout(3, 2), p, taus, EvaluationOptions{});
  EXPECT_FALSE(r.ok);
  EXPECT_FALSE(r.error.empty());
}

TEST(Optimize, ArgmaxIsTheBestLandscapePoint) {
  const SystemLayout l(3, 2);
  const StrategySpec s = tiny_s1();
  const OptimizationResult r = optimize(l, s, EvaluationOptions{}, 1);
  EXPECT_EQ(r.evaluated, 3U * 3U * 2U);
  EXPECT_EQ(r.failed, 0U);
  ASSERT_EQ(r.landscape.size(), r.evaluated);
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.landscape.size(); ++i) {
    if (r.landscape[i].fidelity > r.landscape[best].fidelity) best = i;
  }
  EXPECT_EQ(r.best.fidelity, r.landscape[best].fidelity);
  EXPECT_EQ(r.best.params.J0, r.landscape[best].params.J0);
  EXPECT_EQ(r.best.params.h, r.landscape[best].params.h);
  // Enumeration order: strategy axis outermost, then h_1, then h_2.
  EXPECT_DOUBLE_EQ(r.landscape[0].params.J0, 0.2);
  EXPECT_EQ(r.landscape[1].params.h[1], 0.0);
  EXPECT_DOUBLE_EQ(r.landscape[2].params.h[0], 0.2);
  EXPECT_DOUBLE_EQ(r.landscape[6].params.J0, 0.3);
}

TEST(Optimize, IndependentOfWorkerCount) {
  const SystemLayout l(3, 2);
  const StrategySpec s = tiny_s1();
  const OptimizationResult a = optimize(l, s, EvaluationOptions{}, 1);
  for (int workers : {2, 3, 8}) {
    const OptimizationResult b = optimize(l, s, EvaluationOptions{}, workers);
    ASSERT_EQ(a.landscape.size(), b.landscape.size());
    for (std::size_t i = 0; i < a.landscape.size(); ++i) {
      EXPECT_EQ(a.landscape[i].fidelity, b.landscape[i].fidelity);
      EXPECT_EQ(a.landscape[i].tau, b.landscape[i].tau);
    }
    EXPECT_EQ(a.best.fidelity, b.best.fidelity);
    EXPECT_EQ(a.best.params.J0, b.best.params.J0);
  }
}

TEST(Optimize, RefinementNeverLowersTheOptimum) {
  const SystemLayout l(3, 2);
  StrategySpec s = tiny_s1();
  const OptimizationResult coarse = optimize(l, s, EvaluationOptions{}, 2);
  s.refine_passes = 2;
  const OptimizationResult fine = optimize(l, s, EvaluationOptions{}, 2);
  EXPECT_GE(fine.best.fidelity, coarse.best.fidelity);
  EXPECT_GT(fine.evaluated, coarse.evaluated);
  EXPECT_GE(fine.best.params.J0, s.j0.min - 1e-12);
  EXPECT_LE(fine.best.params.J0, s.j0.max + 1e-12);
}

TEST(Optimize, SinglePairWeakCouplingIsHighFidelity) {
  const SystemLayout l(4, 1);
  StrategySpec s = default_strategy(Strategy::S1, 1);
  s.j0 = {0.03, 0.05, 0.01};
  s.h = {{0.0, 0.1, 0.05}};
  const OptimizationResult r = optimize(l, s, EvaluationOptions{}, 2);
  EXPECT_GT(r.best.fidelity, 0.99);
  EXPECT_EQ(r.best.per_pair.size(), 1U);
}

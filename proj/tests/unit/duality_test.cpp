#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "diachronic/duality.hpp"
#include "diachronic/error.hpp"

using namespace diachronic;
using namespace diachronic::duality;

namespace {

// Brute-force optimum of max c.x over {x in R^2 : rows x <= rhs}: best
// feasible vertex among all pairwise intersections.
double vertex_oracle(const std::vector<std::array<double, 2>>& rows, const std::vector<double>& rhs,
                     std::array<double, 2> c) {
  double best = -INFINITY;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
      if (std::abs(det) < 1e-12) continue;
      const double x = (rhs[i] * rows[j][1] - rows[i][1] * rhs[j]) / det;
      const double y = (rows[i][0] * rhs[j] - rhs[i] * rows[j][0]) / det;
      bool ok = true;
      for (std::size_t k = 0; k < rows.size(); ++k) ok = ok && rows[k][0] * x + rows[k][1] * y <= rhs[k] + 1e-9;
      if (ok) best = std::max(best, c[0] * x + c[1] * y);
    }
  return best;
}

DualityInstance two_branch_instance(std::vector<std::vector<double>> S) {
  // y in {0, 1}, H = 2; after each y the next forecast is one of two points
  // and P(.|y) is their midpoint.
  const ProbMeasure q1(2, 1, {0.2, 0.8});
  const ProbMeasure q2(2, 1, {0.6, 0.4});
  const ProbMeasure q3(2, 1, {0.9, 0.1});
  const ProbMeasure q4(2, 1, {0.3, 0.7});
  // P(y=0) = 0.25; P(.|0) = (0.4, 0.6); P(.|1) = (0.6, 0.4).
  const ProbMeasure P(2, 2, {0.25 * 0.4, 0.25 * 0.6, 0.75 * 0.6, 0.75 * 0.4});
  return {P, {{q1, q2}, {q3, q4}}, std::move(S)};
}

}  // namespace

TEST(Simplex, TextbookMaximum) {
  LinearProgram lp;
  lp.objective = {3.0, 5.0};
  lp.add_row({1.0, 0.0}, RowSense::Le, 4.0);
  lp.add_row({0.0, 2.0}, RowSense::Le, 12.0);
  lp.add_row({3.0, 2.0}, RowSense::Le, 18.0);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 36.0, 1e-12);
  EXPECT_NEAR(r.x[0], 2.0, 1e-12);
  EXPECT_NEAR(r.x[1], 6.0, 1e-12);
}

TEST(Simplex, InfeasibleAndUnbounded) {
  LinearProgram inf;
  inf.objective = {1.0};
  inf.add_row({1.0}, RowSense::Ge, 2.0);
  inf.add_row({1.0}, RowSense::Le, 1.0);
  EXPECT_EQ(solve_lp(inf).status, LpStatus::Infeasible);
  LinearProgram unb;
  unb.objective = {1.0, 1.0};
  unb.add_row({1.0, -1.0}, RowSense::Le, 1.0);
  EXPECT_EQ(solve_lp(unb).status, LpStatus::Unbounded);
}

TEST(Simplex, RedundantEqualitiesAndFreeVariables) {
  LinearProgram lp;
  lp.maximize = false;
  lp.objective = {1.0, 2.0};
  lp.free = {true, true};
  lp.add_row({1.0, 1.0}, RowSense::Eq, 1.0);
  lp.add_row({2.0, 2.0}, RowSense::Eq, 2.0);
  lp.add_row({1.0, 0.0}, RowSense::Le, 3.0);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.x[0], 3.0, 1e-12);
  EXPECT_NEAR(r.x[1], -2.0, 1e-12);
  EXPECT_NEAR(r.objective, -1.0, 1e-12);
}

// Beale's example cycles under the largest-coefficient rule.
TEST(Simplex, BlandAvoidsCycling) {
  LinearProgram lp;
  lp.maximize = false;
  lp.objective = {-0.75, 150.0, -0.02, 6.0};
  lp.add_row({0.25, -60.0, -0.04, 9.0}, RowSense::Le, 0.0);
  lp.add_row({0.5, -90.0, -0.02, 3.0}, RowSense::Le, 0.0);
  lp.add_row({0.0, 0.0, 1.0, 0.0}, RowSense::Le, 1.0);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, -0.05, 1e-12);
}

TEST(Simplex, MatchesVertexEnumeration) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::array<double, 2>> rows{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    std::vector<double> rhs{5, 5, 0, 0};
    for (int k = 0; k < 4; ++k) {
      rows.push_back({u(gen), u(gen)});
      rhs.push_back(0.5 + std::abs(u(gen)) * 3);
    }
    const std::array<double, 2> c{u(gen), u(gen)};
    LinearProgram lp;
    lp.objective = {c[0], c[1]};
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (k != 2 && k != 3) lp.add_row({rows[k][0], rows[k][1]}, RowSense::Le, rhs[k]);
    const auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LpStatus::Optimal);
    EXPECT_NEAR(r.objective, vertex_oracle(rows, rhs, c), 1e-9);
  }
}

TEST(Primal, SingleBranchIsConditioning) {
  const ProbMeasure P(2, 2, {0.1, 0.2, 0.3, 0.4});
  DualityInstance inst{P, {{P.condition_on(0)}, {P.condition_on(1)}}, {{1.0}, {1.0}}};
  const auto p = solve_primal(inst);
  ASSERT_EQ(p.status, LpStatus::Optimal);
  EXPECT_NEAR(p.objective, 1.0, 1e-12);
  EXPECT_NEAR(p.X[0][0], 1.0, 1e-12);
  EXPECT_NEAR(p.X[1][0], 1.0, 1e-12);
  const auto d = solve_dual(inst);
  ASSERT_EQ(d.status, LpStatus::Optimal);
  EXPECT_NEAR(d.objective, 1.0, 1e-12);
}

TEST(Primal, MidpointGivesWeightedMean) {
  const auto inst = two_branch_instance({{0.0, 2.0}, {1.0, 0.5}});
  const auto p = solve_primal(inst);
  ASSERT_EQ(p.status, LpStatus::Optimal);
  // The midpoint mixture is the only feasible X: (1/2, 1/2) after each y.
  EXPECT_NEAR(p.X[0][0], 0.5, 1e-12);
  EXPECT_NEAR(p.X[1][1], 0.5, 1e-12);
  EXPECT_NEAR(p.objective, 0.25 * 1.0 + 0.75 * 0.75, 1e-12);
  EXPECT_NEAR(solve_dual(inst).objective, p.objective, 1e-9);
}

TEST(Primal, ZeroTargets) {
  const auto inst = two_branch_instance({{0.0, 0.0}, {0.0, 0.0}});
  EXPECT_NEAR(solve_primal(inst).objective, 0.0, 1e-12);
  const auto d = solve_dual(inst);
  EXPECT_NEAR(d.objective, 0.0, 1e-12);
  for (const auto& row : dominate_supermartingale(inst, d.Z))
    for (double v : row) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Primal, InfeasibleWhenNotAMixture) {
  const ProbMeasure P(2, 2, {0.1, 0.2, 0.3, 0.4});
  const ProbMeasure wrong(2, 1, {0.5, 0.5});
  DualityInstance inst{P, {{wrong}, {P.condition_on(1)}}, {{1.0}, {1.0}}};
  EXPECT_EQ(solve_primal(inst).status, LpStatus::Infeasible);
  EXPECT_EQ(solve_dual(inst).status, LpStatus::Unbounded);
}

TEST(Instance, Validation) {
  const ProbMeasure P(2, 2, {0.1, 0.2, 0.3, 0.4});
  const auto q = P.condition_on(0);
  EXPECT_THROW((DualityInstance{P, {{q, q}, {q}}, {{1.0, 1.0}, {1.0}}}.validate()), InvalidArgument);
  EXPECT_THROW((DualityInstance{P, {{q}, {q}}, {{-1.0}, {1.0}}}.validate()), InvalidArgument);
  EXPECT_THROW((DualityInstance{P, {{q}}, {{1.0}}}.validate()), InvalidArgument);
}

TEST(Duality, StrongDualityOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomInstanceSpec spec;
    spec.alphabet = 2 + static_cast<int>(seed % 2);
    spec.horizon = 2 + static_cast<int>(seed % 3 == 0);
    spec.branches = 1 + static_cast<int>(seed % 4);
    const auto inst = random_instance(spec, seed);
    const auto p = solve_primal(inst);
    const auto d = solve_dual(inst);
    ASSERT_EQ(p.status, LpStatus::Optimal) << seed;
    ASSERT_EQ(d.status, LpStatus::Optimal) << seed;
    EXPECT_NEAR(p.objective, d.objective, 1e-9) << seed;
    // Primal feasibility of the returned X.
    for (int y = 0; y < inst.alphabet(); ++y) {
      const auto& X = p.X[static_cast<std::size_t>(y)];
      double total = 0.0;
      for (double v : X) {
        EXPECT_GE(v, -1e-12);
        total += v;
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
      const auto cond = inst.conditional(y);
      for (std::size_t x = 0; x < cond.size(); ++x) {
        double mix = 0.0;
        for (std::size_t r = 0; r < X.size(); ++r) mix += X[r] * inst.branches[static_cast<std::size_t>(y)][r].weight(x);
        EXPECT_NEAR(mix, cond[x], 1e-9);
      }
    }
    // Weak duality against the dominated values for the LP's own X.
    const auto dominated = dominate_supermartingale(inst, d.Z);
    for (int y = 0; y < inst.alphabet(); ++y)
      for (std::size_t r = 0; r < dominated[static_cast<std::size_t>(y)].size(); ++r)
        EXPECT_GE(dominated[static_cast<std::size_t>(y)][r], inst.S[static_cast<std::size_t>(y)][r] - 1e-9);
    EXPECT_NEAR(primal_value(inst, p.X, dominated), d.objective, 1e-9);
  }
}

// With more branches than dimensions the primal feasible set is a polytope;
// the dominated values have the same P-expectation under every point of it.
TEST(Duality, DominatedExpectationIgnoresPrimalVariables) {
  RandomInstanceSpec spec;
  spec.alphabet = 2;
  spec.horizon = 2;
  spec.branches = 4;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = random_instance(spec, seed);
    const auto d = solve_dual(inst);
    const auto dominated = dominate_supermartingale(inst, d.Z);
    auto other = inst;
    for (auto& row : other.S)
      for (double& v : row) v = 2.0 - v;
    const auto x1 = solve_primal(inst).X;
    const auto x2 = solve_primal(other).X;
    EXPECT_NEAR(primal_value(inst, x1, dominated), d.objective, 1e-9);
    EXPECT_NEAR(primal_value(inst, x2, dominated), d.objective, 1e-9);
  }
}

TEST(Validity, GameTheoreticFirstValuesHaveOptimumOne) {
  RandomInstanceSpec spec;
  spec.horizon = 3;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = random_instance(spec, seed);
    const auto f1 = random_test_tickets(inst, seed + 1000);
    inst.S = first_values(inst, f1);
    const auto p = solve_primal(inst);
    ASSERT_EQ(p.status, LpStatus::Optimal);
    EXPECT_LE(p.objective, 1.0 + 1e-9);
    EXPECT_NEAR(p.objective, 1.0, 1e-9);  // a martingale: every mixture prices it at 1
    // Martingale first values are their own dominating values.
    const auto d = solve_dual(inst);
    const auto dominated = dominate_supermartingale(inst, d.Z);
    for (int y = 0; y < inst.alphabet(); ++y)
      for (std::size_t r = 0; r < dominated[static_cast<std::size_t>(y)].size(); ++r)
        EXPECT_NEAR(dominated[static_cast<std::size_t>(y)][r], inst.S[static_cast<std::size_t>(y)][r], 1e-9);
  }
}

TEST(Validity, SupermartingaleAndReplay) {
  RandomInstanceSpec spec;
  spec.alphabet = 3;
  spec.horizon = 2;
  spec.branches = 2;
  std::mt19937_64 gen(99);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = random_instance(spec, seed);
    inst.S = first_values(inst, random_test_tickets(inst, seed + 7));
    for (auto& row : inst.S)
      for (double& v : row) v *= std::uniform_real_distribution<double>(0.5, 1.0)(gen);
    const auto p = solve_primal(inst);
    ASSERT_EQ(p.status, LpStatus::Optimal);
    EXPECT_LE(p.objective, 1.0 + 1e-9);
    // The dual's Z, played as Sceptic's first move, reaches at least S.
    const auto d = solve_dual(inst);
    const auto replay = first_values(inst, tickets_from_dual(inst, d.Z));
    for (int y = 0; y < inst.alphabet(); ++y)
      for (std::size_t r = 0; r < replay[static_cast<std::size_t>(y)].size(); ++r)
        EXPECT_GE(replay[static_cast<std::size_t>(y)][r], inst.S[static_cast<std::size_t>(y)][r] - 1e-9);
  }
}

TEST(Witness, ConditioningNeedsNoSplit) {
  const ProbMeasure P(2, 3, {0.05, 0.1, 0.15, 0.2, 0.1, 0.1, 0.2, 0.1});
  const Sequence y{1, 0, 1};
  const std::vector<ProbMeasure> fc{P, P.condition_on(1), P.condition_on(1).condition_on(0)};
  const auto space = coherence_witness(fc, y);
  EXPECT_EQ(space.size(), 8U);
  for (double e : space.epsilon) EXPECT_EQ(e, 1.0);
  const auto check = verify_witness(space, fc, y);
  EXPECT_TRUE(check.ok);
  EXPECT_NEAR(check.event_probability, P.weight(y), 1e-15);
}

TEST(Witness, TwoStepSplit) {
  const ProbMeasure P1(2, 2, {0.1, 0.3, 0.4, 0.2});
  const ProbMeasure P2(2, 1, {0.9, 0.1});
  const Sequence y{0, 1};
  const auto space = coherence_witness({P1, P2}, y);
  ASSERT_EQ(space.epsilon.size(), 1U);
  // P1(.|0) = (0.25, 0.75); the largest admissible power of 1/2 stays below
  // min(0.25/0.9, 0.75/0.1) = 0.2777...
  EXPECT_EQ(space.epsilon[0], 0.25);
  const auto check = verify_witness(space, {P1, P2}, y);
  EXPECT_TRUE(check.ok);
  EXPECT_LE(check.max_deviation, 1e-12);
  EXPECT_NEAR(check.event_probability, 0.4 * 0.25 * 0.1, 1e-15);
}

TEST(Witness, RandomForecastsVerify) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int A = 2 + trial % 2;
    const int N = 1 + trial % 4;
    std::vector<ProbMeasure> fc;
    Sequence y;
    for (int n = 1; n <= N; ++n) {
      std::vector<double> w(measures::seq_index::count(A, N - n + 1));
      for (double& v : w) v = u(gen);
      fc.push_back(ProbMeasure::from_unnormalized(A, N - n + 1, std::move(w)));
      y.push_back(static_cast<Symbol>(gen() % static_cast<unsigned>(A)));
    }
    const auto space = coherence_witness(fc, y);
    const auto check = verify_witness(space, fc, y);
    ASSERT_TRUE(check.ok) << trial;
    EXPECT_LE(check.max_deviation, 1e-12);
    for (std::size_t k = 0; k < space.epsilon.size(); ++k) {
      const double e = space.epsilon[k];
      EXPECT_TRUE(e == 1.0 || (e > 0.0 && e <= 0.5));
    }
  }
}

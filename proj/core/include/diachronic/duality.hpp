#pragma once

// One step of the game-theoretic / measure-theoretic equivalence as a pair of
// linear programs, and the finite probability space that makes any forecast
// sequence look conditionally coherent.

#include <cstdint>
#include <string>
#include <vector>

#include "diachronic/engine.hpp"
#include "diachronic/measures.hpp"

namespace diachronic::duality {

using measures::ProbMeasure;
using measures::Sequence;
using measures::Symbol;

// ---- linear programming ----

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(LpStatus s);

enum class RowSense { Le, Eq, Ge };

/// maximize (or minimize) c.x subject to rows, with x_j >= 0 unless free[j].
struct LinearProgram {
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<RowSense> senses;
  std::vector<double> rhs;
  std::vector<bool> free;  // empty means every variable is nonnegative
  bool maximize = true;

  [[nodiscard]] std::size_t variables() const noexcept { return objective.size(); }
  void add_row(std::vector<double> row, RowSense sense, double b);
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  int pivots = 0;
};

/// Dense two-phase simplex with Bland's rule; redundant equality rows are
/// detected and dropped after phase one.
LpResult solve_lp(const LinearProgram& lp, double tolerance = 1e-10);

// ---- the equivalence instance ----

/// First step of the recursion: P on Y^H is Forecaster's current prediction;
/// after y is observed the next prediction is one of branches[y][r] on
/// Y^(H-1), and S[y][r] is a candidate first value for that case.
struct DualityInstance {
  ProbMeasure P;
  std::vector<std::vector<ProbMeasure>> branches;
  std::vector<std::vector<double>> S;

  [[nodiscard]] int alphabet() const noexcept { return P.alphabet(); }
  [[nodiscard]] int horizon() const noexcept { return P.horizon(); }
  /// Shape, positivity and distinct-branch checks; throws InvalidArgument.
  void validate() const;
  /// P(x | y) as a vector indexed by the code of x.
  [[nodiscard]] std::vector<double> conditional(Symbol y) const;
};

struct LPSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  /// Primal: X[y][r], the conditional probability of branch r after y.
  std::vector<std::vector<double>> X;
  /// Dual: Z[y][code of x], the ticket numbers f_1(yx).
  std::vector<std::vector<double>> Z;
  int pivots = 0;
};

/// max sum_y P(y) sum_r S_{y,r} X_{y,r} s.t. X >= 0, sum_r X_{y,r} = 1 and
/// sum_r X_{y,r} Q_r(x|y) = P(x|y).
LPSolution solve_primal(const DualityInstance& inst);

/// min sum_{y,x} P(yx) Z_{y,x} s.t. sum_x Q_r(x|y) Z_{y,x} >= S_{y,r}, Z free.
LPSolution solve_dual(const DualityInstance& inst);

/// S'_{y,r} = sum_x Q_r(x|y) Z_{y,x}: the martingale first values that
/// dominate S once the dual has been solved.
std::vector<std::vector<double>> dominate_supermartingale(const DualityInstance& inst,
                                                          const std::vector<std::vector<double>>& Z);

/// sum_y P(y) sum_r X_{y,r} S_{y,r}.
double primal_value(const DualityInstance& inst, const std::vector<std::vector<double>>& X,
                    const std::vector<std::vector<double>>& S);

/// Z as Sceptic's first move f_1 on Y^H.
engine::TicketPortfolio tickets_from_dual(const DualityInstance& inst, const std::vector<std::vector<double>>& Z);

/// Capital K_1 of a joint-test play that starts at 1, announces P, bets f1,
/// observes y and then sees branch r announced. Runs the engine.
double first_value(const DualityInstance& inst, const engine::TicketPortfolio& f1, Symbol y, int r);

/// First values K_1 for every (y, r) under the same f1.
std::vector<std::vector<double>> first_values(const DualityInstance& inst, const engine::TicketPortfolio& f1);

struct RandomInstanceSpec {
  int alphabet = 2;
  int horizon = 3;
  int branches = 3;
  /// Scale of the random target values S in [0, s_max].
  double s_max = 2.0;
};

/// Feasible by construction: P(.|y) is a random strictly positive mixture of
/// the branches.
DualityInstance random_instance(const RandomInstanceSpec& spec, std::uint64_t seed);

/// Nonnegative random f1 whose cost under P is at most one, so the first
/// values it generates belong to a game-theoretic test martingale.
engine::TicketPortfolio random_test_tickets(const DualityInstance& inst, std::uint64_t seed);

// ---- coherence witness ----

/// A positive finite probability space with a filtration and Y-valued
/// process. Sample point i carries the observation sequence values[i]; its
/// F_n atom is identified by (values[i][0..n), min(level[i], n)), where
/// level is the depth of the split chain the point belongs to.
struct FiniteSpace {
  int alphabet = 2;
  int N = 1;
  std::vector<double> prob;
  std::vector<Sequence> values;
  std::vector<int> level;
  /// Split proportion used at each step 1..N-1; 1 means no split was needed.
  std::vector<double> epsilon;

  [[nodiscard]] std::size_t size() const noexcept { return prob.size(); }
  /// Atom key of sample point i in F_n.
  [[nodiscard]] std::pair<Sequence, int> atom(std::size_t i, int n) const;
};

/// Builds the space by splitting the realized outcome at every step.
/// forecasts[n-1] is P_n on Y^(N-n+1).
FiniteSpace coherence_witness(const std::vector<ProbMeasure>& forecasts, const Sequence& outcomes);

struct WitnessCheck {
  bool ok = false;
  /// Probability of {P_n = P(.|F_{n-1}) and Y_n = y_n for all n}.
  double event_probability = 0.0;
  /// Largest deviation between a recomputed conditional and its forecast.
  double max_deviation = 0.0;
};

/// Recomputes every conditional law from the sample points by brute force.
WitnessCheck verify_witness(const FiniteSpace& space, const std::vector<ProbMeasure>& forecasts,
                            const Sequence& outcomes, double tolerance = 1e-12);

}  // namespace diachronic::duality

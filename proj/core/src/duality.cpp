#include "diachronic/duality.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "diachronic/error.hpp"
#include "diachronic/rng.hpp"

namespace diachronic::duality {

namespace si = measures::seq_index;

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal:
      return "optimal";
    case LpStatus::Infeasible:
      return "infeasible";
    case LpStatus::Unbounded:
      return "unbounded";
    case LpStatus::IterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

void LinearProgram::add_row(std::vector<double> row, RowSense sense, double b) {
  require(row.size() == objective.size(), "constraint row length must match the objective");
  rows.push_back(std::move(row));
  senses.push_back(sense);
  rhs.push_back(b);
}

// ---- simplex ----

namespace {

constexpr int kMaxPivots = 200000;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : a_(rows, std::vector<double>(cols, 0.0)), b_(rows, 0.0), basis_(rows) {}

  std::vector<std::vector<double>> a_;
  std::vector<double> b_;
  std::vector<std::size_t> basis_;
  int pivots = 0;

  [[nodiscard]] std::size_t rows() const { return a_.size(); }
  [[nodiscard]] std::size_t cols() const { return a_.empty() ? 0 : a_[0].size(); }

  void pivot(std::size_t r, std::size_t c) {
    ++pivots;
    const double p = a_[r][c];
    for (double& v : a_[r]) v /= p;
    b_[r] /= p;
    a_[r][c] = 1.0;
    for (std::size_t i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = a_[i][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols(); ++j) a_[i][j] -= f * a_[r][j];
      b_[i] -= f * b_[r];
      a_[i][c] = 0.0;
    }
    basis_[r] = c;
  }

  // Minimizes cost.x over columns with allowed[j]; Bland's rule throughout.
  LpStatus minimize(const std::vector<double>& cost, const std::vector<bool>& allowed, double tol) {
    std::vector<bool> in_basis(cols(), false);
    while (true) {
      if (pivots > kMaxPivots) return LpStatus::IterationLimit;
      std::fill(in_basis.begin(), in_basis.end(), false);
      for (std::size_t i = 0; i < rows(); ++i) in_basis[basis_[i]] = true;
      std::size_t entering = cols();
      for (std::size_t j = 0; j < cols() && entering == cols(); ++j) {
        if (!allowed[j] || in_basis[j]) continue;
        double d = cost[j];
        for (std::size_t i = 0; i < rows(); ++i) d -= cost[basis_[i]] * a_[i][j];
        if (d < -tol) entering = j;
      }
      if (entering == cols()) return LpStatus::Optimal;
      std::size_t leaving = rows();
      double best = 0.0;
      for (std::size_t i = 0; i < rows(); ++i) {
        if (a_[i][entering] <= tol) continue;
        const double ratio = std::max(0.0, b_[i]) / a_[i][entering];
        const double slack = tol * std::max(1.0, best);
        if (leaving == rows() || ratio < best - slack) {
          leaving = i;
          best = ratio;
        } else if (ratio <= best + slack && basis_[i] < basis_[leaving]) {
          leaving = i;
          best = std::min(best, ratio);
        }
      }
      if (leaving == rows()) return LpStatus::Unbounded;
      pivot(leaving, entering);
    }
  }

  void drop_row(std::size_t r) {
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r));
    b_.erase(b_.begin() + static_cast<std::ptrdiff_t>(r));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
  }
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tolerance) {
  const std::size_t n = lp.variables();
  const std::size_t m = lp.rows.size();
  require(lp.senses.size() == m && lp.rhs.size() == m, "row, sense and rhs counts differ");
  require(lp.free.empty() || lp.free.size() == n, "free flags must cover every variable");
  for (const auto& row : lp.rows) require(row.size() == n, "constraint row length must match the objective");

  // Structural columns: each free variable becomes a (+, -) pair.
  std::vector<std::size_t> plus(n);
  std::vector<std::size_t> minus(n, SIZE_MAX);
  std::size_t structural = 0;
  for (std::size_t j = 0; j < n; ++j) {
    plus[j] = structural++;
    if (!lp.free.empty() && lp.free[j]) minus[j] = structural++;
  }
  std::size_t slacks = 0;
  std::size_t artificials = 0;
  std::vector<RowSense> sense(lp.senses);
  std::vector<double> sign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (lp.rhs[i] < 0.0) {
      sign[i] = -1.0;
      if (sense[i] == RowSense::Le)
        sense[i] = RowSense::Ge;
      else if (sense[i] == RowSense::Ge)
        sense[i] = RowSense::Le;
    }
    if (sense[i] != RowSense::Eq) ++slacks;
    if (sense[i] != RowSense::Le) ++artificials;
  }
  const std::size_t first_artificial = structural + slacks;
  const std::size_t cols = first_artificial + artificials;
  Tableau t(m, cols);
  std::size_t s = structural;
  std::size_t art = first_artificial;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = sign[i] * lp.rows[i][j];
      t.a_[i][plus[j]] = v;
      if (minus[j] != SIZE_MAX) t.a_[i][minus[j]] = -v;
    }
    t.b_[i] = sign[i] * lp.rhs[i];
    if (sense[i] == RowSense::Le) {
      t.a_[i][s] = 1.0;
      t.basis_[i] = s++;
    } else {
      if (sense[i] == RowSense::Ge) t.a_[i][s++] = -1.0;
      t.a_[i][art] = 1.0;
      t.basis_[i] = art++;
    }
  }

  LpResult result;
  std::vector<bool> all(cols, true);
  if (artificials > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = first_artificial; j < cols; ++j) phase1[j] = 1.0;
    const LpStatus st = t.minimize(phase1, all, tolerance);
    if (st == LpStatus::IterationLimit) {
      result.status = st;
      result.pivots = t.pivots;
      return result;
    }
    double infeasibility = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(lp.rhs[i]));
    for (std::size_t i = 0; i < t.rows(); ++i)
      if (t.basis_[i] >= first_artificial) infeasibility += std::abs(t.b_[i]);
    if (infeasibility > 1e3 * tolerance * scale) {
      result.status = LpStatus::Infeasible;
      result.pivots = t.pivots;
      return result;
    }
    // Drive the remaining (zero-level) artificials out of the basis.
    for (std::size_t i = t.rows(); i-- > 0;) {
      if (t.basis_[i] < first_artificial) continue;
      std::size_t col = first_artificial;
      double best = 1e-9;
      for (std::size_t j = 0; j < first_artificial; ++j)
        if (std::abs(t.a_[i][j]) > best) {
          best = std::abs(t.a_[i][j]);
          col = j;
        }
      if (col == first_artificial)
        t.drop_row(i);
      else
        t.pivot(i, col);
    }
    for (std::size_t j = first_artificial; j < cols; ++j) all[j] = false;
  }

  std::vector<double> cost(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = lp.maximize ? -lp.objective[j] : lp.objective[j];
    cost[plus[j]] = c;
    if (minus[j] != SIZE_MAX) cost[minus[j]] = -c;
  }
  result.status = t.minimize(cost, all, tolerance);
  result.pivots = t.pivots;
  if (result.status != LpStatus::Optimal) return result;

  std::vector<double> col_value(cols, 0.0);
  for (std::size_t i = 0; i < t.rows(); ++i) col_value[t.basis_[i]] = t.b_[i];
  result.x.assign(n, 0.0);
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    result.x[j] = col_value[plus[j]] - (minus[j] != SIZE_MAX ? col_value[minus[j]] : 0.0);
    result.objective += lp.objective[j] * result.x[j];
  }
  return result;
}

// ---- instance ----

void DualityInstance::validate() const {
  const int A = alphabet();
  const int H = horizon();
  require(H >= 2, "the instance needs a horizon of at least two");
  require(static_cast<int>(branches.size()) == A, "need one branch list per symbol");
  require(static_cast<int>(S.size()) == A, "need one target list per symbol");
  for (int y = 0; y < A; ++y) {
    const auto& qs = branches[static_cast<std::size_t>(y)];
    require(!qs.empty(), "every symbol needs at least one branch");
    require(S[static_cast<std::size_t>(y)].size() == qs.size(), "targets must match the branches");
    for (std::size_t r = 0; r < qs.size(); ++r) {
      require(qs[r].alphabet() == A && qs[r].horizon() == H - 1, "branch measures live on Y^(H-1)");
      require(S[static_cast<std::size_t>(y)][r] >= 0.0, "target values must be nonnegative");
      for (std::size_t q = 0; q < r; ++q) require(!(qs[q] == qs[r]), "branches after one symbol must differ");
    }
  }
}

std::vector<double> DualityInstance::conditional(Symbol y) const {
  const ProbMeasure c = P.condition_on(y);
  return {c.weights().begin(), c.weights().end()};
}

namespace {

double prob_y(const ProbMeasure& P, Symbol y) {
  const Symbol s[1] = {y};
  return P.marginal(s);
}

}  // namespace

LPSolution solve_primal(const DualityInstance& inst) {
  inst.validate();
  const int A = inst.alphabet();
  const std::size_t tail = si::count(A, inst.horizon() - 1);
  std::vector<std::size_t> offset(static_cast<std::size_t>(A) + 1, 0);
  for (int y = 0; y < A; ++y)
    offset[static_cast<std::size_t>(y) + 1] = offset[static_cast<std::size_t>(y)] + inst.branches[static_cast<std::size_t>(y)].size();
  const std::size_t n = offset.back();

  LinearProgram lp;
  lp.objective.assign(n, 0.0);
  for (int y = 0; y < A; ++y) {
    const auto uy = static_cast<std::size_t>(y);
    const double py = prob_y(inst.P, y);
    const auto& qs = inst.branches[uy];
    for (std::size_t r = 0; r < qs.size(); ++r) lp.objective[offset[uy] + r] = py * inst.S[uy][r];
    std::vector<double> sum_row(n, 0.0);
    for (std::size_t r = 0; r < qs.size(); ++r) sum_row[offset[uy] + r] = 1.0;
    lp.add_row(std::move(sum_row), RowSense::Eq, 1.0);
    const auto cond = inst.conditional(y);
    for (std::size_t x = 0; x < tail; ++x) {
      std::vector<double> row(n, 0.0);
      for (std::size_t r = 0; r < qs.size(); ++r) row[offset[uy] + r] = qs[r].weight(x);
      lp.add_row(std::move(row), RowSense::Eq, cond[x]);
    }
  }
  const LpResult res = solve_lp(lp);
  LPSolution out;
  out.status = res.status;
  out.pivots = res.pivots;
  if (res.status != LpStatus::Optimal) return out;
  out.objective = res.objective;
  out.X.resize(static_cast<std::size_t>(A));
  for (int y = 0; y < A; ++y) {
    const auto uy = static_cast<std::size_t>(y);
    out.X[uy].assign(res.x.begin() + static_cast<std::ptrdiff_t>(offset[uy]),
                     res.x.begin() + static_cast<std::ptrdiff_t>(offset[uy + 1]));
  }
  return out;
}

LPSolution solve_dual(const DualityInstance& inst) {
  inst.validate();
  const int A = inst.alphabet();
  const std::size_t tail = si::count(A, inst.horizon() - 1);
  const std::size_t n = static_cast<std::size_t>(A) * tail;

  LinearProgram lp;
  lp.maximize = false;
  lp.objective.assign(n, 0.0);
  lp.free.assign(n, true);
  for (int y = 0; y < A; ++y) {
    const auto uy = static_cast<std::size_t>(y);
    for (std::size_t x = 0; x < tail; ++x) lp.objective[uy * tail + x] = inst.P.weight(si::concat(uy, x, inst.horizon() - 1, A));
    const auto& qs = inst.branches[uy];
    for (std::size_t r = 0; r < qs.size(); ++r) {
      std::vector<double> row(n, 0.0);
      for (std::size_t x = 0; x < tail; ++x) row[uy * tail + x] = qs[r].weight(x);
      lp.add_row(std::move(row), RowSense::Ge, inst.S[uy][r]);
    }
  }
  const LpResult res = solve_lp(lp);
  LPSolution out;
  out.status = res.status;
  out.pivots = res.pivots;
  if (res.status != LpStatus::Optimal) return out;
  out.objective = res.objective;
  out.Z.resize(static_cast<std::size_t>(A));
  for (int y = 0; y < A; ++y) {
    const auto uy = static_cast<std::size_t>(y);
    out.Z[uy].assign(res.x.begin() + static_cast<std::ptrdiff_t>(uy * tail),
                     res.x.begin() + static_cast<std::ptrdiff_t>((uy + 1) * tail));
  }
  return out;
}

std::vector<std::vector<double>> dominate_supermartingale(const DualityInstance& inst,
                                                          const std::vector<std::vector<double>>& Z) {
  const int A = inst.alphabet();
  const std::size_t tail = si::count(A, inst.horizon() - 1);
  require(static_cast<int>(Z.size()) == A, "Z needs one row per symbol");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(A));
  for (int y = 0; y < A; ++y) {
    const auto uy = static_cast<std::size_t>(y);
    require(Z[uy].size() == tail, "Z rows must cover Y^(H-1)");
    for (const auto& q : inst.branches[uy]) {
      double v = 0.0;
      for (std::size_t x = 0; x < tail; ++x) v += q.weight(x) * Z[uy][x];
      out[uy].push_back(v);
    }
  }
  return out;
}

double primal_value(const DualityInstance& inst, const std::vector<std::vector<double>>& X,
                    const std::vector<std::vector<double>>& S) {
  double v = 0.0;
  for (int y = 0; y < inst.alphabet(); ++y) {
    const auto uy = static_cast<std::size_t>(y);
    double inner = 0.0;
    for (std::size_t r = 0; r < X[uy].size(); ++r) inner += X[uy][r] * S[uy][r];
    v += prob_y(inst.P, y) * inner;
  }
  return v;
}

engine::TicketPortfolio tickets_from_dual(const DualityInstance& inst, const std::vector<std::vector<double>>& Z) {
  const int A = inst.alphabet();
  const int H = inst.horizon();
  const std::size_t tail = si::count(A, H - 1);
  std::vector<double> values(si::count(A, H));
  for (int y = 0; y < A; ++y)
    for (std::size_t x = 0; x < tail; ++x)
      values[si::concat(static_cast<std::size_t>(y), x, H - 1, A)] = Z.at(static_cast<std::size_t>(y)).at(x);
  return {A, H, std::move(values)};
}

double first_value(const DualityInstance& inst, const engine::TicketPortfolio& f1, Symbol y, int r) {
  const int A = inst.alphabet();
  const int H = inst.horizon();
  const ProbMeasure& q = inst.branches.at(static_cast<std::size_t>(y)).at(static_cast<std::size_t>(r));
  std::vector<ProbMeasure> forecasts{inst.P, q};
  Sequence outcomes{y};
  std::vector<engine::TicketPortfolio> moves{f1};
  ProbMeasure current = q;
  for (int n = 2; n <= H; ++n) {
    outcomes.push_back(0);
    moves.push_back(engine::TicketPortfolio::zero(A, H - n + 1, H - n + 1));
    if (n < H) {
      current = current.condition_on(0);
      forecasts.push_back(current);
    }
  }
  engine::PlayConfig cfg;
  cfg.protocol = engine::ProtocolId::JointTest;
  cfg.N = H;
  cfg.alphabet = A;
  cfg.enforce_nonnegativity = false;
  engine::ScriptedForecaster f(std::move(forecasts));
  engine::ScriptedSceptic s(std::move(moves));
  engine::ScriptedReality reality(std::move(outcomes));
  const auto t = engine::run_joint_test(cfg, f, s, reality);
  for (const auto& e : t.ledger.entries())
    if (e.step == 1 && !e.provisional) return e.value;
  throw InvalidState("joint-test ledger has no first value");
}

std::vector<std::vector<double>> first_values(const DualityInstance& inst, const engine::TicketPortfolio& f1) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(inst.alphabet()));
  for (int y = 0; y < inst.alphabet(); ++y)
    for (std::size_t r = 0; r < inst.branches[static_cast<std::size_t>(y)].size(); ++r)
      out[static_cast<std::size_t>(y)].push_back(first_value(inst, f1, y, static_cast<int>(r)));
  return out;
}

DualityInstance random_instance(const RandomInstanceSpec& spec, std::uint64_t seed) {
  require(spec.alphabet >= 2 && spec.horizon >= 2 && spec.branches >= 1, "bad random instance shape");
  require(spec.s_max >= 0.0, "s_max must be nonnegative");
  CounterRng rng(seed, 0x64756c);
  const int A = spec.alphabet;
  const std::size_t tail = si::count(A, spec.horizon - 1);
  auto positive = [&rng](std::size_t k, double lo) {
    std::vector<double> w(k);
    for (double& v : w) v = rng.uniform(lo, 1.0);
    return w;
  };
  const auto py = ProbMeasure::from_unnormalized(A, 1, positive(static_cast<std::size_t>(A), 0.1));
  std::vector<std::vector<ProbMeasure>> branches(static_cast<std::size_t>(A));
  std::vector<std::vector<double>> S(static_cast<std::size_t>(A));
  std::vector<double> joint(static_cast<std::size_t>(A) * tail);
  for (int y = 0; y < A; ++y) {
    const auto uy = static_cast<std::size_t>(y);
    auto mix = positive(static_cast<std::size_t>(spec.branches), 0.1);
    double mix_total = 0.0;
    for (double w : mix) mix_total += w;
    for (double& w : mix) w /= mix_total;
    std::vector<double> cond(tail, 0.0);
    for (int r = 0; r < spec.branches; ++r) {
      branches[uy].push_back(ProbMeasure::from_unnormalized(A, spec.horizon - 1, positive(tail, 0.05)));
      for (std::size_t x = 0; x < tail; ++x) cond[x] += mix[static_cast<std::size_t>(r)] * branches[uy].back().weight(x);
      S[uy].push_back(rng.uniform(0.0, spec.s_max));
    }
    for (std::size_t x = 0; x < tail; ++x) joint[si::concat(uy, x, spec.horizon - 1, A)] = py.weight(uy) * cond[x];
  }
  return {ProbMeasure::from_unnormalized(A, spec.horizon, std::move(joint)), std::move(branches), std::move(S)};
}

engine::TicketPortfolio random_test_tickets(const DualityInstance& inst, std::uint64_t seed) {
  CounterRng rng(seed, 0x746b74);
  const std::size_t size = inst.P.size();
  std::vector<double> f(size);
  double cost = 0.0;
  for (std::size_t c = 0; c < size; ++c) {
    f[c] = rng.uniform();
    cost += f[c] * inst.P.weight(c);
  }
  const double budget = rng.uniform(0.05, 1.0);
  for (double& v : f) v *= budget / cost;
  return {inst.alphabet(), inst.horizon(), std::move(f)};
}

// ---- coherence witness ----

std::pair<Sequence, int> FiniteSpace::atom(std::size_t i, int n) const {
  const Sequence& v = values.at(i);
  return {Sequence(v.begin(), v.begin() + n), std::min(level.at(i), n)};
}

namespace {

Sequence join(const Sequence& prefix, std::size_t code, int length, int alphabet) {
  Sequence s = prefix;
  const Sequence tail = si::decode(code, length, alphabet);
  s.insert(s.end(), tail.begin(), tail.end());
  return s;
}

}  // namespace

FiniteSpace coherence_witness(const std::vector<ProbMeasure>& forecasts, const Sequence& outcomes) {
  const int N = static_cast<int>(outcomes.size());
  require(N >= 1 && static_cast<int>(forecasts.size()) == N, "need one forecast per outcome");
  const int A = forecasts[0].alphabet();
  for (int n = 1; n <= N; ++n) {
    const auto& p = forecasts[static_cast<std::size_t>(n - 1)];
    require(p.alphabet() == A && p.horizon() == N - n + 1, "forecast P_n must live on Y^(N-n+1)");
    require(outcomes[static_cast<std::size_t>(n - 1)] >= 0 && outcomes[static_cast<std::size_t>(n - 1)] < A,
            "outcome outside the alphabet");
  }
  FiniteSpace space;
  space.alphabet = A;
  space.N = N;
  auto add = [&space](Sequence v, int level, double p) {
    space.values.push_back(std::move(v));
    space.level.push_back(level);
    space.prob.push_back(p);
  };

  double mass = 1.0;  // P(A_L), the chain atom at the current level
  for (int L = 0; L < N; ++L) {
    const ProbMeasure& law = forecasts[static_cast<std::size_t>(L)];
    const Sequence prefix(outcomes.begin(), outcomes.begin() + L);
    const int len = N - L;
    const Symbol y = outcomes[static_cast<std::size_t>(L)];
    if (L == N - 1) {
      for (std::size_t c = 0; c < law.size(); ++c) add(join(prefix, c, 1, A), L, mass * law.weight(c));
      break;
    }
    for (std::size_t c = 0; c < law.size(); ++c)
      if (si::symbol_at(c, 0, len, A) != y) add(join(prefix, c, len, A), L, mass * law.weight(c));
    const ProbMeasure cond = law.condition_on(y);
    const ProbMeasure& next = forecasts[static_cast<std::size_t>(L + 1)];
    const Symbol ys[1] = {y};
    const double py = law.marginal(ys);
    double ratio = 1.0;
    double diff = 0.0;
    for (std::size_t x = 0; x < cond.size(); ++x) {
      ratio = std::min(ratio, cond.weight(x) / next.weight(x));
      diff = std::max(diff, std::abs(cond.weight(x) - next.weight(x)));
    }
    if (diff <= 1e-15) {
      // P_{L+2} already is the conditional: the chain continues without a split.
      space.epsilon.push_back(1.0);
      mass *= py;
      continue;
    }
    double eps = 0.5;
    while (eps >= ratio) eps *= 0.5;
    space.epsilon.push_back(eps);
    Sequence with_y = prefix;
    with_y.push_back(y);
    for (std::size_t x = 0; x < cond.size(); ++x) {
      const double rest = (cond.weight(x) - eps * next.weight(x)) / (1.0 - eps);
      add(join(with_y, x, len - 1, A), L, mass * py * (1.0 - eps) * rest);
    }
    mass *= py * eps;
  }
  return space;
}

WitnessCheck verify_witness(const FiniteSpace& space, const std::vector<ProbMeasure>& forecasts,
                            const Sequence& outcomes, double tolerance) {
  WitnessCheck out;
  const int N = space.N;
  const int A = space.alphabet;
  require(static_cast<int>(outcomes.size()) == N && static_cast<int>(forecasts.size()) == N,
          "forecasts and outcomes must match the space");
  double total = 0.0;
  bool positive = true;
  for (double p : space.prob) {
    total += p;
    positive = positive && p > 0.0;
  }
  // Conditional law of (Y_n..Y_N) on every F_{n-1} atom, by brute force.
  using Key = std::pair<Sequence, int>;
  std::vector<std::map<Key, std::vector<double>>> laws(static_cast<std::size_t>(N) + 1);
  for (int n = 1; n <= N; ++n) {
    auto& by_atom = laws[static_cast<std::size_t>(n)];
    const std::size_t len = si::count(A, N - n + 1);
    for (std::size_t i = 0; i < space.size(); ++i) {
      auto& law = by_atom.try_emplace(space.atom(i, n - 1), len + 1, 0.0).first->second;
      const Sequence& v = space.values[i];
      law[si::encode(std::span<const Symbol>(v).subspan(static_cast<std::size_t>(n - 1)), A)] += space.prob[i];
      law[len] += space.prob[i];
    }
  }
  auto deviation = [&](std::size_t i, int n) {
    const auto& law = laws[static_cast<std::size_t>(n)].at(space.atom(i, n - 1));
    const ProbMeasure& p = forecasts[static_cast<std::size_t>(n - 1)];
    double d = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) d = std::max(d, std::abs(law[c] / law.back() - p.weight(c)));
    return d;
  };
  double worst_on_event = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.values[i] != outcomes) continue;
    double d = 0.0;
    for (int n = 1; n <= N; ++n) d = std::max(d, deviation(i, n));
    if (d <= tolerance) {
      out.event_probability += space.prob[i];
      worst_on_event = std::max(worst_on_event, d);
    }
  }
  out.max_deviation = worst_on_event;
  out.ok = positive && std::abs(total - 1.0) <= 1e-12 && out.event_probability > 0.0;
  return out;
}

}  // namespace diachronic::duality

#include "diachronic/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "diachronic/error.hpp"

namespace diachronic::bounds {

namespace {

void require_kn(int K, int N) { require(K >= 1 && N >= K, "need 1 <= K <= N"); }

bool near_integer(double x, long long& out) {
  out = std::llround(x);
  return std::abs(x - static_cast<double>(out)) <= 1e-9 * std::max(1.0, std::abs(x));
}

struct Simpson {
  const std::function<double(double)>& f;
  int evaluations = 0;

  double eval(double x) {
    ++evaluations;
    return f(x);
  }

  double refine(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           refine(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  }
};

}  // namespace

void BoundParams::validate() const {
  require_kn(K, N);
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(C > 0.0, "C must be positive");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  require(alpha > 0.0 && alpha < C / K, "alpha must lie in (0, C/K)");
  require(U >= 0.0, "U must be nonnegative");
}

double g_eval(double x, double C, int K, double alpha) {
  require(K >= 1 && C > 0.0, "g needs K >= 1 and C > 0");
  require(alpha > 0.0 && alpha < C / K, "alpha must lie in (0, C/K)");
  const double start = C / K - alpha;
  if (x < start) return 0.0;
  return std::min(1.0, (x - start) / (K * alpha));
}

bool lemma_ep_check(std::span<const double> xs, double C, double alpha) {
  const int K = static_cast<int>(xs.size());
  require(K >= 1, "need at least one summand");
  double lhs = 0.0;
  double sum = 0.0;
  for (double x : xs) {
    lhs += g_eval(x, C, K, alpha);
    sum += x;
  }
  // The ramp sums are exact at the boundary only up to rounding.
  return lhs >= (sum >= C ? 1.0 : 0.0) - 1e-12;
}

HoeffdingBound hoeffding_bound(double U, int Q, int K, int N) {
  require(U >= 0.0, "U must be nonnegative");
  require_kn(K, N);
  require(Q >= 1 && Q <= N / K, "Q must lie in [1, N/K]");
  return {std::exp(-U * U * K / (2.0 * N)), std::exp(-U * U / (2.0 * Q))};
}

double regret_chain_bound(double C, int K, int N, double gamma) {
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(C > 0.0, "C must be positive");
  require_kn(K, N);
  const double kn = static_cast<double>(K) * N;
  return kn / (gamma * (1.0 - gamma) * C * C) * std::exp(-gamma * gamma * C * C / (2.0 * kn));
}

double regret_threshold(int K, int N, double epsilon) {
  require(epsilon > 0.0 && epsilon < 0.3, "epsilon must lie in (0, 0.3)");
  require_kn(K, N);
  return 2.0 * std::sqrt(static_cast<double>(K) * N * std::log(1.0 / epsilon));
}

double no_restriction_bound(double delta, int K, int N) {
  require(delta > 0.0, "delta must be positive");
  require_kn(K, N);
  const double r = delta * delta * N / K;
  return 5.0 / r * std::exp(-r / 4.0);
}

double regret_scale(int K, int N) {
  require_kn(K, N);
  return std::sqrt(static_cast<double>(K) * N);
}

double representation_bound(const std::function<double(double)>& survival, double C, double grid) {
  require(C > 0.0 && grid > 0.0, "C and the grid step must be positive");
  const auto last = static_cast<long long>(std::ceil(C / grid));
  double total = 0.0;
  for (long long k = 0; k <= last; ++k) {
    const double u = std::min(C, static_cast<double>(k) * grid);
    const double f = survival(u);
    require(f >= 0.0 && f <= 1.0, "survival values must lie in [0, 1]");
    total += grid * (f + grid);
  }
  return total;
}

double gaussian_survival(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  require(rel_tol > 0.0, "tolerance must be positive");
  if (lo == hi) return 0.0;
  if (lo > hi) return -integrate(f, hi, lo, rel_tol);
  // A coarse composite pass sets the absolute target and keeps narrow peaks
  // from slipping between the first few nodes.
  constexpr int kPanels = 64;
  const double width = (hi - lo) / kPanels;
  Simpson s{f};
  std::vector<double> node(2 * kPanels + 1);
  for (int i = 0; i <= 2 * kPanels; ++i) node[static_cast<std::size_t>(i)] = s.eval(lo + 0.5 * width * i);
  double coarse = 0.0;
  std::vector<double> panel(kPanels);
  for (int p = 0; p < kPanels; ++p) {
    const auto i = static_cast<std::size_t>(2 * p);
    panel[static_cast<std::size_t>(p)] = width / 6.0 * (node[i] + 4.0 * node[i + 1] + node[i + 2]);
    coarse += panel[static_cast<std::size_t>(p)];
  }
  const double tol = std::max(rel_tol * std::abs(coarse), 1e-300);
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const auto i = static_cast<std::size_t>(2 * p);
    total += s.refine(lo + width * p, lo + width * (p + 1), node[i], node[i + 1], node[i + 2],
                      panel[static_cast<std::size_t>(p)], tol / kPanels, 40);
  }
  return total;
}

double risk_aggregation_E(double a, double C, int K, double t) {
  require(a > 0.0 && C > 0.0 && K >= 1, "need a > 0, C > 0 and K >= 1");
  require(t < C / K, "t must be below C/K");
  const double hi = C - (K - 1) * t;
  const double mass = integrate([a](double x) { return std::exp(-a * x * x); }, t, hi, 1e-10);
  return K * mass / (C - K * t);
}

RiskAggregationInf risk_aggregation_inf(double a, double C, int K, double tol) {
  require(tol > 0.0, "tolerance must be positive");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = C / K;
  const double stop = tol * std::max(1.0, hi);
  auto value = [&](double t) { return risk_aggregation_E(a, C, K, t); };
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = value(x1);
  double f2 = value(x2);
  while (hi - lo > stop) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = value(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = value(x2);
    }
  }
  const double t = 0.5 * (lo + hi);
  return {t, value(t)};
}

double risk_aggregation_midpoint(double C, int K, int N) {
  require(C > 0.0, "C must be positive");
  require_kn(K, N);
  const double root = std::sqrt(static_cast<double>(K) * N);
  return 2.0 * std::sqrt(2.0 * std::numbers::pi) * root / C * gaussian_survival(C / (2.0 * root));
}

double feller_bound(double C, int K, int N) {
  require(C > 0.0, "C must be positive");
  require_kn(K, N);
  const double kn = static_cast<double>(K) * N;
  return 4.0 * kn / (C * C) * std::exp(-C * C / (8.0 * kn));
}

double lln_threshold(int K, int N, double epsilon) {
  require(epsilon > 0.0 && epsilon < 0.7, "epsilon must lie in (0, 0.7)");
  require_kn(K, N);
  return 4.0 * std::sqrt(static_cast<double>(K) * N * std::log(1.0 / epsilon));
}

LowerBound lower_bound_eval(int K, int N, double epsilon) {
  require_kn(K, N);
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  long long root = 0;
  require(N % K == 0 && near_integer(std::sqrt(static_cast<double>(N / K)), root) && root * root == N / K &&
              root % 2 == 0,
          "sqrt(N/K) must be an even integer");
  const double log_inv = std::log(1.0 / epsilon);
  long long log_root = 0;
  require(near_integer(std::sqrt(log_inv), log_root) && log_root >= 1,
          "sqrt(ln(1/epsilon)) must be a positive integer");
  const double threshold = std::sqrt(static_cast<double>(K) * N * log_inv);
  return {threshold, std::pow(epsilon, 4) / 15.0, std::pow(epsilon, 3) / 5.0, threshold <= N / 4.0};
}

double corollary_threshold(int K, int N, double epsilon) {
  require_kn(K, N);
  require(epsilon > 0.0 && 15.0 * epsilon < 1.0, "epsilon must lie in (0, 1/15)");
  return 0.5 * std::sqrt(static_cast<double>(K) * N * std::log(1.0 / (15.0 * epsilon)));
}

}  // namespace diachronic::bounds

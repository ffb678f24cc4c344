#pragma once

// Closed-form bounds of the decision-theoretic results, plus the numerical
// pieces (quadrature, golden-section search) needed to evaluate the risk
// aggregation bound away from its closed-form point. Everything is pure.

#include <functional>
#include <span>

namespace diachronic::bounds {

struct BoundParams {
  int N = 1;
  int K = 1;
  double epsilon = 0.1;
  double gamma = 0.8;
  double C = 1.0;
  double alpha = 0.1;
  double U = 0.0;

  [[nodiscard]] int Q() const noexcept { return K > 0 ? N / K : 0; }
  /// Throws InvalidArgument unless 1 <= K <= N, 0 < gamma < 1, C > 0,
  /// 0 < epsilon < 1, alpha in (0, C/K) and U >= 0.
  void validate() const;
};

/// The ramp g: 0 below C/K - alpha, slope 1/(K alpha) after that, capped at 1
/// (reached at C/K + (K-1) alpha).
double g_eval(double x, double C, int K, double alpha);

/// sum_k g(x_k) >= 1{sum_k x_k >= C}; K is xs.size().
bool lemma_ep_check(std::span<const double> xs, double C, double alpha);

struct HoeffdingBound {
  double by_steps;   // exp(-U^2 K / (2N))
  double by_blocks;  // exp(-U^2 / (2Q)), never larger since Q <= N/K
};

HoeffdingBound hoeffding_bound(double U, int Q, int K, int N);

/// (KN / (gamma (1-gamma) C^2)) exp(-gamma^2 C^2 / (2KN)).
double regret_chain_bound(double C, int K, int N, double gamma);

/// 2 sqrt(K N ln(1/epsilon)) for epsilon in (0, 0.3).
double regret_threshold(int K, int N, double epsilon);

/// Upper probability bound 5 K/(delta^2 N) exp(-delta^2 N/(4K)) on an average
/// regret of at least delta, without the restriction on delta.
double no_restriction_bound(double delta, int K, int N);

/// sqrt(K N), the scale of the first lower bound.
double regret_scale(int K, int N);

/// Grid sum sum_{k=0}^{ceil(C/grid)} grid (f(k grid) + grid) for a decreasing
/// survival function f on [0, C]; arguments past C are clamped to C. The
/// sum over-approximates int_0^C f and converges to it as grid -> 0.
double representation_bound(const std::function<double(double)>& survival, double C, double grid);

/// Standard Gaussian survival function via erfc.
double gaussian_survival(double x);

/// Adaptive Simpson quadrature to relative tolerance rel_tol.
double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol = 1e-8);

/// K int_t^{C-(K-1)t} exp(-a x^2) dx / (C - K t), for t < C/K.
double risk_aggregation_E(double a, double C, int K, double t);

struct RiskAggregationInf {
  double t;
  double value;
};

/// Golden-section minimum of risk_aggregation_E over t in (0, C/K).
RiskAggregationInf risk_aggregation_inf(double a, double C, int K, double tol = 1e-6);

/// E at t = C/(2K), a = K/(2N), with the upper limit sent to infinity:
/// 2 sqrt(2 pi) sqrt(KN)/C * survival(C / (2 sqrt(KN))).
double risk_aggregation_midpoint(double C, int K, int N);

/// (4KN/C^2) exp(-C^2/(8KN)), the Gaussian-tail bound on the midpoint value.
double feller_bound(double C, int K, int N);

/// 4 sqrt(K N ln(1/epsilon)), epsilon in (0, 0.7).
double lln_threshold(int K, int N, double epsilon);

struct LowerBound {
  double threshold;       // sqrt(K N ln(1/epsilon))
  double floor;           // epsilon^4 / 15
  double improved_floor;  // epsilon^3 / 5
  bool condition_holds;   // threshold <= N/4
};

/// Requires sqrt(N/K) to be an even integer and sqrt(ln(1/epsilon)) to be an
/// integer; the condition threshold <= N/4 is reported, not enforced.
LowerBound lower_bound_eval(int K, int N, double epsilon);

/// (1/2) sqrt(K N ln(1/(15 epsilon))): the regret reached with upper
/// probability at least epsilon once the floor is solved for; epsilon < 1/15.
double corollary_threshold(int K, int N, double epsilon);

}  // namespace diachronic::bounds

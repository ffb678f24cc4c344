#pragma once

// Experiment driver: exact enumeration over all plays, Monte Carlo runs of
// the decision-theoretic bounds and the K-step law of large numbers, and
// JSON/CSV reports.
//
// Replication r of an experiment uses random stream r under the configured
// seed, so a report depends only on the configuration and never on the
// number of worker threads.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "diachronic/io.hpp"
#include "diachronic/strategies.hpp"

namespace diachronic::harness {

using io::Json;

/// Largest state space enumerate_exact will walk: |Y|^N <= 2^20.
inline constexpr std::size_t kMaxEnumeration = std::size_t{1} << 20;

struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};

/// Wilson score interval for a binomial proportion; z = 1.96 gives 95%.
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct Frequency {
  std::size_t hits = 0;
  std::size_t trials = 0;
  [[nodiscard]] double rate() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
  }
  [[nodiscard]] WilsonInterval wilson() const { return wilson_interval(hits, trials); }
};

Json to_json(const Frequency& f);

/// An event's upper probability is at most alpha when some Sceptic strategy
/// starting from 1 keeps its capital nonnegative and ends with at least
/// 1/alpha on the event. The estimate pairs such a certificate with the
/// event's empirical frequency.
struct UpperProbEstimate {
  std::string event;
  std::string certificate;
  /// 1/alpha the strategy guarantees on the event.
  double claimed_inverse_alpha = 1.0;
  /// Smallest final capital observed on the event; +inf if it never happened.
  double achieved_inverse_alpha = std::numeric_limits<double>::infinity();
  /// Capital stayed >= 0 in every run and reached the claim on every event run.
  bool sound = true;
  Frequency frequency;
};

Json to_json(const UpperProbEstimate& u);

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  std::string experiment;
  Json config;
  Json results = Json::object();
  std::vector<Assertion> assertions;
  /// One table, header first.
  std::string csv;

  [[nodiscard]] bool passed() const;
  [[nodiscard]] Json to_json() const;
};

/// Everything an experiment needs; parsed from one JSON document.
///
/// Player entries are {"kind": ..., parameters}. Models: {"kind": "iid",
/// "marginal": [...]} or {"kind": "joint", "horizon": h, "weights": [...]}
/// or {"kind": "random_joint", "seed": s} (a random positive law on Y^N).
/// Forecasters: conditioning{model}, drifting{honest, alternative, rate}.
/// Realities: model{model, losses?}, block{} (fair coin with block losses).
/// Losses: random_table{decisions}, indicator{position}, block{}.
/// Sceptics: zero, hold{path, stake}, random_predictable{seed, amplitude},
/// hoeffding{side}. Decision Makers: bayes, constant{decision}, complement,
/// informed{model}.
struct ExperimentConfig {
  std::string experiment = "play";
  engine::ProtocolId protocol = engine::ProtocolId::Decision;
  int N = 10;
  int K = 1;
  int alphabet = 2;
  int decisions = 2;
  double epsilon = 0.1;
  double gamma = 0.8;
  engine::LossMode loss_mode = engine::LossMode::Truncated;
  bool enforce_nonnegativity = true;
  Json forecaster = Json{{"kind", "conditioning"}, {"model", {{"kind", "iid"}, {"marginal", {0.5, 0.5}}}}};
  Json reality = Json{{"kind", "model"}, {"model", {{"kind", "iid"}, {"marginal", {0.5, 0.5}}}}};
  Json sceptic = Json{{"kind", "zero"}};
  Json decision_maker = Json{{"kind", "bayes"}};
  /// Observation process of the lln experiment: {"kind": "markov", "flip": p} or {"kind": "blocks"}.
  Json sequence = Json{{"kind", "markov"}, {"flip", 0.5}};
  /// Number of random Sceptic strategies enumerate_exact checks.
  int strategies = 1;
  /// enumerate_exact: "martingale" (increments average to 0) or "supermartingale" (<= 0).
  std::string mode = "martingale";
  /// Horizon of the exact counter-example computation in run_lower_bounds.
  int exact_N = 8;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Optional thresholds checked into the report's assertions.
  Json assertions = Json::object();
  std::string out_json;
  std::string out_csv;

  static ExperimentConfig from_json(const Json& j);
  [[nodiscard]] Json to_json() const;
  [[nodiscard]] engine::PlayConfig play_config(std::uint64_t stream = 0) const;
};

// ---- strategy factory ----

std::shared_ptr<const strategies::SequenceModel> make_model(const Json& spec, int alphabet, int N);
std::shared_ptr<const strategies::LossSchedule> make_losses(const Json& spec, const ExperimentConfig& config);
std::unique_ptr<engine::Forecaster> make_forecaster(const Json& spec, const ExperimentConfig& config);
std::unique_ptr<engine::Reality> make_reality(const Json& spec, const ExperimentConfig& config);
std::unique_ptr<engine::Sceptic> make_sceptic(const Json& spec, const ExperimentConfig& config);
std::unique_ptr<engine::DecisionMaker> make_decision_maker(const Json& spec, const ExperimentConfig& config);

// ---- parallel replications ----

/// Calls body(r) for r = 0..reps-1 on `threads` workers and returns the
/// results in index order.
template <class R>
std::vector<R> run_replications(std::size_t reps, const std::function<R(std::uint64_t)>& body, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(reps, 1)));
  std::vector<R> out(reps);
  if (threads == 1) {
    for (std::size_t r = 0; r < reps; ++r) out[r] = body(r);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t r = w; r < reps; r += threads) out[r] = body(r);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---- experiments ----

/// Walks every outcome sequence of the joint-test or decision protocol under
/// the conditioning forecaster's law and computes the exact conditional
/// expectation of each capital increment given the past.
Report enumerate_exact(const ExperimentConfig& config);

/// Decision protocol with the Bayes strategy A, the Hoeffding Sceptic and the
/// configured Forecaster, Reality and Decision Maker. Counts runs with
/// Loss_N(A) - Loss_N >= 2 sqrt(K N ln(1/eps)) and checks that each such run
/// ends with Sceptic's capital >= 1/eps.
Report run_theorem_optimal(const ExperimentConfig& config);

/// Exact two-point law of (Loss(A) - Loss(B))/N in the K = N construction,
/// computed in rational arithmetic, and the Monte Carlo frequency of
/// Loss(A) - Loss(B) >= sqrt(K N) under fair-coin block losses.
Report run_lower_bounds(const ExperimentConfig& config);

/// Frequency of |sum_{n=K}^N (Y_n - E(Y_n | F_{n-K}))| >= 4 sqrt(K N ln(1/eps))
/// and of the signed sum reaching sqrt(K N).
Report run_lln(const ExperimentConfig& config);

/// Plays the configured protocol `replications` times and summarizes the ledgers.
Report run_play(const ExperimentConfig& config);

/// Dispatches on config.experiment.
Report run_experiment(const ExperimentConfig& config);

/// Writes config.out_json / config.out_csv when set.
void write_report(const Report& report, const ExperimentConfig& config);

}  // namespace diachronic::harness

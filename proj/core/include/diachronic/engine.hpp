#pragma once

// Betting protocols between Forecaster, Reality, Sceptic and Decision Maker,
// with Sceptic's capital accounting.
//
// Steps are 1-based as in the protocol descriptions: at step n Forecaster
// announces P_n, Sceptic buys tickets f_n at prices P_n, Reality announces
// y_n. Players see the full visible history through PlayView.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diachronic/measures.hpp"

namespace diachronic::engine {

using measures::CylinderMeasure;
using measures::LossFn;
using measures::ProbMeasure;
using measures::Sequence;
using measures::Symbol;

/// Capital below -kBankruptcyTolerance is bankruptcy; values in
/// [-kBankruptcyTolerance, 0) are rounding and are clamped to zero.
inline constexpr double kBankruptcyTolerance = 1e-12;
/// Tolerance used when checking that a forecast is the Bayesian update of the previous one.
inline constexpr double kConditioningTolerance = 1e-9;

enum class ProtocolId {
  Forecasting,            // forecasts and outcomes only
  JointTest,              // tickets on the whole future, resold each step
  BayesianOneStep,        // conditioning forecaster, one-step tickets
  ConditioningDifference, // one-step tickets plus a bet on the forecast revision
  Merged,                 // Reality merged into Forecaster
  KAhead,                 // tickets at most K steps ahead
  Decision,               // K-ahead with losses and a Decision Maker
  GeneralFutures,         // tickets of every length
  RadicalAdditive,
  RadicalMultiplicative,
};

std::string_view to_string(ProtocolId id);
ProtocolId protocol_from_string(std::string_view name);

enum class PlayStatus { Completed, ScepticBankrupt };
std::string_view to_string(PlayStatus status);

/// Which steps contribute to Loss_N in the decision protocol. Truncated counts
/// n = 1..N-K+1 (every counted loss sees a full K-window); Full counts all n,
/// with the lookahead window cut off at N.
enum class LossMode { Truncated, Full };

struct PlayConfig {
  ProtocolId protocol = ProtocolId::JointTest;
  int N = 2;
  /// Prediction horizon; 0 means N.
  int K = 0;
  int alphabet = 2;
  /// |D| for the decision protocol.
  int decisions = 2;
  /// Loop length of the radical protocols.
  int steps = 0;
  LossMode loss_mode = LossMode::Truncated;
  bool enforce_nonnegativity = true;
  /// Replication index; strategies derive their randomness from it.
  std::uint64_t stream = 0;

  [[nodiscard]] int horizon() const noexcept { return K == 0 ? N : K; }
  friend bool operator==(const PlayConfig&, const PlayConfig&) = default;
};

/// Sceptic's move: a real function on Y^min_length ∪ ... ∪ Y^max_length.
///
/// Values are stored per length in SeqIndex order. A portfolio created with
/// zero() holds no storage until first written, which keeps the zero strategy
/// cheap in long plays.
class TicketPortfolio {
 public:
  TicketPortfolio() = default;
  static TicketPortfolio zero(int alphabet, int min_length, int max_length);
  /// Single-length portfolio with explicit values.
  TicketPortfolio(int alphabet, int length, std::vector<double> values);

  [[nodiscard]] int alphabet() const noexcept { return alphabet_; }
  [[nodiscard]] int min_length() const noexcept { return min_length_; }
  [[nodiscard]] int max_length() const noexcept { return max_length_; }
  [[nodiscard]] bool is_zero() const noexcept;

  [[nodiscard]] double value(int length, std::size_t code) const;
  [[nodiscard]] double value(std::span<const Symbol> x) const;
  void set(int length, std::size_t code, double v);
  void set(std::span<const Symbol> x, double v);
  void add(int length, std::size_t code, double v);

  /// Values of one length; empty span for an untouched zero portfolio.
  [[nodiscard]] std::span<const double> level(int length) const;
  std::span<double> mutable_level(int length);

  friend bool operator==(const TicketPortfolio& a, const TicketPortfolio& b);

 private:
  void materialize();
  [[nodiscard]] std::size_t offset(int length) const;

  int alphabet_ = 2;
  int min_length_ = 0;
  int max_length_ = 0;
  std::vector<double> values_;
};

struct MoveDomain {
  int min_length;
  int max_length;
};

struct LedgerEntry {
  int step;
  /// K'_n rather than K_n.
  bool provisional;
  double value;
};

class CapitalLedger {
 public:
  void record(int step, bool provisional, double value) { entries_.push_back({step, provisional, value}); }
  [[nodiscard]] const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  /// K_0, K_1, ... without provisional entries.
  [[nodiscard]] std::vector<double> trajectory() const;
  [[nodiscard]] double final_value() const { return entries_.back().value; }
  [[nodiscard]] double min_value() const;
  [[nodiscard]] double max_value() const;

  friend bool operator==(const CapitalLedger& a, const CapitalLedger& b);

 private:
  std::vector<LedgerEntry> entries_;
};

std::string ledger_tag(const LedgerEntry& entry);

/// Everything the players announced, in order.
struct PlayRecord {
  std::vector<LossFn> losses;
  std::vector<ProbMeasure> forecasts;
  std::vector<CylinderMeasure> merged_forecasts;
  std::vector<int> decisions;
  std::vector<TicketPortfolio> sceptic_moves;
  std::vector<Symbol> outcomes;
};

struct PlayTranscript {
  PlayConfig config;
  PlayRecord record;
  CapitalLedger ledger;
  PlayStatus status = PlayStatus::Completed;
};

/// What a strategy sees when asked to move at step `step`: the record holds
/// every move made so far, including earlier moves of the current step.
struct PlayView {
  const PlayConfig& config;
  const PlayRecord& record;
  int step;
  /// Latest settled capital.
  double capital;

  [[nodiscard]] std::span<const Symbol> outcomes() const noexcept { return record.outcomes; }
};

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual void begin_play(const PlayConfig&) {}
  /// A Cromwell-positive measure on Y^h with h >= horizon; longer forecasts are
  /// marginalized by the engine.
  virtual ProbMeasure forecast(const PlayView& view, int horizon) = 0;
  [[nodiscard]] virtual std::unique_ptr<Forecaster> clone() const = 0;
};

/// Forecaster that has absorbed Reality: announces Q_n on Y^N concentrated on
/// the observed (n-1)-prefix.
class MergedForecaster {
 public:
  virtual ~MergedForecaster() = default;
  virtual void begin_play(const PlayConfig&) {}
  virtual CylinderMeasure forecast(const PlayView& view) = 0;
  [[nodiscard]] virtual std::unique_ptr<MergedForecaster> clone() const = 0;
};

class Reality {
 public:
  virtual ~Reality() = default;
  virtual void begin_play(const PlayConfig&) {}
  virtual Symbol outcome(const PlayView& view) = 0;
  /// Loss function on D x Y^horizon, announced first in the decision protocol.
  virtual LossFn loss(const PlayView& view, int horizon);
  [[nodiscard]] virtual std::unique_ptr<Reality> clone() const = 0;
};

class Sceptic {
 public:
  virtual ~Sceptic() = default;
  virtual void begin_play(const PlayConfig&) {}
  virtual TicketPortfolio move(const PlayView& view, const MoveDomain& domain) = 0;
  [[nodiscard]] virtual std::unique_ptr<Sceptic> clone() const = 0;
};

class DecisionMaker {
 public:
  virtual ~DecisionMaker() = default;
  virtual void begin_play(const PlayConfig&) {}
  virtual int decide(const PlayView& view) = 0;
  [[nodiscard]] virtual std::unique_ptr<DecisionMaker> clone() const = 0;
};

// Players that repeat a recorded play; used by replay() and by tests.

class ScriptedForecaster final : public Forecaster {
 public:
  explicit ScriptedForecaster(std::vector<ProbMeasure> script) : script_(std::move(script)) {}
  ProbMeasure forecast(const PlayView& view, int horizon) override;
  [[nodiscard]] std::unique_ptr<Forecaster> clone() const override;

 private:
  std::vector<ProbMeasure> script_;
};

class ScriptedMergedForecaster final : public MergedForecaster {
 public:
  explicit ScriptedMergedForecaster(std::vector<CylinderMeasure> script) : script_(std::move(script)) {}
  CylinderMeasure forecast(const PlayView& view) override;
  [[nodiscard]] std::unique_ptr<MergedForecaster> clone() const override;

 private:
  std::vector<CylinderMeasure> script_;
};

class ScriptedReality final : public Reality {
 public:
  explicit ScriptedReality(Sequence outcomes, std::vector<LossFn> losses = {})
      : outcomes_(std::move(outcomes)), losses_(std::move(losses)) {}
  Symbol outcome(const PlayView& view) override;
  LossFn loss(const PlayView& view, int horizon) override;
  [[nodiscard]] std::unique_ptr<Reality> clone() const override;

 private:
  Sequence outcomes_;
  std::vector<LossFn> losses_;
};

class ScriptedSceptic final : public Sceptic {
 public:
  explicit ScriptedSceptic(std::vector<TicketPortfolio> script) : script_(std::move(script)) {}
  TicketPortfolio move(const PlayView& view, const MoveDomain& domain) override;
  [[nodiscard]] std::unique_ptr<Sceptic> clone() const override;

 private:
  std::vector<TicketPortfolio> script_;
};

class ScriptedDecisionMaker final : public DecisionMaker {
 public:
  explicit ScriptedDecisionMaker(std::vector<int> script) : script_(std::move(script)) {}
  int decide(const PlayView& view) override;
  [[nodiscard]] std::unique_ptr<DecisionMaker> clone() const override;

 private:
  std::vector<int> script_;
};

class ZeroSceptic final : public Sceptic {
 public:
  TicketPortfolio move(const PlayView& view, const MoveDomain& domain) override;
  [[nodiscard]] std::unique_ptr<Sceptic> clone() const override;
};

/// Runs the joint test protocol inside the merged protocol: Q_n is P_n placed on
/// the cylinder of y_1..y_{n-1}, and Q_{N+1} is the point mass at y.
class MergedEmbedding final : public MergedForecaster {
 public:
  MergedEmbedding(const Forecaster& forecaster, const Reality& reality);
  MergedEmbedding(const MergedEmbedding& other);
  void begin_play(const PlayConfig& config) override;
  CylinderMeasure forecast(const PlayView& view) override;
  [[nodiscard]] std::unique_ptr<MergedForecaster> clone() const override;

 private:
  std::unique_ptr<Forecaster> forecaster_;
  std::unique_ptr<Reality> reality_;
  PlayConfig inner_config_;
  PlayRecord inner_;
};

/// Forecasting protocol: no betting, the ledger stays at K_0 = 1.
PlayTranscript run_forecasting(const PlayConfig& config, Forecaster& forecaster, Reality& reality);

/// Joint test: Sceptic buys tickets on Y^(N-n+1) and resells them at the next
/// step's prices.
PlayTranscript run_joint_test(const PlayConfig& config, Forecaster& forecaster, Sceptic& sceptic,
                              Reality& reality);

/// One-step tickets f'_n on Y against a forecaster that must update by
/// Bayesian conditioning.
PlayTranscript run_bayesian_one_step(const PlayConfig& config, Forecaster& forecaster, Sceptic& sceptic,
                                     Reality& reality);

/// Recomputes a joint-test play in the conditioning-difference protocol:
/// provisional K'_n from the one-step reduction f'_n, corrected at the next
/// step by the bet on P_n - P_{n-1}(.|y_{n-1}).
PlayTranscript conditioning_difference(const PlayTranscript& joint);

/// Plays the joint test and recomputes the same moves in the
/// conditioning-difference protocol.
std::pair<PlayTranscript, PlayTranscript> run_conditioning_variants(const PlayConfig& config,
                                                                    Forecaster& forecaster,
                                                                    Sceptic& sceptic, Reality& reality);

/// f'_n(y) = sum_x f_n(yx) P_n(x | y): the one-step portfolio with the same
/// value as f_n once y_n is known.
std::vector<double> one_step_reduction(const TicketPortfolio& f, const ProbMeasure& p);

PlayTranscript run_merged(const PlayConfig& config, MergedForecaster& forecaster, Sceptic& sceptic);

/// Tickets on Y^(K ∧ (N-n+1)); config.K = N gives the joint test.
PlayTranscript run_k_ahead(const PlayConfig& config, Forecaster& forecaster, Sceptic& sceptic, Reality& reality);

/// K-ahead protocol with loss functions: each step Reality announces lambda_n,
/// Forecaster P_n, Decision Maker d_n, Sceptic f_n, Reality y_n.
PlayTranscript run_decision(const PlayConfig& config, Forecaster& forecaster, Sceptic& sceptic,
                            Reality& reality, DecisionMaker& decision_maker);

/// Tickets of every length 1..N-n+1; short tickets mature and are cashed in
/// (K'_n) before the rest are repriced (K_n).
PlayTranscript run_general_futures(const PlayConfig& config, Forecaster& forecaster, Sceptic& sceptic,
                                   Reality& reality);

/// Adds c to f(x) and subtracts c from f(xy) for each y. Leaves the repriced
/// capital K_n of the general futures protocol unchanged.
TicketPortfolio normalize_O(const TicketPortfolio& f, std::span<const Symbol> x, double c);

/// Applies normalize_O with c = -f(x) to every x in order of increasing
/// length, leaving only tickets of maximal length.
TicketPortfolio sweep_to_final(const TicketPortfolio& f);

/// Radical protocols: positive Q_n on Y^N each step, no observations.
/// Additive: K_{n-1} = K_{n-2} + sum F_{n-1}(Q_n - Q_{n-1}).
/// Multiplicative: K_{n-1} = K_{n-2} sum (Q_n/Q_{n-1}) G_{n-1}, with G_{n-1}
/// summing to one. Capital stays at zero once it reaches zero.
PlayTranscript run_radical(const PlayConfig& config, Forecaster& forecaster, Sceptic& sceptic);

/// F = K G / Q.
TicketPortfolio additive_from_multiplicative(const TicketPortfolio& g, const ProbMeasure& q_prev, double capital);
/// Inverse of additive_from_multiplicative after shifting F by the constant
/// that makes sum G = 1 (constants do not change additive increments).
TicketPortfolio multiplicative_from_additive(const TicketPortfolio& f, const ProbMeasure& q_prev, double capital);

/// Re-runs the recorded moves through the same protocol.
PlayTranscript replay(const PlayTranscript& transcript);

/// Loss_N of Decision Maker and of the Bayes strategy on the same play.
struct DecisionLosses {
  double decision_maker = 0.0;
  double bayes = 0.0;
  int counted_steps = 0;
  [[nodiscard]] double regret_of_bayes() const noexcept { return bayes - decision_maker; }
};

DecisionLosses decision_losses(const PlayTranscript& transcript);

/// First minimizer of the expected loss in the order of D.
int bayes_decision(const LossFn& loss, const ProbMeasure& p);

/// Writes the ledger as CSV rows "step,tag,capital".
std::string ledger_csv(const CapitalLedger& ledger);

}  // namespace diachronic::engine

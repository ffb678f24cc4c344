#pragma once

// Strategy library for Forecaster, Reality, Sceptic and Decision Maker.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "diachronic/engine.hpp"
#include "diachronic/rng.hpp"

namespace diachronic::strategies {

using engine::bayes_decision;
using engine::MoveDomain;
using engine::PlayConfig;
using engine::PlayView;
using engine::TicketPortfolio;
using measures::LossFn;
using measures::ProbMeasure;
using measures::Sequence;
using measures::Symbol;

// ---- sequence models ----

/// A law for the observation sequence, queried through its predictive
/// distributions. Implementations are immutable and shareable.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;
  [[nodiscard]] virtual int alphabet() const = 0;
  /// Law of the next `horizon` observations given the history.
  [[nodiscard]] virtual ProbMeasure predictive(std::span<const Symbol> history, int horizon) const = 0;
};

/// An explicit joint measure on Y^N.
class JointModel final : public SequenceModel {
 public:
  explicit JointModel(ProbMeasure joint) : joint_(std::move(joint)) {}
  [[nodiscard]] int alphabet() const override { return joint_.alphabet(); }
  [[nodiscard]] ProbMeasure predictive(std::span<const Symbol> history, int horizon) const override;
  [[nodiscard]] const ProbMeasure& joint() const noexcept { return joint_; }

 private:
  ProbMeasure joint_;
};

/// Independent draws from a fixed one-step distribution.
class IidModel final : public SequenceModel {
 public:
  explicit IidModel(std::vector<double> marginal, int cached_horizon = 12);
  [[nodiscard]] int alphabet() const override { return static_cast<int>(marginal_.size()); }
  [[nodiscard]] ProbMeasure predictive(std::span<const Symbol> history, int horizon) const override;
  [[nodiscard]] const std::vector<double>& marginal() const noexcept { return marginal_; }

 private:
  std::vector<double> marginal_;
  std::vector<ProbMeasure> products_;  // index = horizon
};

// ---- Forecaster ----

/// Announces the model's predictive law: Bayesian conditioning of one joint law.
class ConditioningForecaster final : public engine::Forecaster {
 public:
  explicit ConditioningForecaster(std::shared_ptr<const SequenceModel> model) : model_(std::move(model)) {}
  ProbMeasure forecast(const PlayView& view, int horizon) override;
  [[nodiscard]] std::unique_ptr<engine::Forecaster> clone() const override;

 private:
  std::shared_ptr<const SequenceModel> model_;
};

/// Mixes an honest model with an alternative one; the weight on the
/// alternative is min(1, rate * (n - 1)) at step n, so the forecaster starts
/// honest and drifts away.
class DriftingForecaster final : public engine::Forecaster {
 public:
  DriftingForecaster(std::shared_ptr<const SequenceModel> honest, std::shared_ptr<const SequenceModel> alternative,
                     double rate);
  ProbMeasure forecast(const PlayView& view, int horizon) override;
  [[nodiscard]] std::unique_ptr<engine::Forecaster> clone() const override;
  [[nodiscard]] double weight_at(int step) const;

 private:
  std::shared_ptr<const SequenceModel> honest_;
  std::shared_ptr<const SequenceModel> alternative_;
  double rate_;
};

// ---- loss schedules ----

/// Produces lambda_n for the decision protocol.
class LossSchedule {
 public:
  virtual ~LossSchedule() = default;
  [[nodiscard]] virtual int decisions() const = 0;
  virtual LossFn loss(const PlayView& view, int horizon, CounterRng& rng) const = 0;
};

/// Fresh uniform [0, 1] table every step.
class RandomTableLoss final : public LossSchedule {
 public:
  explicit RandomTableLoss(int decisions) : decisions_(decisions) {}
  [[nodiscard]] int decisions() const override { return decisions_; }
  LossFn loss(const PlayView& view, int horizon, CounterRng& rng) const override;

 private:
  int decisions_;
};

/// lambda(d, x) = 1{d != x_pos}: predict one coordinate of the window (D = Y).
class IndicatorLoss final : public LossSchedule {
 public:
  IndicatorLoss(int alphabet, int position);
  [[nodiscard]] int decisions() const override { return alphabet_; }
  LossFn loss(const PlayView& view, int horizon, CounterRng& rng) const override;

 private:
  int alphabet_;
  int position_;
  std::vector<LossFn> cache_;  // index = horizon
};

/// Block losses: at step n, lambda_n(d, y_n..y_{n+K-1}) = 1{d != y_m} where
/// m = ceil(n/K) K is the last step of n's block (clamped at N).
class BlockLoss final : public LossSchedule {
 public:
  BlockLoss(int N, int K);
  [[nodiscard]] int decisions() const override { return 2; }
  LossFn loss(const PlayView& view, int horizon, CounterRng& rng) const override;
  /// 1-based step whose outcome scores the decision made at step n.
  [[nodiscard]] int target_step(int n) const;

 private:
  int N_;
  int K_;
  std::map<std::pair<int, int>, LossFn> cache_;  // (horizon, offset of the scored step)
};

// ---- Reality ----

/// Samples y_n from the model's one-step predictive law; the random stream is
/// (seed, config.stream), so each replication is reproducible on its own.
class ModelReality final : public engine::Reality {
 public:
  ModelReality(std::shared_ptr<const SequenceModel> model, std::uint64_t seed,
               std::shared_ptr<const LossSchedule> losses = nullptr);
  void begin_play(const PlayConfig& config) override;
  Symbol outcome(const PlayView& view) override;
  LossFn loss(const PlayView& view, int horizon) override;
  [[nodiscard]] std::unique_ptr<engine::Reality> clone() const override;

 private:
  std::shared_ptr<const SequenceModel> model_;
  std::uint64_t seed_;
  std::shared_ptr<const LossSchedule> losses_;
  CounterRng rng_;
  CounterRng loss_rng_;
};

/// Fair-coin outcomes with block losses; requires 5K <= N.
std::unique_ptr<engine::Reality> adversarial_block_reality(int N, int K, std::uint64_t seed);

// ---- Sceptic ----

/// Stake on one full path x bought at step 1 and held to the end (joint-test domain).
class TicketHoldSceptic final : public engine::Sceptic {
 public:
  TicketHoldSceptic(Sequence path, double stake) : path_(std::move(path)), stake_(stake) {}
  TicketPortfolio move(const PlayView& view, const MoveDomain& domain) override;
  [[nodiscard]] std::unique_ptr<engine::Sceptic> clone() const override;

 private:
  Sequence path_;
  double stake_;
};

/// Bets with values uniform in [-amplitude, amplitude] that depend only on the
/// seed and the visible outcome history, so the strategy is predictable.
class RandomPredictableSceptic final : public engine::Sceptic {
 public:
  RandomPredictableSceptic(std::uint64_t seed, double amplitude) : seed_(seed), amplitude_(amplitude) {}
  TicketPortfolio move(const PlayView& view, const MoveDomain& domain) override;
  [[nodiscard]] std::unique_ptr<engine::Sceptic> clone() const override;

 private:
  std::uint64_t seed_;
  double amplitude_;
};

enum class HoeffdingSide {
  /// Bets that Loss_N(A) - Loss_N is large.
  Upper,
  /// Bets that the regret falls far below its forecast mean.
  Lower,
};

struct HoeffdingParams {
  int K = 1;
  int N = 1;
  double epsilon = 0.1;
  double gamma = 0.8;
  HoeffdingSide side = HoeffdingSide::Upper;
};

/// Sceptic for the decision protocol that reaches 1/epsilon whenever the
/// Bayes strategy's regret reaches 2 sqrt(K N ln(1/epsilon)).
///
/// Windows i = 1..N-K+1 are split into K residue classes mod K; windows of
/// one class do not overlap. Each class starts with wealth 1/K. At the start
/// of window i the class buys tickets h(x) = W exp(kappa D_i(x) - kappa^2/2)
/// on Y^K, where D_i(x) = lambda(d_i^A, x) - lambda(d_i, x) has mean <= 0
/// under P_i, so the cost is at most W by Hoeffding's lemma; the ticket is
/// held for K steps and then cashed. With kappa = C/N the total capital is at
/// least exp(kappa R/K - Q kappa^2/2) >= exp(C^2/(2KN)) = epsilon^-2 when the
/// regret R reaches C. gamma only calibrates the bound chain and is checked
/// but unused.
class HoeffdingSceptic final : public engine::Sceptic {
 public:
  explicit HoeffdingSceptic(HoeffdingParams params);
  void begin_play(const PlayConfig& config) override;
  TicketPortfolio move(const PlayView& view, const MoveDomain& domain) override;
  [[nodiscard]] std::unique_ptr<engine::Sceptic> clone() const override;

  [[nodiscard]] const HoeffdingParams& params() const noexcept { return params_; }
  [[nodiscard]] double threshold() const noexcept { return threshold_; }
  [[nodiscard]] double rate() const noexcept { return kappa_; }
  /// Windows per residue class, floor(N/K).
  [[nodiscard]] int plays_per_class() const noexcept { return params_.N / params_.K; }
  /// Each class's own bookkeeping of its wealth (cash plus settled tickets).
  [[nodiscard]] const std::vector<double>& class_wealth() const noexcept { return wealth_; }

 private:
  struct Window {
    int start;
    int cls;
    std::vector<double> ticket;  // on Y^K
  };

  void settle_finished(const PlayView& view);

  HoeffdingParams params_;
  double threshold_;
  double kappa_;
  int alphabet_ = 2;
  std::vector<double> wealth_;
  std::vector<Window> open_;
};

// ---- Decision Maker ----

class BayesDecisionMaker final : public engine::DecisionMaker {
 public:
  int decide(const PlayView& view) override;
  [[nodiscard]] std::unique_ptr<engine::DecisionMaker> clone() const override;
};

class ConstantDecisionMaker final : public engine::DecisionMaker {
 public:
  explicit ConstantDecisionMaker(int decision) : decision_(decision) {}
  int decide(const PlayView& view) override;
  [[nodiscard]] std::unique_ptr<engine::DecisionMaker> clone() const override;

 private:
  int decision_;
};

/// Plays |D| - 1 - d^A: the mirror image of the Bayes decision.
class ComplementDecisionMaker final : public engine::DecisionMaker {
 public:
  int decide(const PlayView& view) override;
  [[nodiscard]] std::unique_ptr<engine::DecisionMaker> clone() const override;
};

/// Bayes decision under a model the Decision Maker trusts instead of the
/// announced forecast (e.g. the law Reality actually samples from).
class InformedBayesDecisionMaker final : public engine::DecisionMaker {
 public:
  explicit InformedBayesDecisionMaker(std::shared_ptr<const SequenceModel> model) : model_(std::move(model)) {}
  int decide(const PlayView& view) override;
  [[nodiscard]] std::unique_ptr<engine::DecisionMaker> clone() const override;

 private:
  std::shared_ptr<const SequenceModel> model_;
};

/// exp(kappa X - kappa^2/2) for a two-point X with mean <= 0 and |X| <= 1:
/// returns its expectation, which Hoeffding's lemma bounds by 1.
double exponential_factor_mean(double x_low, double x_high, double p_high, double kappa);

}  // namespace diachronic::strategies

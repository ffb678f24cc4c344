#include "diachronic/strategies.hpp"

#include <algorithm>
#include <cmath>

#include "diachronic/error.hpp"

namespace diachronic::strategies {

namespace si = measures::seq_index;

namespace {

constexpr int kMaxCachedProductSize = 1 << 16;

LossFn indicator_table(int alphabet, int horizon, int position) {
  const std::size_t outcomes = si::count(alphabet, horizon);
  std::vector<double> table(static_cast<std::size_t>(alphabet) * outcomes);
  for (int d = 0; d < alphabet; ++d)
    for (std::size_t code = 0; code < outcomes; ++code)
      table[static_cast<std::size_t>(d) * outcomes + code] =
          si::symbol_at(code, position, horizon, alphabet) == d ? 0.0 : 1.0;
  return LossFn(alphabet, alphabet, horizon, std::move(table));
}

Symbol sample(const ProbMeasure& one_step, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const auto w = one_step.weights();
  for (std::size_t y = 0; y + 1 < w.size(); ++y) {
    acc += w[y];
    if (u < acc) return static_cast<Symbol>(y);
  }
  return static_cast<Symbol>(w.size() - 1);
}

}  // namespace

// ---- models ----

ProbMeasure JointModel::predictive(std::span<const Symbol> history, int horizon) const {
  const int remaining = joint_.horizon() - static_cast<int>(history.size());
  require(horizon <= remaining, "predictive horizon exceeds the model's remaining horizon");
  const ProbMeasure rest = history.empty() ? joint_ : joint_.condition_on_prefix(history);
  return rest.marginalize(horizon);
}

IidModel::IidModel(std::vector<double> marginal, int cached_horizon) : marginal_(std::move(marginal)) {
  require(marginal_.size() >= 2, "alphabet must have at least two symbols");
  const ProbMeasure check(static_cast<int>(marginal_.size()), 1, marginal_);
  marginal_.assign(check.weights().begin(), check.weights().end());
  for (int h = 0; h <= cached_horizon; ++h) {
    if (si::count(alphabet(), h) > static_cast<std::size_t>(kMaxCachedProductSize)) break;
    products_.push_back(ProbMeasure::product(marginal_, h));
  }
}

ProbMeasure IidModel::predictive(std::span<const Symbol>, int horizon) const {
  if (horizon >= 0 && static_cast<std::size_t>(horizon) < products_.size())
    return products_[static_cast<std::size_t>(horizon)];
  return ProbMeasure::product(marginal_, horizon);
}

// ---- forecasters ----

ProbMeasure ConditioningForecaster::forecast(const PlayView& view, int horizon) {
  return model_->predictive(view.outcomes(), horizon);
}

std::unique_ptr<engine::Forecaster> ConditioningForecaster::clone() const {
  return std::make_unique<ConditioningForecaster>(*this);
}

DriftingForecaster::DriftingForecaster(std::shared_ptr<const SequenceModel> honest,
                                       std::shared_ptr<const SequenceModel> alternative, double rate)
    : honest_(std::move(honest)), alternative_(std::move(alternative)), rate_(rate) {
  require(honest_ && alternative_, "drifting forecaster needs two models");
  require(honest_->alphabet() == alternative_->alphabet(), "models must share the alphabet");
  require(rate >= 0.0 && std::isfinite(rate), "drift rate must be nonnegative");
}

double DriftingForecaster::weight_at(int step) const { return std::min(1.0, rate_ * (step - 1)); }

ProbMeasure DriftingForecaster::forecast(const PlayView& view, int horizon) {
  const double w = weight_at(view.step);
  if (w <= 0.0) return honest_->predictive(view.outcomes(), horizon);
  if (w >= 1.0) return alternative_->predictive(view.outcomes(), horizon);
  const ProbMeasure a = honest_->predictive(view.outcomes(), horizon);
  const ProbMeasure b = alternative_->predictive(view.outcomes(), horizon);
  std::vector<double> mix(a.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = (1.0 - w) * a.weight(i) + w * b.weight(i);
  return ProbMeasure::from_unnormalized(a.alphabet(), horizon, std::move(mix));
}

std::unique_ptr<engine::Forecaster> DriftingForecaster::clone() const {
  return std::make_unique<DriftingForecaster>(*this);
}

// ---- losses ----

LossFn RandomTableLoss::loss(const PlayView& view, int horizon, CounterRng& rng) const {
  std::vector<double> table(static_cast<std::size_t>(decisions_) * si::count(view.config.alphabet, horizon));
  for (double& v : table) v = rng.uniform();
  return LossFn(decisions_, view.config.alphabet, horizon, std::move(table));
}

IndicatorLoss::IndicatorLoss(int alphabet, int position) : alphabet_(alphabet), position_(position) {
  require(alphabet >= 2, "alphabet must have at least two symbols");
  require(position >= 0, "loss position must be nonnegative");
  for (int h = 0; h <= 12 && si::count(alphabet, h) <= static_cast<std::size_t>(kMaxCachedProductSize); ++h)
    cache_.push_back(h == 0 ? LossFn(alphabet, alphabet, 0, std::vector<double>(static_cast<std::size_t>(alphabet), 1.0))
                            : indicator_table(alphabet, h, std::min(position, h - 1)));
}

LossFn IndicatorLoss::loss(const PlayView&, int horizon, CounterRng&) const {
  require(horizon >= 1, "loss horizon must be positive");
  if (static_cast<std::size_t>(horizon) < cache_.size()) return cache_[static_cast<std::size_t>(horizon)];
  return indicator_table(alphabet_, horizon, std::min(position_, horizon - 1));
}

BlockLoss::BlockLoss(int N, int K) : N_(N), K_(K) {
  require(K >= 1 && K <= N, "block loss needs 1 <= K <= N");
  for (int n = 1; n <= N; ++n) {
    const int h = std::min(K, N - n + 1);
    const int offset = target_step(n) - n;
    if (!cache_.contains({h, offset})) cache_.emplace(std::pair{h, offset}, indicator_table(2, h, offset));
  }
}

int BlockLoss::target_step(int n) const { return std::min((n + K_ - 1) / K_ * K_, N_); }

LossFn BlockLoss::loss(const PlayView& view, int horizon, CounterRng&) const {
  const int n = view.step;
  require(horizon == std::min(K_, N_ - n + 1), "block loss queried with an unexpected horizon");
  require(view.config.alphabet == 2, "block losses are defined for binary outcomes");
  return cache_.at({horizon, target_step(n) - n});
}

// ---- reality ----

ModelReality::ModelReality(std::shared_ptr<const SequenceModel> model, std::uint64_t seed,
                           std::shared_ptr<const LossSchedule> losses)
    : model_(std::move(model)), seed_(seed), losses_(std::move(losses)), rng_(seed), loss_rng_(seed, 1) {
  require(model_ != nullptr, "reality needs a model");
}

void ModelReality::begin_play(const PlayConfig& config) {
  require(config.alphabet == model_->alphabet(), "reality model alphabet does not match the protocol");
  const CounterRng base(seed_, config.stream);
  rng_ = base.split(0);
  loss_rng_ = base.split(1);
}

Symbol ModelReality::outcome(const PlayView& view) { return sample(model_->predictive(view.outcomes(), 1), rng_); }

LossFn ModelReality::loss(const PlayView& view, int horizon) {
  if (!losses_) return engine::Reality::loss(view, horizon);
  return losses_->loss(view, horizon, loss_rng_);
}

std::unique_ptr<engine::Reality> ModelReality::clone() const { return std::make_unique<ModelReality>(*this); }

std::unique_ptr<engine::Reality> adversarial_block_reality(int N, int K, std::uint64_t seed) {
  require(K >= 1 && 5 * K <= N, "block construction needs K <= N/5");
  return std::make_unique<ModelReality>(std::make_shared<IidModel>(std::vector<double>{0.5, 0.5}), seed,
                                        std::make_shared<BlockLoss>(N, K));
}

// ---- sceptics ----

TicketPortfolio TicketHoldSceptic::move(const PlayView& view, const MoveDomain& domain) {
  const int n = view.step;
  const int N = view.config.N;
  require(static_cast<int>(path_.size()) == N, "held path must have length N");
  require(domain.max_length == N - n + 1, "ticket holding needs the joint-test move domain");
  auto f = TicketPortfolio::zero(view.config.alphabet, domain.min_length, domain.max_length);
  if (!std::equal(view.record.outcomes.begin(), view.record.outcomes.end(), path_.begin())) return f;
  f.set(std::span<const Symbol>(path_).subspan(static_cast<std::size_t>(n) - 1), stake_);
  return f;
}

std::unique_ptr<engine::Sceptic> TicketHoldSceptic::clone() const { return std::make_unique<TicketHoldSceptic>(*this); }

TicketPortfolio RandomPredictableSceptic::move(const PlayView& view, const MoveDomain& domain) {
  std::uint64_t key = static_cast<std::uint64_t>(view.step);
  for (Symbol y : view.record.outcomes) key = key * 1000003ULL + static_cast<std::uint64_t>(y) + 1;
  CounterRng rng(seed_, key);
  auto f = TicketPortfolio::zero(view.config.alphabet, domain.min_length, domain.max_length);
  for (int len = domain.min_length; len <= domain.max_length; ++len)
    for (double& v : f.mutable_level(len)) v = rng.uniform(-amplitude_, amplitude_);
  return f;
}

std::unique_ptr<engine::Sceptic> RandomPredictableSceptic::clone() const {
  return std::make_unique<RandomPredictableSceptic>(*this);
}

HoeffdingSceptic::HoeffdingSceptic(HoeffdingParams params) : params_(params) {
  require(params.K >= 1 && params.K <= params.N, "Hoeffding sceptic needs 1 <= K <= N");
  require(params.epsilon > 0.0 && params.epsilon < 0.32, "epsilon must lie in (0, 0.32)");
  require(params.gamma > 0.0 && params.gamma < 1.0, "gamma must lie in (0, 1)");
  threshold_ = 2.0 * std::sqrt(static_cast<double>(params.K) * params.N * std::log(1.0 / params.epsilon));
  kappa_ = threshold_ / params.N;
}

void HoeffdingSceptic::begin_play(const PlayConfig& config) {
  require(config.protocol == engine::ProtocolId::Decision, "Hoeffding sceptic plays the decision protocol");
  require(config.N == params_.N && config.horizon() == params_.K, "Hoeffding sceptic built for a different N or K");
  alphabet_ = config.alphabet;
  wealth_.assign(static_cast<std::size_t>(params_.K), 1.0 / params_.K);
  open_.clear();
}

void HoeffdingSceptic::settle_finished(const PlayView& view) {
  const int n = view.step;
  const int K = params_.K;
  auto it = open_.begin();
  while (it != open_.end()) {
    if (it->start + K - 1 < n) {
      const auto window = std::span<const Symbol>(view.record.outcomes)
                              .subspan(static_cast<std::size_t>(it->start) - 1, static_cast<std::size_t>(K));
      wealth_[static_cast<std::size_t>(it->cls)] += it->ticket[si::encode(window, alphabet_)];
      it = open_.erase(it);
    } else {
      ++it;
    }
  }
}

TicketPortfolio HoeffdingSceptic::move(const PlayView& view, const MoveDomain& domain) {
  const int n = view.step;
  const int K = params_.K;
  settle_finished(view);

  if (n <= params_.N - K + 1) {
    const LossFn& loss = view.record.losses.at(static_cast<std::size_t>(n) - 1);
    const ProbMeasure& p = view.record.forecasts.at(static_cast<std::size_t>(n) - 1);
    const int d = view.record.decisions.at(static_cast<std::size_t>(n) - 1);
    const int d_bayes = bayes_decision(loss, p);
    const auto a = loss.row(d_bayes);
    const auto b = loss.row(d);
    std::vector<double> D(a.size());
    for (std::size_t i = 0; i < D.size(); ++i) D[i] = a[i] - b[i];
    if (params_.side == HoeffdingSide::Lower) {
      double mean = 0.0;
      for (std::size_t i = 0; i < D.size(); ++i) mean += D[i] * p.weight(i);
      for (double& v : D) v = mean - v;
    }
    const int cls = (n - 1) % K;
    const double W = wealth_[static_cast<std::size_t>(cls)];
    Window window{n, cls, std::vector<double>(D.size())};
    double cost = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i) {
      window.ticket[i] = W * std::exp(kappa_ * D[i] - 0.5 * kappa_ * kappa_);
      cost += window.ticket[i] * p.weight(i);
    }
    wealth_[static_cast<std::size_t>(cls)] -= cost;
    open_.push_back(std::move(window));
  }

  auto f = TicketPortfolio::zero(alphabet_, domain.min_length, domain.max_length);
  if (open_.empty()) return f;
  const int h = domain.max_length;
  auto out = f.mutable_level(h);
  for (const auto& w : open_) {
    const int seen = n - w.start;
    const int remaining = K - seen;
    const std::size_t prefix = si::encode(
        std::span<const Symbol>(view.record.outcomes).subspan(static_cast<std::size_t>(w.start) - 1,
                                                              static_cast<std::size_t>(seen)),
        alphabet_);
    const std::size_t block = si::count(alphabet_, remaining);
    const std::size_t spread = si::count(alphabet_, h - remaining);
    for (std::size_t x = 0; x < block; ++x) {
      const double v = w.ticket[prefix * block + x];
      for (std::size_t z = 0; z < spread; ++z) out[x * spread + z] += v;
    }
  }
  return f;
}

std::unique_ptr<engine::Sceptic> HoeffdingSceptic::clone() const { return std::make_unique<HoeffdingSceptic>(*this); }

double exponential_factor_mean(double x_low, double x_high, double p_high, double kappa) {
  const double c = -0.5 * kappa * kappa;
  return (1.0 - p_high) * std::exp(kappa * x_low + c) + p_high * std::exp(kappa * x_high + c);
}

// ---- decision makers ----

int BayesDecisionMaker::decide(const PlayView& view) {
  return bayes_decision(view.record.losses.back(), view.record.forecasts.back());
}
std::unique_ptr<engine::DecisionMaker> BayesDecisionMaker::clone() const {
  return std::make_unique<BayesDecisionMaker>();
}

int ConstantDecisionMaker::decide(const PlayView& view) {
  require(decision_ >= 0 && decision_ < view.config.decisions, "constant decision outside D");
  return decision_;
}
std::unique_ptr<engine::DecisionMaker> ConstantDecisionMaker::clone() const {
  return std::make_unique<ConstantDecisionMaker>(*this);
}

int ComplementDecisionMaker::decide(const PlayView& view) {
  return view.config.decisions - 1 - bayes_decision(view.record.losses.back(), view.record.forecasts.back());
}
std::unique_ptr<engine::DecisionMaker> ComplementDecisionMaker::clone() const {
  return std::make_unique<ComplementDecisionMaker>();
}

int InformedBayesDecisionMaker::decide(const PlayView& view) {
  const LossFn& loss = view.record.losses.back();
  return bayes_decision(loss, model_->predictive(view.outcomes(), loss.horizon()));
}
std::unique_ptr<engine::DecisionMaker> InformedBayesDecisionMaker::clone() const {
  return std::make_unique<InformedBayesDecisionMaker>(*this);
}

}  // namespace diachronic::strategies

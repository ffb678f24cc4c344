#include "diachronic/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "diachronic/error.hpp"

namespace diachronic::engine {

namespace si = measures::seq_index;

namespace {

constexpr std::pair<ProtocolId, std::string_view> kProtocolNames[] = {
    {ProtocolId::Forecasting, "forecasting"},
    {ProtocolId::JointTest, "joint-test"},
    {ProtocolId::BayesianOneStep, "bayesian-one-step"},
    {ProtocolId::ConditioningDifference, "conditioning-difference"},
    {ProtocolId::Merged, "merged"},
    {ProtocolId::KAhead, "k-ahead"},
    {ProtocolId::Decision, "decision"},
    {ProtocolId::GeneralFutures, "general-futures"},
    {ProtocolId::RadicalAdditive, "radical-additive"},
    {ProtocolId::RadicalMultiplicative, "radical-multiplicative"},
};

// Posts capital updates to the ledger and applies the bankruptcy rule.
class Account {
 public:
  Account(const PlayConfig& config, PlayTranscript& transcript) : config_(config), transcript_(transcript) {
    transcript_.ledger.record(0, false, 1.0);
  }

  [[nodiscard]] double value() const noexcept { return value_; }

  // Returns false when the play has to stop.
  bool post(int step, bool provisional, double v) {
    if (!std::isfinite(v)) throw ProtocolViolation("capital update is not finite at step " + std::to_string(step));
    if (config_.enforce_nonnegativity) {
      if (v < -kBankruptcyTolerance) {
        transcript_.ledger.record(step, provisional, 0.0);
        value_ = 0.0;
        transcript_.status = PlayStatus::ScepticBankrupt;
        return false;
      }
      if (v < 0.0) v = 0.0;
    }
    transcript_.ledger.record(step, provisional, v);
    value_ = v;
    return true;
  }

  // Entries that are bookkeeping rather than capital Sceptic can lose.
  void post_unchecked(int step, bool provisional, double v) {
    transcript_.ledger.record(step, provisional, v);
    value_ = v;
  }

 private:
  const PlayConfig& config_;
  PlayTranscript& transcript_;
  double value_ = 1.0;
};

ProbMeasure accept_forecast(const ProbMeasure& p, const PlayConfig& config, int horizon, int step) {
  if (p.alphabet() != config.alphabet)
    throw ProtocolViolation("forecast alphabet does not match the protocol at step " + std::to_string(step));
  if (p.horizon() < horizon)
    throw ProtocolViolation("forecast horizon " + std::to_string(p.horizon()) + " shorter than required " +
                            std::to_string(horizon) + " at step " + std::to_string(step));
  return p.horizon() == horizon ? p : p.marginalize(horizon);
}

void check_move(const TicketPortfolio& f, const PlayConfig& config, const MoveDomain& domain, int step) {
  if (f.alphabet() != config.alphabet || f.min_length() != domain.min_length || f.max_length() != domain.max_length)
    throw ProtocolViolation("Sceptic's move at step " + std::to_string(step) + " is not on Y^(" +
                            std::to_string(domain.min_length) + ":" + std::to_string(domain.max_length) + ")");
  for (int len = domain.min_length; len <= domain.max_length; ++len)
    for (double v : f.level(len))
      if (!std::isfinite(v)) throw ProtocolViolation("Sceptic's move has a non-finite value");
}

Symbol check_outcome(Symbol y, const PlayConfig& config, int step) {
  if (y < 0 || y >= config.alphabet)
    throw ProtocolViolation("Reality's outcome out of range at step " + std::to_string(step));
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

// sum over x of f(y x) w(x) where f has length |x| + 1.
double dot_after(std::span<const double> f_level, Symbol y, std::span<const double> w) {
  return dot(f_level.subspan(static_cast<std::size_t>(y) * w.size(), w.size()), w);
}

// Marginals of a measure on Y^h at every length 0..h; index = length.
std::vector<std::vector<double>> all_marginals(const ProbMeasure& p) {
  const int h = p.horizon();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(h) + 1);
  out[static_cast<std::size_t>(h)].assign(p.weights().begin(), p.weights().end());
  const auto a = static_cast<std::size_t>(p.alphabet());
  for (int len = h - 1; len >= 0; --len) {
    const auto& next = out[static_cast<std::size_t>(len) + 1];
    auto& cur = out[static_cast<std::size_t>(len)];
    cur.assign(next.size() / a, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) cur[i / a] += next[i];
  }
  return out;
}

void validate_common(const PlayConfig& config) {
  require(config.N >= 1, "N must be positive");
  require(config.alphabet >= 2, "alphabet must have at least two symbols");
}

// Shared loop of the joint-test, K-ahead and decision protocols.
PlayTranscript play_windowed(const PlayConfig& config, Forecaster& forecaster, Sceptic& sceptic, Reality& reality,
                             DecisionMaker* decision_maker) {
  validate_common(config);
  const int N = config.N;
  const int K = config.horizon();
  require(K >= 1 && K <= N, "prediction horizon must satisfy 1 <= K <= N");
  if (decision_maker) require(config.decisions >= 1, "decision space must be nonempty");

  PlayTranscript t{config, {}, {}, PlayStatus::Completed};
  PlayRecord& rec = t.record;
  Account account(t.config, t);
  forecaster.begin_play(t.config);
  sceptic.begin_play(t.config);
  reality.begin_play(t.config);
  if (decision_maker) decision_maker->begin_play(t.config);

  double prev_cost = 0.0;
  for (int n = 1; n <= N; ++n) {
    const int h = std::min(K, N - n + 1);
    if (decision_maker) {
      LossFn loss = reality.loss(PlayView{t.config, rec, n, account.value()}, h);
      if (loss.horizon() != h || loss.alphabet() != config.alphabet || loss.decisions() != config.decisions)
        throw ProtocolViolation("loss function at step " + std::to_string(n) + " has the wrong shape");
      rec.losses.push_back(std::move(loss));
    }
    rec.forecasts.push_back(
        accept_forecast(forecaster.forecast(PlayView{t.config, rec, n, account.value()}, h), config, h, n));
    const ProbMeasure& p = rec.forecasts.back();

    if (n > 1) {
      const TicketPortfolio& f = rec.sceptic_moves.back();
      double gain = 0.0;
      if (!f.is_zero()) {
        const int len = f.max_length();
        const ProbMeasure next = len - 1 == h ? p : p.marginalize(len - 1);
        gain = dot_after(f.level(len), rec.outcomes.back(), next.weights());
      }
      if (!account.post(n - 1, false, account.value() + gain - prev_cost)) return t;
    }

    if (decision_maker) {
      const int d = decision_maker->decide(PlayView{t.config, rec, n, account.value()});
      if (d < 0 || d >= config.decisions)
        throw ProtocolViolation("decision out of range at step " + std::to_string(n));
      rec.decisions.push_back(d);
    }

    const MoveDomain domain{h, h};
    TicketPortfolio f = sceptic.move(PlayView{t.config, rec, n, account.value()}, domain);
    check_move(f, config, domain, n);
    prev_cost = f.is_zero() ? 0.0 : dot(f.level(h), p.weights());
    rec.sceptic_moves.push_back(std::move(f));

    rec.outcomes.push_back(check_outcome(reality.outcome(PlayView{t.config, rec, n, account.value()}), config, n));
  }

  const TicketPortfolio& last = rec.sceptic_moves.back();
  const double payoff = last.is_zero() ? 0.0 : last.level(1)[static_cast<std::size_t>(rec.outcomes.back())];
  account.post(N, false, account.value() + payoff - prev_cost);
  return t;
}

template <typename T>
const T& scripted_at(const std::vector<T>& script, std::size_t index, const char* what) {
  if (index >= script.size()) throw InvalidState(std::string("script exhausted: ") + what);
  return script[index];
}

}  // namespace

std::string_view to_string(ProtocolId id) {
  for (const auto& [k, name] : kProtocolNames)
    if (k == id) return name;
  return "unknown";
}

ProtocolId protocol_from_string(std::string_view name) {
  for (const auto& [k, n] : kProtocolNames)
    if (n == name) return k;
  throw InvalidArgument("unknown protocol: " + std::string(name));
}

std::string_view to_string(PlayStatus status) {
  return status == PlayStatus::Completed ? "completed" : "sceptic-bankrupt";
}

// ---- TicketPortfolio ----

TicketPortfolio TicketPortfolio::zero(int alphabet, int min_length, int max_length) {
  require(alphabet >= 2, "alphabet must have at least two symbols");
  require(min_length >= 0 && min_length <= max_length, "invalid ticket length range");
  (void)si::count(alphabet, max_length);
  TicketPortfolio f;
  f.alphabet_ = alphabet;
  f.min_length_ = min_length;
  f.max_length_ = max_length;
  return f;
}

TicketPortfolio::TicketPortfolio(int alphabet, int length, std::vector<double> values)
    : alphabet_(alphabet), min_length_(length), max_length_(length), values_(std::move(values)) {
  require(alphabet >= 2, "alphabet must have at least two symbols");
  require(length >= 0, "ticket length must be nonnegative");
  require(values_.size() == si::count(alphabet, length), "portfolio values must cover Y^length");
}

bool TicketPortfolio::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

std::size_t TicketPortfolio::offset(int length) const {
  require(length >= min_length_ && length <= max_length_, "ticket length outside the portfolio's domain");
  std::size_t off = 0;
  for (int len = min_length_; len < length; ++len) off += si::count(alphabet_, len);
  return off;
}

void TicketPortfolio::materialize() {
  if (!values_.empty()) return;
  std::size_t total = 0;
  for (int len = min_length_; len <= max_length_; ++len) total += si::count(alphabet_, len);
  values_.assign(total, 0.0);
}

double TicketPortfolio::value(int length, std::size_t code) const {
  const std::size_t off = offset(length);
  require(code < si::count(alphabet_, length), "ticket code out of range");
  return values_.empty() ? 0.0 : values_[off + code];
}

double TicketPortfolio::value(std::span<const Symbol> x) const {
  return value(static_cast<int>(x.size()), si::encode(x, alphabet_));
}

void TicketPortfolio::set(int length, std::size_t code, double v) {
  const std::size_t off = offset(length);
  require(code < si::count(alphabet_, length), "ticket code out of range");
  materialize();
  values_[off + code] = v;
}

void TicketPortfolio::set(std::span<const Symbol> x, double v) {
  set(static_cast<int>(x.size()), si::encode(x, alphabet_), v);
}

void TicketPortfolio::add(int length, std::size_t code, double v) {
  const std::size_t off = offset(length);
  require(code < si::count(alphabet_, length), "ticket code out of range");
  materialize();
  values_[off + code] += v;
}

std::span<const double> TicketPortfolio::level(int length) const {
  const std::size_t off = offset(length);
  if (values_.empty()) return {};
  return std::span<const double>(values_).subspan(off, si::count(alphabet_, length));
}

std::span<double> TicketPortfolio::mutable_level(int length) {
  const std::size_t off = offset(length);
  materialize();
  return std::span<double>(values_).subspan(off, si::count(alphabet_, length));
}

bool operator==(const TicketPortfolio& a, const TicketPortfolio& b) {
  if (a.alphabet_ != b.alphabet_ || a.min_length_ != b.min_length_ || a.max_length_ != b.max_length_) return false;
  if (a.values_.empty() || b.values_.empty()) return a.is_zero() && b.is_zero();
  return a.values_ == b.values_;
}

// ---- CapitalLedger ----

std::vector<double> CapitalLedger::trajectory() const {
  std::vector<double> out;
  for (const auto& e : entries_)
    if (!e.provisional) out.push_back(e.value);
  return out;
}

double CapitalLedger::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) m = std::min(m, e.value);
  return m;
}

double CapitalLedger::max_value() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) m = std::max(m, e.value);
  return m;
}

bool operator==(const CapitalLedger& a, const CapitalLedger& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.step != y.step || x.provisional != y.provisional || x.value != y.value) return false;
  }
  return true;
}

std::string ledger_tag(const LedgerEntry& entry) {
  return (entry.provisional ? "K'_" : "K_") + std::to_string(entry.step);
}

std::string ledger_csv(const CapitalLedger& ledger) {
  std::ostringstream out;
  out << "step,tag,capital\n";
  char buf[64];
  for (const auto& e : ledger.entries()) {
    std::snprintf(buf, sizeof buf, "%.17g", e.value);
    out << e.step << ',' << ledger_tag(e) << ',' << buf << '\n';
  }
  return out.str();
}

// ---- players ----

LossFn Reality::loss(const PlayView&, int) {
  throw InvalidState("this Reality strategy does not announce loss functions");
}

ProbMeasure ScriptedForecaster::forecast(const PlayView& view, int) {
  return scripted_at(script_, view.record.forecasts.size(), "forecasts");
}
std::unique_ptr<Forecaster> ScriptedForecaster::clone() const { return std::make_unique<ScriptedForecaster>(*this); }

CylinderMeasure ScriptedMergedForecaster::forecast(const PlayView& view) {
  return scripted_at(script_, view.record.merged_forecasts.size(), "merged forecasts");
}
std::unique_ptr<MergedForecaster> ScriptedMergedForecaster::clone() const {
  return std::make_unique<ScriptedMergedForecaster>(*this);
}

Symbol ScriptedReality::outcome(const PlayView& view) {
  return scripted_at(outcomes_, view.record.outcomes.size(), "outcomes");
}
LossFn ScriptedReality::loss(const PlayView& view, int) {
  return scripted_at(losses_, view.record.losses.size(), "losses");
}
std::unique_ptr<Reality> ScriptedReality::clone() const { return std::make_unique<ScriptedReality>(*this); }

TicketPortfolio ScriptedSceptic::move(const PlayView& view, const MoveDomain&) {
  return scripted_at(script_, view.record.sceptic_moves.size(), "sceptic moves");
}
std::unique_ptr<Sceptic> ScriptedSceptic::clone() const { return std::make_unique<ScriptedSceptic>(*this); }

int ScriptedDecisionMaker::decide(const PlayView& view) {
  return scripted_at(script_, view.record.decisions.size(), "decisions");
}
std::unique_ptr<DecisionMaker> ScriptedDecisionMaker::clone() const {
  return std::make_unique<ScriptedDecisionMaker>(*this);
}

TicketPortfolio ZeroSceptic::move(const PlayView& view, const MoveDomain& domain) {
  return TicketPortfolio::zero(view.config.alphabet, domain.min_length, domain.max_length);
}
std::unique_ptr<Sceptic> ZeroSceptic::clone() const { return std::make_unique<ZeroSceptic>(); }

MergedEmbedding::MergedEmbedding(const Forecaster& forecaster, const Reality& reality)
    : forecaster_(forecaster.clone()), reality_(reality.clone()) {}

MergedEmbedding::MergedEmbedding(const MergedEmbedding& other)
    : forecaster_(other.forecaster_->clone()),
      reality_(other.reality_->clone()),
      inner_config_(other.inner_config_),
      inner_(other.inner_) {}

void MergedEmbedding::begin_play(const PlayConfig& config) {
  inner_config_ = config;
  inner_config_.protocol = ProtocolId::JointTest;
  inner_config_.K = config.N;
  inner_ = PlayRecord{};
  forecaster_->begin_play(inner_config_);
  reality_->begin_play(inner_config_);
}

CylinderMeasure MergedEmbedding::forecast(const PlayView& view) {
  const int n = view.step;
  const int N = inner_config_.N;
  if (n >= 2) {
    const Symbol y = reality_->outcome(PlayView{inner_config_, inner_, n - 1, view.capital});
    inner_.outcomes.push_back(check_outcome(y, inner_config_, n - 1));
  }
  if (n > N) return CylinderMeasure::point_mass(inner_config_.alphabet, inner_.outcomes);
  const int h = N - n + 1;
  inner_.forecasts.push_back(accept_forecast(
      forecaster_->forecast(PlayView{inner_config_, inner_, n, view.capital}, h), inner_config_, h, n));
  return CylinderMeasure::extend_to_full(inner_.forecasts.back(), inner_.outcomes, N);
}

std::unique_ptr<MergedForecaster> MergedEmbedding::clone() const { return std::make_unique<MergedEmbedding>(*this); }

// ---- protocols ----

PlayTranscript run_forecasting(const PlayConfig& config_in, Forecaster& forecaster, Reality& reality) {
  PlayConfig config = config_in;
  config.protocol = ProtocolId::Forecasting;
  validate_common(config);
  PlayTranscript t{config, {}, {}, PlayStatus::Completed};
  t.ledger.record(0, false, 1.0);
  forecaster.begin_play(t.config);
  reality.begin_play(t.config);
  for (int n = 1; n <= config.N; ++n) {
    const int h = config.N - n + 1;
    t.record.forecasts.push_back(
        accept_forecast(forecaster.forecast(PlayView{t.config, t.record, n, 1.0}, h), config, h, n));
    t.record.outcomes.push_back(check_outcome(reality.outcome(PlayView{t.config, t.record, n, 1.0}), config, n));
  }
  return t;
}

PlayTranscript run_joint_test(const PlayConfig& config_in, Forecaster& forecaster, Sceptic& sceptic,
                              Reality& reality) {
  PlayConfig config = config_in;
  config.protocol = ProtocolId::JointTest;
  config.K = config.N;
  return play_windowed(config, forecaster, sceptic, reality, nullptr);
}

PlayTranscript run_k_ahead(const PlayConfig& config_in, Forecaster& forecaster, Sceptic& sceptic, Reality& reality) {
  PlayConfig config = config_in;
  config.protocol = ProtocolId::KAhead;
  if (config.K == 0) config.K = config.N;
  return play_windowed(config, forecaster, sceptic, reality, nullptr);
}

PlayTranscript run_decision(const PlayConfig& config_in, Forecaster& forecaster, Sceptic& sceptic, Reality& reality,
                            DecisionMaker& decision_maker) {
  PlayConfig config = config_in;
  config.protocol = ProtocolId::Decision;
  if (config.K == 0) config.K = config.N;
  return play_windowed(config, forecaster, sceptic, reality, &decision_maker);
}

PlayTranscript run_bayesian_one_step(const PlayConfig& config_in, Forecaster& forecaster, Sceptic& sceptic,
                                     Reality& reality) {
  PlayConfig config = config_in;
  config.protocol = ProtocolId::BayesianOneStep;
  config.K = config.N;
  validate_common(config);
  const int N = config.N;
  PlayTranscript t{config, {}, {}, PlayStatus::Completed};
  PlayRecord& rec = t.record;
  Account account(t.config, t);
  forecaster.begin_play(t.config);
  sceptic.begin_play(t.config);
  reality.begin_play(t.config);

  for (int n = 1; n <= N; ++n) {
    const int h = N - n + 1;
    ProbMeasure p = accept_forecast(forecaster.forecast(PlayView{t.config, rec, n, account.value()}, h), config, h, n);
    if (n > 1) {
      const ProbMeasure expected = rec.forecasts.back().condition_on(rec.outcomes.back());
      for (std::size_t i = 0; i < p.size(); ++i)
        if (std::abs(p.weight(i) - expected.weight(i)) > kConditioningTolerance)
          throw ProtocolViolation("forecast at step " + std::to_string(n) + " is not the Bayesian update");
    }
    rec.forecasts.push_back(std::move(p));
    const ProbMeasure first = rec.forecasts.back().marginalize(1);

    const MoveDomain domain{1, 1};
    TicketPortfolio f = sceptic.move(PlayView{t.config, rec, n, account.value()}, domain);
    check_move(f, config, domain, n);
    const double cost = f.is_zero() ? 0.0 : dot(f.level(1), first.weights());
    rec.sceptic_moves.push_back(std::move(f));

    const Symbol y = check_outcome(reality.outcome(PlayView{t.config, rec, n, account.value()}), config, n);
    rec.outcomes.push_back(y);
    const double payoff = rec.sceptic_moves.back().value(1, static_cast<std::size_t>(y));
    if (!account.post(n, false, account.value() + payoff - cost)) return t;
  }
  return t;
}

std::vector<double> one_step_reduction(const TicketPortfolio& f, const ProbMeasure& p) {
  require(f.min_length() == p.horizon() && f.max_length() == p.horizon() && f.alphabet() == p.alphabet(),
          "portfolio must live on the forecast's horizon");
  const auto a = static_cast<std::size_t>(p.alphabet());
  std::vector<double> out(a, 0.0);
  if (f.is_zero()) return out;
  const std::size_t block = p.size() / a;
  const auto level = f.level(p.horizon());
  const auto w = p.weights();
  for (std::size_t y = 0; y < a; ++y) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = y * block; i < (y + 1) * block; ++i) {
      num += level[i] * w[i];
      den += w[i];
    }
    out[y] = num / den;
  }
  return out;
}

PlayTranscript conditioning_difference(const PlayTranscript& joint) {
  require(joint.config.protocol == ProtocolId::JointTest, "conditioning_difference needs a joint-test play");
  PlayConfig config = joint.config;
  config.protocol = ProtocolId::ConditioningDifference;
  const int N = config.N;
  const PlayRecord& rec = joint.record;
  const int complete = static_cast<int>(rec.outcomes.size());

  PlayTranscript t{config, rec, {}, PlayStatus::Completed};
  Account account(t.config, t);
  double settled = 1.0;
  for (int n = 1; n <= complete + 1 && n <= N; ++n) {
    if (n > static_cast<int>(rec.forecasts.size())) break;
    const ProbMeasure& p = rec.forecasts[static_cast<std::size_t>(n) - 1];
    if (n > 1) {
      // Bet on the revision P_n - P_{n-1}(. | y_{n-1}) with the tickets held since step n-1.
      const TicketPortfolio& f = rec.sceptic_moves[static_cast<std::size_t>(n) - 2];
      const Symbol y = rec.outcomes[static_cast<std::size_t>(n) - 2];
      double diff = 0.0;
      if (!f.is_zero()) {
        const ProbMeasure cond = rec.forecasts[static_cast<std::size_t>(n) - 2].condition_on(y);
        const auto level = f.level(f.max_length());
        const auto a = p.weights();
        const auto b = cond.weights();
        const std::size_t off = static_cast<std::size_t>(y) * a.size();
        for (std::size_t i = 0; i < a.size(); ++i) diff += level[off + i] * (a[i] - b[i]);
      }
      if (!account.post(n - 1, false, account.value() + diff)) return t;
      settled = account.value();
    }
    if (n > complete) break;
    const std::vector<double> fp = one_step_reduction(rec.sceptic_moves[static_cast<std::size_t>(n) - 1], p);
    const ProbMeasure first = p.marginalize(1);
    const Symbol y = rec.outcomes[static_cast<std::size_t>(n) - 1];
    const double next = settled + fp[static_cast<std::size_t>(y)] - dot(fp, first.weights());
    if (n < N) {
      account.post_unchecked(n, true, next);
    } else if (!account.post(n, false, next)) {
      return t;
    }
  }
  t.status = joint.status;
  return t;
}

std::pair<PlayTranscript, PlayTranscript> run_conditioning_variants(const PlayConfig& config, Forecaster& forecaster,
                                                                    Sceptic& sceptic, Reality& reality) {
  PlayTranscript joint = run_joint_test(config, forecaster, sceptic, reality);
  PlayTranscript diff = conditioning_difference(joint);
  return {std::move(joint), std::move(diff)};
}

PlayTranscript run_merged(const PlayConfig& config_in, MergedForecaster& forecaster, Sceptic& sceptic) {
  PlayConfig config = config_in;
  config.protocol = ProtocolId::Merged;
  config.K = config.N;
  validate_common(config);
  const int N = config.N;
  PlayTranscript t{config, {}, {}, PlayStatus::Completed};
  PlayRecord& rec = t.record;
  Account account(t.config, t);
  forecaster.begin_play(t.config);
  sceptic.begin_play(t.config);

  for (int n = 1; n <= N + 1; ++n) {
    CylinderMeasure q = forecaster.forecast(PlayView{t.config, rec, n, account.value()});
    if (q.alphabet() != config.alphabet || q.horizon() != N)
      throw ProtocolViolation("merged forecast must be a measure on Y^N");
    Sequence prefix;
    if (!q.concentrated_on_prefix(n - 1, &prefix))
      throw ProtocolViolation("Q_" + std::to_string(n) + " is not concentrated on an (n-1)-prefix");
    if (!std::equal(rec.outcomes.begin(), rec.outcomes.end(), prefix.begin()))
      throw ProtocolViolation("Q_" + std::to_string(n) + " contradicts the earlier forecasts' prefix");
    if (n >= 2) rec.outcomes.push_back(prefix.back());
    rec.merged_forecasts.push_back(std::move(q));

    if (n >= 2) {
      const TicketPortfolio& F = rec.sceptic_moves.back();
      double delta = 0.0;
      if (!F.is_zero()) {
        const auto level = F.level(N);
        const auto cur = rec.merged_forecasts[static_cast<std::size_t>(n) - 1].weights();
        const auto prev = rec.merged_forecasts[static_cast<std::size_t>(n) - 2].weights();
        for (std::size_t i = 0; i < level.size(); ++i) delta += level[i] * (cur[i] - prev[i]);
      }
      if (!account.post(n - 1, false, account.value() + delta)) return t;
    }
    if (n <= N) {
      const MoveDomain domain{N, N};
      TicketPortfolio F = sceptic.move(PlayView{t.config, rec, n, account.value()}, domain);
      check_move(F, config, domain, n);
      rec.sceptic_moves.push_back(std::move(F));
    }
  }
  return t;
}

PlayTranscript run_general_futures(const PlayConfig& config_in, Forecaster& forecaster, Sceptic& sceptic,
                                   Reality& reality) {
  PlayConfig config = config_in;
  config.protocol = ProtocolId::GeneralFutures;
  config.K = config.N;
  validate_common(config);
  const int N = config.N;
  PlayTranscript t{config, {}, {}, PlayStatus::Completed};
  PlayRecord& rec = t.record;
  Account account(t.config, t);
  forecaster.begin_play(t.config);
  sceptic.begin_play(t.config);
  reality.begin_play(t.config);

  double long_cost = 0.0;  // price paid at step n-1 for tickets of length >= 2
  for (int n = 1; n <= N; ++n) {
    const int h = N - n + 1;
    rec.forecasts.push_back(
        accept_forecast(forecaster.forecast(PlayView{t.config, rec, n, account.value()}, h), config, h, n));
    const auto margins = all_marginals(rec.forecasts.back());

    if (n > 1) {
      const TicketPortfolio& f = rec.sceptic_moves.back();
      double gain = 0.0;
      if (!f.is_zero())
        for (int len = 1; len <= h; ++len)
          gain += dot_after(f.level(len + 1), rec.outcomes.back(), margins[static_cast<std::size_t>(len)]);
      if (!account.post(n - 1, false, account.value() + gain - long_cost)) return t;
    }

    const MoveDomain domain{1, h};
    TicketPortfolio f = sceptic.move(PlayView{t.config, rec, n, account.value()}, domain);
    check_move(f, config, domain, n);
    double short_cost = 0.0;
    long_cost = 0.0;
    if (!f.is_zero()) {
      short_cost = dot(f.level(1), margins[1]);
      for (int len = 2; len <= h; ++len) long_cost += dot(f.level(len), margins[static_cast<std::size_t>(len)]);
    }
    rec.sceptic_moves.push_back(std::move(f));

    const Symbol y = check_outcome(reality.outcome(PlayView{t.config, rec, n, account.value()}), config, n);
    rec.outcomes.push_back(y);
    const double payoff = rec.sceptic_moves.back().value(1, static_cast<std::size_t>(y));
    if (!account.post(n, n < N, account.value() + payoff - short_cost)) return t;
  }
  return t;
}

namespace {

void apply_normalize(TicketPortfolio& f, int len, std::size_t code, double c) {
  f.add(len, code, c);
  const auto a = static_cast<std::size_t>(f.alphabet());
  for (std::size_t y = 0; y < a; ++y) f.add(len + 1, code * a + y, -c);
}

}  // namespace

TicketPortfolio normalize_O(const TicketPortfolio& f, std::span<const Symbol> x, double c) {
  const int len = static_cast<int>(x.size());
  require(len >= f.min_length() && len >= 1, "ticket x must lie in the portfolio's domain");
  require(len < f.max_length(), "normalize_O needs |x| < m");
  TicketPortfolio out = f;
  if (c != 0.0) apply_normalize(out, len, si::encode(x, f.alphabet()), c);
  return out;
}

TicketPortfolio sweep_to_final(const TicketPortfolio& f) {
  TicketPortfolio out = f;
  if (out.is_zero()) return out;
  for (int len = std::max(1, f.min_length()); len < f.max_length(); ++len) {
    const std::size_t count = si::count(f.alphabet(), len);
    for (std::size_t code = 0; code < count; ++code) {
      const double c = -out.value(len, code);
      if (c != 0.0) apply_normalize(out, len, code, c);
    }
  }
  return out;
}

PlayTranscript run_radical(const PlayConfig& config_in, Forecaster& forecaster, Sceptic& sceptic) {
  PlayConfig config = config_in;
  require(config.protocol == ProtocolId::RadicalAdditive || config.protocol == ProtocolId::RadicalMultiplicative,
          "run_radical needs protocol radical-additive or radical-multiplicative");
  require(config.steps >= 1, "radical protocols need a positive step budget");
  config.K = config.N;
  validate_common(config);
  const bool multiplicative = config.protocol == ProtocolId::RadicalMultiplicative;
  const int N = config.N;
  PlayTranscript t{config, {}, {}, PlayStatus::Completed};
  PlayRecord& rec = t.record;
  Account account(t.config, t);
  forecaster.begin_play(t.config);
  sceptic.begin_play(t.config);

  for (int n = 1; n <= config.steps; ++n) {
    rec.forecasts.push_back(
        accept_forecast(forecaster.forecast(PlayView{t.config, rec, n, account.value()}, N), config, N, n));
    if (n >= 2) {
      const TicketPortfolio& move = rec.sceptic_moves.back();
      const auto cur = rec.forecasts[static_cast<std::size_t>(n) - 1].weights();
      const auto prev = rec.forecasts[static_cast<std::size_t>(n) - 2].weights();
      double next = 0.0;
      if (account.value() > 0.0) {
        if (multiplicative) {
          const auto g = move.level(N);
          double mass = 0.0;
          double factor = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) {
            mass += g[i];
            factor += cur[i] / prev[i] * g[i];
          }
          if (g.empty() || std::abs(mass - 1.0) > measures::kNormalizationTolerance)
            throw ProtocolViolation("multiplicative move G_" + std::to_string(n - 1) + " must sum to one");
          next = account.value() * factor;
        } else {
          double delta = 0.0;
          if (!move.is_zero()) {
            const auto F = move.level(N);
            for (std::size_t i = 0; i < F.size(); ++i) delta += F[i] * (cur[i] - prev[i]);
          }
          next = account.value() + delta;
        }
      }
      if (!account.post(n - 1, false, next)) return t;
    }
    if (n < config.steps) {
      const MoveDomain domain{N, N};
      TicketPortfolio move = sceptic.move(PlayView{t.config, rec, n, account.value()}, domain);
      check_move(move, config, domain, n);
      rec.sceptic_moves.push_back(std::move(move));
    }
  }
  return t;
}

TicketPortfolio additive_from_multiplicative(const TicketPortfolio& g, const ProbMeasure& q_prev, double capital) {
  require(g.max_length() == q_prev.horizon() && g.min_length() == q_prev.horizon(), "G must live on Y^N");
  TicketPortfolio f = TicketPortfolio::zero(g.alphabet(), g.min_length(), g.max_length());
  const auto gv = g.level(g.max_length());
  if (gv.empty()) return f;
  auto out = f.mutable_level(f.max_length());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gv[i] / q_prev.weight(i) * capital;
  return f;
}

TicketPortfolio multiplicative_from_additive(const TicketPortfolio& f, const ProbMeasure& q_prev, double capital) {
  require(capital > 0.0, "the correspondence needs positive capital");
  require(f.max_length() == q_prev.horizon() && f.min_length() == q_prev.horizon(), "F must live on Y^N");
  const auto fv = f.level(f.max_length());
  const auto q = q_prev.weights();
  double shift = -capital;
  if (!fv.empty()) shift += dot(fv, q);
  TicketPortfolio g = TicketPortfolio::zero(f.alphabet(), f.min_length(), f.max_length());
  auto out = g.mutable_level(g.max_length());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ((fv.empty() ? 0.0 : fv[i]) - shift) * q[i] / capital;
  return g;
}

PlayTranscript replay(const PlayTranscript& transcript) {
  const PlayConfig& config = transcript.config;
  const PlayRecord& rec = transcript.record;
  ScriptedForecaster forecaster(rec.forecasts);
  ScriptedSceptic sceptic(rec.sceptic_moves);
  ScriptedReality reality(rec.outcomes, rec.losses);
  switch (config.protocol) {
    case ProtocolId::Forecasting:
      return run_forecasting(config, forecaster, reality);
    case ProtocolId::JointTest:
      return run_joint_test(config, forecaster, sceptic, reality);
    case ProtocolId::BayesianOneStep:
      return run_bayesian_one_step(config, forecaster, sceptic, reality);
    case ProtocolId::ConditioningDifference: {
      PlayConfig joint = config;
      joint.protocol = ProtocolId::JointTest;
      return conditioning_difference(run_joint_test(joint, forecaster, sceptic, reality));
    }
    case ProtocolId::Merged: {
      ScriptedMergedForecaster merged(rec.merged_forecasts);
      return run_merged(config, merged, sceptic);
    }
    case ProtocolId::KAhead:
      return run_k_ahead(config, forecaster, sceptic, reality);
    case ProtocolId::Decision: {
      ScriptedDecisionMaker dm(rec.decisions);
      return run_decision(config, forecaster, sceptic, reality, dm);
    }
    case ProtocolId::GeneralFutures:
      return run_general_futures(config, forecaster, sceptic, reality);
    case ProtocolId::RadicalAdditive:
    case ProtocolId::RadicalMultiplicative:
      return run_radical(config, forecaster, sceptic);
  }
  throw InvalidArgument("unknown protocol");
}

int bayes_decision(const LossFn& loss, const ProbMeasure& p) {
  require(loss.decisions() >= 1, "decision space must be nonempty");
  int best = 0;
  double best_value = loss.expected(0, p);
  for (int d = 1; d < loss.decisions(); ++d) {
    const double v = loss.expected(d, p);
    // Summation order can split an exact tie in the last bit; treat that as a tie.
    if (v < best_value - 1e-12) {
      best = d;
      best_value = v;
    }
  }
  return best;
}

DecisionLosses decision_losses(const PlayTranscript& transcript) {
  require(transcript.config.protocol == ProtocolId::Decision, "decision losses need a decision-protocol play");
  const PlayConfig& config = transcript.config;
  const PlayRecord& rec = transcript.record;
  const int N = config.N;
  const int K = config.horizon();
  const int last = config.loss_mode == LossMode::Truncated ? N - K + 1 : N;
  const auto observed = static_cast<int>(rec.outcomes.size());
  DecisionLosses out;
  for (int n = 1; n <= last; ++n) {
    const LossFn& loss = rec.losses[static_cast<std::size_t>(n) - 1];
    const int h = loss.horizon();
    if (n - 1 + h > observed) break;
    const std::size_t code =
        si::encode(std::span<const Symbol>(rec.outcomes).subspan(static_cast<std::size_t>(n) - 1,
                                                                 static_cast<std::size_t>(h)),
                   config.alphabet);
    out.decision_maker += loss(rec.decisions[static_cast<std::size_t>(n) - 1], code);
    out.bayes += loss(bayes_decision(loss, rec.forecasts[static_cast<std::size_t>(n) - 1]), code);
    ++out.counted_steps;
  }
  return out;
}

}  // namespace diachronic::engine

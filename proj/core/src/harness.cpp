#include "diachronic/harness.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "diachronic/bounds.hpp"
#include "diachronic/error.hpp"

namespace diachronic::harness {

using engine::PlayConfig;
using engine::PlayTranscript;
using engine::ProtocolId;
using measures::ProbMeasure;
using measures::Sequence;
using measures::Symbol;
namespace seq_index = measures::seq_index;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string kind_of(const Json& spec, const char* role) {
  require(spec.is_object() && spec.contains("kind") && spec.at("kind").is_string(),
          std::string(role) + " spec needs a string field 'kind'");
  return spec.at("kind").get<std::string>();
}

template <class T>
T value_or(const Json& spec, const char* name, T fallback) {
  if (!spec.is_object() || !spec.contains(name)) return fallback;
  try {
    return spec.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad field '") + name + "': " + e.what());
  }
}

const Json& member(const Json& spec, const char* name, const char* role) {
  require(spec.is_object() && spec.contains(name), std::string(role) + " spec lacks '" + name + "'");
  return spec.at(name);
}

/// |Y|^N, or kMaxEnumeration + 1 once it is exceeded.
std::size_t state_count(int alphabet, int N) {
  std::size_t n = 1;
  for (int i = 0; i < N; ++i) {
    n *= static_cast<std::size_t>(alphabet);
    if (n > kMaxEnumeration) return kMaxEnumeration + 1;
  }
  return n;
}

PlayTranscript play_once(const PlayConfig& cfg, engine::Forecaster& f, engine::Sceptic& s, engine::Reality& r,
                         engine::DecisionMaker& dm) {
  switch (cfg.protocol) {
    case ProtocolId::Forecasting:
      return engine::run_forecasting(cfg, f, r);
    case ProtocolId::JointTest:
      return engine::run_joint_test(cfg, f, s, r);
    case ProtocolId::BayesianOneStep:
      return engine::run_bayesian_one_step(cfg, f, s, r);
    case ProtocolId::ConditioningDifference:
      return engine::run_conditioning_variants(cfg, f, s, r).second;
    case ProtocolId::Merged: {
      engine::MergedEmbedding merged(f, r);
      return engine::run_merged(cfg, merged, s);
    }
    case ProtocolId::KAhead:
      return engine::run_k_ahead(cfg, f, s, r);
    case ProtocolId::Decision:
      return engine::run_decision(cfg, f, s, r, dm);
    case ProtocolId::GeneralFutures:
      return engine::run_general_futures(cfg, f, s, r);
    case ProtocolId::RadicalAdditive:
    case ProtocolId::RadicalMultiplicative:
      return engine::run_radical(cfg, f, s);
  }
  throw InvalidArgument("unknown protocol");
}

/// Fresh copies of the configured players for one play.
struct Players {
  std::unique_ptr<engine::Forecaster> forecaster;
  std::unique_ptr<engine::Reality> reality;
  std::unique_ptr<engine::Sceptic> sceptic;
  std::unique_ptr<engine::DecisionMaker> decision_maker;

  [[nodiscard]] Players clone() const {
    return {forecaster->clone(), reality->clone(), sceptic->clone(), decision_maker->clone()};
  }
};

Players make_players(const ExperimentConfig& c) {
  return {make_forecaster(c.forecaster, c), make_reality(c.reality, c), make_sceptic(c.sceptic, c),
          make_decision_maker(c.decision_maker, c)};
}

void add_assertion(Report& report, std::string name, bool passed, std::string detail) {
  report.assertions.push_back({std::move(name), passed, std::move(detail)});
}

/// Checks an optional Wilson-bound threshold named in config.assertions.
void check_frequency(Report& report, const ExperimentConfig& c, const char* key, const Frequency& f, bool upper) {
  if (!c.assertions.contains(key)) return;
  const double limit = c.assertions.at(key).get<double>();
  const auto w = f.wilson();
  const double bound = upper ? w.upper : w.lower;
  const bool ok = upper ? bound <= limit : bound >= limit;
  add_assertion(report, key, ok,
                std::string(upper ? "Wilson upper " : "Wilson lower ") + fmt(bound) + (upper ? " <= " : " >= ") +
                    fmt(limit));
}

Report new_report(const ExperimentConfig& c, std::string experiment) {
  Report r;
  r.experiment = std::move(experiment);
  r.config = c.to_json();
  return r;
}

}  // namespace

// ---- statistics ----

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  require(successes <= trials, "successes cannot exceed trials");
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Json to_json(const Frequency& f) {
  const auto w = f.wilson();
  return Json{{"hits", f.hits}, {"trials", f.trials}, {"rate", f.rate()}, {"wilson95", {w.lower, w.upper}}};
}

Json to_json(const UpperProbEstimate& u) {
  Json j{{"event", u.event},
         {"certificate", u.certificate},
         {"claimed_inverse_alpha", u.claimed_inverse_alpha},
         {"sound", u.sound},
         {"frequency", to_json(u.frequency)}};
  j["achieved_inverse_alpha"] = std::isfinite(u.achieved_inverse_alpha) ? Json(u.achieved_inverse_alpha) : Json();
  return j;
}

bool Report::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

Json Report::to_json() const {
  Json checks = Json::array();
  for (const auto& a : assertions) checks.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  return Json{{"experiment", experiment},
              {"config", config},
              {"results", results},
              {"assertions", std::move(checks)},
              {"passed", passed()}};
}

// ---- configuration ----

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  require(j.is_object(), "experiment config must be a JSON object");
  ExperimentConfig c;
  c.experiment = value_or(j, "experiment", c.experiment);
  if (j.contains("protocol")) c.protocol = engine::protocol_from_string(j.at("protocol").get<std::string>());
  c.N = value_or(j, "N", c.N);
  c.K = value_or(j, "K", c.K);
  c.alphabet = value_or(j, "alphabet", c.alphabet);
  c.decisions = value_or(j, "decisions", c.decisions);
  c.epsilon = value_or(j, "epsilon", c.epsilon);
  c.gamma = value_or(j, "gamma", c.gamma);
  const auto mode = value_or<std::string>(j, "loss_mode", "truncated");
  require(mode == "truncated" || mode == "full", "loss_mode must be 'truncated' or 'full'");
  c.loss_mode = mode == "full" ? engine::LossMode::Full : engine::LossMode::Truncated;
  c.enforce_nonnegativity = value_or(j, "enforce_nonnegativity", c.enforce_nonnegativity);
  for (auto [name, slot] : {std::pair{"forecaster", &c.forecaster}, std::pair{"reality", &c.reality},
                            std::pair{"sceptic", &c.sceptic}, std::pair{"decision_maker", &c.decision_maker},
                            std::pair{"sequence", &c.sequence}, std::pair{"assertions", &c.assertions}})
    if (j.contains(name)) *slot = j.at(name);
  c.strategies = value_or(j, "strategies", c.strategies);
  c.mode = value_or(j, "mode", c.mode);
  c.exact_N = value_or(j, "exact_N", c.exact_N);
  c.replications = value_or(j, "replications", c.replications);
  c.seed = value_or(j, "seed", c.seed);
  c.threads = value_or(j, "threads", c.threads);
  c.out_json = value_or(j, "out_json", c.out_json);
  c.out_csv = value_or(j, "out_csv", c.out_csv);
  require(c.mode == "martingale" || c.mode == "supermartingale", "mode must be 'martingale' or 'supermartingale'");
  require(c.N >= 1 && c.K >= 1 && c.alphabet >= 2 && c.decisions >= 1, "N, K, alphabet and decisions must be positive");
  return c;
}

Json ExperimentConfig::to_json() const {
  // Threads and output paths are left out: they never change a report.
  return Json{{"experiment", experiment},
              {"protocol", engine::to_string(protocol)},
              {"N", N},
              {"K", K},
              {"alphabet", alphabet},
              {"decisions", decisions},
              {"epsilon", epsilon},
              {"gamma", gamma},
              {"loss_mode", loss_mode == engine::LossMode::Full ? "full" : "truncated"},
              {"enforce_nonnegativity", enforce_nonnegativity},
              {"forecaster", forecaster},
              {"reality", reality},
              {"sceptic", sceptic},
              {"decision_maker", decision_maker},
              {"sequence", sequence},
              {"strategies", strategies},
              {"mode", mode},
              {"exact_N", exact_N},
              {"replications", replications},
              {"seed", seed},
              {"assertions", assertions}};
}

PlayConfig ExperimentConfig::play_config(std::uint64_t stream) const {
  PlayConfig p;
  p.protocol = protocol;
  p.N = N;
  p.K = K;
  p.alphabet = alphabet;
  p.decisions = decisions;
  p.steps = N;
  p.loss_mode = loss_mode;
  p.enforce_nonnegativity = enforce_nonnegativity;
  p.stream = stream;
  return p;
}

// ---- strategy factory ----

std::shared_ptr<const strategies::SequenceModel> make_model(const Json& spec, int alphabet, int N) {
  const auto kind = kind_of(spec, "model");
  if (kind == "iid") {
    const auto marginal = member(spec, "marginal", "iid model").get<std::vector<double>>();
    require(static_cast<int>(marginal.size()) == alphabet, "iid marginal must have |Y| entries");
    return std::make_shared<strategies::IidModel>(marginal, std::min(N, 12));
  }
  if (kind == "joint") {
    const int horizon = value_or(spec, "horizon", N);
    return std::make_shared<strategies::JointModel>(
        ProbMeasure(alphabet, horizon, member(spec, "weights", "joint model").get<std::vector<double>>()));
  }
  if (kind == "random_joint") {
    CounterRng rng(value_or<std::uint64_t>(spec, "seed", 1), 0x6a6f696e74);
    std::vector<double> w(seq_index::count(alphabet, N));
    for (double& v : w) v = 0.05 + rng.uniform();
    return std::make_shared<strategies::JointModel>(ProbMeasure::from_unnormalized(alphabet, N, std::move(w)));
  }
  throw InvalidArgument("unknown model kind '" + kind + "'");
}

std::shared_ptr<const strategies::LossSchedule> make_losses(const Json& spec, const ExperimentConfig& c) {
  const auto kind = kind_of(spec, "losses");
  if (kind == "random_table") return std::make_shared<strategies::RandomTableLoss>(value_or(spec, "decisions", c.decisions));
  if (kind == "indicator")
    return std::make_shared<strategies::IndicatorLoss>(c.alphabet, value_or(spec, "position", 0));
  if (kind == "block") return std::make_shared<strategies::BlockLoss>(c.N, c.K);
  throw InvalidArgument("unknown loss kind '" + kind + "'");
}

std::unique_ptr<engine::Forecaster> make_forecaster(const Json& spec, const ExperimentConfig& c) {
  const auto kind = kind_of(spec, "forecaster");
  if (kind == "conditioning")
    return std::make_unique<strategies::ConditioningForecaster>(
        make_model(member(spec, "model", "forecaster"), c.alphabet, c.N));
  if (kind == "drifting")
    return std::make_unique<strategies::DriftingForecaster>(
        make_model(member(spec, "honest", "forecaster"), c.alphabet, c.N),
        make_model(member(spec, "alternative", "forecaster"), c.alphabet, c.N),
        member(spec, "rate", "forecaster").get<double>());
  throw InvalidArgument("unknown forecaster kind '" + kind + "'");
}

std::unique_ptr<engine::Reality> make_reality(const Json& spec, const ExperimentConfig& c) {
  const auto kind = kind_of(spec, "reality");
  const auto seed = value_or<std::uint64_t>(spec, "seed", c.seed);
  if (kind == "model") {
    std::shared_ptr<const strategies::LossSchedule> losses;
    if (spec.contains("losses")) losses = make_losses(spec.at("losses"), c);
    return std::make_unique<strategies::ModelReality>(make_model(member(spec, "model", "reality"), c.alphabet, c.N),
                                                      seed, std::move(losses));
  }
  if (kind == "block") return strategies::adversarial_block_reality(c.N, c.K, seed);
  throw InvalidArgument("unknown reality kind '" + kind + "'");
}

std::unique_ptr<engine::Sceptic> make_sceptic(const Json& spec, const ExperimentConfig& c) {
  const auto kind = kind_of(spec, "sceptic");
  if (kind == "zero") return std::make_unique<engine::ZeroSceptic>();
  if (kind == "hold")
    return std::make_unique<strategies::TicketHoldSceptic>(member(spec, "path", "hold sceptic").get<Sequence>(),
                                                           value_or(spec, "stake", 1.0));
  if (kind == "random_predictable")
    return std::make_unique<strategies::RandomPredictableSceptic>(value_or<std::uint64_t>(spec, "seed", c.seed),
                                                                  value_or(spec, "amplitude", 0.1));
  if (kind == "hoeffding") {
    const auto side = value_or<std::string>(spec, "side", "upper");
    require(side == "upper" || side == "lower", "hoeffding side must be 'upper' or 'lower'");
    return std::make_unique<strategies::HoeffdingSceptic>(strategies::HoeffdingParams{
        c.K, c.N, c.epsilon, c.gamma,
        side == "upper" ? strategies::HoeffdingSide::Upper : strategies::HoeffdingSide::Lower});
  }
  throw InvalidArgument("unknown sceptic kind '" + kind + "'");
}

std::unique_ptr<engine::DecisionMaker> make_decision_maker(const Json& spec, const ExperimentConfig& c) {
  const auto kind = kind_of(spec, "decision maker");
  if (kind == "bayes") return std::make_unique<strategies::BayesDecisionMaker>();
  if (kind == "constant")
    return std::make_unique<strategies::ConstantDecisionMaker>(member(spec, "decision", "constant").get<int>());
  if (kind == "complement") return std::make_unique<strategies::ComplementDecisionMaker>();
  if (kind == "informed")
    return std::make_unique<strategies::InformedBayesDecisionMaker>(
        make_model(member(spec, "model", "informed decision maker"), c.alphabet, c.N));
  throw InvalidArgument("unknown decision maker kind '" + kind + "'");
}

// ---- exact enumeration ----

Report enumerate_exact(const ExperimentConfig& c) {
  const std::size_t paths = state_count(c.alphabet, c.N);
  if (paths > kMaxEnumeration)
    throw InvalidArgument("enumeration needs |Y|^N <= 2^20; got |Y| = " + std::to_string(c.alphabet) +
                          ", N = " + std::to_string(c.N));
  require(kind_of(c.forecaster, "forecaster") == "conditioning",
          "exact enumeration needs a conditioning forecaster (its model is the law of the space)");
  require(c.strategies >= 1, "strategies must be positive");
  const auto model = make_model(c.forecaster.at("model"), c.alphabet, c.N);
  const ProbMeasure law = model->predictive({}, c.N);

  PlayConfig cfg = c.play_config();
  cfg.enforce_nonnegativity = false;
  const bool decision = cfg.protocol == ProtocolId::Decision;

  // Losses are announced before anything random happens, so one fixed table
  // per step serves every path.
  std::vector<measures::LossFn> losses;
  if (decision) {
    const auto schedule = make_losses(member(c.reality, "losses", "reality"), c);
    CounterRng rng(c.seed, 0x6c6f7373);
    engine::PlayRecord empty;
    for (int n = 1; n <= c.N; ++n) {
      const engine::PlayView view{cfg, empty, n, 1.0};
      losses.push_back(schedule->loss(view, std::min(cfg.horizon(), c.N - n + 1), rng));
    }
  }

  double worst_abs = 0.0;
  double worst_up = -std::numeric_limits<double>::infinity();
  double worst_spread = 0.0;
  std::ostringstream csv;
  csv << "strategy,max_abs_deviation,max_increment\n";
  for (int s = 0; s < c.strategies; ++s) {
    Json spec = c.sceptic;
    if (kind_of(spec, "sceptic") == "random_predictable")
      spec["seed"] = value_or<std::uint64_t>(spec, "seed", c.seed) + static_cast<std::uint64_t>(s);
    const auto sceptic = make_sceptic(spec, c);
    const auto dm = make_decision_maker(c.decision_maker, c);
    const auto forecaster = make_forecaster(c.forecaster, c);

    std::vector<std::vector<double>> traj(paths);
    for (std::size_t code = 0; code < paths; ++code) {
      engine::ScriptedReality reality(seq_index::decode(code, c.N, c.alphabet), losses);
      auto f = forecaster->clone();
      auto sc = sceptic->clone();
      auto d = dm->clone();
      const auto t = play_once(cfg, *f, *sc, reality, *d);
      traj[code] = t.ledger.trajectory();
      require(traj[code].size() == static_cast<std::size_t>(c.N) + 1,
              "enumeration needs one settled capital per step (protocol " +
                  std::string(engine::to_string(cfg.protocol)) + ")");
    }

    double strat_abs = 0.0;
    double strat_up = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= c.N; ++n) {
      const std::size_t block = seq_index::count(c.alphabet, c.N - n + 1);
      for (std::size_t start = 0; start < paths; start += block) {
        double mass = 0.0;
        double drift = 0.0;
        double lo = traj[start][static_cast<std::size_t>(n) - 1];
        double hi = lo;
        for (std::size_t code = start; code < start + block; ++code) {
          const double p = law.weight(code);
          const double before = traj[code][static_cast<std::size_t>(n) - 1];
          mass += p;
          drift += p * (traj[code][static_cast<std::size_t>(n)] - before);
          lo = std::min(lo, before);
          hi = std::max(hi, before);
        }
        const double dev = drift / mass;
        strat_abs = std::max(strat_abs, std::abs(dev));
        strat_up = std::max(strat_up, dev);
        worst_spread = std::max(worst_spread, hi - lo);
      }
    }
    worst_abs = std::max(worst_abs, strat_abs);
    worst_up = std::max(worst_up, strat_up);
    csv << s << ',' << fmt(strat_abs) << ',' << fmt(strat_up) << '\n';
  }

  Report report = new_report(c, "enumerate");
  report.results = Json{{"paths", paths},
                        {"strategies", c.strategies},
                        {"max_abs_deviation", worst_abs},
                        {"max_increment", worst_up},
                        {"max_prefix_spread", worst_spread}};
  report.csv = csv.str();
  const double tol = value_or(c.assertions, "max_deviation", 1e-9);
  if (c.mode == "martingale")
    add_assertion(report, "martingale", worst_abs <= tol, "max |E(dK | past)| = " + fmt(worst_abs) + " <= " + fmt(tol));
  else
    add_assertion(report, "supermartingale", worst_up <= tol,
                  "max E(dK | past) = " + fmt(worst_up) + " <= " + fmt(tol));
  // Capital before step n may only depend on y_1..y_{n-1}.
  add_assertion(report, "predictable", worst_spread <= 1e-12, "max spread of K_{n-1} within a prefix = " + fmt(worst_spread));
  return report;
}

// ---- Theorem-optimal experiment ----

namespace {

struct DecisionRun {
  double regret = 0.0;
  double final_capital = 0.0;
  double min_capital = 0.0;
  bool completed = true;
};

DecisionRun summarize_decision(const PlayTranscript& t) {
  return {engine::decision_losses(t).regret_of_bayes(), t.ledger.final_value(), t.ledger.min_value(),
          t.status == engine::PlayStatus::Completed};
}

}  // namespace

Report run_theorem_optimal(const ExperimentConfig& c_in) {
  ExperimentConfig c = c_in;
  c.protocol = ProtocolId::Decision;
  require(c.epsilon > 0.0 && c.epsilon < 0.3, "theorem-optimal needs epsilon in (0, 0.3)");
  require(c.K < c.N, "theorem-optimal needs K < N");
  require(kind_of(c.sceptic, "sceptic") == "hoeffding", "theorem-optimal certifies with the hoeffding sceptic");
  const double threshold = bounds::regret_threshold(c.K, c.N, c.epsilon);
  const double target = 1.0 / c.epsilon;

  const Players proto = make_players(c);
  const auto runs = run_replications<DecisionRun>(
      c.replications,
      [&](std::uint64_t r) {
        Players p = proto.clone();
        return summarize_decision(
            engine::run_decision(c.play_config(r), *p.forecaster, *p.sceptic, *p.reality, *p.decision_maker));
      },
      c.threads);

  UpperProbEstimate u;
  u.event = "Loss_N(A) - Loss_N >= " + fmt(threshold);
  u.certificate = "hoeffding";
  u.claimed_inverse_alpha = target;
  u.frequency.trials = runs.size();
  bool nonnegative = true;
  std::size_t dichotomy_failures = 0;
  std::optional<std::size_t> first_violation;
  std::ostringstream csv;
  csv << "replication,regret,final_capital,min_capital,violation\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    const bool violation = run.regret >= threshold;
    nonnegative = nonnegative && run.completed && run.min_capital >= 0.0;
    if (violation) {
      ++u.frequency.hits;
      u.achieved_inverse_alpha = std::min(u.achieved_inverse_alpha, run.final_capital);
      if (run.final_capital < target) ++dichotomy_failures;
      if (!first_violation) first_violation = r;
    }
    csv << r << ',' << fmt(run.regret) << ',' << fmt(run.final_capital) << ',' << fmt(run.min_capital) << ','
        << (violation ? 1 : 0) << '\n';
  }
  u.sound = nonnegative && dichotomy_failures == 0;

  // Replay the first event run through the engine as the certificate.
  Json replayed = nullptr;
  if (first_violation) {
    Players p = proto.clone();
    const auto t = engine::run_decision(c.play_config(*first_violation), *p.forecaster, *p.sceptic, *p.reality,
                                        *p.decision_maker);
    const auto again = engine::replay(t);
    replayed = Json{{"replication", *first_violation},
                    {"ledger_identical", again.ledger == t.ledger},
                    {"min_capital", again.ledger.min_value()},
                    {"final_capital", again.ledger.final_value()}};
  }

  Report report = new_report(c, "theorem-optimal");
  report.results = Json{{"threshold", threshold},
                        {"target_capital", target},
                        {"upper_probability", to_json(u)},
                        {"dichotomy_failures", dichotomy_failures},
                        {"capital_nonnegative", nonnegative},
                        {"certificate_replay", replayed}};
  report.csv = csv.str();
  add_assertion(report, "capital_nonnegative", nonnegative, "K_n >= 0 in every run");
  add_assertion(report, "dichotomy", dichotomy_failures == 0,
                std::to_string(dichotomy_failures) + " violating runs ended below 1/epsilon = " + fmt(target));
  if (first_violation)
    add_assertion(report, "certificate_replay",
                  replayed["ledger_identical"].get<bool>() && replayed["min_capital"].get<double>() >= 0.0 &&
                      replayed["final_capital"].get<double>() >= target,
                  "replayed ledger of replication " + std::to_string(*first_violation));
  check_frequency(report, c, "frequency_upper_at_most", u.frequency, true);
  return report;
}

// ---- lower bounds ----

namespace {

using Rational = boost::multiprecision::cpp_rational;

std::string to_string(const Rational& q) {
  std::ostringstream s;
  s << q;
  return s.str();
}

}  // namespace

Report run_lower_bounds(const ExperimentConfig& c_in) {
  ExperimentConfig c = c_in;
  c.protocol = ProtocolId::Decision;
  require(c.exact_N >= 1 && c.exact_N <= 20, "exact_N must lie in 1..20");
  require(c.K >= 1 && 5 * c.K <= c.N, "block construction needs K <= N/5");

  // Exact part: every step predicts y_N, and P(y_N = 1) = 2/5 with i.i.d. coordinates.
  const int Ne = c.exact_N;
  const Rational p_one(2, 5);
  ExperimentConfig exact = c;
  exact.N = Ne;
  exact.K = Ne;
  exact.loss_mode = engine::LossMode::Full;
  PlayConfig ecfg = exact.play_config();
  const strategies::BlockLoss schedule(Ne, Ne);
  std::vector<measures::LossFn> losses;
  {
    CounterRng unused(0);
    engine::PlayRecord empty;
    for (int n = 1; n <= Ne; ++n)
      losses.push_back(schedule.loss(engine::PlayView{ecfg, empty, n, 1.0}, Ne - n + 1, unused));
  }
  strategies::ConditioningForecaster exact_forecaster(
      std::make_shared<strategies::IidModel>(std::vector<double>{0.6, 0.4}, std::min(Ne, 12)));
  std::map<Rational, Rational> law;
  for (std::size_t code = 0; code < seq_index::count(2, Ne); ++code) {
    const auto path = seq_index::decode(code, Ne, 2);
    engine::ScriptedReality reality(path, losses);
    engine::ZeroSceptic zero;
    strategies::ConstantDecisionMaker b(1);
    auto f = exact_forecaster.clone();
    const auto t = engine::run_decision(ecfg, *f, zero, reality, b);
    const double diff = engine::decision_losses(t).regret_of_bayes();
    require(diff == std::round(diff), "losses in the counter-example are integers");
    Rational prob = 1;
    for (Symbol y : path) prob *= y == 1 ? p_one : 1 - p_one;
    law[Rational(static_cast<long long>(diff), Ne)] += prob;
  }
  Json distribution = Json::array();
  for (const auto& [value, prob] : law)
    distribution.push_back({{"value", to_string(value)}, {"probability", to_string(prob)}});
  const std::map<Rational, Rational> expected{{Rational(-1), Rational(3, 5)}, {Rational(1), Rational(2, 5)}};

  // Monte Carlo part under fair-coin block losses.
  ExperimentConfig mc = c;
  mc.reality = Json{{"kind", "block"}};
  if (kind_of(mc.forecaster, "forecaster") != "conditioning")
    throw InvalidArgument("lower-bounds uses the conditioning forecaster on the fair coin");
  const double scale = bounds::regret_scale(c.K, c.N);
  Players proto{std::make_unique<strategies::ConditioningForecaster>(
                    std::make_shared<strategies::IidModel>(std::vector<double>{0.5, 0.5}, std::min(c.K, 12))),
                make_reality(mc.reality, mc), std::make_unique<engine::ZeroSceptic>(),
                make_decision_maker(mc.decision_maker, mc)};
  const auto diffs = run_replications<double>(
      c.replications,
      [&](std::uint64_t r) {
        Players p = proto.clone();
        const auto t =
            engine::run_decision(mc.play_config(r), *p.forecaster, *p.sceptic, *p.reality, *p.decision_maker);
        return engine::decision_losses(t).regret_of_bayes();
      },
      c.threads);
  Frequency freq;
  freq.trials = diffs.size();
  std::ostringstream csv;
  csv << "replication,difference,event\n";
  for (std::size_t r = 0; r < diffs.size(); ++r) {
    const bool hit = diffs[r] >= scale;
    freq.hits += hit ? 1 : 0;
    csv << r << ',' << fmt(diffs[r]) << ',' << (hit ? 1 : 0) << '\n';
  }

  Report report = new_report(c, "lower-bounds");
  report.results = Json{{"exact", {{"N", Ne}, {"p_last_is_one", to_string(p_one)}, {"distribution", distribution}}},
                        {"block", {{"threshold", scale}, {"frequency", to_json(freq)}}}};
  report.csv = csv.str();
  add_assertion(report, "exact_counter_example", law == expected,
                "(Loss(A) - Loss(B))/N is +1 w.p. 2/5 and -1 w.p. 3/5 exactly");
  check_frequency(report, c, "frequency_lower_at_least", freq, false);
  return report;
}

// ---- law of large numbers ----

Report run_lln(const ExperimentConfig& c) {
  require(c.epsilon > 0.0 && c.epsilon < 0.7, "lln needs epsilon in (0, 0.7)");
  require(c.K >= 1 && c.K <= c.N, "lln needs 1 <= K <= N");
  const auto kind = kind_of(c.sequence, "sequence");
  const double flip = value_or(c.sequence, "flip", 0.5);
  if (kind == "markov")
    require(flip >= 0.0 && flip <= 1.0, "flip probability must lie in [0, 1]");
  else if (kind == "blocks")
    require(5 * c.K <= c.N, "block sequence needs K <= N/5");
  else
    throw InvalidArgument("unknown sequence kind '" + kind + "'");
  const double lln = bounds::lln_threshold(c.K, c.N, c.epsilon);
  const double anti = bounds::regret_scale(c.K, c.N);
  // E(Y_n | F_{n-K}) = (1 - 2 flip)^K Y_{n-K} for the symmetric chain.
  const double decay = std::pow(1.0 - 2.0 * flip, c.K);

  const auto sums = run_replications<double>(
      c.replications,
      [&](std::uint64_t r) {
        CounterRng rng(c.seed, r);
        std::vector<double> y(static_cast<std::size_t>(c.N) + 1, 0.0);  // 1-based
        for (int n = 1; n <= c.N; ++n) {
          if (kind == "blocks")
            y[n] = (n - 1) % c.K == 0 ? (rng.bernoulli(0.5) ? 1.0 : -1.0) : y[n - 1];
          else
            y[n] = n == 1 ? (rng.bernoulli(0.5) ? 1.0 : -1.0) : (rng.bernoulli(flip) ? -y[n - 1] : y[n - 1]);
        }
        double sum = 0.0;
        for (int n = c.K; n <= c.N; ++n) {
          // Blocks: F_{n-K} never reveals the block containing n.
          const double predicted = kind == "blocks" || n - c.K < 1 ? 0.0 : decay * y[n - c.K];
          sum += y[n] - predicted;
        }
        return sum;
      },
      c.threads);

  Frequency violation;
  Frequency reach;
  violation.trials = reach.trials = sums.size();
  std::ostringstream csv;
  csv << "replication,sum,lln_violation,anti_event\n";
  for (std::size_t r = 0; r < sums.size(); ++r) {
    const bool v = std::abs(sums[r]) >= lln;
    const bool a = sums[r] >= anti;
    violation.hits += v ? 1 : 0;
    reach.hits += a ? 1 : 0;
    csv << r << ',' << fmt(sums[r]) << ',' << (v ? 1 : 0) << ',' << (a ? 1 : 0) << '\n';
  }
  Report report = new_report(c, "lln");
  report.results = Json{{"lln_threshold", lln},
                        {"anti_threshold", anti},
                        {"lln_violation", to_json(violation)},
                        {"anti_event", to_json(reach)}};
  report.csv = csv.str();
  check_frequency(report, c, "lln_frequency_upper_at_most", violation, true);
  check_frequency(report, c, "anti_frequency_lower_at_least", reach, false);
  return report;
}

// ---- plain plays ----

Report run_play(const ExperimentConfig& c) {
  const Players proto = make_players(c);
  struct Summary {
    double final_capital = 0.0;
    double min_capital = 0.0;
    double regret = 0.0;
    bool completed = true;
  };
  const bool decision = c.protocol == ProtocolId::Decision;
  const auto runs = run_replications<Summary>(
      c.replications,
      [&](std::uint64_t r) {
        Players p = proto.clone();
        const auto t = play_once(c.play_config(r), *p.forecaster, *p.sceptic, *p.reality, *p.decision_maker);
        return Summary{t.ledger.final_value(), t.ledger.min_value(),
                       decision ? engine::decision_losses(t).regret_of_bayes() : 0.0,
                       t.status == engine::PlayStatus::Completed};
      },
      c.threads);
  double total = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t bankrupt = 0;
  std::ostringstream csv;
  csv << "replication,final_capital,min_capital" << (decision ? ",regret" : "") << '\n';
  for (std::size_t r = 0; r < runs.size(); ++r) {
    total += runs[r].final_capital;
    lo = std::min(lo, runs[r].final_capital);
    hi = std::max(hi, runs[r].final_capital);
    bankrupt += runs[r].completed ? 0 : 1;
    csv << r << ',' << fmt(runs[r].final_capital) << ',' << fmt(runs[r].min_capital);
    if (decision) csv << ',' << fmt(runs[r].regret);
    csv << '\n';
  }
  Report report = new_report(c, "play");
  report.results = Json{{"replications", runs.size()}, {"bankrupt", bankrupt}};
  if (!runs.empty()) {
    report.results["mean_final_capital"] = total / static_cast<double>(runs.size());
    report.results["min_final_capital"] = lo;
    report.results["max_final_capital"] = hi;
    // The first play in full, when it is small enough to read.
    if (c.N <= 12) {
      Players p = proto.clone();
      report.results["transcript"] =
          io::to_json(play_once(c.play_config(0), *p.forecaster, *p.sceptic, *p.reality, *p.decision_maker));
    }
  }
  report.csv = csv.str();
  if (c.assertions.contains("no_bankruptcy"))
    add_assertion(report, "no_bankruptcy", bankrupt == 0, std::to_string(bankrupt) + " plays went bankrupt");
  return report;
}

Report run_experiment(const ExperimentConfig& c) {
  if (c.experiment == "enumerate") return enumerate_exact(c);
  if (c.experiment == "theorem-optimal") return run_theorem_optimal(c);
  if (c.experiment == "lower-bounds") return run_lower_bounds(c);
  if (c.experiment == "lln") return run_lln(c);
  if (c.experiment == "play") return run_play(c);
  throw InvalidArgument("unknown experiment '" + c.experiment + "'");
}

void write_report(const Report& report, const ExperimentConfig& c) {
  if (!c.out_json.empty()) io::write_file(c.out_json, report.to_json().dump(2) + "\n");
  if (!c.out_csv.empty()) io::write_file(c.out_csv, report.csv);
}

}  // namespace diachronic::harness

#include <gtest/gtest.h>

#include <cmath>

#include "diachronic/engine.hpp"
#include "diachronic/error.hpp"
#include "diachronic/rng.hpp"

using namespace diachronic;
using namespace diachronic::engine;
using measures::ProbMeasure;
using measures::Sequence;

namespace {

// Forecaster that conditions a fixed joint measure on the outcomes so far.
class Conditioning final : public Forecaster {
 public:
  explicit Conditioning(ProbMeasure joint) : joint_(std::move(joint)) {}
  ProbMeasure forecast(const PlayView& view, int horizon) override {
    const ProbMeasure rest = view.record.outcomes.empty() ? joint_ : joint_.condition_on_prefix(view.record.outcomes);
    return rest.marginalize(horizon);
  }
  std::unique_ptr<Forecaster> clone() const override { return std::make_unique<Conditioning>(*this); }

 private:
  ProbMeasure joint_;
};

// Forecaster announcing fresh random measures each step.
class Arbitrary final : public Forecaster {
 public:
  explicit Arbitrary(std::uint64_t seed) : rng_(seed) {}
  ProbMeasure forecast(const PlayView& view, int horizon) override {
    std::vector<double> w(measures::seq_index::count(view.config.alphabet, horizon));
    for (double& v : w) v = 0.05 + rng_.uniform();
    return ProbMeasure::from_unnormalized(view.config.alphabet, horizon, std::move(w));
  }
  std::unique_ptr<Forecaster> clone() const override { return std::make_unique<Arbitrary>(*this); }

 private:
  CounterRng rng_;
};

class RandomOutcomes final : public Reality {
 public:
  explicit RandomOutcomes(std::uint64_t seed) : rng_(seed) {}
  measures::Symbol outcome(const PlayView& view) override {
    return static_cast<measures::Symbol>(rng_.below(static_cast<std::uint64_t>(view.config.alphabet)));
  }
  std::unique_ptr<Reality> clone() const override { return std::make_unique<RandomOutcomes>(*this); }

 private:
  CounterRng rng_;
};

// Small random bets on every legal ticket.
class RandomBets final : public Sceptic {
 public:
  RandomBets(std::uint64_t seed, double scale) : rng_(seed), scale_(scale) {}
  TicketPortfolio move(const PlayView& view, const MoveDomain& domain) override {
    auto f = TicketPortfolio::zero(view.config.alphabet, domain.min_length, domain.max_length);
    for (int len = domain.min_length; len <= domain.max_length; ++len)
      for (double& v : f.mutable_level(len)) v = scale_ * rng_.uniform(-1.0, 1.0);
    return f;
  }
  std::unique_ptr<Sceptic> clone() const override { return std::make_unique<RandomBets>(*this); }

 private:
  CounterRng rng_;
  double scale_;
};

PlayConfig config_for(int N, bool enforce = true) {
  PlayConfig c;
  c.N = N;
  c.enforce_nonnegativity = enforce;
  return c;
}

// The worked joint-test play: P_1 uniform on {0,1}^2, f_1 = 1{00}, Forecaster
// conditions, and Sceptic holds the ticket (f_2 = 1{0}).
PlayTranscript worked_play(Sequence outcomes) {
  Conditioning forecaster(ProbMeasure::uniform(2, 2));
  ScriptedSceptic sceptic({TicketPortfolio(2, 2, {1, 0, 0, 0}), TicketPortfolio(2, 1, {1, 0})});
  ScriptedReality reality(std::move(outcomes));
  return run_joint_test(config_for(2), forecaster, sceptic, reality);
}

}  // namespace

TEST(JointTest, ZeroScepticKeepsCapital) {
  Conditioning f(ProbMeasure::uniform(2, 3));
  ZeroSceptic s;
  RandomOutcomes r(1);
  const auto t = run_joint_test(config_for(3), f, s, r);
  EXPECT_EQ(t.ledger.trajectory(), (std::vector<double>{1, 1, 1, 1}));
}

TEST(JointTest, WorkedExampleLedger) {
  const auto t = worked_play({0, 0});
  EXPECT_EQ(t.ledger.trajectory(), (std::vector<double>{1.0, 1.25, 1.75}));
  EXPECT_EQ(t.status, PlayStatus::Completed);
}

TEST(JointTest, WorkedExampleLosingBranch) {
  const auto t = worked_play({1, 0});
  EXPECT_DOUBLE_EQ(t.ledger.trajectory()[1], 0.75);
}

TEST(JointTest, RejectsWrongMoveDomain) {
  Conditioning f(ProbMeasure::uniform(2, 2));
  ScriptedSceptic s({TicketPortfolio(2, 1, {1, 0})});
  ScriptedReality r({0, 0});
  EXPECT_THROW(run_joint_test(config_for(2), f, s, r), ProtocolViolation);
}

TEST(JointTest, BankruptcyHaltsAndClamps) {
  Conditioning f(ProbMeasure::uniform(2, 2));
  ScriptedSceptic s({TicketPortfolio(2, 2, {10, 0, 0, 0}), TicketPortfolio::zero(2, 1, 1)});
  ScriptedReality r({1, 0});
  const auto t = run_joint_test(config_for(2), f, s, r);
  EXPECT_EQ(t.status, PlayStatus::ScepticBankrupt);
  EXPECT_EQ(t.ledger.final_value(), 0.0);
  EXPECT_EQ(t.ledger.entries().size(), 2u);
}

TEST(JointTest, ReplayIsBitExact) {
  Arbitrary f(3);
  RandomBets s(4, 0.05);
  RandomOutcomes r(5);
  const auto t = run_joint_test(config_for(4), f, s, r);
  EXPECT_EQ(replay(t).ledger, t.ledger);
}

TEST(ConditioningVariants, WorkedExampleMatches) {
  const auto joint = worked_play({0, 0});
  const auto diff = conditioning_difference(joint);
  EXPECT_EQ(diff.ledger.trajectory(), (std::vector<double>{1.0, 1.25, 1.75}));
}

TEST(ConditioningVariants, ZeroScepticConstant) {
  Arbitrary f(7);
  ZeroSceptic s;
  RandomOutcomes r(8);
  const auto [joint, diff] = run_conditioning_variants(config_for(3), f, s, r);
  for (double v : diff.ledger.trajectory()) EXPECT_EQ(v, 1.0);
}

TEST(ConditioningVariants, EquivalentForArbitraryForecasters) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Arbitrary f(seed);
    RandomBets s(seed + 1000, 1.0);
    RandomOutcomes r(seed + 2000);
    const int N = 2 + static_cast<int>(seed % 4);
    const auto [joint, diff] = run_conditioning_variants(config_for(N, false), f, s, r);
    const auto a = joint.ledger.trajectory();
    const auto b = diff.ledger.trajectory();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

// Under a conditioning forecaster the revision bet has zero value, so each
// corrected K_{n-1} equals the provisional K'_{n-1}.
TEST(ConditioningVariants, ConditioningMakesDifferenceTermVanish) {
  CounterRng rng(9);
  std::vector<double> w(16);
  for (double& v : w) v = 0.1 + rng.uniform();
  Conditioning f(ProbMeasure::from_unnormalized(2, 4, w));
  RandomBets s(10, 0.1);
  RandomOutcomes r(11);
  const auto diff = run_conditioning_variants(config_for(4, false), f, s, r).second;
  const auto& e = diff.ledger.entries();
  for (std::size_t i = 1; i + 1 < e.size(); ++i)
    if (e[i].provisional) EXPECT_NEAR(e[i].value, e[i + 1].value, 1e-15);
}

TEST(BayesianOneStep, RequiresConditioning) {
  Arbitrary f(1);
  ZeroSceptic s;
  RandomOutcomes r(2);
  EXPECT_THROW(run_bayesian_one_step(config_for(3), f, s, r), ProtocolViolation);
}

TEST(BayesianOneStep, ReducedTicketsMatchJointTest) {
  Conditioning f(ProbMeasure::uniform(2, 2));
  // f'_1 = reduction of 1{00} under uniform: f'(0) = 0.5, f'(1) = 0.
  ScriptedSceptic s({TicketPortfolio(2, 1, {0.5, 0}), TicketPortfolio(2, 1, {1, 0})});
  ScriptedReality r({0, 0});
  const auto t = run_bayesian_one_step(config_for(2), f, s, r);
  EXPECT_EQ(t.ledger.trajectory(), (std::vector<double>{1.0, 1.25, 1.75}));
}

TEST(OneStepReduction, HandValues) {
  const ProbMeasure p(2, 2, {0.1, 0.2, 0.3, 0.4});
  const auto r = one_step_reduction(TicketPortfolio(2, 2, {1, 2, 3, 4}), p);
  EXPECT_NEAR(r[0], (0.1 + 0.4) / 0.3, 1e-15);
  EXPECT_NEAR(r[1], (0.9 + 1.6) / 0.7, 1e-15);
}

TEST(Merged, EmbeddingReproducesWorkedExample) {
  Conditioning f(ProbMeasure::uniform(2, 2));
  ScriptedReality r({0, 0});
  MergedEmbedding merged(f, r);
  // In the merged protocol Sceptic's moves are on Y^N; the held ticket
  // becomes F_2(0x) = f_2(x).
  ScriptedSceptic s({TicketPortfolio(2, 2, {1, 0, 0, 0}), TicketPortfolio(2, 2, {1, 0, 0, 0})});
  const auto t = run_merged(config_for(2), merged, s);
  EXPECT_EQ(t.ledger.trajectory(), (std::vector<double>{1.0, 1.25, 1.75}));
  EXPECT_EQ(t.record.outcomes, (Sequence{0, 0}));
  EXPECT_EQ(t.record.merged_forecasts.size(), 3u);
}

TEST(Merged, ConstantTicketsEarnNothing) {
  Arbitrary f(3);
  RandomOutcomes r(4);
  MergedEmbedding merged(f, r);
  ScriptedSceptic s(std::vector<TicketPortfolio>(3, TicketPortfolio(2, 3, std::vector<double>(8, 2.5))));
  const auto t = run_merged(config_for(3), merged, s);
  for (double v : t.ledger.trajectory()) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Merged, RejectsUnconcentratedForecast) {
  ScriptedMergedForecaster f({measures::CylinderMeasure::from(ProbMeasure::uniform(2, 2)),
                              measures::CylinderMeasure::from(ProbMeasure::uniform(2, 2))});
  ZeroSceptic s;
  EXPECT_THROW(run_merged(config_for(2), f, s), ProtocolViolation);
}

TEST(Merged, MatchesJointTestOnRandomPlays) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Arbitrary f(seed);
    RandomOutcomes r(seed + 1);
    RandomBets s(seed + 2, 0.2);
    const auto joint = run_joint_test(config_for(3, false), f, s, r);
    // Lift f_n on Y^(N-n+1) to F_n on Y^N: F_n(y_1..y_{n-1} x) = f_n(x), zero elsewhere.
    std::vector<TicketPortfolio> lifted;
    for (std::size_t i = 0; i < joint.record.sceptic_moves.size(); ++i) {
      const auto& f_n = joint.record.sceptic_moves[i];
      auto F = TicketPortfolio::zero(2, 3, 3);
      const Sequence prefix(joint.record.outcomes.begin(), joint.record.outcomes.begin() + static_cast<long>(i));
      const auto level = f_n.level(f_n.max_length());
      const std::size_t base = measures::seq_index::encode(prefix, 2) * level.size();
      for (std::size_t c = 0; c < level.size(); ++c) F.set(3, base + c, level[c]);
      lifted.push_back(F);
    }
    ScriptedForecaster sf(joint.record.forecasts);
    ScriptedReality sr(joint.record.outcomes);
    MergedEmbedding merged(sf, sr);
    ScriptedSceptic ss(lifted);
    const auto m = run_merged(config_for(3, false), merged, ss);
    const auto a = joint.ledger.trajectory();
    const auto b = m.ledger.trajectory();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(KAhead, FullHorizonIsJointTest) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Arbitrary f(seed);
    RandomBets s(seed + 7, 0.1);
    RandomOutcomes r(seed + 9);
    const auto joint = run_joint_test(config_for(4, false), f, s, r);
    auto cfg = config_for(4, false);
    cfg.K = 4;
    ScriptedForecaster sf(joint.record.forecasts);
    ScriptedSceptic ss(joint.record.sceptic_moves);
    ScriptedReality sr(joint.record.outcomes);
    EXPECT_EQ(run_k_ahead(cfg, sf, ss, sr).ledger.trajectory(), joint.ledger.trajectory());
  }
}

// With K = 1 every step is a one-step bet: K_n = K_{n-1} + f_n(y_n) - sum_y f_n(y) P_n(y).
TEST(KAhead, OneStepForm) {
  Arbitrary f(1);
  RandomBets s(2, 0.2);
  RandomOutcomes r(3);
  auto cfg = config_for(5, false);
  cfg.K = 1;
  const auto t = run_k_ahead(cfg, f, s, r);
  const auto traj = t.ledger.trajectory();
  for (int n = 1; n <= 5; ++n) {
    const auto& p = t.record.forecasts[static_cast<std::size_t>(n) - 1];
    const auto& move = t.record.sceptic_moves[static_cast<std::size_t>(n) - 1];
    ASSERT_EQ(p.horizon(), 1);
    const double expected = traj[static_cast<std::size_t>(n) - 1] +
                            move.value(1, static_cast<std::size_t>(t.record.outcomes[static_cast<std::size_t>(n) - 1])) -
                            (move.value(1, 0) * p.weight(0) + move.value(1, 1) * p.weight(1));
    EXPECT_NEAR(traj[static_cast<std::size_t>(n)], expected, 1e-14);
  }
}

TEST(KAhead, LongerForecastsAreMarginalized) {
  Conditioning f(ProbMeasure::uniform(2, 4));
  ZeroSceptic s;
  RandomOutcomes r(1);
  auto cfg = config_for(4);
  cfg.K = 2;
  const auto t = run_k_ahead(cfg, f, s, r);
  EXPECT_EQ(t.record.forecasts[0].horizon(), 2);
  EXPECT_EQ(t.record.forecasts[3].horizon(), 1);
}

TEST(GeneralFutures, ShortTicketExample) {
  Conditioning f(ProbMeasure::uniform(2, 2));
  auto f1 = TicketPortfolio::zero(2, 1, 2);
  f1.set(Sequence{0}, 1.0);
  ScriptedSceptic s({f1, TicketPortfolio::zero(2, 1, 1)});
  ScriptedReality r({0, 1});
  const auto t = run_general_futures(config_for(2), f, s, r);
  const auto& e = t.ledger.entries();
  ASSERT_GE(e.size(), 3u);
  EXPECT_TRUE(e[1].provisional);
  EXPECT_DOUBLE_EQ(e[1].value, 1.5);
  EXPECT_DOUBLE_EQ(e[2].value, 1.5);
  EXPECT_FALSE(e[2].provisional);
}

TEST(GeneralFutures, FullLengthTicketsMatchJointTest) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Arbitrary f(seed);
    RandomBets s(seed + 3, 0.1);
    RandomOutcomes r(seed + 4);
    const auto joint = run_joint_test(config_for(3, false), f, s, r);
    std::vector<TicketPortfolio> moves;
    for (const auto& m : joint.record.sceptic_moves) {
      auto g = TicketPortfolio::zero(2, 1, m.max_length());
      const auto src = m.level(m.max_length());
      std::copy(src.begin(), src.end(), g.mutable_level(m.max_length()).begin());
      moves.push_back(g);
    }
    ScriptedForecaster sf(joint.record.forecasts);
    ScriptedSceptic ss(moves);
    ScriptedReality sr(joint.record.outcomes);
    const auto a = joint.ledger.trajectory();
    const auto b = run_general_futures(config_for(3, false), sf, ss, sr).ledger.trajectory();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(NormalizeO, IdentityAndDomain) {
  auto f = TicketPortfolio::zero(2, 1, 3);
  f.set(Sequence{1, 0}, 0.3);
  EXPECT_EQ(normalize_O(f, Sequence{1}, 0.0), f);
  EXPECT_THROW((void)normalize_O(f, Sequence{1, 0, 1}, 1.0), InvalidArgument);
  const auto g = normalize_O(f, Sequence{1}, 0.5);
  EXPECT_DOUBLE_EQ(g.value(Sequence{1}), 0.5);
  EXPECT_DOUBLE_EQ(g.value(Sequence{1, 0}), -0.2);
  EXPECT_DOUBLE_EQ(g.value(Sequence{1, 1}), -0.5);
}

TEST(NormalizeO, SweepLeavesOnlyFinalTickets) {
  CounterRng rng(5);
  auto f = TicketPortfolio::zero(2, 1, 3);
  for (int len = 1; len <= 3; ++len)
    for (double& v : f.mutable_level(len)) v = rng.uniform(-1, 1);
  const auto g = sweep_to_final(f);
  for (int len = 1; len < 3; ++len)
    for (double v : g.level(len)) EXPECT_EQ(v, 0.0);
}

TEST(Radical, AdditiveZeroAndMultiplicativeNeutral) {
  Arbitrary f(1);
  ZeroSceptic s;
  PlayConfig cfg = config_for(2);
  cfg.steps = 5;
  cfg.protocol = ProtocolId::RadicalAdditive;
  for (double v : run_radical(cfg, f, s).ledger.trajectory()) EXPECT_EQ(v, 1.0);

  // G_{n-1} = Q_{n-1}: the multiplier is sum Q_n = 1.
  class Echo final : public Sceptic {
   public:
    TicketPortfolio move(const PlayView& view, const MoveDomain&) override {
      const auto& q = view.record.forecasts.back();
      return TicketPortfolio(2, q.horizon(), std::vector<double>(q.weights().begin(), q.weights().end()));
    }
    std::unique_ptr<Sceptic> clone() const override { return std::make_unique<Echo>(); }
  } echo;
  Arbitrary f2(2);
  cfg.protocol = ProtocolId::RadicalMultiplicative;
  for (double v : run_radical(cfg, f2, echo).ledger.trajectory()) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Radical, CorrespondenceExample) {
  const ProbMeasure q(2, 1, {0.5, 0.5});
  const auto F = additive_from_multiplicative(TicketPortfolio(2, 1, {0.25, 0.75}), q, 2.0);
  EXPECT_DOUBLE_EQ(F.value(1, 0), 1.0);
  const auto G = multiplicative_from_additive(F, q, 2.0);
  EXPECT_NEAR(G.value(1, 0), 0.25, 1e-15);
  EXPECT_NEAR(G.value(1, 1), 0.75, 1e-15);
}

TEST(Radical, MultiplicativeRequiresUnitMass) {
  Arbitrary f(1);
  ScriptedSceptic s({TicketPortfolio(2, 1, {0.5, 0.6})});
  PlayConfig cfg = config_for(1);
  cfg.steps = 2;
  cfg.protocol = ProtocolId::RadicalMultiplicative;
  EXPECT_THROW(run_radical(cfg, f, s), ProtocolViolation);
}

TEST(Decision, BayesTieBreakAndHandExample) {
  const LossFn flat(3, 2, 1, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  EXPECT_EQ(bayes_decision(flat, ProbMeasure::uniform(2, 1)), 0);
  const LossFn miss(2, 2, 1, {0, 1, 1, 0});
  EXPECT_EQ(bayes_decision(miss, ProbMeasure(2, 1, {0.3, 0.7})), 1);
}

TEST(Ledger, CsvExport) {
  const auto t = worked_play({0, 0});
  EXPECT_EQ(ledger_csv(t.ledger), "step,tag,capital\n0,K_0,1\n1,K_1,1.25\n2,K_2,1.75\n");
}

TEST(Protocols, NamesRoundTrip) {
  for (auto id : {ProtocolId::JointTest, ProtocolId::Decision, ProtocolId::RadicalMultiplicative})
    EXPECT_EQ(protocol_from_string(to_string(id)), id);
  EXPECT_THROW(protocol_from_string("nope"), InvalidArgument);
}

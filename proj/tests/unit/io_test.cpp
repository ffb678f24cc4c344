#include <gtest/gtest.h>

#include <cstring>

#include "diachronic/error.hpp"
#include "diachronic/io.hpp"
#include "diachronic/strategies.hpp"

using namespace diachronic;
using measures::ProbMeasure;

namespace {

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(MeasureJson, RoundTripIsBitStable) {
  CounterRng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int A = 2 + static_cast<int>(rng.below(3));
    const int h = static_cast<int>(rng.below(4));
    std::vector<double> w(measures::seq_index::count(A, h));
    for (double& v : w) v = 1e-6 + rng.uniform();
    const auto p = ProbMeasure::from_unnormalized(A, h, w);
    const auto text = io::to_json(p).dump();
    const auto back = io::measure_from_json(io::Json::parse(text));
    EXPECT_TRUE(same_bits(p.weights(), back.weights()));
    EXPECT_EQ(back.horizon(), h);
  }
}

TEST(MeasureJson, LabelsAndErrors) {
  const measures::ObsSpace space({"dem", "rep"});
  const auto p = ProbMeasure::uniform(2, 1);
  const auto j = io::to_json(p, space);
  EXPECT_EQ(j.at("labels")[1], "rep");
  measures::ObsSpace read({"a", "b"});
  (void)io::measure_from_json(j, &read);
  EXPECT_EQ(read, space);
  EXPECT_THROW((void)io::measure_from_json(io::Json{{"horizon", 2}, {"labels", {"0", "1"}}, {"weights", {0.5, 0.5}}}),
               InvalidArgument);
  EXPECT_THROW((void)io::measure_from_json(io::Json{{"weights", {0.5, 0.5}}}), InvalidArgument);
}

TEST(TranscriptJson, RoundTripReplaysToSameLedger) {
  auto model = std::make_shared<strategies::IidModel>(std::vector<double>{0.3, 0.7});
  strategies::ConditioningForecaster f(model);
  strategies::ModelReality r(model, 3, std::make_shared<strategies::RandomTableLoss>(2));
  strategies::BayesDecisionMaker dm;
  strategies::RandomPredictableSceptic s(8, 0.05);
  engine::PlayConfig cfg;
  cfg.protocol = engine::ProtocolId::Decision;
  cfg.N = 6;
  cfg.K = 2;
  const auto t = engine::run_decision(cfg, f, s, r, dm);
  const auto j = io::to_json(t);
  EXPECT_EQ(j.at("protocol"), "decision");
  EXPECT_EQ(j.at("steps").size(), 6U);
  const auto back = io::transcript_from_json(io::Json::parse(j.dump()));
  EXPECT_EQ(back.config, t.config);
  EXPECT_EQ(back.ledger, t.ledger);
  EXPECT_EQ(back.record.outcomes, t.record.outcomes);
  EXPECT_EQ(back.record.decisions, t.record.decisions);
  EXPECT_EQ(engine::replay(back).ledger, t.ledger);
}

TEST(DualityJson, RoundTrip) {
  const auto inst = duality::random_instance({}, 5);
  const auto back = io::duality_instance_from_json(io::Json::parse(io::to_json(inst).dump()));
  EXPECT_EQ(back.P, inst.P);
  EXPECT_EQ(back.S, inst.S);
  ASSERT_EQ(back.branches.size(), inst.branches.size());
  EXPECT_EQ(back.branches[1], inst.branches[1]);
}

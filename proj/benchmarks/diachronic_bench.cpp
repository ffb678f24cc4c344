#include <benchmark/benchmark.h>

#include "diachronic/duality.hpp"
#include "diachronic/harness.hpp"
#include "diachronic/market.hpp"
#include "diachronic/strategies.hpp"

using namespace diachronic;

namespace {

// One decision play per iteration; items = steps.
void BM_DecisionPlay(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const int K = static_cast<int>(state.range(1));
  auto model = std::make_shared<strategies::IidModel>(std::vector<double>{0.4, 0.6});
  engine::PlayConfig cfg;
  cfg.protocol = engine::ProtocolId::Decision;
  cfg.N = N;
  cfg.K = K;
  cfg.enforce_nonnegativity = false;
  std::uint64_t stream = 0;
  for (auto _ : state) {
    cfg.stream = stream++;
    strategies::ConditioningForecaster f(model);
    strategies::ModelReality r(model, 1, std::make_shared<strategies::IndicatorLoss>(2, 0));
    strategies::RandomPredictableSceptic s(2, 0.01);
    strategies::BayesDecisionMaker dm;
    benchmark::DoNotOptimize(engine::run_decision(cfg, f, s, r, dm));
  }
  state.SetItemsProcessed(state.iterations() * N);
}
BENCHMARK(BM_DecisionPlay)->Args({100, 1})->Args({100, 4})->Args({1000, 7});

// A full theorem-optimal replication at desk scale through the harness.
void BM_TheoremOptimalReplication(benchmark::State& state) {
  auto c = harness::ExperimentConfig::from_json(harness::Json{
      {"experiment", "theorem_optimal"},
      {"protocol", "decision"},
      {"N", 1000},
      {"K", 7},
      {"epsilon", 0.1},
      {"reality", {{"kind", "model"}, {"model", {{"kind", "iid"}, {"marginal", {0.5, 0.5}}}}, {"losses", {{"kind", "indicator"}, {"position", 0}}}}},
      {"decision_maker", {{"kind", "constant"}, {"decision", 1}}},
      {"sceptic", {{"kind", "hoeffding"}}},
      {"replications", 1},
      {"threads", 1}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(harness::run_theorem_optimal(c));
    ++c.seed;
  }
}
BENCHMARK(BM_TheoremOptimalReplication)->Unit(benchmark::kMillisecond);

// Limit submissions around a mid price with a market order every fourth event.
void BM_OrderBookStream(benchmark::State& state) {
  const auto events = state.range(0);
  CounterRng rng(3);
  for (auto _ : state) {
    market::OrderBook book;
    for (std::int64_t e = 0; e < events; ++e) {
      const auto side = rng.below(2) ? market::Side::Buy : market::Side::Sell;
      const auto qty = static_cast<market::Quantity>(1 + rng.below(9));
      if (rng.below(4) == 0) {
        benchmark::DoNotOptimize(book.submit_market(0, side, qty));
      } else {
        const auto offset = static_cast<market::Price>(1 + rng.below(200));
        book.submit_limit(0, side, side == market::Side::Buy ? 5000 - offset : 5000 + offset, qty);
      }
    }
    benchmark::DoNotOptimize(book.best_bid());
  }
  state.SetItemsProcessed(state.iterations() * events);
}
BENCHMARK(BM_OrderBookStream)->Arg(1000)->Arg(10000);

void BM_DualitySolve(benchmark::State& state) {
  duality::RandomInstanceSpec spec;
  spec.horizon = static_cast<int>(state.range(0));
  spec.branches = 3;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto inst = duality::random_instance(spec, seed++);
    inst.S = duality::first_values(inst, duality::random_test_tickets(inst, seed));
    benchmark::DoNotOptimize(duality::solve_primal(inst));
    benchmark::DoNotOptimize(duality::solve_dual(inst));
  }
}
BENCHMARK(BM_DualitySolve)->Arg(2)->Arg(3)->Arg(5);

}  // namespace
BENCHMARK_MAIN();

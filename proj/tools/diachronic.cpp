// Command-line front end: runs experiments from a JSON config, checks LP
// duality instances, replays order streams and evaluates bounds.
//
// Exit codes: 0 when every configured assertion passes, 1 when one fails,
// 2 on bad input.

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <optional>

#include "diachronic/bounds.hpp"
#include "diachronic/duality.hpp"
#include "diachronic/error.hpp"
#include "diachronic/harness.hpp"
#include "diachronic/io.hpp"
#include "diachronic/market.hpp"

namespace {

using namespace diachronic;
using io::Json;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kBadInput = 2;

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<unsigned> threads;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the config's seed");
  cmd->add_option("--reps", o.reps, "override the number of replications");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "write <out>.json and <out>.csv");
}

int run_config(const RunOptions& o, const std::optional<std::string>& forced) {
  auto c = harness::ExperimentConfig::from_json(io::read_json_file(o.config));
  if (forced) c.experiment = *forced;
  if (o.seed) c.seed = *o.seed;
  if (o.reps) c.replications = *o.reps;
  if (o.threads) c.threads = *o.threads;
  if (!o.out.empty()) {
    c.out_json = o.out + ".json";
    c.out_csv = o.out + ".csv";
  }
  const auto report = harness::run_experiment(c);
  harness::write_report(report, c);
  Json summary = report.to_json();
  summary["results"].erase("transcript");
  std::cout << summary.dump(2) << '\n';
  return report.passed() ? kPass : kFail;
}

Json lp_check(const duality::DualityInstance& inst, double tolerance, bool& ok) {
  const auto primal = duality::solve_primal(inst);
  const auto dual = duality::solve_dual(inst);
  Json out{{"primal", {{"status", duality::to_string(primal.status)}, {"objective", primal.objective}, {"X", primal.X}}},
           {"dual", {{"status", duality::to_string(dual.status)}, {"objective", dual.objective}, {"Z", dual.Z}}}};
  const bool both = primal.status == duality::LpStatus::Optimal && dual.status == duality::LpStatus::Optimal;
  if (both) {
    const double gap = std::abs(primal.objective - dual.objective);
    out["gap"] = gap;
    out["tickets"] = io::to_json(duality::tickets_from_dual(inst, dual.Z));
    out["dominating_first_values"] = duality::dominate_supermartingale(inst, dual.Z);
    ok = gap <= tolerance * std::max(1.0, std::abs(primal.objective));
  } else {
    out["gap"] = nullptr;
    ok = false;
  }
  out["passed"] = ok;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and verify diachronic forecasting protocols"};
  app.require_subcommand(1);

  RunOptions sim, enu, lln;
  add_run_options(app.add_subcommand("simulate", "run a play, theorem-optimal or lower-bounds experiment"), sim);
  add_run_options(app.add_subcommand("enumerate", "exact conditional expectations over all plays"), enu);
  add_run_options(app.add_subcommand("lln", "K-step law of large numbers experiment"), lln);

  auto* lp = app.add_subcommand("lp-check", "solve the primal and dual of a duality instance");
  std::string instance_path;
  std::optional<std::uint64_t> random_seed;
  double lp_tol = 1e-9;
  auto* lp_file = lp->add_option("instance", instance_path, "DualityInstance JSON")->check(CLI::ExistingFile);
  lp->add_option("--random", random_seed, "use a random instance with this seed")->excludes(lp_file);
  lp->add_option("--tolerance", lp_tol, "allowed relative duality gap");

  auto* mkt = app.add_subcommand("market-demo", "replay an order stream through one book");
  std::string orders_path;
  std::string fills_out;
  mkt->add_option("orders", orders_path, "CSV: timestamp,side,kind,price,qty[,expiry[,owner]]")
      ->required()
      ->check(CLI::ExistingFile);
  mkt->add_option("--out", fills_out, "write the fills CSV here instead of stdout");

  auto* bnd = app.add_subcommand("bounds", "evaluate a bound from named parameters");
  std::string bound_name;
  int K = 1;
  int N = 1;
  double epsilon = 0.1;
  double gamma = 0.8;
  double C = 1.0;
  double delta = 0.1;
  double U = 0.0;
  bnd->add_option("name", bound_name, "bound to evaluate")
      ->required()
      ->check(CLI::IsMember({"regret-threshold", "regret-chain", "no-restriction", "regret-scale", "hoeffding",
                             "risk-aggregation", "feller", "lln-threshold", "lower-bound", "corollary"}));
  bnd->add_option("--K", K);
  bnd->add_option("--N", N);
  bnd->add_option("--epsilon", epsilon);
  bnd->add_option("--gamma", gamma);
  bnd->add_option("--C", C);
  bnd->add_option("--delta", delta);
  bnd->add_option("--U", U);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("simulate")) return run_config(sim, std::nullopt);
    if (app.got_subcommand("enumerate")) return run_config(enu, "enumerate");
    if (app.got_subcommand("lln")) return run_config(lln, "lln");

    if (app.got_subcommand("lp-check")) {
      if (instance_path.empty() && !random_seed) throw InvalidArgument("give an instance file or --random SEED");
      const auto inst = random_seed ? duality::random_instance({}, *random_seed)
                                    : io::duality_instance_from_json(io::read_json_file(instance_path));
      bool ok = false;
      Json out = lp_check(inst, lp_tol, ok);
      if (random_seed) out["instance"] = io::to_json(inst);
      std::cout << out.dump(2) << '\n';
      return ok ? kPass : kFail;
    }

    if (app.got_subcommand("market-demo")) {
      const auto result = market::replay_orders(market::parse_order_csv(io::read_file(orders_path)));
      const auto csv = market::fills_csv(result.fills);
      if (fills_out.empty())
        std::cout << csv;
      else
        io::write_file(fills_out, csv);
      std::cerr << result.fills.size() << " fills, " << result.expired.size() << " expired, book "
                << (result.always_valid ? "valid" : "INVALID") << " throughout\n";
      return result.always_valid ? kPass : kFail;
    }

    Json out{{"bound", bound_name},
             {"input", {{"K", K}, {"N", N}, {"epsilon", epsilon}, {"gamma", gamma}, {"C", C}, {"delta", delta}, {"U", U}}}};
    if (bound_name == "regret-threshold") out["value"] = bounds::regret_threshold(K, N, epsilon);
    if (bound_name == "regret-chain") out["value"] = bounds::regret_chain_bound(C, K, N, gamma);
    if (bound_name == "no-restriction") out["value"] = bounds::no_restriction_bound(delta, K, N);
    if (bound_name == "regret-scale") out["value"] = bounds::regret_scale(K, N);
    if (bound_name == "hoeffding") {
      const auto h = bounds::hoeffding_bound(U, N / K, K, N);
      out["value"] = {{"by_steps", h.by_steps}, {"by_blocks", h.by_blocks}};
    }
    if (bound_name == "risk-aggregation") {
      const double a = static_cast<double>(K) / (2.0 * N);
      const auto inf = bounds::risk_aggregation_inf(a, C, K);
      out["value"] = {{"midpoint", bounds::risk_aggregation_midpoint(C, K, N)},
                      {"midpoint_quadrature", bounds::risk_aggregation_E(a, C, K, C / (2.0 * K))},
                      {"inf", inf.value},
                      {"argmin_t", inf.t}};
    }
    if (bound_name == "feller") out["value"] = bounds::feller_bound(C, K, N);
    if (bound_name == "lln-threshold") out["value"] = bounds::lln_threshold(K, N, epsilon);
    if (bound_name == "lower-bound") {
      const auto lb = bounds::lower_bound_eval(K, N, epsilon);
      out["value"] = {{"threshold", lb.threshold},
                      {"floor", lb.floor},
                      {"improved_floor", lb.improved_floor},
                      {"condition_holds", lb.condition_holds}};
    }
    if (bound_name == "corollary") out["value"] = bounds::corollary_threshold(K, N, epsilon);
    std::cout << out.dump(2) << '\n';
    return kPass;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
}

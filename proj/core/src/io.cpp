#include "diachronic/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "diachronic/error.hpp"

namespace diachronic::io {

using measures::ProbMeasure;

namespace {

const Json& field(const Json& j, const char* name) {
  require(j.is_object() && j.contains(name), std::string("JSON object lacks field '") + name + "'");
  return j.at(name);
}

template <class T>
T get(const Json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad JSON field '") + name + "': " + e.what());
  }
}

template <class T>
void read_optional(const Json& j, const char* name, T& out) {
  if (j.contains(name)) out = get<T>(j, name);
}

}  // namespace

Json to_json(const ProbMeasure& p) { return to_json(p, measures::ObsSpace::numeric(p.alphabet())); }

Json to_json(const ProbMeasure& p, const measures::ObsSpace& labels) {
  require(labels.size() == p.alphabet(), "label count differs from the alphabet size");
  const auto w = p.weights();
  return Json{{"horizon", p.horizon()}, {"labels", labels.labels()}, {"weights", std::vector<double>(w.begin(), w.end())}};
}

ProbMeasure measure_from_json(const Json& j, measures::ObsSpace* labels) {
  const int horizon = get<int>(j, "horizon");
  const auto weights = get<std::vector<double>>(j, "weights");
  measures::ObsSpace space = j.contains("labels") ? measures::ObsSpace(get<std::vector<std::string>>(j, "labels"))
                                                  : measures::ObsSpace::numeric(get<int>(j, "alphabet"));
  require(weights.size() == measures::seq_index::count(space.size(), horizon),
          "weight count must be |labels|^horizon");
  if (labels != nullptr) *labels = space;
  return ProbMeasure::stored(space.size(), horizon, weights);
}

Json to_json(const measures::LossFn& loss) {
  const auto t = loss.table();
  return Json{{"decisions", loss.decisions()},
              {"alphabet", loss.alphabet()},
              {"horizon", loss.horizon()},
              {"table", std::vector<double>(t.begin(), t.end())}};
}

measures::LossFn loss_from_json(const Json& j) {
  return measures::LossFn(get<int>(j, "decisions"), get<int>(j, "alphabet"), get<int>(j, "horizon"),
                          get<std::vector<double>>(j, "table"));
}

Json to_json(const engine::TicketPortfolio& f) {
  Json levels = Json::array();
  for (int len = f.min_length(); len <= f.max_length(); ++len) {
    const auto v = f.level(len);
    levels.push_back(std::vector<double>(v.begin(), v.end()));
  }
  return Json{{"alphabet", f.alphabet()},
              {"min_length", f.min_length()},
              {"max_length", f.max_length()},
              {"levels", std::move(levels)}};
}

engine::TicketPortfolio portfolio_from_json(const Json& j) {
  const int min_len = get<int>(j, "min_length");
  const int max_len = get<int>(j, "max_length");
  auto f = engine::TicketPortfolio::zero(get<int>(j, "alphabet"), min_len, max_len);
  const auto levels = get<std::vector<std::vector<double>>>(j, "levels");
  require(levels.size() == static_cast<std::size_t>(max_len - min_len + 1), "one level per ticket length expected");
  for (int len = min_len; len <= max_len; ++len) {
    const auto& v = levels[static_cast<std::size_t>(len - min_len)];
    if (v.empty()) continue;  // untouched zero level
    auto out = f.mutable_level(len);
    require(v.size() == out.size(), "ticket level has the wrong size");
    std::copy(v.begin(), v.end(), out.begin());
  }
  return f;
}

Json to_json(const engine::PlayConfig& c) {
  return Json{{"protocol", engine::to_string(c.protocol)},
              {"N", c.N},
              {"K", c.K},
              {"alphabet", c.alphabet},
              {"decisions", c.decisions},
              {"steps", c.steps},
              {"loss_mode", c.loss_mode == engine::LossMode::Full ? "full" : "truncated"},
              {"enforce_nonnegativity", c.enforce_nonnegativity},
              {"stream", c.stream}};
}

engine::PlayConfig play_config_from_json(const Json& j) {
  engine::PlayConfig c;
  if (j.contains("protocol")) c.protocol = engine::protocol_from_string(get<std::string>(j, "protocol"));
  read_optional(j, "N", c.N);
  read_optional(j, "K", c.K);
  read_optional(j, "alphabet", c.alphabet);
  read_optional(j, "decisions", c.decisions);
  read_optional(j, "steps", c.steps);
  read_optional(j, "enforce_nonnegativity", c.enforce_nonnegativity);
  read_optional(j, "stream", c.stream);
  if (j.contains("loss_mode")) {
    const auto mode = get<std::string>(j, "loss_mode");
    require(mode == "full" || mode == "truncated", "loss_mode must be 'full' or 'truncated'");
    c.loss_mode = mode == "full" ? engine::LossMode::Full : engine::LossMode::Truncated;
  }
  return c;
}

Json to_json(const engine::PlayTranscript& t) {
  const auto& r = t.record;
  const std::size_t n = std::max({r.losses.size(), r.forecasts.size(), r.merged_forecasts.size(),
                                  r.decisions.size(), r.sceptic_moves.size(), r.outcomes.size()});
  Json steps = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    Json s{{"step", i + 1}};
    if (i < r.losses.size()) s["loss"] = to_json(r.losses[i]);
    if (i < r.forecasts.size()) s["forecast"] = to_json(r.forecasts[i]);
    if (i < r.merged_forecasts.size()) {
      const auto w = r.merged_forecasts[i].weights();
      s["merged_forecast"] = Json{{"horizon", r.merged_forecasts[i].horizon()},
                                  {"weights", std::vector<double>(w.begin(), w.end())}};
    }
    if (i < r.decisions.size()) s["decision"] = r.decisions[i];
    if (i < r.sceptic_moves.size()) s["sceptic"] = to_json(r.sceptic_moves[i]);
    if (i < r.outcomes.size()) s["outcome"] = r.outcomes[i];
    steps.push_back(std::move(s));
  }
  Json ledger = Json::array();
  for (const auto& e : t.ledger.entries())
    ledger.push_back(Json{{"step", e.step}, {"tag", engine::ledger_tag(e)}, {"provisional", e.provisional},
                          {"value", e.value}});
  return Json{{"protocol", engine::to_string(t.config.protocol)},
              {"config", to_json(t.config)},
              {"steps", std::move(steps)},
              {"ledger", std::move(ledger)},
              {"status", engine::to_string(t.status)}};
}

engine::PlayTranscript transcript_from_json(const Json& j) {
  engine::PlayTranscript t;
  t.config = play_config_from_json(field(j, "config"));
  for (const auto& s : field(j, "steps")) {
    if (s.contains("loss")) t.record.losses.push_back(loss_from_json(s.at("loss")));
    if (s.contains("forecast")) t.record.forecasts.push_back(measure_from_json(s.at("forecast")));
    if (s.contains("merged_forecast")) {
      const auto& m = s.at("merged_forecast");
      t.record.merged_forecasts.emplace_back(t.config.alphabet, get<int>(m, "horizon"),
                                             get<std::vector<double>>(m, "weights"));
    }
    if (s.contains("decision")) t.record.decisions.push_back(get<int>(s, "decision"));
    if (s.contains("sceptic")) t.record.sceptic_moves.push_back(portfolio_from_json(s.at("sceptic")));
    if (s.contains("outcome")) t.record.outcomes.push_back(get<int>(s, "outcome"));
  }
  for (const auto& e : field(j, "ledger"))
    t.ledger.record(get<int>(e, "step"), get<bool>(e, "provisional"), get<double>(e, "value"));
  const auto status = get<std::string>(j, "status");
  t.status = status == engine::to_string(engine::PlayStatus::Completed) ? engine::PlayStatus::Completed
                                                                         : engine::PlayStatus::ScepticBankrupt;
  return t;
}

Json to_json(const duality::DualityInstance& inst) {
  Json branches = Json::array();
  for (const auto& row : inst.branches) {
    Json r = Json::array();
    for (const auto& q : row) r.push_back(to_json(q));
    branches.push_back(std::move(r));
  }
  return Json{{"P", to_json(inst.P)}, {"branches", std::move(branches)}, {"S", inst.S}};
}

duality::DualityInstance duality_instance_from_json(const Json& j) {
  duality::DualityInstance inst{measure_from_json(field(j, "P")), {}, get<std::vector<std::vector<double>>>(j, "S")};
  for (const auto& row : field(j, "branches")) {
    std::vector<ProbMeasure> r;
    for (const auto& q : row) r.push_back(measure_from_json(q));
    inst.branches.push_back(std::move(r));
  }
  inst.validate();
  return inst;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path);
  out << text;
}

}  // namespace diachronic::io

#pragma once

// JSON forms of measures, transcripts and duality instances.
//
// Doubles are written in nlohmann's shortest round-trip form, so reading a
// document back gives bit-identical values.

#include <nlohmann/json.hpp>
#include <string>

#include "diachronic/duality.hpp"
#include "diachronic/engine.hpp"
#include "diachronic/measures.hpp"

namespace diachronic::io {

using Json = nlohmann::json;

/// {"horizon", "labels", "weights"}; labels default to 0..|Y|-1.
Json to_json(const measures::ProbMeasure& p);
Json to_json(const measures::ProbMeasure& p, const measures::ObsSpace& labels);
/// Throws InvalidArgument on missing fields or a weight count that is not |labels|^horizon.
measures::ProbMeasure measure_from_json(const Json& j, measures::ObsSpace* labels = nullptr);

Json to_json(const measures::LossFn& loss);
measures::LossFn loss_from_json(const Json& j);

Json to_json(const engine::TicketPortfolio& f);
engine::TicketPortfolio portfolio_from_json(const Json& j);

Json to_json(const engine::PlayConfig& config);
/// Missing fields keep their PlayConfig defaults.
engine::PlayConfig play_config_from_json(const Json& j);

/// {"protocol", "config", "steps": [...], "ledger": [...], "status"}; each
/// step lists the moves announced at it in protocol order.
Json to_json(const engine::PlayTranscript& t);
engine::PlayTranscript transcript_from_json(const Json& j);

Json to_json(const duality::DualityInstance& inst);
duality::DualityInstance duality_instance_from_json(const Json& j);

/// Reads a whole file; throws InvalidArgument when it cannot be opened.
std::string read_file(const std::string& path);
Json read_json_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace diachronic::io

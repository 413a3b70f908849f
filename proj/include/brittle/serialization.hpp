#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "brittle/posterior.hpp"
#include "brittle/scenarios.hpp"
#include "brittle/solver.hpp"

namespace brittle {

using Json = nlohmann::json;

// Rejects non-objects, missing required fields, and any field outside the
// declared set; `context` names the offending object in error messages.
void require_fields(const Json& obj, const std::string& context,
                    std::initializer_list<const char*> required,
                    std::initializer_list<const char*> optional = {});

// Numbers that may be infinite are carried as the strings "-inf" / "+inf"
// (and NaN as "nan") since JSON has no literal for them.
Json number_to_json(double value);
double number_from_json(const Json& value, const std::string& context);

Json to_json(const Interval& interval);
Interval interval_from_json(const Json& value, const std::string& context);

Json to_json(const DiscreteMeasure& measure);
DiscreteMeasure measure_from_json(const Json& value);

Json to_json(const MomentMap& map);
MomentMap moment_map_from_json(const Json& value);

Json to_json(const QuantityOfInterest& phi);
QuantityOfInterest qoi_from_json(const Json& value);

Json to_json(const Observation& obs);
Observation observation_from_json(const Json& value);

Json to_json(const DataProbabilityBand& band);
DataProbabilityBand band_from_json(const Json& value);

Json to_json(const PriorClassSpec& spec);
PriorClassSpec prior_class_from_json(const Json& value);

Json to_json(const SolveResult& result);
Json to_json(const BoundSandwich& sandwich);
Json to_json(const ScenarioReport& report);

}  // namespace brittle

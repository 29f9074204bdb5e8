#pragma once

#include <string>

#include <json.hpp>

#include "iqr/basis.hpp"
#include "iqr/bench.hpp"
#include "iqr/rule.hpp"
#include "iqr/sampling.hpp"

namespace iqr {

using Json = nlohmann::ordered_json;

// Readers throw InvalidSpec on missing or ill-typed fields. Doubles are
// written with 17 significant digits, so rules round-trip bit for bit.

Json to_json(const BasisSpec& spec);
BasisSpec basis_from_json(const Json& j);

/// {spec, K, nodes (one array per node), weights, source_indices, fixed_mask}
Json to_json(const QuadratureRule& rule);
QuadratureRule rule_from_json(const Json& j);

Json to_json(const DistributionSpec& spec);
DistributionSpec distribution_from_json(const Json& j);

Json to_json(const SampleProvenance& p, Index d, Index count);

Json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const Json& j);

/// Config echo, per repetition seeds and diagnostics, error rows and slopes.
Json to_json(const ExperimentReport& report);

/// Throws InvalidSpec on malformed text.
Json parse_json(const std::string& text);

/// Throws IoError.
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace iqr

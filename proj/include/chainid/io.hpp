#pragma once

#include <string>
#include <vector>

#include "chainid/graph.hpp"
#include "chainid/learning.hpp"
#include "chainid/linalg.hpp"
#include "chainid/sem.hpp"
#include "json.hpp"

namespace chainid {

using Json = nlohmann::ordered_json;

// Graph: {"n", "components", "directed_edges", "undirected_edges"}.
Json graph_to_json(const ChainGraph& graph);
ChainGraph graph_from_json(const Json& j);

// Covariance: {"labels", "matrix"} with row-major nested arrays.
Json covariance_to_json(const CovMatrix& sigma);
CovMatrix covariance_from_json(const Json& j);

// Graph fields plus "weights" (n x n, weights[u][v] for v -> u) and
// "noise_covs" (one block per component, in component order).
Json sem_to_json(const AmpSem& sem);
AmpSem sem_from_json(const Json& j);

// {"order", "partition", "step_values", "graph" (or null), "mode"}.
Json learn_result_to_json(const LearnResult& result);

// A bare [[...], ...] list or any object with a "components" field.
std::vector<VertexSet> components_from_json(const Json& j);

// Header row x0..x{d-1}; covariance CSV is the bare matrix with the same header.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);
std::string covariance_to_csv(const CovMatrix& sigma);
CovMatrix covariance_from_csv(const std::string& text);

// Shortest-lossless JSON for objects; CSV numbers use 17 significant digits.
std::string format_double(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Throws ArgumentError with the parser message on malformed input.
Json parse_json(const std::string& text, const std::string& what);

}  // namespace chainid

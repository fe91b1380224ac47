#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scopt/linalg.hpp"

namespace scopt {

struct GraphEdge
{
    std::size_t i;
    std::size_t j;
    double weight;  ///< theta_ij / sqrt(theta_ii theta_jj)
};

struct CorrelationGraph
{
    std::vector<std::string> labels;
    std::vector<GraphEdge> edges;  ///< by decreasing |weight|, ties by (i, j)
};

/// Keeps the top_k nonzero off-diagonal entries (i < j) of theta by
/// |normalized value|. Labels default to the node index. Throws
/// InvalidArgument when top_k is 0 or a diagonal entry is not positive.
CorrelationGraph correlation_graph(const SymMatrix& theta, std::size_t top_k,
                                   std::vector<std::string> labels = {});

/// {nodes: [{id, label}], edges: [{i, j, weight, sign}]}.
nlohmann::json to_json(const CorrelationGraph& graph);

/// Undirected DOT graph; positive edges blue, negative black, pen width by |weight|.
std::string to_dot(const CorrelationGraph& graph);

/// Writes `<path>` as JSON and `<path>` with extension .dot next to it.
void export_correlation_graph(const SymMatrix& theta, std::size_t top_k, const std::filesystem::path& path,
                              std::vector<std::string> labels = {});

} // namespace scopt

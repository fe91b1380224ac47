#include "scopt/correlation_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scopt/errors.hpp"

namespace scopt {

CorrelationGraph correlation_graph(const SymMatrix& theta, std::size_t top_k, std::vector<std::string> labels)
{
    if (top_k == 0) {
        throw InvalidArgument("top_k must be at least 1");
    }
    const std::size_t n = theta.dim();
    if (labels.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back(std::to_string(i));
        }
    }
    if (labels.size() != n) {
        throw DimensionMismatch("got " + std::to_string(labels.size()) + " labels for " + std::to_string(n)
                                + " nodes");
    }
    const Matrix& a = theta.data();
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (!(a(ii, ii) > 0.0)) {
            throw InvalidArgument("diagonal entry " + std::to_string(i) + " is not positive");
        }
    }

    CorrelationGraph graph;
    graph.labels = std::move(labels);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            if (a(ii, jj) != 0.0) {
                graph.edges.push_back({i, j, a(ii, jj) / std::sqrt(a(ii, ii) * a(jj, jj))});
            }
        }
    }
    std::sort(graph.edges.begin(), graph.edges.end(), [](const GraphEdge& x, const GraphEdge& y) {
        if (std::abs(x.weight) != std::abs(y.weight)) {
            return std::abs(x.weight) > std::abs(y.weight);
        }
        return x.i != y.i ? x.i < y.i : x.j < y.j;
    });
    if (graph.edges.size() > top_k) {
        graph.edges.resize(top_k);
    }
    return graph;
}

nlohmann::json to_json(const CorrelationGraph& graph)
{
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < graph.labels.size(); ++i) {
        nodes.push_back({{"id", i}, {"label", graph.labels[i]}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const GraphEdge& e : graph.edges) {
        edges.push_back({{"i", e.i}, {"j", e.j}, {"weight", e.weight}, {"sign", e.weight > 0.0 ? 1 : -1}});
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

std::string to_dot(const CorrelationGraph& graph)
{
    std::ostringstream os;
    os.precision(6);
    os << "graph correlations {\n";
    for (std::size_t i = 0; i < graph.labels.size(); ++i) {
        os << "  n" << i << " [label=\"" << graph.labels[i] << "\"];\n";
    }
    for (const GraphEdge& e : graph.edges) {
        os << "  n" << e.i << " -- n" << e.j << " [color=" << (e.weight > 0.0 ? "blue" : "black")
           << ", penwidth=" << 1.0 + 4.0 * std::abs(e.weight) << ", label=\"" << e.weight << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

void export_correlation_graph(const SymMatrix& theta, std::size_t top_k, const std::filesystem::path& path,
                              std::vector<std::string> labels)
{
    const CorrelationGraph graph = correlation_graph(theta, top_k, std::move(labels));
    std::ofstream json_out(path);
    if (!json_out) {
        throw IoError("cannot write " + path.string());
    }
    json_out << to_json(graph).dump(2) << '\n';
    std::filesystem::path dot_path = path;
    dot_path.replace_extension(".dot");
    std::ofstream dot_out(dot_path);
    if (!dot_out) {
        throw IoError("cannot write " + dot_path.string());
    }
    dot_out << to_dot(graph);
}

} // namespace scopt

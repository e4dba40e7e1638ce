#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "kwgraph/graph.hpp"

namespace kwgraph {

/// Raised on malformed graph or vertex-function documents. The message names
/// the offending field, e.g. "edges[2].w: must be positive".
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Graph document:
///   {"vertices":[{"id":"a","mu":1.0},...],"edges":[{"u":"a","v":"b","w":2.0},...]}
/// Rejects nonpositive mu/w, unknown ids, duplicate edges and self-loops.
WeightedGraph parse_graph(const nlohmann::json& doc);
WeightedGraph load_graph(const std::string& path);

/// Vertex-function document: {"a":0.5,"b":-1.25,...}. Every graph vertex must
/// be present, unknown ids and non-finite values are rejected.
VertexFunction parse_vertex_function(const nlohmann::json& doc, const WeightedGraph& g);
VertexFunction load_vertex_function(const std::string& path, const WeightedGraph& g);

nlohmann::json vertex_function_to_json(const WeightedGraph& g, const VertexFunction& f);
nlohmann::json graph_to_json(const WeightedGraph& g);

}  // namespace kwgraph

#include "kwgraph/graph_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <utility>

namespace kwgraph {

namespace {

using nlohmann::json;

double number_field(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) throw ParseError(where + "." + key + ": missing");
    const json& v = obj.at(key);
    if (!v.is_number()) throw ParseError(where + "." + key + ": must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(where + "." + key + ": must be finite");
    return x;
}

std::string string_field(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) throw ParseError(where + "." + key + ": missing");
    const json& v = obj.at(key);
    if (!v.is_string()) throw ParseError(where + "." + key + ": must be a string");
    return v.get<std::string>();
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError("'" + path + "': invalid JSON: " + e.what());
    }
    return doc;
}

}  // namespace

WeightedGraph parse_graph(const json& doc) {
    if (!doc.is_object()) throw ParseError("graph: document must be a JSON object");
    if (!doc.contains("vertices") || !doc.at("vertices").is_array()) {
        throw ParseError("vertices: missing or not an array");
    }
    if (!doc.contains("edges") || !doc.at("edges").is_array()) {
        throw ParseError("edges: missing or not an array");
    }

    std::vector<std::string> ids;
    std::vector<double> mu;
    std::unordered_map<std::string, std::size_t> index;
    const json& vs = doc.at("vertices");
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const std::string where = "vertices[" + std::to_string(i) + "]";
        if (!vs[i].is_object()) throw ParseError(where + ": must be an object");
        std::string id = string_field(vs[i], where, "id");
        const double m = number_field(vs[i], where, "mu");
        if (m <= 0.0) throw ParseError(where + ".mu: must be positive");
        if (!index.emplace(id, ids.size()).second) {
            throw ParseError(where + ".id: duplicate vertex id '" + id + "'");
        }
        ids.push_back(std::move(id));
        mu.push_back(m);
    }
    if (ids.empty()) throw ParseError("vertices: must not be empty");

    std::vector<Edge> edges;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    const json& es = doc.at("edges");
    for (std::size_t i = 0; i < es.size(); ++i) {
        const std::string where = "edges[" + std::to_string(i) + "]";
        if (!es[i].is_object()) throw ParseError(where + ": must be an object");
        const std::string a = string_field(es[i], where, "u");
        const std::string b = string_field(es[i], where, "v");
        const double w = number_field(es[i], where, "w");
        auto ia = index.find(a);
        if (ia == index.end()) throw ParseError(where + ".u: unknown vertex id '" + a + "'");
        auto ib = index.find(b);
        if (ib == index.end()) throw ParseError(where + ".v: unknown vertex id '" + b + "'");
        if (ia->second == ib->second) throw ParseError(where + ": self-loop at '" + a + "'");
        if (w <= 0.0) throw ParseError(where + ".w: must be positive");
        if (!seen.insert(std::minmax(ia->second, ib->second)).second) {
            throw ParseError(where + ": duplicate edge '" + a + "'-'" + b + "'");
        }
        edges.push_back({ia->second, ib->second, w});
    }

    try {
        return WeightedGraph(std::move(ids), std::move(mu), std::move(edges));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("graph: ") + e.what());
    }
}

WeightedGraph load_graph(const std::string& path) { return parse_graph(load_json(path)); }

VertexFunction parse_vertex_function(const json& doc, const WeightedGraph& g) {
    if (!doc.is_object()) throw ParseError("vertex function: document must be a JSON object");
    VertexFunction f(g.vertex_count(), 0.0);
    std::vector<char> present(g.vertex_count(), 0);
    for (const auto& [key, value] : doc.items()) {
        if (!g.has_vertex(key)) throw ParseError("vertex function: unknown vertex id '" + key + "'");
        if (!value.is_number()) throw ParseError("vertex function: '" + key + "': must be a number");
        const double x = value.get<double>();
        if (!std::isfinite(x)) throw ParseError("vertex function: '" + key + "': must be finite");
        const std::size_t i = g.index_of(key);
        f[i] = x;
        present[i] = 1;
    }
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
        if (!present[i]) {
            throw ParseError("vertex function: missing value for vertex '" + g.vertex_ids()[i] + "'");
        }
    }
    return f;
}

VertexFunction load_vertex_function(const std::string& path, const WeightedGraph& g) {
    json doc = load_json(path);
    // A solver report is also accepted as a solution source.
    if (doc.is_object() && doc.contains("report") && doc.at("report").is_object() &&
        doc.at("report").contains("solution")) {
        return parse_vertex_function(doc.at("report").at("solution"), g);
    }
    if (doc.is_object() && doc.contains("solution") && doc.at("solution").is_object()) {
        return parse_vertex_function(doc.at("solution"), g);
    }
    return parse_vertex_function(doc, g);
}

json vertex_function_to_json(const WeightedGraph& g, const VertexFunction& f) {
    json out = json::object();
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
        out[g.vertex_ids()[i]] = f[i];
    }
    return out;
}

json graph_to_json(const WeightedGraph& g) {
    json vs = json::array();
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
        vs.push_back({{"id", g.vertex_ids()[i]}, {"mu", g.mu()[i]}});
    }
    json es = json::array();
    for (const Edge& e : g.edges()) {
        es.push_back({{"u", g.vertex_ids()[e.u]}, {"v", g.vertex_ids()[e.v]}, {"w", e.weight}});
    }
    return json{{"vertices", vs}, {"edges", es}};
}

}  // namespace kwgraph

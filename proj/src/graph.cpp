#include "kwgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>
#include <utility>

namespace kwgraph {

namespace {

void require_exponent(double p) {
    if (!(p > 1.0)) {
        throw std::invalid_argument("p must be greater than 1");
    }
}

void require_aligned(const WeightedGraph& g, const VertexFunction& f, const char* name) {
    if (f.size() != g.vertex_count()) {
        throw std::invalid_argument(std::string(name) + ": size does not match vertex count");
    }
}

}  // namespace

double signed_pow(double x, double e) {
    if (x == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(x), e), x);
}

WeightedGraph::WeightedGraph(std::vector<std::string> vertex_ids, std::vector<double> mu,
                             std::vector<Edge> edges)
    : ids_(std::move(vertex_ids)), mu_(std::move(mu)), edges_(std::move(edges)) {
    const std::size_t n = ids_.size();
    if (n == 0) throw std::invalid_argument("graph must have at least one vertex");
    if (mu_.size() != n) throw std::invalid_argument("mu size does not match vertex count");

    index_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw std::invalid_argument("duplicate vertex id '" + ids_[i] + "'");
        }
        if (!std::isfinite(mu_[i]) || mu_[i] <= 0.0) {
            throw std::invalid_argument("vertex '" + ids_[i] + "': mu must be positive and finite");
        }
        volume_ += mu_[i];
    }

    adjacency_.resize(n);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Edge& e : edges_) {
        if (e.u >= n || e.v >= n) throw std::invalid_argument("edge endpoint out of range");
        if (e.u == e.v) throw std::invalid_argument("self-loop at vertex '" + ids_[e.u] + "'");
        if (!std::isfinite(e.weight) || e.weight <= 0.0) {
            throw std::invalid_argument("edge '" + ids_[e.u] + "'-'" + ids_[e.v] +
                                        "': weight must be positive and finite");
        }
        if (!seen.insert(std::minmax(e.u, e.v)).second) {
            throw std::invalid_argument("duplicate edge '" + ids_[e.u] + "'-'" + ids_[e.v] + "'");
        }
        adjacency_[e.u].push_back({e.v, e.weight});
        adjacency_[e.v].push_back({e.u, e.weight});
    }

    // Every result in this library assumes connectedness; reject anything else.
    std::vector<char> visited(n, 0);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    visited[0] = 1;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop();
        for (const Neighbor& nb : adjacency_[i]) {
            if (!visited[nb.vertex]) {
                visited[nb.vertex] = 1;
                ++reached;
                frontier.push(nb.vertex);
            }
        }
    }
    if (reached != n) throw std::invalid_argument("graph is not connected");
}

std::size_t WeightedGraph::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("unknown vertex id '" + id + "'");
    return it->second;
}

bool WeightedGraph::has_vertex(const std::string& id) const {
    return index_.find(id) != index_.end();
}

VertexFunction p_laplacian(const WeightedGraph& g, const VertexFunction& f, double p) {
    require_exponent(p);
    require_aligned(g, f, "f");
    const std::size_t n = g.vertex_count();
    VertexFunction out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const auto& nb : g.neighbors(i)) {
            acc += nb.weight * signed_pow(f[nb.vertex] - f[i], p - 1.0);
        }
        out[i] = acc / g.mu()[i];
    }
    return out;
}

double dirichlet_energy(const WeightedGraph& g, const VertexFunction& f, double p) {
    require_exponent(p);
    require_aligned(g, f, "f");
    double acc = 0.0;
    for (const Edge& e : g.edges()) {
        acc += e.weight * std::pow(std::abs(f[e.v] - f[e.u]), p);
    }
    return acc;
}

double pairing_form(const WeightedGraph& g, const VertexFunction& u, const VertexFunction& v,
                    double p) {
    require_exponent(p);
    require_aligned(g, u, "u");
    require_aligned(g, v, "v");
    double acc = 0.0;
    for (const Edge& e : g.edges()) {
        acc += e.weight * signed_pow(u[e.v] - u[e.u], p - 1.0) * (v[e.v] - v[e.u]);
    }
    return acc;
}

EdgeFunction gradient_magnitude(const WeightedGraph& g, const VertexFunction& f) {
    require_aligned(g, f, "f");
    EdgeFunction out;
    out.reserve(g.edge_count());
    for (const Edge& e : g.edges()) {
        out.push_back(std::abs(f[e.v] - f[e.u]));
    }
    return out;
}

double integral(const WeightedGraph& g, const VertexFunction& f) {
    require_aligned(g, f, "f");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += g.mu()[i] * f[i];
    return acc;
}

double average(const WeightedGraph& g, const VertexFunction& f) {
    return integral(g, f) / g.volume();
}

double volume(const WeightedGraph& g) { return g.volume(); }

bool scale_identity_check(const WeightedGraph& g, const VertexFunction& f, double p,
                          double lambda, double tol) {
    const VertexFunction base = p_laplacian(g, f, p);
    VertexFunction scaled_input(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) scaled_input[i] = lambda * f[i];
    const VertexFunction lhs = p_laplacian(g, scaled_input, p);
    const double factor = signed_pow(lambda, p - 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        worst = std::max(worst, std::abs(lhs[i] - factor * base[i]));
    }
    return worst <= tol * (1.0 + sup_norm(base));
}

double sup_norm(const VertexFunction& f) {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
}

double max_value(const VertexFunction& f) {
    return *std::max_element(f.begin(), f.end());
}

double min_value(const VertexFunction& f) {
    return *std::min_element(f.begin(), f.end());
}

}  // namespace kwgraph

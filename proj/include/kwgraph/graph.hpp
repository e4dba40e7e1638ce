#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace kwgraph {

/// Function V -> R, index-aligned with WeightedGraph::vertex_ids().
using VertexFunction = std::vector<double>;

/// Function E -> R, index-aligned with WeightedGraph::edges().
using EdgeFunction = std::vector<double>;

/// Unordered edge {u, v} with a symmetric positive weight, stored once.
struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double weight = 1.0;
};

/// sgn(x)|x|^e with the continuous extension signed_pow(0, e) = 0. With
/// e = p-1 this is the flux nonlinearity |x|^{p-2} x of the p-Laplacian.
double signed_pow(double x, double e);

/// Finite connected graph with a positive vertex measure mu and positive
/// symmetric edge weights. Vertex order is fixed at construction; every
/// VertexFunction in this library is index-aligned to it. Immutable after
/// construction, so a graph can be shared read-only across solver runs.
class WeightedGraph {
  public:
    struct Neighbor {
        std::size_t vertex;
        double weight;
    };

    /// Throws std::invalid_argument on nonpositive mu or weights, self-loops,
    /// duplicate vertices or edges, or a disconnected graph.
    WeightedGraph(std::vector<std::string> vertex_ids, std::vector<double> mu,
                  std::vector<Edge> edges);

    std::size_t vertex_count() const { return mu_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<std::string>& vertex_ids() const { return ids_; }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Neighbor>& neighbors(std::size_t i) const { return adjacency_[i]; }

    /// Index of a vertex id; throws std::out_of_range for unknown ids.
    std::size_t index_of(const std::string& id) const;
    bool has_vertex(const std::string& id) const;

    /// Vol(G) = sum_i mu_i.
    double volume() const { return volume_; }

  private:
    std::vector<std::string> ids_;
    std::vector<double> mu_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Neighbor>> adjacency_;
    std::unordered_map<std::string, std::size_t> index_;
    double volume_ = 0.0;
};

/// Discrete p-Laplacian (1/mu_i) sum_{j~i} w_ij |f_j-f_i|^{p-2}(f_j-f_i).
/// Requires p > 1; the image always integrates to zero against mu.
VertexFunction p_laplacian(const WeightedGraph& g, const VertexFunction& f, double p);

/// D(f) = sum_{i~j} w_ij |f_j-f_i|^p. Zero iff f is constant.
double dirichlet_energy(const WeightedGraph& g, const VertexFunction& f, double p);

/// A(u,v) = sum_{i~j} w_ij |u_j-u_i|^{p-2}(u_j-u_i)(v_j-v_i).
/// A(f,f) = D(f), and integral(p_laplacian(f) * v) = -A(f,v).
double pairing_form(const WeightedGraph& g, const VertexFunction& u,
                    const VertexFunction& v, double p);

/// |grad f| per edge, aligned with edges().
EdgeFunction gradient_magnitude(const WeightedGraph& g, const VertexFunction& f);

double integral(const WeightedGraph& g, const VertexFunction& f);
double average(const WeightedGraph& g, const VertexFunction& f);
double volume(const WeightedGraph& g);

/// Self-test of the homogeneity law Delta_p(s f) = sgn(s)|s|^{p-1} Delta_p f:
/// true iff both sides agree to tol*(1 + sup|Delta_p f|).
bool scale_identity_check(const WeightedGraph& g, const VertexFunction& f, double p,
                          double lambda, double tol = 1e-10);

double sup_norm(const VertexFunction& f);
double max_value(const VertexFunction& f);
double min_value(const VertexFunction& f);

}  // namespace kwgraph

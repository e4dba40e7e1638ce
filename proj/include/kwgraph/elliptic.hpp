#pragma once

#include "kwgraph/graph.hpp"
#include "kwgraph/minimize.hpp"

namespace kwgraph {

/// The operator L = Delta_p - k with k > 0 everywhere. -L^{-1} preserves
/// order, and L is a bijection of C(V), so Lu = f is uniquely solvable.
class OperatorL {
  public:
    /// Throws std::invalid_argument unless p > 1 and k is strictly positive.
    OperatorL(const WeightedGraph& graph, double p, VertexFunction k);

    const WeightedGraph& graph() const { return *graph_; }
    double p() const { return p_; }
    const VertexFunction& k() const { return k_; }

  private:
    const WeightedGraph* graph_;
    double p_;
    VertexFunction k_;
};

struct EllipticOptions {
    double residual_tol = 0.0;  // 0: 1e-8 for p == 2, 1e-6 otherwise
    long max_iters = 200000;
    VertexFunction initial_guess;  // empty: zero function
};

struct EllipticReport {
    VertexFunction solution;
    double residual_inf = 0.0;
    long iterations = 0;
    bool converged = false;
};

/// Delta_p f - k f.
VertexFunction apply_L(const OperatorL& L, const VertexFunction& f);

/// Solve L u = f by minimizing the coercive energy
/// E(phi) = (1/p) D(phi) + (1/2) integral(k phi^2) + integral(f phi),
/// whose stationarity condition is exactly Delta_p(phi) - k phi = f.
/// Non-convergence is reported, never silently returned.
EllipticReport solve_L(const OperatorL& L, const VertexFunction& f,
                       const EllipticOptions& opts = {});

/// Instance check of the comparison property: if apply_L(f) >= apply_L(g)
/// pointwise (within 1e-12 slack) then f <= g pointwise (within 1e-9 slack);
/// vacuously true when the hypothesis fails.
bool order_preservation_check(const OperatorL& L, const VertexFunction& f,
                              const VertexFunction& g);

/// Solve Delta_p u = mean(f) - f by minimizing
/// F(phi) = (1/p) D(phi) + integral((mean(f) - f) phi) over the mean-zero
/// hyperplane. The solution is unique up to a constant; the returned one is
/// normalized to mu-average zero.
EllipticReport solve_p_poisson(const WeightedGraph& g, double p, const VertexFunction& f,
                               const EllipticOptions& opts = {});

// Energy functionals behind the two solvers, exposed for gradient validation.
Functional make_operator_L_energy(const OperatorL& L, VertexFunction f);
Functional make_p_poisson_energy(const WeightedGraph& g, double p, VertexFunction f);

/// Default residual tolerance: tighter at p = 2 where the energy landscape
/// has uniform curvature.
double default_residual_tol(double p);

}  // namespace kwgraph

#pragma once

#include <functional>
#include <vector>

#include "kwgraph/graph.hpp"

namespace kwgraph {

/// A differentiable functional on C(V). The gradient is taken with respect to
/// the mu-weighted inner product <f,g> = integral(f*g dmu), so Euler-Lagrange
/// expressions like -Delta_p(f) + k f + rhs are gradients verbatim. An optional
/// domain_guard marks admissible points; the line search rejects steps that
/// leave the admissible set.
struct Functional {
    std::function<double(const VertexFunction&)> value;
    std::function<VertexFunction(const VertexFunction&)> gradient;
    std::function<bool(const VertexFunction&)> domain_guard;  // empty: everywhere admissible
};

enum class MinimizeStatus {
    Converged,
    IterationLimit,
    LineSearchFailure,  // step underflowed; minimizer holds the last iterate
};

struct MinimizeOptions {
    double grad_tol = 1e-9;         // stop when sup|gradient| <= grad_tol
    long max_iters = 200000;
    double armijo_c = 1e-4;         // sufficient-decrease constant, in (0,1)
    double backtrack_factor = 0.5;  // step shrink factor, in (0,1)
    double initial_step = 1.0;
    bool project_mean_zero = false;  // constrain to the mean-zero hyperplane
};

struct TracePoint {
    long iteration;
    double value;
    double grad_norm;
};

struct MinimizeResult {
    VertexFunction minimizer;
    double final_value = 0.0;
    double final_grad_norm = 0.0;
    long iterations = 0;
    bool converged = false;
    MinimizeStatus status = MinimizeStatus::IterationLimit;
    // Values are nonincreasing up to the floating-point resolution of the
    // objective (Armijo descent while decreases are resolvable, then
    // gradient-contraction steps that never measurably increase the value).
    std::vector<TracePoint> trace;
};

/// Projected gradient descent with Armijo backtracking; trial steps are
/// warm-started with a Barzilai-Borwein estimate and every accepted step
/// satisfies the monotone sufficient-decrease condition while value
/// differences remain resolvable in double precision. Past that point steps
/// are accepted on strict gradient contraction so tight gradient tolerances
/// stay reachable.
MinimizeResult minimize(const WeightedGraph& g, const Functional& F, VertexFunction x0,
                        const MinimizeOptions& opts = {});

/// Max over coordinates of |central difference - mu_i * gradient_i|; the mu
/// factor converts the mu-weighted gradient into a plain partial derivative.
double check_gradient(const WeightedGraph& g, const Functional& F, const VertexFunction& x,
                      double h_fd);

/// f minus its mu-average; idempotent.
VertexFunction project_mean_zero(const WeightedGraph& g, VertexFunction f);

}  // namespace kwgraph

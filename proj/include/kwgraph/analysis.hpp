#pragma once

#include "kwgraph/graph.hpp"

namespace kwgraph {

enum class LiouvilleVerdict { Constant, Nonconstant, Inconclusive };

/// Checks the rigidity property of the p-Laplacian on a connected graph: a
/// one-signed Delta_p f forces f constant. If Delta_p f is one-signed up to
/// eps, f must be constant up to an eps-scaled gap; Nonconstant then signals
/// a genuine violation (a test-failure condition, never expected).
LiouvilleVerdict liouville_check(const WeightedGraph& g, const VertexFunction& f, double p,
                                 double eps);

struct PoincareOptions {
    int starts = 8;          // multi-start count (first start is deterministic)
    long max_iters = 20000;
    double grad_tol = 1e-11;
    unsigned seed = 1;
};

struct PoincareEstimate {
    double constant = 0.0;    // best ratio integral(|f|^p) / D(f) over mean-zero f
    VertexFunction witness;   // attains the ratio, normalized to D = 1
    int samples = 0;
};

/// Lower bound for the best constant in integral(|f|^p dmu) <= C D(f) over
/// mean-zero f, via multi-start projected ascent of the ratio. Exact at p = 2
/// (the reduced problem is an eigenvalue problem); reported as a certified
/// lower bound with the attaining witness for p != 2.
PoincareEstimate estimate_poincare_constant(const WeightedGraph& g, double p,
                                            const PoincareOptions& opts = {});

/// Empirical lower bound on the embedding constant sup |f|_inf over mean-zero
/// f with D(f) = 1, from seeded random sampling.
double sup_norm_embedding_check(const WeightedGraph& g, double p, int trials, unsigned seed = 1);

}  // namespace kwgraph

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kwgraph/elliptic.hpp"
#include "kwgraph/graph.hpp"
#include "kwgraph/minimize.hpp"

namespace kwgraph {

/// An instance of Delta_p u = c - h e^u on a connected weighted graph.
struct KWProblem {
    const WeightedGraph& graph;
    double p = 2.0;
    double c = 0.0;
    VertexFunction h;
};

enum class Solvability { Solvable, Unsolvable, Unknown };

/// Outcome of the necessary-condition prechecks. Unsolvable is only returned
/// when a necessary condition is violated; Unknown means solvability depends
/// on c relative to the threshold c_-(h).
struct SolvabilityVerdict {
    Solvability status = Solvability::Unknown;
    std::string reason;
};

enum class KWCase { CZero, CPositive, CNegative };

struct KWReport {
    bool converged = false;
    KWCase case_tag = KWCase::CZero;
    SolvabilityVerdict verdict;
    VertexFunction solution;  // empty unless converged
    double residual_inf = 0.0;
    long iterations = 0;
    std::optional<double> multiplier;  // constraint multiplier, when one exists
    // Sup-norm gaps |u_{n+1} - u_n| of the c < 0 iteration. The iterates
    // themselves decrease pointwise at every step (enforced to 1e-9); the
    // sup-norm gap is nonincreasing once the iteration enters its contraction
    // phase, though it can wobble while a far-off upper solution collapses.
    std::vector<double> monotone_trace;
    std::string failure;  // names the failed check, empty on success
};

struct KWOptions {
    double residual_tol = 0.0;  // 0: 1e-8 for p == 2, 1e-6 otherwise
    double step_tol = 1e-10;    // sup-norm gap cutoff for the monotone iteration
    long max_outer_iterations = 10000;
    int constraint_rounds = 12;  // outer budget of the c = 0 constrained solve
    double margin = 0.1;         // slack for the strict inequalities in upper solutions
    int cmin_probe_budget = 32;
    MinimizeOptions inner;
};

/// Necessary-condition screen for all three signs of c.
SolvabilityVerdict precheck(const KWProblem& prob);

/// Dispatch on the sign of c after the precheck. Any returned solution passes
/// verify(prob, u, residual_tol).
KWReport solve(const KWProblem& prob, const KWOptions& opts = {});

/// c = 0: minimize the Dirichlet energy over mean-zero f with
/// integral(h e^f) = 0 (augmented Lagrangian on the nonlinear constraint),
/// then recover the multiplier from stationarity and shift u = f + ln(lambda/p).
KWReport solve_c_zero(const KWProblem& prob, const KWOptions& opts = {});

/// c > 0: minimize the reduced functional
/// J(g) = (1/p) D(g) - c Vol(G) ln integral(h e^g) + c Vol(G) ln(c Vol(G))
/// over mean-zero g with the interior guard integral(h e^g) > 0, then shift
/// back onto the constraint set.
KWReport solve_c_positive(const KWProblem& prob, const KWOptions& opts = {});

/// c < 0: monotone iteration u_{n+1} = L^{-1}(c - h e^{u_n} - k u_n) started
/// from a certified upper solution, with k = max(1,-h) e^{u_n} refreshed from
/// the current iterate (each iterate is itself an upper solution); iterates
/// decrease pointwise and stay above the constant lower solution.
KWReport solve_c_negative(const KWProblem& prob, const KWOptions& opts = {});

/// Upper solution a v + (p-1) ln a with Delta_p v = mean(h) - h, valid for
/// c >= -(-mean(h)/2) a^{p-1}; a is maximized by bisection over the
/// admissibility bound max_i |e^{a v_i} - 1| <= -mean(h)/(2 max|h|).
/// Returns nullopt when no such upper solution certifies this c, which is
/// not a certificate of nonexistence.
std::optional<VertexFunction> build_upper_solution_small_c(const KWProblem& prob,
                                                           const KWOptions& opts = {});

/// Upper solution a v + b for h <= 0, h not identically 0: a^{p-1} mean(h) < c
/// and b > (p-1) ln a - a min(v) guarantee the pointwise inequality, which is
/// verified before returning; a violation throws (never a silent return).
VertexFunction build_upper_solution_h_nonpositive(const KWProblem& prob,
                                                  const KWOptions& opts = {});

struct CMinusEstimate {
    double c_solvable = 0.0;    // most negative c with a residual-certified solution
    double c_unresolved = 0.0;  // most negative probe attempted without success
    int probes = 0;
    // Probe failure is never a certificate of non-existence below c_solvable.
    bool nonexistence_certified = false;
};

/// Bracket the solvability threshold c_-(h) for sign-changing h with
/// mean(h) < 0. For h <= 0 (not identically 0) returns the (-inf, -inf)
/// sentinel: every c < 0 is solvable. Requires mean(h) < 0.
CMinusEstimate estimate_c_minus(const WeightedGraph& g, double p, const VertexFunction& h,
                                const KWOptions& opts = {});

/// Pointwise residual Delta_p u - c + h e^u.
VertexFunction residual(const KWProblem& prob, const VertexFunction& u);
bool verify(const KWProblem& prob, const VertexFunction& u, double tol);

// Functionals behind the constrained solvers, exposed for gradient validation.
Functional make_c_zero_penalty(const WeightedGraph& g, double p, VertexFunction h,
                               double multiplier, double penalty);
Functional make_c_positive_reduced(const WeightedGraph& g, double p, VertexFunction h, double c);

}  // namespace kwgraph

#include "kwgraph/kazdan_warner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace kwgraph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

KWCase case_of(double c) {
    if (c == 0.0) return KWCase::CZero;
    return c > 0.0 ? KWCase::CPositive : KWCase::CNegative;
}

double resolve_tol(double p, const KWOptions& opts) {
    return opts.residual_tol > 0.0 ? opts.residual_tol : default_residual_tol(p);
}

void require_problem(const KWProblem& prob) {
    if (!(prob.p > 1.0)) throw std::invalid_argument("p must be greater than 1");
    if (prob.h.size() != prob.graph.vertex_count()) {
        throw std::invalid_argument("h size does not match vertex count");
    }
}

KWReport failed_report(const KWProblem& prob, SolvabilityVerdict verdict, std::string why) {
    KWReport rep;
    rep.case_tag = case_of(prob.c);
    rep.verdict = std::move(verdict);
    rep.failure = std::move(why);
    rep.residual_inf = kInf;
    return rep;
}

// Interior data of the small-c upper-solution construction: v solves
// Delta_p v = mean(h) - h, a is the largest admissible scale, and the
// construction certifies every c in [-c_threshold, 0).
struct SmallCBound {
    VertexFunction v;
    double a = 0.0;
    double c_threshold = 0.0;
};

std::optional<SmallCBound> small_c_bound(const WeightedGraph& g, double p,
                                         const VertexFunction& h, const KWOptions& opts) {
    const double hbar = average(g, h);
    const double habs = sup_norm(h);
    const double eps_h = -hbar / (2.0 * habs);

    EllipticOptions po;
    po.residual_tol = 1e-10;
    po.max_iters = opts.inner.max_iters;
    EllipticReport vrep = solve_p_poisson(g, p, h, po);
    if (!vrep.converged) return std::nullopt;

    auto admissible = [&](double a) {
        double worst = 0.0;
        for (double x : vrep.solution) worst = std::max(worst, std::abs(std::expm1(a * x)));
        return worst <= eps_h;
    };

    // max_i |e^{a v_i} - 1| is nondecreasing in a >= 0 on every vertex, so the
    // admissible set is an interval [0, a*]; locate a* by geometric bisection.
    double a;
    if (admissible(1e8)) {
        a = 1e8;
    } else if (!admissible(1e-8)) {
        return std::nullopt;
    } else {
        double lo = 1e-8, hi = 1e8;
        for (int it = 0; it < 80; ++it) {
            const double mid = std::sqrt(lo * hi);
            (admissible(mid) ? lo : hi) = mid;
        }
        a = lo;
    }

    SmallCBound out;
    out.v = std::move(vrep.solution);
    out.a = a;
    out.c_threshold = (-hbar / 2.0) * std::pow(a, p - 1.0);
    return out;
}

}  // namespace

VertexFunction residual(const KWProblem& prob, const VertexFunction& u) {
    require_problem(prob);
    VertexFunction r = p_laplacian(prob.graph, u, prob.p);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] += -prob.c + prob.h[i] * std::exp(u[i]);
    }
    return r;
}

bool verify(const KWProblem& prob, const VertexFunction& u, double tol) {
    const VertexFunction r = residual(prob, u);
    for (double x : r) {
        if (!(std::abs(x) <= tol)) return false;
    }
    return true;
}

SolvabilityVerdict precheck(const KWProblem& prob) {
    require_problem(prob);
    const VertexFunction& h = prob.h;
    const double hmax = max_value(h);
    const double hmin = min_value(h);
    const double hbar = average(prob.graph, h);
    const bool identically_zero = hmax == 0.0 && hmin == 0.0;
    const bool changes_sign = hmax > 0.0 && hmin < 0.0;

    if (prob.c == 0.0) {
        if (identically_zero) {
            return {Solvability::Solvable, "h vanishes identically; constants are the solutions"};
        }
        if (!changes_sign) return {Solvability::Unsolvable, "h does not change sign"};
        if (!(hbar < 0.0)) return {Solvability::Unsolvable, "mean of h is nonnegative"};
        return {Solvability::Solvable, "h changes sign and mean of h is negative"};
    }
    if (prob.c > 0.0) {
        if (hmax > 0.0) return {Solvability::Solvable, "h is positive somewhere"};
        return {Solvability::Unsolvable, "h is nowhere positive"};
    }
    // c < 0
    if (!(hbar < 0.0)) return {Solvability::Unsolvable, "mean of h is nonnegative"};
    if (hmax <= 0.0) {
        return {Solvability::Solvable, "h is nonpositive and not identically zero"};
    }
    return {Solvability::Unknown, "solvability depends on c relative to c_-(h)"};
}

Functional make_c_zero_penalty(const WeightedGraph& g, double p, VertexFunction h,
                               double multiplier, double penalty) {
    auto constraint = [&g, h](const VertexFunction& f) {
        double acc = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) acc += g.mu()[i] * h[i] * std::exp(f[i]);
        return acc;
    };
    return Functional{
        .value =
            [&g, p, constraint, multiplier, penalty](const VertexFunction& f) {
                const double cval = constraint(f);
                return dirichlet_energy(g, f, p) / p + multiplier * cval +
                       0.5 * penalty * cval * cval;
            },
        .gradient =
            [&g, p, h, constraint, multiplier, penalty](const VertexFunction& f) {
                const double m_eff = multiplier + penalty * constraint(f);
                VertexFunction grad = p_laplacian(g, f, p);
                for (std::size_t i = 0; i < f.size(); ++i) {
                    grad[i] = -grad[i] + m_eff * h[i] * std::exp(f[i]);
                }
                return grad;
            },
        .domain_guard = nullptr,
    };
}

Functional make_c_positive_reduced(const WeightedGraph& g, double p, VertexFunction h, double c) {
    const double cvol = c * g.volume();
    auto mass = [&g, h](const VertexFunction& f) {
        double acc = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) acc += g.mu()[i] * h[i] * std::exp(f[i]);
        return acc;
    };
    return Functional{
        .value =
            [&g, p, cvol, mass](const VertexFunction& f) {
                return dirichlet_energy(g, f, p) / p - cvol * std::log(mass(f)) +
                       cvol * std::log(cvol);
            },
        .gradient =
            [&g, p, h, cvol, mass](const VertexFunction& f) {
                const double s = mass(f);
                VertexFunction grad = p_laplacian(g, f, p);
                for (std::size_t i = 0; i < f.size(); ++i) {
                    grad[i] = -grad[i] - (cvol / s) * h[i] * std::exp(f[i]);
                }
                return grad;
            },
        .domain_guard =
            [mass](const VertexFunction& f) {
                const double s = mass(f);
                return std::isfinite(s) && s > 0.0;
            },
    };
}

KWReport solve_c_zero(const KWProblem& prob, const KWOptions& opts) {
    require_problem(prob);
    if (prob.c != 0.0) throw std::invalid_argument("solve_c_zero requires c == 0");
    SolvabilityVerdict verdict = precheck(prob);
    if (verdict.status == Solvability::Unsolvable) {
        return failed_report(prob, verdict, "precheck: " + verdict.reason);
    }

    const WeightedGraph& g = prob.graph;
    const std::size_t n = g.vertex_count();
    const double p = prob.p;
    const double tol = resolve_tol(p, opts);

    KWReport rep;
    rep.case_tag = KWCase::CZero;
    rep.verdict = verdict;

    if (sup_norm(prob.h) == 0.0) {
        // Delta_p u = 0 has exactly the constants; return the canonical one.
        rep.solution.assign(n, 0.0);
        rep.residual_inf = 0.0;
        rep.converged = true;
        return rep;
    }

    // Normalize the constraint integral(h e^f) = 0 to unit scale so the
    // penalty schedule is insensitive to the magnitude of h.
    VertexFunction habs(n);
    for (std::size_t i = 0; i < n; ++i) habs[i] = std::abs(prob.h[i]);
    const double scale = integral(g, habs);
    VertexFunction hn(n);
    for (std::size_t i = 0; i < n; ++i) hn[i] = prob.h[i] / scale;

    MinimizeOptions mopts = opts.inner;
    mopts.project_mean_zero = true;
    mopts.grad_tol = 0.1 * tol;

    VertexFunction f(n, 0.0);
    double multiplier_est = 0.0;
    double rho = 1.0;
    bool constrained = false;
    for (int round = 0; round < opts.constraint_rounds; ++round) {
        MinimizeResult res =
            minimize(g, make_c_zero_penalty(g, p, hn, multiplier_est, rho), f, mopts);
        f = std::move(res.minimizer);
        rep.iterations += res.iterations;
        double cval = 0.0, cmag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = g.mu()[i] * hn[i] * std::exp(f[i]);
            cval += t;
            cmag += std::abs(t);
        }
        const bool feasible = std::abs(cval) <= 1e-12 * std::max(1.0, cmag);
        if (feasible && res.final_grad_norm <= 0.5 * tol) {
            constrained = true;
            break;
        }
        if (feasible && res.status == MinimizeStatus::LineSearchFailure) {
            // Constraint resolved but the stationarity stalled slightly above
            // target; escalating the penalty only degrades conditioning. The
            // final residual check decides whether the stall was good enough.
            constrained = true;
            break;
        }
        multiplier_est += rho * cval;
        rho *= 10.0;
    }
    if (!constrained) {
        rep.failure = "constraint integral(h e^f) = 0 not met within the outer budget";
        rep.residual_inf = kInf;
        return rep;
    }

    // Stationarity gives Delta_p f = -(lambda/p) h e^f; read lambda off the
    // vertex with the largest |h e^f| and cross-validate at every vertex
    // carrying a significant h.
    const VertexFunction lap = p_laplacian(g, f, p);
    std::size_t istar = 0;
    double wstar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::abs(prob.h[i]) * std::exp(f[i]);
        if (w > wstar) {
            wstar = w;
            istar = i;
        }
    }
    const double lam_over_p = -lap[istar] / (prob.h[istar] * std::exp(f[istar]));
    const double hcut = 0.1 * sup_norm(prob.h);
    double rmin = kInf, rmax = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(prob.h[i]) < hcut) continue;
        const double r = -lap[i] / (prob.h[i] * std::exp(f[i]));
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    if (!(lam_over_p > 0.0)) {
        rep.failure = "recovered multiplier is not positive";
        rep.residual_inf = kInf;
        return rep;
    }
    if (rmax - rmin > 1e-4 * std::abs(lam_over_p)) {
        rep.failure = "multiplier estimates disagree across vertices";
        rep.residual_inf = kInf;
        return rep;
    }

    VertexFunction u(n);
    const double shift = std::log(lam_over_p);
    for (std::size_t i = 0; i < n; ++i) u[i] = f[i] + shift;
    rep.multiplier = p * lam_over_p;
    rep.residual_inf = sup_norm(residual(prob, u));
    if (rep.residual_inf <= tol) {
        rep.converged = true;
        rep.solution = std::move(u);
    } else {
        rep.failure = "residual above tolerance after multiplier recovery";
    }
    return rep;
}

KWReport solve_c_positive(const KWProblem& prob, const KWOptions& opts) {
    require_problem(prob);
    if (!(prob.c > 0.0)) throw std::invalid_argument("solve_c_positive requires c > 0");
    SolvabilityVerdict verdict = precheck(prob);
    if (verdict.status == Solvability::Unsolvable) {
        return failed_report(prob, verdict, "precheck: " + verdict.reason);
    }

    const WeightedGraph& g = prob.graph;
    const std::size_t n = g.vertex_count();
    const double p = prob.p;
    const double tol = resolve_tol(p, opts);
    const double cvol = prob.c * g.volume();

    KWReport rep;
    rep.case_tag = KWCase::CPositive;
    rep.verdict = verdict;

    auto mass = [&](const VertexFunction& f) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += g.mu()[i] * prob.h[i] * std::exp(f[i]);
        return acc;
    };

    // Admissible start: integral(h e^g) > 0. When the plain average fails,
    // concentrate mass at the vertex where h is largest.
    VertexFunction g0(n, 0.0);
    if (!(mass(g0) > 0.0)) {
        std::size_t istar = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (prob.h[i] > prob.h[istar]) istar = i;
        }
        const double deficit = -integral(g, prob.h);
        double spike = std::log1p(std::max(0.0, deficit) / (prob.h[istar] * g.mu()[istar])) + 1.0;
        bool admissible = false;
        for (int attempt = 0; attempt < 60; ++attempt) {
            VertexFunction cand(n, 0.0);
            cand[istar] = spike;
            cand = project_mean_zero(g, cand);
            if (mass(cand) > 0.0) {
                g0 = std::move(cand);
                admissible = true;
                break;
            }
            spike *= 2.0;
        }
        if (!admissible) {
            rep.failure = "no admissible start with integral(h e^g) > 0";
            rep.residual_inf = kInf;
            return rep;
        }
    }

    MinimizeOptions mopts = opts.inner;
    mopts.project_mean_zero = true;
    mopts.grad_tol = 0.5 * tol;
    MinimizeResult res = minimize(g, make_c_positive_reduced(g, p, prob.h, prob.c), g0, mopts);
    rep.iterations = res.iterations;

    const double s = mass(res.minimizer);
    const double shift = std::log(cvol) - std::log(s);
    VertexFunction u = std::move(res.minimizer);
    for (double& x : u) x += shift;

    rep.residual_inf = sup_norm(residual(prob, u));
    if (rep.residual_inf <= tol) {
        // Measured constraint multiplier; 1 by the structure of the reduction.
        const VertexFunction lap = p_laplacian(g, u, p);
        const double hcut = 0.1 * sup_norm(prob.h);
        double lam_sum = 0.0;
        int lam_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(prob.h[i]) < hcut) continue;
            lam_sum += (prob.c - lap[i]) / (prob.h[i] * std::exp(u[i]));
            ++lam_count;
        }
        rep.multiplier = lam_count > 0 ? lam_sum / lam_count : 1.0;
        rep.converged = true;
        rep.solution = std::move(u);
    } else {
        rep.failure = res.converged ? "residual above tolerance" : "reduced minimization stalled";
    }
    return rep;
}

std::optional<VertexFunction> build_upper_solution_small_c(const KWProblem& prob,
                                                           const KWOptions& opts) {
    require_problem(prob);
    if (!(prob.c < 0.0)) throw std::invalid_argument("requires c < 0");
    const double hbar = average(prob.graph, prob.h);
    if (!(hbar < 0.0)) throw std::invalid_argument("requires mean(h) < 0");

    auto bound = small_c_bound(prob.graph, prob.p, prob.h, opts);
    if (!bound) return std::nullopt;
    if (!(prob.c >= -bound->c_threshold)) return std::nullopt;

    const double lna = std::log(bound->a);
    VertexFunction up(prob.graph.vertex_count());
    for (std::size_t i = 0; i < up.size(); ++i) {
        up[i] = bound->a * bound->v[i] + (prob.p - 1.0) * lna;
    }
    const VertexFunction r = residual(prob, up);
    for (double x : r) {
        if (!(x <= 1e-9)) return std::nullopt;  // certificate failed (or non-finite)
    }
    return up;
}

VertexFunction build_upper_solution_h_nonpositive(const KWProblem& prob, const KWOptions& opts) {
    require_problem(prob);
    if (!(prob.c < 0.0)) throw std::invalid_argument("requires c < 0");
    if (!(max_value(prob.h) <= 0.0) || !(min_value(prob.h) < 0.0)) {
        throw std::invalid_argument("requires h <= 0 and h not identically zero");
    }
    const WeightedGraph& g = prob.graph;
    const double p = prob.p;
    const double hbar = average(g, prob.h);  // < 0 here

    EllipticOptions po;
    po.residual_tol = 1e-10;
    po.max_iters = opts.inner.max_iters;
    EllipticReport vrep = solve_p_poisson(g, p, prob.h, po);
    if (!vrep.converged) {
        throw std::runtime_error("upper solution construction: inner p-Poisson solve failed");
    }
    const VertexFunction& v = vrep.solution;

    // a^{p-1} mean(h) < c strictly, with multiplicative slack; the additive
    // slack on b keeps e^{u_+} > a^{p-1} strict under floating point.
    const double a = std::pow(prob.c / hbar, 1.0 / (p - 1.0)) * (1.0 + opts.margin);
    const double b = (p - 1.0) * std::log(a) - a * min_value(v) + opts.margin;
    VertexFunction up(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) up[i] = a * v[i] + b;

    const VertexFunction r = residual(prob, up);
    for (double x : r) {
        if (!(x <= 1e-9)) {
            throw std::runtime_error(
                "upper solution certificate failed pointwise (inner solve inaccuracy)");
        }
    }
    return up;
}

KWReport solve_c_negative(const KWProblem& prob, const KWOptions& opts) {
    require_problem(prob);
    if (!(prob.c < 0.0)) throw std::invalid_argument("solve_c_negative requires c < 0");
    SolvabilityVerdict verdict = precheck(prob);
    if (verdict.status == Solvability::Unsolvable) {
        return failed_report(prob, verdict, "precheck: " + verdict.reason);
    }

    const WeightedGraph& g = prob.graph;
    const std::size_t n = g.vertex_count();
    const double tol = resolve_tol(prob.p, opts);

    KWReport rep;
    rep.case_tag = KWCase::CNegative;
    rep.verdict = verdict;
    rep.residual_inf = kInf;

    std::optional<VertexFunction> upper;
    if (max_value(prob.h) <= 0.0) {
        upper = build_upper_solution_h_nonpositive(prob, opts);
    } else {
        upper = build_upper_solution_small_c(prob, opts);
    }
    if (!upper) {
        rep.failure = "no upper solution certified at this c";
        return rep;
    }
    VertexFunction u = std::move(*upper);

    // Constant lower solution u_- = -A: h e^{-A} >= c wherever h < 0.
    double ratio = kInf;
    for (std::size_t i = 0; i < n; ++i) {
        if (prob.h[i] < 0.0) ratio = std::min(ratio, prob.c / prob.h[i]);
    }
    double A = 1.0 + std::max(0.0, -std::log(ratio));
    A = std::max(A, 1.0 - min_value(u));
    const double lower = -A;

    // Monotone scheme u_{n+1} = L^{-1}(c - h e^{u_n} - k u_n). k is refreshed
    // from the current iterate: every iterate is itself an upper solution, and
    // a fixed k = max(1,-h) e^{u_+} makes the contraction factor 1 - e^{u-u_+}
    // which stalls whenever the initial upper solution sits far above the
    // solution. The mean-value estimate behind the bracketing needs only
    // k_i >= -h_i e^{u_n,i} plus a positive margin, so vertices with h_i >= 0
    // carry the margin alone instead of an enormous e^{u_n} factor.
    VertexFunction k(n), rhs(n);
    bool reached_fixed_point = false;
    long outer = 0;
    while (outer < opts.max_outer_iterations) {
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double eu = std::exp(u[i]);
            k[i] = std::max(0.0, -prob.h[i]) * eu + 1.0;
            rhs[i] = prob.c - prob.h[i] * eu - k[i] * u[i];
            finite = finite && std::isfinite(k[i]) && std::isfinite(rhs[i]);
        }
        if (!finite) {
            rep.failure = "iteration left floating-point range";
            rep.iterations = outer;
            return rep;
        }

        OperatorL L(g, prob.p, k);
        EllipticOptions eopts;
        eopts.residual_tol = std::max(1e-11, 1e-13 * sup_norm(rhs));
        eopts.max_iters = opts.inner.max_iters;
        eopts.initial_guess = u;
        EllipticReport inner = solve_L(L, rhs, eopts);
        if (!inner.converged) {
            rep.failure = "inner elliptic solve did not converge";
            rep.iterations = outer;
            return rep;
        }

        double ascent = -kInf, undershoot = kInf, gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = inner.solution[i] - u[i];
            ascent = std::max(ascent, d);
            gap = std::max(gap, std::abs(d));
            undershoot = std::min(undershoot, inner.solution[i] - lower);
        }
        ++outer;
        if (ascent > 1e-9) {
            rep.failure = "monotonicity violated (inner solve inaccuracy)";
            rep.iterations = outer;
            return rep;
        }
        if (undershoot < -1e-9) {
            rep.failure = "iterate fell below the lower solution";
            rep.iterations = outer;
            return rep;
        }
        rep.monotone_trace.push_back(gap);
        u = std::move(inner.solution);
        if (gap <= opts.step_tol) {
            reached_fixed_point = true;
            break;
        }
    }
    rep.iterations = outer;
    if (!reached_fixed_point) {
        rep.failure = "monotone iteration cap reached";
        return rep;
    }

    rep.residual_inf = sup_norm(residual(prob, u));
    if (rep.residual_inf <= tol) {
        rep.converged = true;
        rep.solution = std::move(u);
    } else {
        rep.failure = "residual above tolerance at the fixed point";
    }
    return rep;
}

KWReport solve(const KWProblem& prob, const KWOptions& opts) {
    SolvabilityVerdict verdict = precheck(prob);
    if (verdict.status == Solvability::Unsolvable) {
        return failed_report(prob, verdict, "precheck: " + verdict.reason);
    }
    if (prob.c == 0.0) return solve_c_zero(prob, opts);
    if (prob.c > 0.0) return solve_c_positive(prob, opts);
    return solve_c_negative(prob, opts);
}

CMinusEstimate estimate_c_minus(const WeightedGraph& g, double p, const VertexFunction& h,
                                const KWOptions& opts) {
    if (!(p > 1.0)) throw std::invalid_argument("p must be greater than 1");
    if (h.size() != g.vertex_count()) {
        throw std::invalid_argument("h size does not match vertex count");
    }
    if (!(average(g, h) < 0.0)) {
        throw std::invalid_argument("estimate_c_minus requires mean(h) < 0");
    }

    CMinusEstimate est;
    if (max_value(h) <= 0.0) {
        est.c_solvable = -kInf;  // every c < 0 is solvable
        est.c_unresolved = -kInf;
        return est;
    }

    auto attempt = [&](double c) {
        ++est.probes;
        KWProblem prob{g, p, c, h};
        if (!build_upper_solution_small_c(prob, opts)) return false;
        return solve_c_negative(prob, opts).converged;
    };

    // Seed the bracket at the construction's own certification threshold.
    auto bound = small_c_bound(g, p, h, opts);
    double hi = bound ? -0.999 * bound->c_threshold : -1e-6;
    double lo = bound ? -1.001 * bound->c_threshold : -1e-3;

    double success = kNaN, failure = kNaN;
    while (est.probes < opts.cmin_probe_budget) {
        if (attempt(hi)) {
            success = hi;
            break;
        }
        hi *= 0.5;
        if (std::abs(hi) < 1e-12) break;
    }
    if (std::isnan(success)) {
        est.c_solvable = kNaN;
        est.c_unresolved = lo;
        return est;
    }
    while (est.probes < opts.cmin_probe_budget) {
        if (!attempt(lo)) {
            failure = lo;
            break;
        }
        success = std::min(success, lo);
        lo *= 2.0;
        if (std::abs(lo) > 1e15) break;
    }
    while (est.probes < opts.cmin_probe_budget && !std::isnan(failure) &&
           success - failure > 0.01 * std::abs(success)) {
        const double mid = 0.5 * (success + failure);
        (attempt(mid) ? success : failure) = mid;
    }

    est.c_solvable = success;
    est.c_unresolved = failure;
    return est;
}

}  // namespace kwgraph

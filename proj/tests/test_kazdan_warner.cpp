#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kwgraph/kazdan_warner.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kwgraph;
using kwtest::path_graph;
using kwtest::random_connected_graph;
using kwtest::random_vertex_function;
using kwtest::two_vertex_graph;

namespace {

double resolved_tol(double p, const KWOptions& opts = {}) {
    return opts.residual_tol > 0 ? opts.residual_tol : default_residual_tol(p);
}

void check_report_contract(const KWProblem& prob, const KWReport& rep) {
    if (rep.converged) {
        REQUIRE(!rep.solution.empty());
        CHECK(rep.residual_inf <= resolved_tol(prob.p));
        CHECK(verify(prob, rep.solution, resolved_tol(prob.p)));
    } else {
        CHECK(!rep.failure.empty());
    }
}

}  // namespace

TEST_CASE("precheck covers all sign cases") {
    const WeightedGraph g = two_vertex_graph();

    CHECK(precheck({g, 2.0, 0.0, {1.0, -2.0}}).status == Solvability::Solvable);
    CHECK(precheck({g, 2.0, 0.0, {0.0, 0.0}}).status == Solvability::Solvable);
    CHECK(precheck({g, 2.0, 0.0, {1.0, 1.0}}).status == Solvability::Unsolvable);
    CHECK(precheck({g, 2.0, 0.0, {1.0, 1.0}}).reason == "h does not change sign");
    CHECK(precheck({g, 2.0, 0.0, {-1.0, -2.0}}).reason == "h does not change sign");
    CHECK(precheck({g, 2.0, 0.0, {2.0, -1.0}}).status == Solvability::Unsolvable);
    CHECK(precheck({g, 2.0, 0.0, {2.0, -1.0}}).reason == "mean of h is nonnegative");
    CHECK(precheck({g, 2.0, 0.0, {1.0, -1.0}}).status == Solvability::Unsolvable);

    CHECK(precheck({g, 2.0, 1.0, {-1.0, -1.0}}).status == Solvability::Unsolvable);
    CHECK(precheck({g, 2.0, 1.0, {2.0, 0.0}}).status == Solvability::Solvable);
    CHECK(precheck({g, 2.0, 1.0, {0.0, 0.0}}).status == Solvability::Unsolvable);

    CHECK(precheck({g, 2.0, -1.0, {1.0, 1.0}}).status == Solvability::Unsolvable);
    CHECK(precheck({g, 2.0, -1.0, {0.0, -2.0}}).status == Solvability::Solvable);
    CHECK(precheck({g, 2.0, -1.0, {1.0, -3.0}}).status == Solvability::Unknown);
    CHECK(precheck({g, 2.0, -1.0, {0.0, 0.0}}).status == Solvability::Unsolvable);
}

TEST_CASE("residual and verify") {
    const WeightedGraph g = two_vertex_graph();
    const VertexFunction zero{0.0, 0.0};

    VertexFunction r = residual({g, 2.0, 1.0, {1.0, 1.0}}, zero);
    CHECK(sup_norm(r) == 0.0);

    r = residual({g, 2.0, 1.0, {2.0, 2.0}}, zero);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(1.0));

    // closed form for c = 0, h = (1, -2): u1 = (p-1) ln ln 2, u2 = u1 - ln 2
    for (double p : {2.0, 3.0}) {
        const double u1 = (p - 1.0) * std::log(std::log(2.0));
        const VertexFunction u{u1, u1 - std::log(2.0)};
        const KWProblem prob{g, p, 0.0, {1.0, -2.0}};
        CHECK(sup_norm(residual(prob, u)) <= 1e-12);
        CHECK(verify(prob, u, 1e-12));
        CHECK(!verify(prob, {u[0] + 0.1, u[1]}, 1e-6));
    }
}

TEST_CASE("solve dispatches and handles the trivial constants") {
    std::mt19937 rng(5);
    const WeightedGraph g = random_connected_graph(rng, {.max_vertices = 6});
    const std::size_t n = g.vertex_count();
    for (double p : {2.0, 3.0}) {
        KWReport rep = solve({g, p, 1.0, VertexFunction(n, 1.0)});
        check_report_contract({g, p, 1.0, VertexFunction(n, 1.0)}, rep);
        REQUIRE(rep.converged);
        CHECK(rep.case_tag == KWCase::CPositive);
        CHECK(sup_norm(rep.solution) <= 1e-6);

        rep = solve({g, p, -1.0, VertexFunction(n, -1.0)});
        check_report_contract({g, p, -1.0, VertexFunction(n, -1.0)}, rep);
        REQUIRE(rep.converged);
        CHECK(rep.case_tag == KWCase::CNegative);
        CHECK(sup_norm(rep.solution) <= 1e-6);
    }

    // h of one sign fails the c = 0 precheck
    KWReport failed = solve({g, 2.0, 0.0, VertexFunction(n, 1.0)});
    CHECK(!failed.converged);
    CHECK(failed.verdict.status == Solvability::Unsolvable);
    CHECK(failed.failure.find("precheck") != std::string::npos);
}

TEST_CASE("c = 0 closed forms on the two-vertex graph") {
    const WeightedGraph g = two_vertex_graph();
    for (double p : {2.0, 3.0}) {
        const KWProblem prob{g, p, 0.0, {1.0, -2.0}};
        KWReport rep = solve_c_zero(prob);
        check_report_contract(prob, rep);
        REQUIRE(rep.converged);
        const double u1 = (p - 1.0) * std::log(std::log(2.0));
        CHECK(std::abs(rep.solution[0] - u1) <= 1e-5);
        CHECK(std::abs(rep.solution[1] - (u1 - std::log(2.0))) <= 1e-5);
        REQUIRE(rep.multiplier.has_value());
        CHECK(*rep.multiplier > 0.0);
    }

    // multiplier closed form at p = 2: lambda = sqrt(2) ln 2
    KWReport rep = solve_c_zero({g, 2.0, 0.0, {1.0, -2.0}});
    REQUIRE(rep.multiplier.has_value());
    CHECK(std::abs(*rep.multiplier - std::sqrt(2.0) * std::log(2.0)) <= 1e-4);
}

TEST_CASE("c = 0 with h identically zero returns the canonical constant") {
    const WeightedGraph g = path_graph(3);
    KWReport rep = solve({g, 2.5, 0.0, VertexFunction(3, 0.0)});
    REQUIRE(rep.converged);
    CHECK(rep.solution == VertexFunction(3, 0.0));
}

TEST_CASE("c = 0 on a path cross-checked against the damped-Newton oracle") {
    const WeightedGraph g = path_graph(3);
    const KWProblem prob{g, 2.0, 0.0, {1.0, -1.0, -1.0}};
    KWReport rep = solve_c_zero(prob);
    check_report_contract(prob, rep);
    REQUIRE(rep.converged);
    CHECK(rep.residual_inf <= 1e-6);

    // start the oracle from a coarsened copy so it works its own way back
    VertexFunction start = rep.solution;
    for (double& x : start) x = std::round(x * 10.0) / 10.0;
    auto newton = kwtest::newton_solve_kw(prob, start);
    REQUIRE(newton.has_value());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(rep.solution[i] - (*newton)[i]) <= 1e-5);
    }
}

TEST_CASE("c > 0 closed forms and multiplier") {
    const WeightedGraph g = two_vertex_graph();
    for (double p : {2.0, 3.0}) {
        const KWProblem prob{g, p, 1.0, {2.0, 0.0}};
        KWReport rep = solve_c_positive(prob);
        check_report_contract(prob, rep);
        REQUIRE(rep.converged);
        CHECK(std::abs(rep.solution[0] - 0.0) <= 1e-5);
        CHECK(std::abs(rep.solution[1] + 1.0) <= 1e-5);
        REQUIRE(rep.multiplier.has_value());
        CHECK(std::abs(*rep.multiplier - 1.0) <= 1e-4);
    }

    // negative-mean h still admits a start concentrated at argmax h
    const KWProblem lopsided{g, 2.0, 0.5, {1.0, -4.0}};
    KWReport rep = solve_c_positive(lopsided);
    check_report_contract(lopsided, rep);
    CHECK(rep.converged);

    // the unreduced stationarity recovers the unit multiplier at every
    // significant vertex
    if (rep.converged) {
        const VertexFunction lap = p_laplacian(g, rep.solution, 2.0);
        double lam_min = 1e300, lam_max = -1e300;
        for (std::size_t i = 0; i < 2; ++i) {
            const double lam =
                (lopsided.c - lap[i]) / (lopsided.h[i] * std::exp(rep.solution[i]));
            lam_min = std::min(lam_min, lam);
            lam_max = std::max(lam_max, lam);
        }
        CHECK(lam_max - lam_min <= 1e-4);
        CHECK(std::abs(0.5 * (lam_max + lam_min) - 1.0) <= 1e-4);
    }

    KWReport failed = solve_c_positive({g, 2.0, 1.0, {-1.0, 0.0}});
    CHECK(!failed.converged);
    CHECK(failed.verdict.status == Solvability::Unsolvable);
    CHECK_THROWS_AS(solve_c_positive({g, 2.0, -1.0, {1.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("c < 0 constant and closed-form solutions") {
    const WeightedGraph g = two_vertex_graph();
    for (double p : {2.0, 3.0}) {
        KWProblem prob{g, p, -4.0, {-1.0, -1.0}};
        KWReport rep = solve_c_negative(prob);
        check_report_contract(prob, rep);
        REQUIRE(rep.converged);
        CHECK(std::abs(rep.solution[0] - std::log(4.0)) <= 1e-6);
        CHECK(std::abs(rep.solution[1] - std::log(4.0)) <= 1e-6);

        KWProblem prob1{g, p, -1.0, {-1.0, -1.0}};
        rep = solve_c_negative(prob1);
        REQUIRE(rep.converged);
        CHECK(sup_norm(rep.solution) <= 1e-6);

        KWProblem mixed{g, p, -1.0, {0.0, -2.0}};
        rep = solve_c_negative(mixed);
        check_report_contract(mixed, rep);
        REQUIRE(rep.converged);
        CHECK(std::abs(rep.solution[0] - 1.0) <= 1e-5);
        CHECK(std::abs(rep.solution[1] - 0.0) <= 1e-5);
    }
}

TEST_CASE("monotone trace decreases and records the descent") {
    const WeightedGraph g = two_vertex_graph();
    const KWProblem prob{g, 2.0, -4.0, {-1.0, -1.0}};
    KWReport rep = solve_c_negative(prob);
    REQUIRE(rep.converged);
    REQUIRE(!rep.monotone_trace.empty());
    for (std::size_t i = 1; i < rep.monotone_trace.size(); ++i) {
        CHECK(rep.monotone_trace[i] <= rep.monotone_trace[i - 1] + 1e-12);
    }
    CHECK(rep.monotone_trace.back() <= 1e-10);
}

TEST_CASE("c < 0 with sign-changing h solves above the certified threshold") {
    const WeightedGraph g = two_vertex_graph();
    const KWProblem prob{g, 2.0, -0.05, {1.0, -3.0}};
    CHECK(precheck(prob).status == Solvability::Unknown);
    KWReport rep = solve(prob);
    check_report_contract(prob, rep);
    CHECK(rep.converged);

    // far below the threshold the construction cannot certify an upper solution
    const KWProblem deep{g, 2.0, -50.0, {1.0, -3.0}};
    KWReport unresolved = solve(deep);
    CHECK(!unresolved.converged);
    CHECK(unresolved.verdict.status == Solvability::Unknown);
    CHECK(unresolved.failure.find("upper solution") != std::string::npos);
}

TEST_CASE("small-c upper solution construction") {
    const WeightedGraph g = two_vertex_graph();
    const VertexFunction h{1.0, -3.0};

    // v = (1, -1), admissibility max|e^{a v} - 1| <= 1/6 gives a = ln(7/6),
    // and the certified range is c >= -a/2 at p = 2.
    const double a_expected = std::log(7.0 / 6.0);
    const double c_threshold = a_expected / 2.0;

    KWProblem inside{g, 2.0, -0.05, h};
    auto up = build_upper_solution_small_c(inside);
    REQUIRE(up.has_value());
    const double a_observed = ((*up)[0] - (*up)[1]) / 2.0;
    CHECK(std::abs(a_observed - a_expected) <= 1e-6);
    CHECK(max_value(residual(inside, *up)) <= 1e-9);

    KWProblem at_edge{g, 2.0, -0.99 * c_threshold, h};
    auto edge = build_upper_solution_small_c(at_edge);
    CHECK(edge.has_value());

    KWProblem outside{g, 2.0, -1.05 * c_threshold, h};
    CHECK(!build_upper_solution_small_c(outside).has_value());

    // constant h: v = 0, any a is admissible, every c < 0 is certified
    KWProblem flat{g, 2.0, -123.0, {-2.0, -2.0}};
    auto flat_up = build_upper_solution_small_c(flat);
    REQUIRE(flat_up.has_value());
    CHECK(max_value(residual(flat, *flat_up)) <= 1e-9);

    CHECK_THROWS_AS(build_upper_solution_small_c({g, 2.0, 1.0, h}), std::invalid_argument);
    CHECK_THROWS_AS(build_upper_solution_small_c({g, 2.0, -1.0, {1.0, 1.0}}),
                    std::invalid_argument);
}

TEST_CASE("nonpositive-h upper solution construction") {
    const WeightedGraph g = two_vertex_graph();

    KWProblem constant{g, 2.0, -8.0, {-1.0, -1.0}};
    VertexFunction up = build_upper_solution_h_nonpositive(constant);
    CHECK(max_value(residual(constant, up)) <= 1e-9);
    CHECK(std::abs(up[0] - up[1]) <= 1e-6);  // constant h gives a constant upper solution

    KWProblem mixed{g, 2.0, -1.0, {0.0, -2.0}};
    up = build_upper_solution_h_nonpositive(mixed);
    CHECK(max_value(residual(mixed, up)) <= 1e-9);

    KWOptions tight;
    tight.margin = 0.01;
    up = build_upper_solution_h_nonpositive(mixed, tight);
    CHECK(max_value(residual(mixed, up)) <= 1e-9);

    CHECK_THROWS_AS(build_upper_solution_h_nonpositive({g, 2.0, -1.0, {1.0, -3.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_upper_solution_h_nonpositive({g, 2.0, -1.0, {0.0, 0.0}}),
                    std::invalid_argument);
}

TEST_CASE("c < 0 on random graphs with nonpositive h") {
    std::mt19937 rng(37);
    for (double p : {2.0, 2.7}) {
        const WeightedGraph g =
            random_connected_graph(rng, {.max_vertices = 8, .w_lo = 0.5, .w_hi = 3.0});
        VertexFunction h = random_vertex_function(rng, g.vertex_count(), -1.5, -0.5);
        h[0] = 0.0;  // exercise the max(1,-h) split
        for (double c : {-0.1, -1.0, -10.0, -100.0}) {
            const KWProblem prob{g, p, c, h};
            KWReport rep = solve(prob);
            check_report_contract(prob, rep);
            REQUIRE(rep.converged);
        }
    }
}

TEST_CASE("translation coupling: u solves (c,h) iff u+s solves (c, h e^{-s})") {
    std::mt19937 rng(41);
    const WeightedGraph g = random_connected_graph(rng, {.max_vertices = 6});
    const std::size_t n = g.vertex_count();

    auto check_coupling = [&](const KWProblem& prob) {
        KWReport base = solve(prob);
        REQUIRE(base.converged);
        for (double s : {-1.0, 0.5}) {
            VertexFunction hs = prob.h;
            for (double& x : hs) x *= std::exp(-s);
            KWReport moved = solve({prob.graph, prob.p, prob.c, hs});
            REQUIRE(moved.converged);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(std::abs(moved.solution[i] - (base.solution[i] + s)) <= 1e-6);
            }
        }
    };

    check_coupling({g, 2.0, 1.0, random_vertex_function(rng, n, 0.5, 2.0)});
    check_coupling({g, 3.0, -1.0, random_vertex_function(rng, n, -2.0, -0.5)});

    VertexFunction h = random_vertex_function(rng, n, -2.0, -1.0);
    h[0] = 1.0;  // sign change with negative mean (n >= 2)
    if (average(g, h) < 0.0) {
        check_coupling({g, 2.0, 0.0, h});
    }
}

TEST_CASE("estimate_c_minus") {
    const WeightedGraph g = two_vertex_graph();

    // Theorem-style sentinel for nonpositive h
    CMinusEstimate est = estimate_c_minus(g, 2.0, {0.0, -2.0});
    CHECK(std::isinf(est.c_solvable));
    CHECK(est.c_solvable < 0.0);
    CHECK(std::isinf(est.c_unresolved));
    CHECK(!est.nonexistence_certified);

    CHECK_THROWS_AS(estimate_c_minus(g, 2.0, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(estimate_c_minus(g, 2.0, {2.0, -1.0}), std::invalid_argument);

    // sign-changing h brackets the threshold near the construction bound
    est = estimate_c_minus(g, 2.0, {1.0, -3.0});
    CHECK(est.c_solvable <= -0.05);
    CHECK(est.c_unresolved <= est.c_solvable);
    CHECK(est.probes > 0);
    CHECK(!est.nonexistence_certified);
}

// Command-line front-end: load graph and vertex-function files, run the
// prechecks and solvers, and emit machine-readable JSON reports.
//
// Exit codes: 0 converged/true, 2 unsolvable, 3 unknown/failed, 1 usage or
// parse errors.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kwgraph/analysis.hpp"
#include "kwgraph/elliptic.hpp"
#include "kwgraph/graph_io.hpp"
#include "kwgraph/kazdan_warner.hpp"

namespace {

using nlohmann::json;
using namespace kwgraph;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitUnsolvable = 2;
constexpr int kExitFailed = 3;

json finite_or_tag(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

const char* status_name(Solvability s) {
    switch (s) {
        case Solvability::Solvable: return "Solvable";
        case Solvability::Unsolvable: return "Unsolvable";
        default: return "Unknown";
    }
}

const char* case_name(KWCase c) {
    switch (c) {
        case KWCase::CZero: return "CZero";
        case KWCase::CPositive: return "CPositive";
        default: return "CNegative";
    }
}

json verdict_to_json(const SolvabilityVerdict& v) {
    return json{{"status", status_name(v.status)}, {"reason", v.reason}};
}

json kw_report_to_json(const WeightedGraph& g, const KWReport& rep) {
    json r;
    r["case"] = case_name(rep.case_tag);
    r["converged"] = rep.converged;
    r["iterations"] = rep.iterations;
    r["residual_inf"] = finite_or_tag(rep.residual_inf);
    if (rep.multiplier) r["multiplier"] = *rep.multiplier;
    if (!rep.failure.empty()) r["failure"] = rep.failure;
    if (!rep.solution.empty()) r["solution"] = vertex_function_to_json(g, rep.solution);
    if (!rep.monotone_trace.empty()) r["monotone_steps"] = rep.monotone_trace.size();
    return r;
}

json elliptic_report_to_json(const WeightedGraph& g, const EllipticReport& rep) {
    json r;
    r["converged"] = rep.converged;
    r["iterations"] = rep.iterations;
    r["residual_inf"] = finite_or_tag(rep.residual_inf);
    r["solution"] = vertex_function_to_json(g, rep.solution);
    return r;
}

struct Cli {
    std::string graph_path;
    double p = 2.0;
    double c = 0.0;
    std::optional<double> h_const;
    std::string h_path;
    std::optional<double> f_const;
    std::string f_path;
    std::optional<double> k_const;
    std::string k_path;
    std::string u_path;
    double tol = 0.0;
    unsigned seed = 0;
    std::string out_path;
};

VertexFunction resolve_function(const WeightedGraph& g, const std::string& path,
                                const std::optional<double>& cval, const char* flag) {
    if (!path.empty() && cval) {
        throw ParseError(std::string(flag) + ": give either a file or a constant, not both");
    }
    if (!path.empty()) return load_vertex_function(path, g);
    if (cval) return VertexFunction(g.vertex_count(), *cval);
    throw ParseError(std::string(flag) + ": required for this command");
}

void emit(const json& report, const std::string& out_path) {
    const std::string text = report.dump(2);
    std::cout << text << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw ParseError("cannot write to '" + out_path + "'");
        out << text << "\n";
    }
}

json config_echo(const std::string& command, const Cli& a) {
    json cfg;
    cfg["graph"] = a.graph_path;
    cfg["p"] = a.p;
    cfg["tol"] = a.tol;
    cfg["seed"] = a.seed;
    if (command == "solve" || command == "verify" || command == "precheck" || command == "cmin") {
        if (a.h_const) cfg["h_const"] = *a.h_const;
        if (!a.h_path.empty()) cfg["h"] = a.h_path;
    }
    if (command == "solve" || command == "verify" || command == "precheck") cfg["c"] = a.c;
    if (!a.f_path.empty()) cfg["f"] = a.f_path;
    if (a.f_const) cfg["f_const"] = *a.f_const;
    if (!a.k_path.empty()) cfg["k"] = a.k_path;
    if (a.k_const) cfg["k_const"] = *a.k_const;
    if (!a.u_path.empty()) cfg["u"] = a.u_path;
    return cfg;
}

int run_command(const std::string& command, const Cli& a) {
    const auto t0 = std::chrono::steady_clock::now();
    WeightedGraph g = load_graph(a.graph_path);

    json out;
    out["command"] = command;
    out["config"] = config_echo(command, a);
    int code = kExitOk;

    KWOptions kw_opts;
    kw_opts.residual_tol = a.tol;

    if (command == "solve" || command == "precheck" || command == "verify") {
        VertexFunction h = resolve_function(g, a.h_path, a.h_const, "--h/--h-const");
        KWProblem prob{g, a.p, a.c, h};
        if (command == "precheck") {
            SolvabilityVerdict v = precheck(prob);
            out["verdict"] = verdict_to_json(v);
            code = v.status == Solvability::Solvable    ? kExitOk
                   : v.status == Solvability::Unsolvable ? kExitUnsolvable
                                                         : kExitFailed;
        } else if (command == "solve") {
            KWReport rep = solve(prob, kw_opts);
            out["verdict"] = verdict_to_json(rep.verdict);
            out["report"] = kw_report_to_json(g, rep);
            code = rep.converged                                      ? kExitOk
                   : rep.verdict.status == Solvability::Unsolvable ? kExitUnsolvable
                                                                      : kExitFailed;
        } else {
            if (a.u_path.empty()) throw ParseError("--u: required for verify");
            VertexFunction u = load_vertex_function(a.u_path, g);
            const double tol = a.tol > 0.0 ? a.tol : default_residual_tol(a.p);
            const double res = sup_norm(residual(prob, u));
            out["residual_inf"] = finite_or_tag(res);
            out["tolerance"] = tol;
            out["verified"] = res <= tol;
            code = res <= tol ? kExitOk : kExitFailed;
        }
    } else if (command == "cmin") {
        VertexFunction h = resolve_function(g, a.h_path, a.h_const, "--h/--h-const");
        CMinusEstimate est = estimate_c_minus(g, a.p, h, kw_opts);
        json e;
        e["c_solvable"] = finite_or_tag(est.c_solvable);
        e["c_unresolved"] = finite_or_tag(est.c_unresolved);
        e["probes"] = est.probes;
        e["note"] = "failure to certify below c_solvable is not a certificate of non-existence";
        out["cmin"] = e;
        code = std::isnan(est.c_solvable) ? kExitFailed : kExitOk;
    } else if (command == "poincare") {
        PoincareOptions popts;
        popts.seed = a.seed;
        PoincareEstimate est = estimate_poincare_constant(g, a.p, popts);
        json e;
        e["constant"] = est.constant;
        e["samples"] = est.samples;
        e["witness"] = vertex_function_to_json(g, est.witness);
        e["bound_kind"] = "lower";
        out["poincare"] = e;
    } else if (command == "lsolve") {
        VertexFunction k = resolve_function(g, a.k_path, a.k_const, "--k/--k-const");
        VertexFunction f = resolve_function(g, a.f_path, a.f_const, "--f/--f-const");
        OperatorL L(g, a.p, k);
        EllipticOptions eopts;
        eopts.residual_tol = a.tol;
        EllipticReport rep = solve_L(L, f, eopts);
        out["report"] = elliptic_report_to_json(g, rep);
        code = rep.converged ? kExitOk : kExitFailed;
    } else if (command == "poisson") {
        VertexFunction f = resolve_function(g, a.f_path, a.f_const, "--f/--f-const");
        EllipticOptions eopts;
        eopts.residual_tol = a.tol;
        EllipticReport rep = solve_p_poisson(g, a.p, f, eopts);
        out["report"] = elliptic_report_to_json(g, rep);
        code = rep.converged ? kExitOk : kExitFailed;
    }

    const auto t1 = std::chrono::steady_clock::now();
    out["wall_time_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    emit(out, a.out_path);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solvers for Delta_p u = c - h e^u and p-Laplacian problems on finite weighted graphs"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print usage");  // frees -h / --h for the h function

    Cli a;
    const std::vector<std::string> commands = {"solve",     "verify", "precheck", "cmin",
                                               "poincare", "lsolve", "poisson"};
    for (const std::string& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->set_help_flag("--help", "print usage");
        sub->add_option("--graph", a.graph_path, "graph JSON file")->required();
        sub->add_option("--p", a.p, "exponent p > 1");
        sub->add_option("--tol", a.tol, "residual tolerance override");
        sub->add_option("--seed", a.seed, "random seed");
        sub->add_option("--out", a.out_path, "also write the report to this file");
        if (name == "solve" || name == "verify" || name == "precheck" || name == "cmin") {
            auto* hp = sub->add_option("--h", a.h_path, "h as a vertex-function JSON file");
            auto* hc = sub->add_option("--h-const", a.h_const, "h as a constant");
            hp->excludes(hc);
            hc->excludes(hp);
        }
        if (name == "solve" || name == "verify" || name == "precheck") {
            sub->add_option("--c", a.c, "constant c");
        }
        if (name == "verify") {
            sub->add_option("--u", a.u_path, "candidate solution (vertex-function or report JSON)");
        }
        if (name == "lsolve") {
            auto* kp = sub->add_option("--k", a.k_path, "k as a vertex-function JSON file");
            auto* kc = sub->add_option("--k-const", a.k_const, "k as a constant");
            kp->excludes(kc);
            kc->excludes(kp);
        }
        if (name == "lsolve" || name == "poisson") {
            auto* fp = sub->add_option("--f", a.f_path, "f as a vertex-function JSON file");
            auto* fc = sub->add_option("--f-const", a.f_const, "f as a constant");
            fp->excludes(fc);
            fc->excludes(fp);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        return run_command(app.get_subcommands().front()->get_name(), a);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailed;
    }
}

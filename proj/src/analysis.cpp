#include "kwgraph/analysis.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "kwgraph/minimize.hpp"

namespace kwgraph {

namespace {

double p_mass(const WeightedGraph& g, const VertexFunction& f, double p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        acc += g.mu()[i] * std::pow(std::abs(f[i]), p);
    }
    return acc;
}

VertexFunction random_mean_zero(const WeightedGraph& g, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    VertexFunction f(g.vertex_count());
    for (double& x : f) x = dist(rng);
    return project_mean_zero(g, f);
}

}  // namespace

LiouvilleVerdict liouville_check(const WeightedGraph& g, const VertexFunction& f, double p,
                                 double eps) {
    if (eps < 0.0) throw std::invalid_argument("eps must be nonnegative");
    const VertexFunction lap = p_laplacian(g, f, p);
    const bool nonneg = min_value(lap) >= -eps;
    const bool nonpos = max_value(lap) <= eps;
    if (!nonneg && !nonpos) return LiouvilleVerdict::Inconclusive;

    // A residual of size eps at one vertex can spread a gap of roughly
    // (n mu_max eps / w_min)^{1/(p-1)} per edge along any path.
    double w_min = g.edges().empty() ? 1.0 : g.edges()[0].weight;
    for (const Edge& e : g.edges()) w_min = std::min(w_min, e.weight);
    double mu_max = 0.0;
    for (double m : g.mu()) mu_max = std::max(mu_max, m);
    const double n = static_cast<double>(g.vertex_count());
    const double per_edge = std::pow(n * mu_max * eps / w_min, 1.0 / (p - 1.0));
    const double threshold = n * per_edge + 1e-9 * (1.0 + sup_norm(f));

    const double gap = max_value(f) - min_value(f);
    return gap <= threshold ? LiouvilleVerdict::Constant : LiouvilleVerdict::Nonconstant;
}

PoincareEstimate estimate_poincare_constant(const WeightedGraph& g, double p,
                                            const PoincareOptions& opts) {
    if (!(p > 1.0)) throw std::invalid_argument("p must be greater than 1");
    if (opts.starts < 1) throw std::invalid_argument("starts must be at least 1");
    const std::size_t n = g.vertex_count();

    // Maximizing the scale-invariant ratio R = integral(|f|^p) / D(f) equals
    // minimizing ln D - ln N; stationary points satisfy the p-eigenvalue
    // equation Delta_p f = -(D/N) |f|^{p-2} f.
    Functional neg_log_ratio{
        .value =
            [&g, p](const VertexFunction& f) {
                return std::log(dirichlet_energy(g, f, p)) - std::log(p_mass(g, f, p));
            },
        .gradient =
            [&g, p](const VertexFunction& f) {
                const double d = dirichlet_energy(g, f, p);
                const double m = p_mass(g, f, p);
                VertexFunction grad = p_laplacian(g, f, p);
                for (std::size_t i = 0; i < f.size(); ++i) {
                    grad[i] = -p * grad[i] / d - p * signed_pow(f[i], p - 1.0) / m;
                }
                return grad;
            },
        .domain_guard =
            [&g, p](const VertexFunction& f) {
                const double d = dirichlet_energy(g, f, p);
                const double m = p_mass(g, f, p);
                return std::isfinite(d) && std::isfinite(m) && d > 0.0 && m > 0.0;
            },
    };

    std::mt19937 rng(opts.seed);
    MinimizeOptions mopts;
    mopts.project_mean_zero = true;
    mopts.grad_tol = opts.grad_tol;
    mopts.max_iters = opts.max_iters;

    PoincareEstimate best;
    best.samples = opts.starts;
    for (int s = 0; s < opts.starts; ++s) {
        VertexFunction x0;
        if (s == 0) {
            // deterministic alternating start
            x0.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) x0[i] = (i % 2 == 0) ? 1.0 : -1.0;
            x0 = project_mean_zero(g, x0);
        } else {
            x0 = random_mean_zero(g, rng);
        }
        if (dirichlet_energy(g, x0, p) <= 0.0) {
            x0.assign(n, 0.0);
            x0[0] = 1.0;
            x0 = project_mean_zero(g, x0);
        }
        MinimizeResult res = minimize(g, neg_log_ratio, x0, mopts);
        const double d = dirichlet_energy(g, res.minimizer, p);
        const double m = p_mass(g, res.minimizer, p);
        if (!(d > 0.0)) continue;
        const double ratio = m / d;
        if (ratio > best.constant) {
            best.constant = ratio;
            best.witness = res.minimizer;
        }
    }
    if (!best.witness.empty()) {
        const double scale = std::pow(dirichlet_energy(g, best.witness, p), 1.0 / p);
        for (double& x : best.witness) x /= scale;
        best.witness = project_mean_zero(g, best.witness);
        // report exactly the ratio the witness attains
        best.constant =
            p_mass(g, best.witness, p) / dirichlet_energy(g, best.witness, p);
    }
    return best;
}

double sup_norm_embedding_check(const WeightedGraph& g, double p, int trials, unsigned seed) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (!(p > 1.0)) throw std::invalid_argument("p must be greater than 1");
    std::mt19937 rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        VertexFunction f = random_mean_zero(g, rng);
        double d = dirichlet_energy(g, f, p);
        while (!(d > 0.0)) {
            f = random_mean_zero(g, rng);
            d = dirichlet_energy(g, f, p);
        }
        const double scale = std::pow(d, 1.0 / p);
        for (double& x : f) x /= scale;
        worst = std::max(worst, sup_norm(f));
    }
    return worst;
}

}  // namespace kwgraph

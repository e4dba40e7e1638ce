#include "kwgraph/minimize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace kwgraph {

namespace {

double mu_inner(const WeightedGraph& g, const VertexFunction& a, const VertexFunction& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += g.mu()[i] * a[i] * b[i];
    return acc;
}

void validate(const MinimizeOptions& opts) {
    if (!(opts.grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
    if (opts.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (!(opts.armijo_c > 0.0 && opts.armijo_c < 1.0)) {
        throw std::invalid_argument("armijo_c must lie in (0,1)");
    }
    if (!(opts.backtrack_factor > 0.0 && opts.backtrack_factor < 1.0)) {
        throw std::invalid_argument("backtrack_factor must lie in (0,1)");
    }
    if (!(opts.initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
}

}  // namespace

VertexFunction project_mean_zero(const WeightedGraph& g, VertexFunction f) {
    const double mean = average(g, f);
    for (double& x : f) x -= mean;
    return f;
}

MinimizeResult minimize(const WeightedGraph& g, const Functional& F, VertexFunction x0,
                        const MinimizeOptions& opts) {
    validate(opts);
    if (x0.size() != g.vertex_count()) {
        throw std::invalid_argument("x0 size does not match vertex count");
    }
    if (opts.project_mean_zero) x0 = project_mean_zero(g, x0);
    if (F.domain_guard && !F.domain_guard(x0)) {
        throw std::invalid_argument("initial point violates the domain guard");
    }

    auto eval_grad = [&](const VertexFunction& x) {
        VertexFunction grad = F.gradient(x);
        if (opts.project_mean_zero) grad = project_mean_zero(g, grad);
        return grad;
    };

    MinimizeResult result;
    VertexFunction x = std::move(x0);
    double fx = F.value(x);
    if (!std::isfinite(fx)) throw std::invalid_argument("objective is not finite at x0");
    VertexFunction grad = eval_grad(x);
    double gnorm = sup_norm(grad);
    result.trace.push_back({0, fx, gnorm});

    double step = opts.initial_step;
    VertexFunction trial(x.size());

    long iter = 0;
    for (; iter < opts.max_iters; ++iter) {
        if (gnorm <= opts.grad_tol) {
            result.status = MinimizeStatus::Converged;
            result.converged = true;
            break;
        }

        // Steepest descent in the mu metric: d = -grad, <grad,d> = -|grad|^2.
        const double dir_sq = mu_inner(g, grad, grad);
        // Below this, value differences are floating-point noise and the
        // sufficient-decrease test cannot be resolved.
        const double value_floor =
            8.0 * std::numeric_limits<double>::epsilon() * (std::abs(fx) + 1e-300);

        double alpha = step;
        double ft = fx;
        bool accepted = false;
        for (int halving = 0; halving < 240; ++halving) {
            const double required = opts.armijo_c * alpha * dir_sq;
            if (required < value_floor) break;
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - alpha * grad[i];
            if (!F.domain_guard || F.domain_guard(trial)) {
                ft = F.value(trial);
                if (std::isfinite(ft) && ft <= fx - required) {
                    accepted = true;
                    break;
                }
            }
            alpha *= opts.backtrack_factor;
        }

        VertexFunction new_grad;
        if (accepted) {
            new_grad = eval_grad(trial);
        } else {
            // The decrease demanded by the Armijo test is smaller than the
            // resolution of the objective values. Accept a step that strictly
            // contracts the gradient instead, while still rejecting any
            // measurable increase of the value; this carries the iteration
            // from the sqrt(eps) plateau down to tight gradient tolerances.
            alpha = step;
            for (int halving = 0; halving < 80 && !accepted; ++halving) {
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - alpha * grad[i];
                if (!F.domain_guard || F.domain_guard(trial)) {
                    const double cand = F.value(trial);
                    if (std::isfinite(cand) && cand <= fx + value_floor) {
                        VertexFunction gt = eval_grad(trial);
                        if (mu_inner(g, gt, gt) <= (1.0 - 1e-4) * dir_sq) {
                            ft = cand;
                            new_grad = std::move(gt);
                            accepted = true;
                            break;
                        }
                    }
                }
                alpha *= opts.backtrack_factor;
            }
            if (!accepted) {
                result.status = MinimizeStatus::LineSearchFailure;
                break;
            }
        }

        // Barzilai-Borwein warm start for the next trial step.
        double sy = 0.0, yy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = trial[i] - x[i];
            const double y = new_grad[i] - grad[i];
            sy += g.mu()[i] * s * y;
            yy += g.mu()[i] * y * y;
        }
        step = (std::isfinite(sy) && std::isfinite(yy) && sy > 0.0 && yy > 0.0)
                   ? std::min(std::max(sy / yy, 1e-12), 1e12)
                   : opts.initial_step;

        x.swap(trial);
        fx = ft;
        grad = std::move(new_grad);
        gnorm = sup_norm(grad);
        result.trace.push_back({iter + 1, fx, gnorm});
    }

    if (result.status == MinimizeStatus::IterationLimit && gnorm <= opts.grad_tol) {
        // max_iters hit exactly at the stationary point
        result.status = MinimizeStatus::Converged;
        result.converged = true;
    }
    result.minimizer = std::move(x);
    result.final_value = fx;
    result.final_grad_norm = gnorm;
    result.iterations = iter;
    return result;
}

double check_gradient(const WeightedGraph& g, const Functional& F, const VertexFunction& x,
                      double h_fd) {
    if (!(h_fd > 0.0)) throw std::invalid_argument("h_fd must be positive");
    const VertexFunction grad = F.gradient(x);
    VertexFunction probe = x;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h_fd;
        const double fp = F.value(probe);
        probe[i] = x[i] - h_fd;
        const double fm = F.value(probe);
        probe[i] = x[i];
        const double fd = (fp - fm) / (2.0 * h_fd);
        worst = std::max(worst, std::abs(fd - g.mu()[i] * grad[i]));
    }
    return worst;
}

}  // namespace kwgraph

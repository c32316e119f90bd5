#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "psafe/estimator.hpp"
#include "psafe/geometry.hpp"
#include "psafe/sde.hpp"

namespace psafe {

struct ProblemSpec {
    const SdeModel* model = nullptr;
    const Region* region = nullptr;
    double p = 0.5;
    double T = 1.0;

    void validate() const {
        if (!model || !region) throw std::invalid_argument("ProblemSpec: model/region missing");
        if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ProblemSpec: p must be in (0,1)");
        if (!(T > 0.0)) throw std::invalid_argument("ProblemSpec: T must be positive");
        if (model->dim() != region->dim())
            throw std::invalid_argument("ProblemSpec: model/region dimension mismatch");
    }
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct GdConfig {
    double lambda = 5e-2;
    int max_iters = 50;
    double err_tol = 0.02;       // convergence tolerance on |p_hat - p|
    AdamParams adam;
    double stall_grad_tol = 1e-8; // absolute floor; the 3*se noise band is added on top
    bool plain_gd = false;        // ADAM is the default
    int stall_patience = 3;       // consecutive stalled iterations before acting
    int stall_kicks = 2;          // deterministic saddle-escape nudges before giving up

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("GdConfig: lambda must be positive");
        if (max_iters < 1) throw std::invalid_argument("GdConfig: max_iters must be >= 1");
        if (!(err_tol > 0.0)) throw std::invalid_argument("GdConfig: err_tol must be positive");
    }
};

// Bias-corrected ADAM state; update() returns the descent step for one
// gradient sample (already scaled by lambda).
struct AdamState {
    Vec m, v;
    int t = 0;

    void reset(int d) {
        m = Vec::Zero(d);
        v = Vec::Zero(d);
        t = 0;
    }

    Vec update(const Vec& g, double lambda, const AdamParams& p) {
        if (m.size() != g.size()) reset(static_cast<int>(g.size()));
        ++t;
        m = p.beta1 * m + (1.0 - p.beta1) * g;
        v = p.beta2 * v + (1.0 - p.beta2) * g.cwiseProduct(g);
        const Vec mhat = m / (1.0 - std::pow(p.beta1, t));
        const Vec vhat = v / (1.0 - std::pow(p.beta2, t));
        return lambda * (mhat.array() / (vhat.array().sqrt() + p.eps)).matrix();
    }
};

enum class GdStatus { Converged, StallSuspected, MaxIters, LeftRegion };
enum class StallClass { OnBoundary, StallSuspected, Progressing };

struct GdResult {
    Vec x_star;
    Estimate estimate_at_x_star;
    GdStatus status = GdStatus::MaxIters;
    int iterations = 0;
    std::vector<std::pair<Vec, double>> trace; // (point, p_hat) visited
};

// Gradient of the objective 0.5*(p_hat - p)^2: (p_hat - p) * grad.
Vec objective_gradient(const Estimate& est, double p);

StallClass classify_stall(const Estimate& est, double p, const GdConfig& cfg);

// Evaluator abstraction so the same driver runs on MC estimates or on an
// analytic surrogate. iter is 1-based and keys the per-iteration seed.
using ProbEvaluator = std::function<Estimate(const Vec& x, int iter)>;

// Core driver: iterate x <- x - lambda * update((p_hat - p) * grad), project
// onto the constraints, keep the iterate strictly inside the region (when one
// is given) at distance >= interior_margin.
GdResult minimize_to_level(const ProbEvaluator& eval, const Vec& x0, double p,
                           const GdConfig& cfg,
                           const std::vector<PlaneConstraint>& constraints = {},
                           const Region* region = nullptr, double interior_margin = 0.0);

GdResult find_boundary_point(const ProblemSpec& spec, const Vec& x0, const SimConfig& sim,
                             const EstimateConfig& est_cfg, const GdConfig& gd_cfg,
                             const std::optional<PlaneConstraint>& constraint = {});

// Same but with several simultaneous plane/half-plane constraints (used by
// the border walk: section plane + search half-plane).
GdResult find_boundary_point_constrained(const ProblemSpec& spec, const Vec& x0,
                                         const SimConfig& sim, const EstimateConfig& est_cfg,
                                         const GdConfig& gd_cfg,
                                         const std::vector<PlaneConstraint>& constraints);

// Typical one-step diffusion excursion sqrt(h)*||sigma||_F/sqrt(d), the margin
// kept between iterates and the region boundary.
double diffusion_step_scale(const SdeModel& model, const Vec& x, const SimConfig& sim);

// Radial probe for a gradient-informative start point: bisect along
// centroid + t*direction until p_hat lands in [p_lo, p_hi]. Deep-interior
// points have a statistically zero Malliavin gradient, so descent should
// start from a moderately safe point instead of the centroid.
Vec probe_start(const ProblemSpec& spec, const SimConfig& sim, const EstimateConfig& est_cfg,
                const Vec& direction, double p_lo = 0.75, double p_hi = 0.85);

} // namespace psafe

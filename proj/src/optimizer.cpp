#include "psafe/optimizer.hpp"

#include <cmath>

#include "psafe/rng.hpp"

namespace psafe {

Vec objective_gradient(const Estimate& est, double p) {
    return (est.p_hat - p) * est.grad;
}

StallClass classify_stall(const Estimate& est, double p, const GdConfig& cfg) {
    const double gap = std::abs(est.p_hat - p);
    if (gap < cfg.err_tol) return StallClass::OnBoundary;
    const double se_norm = est.se_grad.size() > 0 ? est.se_grad.norm() : 0.0;
    // absolute floor catches exact analytic saddles where se is zero too
    const bool statistically_zero = est.grad.norm() <= 3.0 * se_norm + cfg.stall_grad_tol;
    const double obj_grad_norm = gap * est.grad.norm();
    const bool obj_flat = obj_grad_norm < cfg.stall_grad_tol + 3.0 * gap * se_norm;
    if (statistically_zero && obj_flat) return StallClass::StallSuspected;
    return StallClass::Progressing;
}

double diffusion_step_scale(const SdeModel& model, const Vec& x, const SimConfig& sim) {
    const int d = model.dim();
    Mat sigma(d, d);
    model.diffusion({x.data(), static_cast<size_t>(d)},
                    {sigma.data(), static_cast<size_t>(sigma.size())});
    return std::sqrt(sim.step()) * sigma.norm() / std::sqrt(static_cast<double>(d));
}

namespace {

bool interior_ok(const Region* region, const Vec& x, double margin) {
    if (!region) return true;
    return region->interior_distance(x) >= std::max(margin, kBoundaryDistFloor);
}

} // namespace

GdResult minimize_to_level(const ProbEvaluator& eval, const Vec& x0, double p,
                           const GdConfig& cfg, const std::vector<PlaneConstraint>& constraints,
                           const Region* region, double interior_margin) {
    cfg.validate();
    const int d = static_cast<int>(x0.size());

    Vec x = project_onto_constraints(constraints, x0);
    if (region && !region->contains(x))
        throw std::domain_error("find_boundary_point: start point outside the region");

    GdResult res;
    res.x_star = x;
    AdamState adam;
    adam.reset(d);
    int stall_run = 0;
    int kicks_used = 0;
    // overshoot control: each sign flip of p_hat - p halves the step scale,
    // otherwise a fixed-magnitude ADAM step can straddle the level set forever
    double shrink = 1.0;
    int prev_gap_sign = 0;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        Estimate est = eval(x, iter);
        res.trace.emplace_back(x, est.p_hat);
        res.x_star = x;
        res.estimate_at_x_star = est;
        res.iterations = iter - 1;

        if (std::abs(est.p_hat - p) < cfg.err_tol) {
            res.status = GdStatus::Converged;
            return res;
        }

        if (classify_stall(est, p, cfg) == StallClass::StallSuspected) {
            if (++stall_run >= cfg.stall_patience) {
                if (kicks_used < cfg.stall_kicks) {
                    // Deterministic nudge off the saddle, cycling coordinates.
                    Vec kick = Vec::Zero(d);
                    kick[kicks_used % d] = cfg.lambda;
                    Vec xk = project_onto_constraints(constraints, x + kick);
                    for (int halving = 0; halving < 50 && !interior_ok(region, xk, interior_margin);
                         ++halving) {
                        kick *= 0.5;
                        xk = project_onto_constraints(constraints, x + kick);
                    }
                    if (interior_ok(region, xk, interior_margin)) x = xk;
                    adam.reset(d);
                    stall_run = 0;
                    ++kicks_used;
                    continue;
                }
                res.status = GdStatus::StallSuspected;
                return res;
            }
        } else {
            stall_run = 0;
        }

        const int gap_sign = est.p_hat > p ? 1 : -1;
        if (prev_gap_sign != 0 && gap_sign != prev_gap_sign) shrink = std::max(shrink * 0.5, 1.0 / 64.0);
        prev_gap_sign = gap_sign;

        Vec g = objective_gradient(est, p);
        const double lam = cfg.lambda * shrink;
        Vec step = cfg.plain_gd ? Vec(lam * g) : adam.update(g, lam, cfg.adam);

        // Clip the step so the iterate stays strictly inside A with a margin
        // of one typical Euler excursion; estimates degrade near the border.
        double scale = 1.0;
        Vec xn = project_onto_constraints(constraints, x - scale * step);
        int halvings = 0;
        while (!interior_ok(region, xn, interior_margin) && halvings < 60) {
            scale *= 0.5;
            xn = project_onto_constraints(constraints, x - scale * step);
            ++halvings;
        }
        if (!interior_ok(region, xn, interior_margin)) {
            res.status = GdStatus::LeftRegion;
            return res;
        }
        x = xn;
    }

    Estimate est = eval(x, cfg.max_iters + 1);
    res.trace.emplace_back(x, est.p_hat);
    res.x_star = x;
    res.estimate_at_x_star = est;
    res.iterations = cfg.max_iters;
    res.status = std::abs(est.p_hat - p) < cfg.err_tol ? GdStatus::Converged : GdStatus::MaxIters;
    return res;
}

GdResult find_boundary_point_constrained(const ProblemSpec& spec, const Vec& x0,
                                         const SimConfig& sim, const EstimateConfig& est_cfg,
                                         const GdConfig& gd_cfg,
                                         const std::vector<PlaneConstraint>& constraints) {
    spec.validate();
    sim.validate();
    if (sim.T != spec.T)
        throw std::invalid_argument("find_boundary_point: SimConfig horizon differs from spec.T");

    const double margin = diffusion_step_scale(*spec.model, x0, sim);
    auto eval = [&](const Vec& x, int iter) {
        EstimateConfig local = est_cfg;
        // Fresh noise each iteration so the descent does not overfit one draw.
        local.seed = est_cfg.seed + static_cast<uint64_t>(iter);
        return estimate(*spec.model, *spec.region, x, sim, local);
    };
    return minimize_to_level(eval, x0, spec.p, gd_cfg, constraints, spec.region, margin);
}

Vec probe_start(const ProblemSpec& spec, const SimConfig& sim, const EstimateConfig& est_cfg,
                const Vec& direction, double p_lo, double p_hi) {
    spec.validate();
    if (!(p_lo < p_hi)) throw std::invalid_argument("probe_start: requires p_lo < p_hi");
    const Vec c = spec.region->centroid();
    const double dn = direction.norm();
    if (!(dn > 0.0)) throw std::invalid_argument("probe_start: zero direction");
    const Vec u = direction / dn;

    // bracket [0, t_hi] where t_hi is just inside the boundary along u
    double t_hi = spec.region->interior_distance(c);
    while (spec.region->interior_distance(c + t_hi * u) <= 0.0) t_hi *= 0.5;
    {
        double step = t_hi;
        while (step > 1e-6 * t_hi) {
            if (spec.region->interior_distance(c + (t_hi + step) * u) > 0.0) t_hi += step;
            step *= 0.5;
        }
    }
    const double margin = diffusion_step_scale(*spec.model, c, sim);
    t_hi = std::max(0.0, t_hi - margin);

    auto p_at = [&](double t, int k) {
        EstimateConfig local = est_cfg;
        local.seed = est_cfg.seed ^ rng::splitmix64(0x9b0be + static_cast<uint64_t>(k));
        return estimate(*spec.model, *spec.region, c + t * u, sim, local).p_hat;
    };

    // p_hat decreases along the ray; plain bisection on the target band
    double lo = 0.0, hi = t_hi;
    double t = t_hi, p = p_at(t, 0);
    if (p >= p_lo) return c + t * u; // even the near-boundary point is safe enough
    for (int k = 1; k <= 30; ++k) {
        t = 0.5 * (lo + hi);
        p = p_at(t, k);
        if (p > p_hi) {
            lo = t;
        } else if (p < p_lo) {
            hi = t;
        } else {
            return c + t * u;
        }
    }
    return c + t * u;
}

GdResult find_boundary_point(const ProblemSpec& spec, const Vec& x0, const SimConfig& sim,
                             const EstimateConfig& est_cfg, const GdConfig& gd_cfg,
                             const std::optional<PlaneConstraint>& constraint) {
    std::vector<PlaneConstraint> cs;
    if (constraint) cs.push_back(*constraint);
    return find_boundary_point_constrained(spec, x0, sim, est_cfg, gd_cfg, cs);
}

} // namespace psafe

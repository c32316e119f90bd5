#include "psafe/border.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "psafe/rng.hpp"

namespace psafe {

using Eigen::Vector2d;

WalkFrame WalkFrame::full_2d() {
    WalkFrame f;
    f.origin = Vec::Zero(2);
    f.axis_u = Vec::Zero(2);
    f.axis_v = Vec::Zero(2);
    f.axis_u[0] = 1.0;
    f.axis_v[1] = 1.0;
    return f;
}

WalkFrame WalkFrame::from_plane(const PlaneConstraint& plane) {
    if (plane.normal.size() != 3)
        throw std::invalid_argument("WalkFrame: section planes are 3-dimensional");
    Eigen::Vector3d n = plane.normal;
    int smallest = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(n[i]) < std::abs(n[smallest])) smallest = i;
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[smallest] = 1.0;
    Eigen::Vector3d u = n.cross(e).normalized();
    Eigen::Vector3d v = n.cross(u);

    WalkFrame f;
    f.origin = plane.point;
    f.axis_u = u;
    f.axis_v = v;
    f.plane = plane;
    return f;
}

namespace {

Vector2d rot90(const Vector2d& t) { return {-t[1], t[0]}; }

// Least-squares parabola through the window points in chord-aligned local
// coordinates; returns the forecast point at one chord step past the last
// point (abscissa of 2*x_m - x_{m-1}).
std::optional<Vector2d> fit_parabola_forecast(const std::vector<Vector2d>& pts) {
    const size_t w = pts.size();
    const Vector2d& qm = pts.back();
    Vector2d chord = qm - pts.front();
    const double clen = chord.norm();
    if (clen < 1e-14) return std::nullopt;
    const Vector2d a = chord / clen;
    const Vector2d b = rot90(a);

    Eigen::Matrix3d AtA = Eigen::Matrix3d::Zero();
    Eigen::Vector3d Aty = Eigen::Vector3d::Zero();
    double smin = 0.0, smax = 0.0;
    for (const auto& q : pts) {
        const Vector2d r = q - qm;
        const double s = r.dot(a);
        const double y = r.dot(b);
        smin = std::min(smin, s);
        smax = std::max(smax, s);
        Eigen::Vector3d phi(1.0, s, s * s);
        AtA += phi * phi.transpose();
        Aty += y * phi;
    }
    if (smax - smin < 1e-10 * (1.0 + clen)) return std::nullopt; // collinear abscissae

    Eigen::FullPivLU<Eigen::Matrix3d> lu(AtA);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::Vector3d c = lu.solve(Aty);

    double sf = (qm - pts[w - 2]).dot(a);
    if (sf <= 0.0) sf = (qm - pts[w - 2]).norm();
    if (sf <= 0.0) return std::nullopt;
    const double yf = c[0] + c[1] * sf + c[2] * sf * sf;
    return Vector2d(qm + sf * a + yf * b);
}

double mean_or(const std::deque<double>& xs, double fallback) {
    if (xs.empty()) return fallback;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

} // namespace

void DirectionPlanner::add_point(const Vector2d& q) {
    history_.push_back(q);
    const size_t keep = static_cast<size_t>(cfg_.parabola_window) + 2;
    if (history_.size() > keep) history_.erase(history_.begin(), history_.end() - keep);
}

void DirectionPlanner::reset(const Vector2d& q) {
    history_.clear();
    history_.push_back(q);
    grad_err_.clear();
    par_err_.clear();
    pending_grad_fc_.reset();
    pending_par_fc_.reset();
}

std::optional<Vector2d> DirectionPlanner::parabola_forecast() const {
    if (history_.size() < static_cast<size_t>(cfg_.parabola_window)) return std::nullopt;
    std::vector<Vector2d> tail(history_.end() - cfg_.parabola_window, history_.end());
    return fit_parabola_forecast(tail);
}

Vector2d DirectionPlanner::propose(const Vector2d& grad2,
                                   const std::optional<Vector2d>& prev_dir) {
    if (history_.empty()) throw std::logic_error("DirectionPlanner: no points yet");
    const Vector2d qm = history_.back();

    Vector2d base;
    if (grad2.norm() > 1e-14) {
        base = rot90(grad2).normalized();
        if (prev_dir && base.dot(*prev_dir) < 0.0) base = -base;
    } else if (prev_dir) {
        base = prev_dir->normalized();
    } else if (history_.size() >= 2) {
        base = (qm - history_[history_.size() - 2]).normalized();
    } else {
        base = Vector2d(1.0, 0.0);
    }

    Vector2d dir = base;
    std::optional<Vector2d> fc = parabola_forecast();
    if (fc) {
        Vector2d par_dir = *fc - qm;
        if (par_dir.norm() > 1e-14) {
            par_dir.normalize();
            if (par_dir.dot(base) < 0.0) par_dir = -par_dir;
            const double reg = cfg_.gamma / 100.0;
            const double wg = 1.0 / (reg + mean_or(grad_err_, cfg_.gamma));
            const double wp = 1.0 / (reg + mean_or(par_err_, cfg_.gamma));
            Vector2d blended = wg * base + wp * par_dir;
            if (blended.norm() > 1e-14) dir = blended.normalized();
        }
    }

    pending_grad_fc_ = qm + cfg_.gamma * base;
    pending_par_fc_ = fc;
    return dir;
}

void DirectionPlanner::observe(const Vector2d& realized) {
    const size_t cap = static_cast<size_t>(cfg_.parabola_window);
    if (pending_grad_fc_) {
        grad_err_.push_back((*pending_grad_fc_ - realized).norm());
        while (grad_err_.size() > cap) grad_err_.pop_front();
    }
    if (pending_par_fc_) {
        par_err_.push_back((*pending_par_fc_ - realized).norm());
        while (par_err_.size() > cap) par_err_.pop_front();
    }
    pending_grad_fc_.reset();
    pending_par_fc_.reset();
}

Vec propose_direction(const std::vector<BorderPoint>& recent, const Vec& grad_at_last,
                      const std::optional<Vec>& prev_dir,
                      const std::optional<PlaneConstraint>& plane, const WalkConfig& cfg) {
    if (recent.empty()) throw std::invalid_argument("propose_direction: needs at least 1 point");
    WalkFrame frame = plane ? WalkFrame::from_plane(*plane) : WalkFrame::full_2d();
    DirectionPlanner planner(cfg);
    for (const auto& bp : recent) planner.add_point(frame.to_plane(bp.x));
    const Vector2d grad2(frame.axis_u.dot(grad_at_last), frame.axis_v.dot(grad_at_last));
    std::optional<Vector2d> prev2;
    if (prev_dir) prev2 = Vector2d(frame.axis_u.dot(*prev_dir), frame.axis_v.dot(*prev_dir));
    return frame.dir_to_world(planner.propose(grad2, prev2)).normalized();
}

namespace {

// Shared landing machinery: run constrained GD, check the landing distance,
// then re-estimate with a fresh seed before admitting the point (catches
// optimizer overfit to one noise draw).
struct Lander {
    const ProblemSpec& spec;
    const SimConfig& sim;
    const EstimateConfig& est_cfg;
    const WalkConfig& cfg;
    GdConfig gd;
    const WalkFrame& frame;
    uint64_t salt;
    uint64_t ctr = 0;

    struct Attempt {
        bool ok = false;
        bool have_result = false;
        GdResult res;
        BorderPoint point;
    };

    Attempt land(const Vec& start, const Vec& dir, const Vec& anchor) {
        Attempt at;
        std::vector<PlaneConstraint> cs;
        if (frame.plane) cs.push_back(*frame.plane);
        // No-backtracking half-plane anchored a quarter step past the previous
        // point. Anchoring at the proposal instead makes sharp corners of the
        // border infeasible and the walk can never turn them.
        const Vec u = dir.normalized();
        const double margin = 0.25 * std::max(0.0, u.dot(start - anchor));
        cs.emplace_back(anchor + margin * u, u, +1);

        EstimateConfig ec = est_cfg;
        ec.seed = est_cfg.seed ^ rng::splitmix64(salt + 2 * ctr);
        ++ctr;
        try {
            at.res = find_boundary_point_constrained(spec, start, sim, ec, gd, cs);
            at.have_result = true;
        } catch (const std::domain_error&) {
            return at; // infeasible start; the adaptive loop will shrink
        }
        if (at.res.status != GdStatus::Converged) return at;
        if ((at.res.x_star - anchor).norm() > 2.0 * cfg.gamma) return at;

        EstimateConfig ec2 = est_cfg;
        ec2.seed = est_cfg.seed ^ rng::splitmix64(salt + 2 * ctr + 1);
        ++ctr;
        Estimate chk = estimate(*spec.model, *spec.region, at.res.x_star, sim, ec2);
        // allow the re-check its own sampling noise; it guards against the
        // optimizer having overfit one draw, not against honest se-sized drift
        if (std::abs(chk.p_hat - spec.p) > gd.err_tol + 3.0 * chk.se_p) return at;

        at.point.x = at.res.x_star;
        at.point.p_hat = chk.p_hat;
        at.point.grad = chk.grad;
        at.point.se_p = chk.se_p;
        at.point.se_grad = chk.se_grad;
        at.ok = true;
        return at;
    }
};

Vec project_into_frame_dir(const WalkFrame& frame, const Vec& v) {
    const Vector2d t(frame.axis_u.dot(v), frame.axis_v.dot(v));
    return frame.dir_to_world(t);
}

} // namespace

AdaptiveOutcome adaptive_constraint(const BorderPoint& x_m, const Vec& dir,
                                    const GdResult& failed, const ProblemSpec& spec,
                                    const SimConfig& sim, const EstimateConfig& est_cfg,
                                    const WalkConfig& cfg, const GdConfig& gd_cfg,
                                    const WalkFrame& frame, uint64_t seed_salt) {
    GdConfig gd = gd_cfg;
    gd.stall_kicks = 0;
    Lander lander{spec, sim, est_cfg, cfg, gd, frame, 0x1ada9417ull ^ seed_salt};

    AdaptiveOutcome out;
    std::optional<Vec> cur_star;
    if (!failed.trace.empty()) cur_star = failed.x_star;
    Vec d_cur = dir;

    for (int step = 1; step <= cfg.adaptive_cap; ++step) {
        if (cur_star) {
            // Aim at the reflected candidate 2*x_star - x_m and renormalize.
            Vec v = 2.0 * (*cur_star) - x_m.x - x_m.x;
            v = project_into_frame_dir(frame, v);
            if (v.norm() > 1e-12) d_cur = v.normalized();
        }
        const double rho = cfg.gamma / (2.0 * step);
        out.exploration_distances.push_back(rho);
        const Vec xbar = x_m.x + rho * d_cur;

        auto at = lander.land(xbar, d_cur, x_m.x);
        if (at.ok) {
            out.result = at.res;
            out.steps_used = step;
            return out;
        }
        if (at.have_result && !at.res.trace.empty()) cur_star = at.res.x_star;
    }
    out.invert_direction = true;
    out.steps_used = cfg.adaptive_cap;
    return out;
}

BorderPolyline walk_border_2d(const ProblemSpec& spec, const BorderPoint& x_star,
                              const SimConfig& sim, const EstimateConfig& est_cfg,
                              const WalkConfig& cfg, const GdConfig& gd_cfg,
                              const std::optional<PlaneConstraint>& plane, int section_id) {
    spec.validate();
    cfg.validate();
    const int d = spec.model->dim();
    if (plane) {
        if (d != 3) throw std::invalid_argument("walk_border_2d: section planes require d = 3");
    } else if (d != 2) {
        throw std::invalid_argument("walk_border_2d: d = 2 required unless a plane is given");
    }
    if (std::abs(x_star.p_hat - spec.p) >= gd_cfg.err_tol)
        throw std::invalid_argument("walk_border_2d: seed point is not on the border");

    const WalkFrame frame = plane ? WalkFrame::from_plane(*plane) : WalkFrame::full_2d();
    GdConfig wgd = gd_cfg;
    wgd.stall_kicks = 0; // adaptive recovery owns failure handling here

    BorderPolyline poly;
    poly.plane = plane;
    BorderPoint first = x_star;
    first.index = 0;
    first.section_id = section_id;
    poly.points.push_back(first);

    const Vector2d q_first = frame.to_plane(first.x);
    DirectionPlanner planner(cfg);
    planner.add_point(q_first);

    Lander lander{spec, sim, est_cfg, cfg, wgd, frame,
                  0x3a1cull ^ (static_cast<uint64_t>(section_id + 7) << 20)};

    std::optional<Vector2d> prev_dir;
    int inversions = 0;
    const double gamma = cfg.gamma;
    const double ctol = cfg.closure_distance();
    const bool dbg = std::getenv("PSAFE_WALK_DEBUG") != nullptr;

    auto close_with_first = [&]() {
        BorderPoint again = poly.points.front();
        again.index = static_cast<int>(poly.points.size());
        poly.points.push_back(again);
        poly.closed = true;
    };

    while (static_cast<int>(poly.points.size()) < cfg.max_points) {
        const BorderPoint& last = poly.points.back();
        const Vector2d q_last = frame.to_plane(last.x);
        const Vector2d grad2(frame.axis_u.dot(last.grad), frame.axis_v.dot(last.grad));
        Vector2d dir2 = planner.propose(grad2, prev_dir);

        bool accepted = false;
        bool closed_now = false;
        for (int attempt = 0; attempt < 2 && !accepted && !closed_now; ++attempt) {
            const Vector2d prop2 = q_last + gamma * dir2;
            const int n_pts = static_cast<int>(poly.points.size());

            // Revisit guard: conflicts against points older than the window.
            int conflict = -1;
            for (int i = 0; i < n_pts - cfg.parabola_window; ++i) {
                const Vector2d qi = frame.to_plane(poly.points[i].x);
                if ((prop2 - qi).norm() < 0.5 * gamma) {
                    conflict = i;
                    break;
                }
            }
            if (conflict >= 0) {
                if (dbg)
                    std::fprintf(stderr,
                                 "[walk] n=%d conflict with pt %d at prop (%.2f, %.2f) "
                                 "dir (%.2f, %.2f) attempt %d inv %d\n",
                                 n_pts, conflict, prop2[0], prop2[1], dir2[0], dir2[1],
                                 attempt, inversions);
                if (conflict <= cfg.parabola_window && n_pts > cfg.step_min) {
                    close_with_first();
                    closed_now = true;
                    break;
                }
                if (attempt == 1 || ++inversions > cfg.max_inversions) {
                    poly.note = "aborted: proposals keep revisiting explored border";
                    return poly;
                }
                dir2 = -dir2;
                planner.reset(q_last);
                prev_dir = dir2;
                continue;
            }

            const Vec dirw = frame.dir_to_world(dir2);
            const Vec propw = frame.to_world(prop2);
            auto at = lander.land(propw, dirw, last.x);
            if (dbg && !at.ok)
                std::fprintf(stderr,
                             "[walk] n=%d landing failed at prop (%.2f, %.2f) dir (%.2f, %.2f) "
                             "have_result %d status %d\n",
                             n_pts, prop2[0], prop2[1], dir2[0], dir2[1],
                             at.have_result ? 1 : 0,
                             at.have_result ? static_cast<int>(at.res.status) : -1);
            if (!at.ok) {
                GdResult failed = at.have_result ? at.res : GdResult{};
                auto ao = adaptive_constraint(last, dirw, failed, spec, sim, est_cfg, cfg, wgd,
                                              frame, lander.ctr + 0x51);
                lander.ctr += 2 * static_cast<uint64_t>(cfg.adaptive_cap);
                if (!ao.invert_direction) {
                    // Re-admit via the standard emission check.
                    EstimateConfig ec2 = est_cfg;
                    ec2.seed = est_cfg.seed ^ rng::splitmix64(0xadbeef + lander.ctr);
                    ++lander.ctr;
                    Estimate chk = estimate(*spec.model, *spec.region, ao.result.x_star, sim, ec2);
                    if (std::abs(chk.p_hat - spec.p) <= gd_cfg.err_tol + 3.0 * chk.se_p) {
                        at.ok = true;
                        at.res = ao.result;
                        at.point.x = ao.result.x_star;
                        at.point.p_hat = chk.p_hat;
                        at.point.grad = chk.grad;
                        at.point.se_p = chk.se_p;
                        at.point.se_grad = chk.se_grad;
                    }
                }
                if (!at.ok) {
                    if (attempt == 1 || ++inversions > cfg.max_inversions) {
                        poly.note = "aborted: constrained GD failed below the gamma floor";
                        return poly;
                    }
                    dir2 = -dir2;
                    planner.reset(q_last);
                    prev_dir = dir2;
                    continue;
                }
            }

            if (dbg) {
                const Vector2d qy = frame.to_plane(at.point.x);
                std::fprintf(stderr,
                             "[walk] n=%d accept (%.2f, %.2f) p=%.3f dir (%.2f, %.2f)\n",
                             n_pts, qy[0], qy[1], at.point.p_hat, dir2[0], dir2[1]);
            }
            BorderPoint y = at.point;
            y.index = n_pts;
            y.section_id = section_id;
            poly.points.push_back(y);
            const Vector2d q_y = frame.to_plane(y.x);
            planner.observe(q_y);
            planner.add_point(q_y);
            if ((q_y - q_last).norm() > 1e-14) {
                const Vector2d step_dir = (q_y - q_last).normalized();
                // A landing slightly behind the anchor (possible after adaptive
                // recovery) must not reverse the march direction.
                if (!prev_dir || step_dir.dot(*prev_dir) >= 0.0) prev_dir = step_dir;
            }
            accepted = true;

            if (static_cast<int>(poly.points.size()) > cfg.step_min &&
                (q_y - q_first).norm() <= ctol) {
                poly.closed = true;
                closed_now = true;
            }
        }
        if (closed_now) break;
        if (!accepted) {
            poly.note = "aborted: no admissible direction";
            break;
        }
    }
    if (!poly.closed && poly.note.empty())
        poly.note = "open: max_points reached before closure";
    return poly;
}

InsideResult inside_check(const BorderPolyline& polyline, const Vec& x, double angle_tol_deg) {
    if (!polyline.closed)
        throw std::invalid_argument("inside_check: requires a closed border polyline");
    if (polyline.points.empty())
        throw std::invalid_argument("inside_check: empty polyline");

    const BorderPoint* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& bp : polyline.points) {
        const double dd = (x - bp.x).norm();
        if (dd < best_dist) {
            best_dist = dd;
            best = &bp;
        }
    }

    if (best_dist <= 1e-12 * (1.0 + x.norm())) return InsideResult::Inside; // on the border

    // noise floor: the gradient norm must at least exceed its own standard
    // error, otherwise the stored direction carries no information
    const double gn = best->grad.norm();
    const double se_norm = best->se_grad.size() > 0 ? best->se_grad.norm() : 0.0;
    if (gn < 1e-300 || gn <= se_norm) return InsideResult::Unknown;

    const Vec u = (x - best->x) / best_dist;
    const double cos_tol = std::cos(angle_tol_deg * std::numbers::pi / 180.0);
    // Survival probability increases toward the interior, so "inside" means
    // stepping from the border point along the gradient direction.
    return u.dot(best->grad) / gn >= cos_tol ? InsideResult::Inside : InsideResult::Unknown;
}

SectionSweepResult section_sweep_3d(const ProblemSpec& spec, const SimConfig& sim,
                                    const EstimateConfig& est_cfg, const WalkConfig& cfg,
                                    const GdConfig& gd_cfg, int axis, const BorderPoint& seed) {
    spec.validate();
    cfg.validate();
    if (spec.model->dim() != 3)
        throw std::invalid_argument("section_sweep_3d: requires a 3-dimensional problem");
    if (!(cfg.delta > 0.0))
        throw std::invalid_argument("section_sweep_3d: walk.delta must be positive");
    if (axis < 1 || axis > 3) throw std::invalid_argument("section_sweep_3d: axis must be 1..3");
    const int a = axis - 1;

    auto make_plane = [&](double level) {
        Vec pt = seed.x;
        pt[a] = level;
        Vec n = Vec::Zero(3);
        n[a] = 1.0;
        return PlaneConstraint(pt, n, 0);
    };

    SectionSweepResult out;
    out.axis = axis;

    const auto [lo, hi] = spec.region->bounds();
    const double level0 = seed.x[a];

    // Seed section.
    {
        Section s;
        s.id = 0;
        s.level = level0;
        EstimateConfig ec = est_cfg;
        ec.seed = est_cfg.seed ^ rng::splitmix64(0x5ec0);
        s.polyline = walk_border_2d(spec, seed, sim, ec, cfg, gd_cfg, make_plane(level0), 0);
        s.status = SectionStatus::Walked;
        out.sections.push_back(std::move(s));
    }

    for (int dir : {+1, -1}) {
        const BorderPolyline* neighbor = &out.sections.front().polyline;
        for (int i = 1;; ++i) {
            const double level = level0 + dir * i * cfg.delta;
            const int id = dir * i;
            Section s;
            s.id = id;
            s.level = level;

            if (level <= lo[a] || level >= hi[a]) {
                s.status = SectionStatus::OutsideRegion;
                out.sections.push_back(std::move(s));
                break;
            }

            // Seed from the neighboring section, projected onto this plane.
            std::optional<Vec> start;
            double best_margin = 0.0;
            for (const auto& bp : neighbor->points) {
                Vec q = bp.x;
                q[a] = level;
                const double m = spec.region->interior_distance(q);
                if (m > best_margin) {
                    best_margin = m;
                    start = q;
                }
            }
            if (!start) {
                const Vec c = spec.region->centroid();
                const Vec ref = neighbor->points.empty() ? seed.x : neighbor->points.front().x;
                const double denom = ref[a] - c[a];
                if (std::abs(denom) > 1e-14) {
                    const double t = (level - c[a]) / denom;
                    if (t > 0.0 && t <= 1.0) {
                        Vec q = c + t * (ref - c);
                        q[a] = level;
                        if (spec.region->contains(q)) start = q;
                    }
                }
            }
            if (!start) {
                Vec q = spec.region->centroid();
                q[a] = level;
                if (spec.region->contains(q)) start = q;
            }
            if (!start) {
                s.status = SectionStatus::Empty;
                out.sections.push_back(std::move(s));
                break;
            }

            EstimateConfig ec = est_cfg;
            ec.seed = est_cfg.seed ^ rng::splitmix64(0x6000 + static_cast<uint64_t>(i) * 2 +
                                                     (dir > 0 ? 0 : 1));
            GdResult res = find_boundary_point_constrained(spec, *start, sim, ec, gd_cfg,
                                                           {make_plane(level)});
            if (res.status != GdStatus::Converged) {
                // max p_hat below p over everything visited => the plane does
                // not intersect the p-safe region.
                s.status = SectionStatus::Empty;
                out.sections.push_back(std::move(s));
                break;
            }

            BorderPoint bp;
            bp.x = res.x_star;
            bp.p_hat = res.estimate_at_x_star.p_hat;
            bp.grad = res.estimate_at_x_star.grad;
            bp.se_p = res.estimate_at_x_star.se_p;
            bp.se_grad = res.estimate_at_x_star.se_grad;
            bp.section_id = id;
            s.polyline = walk_border_2d(spec, bp, sim, ec, cfg, gd_cfg, make_plane(level), id);
            s.status = SectionStatus::Walked;
            out.sections.push_back(std::move(s));
            neighbor = &out.sections.back().polyline;
        }
    }

    std::sort(out.sections.begin(), out.sections.end(),
              [](const Section& x, const Section& y) { return x.level < y.level; });
    return out;
}

} // namespace psafe

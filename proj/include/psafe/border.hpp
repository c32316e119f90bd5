#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "psafe/optimizer.hpp"

namespace psafe {

struct BorderPoint {
    Vec x;
    double p_hat = 0.0;
    Vec grad;
    double se_p = 0.0;
    Vec se_grad;
    int index = 0;
    int section_id = -1;
};

struct BorderPolyline {
    std::vector<BorderPoint> points;
    bool closed = false;
    std::optional<PlaneConstraint> plane;
    std::string note; // diagnostic for partial/aborted walks
};

struct WalkConfig {
    double gamma = 1.5;      // exploration step
    int step_min = 5;        // closure guard: minimum walk steps before closing
    double closure_tol = 0.0; // 0 = default to gamma
    int parabola_window = 4;
    int max_points = 400;
    double delta = 0.0;      // section plane spacing (3D sweeps)
    int adaptive_cap = 8;    // recovery retries before direction inversion
    int max_inversions = 4;

    double closure_distance() const { return closure_tol > 0.0 ? closure_tol : gamma; }
    void validate() const {
        if (!(gamma > 0.0)) throw std::invalid_argument("WalkConfig: gamma must be positive");
        if (parabola_window < 3)
            throw std::invalid_argument("WalkConfig: parabola_window must be >= 3");
        if (step_min < 1) throw std::invalid_argument("WalkConfig: step_min must be >= 1");
        if (max_points < 2) throw std::invalid_argument("WalkConfig: max_points must be >= 2");
    }
};

// Orthonormal chart of the plane the walk lives in. For d = 2 this is the
// whole space; for d = 3 it is a fixed section plane.
struct WalkFrame {
    Vec origin;
    Vec axis_u, axis_v;
    std::optional<PlaneConstraint> plane;

    Eigen::Vector2d to_plane(const Vec& x) const {
        return {axis_u.dot(x - origin), axis_v.dot(x - origin)};
    }
    Vec to_world(const Eigen::Vector2d& q) const {
        return origin + q[0] * axis_u + q[1] * axis_v;
    }
    Vec dir_to_world(const Eigen::Vector2d& t) const { return t[0] * axis_u + t[1] * axis_v; }

    static WalkFrame full_2d();
    static WalkFrame from_plane(const PlaneConstraint& plane);
};

// Direction proposal: gradient-perpendicular base direction blended with a
// parabola forecast through the recent border points, weighted by each
// predictor's recent forecast error.
class DirectionPlanner {
public:
    DirectionPlanner(const WalkConfig& cfg) : cfg_(cfg) {}

    void add_point(const Eigen::Vector2d& q);
    void reset(const Eigen::Vector2d& q); // after a direction inversion

    // Unit direction in plane coordinates. grad2 is the in-plane gradient at
    // the last point; prev_dir fixes the orientation sign.
    Eigen::Vector2d propose(const Eigen::Vector2d& grad2,
                            const std::optional<Eigen::Vector2d>& prev_dir);

    // Record the realized border point so forecast errors can be updated.
    void observe(const Eigen::Vector2d& realized);

private:
    std::optional<Eigen::Vector2d> parabola_forecast() const;

    WalkConfig cfg_;
    std::vector<Eigen::Vector2d> history_;
    std::deque<double> grad_err_, par_err_;
    std::optional<Eigen::Vector2d> pending_grad_fc_, pending_par_fc_;
};

// Stand-alone direction proposal (one shot, no forecast-error history).
Vec propose_direction(const std::vector<BorderPoint>& recent, const Vec& grad_at_last,
                      const std::optional<Vec>& prev_dir,
                      const std::optional<PlaneConstraint>& plane, const WalkConfig& cfg);

struct AdaptiveOutcome {
    GdResult result;
    std::vector<double> exploration_distances; // gamma/(2*step) schedule actually used
    bool invert_direction = false;             // cap exceeded, caller flips dir
    int steps_used = 0;
};

// Adaptive recovery loop: rotate the search half-plane toward the failed
// GD iterate and shrink the exploration distance until constrained GD lands
// back on the border.
AdaptiveOutcome adaptive_constraint(const BorderPoint& x_m, const Vec& dir,
                                    const GdResult& failed, const ProblemSpec& spec,
                                    const SimConfig& sim, const EstimateConfig& est_cfg,
                                    const WalkConfig& cfg, const GdConfig& gd_cfg,
                                    const WalkFrame& frame, uint64_t seed_salt = 0);

BorderPolyline walk_border_2d(const ProblemSpec& spec, const BorderPoint& x_star,
                              const SimConfig& sim, const EstimateConfig& est_cfg,
                              const WalkConfig& cfg, const GdConfig& gd_cfg,
                              const std::optional<PlaneConstraint>& plane = {},
                              int section_id = 0);

enum class InsideResult { Inside, Unknown };

// Gradient-based inside test at the nearest border point: x is inside when
// the direction from the border point to x aligns (within angle_tol) with the
// direction of increasing survival probability.
InsideResult inside_check(const BorderPolyline& polyline, const Vec& x,
                          double angle_tol_deg = 60.0);

enum class SectionStatus { Walked, Empty, OutsideRegion };

struct Section {
    int id = 0;
    double level = 0.0;
    SectionStatus status = SectionStatus::Empty;
    BorderPolyline polyline;
};

struct SectionSweepResult {
    int axis = 3;
    std::vector<Section> sections;
};

// 3D exploration by plane sectioning: walk the seed plane, then march planes
// axis = level +/- i*delta, seeding each walk from its neighbor section.
SectionSweepResult section_sweep_3d(const ProblemSpec& spec, const SimConfig& sim,
                                    const EstimateConfig& est_cfg, const WalkConfig& cfg,
                                    const GdConfig& gd_cfg, int axis, const BorderPoint& seed);

} // namespace psafe

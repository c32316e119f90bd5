#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

namespace psafe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Safe region A. contains() is strict: boundary points count as exited.
class Region {
public:
    virtual ~Region() = default;

    virtual int dim() const = 0;

    // Positive inside (= distance to the boundary), <= 0 on the boundary or outside.
    virtual double interior_distance(const Vec& x) const = 0;

    // Componentwise bounding interval, used to pre-filter section planes.
    virtual std::pair<Vec, Vec> bounds() const = 0;

    virtual Vec centroid() const = 0;

    bool contains(const Vec& x) const {
        check_dim(x);
        return interior_distance(x) > 0.0;
    }

    double dist_to_boundary(const Vec& x) const {
        check_dim(x);
        const double d = interior_distance(x);
        if (d <= 0.0)
            throw std::domain_error("dist_to_boundary: point is outside or on the boundary");
        return d;
    }

protected:
    void check_dim(const Vec& x) const {
        if (x.size() != dim())
            throw std::invalid_argument("region: point dimension mismatch");
    }
};

class SphereRegion final : public Region {
public:
    SphereRegion(Vec center, double radius) : center_(std::move(center)), radius_(radius) {
        if (radius_ <= 0.0) throw std::invalid_argument("SphereRegion: radius must be positive");
    }

    int dim() const override { return static_cast<int>(center_.size()); }
    double interior_distance(const Vec& x) const override {
        return radius_ - (x - center_).norm();
    }
    std::pair<Vec, Vec> bounds() const override {
        return {center_.array() - radius_, center_.array() + radius_};
    }
    Vec centroid() const override { return center_; }

    const Vec& center() const { return center_; }
    double radius() const { return radius_; }

private:
    Vec center_;
    double radius_;
};

class BoxRegion final : public Region {
public:
    BoxRegion(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (lo_.size() != hi_.size())
            throw std::invalid_argument("BoxRegion: lo/hi dimension mismatch");
        if (((hi_ - lo_).array() <= 0.0).any())
            throw std::invalid_argument("BoxRegion: requires lo < hi componentwise");
    }

    int dim() const override { return static_cast<int>(lo_.size()); }
    double interior_distance(const Vec& x) const override {
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < x.size(); ++i)
            d = std::min(d, std::min(x[i] - lo_[i], hi_[i] - x[i]));
        return d;
    }
    std::pair<Vec, Vec> bounds() const override { return {lo_, hi_}; }
    Vec centroid() const override { return 0.5 * (lo_ + hi_); }

    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }

private:
    Vec lo_, hi_;
};

// Plane through `point` with unit `normal`. With half_space_side = 0 the
// constraint is the plane itself; with +1/-1 it is the corresponding
// closed half-space.
struct PlaneConstraint {
    Vec point;
    Vec normal;
    int half_space_side = 0;

    PlaneConstraint(Vec p, Vec n, int side = 0)
        : point(std::move(p)), normal(std::move(n)), half_space_side(side) {
        const double len = normal.norm();
        if (!(len > 0.0)) throw std::invalid_argument("PlaneConstraint: zero normal");
        normal /= len;
        if (side != -1 && side != 0 && side != 1)
            throw std::invalid_argument("PlaneConstraint: half_space_side must be -1, 0 or +1");
    }

    double offset(const Vec& x) const { return normal.dot(x - point); }

    bool feasible(const Vec& x, double tol = 0.0) const {
        if (half_space_side == 0) return std::abs(offset(x)) <= tol;
        return half_space_side * offset(x) >= -tol;
    }
};

// Plane constraints project onto the plane; half-space constraints clip the
// infeasible side onto the boundary plane. Idempotent in both cases.
inline Vec project_onto_constraint(const PlaneConstraint& c, const Vec& x) {
    const double off = c.offset(x);
    if (c.half_space_side != 0 && c.half_space_side * off >= 0.0) return x;
    return x - off * c.normal;
}

inline Vec project_onto_constraints(const std::vector<PlaneConstraint>& cs, const Vec& x) {
    Vec y = x;
    for (const auto& c : cs) y = project_onto_constraint(c, y);
    return y;
}

} // namespace psafe

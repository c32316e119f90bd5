#pragma once

#include <Eigen/Dense>
#include <type_traits>
#include <utility>

#include "psafe/sde.hpp"

namespace psafe::detail {

// Fixed-dimension Euler-Maruyama engine for the joint (X, J, clock, H)
// simulation. One instance holds all per-path workspace and is reused across
// paths by a single worker.
template <int D>
class PathEngine {
public:
    using VecD = Eigen::Matrix<double, D, 1>;
    using MatD = Eigen::Matrix<double, D, D>;

    PathEngine(const SdeModel& model, const Region& region, const SimConfig& cfg)
        : model_(model), region_(region), cfg_(cfg), d_(model.dim()) {
        resize_all();
        if (model_.constant_diffusion()) {
            x_.setZero(d_);
            model_.diffusion(cspan(x_), span(sigma_));
            factor_sigma();
        }
    }

    // NoiseFn(step, std::span<double>) fills d increments distributed N(0, h).
    template <class NoiseFn>
    PathOutcome run(const Vec& x0, NoiseFn&& noise, PathStats* stats) {
        const double h = cfg_.step();
        const bool const_sigma = model_.constant_diffusion();
        x_ = x0;
        J_.setIdentity(d_, d_);
        H_.setZero(d_);
        double clock = 0.0;
        bool survived = true;

        double dist = region_.interior_distance(sync_xdyn());
        if (dist <= kBoundaryDistFloor)
            throw std::domain_error("simulate_path: start point outside the region");

        long facts = 0;
        for (int s = 0; s < cfg_.n; ++s) {
            noise(s, std::span<double>(dw_.data(), static_cast<size_t>(d_)));

            if (!const_sigma) {
                model_.diffusion(cspan(x_), span(sigma_));
                factor_sigma();
                ++facts;
            }

            if (clock < 1.0) {
                const double w = 1.0 / (dist * dist);
                beta_.noalias() = lu_.solve(J_);
                H_.noalias() += w * (beta_.transpose() * dw_);
                clock += h * w;
                // All Jacobian terms use J at the step's start; the flow is
                // only needed while the clock is unspent.
                model_.drift_jacobian(cspan(x_), span(jacmu_));
                jwork_.noalias() = jacmu_ * J_;
                if (const_sigma) {
                    J_ += h * jwork_;
                } else {
                    jsnap_ = J_;
                    J_ += h * jwork_;
                    for (int k = 0; k < d_; ++k) {
                        model_.diffusion_column_jacobian(cspan(x_), k, span(jac_));
                        jwork_.noalias() = jac_ * jsnap_;
                        J_.noalias() += dw_[k] * jwork_;
                    }
                }
            }

            model_.drift(cspan(x_), span(mu_));
            x_ += h * mu_;
            x_.noalias() += sigma_ * dw_;

            dist = region_.interior_distance(sync_xdyn());
            if (dist <= kBoundaryDistFloor) {
                survived = false;
                break;
            }
        }

        if (stats) {
            stats->steps += cfg_.n;
            stats->factorizations += const_sigma ? 0 : facts;
        }
        PathOutcome out;
        out.survived = survived;
        out.H = H_;
        return out;
    }

    // Factorizations chargeable to a constant-diffusion model: one, at setup.
    long setup_factorizations() const { return model_.constant_diffusion() ? 1 : 0; }

private:
    void resize_all() {
        x_.resize(d_);
        xdyn_.resize(d_);
        mu_.resize(d_);
        dw_.resize(d_);
        H_.resize(d_);
        sigma_.resize(d_, d_);
        jacmu_.resize(d_, d_);
        jac_.resize(d_, d_);
        J_.resize(d_, d_);
        beta_.resize(d_, d_);
        jwork_.resize(d_, d_);
        jsnap_.resize(d_, d_);
    }

    void factor_sigma() {
        flu_.compute(sigma_);
        if (!flu_.isInvertible())
            throw EllipticityError("sde: diffusion matrix is singular (ellipticity violated)");
        lu_.compute(sigma_);
    }

    const Vec& sync_xdyn() {
        for (int i = 0; i < d_; ++i) xdyn_[i] = x_[i];
        return xdyn_;
    }

    static std::span<const double> cspan(const VecD& v) {
        return {v.data(), static_cast<size_t>(v.size())};
    }
    template <class M>
    static std::span<double> span(M& m) {
        return {m.data(), static_cast<size_t>(m.size())};
    }

    const SdeModel& model_;
    const Region& region_;
    SimConfig cfg_;
    int d_;

    VecD x_, mu_, dw_, H_;
    Vec xdyn_;
    MatD sigma_, jacmu_, jac_, J_, beta_, jwork_, jsnap_;
    Eigen::PartialPivLU<MatD> lu_;
    Eigen::FullPivLU<MatD> flu_;
};

template <class F>
decltype(auto) dispatch_dim(int d, F&& f) {
    switch (d) {
    case 1: return f(std::integral_constant<int, 1>{});
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
    default: return f(std::integral_constant<int, Eigen::Dynamic>{});
    }
}

} // namespace psafe::detail

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>

#include "psafe/geometry.hpp"

namespace psafe {

// Assumption broken at runtime: sigma(x) not invertible.
class EllipticityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Autonomous SDE dX = mu(X) dt + sum_k sigma_k(X) dW^k together with the
// state-Jacobians needed by the first-variation flow. Matrix outputs are
// column-major d*d spans.
class SdeModel {
public:
    virtual ~SdeModel() = default;

    virtual int dim() const = 0;
    virtual void drift(std::span<const double> x, std::span<double> mu) const = 0;
    virtual void diffusion(std::span<const double> x, std::span<double> sigma) const = 0;
    virtual void drift_jacobian(std::span<const double> x, std::span<double> jac) const = 0;
    virtual void diffusion_column_jacobian(std::span<const double> x, int k,
                                           std::span<double> jac) const = 0;

    // True when sigma is state-independent; the solver then factorizes it once
    // and all diffusion-column Jacobians vanish.
    virtual bool constant_diffusion() const { return false; }
};

// Linear model: drift A*x, constant diffusion matrix Sigma.
class LinearSdeModel final : public SdeModel {
public:
    LinearSdeModel(Mat A, Mat Sigma);

    int dim() const override { return static_cast<int>(A_.rows()); }
    void drift(std::span<const double> x, std::span<double> mu) const override;
    void diffusion(std::span<const double> x, std::span<double> sigma) const override;
    void drift_jacobian(std::span<const double> x, std::span<double> jac) const override;
    void diffusion_column_jacobian(std::span<const double> x, int k,
                                   std::span<double> jac) const override;
    bool constant_diffusion() const override { return true; }

    const Mat& A() const { return A_; }
    const Mat& Sigma() const { return Sigma_; }

private:
    Mat A_, Sigma_;
};

// Case-study model: 3D linear drift with constant correlated diffusion,
// Corr(dW~_i, dW~_j) = rho for the driven noise. Requires rho in (-1/2, 1).
std::shared_ptr<SdeModel> builtin_toy3d(double rho);

// Scaled Brownian motion: mu = 0, sigma = scale * I.
std::shared_ptr<SdeModel> builtin_bm(int d, double scale);

struct SimConfig {
    double T = 1.0; // horizon
    int n = 200;    // number of Euler steps, h = T/n

    double step() const { return T / n; }
    void validate() const {
        if (!(T > 0.0)) throw std::invalid_argument("SimConfig: T must be positive");
        if (n < 1) throw std::invalid_argument("SimConfig: n must be >= 1");
    }
};

// Joint per-path state: X_t, first variation J_t, the tau^1 clock
// (integral of dist^-2) and the Malliavin weight accumulator H.
struct PathAccumulator {
    double t = 0.0;
    Vec X;
    Mat J;
    double clock = 0.0;
    Vec H;
    bool alive = true;
    int steps = 0;
    std::optional<int> exit_step;
};

PathAccumulator make_path_accumulator(const Vec& x0);

struct PathOutcome {
    bool survived = false;
    Vec H;
};

struct PathStats {
    long factorizations = 0;
    long steps = 0;
};

// States numerically on the boundary while flagged alive are treated as exits.
inline constexpr double kBoundaryDistFloor = 1e-12;

// One Euler-Maruyama step of (X, J) with the weight/clock accumulation done
// at the pre-step state (left-endpoint rule). dW entries are N(0, h).
PathAccumulator em_step(const SdeModel& model, PathAccumulator state, const Vec& dW,
                        double h, const Region& region);

// Full path over cfg.n steps. noise is d x n, column s = increments of step s,
// entries N(0, h). H carries no contract when survived = false.
PathOutcome simulate_path(const SdeModel& model, const Region& region, const Vec& x0,
                          const SimConfig& cfg, const Mat& noise);
PathOutcome simulate_path_counted(const SdeModel& model, const Region& region, const Vec& x0,
                                  const SimConfig& cfg, const Mat& noise, PathStats& stats);

} // namespace psafe

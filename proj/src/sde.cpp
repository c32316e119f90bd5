#include "psafe/sde.hpp"

#include <cmath>
#include <cstring>

#include "psafe/detail/path_engine.hpp"

namespace psafe {

namespace {

void copy_out(const Mat& m, std::span<double> out) {
    std::memcpy(out.data(), m.data(), sizeof(double) * m.size());
}

} // namespace

LinearSdeModel::LinearSdeModel(Mat A, Mat Sigma) : A_(std::move(A)), Sigma_(std::move(Sigma)) {
    if (A_.rows() != A_.cols() || Sigma_.rows() != Sigma_.cols() || A_.rows() != Sigma_.rows())
        throw std::invalid_argument("LinearSdeModel: A and Sigma must be square of equal size");
}

void LinearSdeModel::drift(std::span<const double> x, std::span<double> mu) const {
    Eigen::Map<const Vec> xv(x.data(), A_.rows());
    Eigen::Map<Vec> out(mu.data(), A_.rows());
    out.noalias() = A_ * xv;
}

void LinearSdeModel::diffusion(std::span<const double>, std::span<double> sigma) const {
    copy_out(Sigma_, sigma);
}

void LinearSdeModel::drift_jacobian(std::span<const double>, std::span<double> jac) const {
    copy_out(A_, jac);
}

void LinearSdeModel::diffusion_column_jacobian(std::span<const double>, int,
                                               std::span<double> jac) const {
    std::memset(jac.data(), 0, sizeof(double) * A_.size());
}

std::shared_ptr<SdeModel> builtin_toy3d(double rho) {
    if (!(1.0 - rho > 0.0 && 1.0 + 2.0 * rho > 0.0))
        throw std::invalid_argument("toy3d: rho must lie in (-1/2, 1)");
    const double w1 = std::sqrt(1.0 - rho);
    const double w2 = std::sqrt(1.0 + 2.0 * rho);

    Mat A(3, 3);
    A << 1.0, 0.0, 0.0,
         0.5, 0.5, 0.0,
         1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0;

    const double diag = (2.0 * w1 + w2) / 3.0;
    const double off = (-w1 + w2) / 3.0;
    Mat S(3, 3);
    S << diag, off, off,
         off, diag, off,
         off, off, diag;
    return std::make_shared<LinearSdeModel>(std::move(A), std::move(S));
}

std::shared_ptr<SdeModel> builtin_bm(int d, double scale) {
    if (d < 1) throw std::invalid_argument("bm: dimension must be >= 1");
    if (!(scale > 0.0)) throw std::invalid_argument("bm: scale must be positive");
    return std::make_shared<LinearSdeModel>(Mat::Zero(d, d), scale * Mat::Identity(d, d));
}

PathAccumulator make_path_accumulator(const Vec& x0) {
    PathAccumulator acc;
    acc.X = x0;
    acc.J = Mat::Identity(x0.size(), x0.size());
    acc.H = Vec::Zero(x0.size());
    return acc;
}

PathAccumulator em_step(const SdeModel& model, PathAccumulator state, const Vec& dW,
                        double h, const Region& region) {
    if (!state.alive) throw std::logic_error("em_step: path already exited");
    const int d = model.dim();
    if (dW.size() != d || state.X.size() != d)
        throw std::invalid_argument("em_step: dimension mismatch");

    const double dist = region.interior_distance(state.X);
    if (dist <= kBoundaryDistFloor) {
        state.alive = false;
        state.exit_step = state.steps;
        return state;
    }

    Mat sigma(d, d);
    model.diffusion({state.X.data(), static_cast<size_t>(d)},
                    {sigma.data(), static_cast<size_t>(sigma.size())});
    Eigen::FullPivLU<Mat> check(sigma);
    if (!check.isInvertible())
        throw EllipticityError("em_step: diffusion matrix is singular (ellipticity violated)");

    if (state.clock < 1.0) {
        const double w = 1.0 / (dist * dist);
        Mat beta = Eigen::PartialPivLU<Mat>(sigma).solve(state.J);
        state.H.noalias() += w * (beta.transpose() * dW);
        state.clock += h * w;
    }

    Mat jacmu(d, d);
    model.drift_jacobian({state.X.data(), static_cast<size_t>(d)},
                         {jacmu.data(), static_cast<size_t>(jacmu.size())});
    Mat Jnew = state.J + h * (jacmu * state.J);
    if (!model.constant_diffusion()) {
        Mat jk(d, d);
        for (int k = 0; k < d; ++k) {
            model.diffusion_column_jacobian({state.X.data(), static_cast<size_t>(d)}, k,
                                            {jk.data(), static_cast<size_t>(jk.size())});
            Jnew.noalias() += dW[k] * (jk * state.J);
        }
    }
    state.J = std::move(Jnew);

    Vec mu(d);
    model.drift({state.X.data(), static_cast<size_t>(d)}, {mu.data(), static_cast<size_t>(d)});
    state.X += h * mu;
    state.X.noalias() += sigma * dW;
    state.t += h;
    state.steps += 1;

    if (region.interior_distance(state.X) <= kBoundaryDistFloor) {
        state.alive = false;
        state.exit_step = state.steps;
    }
    return state;
}

PathOutcome simulate_path_counted(const SdeModel& model, const Region& region, const Vec& x0,
                                  const SimConfig& cfg, const Mat& noise, PathStats& stats) {
    cfg.validate();
    const int d = model.dim();
    if (region.dim() != d || x0.size() != d)
        throw std::invalid_argument("simulate_path: dimension mismatch");
    if (noise.rows() != d || noise.cols() != cfg.n)
        throw std::invalid_argument("simulate_path: noise must be d x n");
    if (!region.contains(x0))
        throw std::domain_error("simulate_path: start point outside the region");

    return detail::dispatch_dim(d, [&](auto dim_tag) {
        detail::PathEngine<decltype(dim_tag)::value> engine(model, region, cfg);
        stats.factorizations += engine.setup_factorizations();
        return engine.run(
            x0,
            [&](int s, std::span<double> dw) {
                for (int i = 0; i < d; ++i) dw[i] = noise(i, s);
            },
            &stats);
    });
}

PathOutcome simulate_path(const SdeModel& model, const Region& region, const Vec& x0,
                          const SimConfig& cfg, const Mat& noise) {
    PathStats stats;
    return simulate_path_counted(model, region, x0, cfg, noise, stats);
}

} // namespace psafe

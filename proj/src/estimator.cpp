#include "psafe/estimator.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "psafe/detail/path_engine.hpp"
#include "psafe/rng.hpp"

namespace psafe {

Mat derive_path_noise(uint64_t seed, uint64_t path_index, const SimConfig& sim, int d) {
    sim.validate();
    if (d < 1) throw std::invalid_argument("derive_path_noise: d must be >= 1");
    const double scale = std::sqrt(sim.step());
    rng::GaussianStream stream(seed, path_index);
    Mat noise(d, sim.n);
    stream.fill({noise.data(), static_cast<size_t>(noise.size())}, 0);
    noise *= scale;
    return noise;
}

namespace {

// One worker simulates a contiguous range of sample indices into
// preallocated slots; the reduction then runs in fixed index order, so the
// result is independent of the thread count.
template <int D>
void run_range(const SdeModel& model, const Region& region, const Vec& x,
               const SimConfig& sim, const EstimateConfig& cfg, long lo, long hi,
               double* usamp, Mat& gsamp) {
    const int d = model.dim();
    const double scale = std::sqrt(sim.step());
    detail::PathEngine<D> engine(model, region, sim);
    std::vector<double> zbuf(static_cast<size_t>(d) * sim.n);

    for (long i = lo; i < hi; ++i) {
        rng::GaussianStream stream(cfg.seed, static_cast<uint64_t>(i));
        stream.fill(zbuf, 0);

        auto noise_fn = [&](double sign) {
            return [&, sign](int s, std::span<double> dw) {
                const double* z = zbuf.data() + static_cast<size_t>(s) * d;
                for (int j = 0; j < d; ++j) dw[j] = sign * scale * z[j];
            };
        };

        PathOutcome a = engine.run(x, noise_fn(+1.0), nullptr);
        double u = a.survived ? 1.0 : 0.0;
        Vec g = a.survived ? a.H : Vec::Zero(d).eval();
        if (cfg.antithetic) {
            PathOutcome b = engine.run(x, noise_fn(-1.0), nullptr);
            u = 0.5 * (u + (b.survived ? 1.0 : 0.0));
            if (b.survived) g += b.H;
            g *= 0.5;
        }
        usamp[i] = u;
        gsamp.col(i) = g;
    }
}

} // namespace

Estimate estimate(const SdeModel& model, const Region& region, const Vec& x,
                  const SimConfig& sim, const EstimateConfig& cfg) {
    sim.validate();
    cfg.validate();
    const int d = model.dim();
    if (!region.contains(x))
        throw std::domain_error("estimate: start point outside the region");

    const long M = cfg.antithetic ? cfg.N / 2 : cfg.N;
    std::vector<double> usamp(static_cast<size_t>(M));
    Mat gsamp(d, M);

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<long>(threads, M));

    auto worker = [&](long lo, long hi) {
        detail::dispatch_dim(d, [&](auto dim_tag) {
            run_range<decltype(dim_tag)::value>(model, region, x, sim, cfg, lo, hi,
                                                usamp.data(), gsamp);
        });
    };

    if (threads == 1) {
        worker(0, M);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr err;
        std::mutex err_mtx;
        for (int t = 0; t < threads; ++t) {
            const long lo = M * t / threads;
            const long hi = M * (t + 1) / threads;
            pool.emplace_back([&, lo, hi] {
                try {
                    worker(lo, hi);
                } catch (...) {
                    std::scoped_lock lk(err_mtx);
                    if (!err) err = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);
    }

    Estimate est;
    est.N = cfg.N;
    est.n = sim.n;

    double mean_u = 0.0;
    Vec mean_g = Vec::Zero(d);
    for (long i = 0; i < M; ++i) {
        mean_u += usamp[i];
        mean_g += gsamp.col(i);
    }
    mean_u /= static_cast<double>(M);
    mean_g /= static_cast<double>(M);

    double var_u = 0.0;
    Vec var_g = Vec::Zero(d);
    for (long i = 0; i < M; ++i) {
        const double du = usamp[i] - mean_u;
        var_u += du * du;
        var_g.array() += (gsamp.col(i) - mean_g).array().square();
    }
    const double denom = M > 1 ? static_cast<double>(M - 1) : 1.0;
    var_u /= denom;
    var_g /= denom;

    est.p_hat = mean_u;
    est.grad = mean_g;
    est.se_p = std::sqrt(var_u / static_cast<double>(M));
    est.se_grad = (var_g / static_cast<double>(M)).cwiseSqrt();
    return est;
}

std::vector<Estimate> estimate_along_sweep(const SdeModel& model, const Region& region,
                                           const std::vector<Vec>& points, const SimConfig& sim,
                                           const EstimateConfig& cfg) {
    for (size_t i = 0; i < points.size(); ++i) {
        if (!region.contains(points[i]))
            throw std::domain_error("estimate_along_sweep: point at index " + std::to_string(i) +
                                    " is outside the region");
    }
    std::vector<Estimate> out;
    out.reserve(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        EstimateConfig local = cfg;
        // Index 0 keeps the base seed so a single-point sweep matches estimate().
        if (i > 0) local.seed = cfg.seed ^ rng::splitmix64(static_cast<uint64_t>(i));
        out.push_back(estimate(model, region, points[i], sim, local));
    }
    return out;
}

} // namespace psafe

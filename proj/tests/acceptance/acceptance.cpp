// Acceptance gate. Each criterion prints exactly one PASS/FAIL line; the
// process exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "psafe/border.hpp"
#include "psafe/estimator.hpp"
#include "psafe/io.hpp"
#include "psafe/optimizer.hpp"
#include "psafe/oracle.hpp"
#include "psafe/rng.hpp"

using namespace psafe;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---- 2D disk oracle: Dirichlet heat kernel of the disk ----
// P(tau >= T | |X_0| = r) = sum_k 2/(j_k J1(j_k)) J0(j_k r/R) exp(-j_k^2 T/(2R^2))
// with j_k the zeros of the Bessel function J0.

std::vector<double> bessel_j0_zeros(int count) {
    std::vector<double> zeros;
    double lo = 2.0;
    while (static_cast<int>(zeros.size()) < count) {
        double hi = lo + 0.1;
        while (std::cyl_bessel_j(0.0, lo) * std::cyl_bessel_j(0.0, hi) > 0.0) hi += 0.1;
        double a = lo, b = hi;
        for (int it = 0; it < 100; ++it) {
            const double m = 0.5 * (a + b);
            if (std::cyl_bessel_j(0.0, a) * std::cyl_bessel_j(0.0, m) <= 0.0)
                b = m;
            else
                a = m;
        }
        zeros.push_back(0.5 * (a + b));
        lo = zeros.back() + 2.0;
    }
    return zeros;
}

double disk_survival(double r, double R, double T) {
    static const std::vector<double> jz = bessel_j0_zeros(30);
    double s = 0.0;
    for (double j : jz) {
        const double coef = 2.0 / (j * std::cyl_bessel_j(1.0, j));
        s += coef * std::cyl_bessel_j(0.0, j * r / R) * std::exp(-j * j * T / (2.0 * R * R));
    }
    return s;
}

double disk_border_radius(double R, double T, double p) {
    double lo = 0.0, hi = R;
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (lo + hi);
        if (disk_survival(m, R, T) > p)
            lo = m;
        else
            hi = m;
    }
    return 0.5 * (lo + hi);
}

BorderPoint to_border_point(const GdResult& r) {
    BorderPoint bp;
    bp.x = r.x_star;
    bp.p_hat = r.estimate_at_x_star.p_hat;
    bp.grad = r.estimate_at_x_star.grad;
    bp.se_p = r.estimate_at_x_star.se_p;
    bp.se_grad = r.estimate_at_x_star.se_grad;
    return bp;
}

// ---- criterion 1: Malliavin vs series derivative vs CRN finite difference ----
void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    auto model = builtin_bm(1, 1.0);
    BoxRegion region(Vec::Zero(1), Vec::Ones(1));
    SimConfig sim{0.125, 400};
    const double x = 0.3, eps = 0.005;
    EstimateConfig ec{200000, 20260823, true, 0}; // 100000 antithetic pairs

    const Estimate base = estimate(*model, region, Vec::Constant(1, x), sim, ec);
    const Estimate up = estimate(*model, region, Vec::Constant(1, x + eps), sim, ec);
    const Estimate dn = estimate(*model, region, Vec::Constant(1, x - eps), sim, ec);

    const double g_mall = base.grad[0];
    const double se_mall = base.se_grad[0];
    const double g_series = oracle::bm1d_survival_dx(x, 0.125);
    const double g_fd = (up.p_hat - dn.p_hat) / (2.0 * eps);
    // same seed at both offsets = common random numbers; se of the difference
    // bounded by the uncorrelated combination
    const double se_fd = std::sqrt(up.se_p * up.se_p + dn.se_p * dn.se_p) / (2.0 * eps);

    const double err_a = std::abs(g_mall - g_series);
    const double tol_a = 3.0 * se_mall + 0.05 * std::abs(g_series);
    const double err_b = std::abs(g_mall - g_fd);
    const double tol_b = 3.0 * std::sqrt(se_mall * se_mall + se_fd * se_fd) +
                         0.05 * std::abs(g_fd);
    const double secs = seconds_since(t0);
    const bool ok = err_a < tol_a && err_b < tol_b && secs < 60.0;
    report(1, ok,
           fmt("malliavin %.4f vs series %.4f (err %.4f tol %.4f), vs crn-fd %.4f "
               "(err %.4f tol %.4f), %.1fs",
               g_mall, g_series, err_a, tol_a, g_fd, err_b, tol_b, secs));
}

// ---- criterion 2: survival oracle + hitting-time bias trend ----
void criterion2() {
    auto model = builtin_bm(1, 1.0);
    BoxRegion region(Vec::Zero(1), Vec::Ones(1));
    const Vec x = Vec::Constant(1, 0.3);
    const double p_true = oracle::bm1d_survival(0.3, 0.125);

    SimConfig sim{0.125, 400};
    EstimateConfig ec{200000, 20260823, true, 0};
    const Estimate est = estimate(*model, region, x, sim, ec);
    const bool close = std::abs(est.p_hat - p_true) < 3.0 * est.se_p + 0.02;

    // sign test over 20 seeds: mean p_hat non-increasing across n = 50/200/800
    const int kSeeds = 20;
    int dec_coarse = 0, dec_fine = 0;
    for (int s = 0; s < kSeeds; ++s) {
        auto phat = [&](int n) {
            SimConfig ls{0.125, n};
            EstimateConfig lec{4000, 9000 + static_cast<uint64_t>(s), true, 0};
            return estimate(*model, region, x, ls, lec).p_hat;
        };
        const double p50 = phat(50), p200 = phat(200), p800 = phat(800);
        dec_coarse += p50 > p200;
        dec_fine += p200 > p800;
    }
    // binomial tail: P(X >= 15 | n=20, q=0.5) ~ 0.021 < 0.05
    const bool trend = dec_coarse >= 15 && dec_fine >= 15;
    report(2, close && trend,
           fmt("p_hat %.4f vs series %.4f (se %.4f); bias sign test %d/20 and %d/20 "
               "decreasing",
               est.p_hat, p_true, est.se_p, dec_coarse, dec_fine));
}

// ---- criterion 3: boundary finding, analytic then MC ----
void criterion3() {
    // (a) analytic surrogate, plain GD from the symmetric saddle x = 0.5
    ProbEvaluator series = [](const Vec& x, int) {
        Estimate e;
        e.p_hat = oracle::bm1d_survival(x[0], 0.125);
        e.grad = Vec::Constant(1, oracle::bm1d_survival_dx(x[0], 0.125));
        e.se_grad = Vec::Zero(1);
        return e;
    };
    GdConfig plain;
    plain.plain_gd = true;
    plain.err_tol = 1e-6;
    plain.max_iters = 200;
    plain.lambda = 5e-2;
    const GdResult ra = minimize_to_level(series, Vec::Constant(1, 0.5), 0.5, plain);
    const double resid = std::abs(oracle::bm1d_survival(ra.x_star[0], 0.125) - 0.5);
    const bool ok_a = ra.status == GdStatus::Converged && resid < 1e-6;

    // (b) MC estimates with ADAM at the published settings, 20 seeded trials
    auto model = builtin_bm(1, 1.0);
    BoxRegion region(Vec::Zero(1), Vec::Ones(1));
    ProblemSpec spec{model.get(), &region, 0.5, 0.125};
    SimConfig sim{0.125, 200};
    GdConfig adam;
    adam.lambda = 5e-2;
    adam.max_iters = 50;
    adam.err_tol = 0.02;
    int successes = 0;
    for (int trial = 0; trial < 20; ++trial) {
        EstimateConfig ec{10000, 5000 + static_cast<uint64_t>(trial) * 1000, true, 0};
        const GdResult r = find_boundary_point(spec, Vec::Constant(1, 0.5), sim, ec, adam);
        if (r.status == GdStatus::Converged &&
            std::abs(r.estimate_at_x_star.p_hat - 0.5) < 0.02)
            ++successes;
    }
    const bool ok_b = successes >= 18;
    report(3, ok_a && ok_b,
           fmt("analytic plain-GD residual %.2e in %d iters; MC ADAM %d/20 trials converged",
               resid, ra.iterations, successes));
}

// ---- criterion 4: disk symmetry walk + inside checks ----
void criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    auto model = builtin_bm(2, 1.0);
    SphereRegion region(Vec::Zero(2), 3.0);
    ProblemSpec spec{model.get(), &region, 0.5, 0.2};
    SimConfig sim{0.2, 200};
    EstimateConfig ec{10000, 411, true, 0};
    GdConfig gd;
    WalkConfig wc;
    wc.gamma = 1.0;
    wc.max_points = 80;

    const Vec x0 = probe_start(spec, sim, ec, Vec::Ones(2));
    const GdResult seed_res = find_boundary_point(spec, x0, sim, ec, gd);
    if (seed_res.status != GdStatus::Converged) {
        report(4, false, "seed descent did not converge");
        return;
    }
    const BorderPolyline poly =
        walk_border_2d(spec, to_border_point(seed_res), sim, ec, wc, gd);

    double rmin = 1e9, rmax = 0.0, rsum = 0.0;
    for (const auto& bp : poly.points) {
        const double r = bp.x.norm();
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        rsum += r;
    }
    const double rmean = rsum / poly.points.size();
    const double r_oracle = disk_border_radius(3.0, 0.2, 0.5);
    const bool shape_ok = poly.closed && (rmax - rmin) / rmax < 0.05 &&
                          std::abs(rmean - r_oracle) / r_oracle < 0.03;

    bool center_ok = inside_check(poly, Vec::Zero(2)) == InsideResult::Inside;
    int inside = 0;
    const int kSamples = 200;
    rng::GaussianStream gs(77, 0);
    for (int k = 0; k < kSamples; ++k) {
        // uniform in the disk of radius 0.8*rmean via rejection on gaussians
        const double a = 2.0 * M_PI * (k + 0.5) / kSamples;
        const double u = (k % 10 + 0.5) / 10.0;
        Vec pt(2);
        pt << 0.8 * rmean * std::sqrt(u) * std::cos(a),
            0.8 * rmean * std::sqrt(u) * std::sin(a);
        inside += inside_check(poly, pt) == InsideResult::Inside;
    }
    const double secs = seconds_since(t0);
    const bool ok = shape_ok && center_ok && inside >= 198 && secs < 600.0;
    report(4, ok,
           fmt("closed=%d pts=%zu radius %.3f..%.3f mean %.3f oracle %.3f, inside %d/200, "
               "%.0fs",
               poly.closed ? 1 : 0, poly.points.size(), rmin, rmax, rmean, r_oracle, inside,
               secs));
}

// ---- criterion 5: full-scale toy3d runs, sphere then cube ----
void criterion5() {
    auto model = builtin_toy3d(0.5);
    bool all_ok = true;
    std::string detail;

    for (int which = 0; which < 2; ++which) {
        const auto t0 = std::chrono::steady_clock::now();
        std::unique_ptr<Region> region;
        if (which == 0)
            region = std::make_unique<SphereRegion>(Vec::Zero(3), 100.0);
        else
            region = std::make_unique<BoxRegion>(Vec::Constant(3, -100.0),
                                                 Vec::Constant(3, 100.0));
        ProblemSpec spec{model.get(), region.get(), 0.5, 1.0};
        SimConfig sim{1.0, 200};
        EstimateConfig ec{10000, 50 + static_cast<uint64_t>(which), true, 0};
        GdConfig gd;
        gd.lambda = 5e-2;
        gd.max_iters = 50;
        WalkConfig wc;
        wc.gamma = 1.5;
        wc.max_points = 500;

        // short radial probe toward a p ~ 0.8 start
        Vec dir(3);
        dir << 1.0, 0.0, 0.0;
        const Vec x0 = probe_start(spec, sim, ec, dir, 0.75, 0.85);
        EstimateConfig check = ec;
        check.seed = ec.seed ^ 0xabcdu;
        const Estimate at_start = estimate(*model, *region, x0, sim, check);
        const bool start_ok = at_start.p_hat >= 0.7 && at_start.p_hat <= 0.9;

        const GdResult seed_res = find_boundary_point(spec, x0, sim, ec, gd);
        bool ok = start_ok && seed_res.status == GdStatus::Converged;
        size_t pts = 0;
        bool closed = false;
        if (ok) {
            Vec n = Vec::Zero(3);
            n[2] = 1.0;
            PlaneConstraint plane(seed_res.x_star, n, 0);
            const BorderPolyline poly = walk_border_2d(spec, to_border_point(seed_res), sim,
                                                       ec, wc, gd, plane, 0);
            pts = poly.points.size();
            closed = poly.closed;
            ok = closed;
        }
        const double secs = seconds_since(t0);
        ok = ok && secs < 1800.0;
        all_ok = all_ok && ok;
        detail += fmt("%s[start p=%.2f conv=%d closed=%d pts=%zu %.0fs] ",
                      which == 0 ? "sphere" : "cube", at_start.p_hat,
                      seed_res.status == GdStatus::Converged ? 1 : 0, closed ? 1 : 0, pts,
                      secs);
    }
    report(5, all_ok, detail);
}

// ---- criterion 6: p-nesting on the disk ----
void criterion6() {
    auto model = builtin_bm(2, 1.0);
    SphereRegion region(Vec::Zero(2), 3.0);
    SimConfig sim{0.2, 200};
    GdConfig gd;
    WalkConfig wc;
    wc.gamma = 1.0;
    wc.max_points = 80;

    auto walk_radius_band = [&](double p, uint64_t seed, double& rmin, double& rmax) {
        ProblemSpec spec{model.get(), &region, p, 0.2};
        EstimateConfig ec{10000, seed, true, 0};
        const Vec x0 = probe_start(spec, sim, ec, Vec::Ones(2),
                                   std::min(0.95, p + 0.25), std::min(0.97, p + 0.35));
        const GdResult seed_res = find_boundary_point(spec, x0, sim, ec, gd);
        if (seed_res.status != GdStatus::Converged) return false;
        const BorderPolyline poly =
            walk_border_2d(spec, to_border_point(seed_res), sim, ec, wc, gd);
        if (!poly.closed) return false;
        rmin = 1e9;
        rmax = 0.0;
        for (const auto& bp : poly.points) {
            rmin = std::min(rmin, bp.x.norm());
            rmax = std::max(rmax, bp.x.norm());
        }
        return true;
    };

    double lo4 = 0, hi4 = 0, lo6 = 0, hi6 = 0;
    const bool ok4 = walk_radius_band(0.4, 640, lo4, hi4);
    const bool ok6 = walk_radius_band(0.6, 641, lo6, hi6);
    const bool nested = ok4 && ok6 && hi6 < lo4;
    report(6, nested,
           fmt("p=0.4 radii [%.3f, %.3f], p=0.6 radii [%.3f, %.3f], nested=%d", lo4, hi4,
               lo6, hi6, nested ? 1 : 0));
}

// ---- criterion 7: adaptive constraint schedule ----
void criterion7() {
    auto model = builtin_bm(2, 1.0);
    SphereRegion region(Vec::Zero(2), 3.0);
    ProblemSpec spec{model.get(), &region, 0.5, 0.2};
    SimConfig sim{0.2, 50};
    EstimateConfig ec{4000, 7, true, 0};
    GdConfig gd;
    gd.err_tol = 0.03;
    gd.max_iters = 15;
    WalkConfig wc;
    wc.gamma = 1.0;

    const Vec x0 = probe_start(spec, sim, ec, Vec::Ones(2));
    const GdResult seed_res = find_boundary_point(spec, x0, sim, ec, gd);
    if (seed_res.status != GdStatus::Converged) {
        report(7, false, "could not place a border point for the scenario");
        return;
    }
    const BorderPoint bp = to_border_point(seed_res);
    // point the exploration outward: the initial half-plane excludes the
    // border entirely, forcing the adaptive recovery loop
    const Vec dir = bp.x.normalized();
    const AdaptiveOutcome out = adaptive_constraint(bp, dir, GdResult{}, spec, sim, ec, wc,
                                                    gd, WalkFrame::full_2d());
    bool schedule_ok = !out.exploration_distances.empty();
    for (size_t i = 0; i < out.exploration_distances.size(); ++i)
        schedule_ok = schedule_ok &&
                      std::abs(out.exploration_distances[i] - wc.gamma / (2.0 * (i + 1))) <
                          1e-12;
    const bool resolved = out.invert_direction
                              ? out.steps_used == wc.adaptive_cap
                              : out.result.status == GdStatus::Converged;
    report(7, schedule_ok && resolved,
           fmt("schedule ok=%d over %zu retries, %s", schedule_ok ? 1 : 0,
               out.exploration_distances.size(),
               out.invert_direction ? "inverted at cap" : "reconverged"));
}

// ---- criterion 8: byte-identical walk output across thread counts ----
void criterion8() {
    const fs::path dir = fs::temp_directory_path() / "psafe_acc8";
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "cfg.json";
    {
        std::ofstream out(cfg_path);
        out << R"({
  "model": {"name": "bm", "params": {"d": 2, "scale": 1.0}},
  "region": {"type": "sphere", "params": {"radius": 3.0}},
  "p": 0.5, "T": 0.2, "N": 4000, "n": 50, "seed": 99,
  "optimizer": {"err_tol": 0.03, "max_iters": 30},
  "walk": {"gamma": 1.0, "max_points": 60},
  "start": [1.6, 1.6]
})";
    }

    std::vector<std::string> outputs;
    bool ran_ok = true;
    for (int threads : {1, 4, 16}) {
        const fs::path out_dir = dir / ("t" + std::to_string(threads));
        const std::string cmd = std::string(PSAFE_CLI_PATH) + " --config " +
                                cfg_path.string() + " --threads " + std::to_string(threads) +
                                " --out " + out_dir.string() + " walk > /dev/null 2>&1";
        ran_ok = ran_ok && std::system(cmd.c_str()) == 0;
        std::ifstream in(out_dir / "points.csv", std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        outputs.push_back(ss.str());
    }
    const bool identical = ran_ok && outputs.size() == 3 && !outputs[0].empty() &&
                           outputs[0] == outputs[1] && outputs[0] == outputs[2];
    report(8, identical,
           fmt("cmd_walk at threads 1/4/16: ran=%d, %zu bytes, identical=%d", ran_ok ? 1 : 0,
               outputs.empty() ? 0 : outputs[0].size(), identical ? 1 : 0));
}

} // namespace

int main(int argc, char** argv) {
    const std::function<void()> all[] = {criterion1, criterion2, criterion3, criterion4,
                                         criterion5, criterion6, criterion7, criterion8};
    if (argc > 1) {
        // debugging aid: run only the listed criteria
        for (int i = 1; i < argc; ++i) {
            const int k = std::atoi(argv[i]);
            if (k >= 1 && k <= 8) all[k - 1]();
        }
    } else {
        for (const auto& c : all) c();
    }
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}

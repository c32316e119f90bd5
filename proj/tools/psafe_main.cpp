#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "psafe/border.hpp"
#include "psafe/config.hpp"
#include "psafe/io.hpp"
#include "psafe/oracle.hpp"
#include "psafe/optimizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psafe;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 2 config error, 3 precondition, 4 optimizer failed,
// 5 input shape
constexpr int kExitConfig = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitOptimizer = 4;
constexpr int kExitInputShape = 5;

Vec parse_point(const std::string& s) {
    Vec v;
    std::vector<double> xs;
    std::string cur;
    for (char ch : s + ",") {
        if (ch == ',') {
            if (!cur.empty()) xs.push_back(std::stod(cur));
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            cur += ch;
        }
    }
    v = Vec(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) v[static_cast<long>(i)] = xs[i];
    return v;
}

std::string fmt_vec(const Vec& v) {
    std::string s = "[";
    char buf[40];
    for (long i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6g", v[i]);
        if (i) s += ", ";
        s += buf;
    }
    return s + "]";
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

struct CommonOpts {
    std::string config_path;
    std::optional<std::int64_t> seed;
    std::optional<int> threads;
    std::string out_dir;
};

RunConfig resolve_config(const CommonOpts& opt) {
    if (opt.config_path.empty()) throw ConfigError("--config PATH is required");
    RunConfig cfg = load_run_config(opt.config_path);
    if (opt.seed) cfg.seed = static_cast<std::uint64_t>(*opt.seed);
    if (opt.threads) cfg.threads = *opt.threads;
    if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
    return cfg;
}

Vec resolve_start(const RunConfig& cfg, const Region& region) {
    return cfg.start ? *cfg.start : region.centroid();
}

json manifest_base(const RunConfig& cfg, double wall_s) {
    json m;
    m["version"] = kVersion;
    m["config"] = json::parse(serialize_run_config(cfg));
    m["resolved_seed"] = cfg.seed;
    m["threads"] = cfg.threads;
    m["wall_time_s"] = wall_s;
    // se values are computed over antithetic pairs, not raw paths
    m["n_effective"] = cfg.antithetic ? cfg.N / 2 : cfg.N;
    m["seed_policy"] = "per-iteration GD seeds are base+iter; walk landings use "
                       "base XOR splitmix64(counter)";
    return m;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

int cmd_estimate(const CommonOpts& opt, const std::string& x_arg) {
    RunConfig cfg = resolve_config(opt);
    auto model = cfg.make_model();
    auto region = cfg.make_region();
    Vec x = x_arg.empty() ? resolve_start(cfg, *region) : parse_point(x_arg);

    Estimate est = estimate(*model, *region, x, cfg.sim(), cfg.estimate_cfg());

    std::printf("estimate at x = %s\n", fmt_vec(x).c_str());
    std::printf("  p_hat   = %.6f  (se %.6f)\n", est.p_hat, est.se_p);
    std::printf("  grad    = %s\n", fmt_vec(est.grad).c_str());
    std::printf("  se_grad = %s\n", fmt_vec(est.se_grad).c_str());
    json line = {{"p_hat", est.p_hat}, {"se_p", est.se_p}, {"grad", vec_json(est.grad)},
                 {"se_grad", vec_json(est.se_grad)}, {"N", est.N}, {"n", est.n}};
    std::printf("RESULT %s\n", line.dump().c_str());
    return 0;
}

int cmd_walk(const CommonOpts& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = resolve_config(opt);
    auto model = cfg.make_model();
    auto region = cfg.make_region();
    const int d = model->dim();
    if (d != 2 && d != 3) throw std::invalid_argument("walk: model dimension must be 2 or 3");

    ProblemSpec spec{model.get(), region.get(), cfg.p, cfg.T};
    const Vec x0 = resolve_start(cfg, *region);
    GdResult seed_res = find_boundary_point(spec, x0, cfg.sim(), cfg.estimate_cfg(),
                                            cfg.optimizer);
    if (seed_res.status != GdStatus::Converged) {
        std::fprintf(stderr, "walk: boundary search from the start point did not converge "
                             "(status %d); try another start point\n",
                     static_cast<int>(seed_res.status));
        return kExitOptimizer;
    }

    BorderPoint seed;
    seed.x = seed_res.x_star;
    seed.p_hat = seed_res.estimate_at_x_star.p_hat;
    seed.grad = seed_res.estimate_at_x_star.grad;
    seed.se_p = seed_res.estimate_at_x_star.se_p;
    seed.se_grad = seed_res.estimate_at_x_star.se_grad;

    std::optional<PlaneConstraint> plane;
    if (d == 3) {
        // fix the section plane x3 = x_star3 through the converged point
        Vec n = Vec::Zero(3);
        n[2] = 1.0;
        plane = PlaneConstraint(seed.x, n, 0);
    }

    BorderPolyline poly = walk_border_2d(spec, seed, cfg.sim(), cfg.estimate_cfg(), cfg.walk,
                                         cfg.optimizer, plane, 0);

    fs::create_directories(cfg.output_dir);
    const fs::path csv_path = fs::path(cfg.output_dir) / "points.csv";
    const std::string csv = polyline_to_csv(poly, d);
    write_text(csv_path, csv);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m = manifest_base(cfg, wall);
    m["point_count"] = poly.points.size();
    m["closed"] = poly.closed;
    if (!poly.note.empty()) m["note"] = poly.note;
    m["seed_point"] = vec_json(seed.x);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "0x%016llx",
                  static_cast<unsigned long long>(fnv1a(csv)));
    m["output_hash"] = hash;
    m["files"] = {csv_path.filename().string()};
    write_text(fs::path(cfg.output_dir) / "manifest.json", m.dump(2) + "\n");

    std::printf("walk: %zu points, closed=%s -> %s\n", poly.points.size(),
                poly.closed ? "true" : "false", csv_path.string().c_str());
    return 0;
}

int cmd_sections(const CommonOpts& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = resolve_config(opt);
    auto model = cfg.make_model();
    auto region = cfg.make_region();
    if (model->dim() != 3) throw std::invalid_argument("sections: requires a 3D model");

    ProblemSpec spec{model.get(), region.get(), cfg.p, cfg.T};
    const Vec x0 = resolve_start(cfg, *region);
    GdResult seed_res = find_boundary_point(spec, x0, cfg.sim(), cfg.estimate_cfg(),
                                            cfg.optimizer);
    if (seed_res.status != GdStatus::Converged) {
        std::fprintf(stderr, "sections: boundary search from the start point did not "
                             "converge; try another start point\n");
        return kExitOptimizer;
    }

    BorderPoint seed;
    seed.x = seed_res.x_star;
    seed.p_hat = seed_res.estimate_at_x_star.p_hat;
    seed.grad = seed_res.estimate_at_x_star.grad;
    seed.se_p = seed_res.estimate_at_x_star.se_p;
    seed.se_grad = seed_res.estimate_at_x_star.se_grad;

    SectionSweepResult sweep = section_sweep_3d(spec, cfg.sim(), cfg.estimate_cfg(), cfg.walk,
                                                cfg.optimizer, cfg.axis, seed);

    fs::create_directories(cfg.output_dir);
    json sections = json::array();
    std::string all_bytes;
    std::vector<std::string> files;
    size_t total_points = 0;
    for (const auto& s : sweep.sections) {
        json js = {{"id", s.id}, {"level", s.level}, {"status", section_status_name(s.status)}};
        if (s.status == SectionStatus::Walked) {
            const std::string name = "section_" + std::to_string(s.id) + ".csv";
            const std::string csv = polyline_to_csv(s.polyline, 3);
            write_text(fs::path(cfg.output_dir) / name, csv);
            all_bytes += csv;
            files.push_back(name);
            js["points"] = s.polyline.points.size();
            js["closed"] = s.polyline.closed;
            js["file"] = name;
            total_points += s.polyline.points.size();
        }
        sections.push_back(std::move(js));
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m = manifest_base(cfg, wall);
    m["axis"] = sweep.axis;
    m["sections"] = sections;
    m["point_count"] = total_points;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "0x%016llx",
                  static_cast<unsigned long long>(fnv1a(all_bytes)));
    m["output_hash"] = hash;
    m["files"] = files;
    write_text(fs::path(cfg.output_dir) / "manifest.json", m.dump(2) + "\n");

    std::printf("sections: %zu planes, %zu walked, %zu points total -> %s\n",
                sweep.sections.size(), files.size(), total_points, cfg.output_dir.c_str());
    return 0;
}

int cmd_check_inside(const CommonOpts& opt, const std::string& csv_path,
                     const std::string& x_arg) {
    RunConfig cfg = resolve_config(opt);
    BorderPolyline poly = read_polyline_csv(csv_path);
    if (!poly.closed) {
        std::fprintf(stderr, "inside-check requires a closed border\n");
        return kExitInputShape;
    }
    const Vec x = parse_point(x_arg);
    (void)cfg;
    InsideResult r = inside_check(poly, x);

    const BorderPoint* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& bp : poly.points) {
        const double dd = (x - bp.x).norm();
        if (dd < best_dist) {
            best_dist = dd;
            best = &bp;
        }
    }
    std::printf("%s\n", r == InsideResult::Inside ? "Inside" : "Unknown");
    std::printf("nearest border point: %s (index %d, dist %.6g)\n", fmt_vec(best->x).c_str(),
                best->index, best_dist);
    return 0;
}

int cmd_oracle_bm1d(double x, double T, int terms) {
    if (!(x > 0.0 && x < 1.0)) {
        std::fprintf(stderr, "oracle-bm1d: x must lie in (0,1)\n");
        return kExitConfig;
    }
    if (terms < 1) {
        std::fprintf(stderr, "oracle-bm1d: terms must be >= 1\n");
        return kExitConfig;
    }
    const double p = oracle::bm1d_survival(x, T, terms);
    const double dp = oracle::bm1d_survival_dx(x, T, terms);
    std::printf("P(tau >= T)      = %.17g\n", p);
    std::printf("dP/dx            = %.17g\n", dp);
    json line = {{"p", p}, {"dp_dx", dp}, {"x", x}, {"T", T}, {"terms", terms}};
    std::printf("RESULT %s\n", line.dump().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"psafe: boundary tracing of p-safe regions of an SDE.\n"
                 "exit codes: 0 ok, 2 config error, 3 precondition violated, "
                 "4 optimizer failed, 5 input shape"};
    app.require_subcommand(1);

    CommonOpts opt;
    app.add_option("--config", opt.config_path, "run configuration JSON")->expected(1);
    std::int64_t seed_arg = 0;
    int threads_arg = 0;
    auto* seed_opt = app.add_option("--seed", seed_arg, "override config seed");
    auto* thr_opt = app.add_option("--threads", threads_arg,
                                   "worker threads (must not change results)");
    app.add_option("--out", opt.out_dir, "output directory (overrides config)");

    std::string x_arg;
    auto* est = app.add_subcommand("estimate", "survival probability and gradient at a point");
    est->add_option("--x", x_arg, "comma-separated point (default: config start)");

    auto* walk = app.add_subcommand("walk", "trace one closed border section");
    auto* sections = app.add_subcommand("sections", "3D plane-sectioning sweep");

    std::string poly_arg, cx_arg;
    auto* chk = app.add_subcommand("check-inside", "classify a point against a walked border");
    chk->add_option("--polyline", poly_arg, "points.csv from a walk")->required();
    chk->add_option("--x", cx_arg, "comma-separated point")->required();

    double ox = 0.5, oT = 1.0;
    int oterms = 999;
    auto* orc = app.add_subcommand("oracle-bm1d",
                                   "Dirichlet heat-kernel series for BM on (0,1)");
    orc->add_option("--x", ox, "start point in (0,1)");
    orc->add_option("--T", oT, "horizon");
    orc->add_option("--terms", oterms, "odd-term cutoff");

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) opt.seed = seed_arg;
    if (*thr_opt) opt.threads = threads_arg;

    try {
        if (est->parsed()) return cmd_estimate(opt, x_arg);
        if (walk->parsed()) return cmd_walk(opt);
        if (sections->parsed()) return cmd_sections(opt);
        if (chk->parsed()) return cmd_check_inside(opt, poly_arg, cx_arg);
        if (orc->parsed()) return cmd_oracle_bm1d(ox, oT, oterms);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "precondition violated: %s\n", e.what());
        return kExitPrecondition;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

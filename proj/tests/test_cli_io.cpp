#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "psafe/config.hpp"
#include "psafe/io.hpp"

using namespace psafe;
namespace fs = std::filesystem;

namespace {

struct RunOut {
    int code = -1;
    std::string out;
};

RunOut run_cli(const std::string& args) {
    const fs::path tmp = fs::temp_directory_path() / "psafe_cli_out.txt";
    const std::string cmd = std::string(PSAFE_CLI_PATH) + " " + args + " > " + tmp.string() +
                            " 2>&1";
    const int rc = std::system(cmd.c_str());
    RunOut r;
    r.code = WEXITSTATUS(rc);
    std::ifstream in(tmp);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string write_tmp(const std::string& name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << text;
    return p.string();
}

const char* kDiskConfig = R"({
  "model": {"name": "bm", "params": {"d": 2, "scale": 1.0}},
  "region": {"type": "sphere", "params": {"radius": 3.0}},
  "p": 0.5, "T": 0.2, "N": 4000, "n": 50, "seed": 7,
  "optimizer": {"err_tol": 0.03, "max_iters": 30},
  "walk": {"gamma": 1.0, "max_points": 60},
  "start": "auto"
})";

} // namespace

TEST_CASE("config parse -> serialize -> parse is the identity") {
    const RunConfig a = parse_run_config(kDiskConfig);
    const RunConfig b = parse_run_config(serialize_run_config(a));
    CHECK(a.model_name == b.model_name);
    CHECK(a.model_d == b.model_d);
    CHECK(a.model_scale == b.model_scale);
    CHECK(a.region_type == b.region_type);
    CHECK(a.region_radius == b.region_radius);
    CHECK(a.p == b.p);
    CHECK(a.T == b.T);
    CHECK(a.N == b.N);
    CHECK(a.n == b.n);
    CHECK(a.seed == b.seed);
    CHECK(a.optimizer.lambda == b.optimizer.lambda);
    CHECK(a.optimizer.err_tol == b.optimizer.err_tol);
    CHECK(a.optimizer.max_iters == b.optimizer.max_iters);
    CHECK(a.walk.gamma == b.walk.gamma);
    CHECK(a.walk.max_points == b.walk.max_points);
    CHECK(a.start.has_value() == b.start.has_value());
    CHECK(a.output_dir == b.output_dir);
    // and serialization is stable
    CHECK(serialize_run_config(a) == serialize_run_config(b));
}

TEST_CASE("config errors name the offending field") {
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"N": -5})"),
                         doctest::Contains("\"N\""), ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"p": 2.0})"),
                         doctest::Contains("\"p\""), ConfigError);
    CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
    const RunConfig unknown = parse_run_config(R"({"model": {"name": "nope"}})");
    CHECK_THROWS_WITH_AS(unknown.make_model(), doctest::Contains("model.name"), ConfigError);
}

TEST_CASE("polyline csv round trip and schema") {
    BorderPolyline poly;
    poly.closed = true;
    for (int k = 0; k < 3; ++k) {
        BorderPoint bp;
        bp.x = Vec::Constant(2, 1.25 * k + 0.1);
        bp.grad = Vec::Constant(2, -0.5 * k);
        bp.p_hat = 0.5 + 1e-14 * k;
        bp.se_p = 0.01;
        bp.index = k;
        bp.section_id = 4;
        poly.points.push_back(bp);
    }
    const std::string csv = polyline_to_csv(poly, 2);
    CHECK(csv.find("# closed=true\n") == 0);
    CHECK(csv.find("section_id,index,x1,x2,p_hat,se_p,grad1,grad2\n") != std::string::npos);

    const BorderPolyline back = polyline_from_csv(csv);
    CHECK(back.closed);
    REQUIRE(back.points.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(back.points[k].x == poly.points[k].x); // %.17g is lossless
        CHECK(back.points[k].grad == poly.points[k].grad);
        CHECK(back.points[k].p_hat == poly.points[k].p_hat);
        CHECK(back.points[k].section_id == 4);
    }
}

TEST_CASE("fnv1a reference vectors") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("cli: oracle-bm1d symmetry and limits") {
    const RunOut r = run_cli("oracle-bm1d --x 0.5 --T 0.25");
    CHECK(r.code == 0);
    // derivative vanishes at the symmetric midpoint (to fp roundoff)
    const auto pos = r.out.find("\"dp_dx\":");
    REQUIRE(pos != std::string::npos);
    const double dp = std::strtod(r.out.c_str() + pos + 8, nullptr);
    CHECK(std::abs(dp) < 1e-12);
    const RunOut bad = run_cli("oracle-bm1d --x 1.5 --T 0.25");
    CHECK(bad.code == 2);
}

TEST_CASE("cli: estimate near the center reports high survival") {
    const std::string cfg = write_tmp("disk_cfg.json", kDiskConfig);
    const RunOut r = run_cli("--config " + cfg + " estimate --x 0.1,0.1");
    CHECK(r.code == 0);
    const auto pos = r.out.find("\"p_hat\":");
    REQUIRE(pos != std::string::npos);
    const double p_hat = std::strtod(r.out.c_str() + pos + 8, nullptr);
    CHECK(p_hat > 0.9);
}

TEST_CASE("cli: config and precondition exit codes") {
    const std::string bad_cfg = write_tmp("bad_cfg.json", R"({"N": -5})");
    const RunOut r2 = run_cli("--config " + bad_cfg + " estimate");
    CHECK(r2.code == 2);
    CHECK(r2.out.find("\"N\"") != std::string::npos);

    const std::string cfg = write_tmp("disk_cfg.json", kDiskConfig);
    const RunOut r3 = run_cli("--config " + cfg + " estimate --x 5,5");
    CHECK(r3.code == 3);
    CHECK(r3.out.find("outside the region") != std::string::npos);
}

TEST_CASE("cli: check-inside rejects an open polyline with exit 5") {
    BorderPolyline poly;
    BorderPoint bp;
    bp.x = Vec::Zero(2);
    bp.grad = Vec::Ones(2);
    poly.points.push_back(bp);
    poly.closed = false;
    const std::string csv_path =
        write_tmp("open_poly.csv", polyline_to_csv(poly, 2));
    const std::string cfg = write_tmp("disk_cfg.json", kDiskConfig);
    const RunOut r = run_cli("--config " + cfg + " check-inside --polyline " + csv_path +
                             " --x 0,0");
    CHECK(r.code == 5);
    CHECK(r.out.find("closed border") != std::string::npos);
}

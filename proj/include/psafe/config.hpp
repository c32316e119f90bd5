#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "psafe/border.hpp"
#include "psafe/geometry.hpp"
#include "psafe/optimizer.hpp"
#include "psafe/sde.hpp"

namespace psafe {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full run description, loadable from a JSON file. Key names are stable:
// model {name, params}, region {type, params}, p, T, N, n, seed,
// optimizer {...}, walk {...}, start (array or "auto"), output_dir.
struct RunConfig {
    std::string model_name = "toy3d";
    double model_rho = 0.5;     // toy3d
    int model_d = 2;            // bm
    double model_scale = 1.0;   // bm

    std::string region_type = "sphere";
    Vec region_center;          // empty = origin at model dim
    double region_radius = 100.0;
    Vec region_lo, region_hi;   // box

    double p = 0.5;
    double T = 1.0;
    long N = 10000;
    int n = 200;
    std::uint64_t seed = 0;
    int threads = 0;
    bool antithetic = true;

    GdConfig optimizer;
    WalkConfig walk;
    int axis = 3;               // section sweep axis

    std::optional<Vec> start;   // nullopt = "auto" (region centroid)
    std::string output_dir = ".";

    std::shared_ptr<SdeModel> make_model() const;
    std::unique_ptr<Region> make_region() const;
    SimConfig sim() const { return {T, n}; }
    EstimateConfig estimate_cfg() const { return {N, seed, antithetic, threads}; }
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

} // namespace psafe

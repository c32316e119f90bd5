#include "psafe/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace psafe {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    throw ConfigError("config field \"" + field + "\": " + what);
}

double get_num(const json& j, const std::string& field, double dflt) {
    if (!j.contains(field)) return dflt;
    if (!j[field].is_number()) bad(field, "expected a number");
    return j[field].get<double>();
}

Vec get_vec(const json& j, const std::string& field) {
    if (!j.at(field).is_array()) bad(field, "expected an array of numbers");
    const auto& a = j.at(field);
    Vec v(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) bad(field, "expected an array of numbers");
        v[static_cast<long>(i)] = a[i].get<double>();
    }
    return v;
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

} // namespace

std::shared_ptr<SdeModel> RunConfig::make_model() const {
    try {
        if (model_name == "toy3d") return builtin_toy3d(model_rho);
        if (model_name == "bm") return builtin_bm(model_d, model_scale);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field \"model.params\": ") + e.what());
    }
    bad("model.name", "unknown model \"" + model_name + "\" (built-ins: toy3d, bm)");
}

std::unique_ptr<Region> RunConfig::make_region() const {
    const int d = model_name == "toy3d" ? 3 : model_d;
    try {
        if (region_type == "sphere") {
            Vec c = region_center.size() > 0 ? region_center : Vec(Vec::Zero(d));
            return std::make_unique<SphereRegion>(c, region_radius);
        }
        if (region_type == "box") {
            Vec lo = region_lo, hi = region_hi;
            if (lo.size() == 0) lo = Vec::Constant(d, -region_radius);
            if (hi.size() == 0) hi = Vec::Constant(d, region_radius);
            return std::make_unique<BoxRegion>(lo, hi);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field \"region.params\": ") + e.what());
    }
    bad("region.type", "unknown region \"" + region_type + "\" (built-ins: sphere, box)");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig c;
    if (j.contains("model")) {
        const auto& m = j["model"];
        if (m.contains("name")) {
            if (!m["name"].is_string()) bad("model.name", "expected a string");
            c.model_name = m["name"].get<std::string>();
        }
        const json params = m.contains("params") ? m["params"] : json::object();
        c.model_rho = get_num(params, "rho", c.model_rho);
        c.model_d = static_cast<int>(get_num(params, "d", c.model_d));
        c.model_scale = get_num(params, "scale", c.model_scale);
    }
    if (j.contains("region")) {
        const auto& r = j["region"];
        if (r.contains("type")) {
            if (!r["type"].is_string()) bad("region.type", "expected a string");
            c.region_type = r["type"].get<std::string>();
        }
        const json params = r.contains("params") ? r["params"] : json::object();
        c.region_radius = get_num(params, "radius", c.region_radius);
        if (params.contains("center")) c.region_center = get_vec(params, "center");
        if (params.contains("lo")) c.region_lo = get_vec(params, "lo");
        if (params.contains("hi")) c.region_hi = get_vec(params, "hi");
    }

    c.p = get_num(j, "p", c.p);
    if (!(c.p > 0.0 && c.p < 1.0)) bad("p", "must be in (0,1)");
    c.T = get_num(j, "T", c.T);
    if (!(c.T > 0.0)) bad("T", "must be positive");
    c.N = static_cast<long>(get_num(j, "N", static_cast<double>(c.N)));
    if (c.N < 2) bad("N", "must be >= 2");
    c.n = static_cast<int>(get_num(j, "n", c.n));
    if (c.n < 1) bad("n", "must be >= 1");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() && !j["seed"].is_number_unsigned())
            bad("seed", "expected an integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.threads = static_cast<int>(get_num(j, "threads", c.threads));
    if (j.contains("antithetic")) {
        if (!j["antithetic"].is_boolean()) bad("antithetic", "expected a boolean");
        c.antithetic = j["antithetic"].get<bool>();
    }

    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        c.optimizer.lambda = get_num(o, "lambda", c.optimizer.lambda);
        c.optimizer.max_iters = static_cast<int>(get_num(o, "max_iters", c.optimizer.max_iters));
        c.optimizer.err_tol = get_num(o, "err_tol", c.optimizer.err_tol);
        c.optimizer.adam.beta1 = get_num(o, "beta1", c.optimizer.adam.beta1);
        c.optimizer.adam.beta2 = get_num(o, "beta2", c.optimizer.adam.beta2);
        c.optimizer.adam.eps = get_num(o, "eps", c.optimizer.adam.eps);
        c.optimizer.stall_grad_tol = get_num(o, "stall_grad_tol", c.optimizer.stall_grad_tol);
        if (o.contains("plain_gd")) {
            if (!o["plain_gd"].is_boolean()) bad("optimizer.plain_gd", "expected a boolean");
            c.optimizer.plain_gd = o["plain_gd"].get<bool>();
        }
        try {
            c.optimizer.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config field \"optimizer\": ") + e.what());
        }
    }
    if (j.contains("walk")) {
        const auto& w = j["walk"];
        c.walk.gamma = get_num(w, "gamma", c.walk.gamma);
        c.walk.step_min = static_cast<int>(get_num(w, "step_min", c.walk.step_min));
        c.walk.closure_tol = get_num(w, "closure_tol", c.walk.closure_tol);
        c.walk.parabola_window = static_cast<int>(get_num(w, "parabola_window", c.walk.parabola_window));
        c.walk.max_points = static_cast<int>(get_num(w, "max_points", c.walk.max_points));
        c.walk.delta = get_num(w, "delta", c.walk.delta);
        c.walk.adaptive_cap = static_cast<int>(get_num(w, "adaptive_cap", c.walk.adaptive_cap));
        c.axis = static_cast<int>(get_num(w, "axis", c.axis));
        try {
            c.walk.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config field \"walk\": ") + e.what());
        }
    }

    if (j.contains("start")) {
        if (j["start"].is_string()) {
            if (j["start"].get<std::string>() != "auto")
                bad("start", "expected an array of numbers or \"auto\"");
        } else {
            c.start = get_vec(j, "start");
        }
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) bad("output_dir", "expected a string");
        c.output_dir = j["output_dir"].get<std::string>();
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& c) {
    json j;
    j["model"]["name"] = c.model_name;
    if (c.model_name == "toy3d") {
        j["model"]["params"]["rho"] = c.model_rho;
    } else {
        j["model"]["params"]["d"] = c.model_d;
        j["model"]["params"]["scale"] = c.model_scale;
    }
    j["region"]["type"] = c.region_type;
    j["region"]["params"]["radius"] = c.region_radius;
    if (c.region_center.size() > 0) j["region"]["params"]["center"] = vec_to_json(c.region_center);
    if (c.region_lo.size() > 0) j["region"]["params"]["lo"] = vec_to_json(c.region_lo);
    if (c.region_hi.size() > 0) j["region"]["params"]["hi"] = vec_to_json(c.region_hi);
    j["p"] = c.p;
    j["T"] = c.T;
    j["N"] = c.N;
    j["n"] = c.n;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["antithetic"] = c.antithetic;
    j["optimizer"] = {{"lambda", c.optimizer.lambda},
                      {"max_iters", c.optimizer.max_iters},
                      {"err_tol", c.optimizer.err_tol},
                      {"beta1", c.optimizer.adam.beta1},
                      {"beta2", c.optimizer.adam.beta2},
                      {"eps", c.optimizer.adam.eps},
                      {"stall_grad_tol", c.optimizer.stall_grad_tol},
                      {"plain_gd", c.optimizer.plain_gd}};
    j["walk"] = {{"gamma", c.walk.gamma},
                 {"step_min", c.walk.step_min},
                 {"closure_tol", c.walk.closure_tol},
                 {"parabola_window", c.walk.parabola_window},
                 {"max_points", c.walk.max_points},
                 {"delta", c.walk.delta},
                 {"adaptive_cap", c.walk.adaptive_cap},
                 {"axis", c.axis}};
    if (c.start)
        j["start"] = vec_to_json(*c.start);
    else
        j["start"] = "auto";
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

} // namespace psafe

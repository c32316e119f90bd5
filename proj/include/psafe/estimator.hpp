#pragma once

#include <cstdint>
#include <vector>

#include "psafe/geometry.hpp"
#include "psafe/sde.hpp"

namespace psafe {

struct EstimateConfig {
    long N = 10000;        // total path budget; pair count is N/2 when antithetic
    uint64_t seed = 0;
    bool antithetic = true;
    int threads = 0;       // 0 = hardware concurrency; never affects the result

    void validate() const {
        if (antithetic) {
            if (N < 2 || N % 2 != 0)
                throw std::invalid_argument("EstimateConfig: N must be even and >= 2 with antithetic");
        } else if (N < 1) {
            throw std::invalid_argument("EstimateConfig: N must be >= 1");
        }
        if (threads < 0) throw std::invalid_argument("EstimateConfig: threads must be >= 0");
    }
};

// Monte Carlo survival probability and Malliavin gradient with standard
// errors. Standard errors are computed over the i.i.d. samples, which are
// pair averages when antithetic pairing is on (N_effective = N/2).
struct Estimate {
    double p_hat = 0.0;
    Vec grad;
    double se_p = 0.0;
    Vec se_grad;
    long N = 0;
    long n = 0;
};

// Gaussian increments N(0, h) for one path, d x n, addressed purely by
// (seed, path_index, step, component). Identical arguments give identical
// sequences.
Mat derive_path_noise(uint64_t seed, uint64_t path_index, const SimConfig& sim, int d);

Estimate estimate(const SdeModel& model, const Region& region, const Vec& x,
                  const SimConfig& sim, const EstimateConfig& cfg);

// Independent estimates with per-point seed offsets (seed XOR hash(index)).
std::vector<Estimate> estimate_along_sweep(const SdeModel& model, const Region& region,
                                           const std::vector<Vec>& points, const SimConfig& sim,
                                           const EstimateConfig& cfg);

} // namespace psafe

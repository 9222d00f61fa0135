#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dualgen/dual_builder.hpp"
#include "dualgen/generator.hpp"
#include "dualgen/order_transform.hpp"

namespace dualgen {

enum class Scheme { euler_maruyama, euler_jump_thinning, stable_euler };

struct PathConfig {
    std::size_t n_paths = 1000;
    double dt = 1e-3;
    double t_end = 1.0;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    double tail_truncation_quantile = 0.999;
    // Kill a surviving absorbed path with the Brownian-bridge crossing
    // probability exp(-x_k x_{k+1} / (a dt)).
    bool bridge_correction = false;
    double rate_bound = 0.0;        // thinning bound, must dominate the total jump rate
    std::size_t threads = 0;        // 0: DUALGEN_THREADS or hardware concurrency

    // Throws InvalidArgument unless dt <= t_end, n_paths >= 100, quantile in (0.5, 1].
    void validate() const;
};

struct PathEnsemble {
    std::vector<Vec> terminal;
    std::vector<char> absorbed;  // hit the origin (absorbing half-line specs)
    std::vector<std::string> warnings;
};

// Worker count: cfg.threads, else DUALGEN_THREADS, else hardware concurrency.
std::size_t worker_count(const PathConfig& cfg);

// Terminal states at cfg.t_end. Path i uses the substream (seed, i), so the
// output does not depend on the worker count.
PathEnsemble simulate_paths(const ProcessSpec& spec, const PathConfig& cfg, const Vec& x0);

enum class FunctionalKind { cone, riesz, newtonian, log2d };

struct FunctionalDescriptor {
    FunctionalKind kind = FunctionalKind::cone;
    std::optional<Cone> cone;
    double alpha = 1.0;  // riesz: |v|^{alpha - d}
    std::string describe() const;
};

struct DualityEstimate {
    double lhs_mean = 0.0, lhs_se = 0.0;
    double rhs_mean = 0.0, rhs_se = 0.0;
    double gap = 0.0, z_score = 0.0;
    std::size_t n_paths = 0;
    std::string functional_descriptor;
    std::optional<double> truncation_level;  // winsorization bound on the pooled sample
    std::vector<std::string> warnings;
};

// lhs = E f(X_t^x, y), rhs = E f(x, Y_t^y). `certificate` must be an
// admissible dual report for the cone descriptor (InadmissibleDual
// otherwise). Paths for Y use the seed stream cfg.seed + 1.
DualityEstimate estimate_duality(const ProcessSpec& spec_x, const ProcessSpec& spec_y, const FunctionalDescriptor& f,
                                 const Vec& x, const Vec& y, const PathConfig& cfg,
                                 const DualReport* certificate = nullptr);

struct RegularizedDistribution {
    std::vector<double> values;  // extrapolated CDF at each x probe
    std::vector<double> rates;   // observed order in eps, infinity when constant
};

// values[k][j]: CDF at x probe j from start a + eps[k]; eps strictly
// decreasing with at least three levels. Successive differences must
// shrink by at least 1.3 per level unless they are below `noise`.
RegularizedDistribution regularized_boundary_distribution(const std::vector<double>& eps,
                                                          const std::vector<std::vector<double>>& values,
                                                          double noise = 1e-12);

}  // namespace dualgen

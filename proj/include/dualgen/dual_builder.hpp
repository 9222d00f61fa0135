#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dualgen/generator.hpp"

namespace dualgen {

struct ConditionViolation {
    std::string condition_id;
    Vec probe;
    double value = 0.0;
};

struct DualReport {
    std::optional<ProcessSpec> dual_spec;
    bool admissible = false;
    std::vector<ConditionViolation> violated_conditions;
    std::string notes;
    // Closed-form dual atoms when every source atom has a constant rate (1-D).
    std::optional<JumpKernel> explicit_jump;
    // Compensator integral in closed form at the probe points, when computed.
    std::vector<std::pair<double, double>> compensator_probe;

    void add(std::string id, const Vec& probe, double value);
    void finish();  // admissible = violated_conditions.empty()
    // Throws the error matching the first violated condition.
    void throw_if_inadmissible() const;
};

/// Piecewise monotone function of z: a differentiable callable with its
/// derivative, or Stieltjes atoms plus a density.
struct MonotoneRateFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    std::vector<std::pair<double, double>> atoms;  // (location, jump size)
    std::function<double(double)> density;

    double operator()(double z) const;
    // Checks nondecreasing on [lo, hi] at `pairs` ordered probe pairs (and on
    // the derivative / atom sizes / density when supplied). Returns the first
    // offending z or nothing.
    std::optional<double> first_decrease(double lo, double hi, std::size_t pairs = 200, double tol = 1e-12) const;
};

// Drift-only dual: -b, requires b_j = b_j(x_j).
DualReport dual_drift(const ProcessSpec& spec);

// Diffusion dual: same a, drift a'_jj - b_j. Structure (a_ij depends only on
// x_i and x_j) is checked symbolically with probe evidence in the box.
DualReport dual_diffusion(const ProcessSpec& spec, const std::vector<double>& lower = {},
                          const std::vector<double>& upper = {});

struct LightConeCoefficients {
    Expr alpha, beta, omega;           // alpha, beta in one variable s; omega in (x, y)
    std::optional<Expr> alpha_prime;   // symbolic derivative used when empty
    std::optional<Expr> beta_prime;
};

// Assembles a = al(x+y)+be(x-y)+om, c = al+be-om, b = al-be and L = a dxx +
// 2b dxy + c dyy. The exact dual drift is 2(al'+be', al'-be').
ProcessSpec lightcone_spec(const LightConeCoefficients& c);
DualReport dual_lightcone_diffusion(const LightConeCoefficients& c, const std::vector<double>& lower,
                                    const std::vector<double>& upper, double drift_factor = 2.0);

enum class JumpBoundary { none, at_zero };

// P(y, z) = nu(z, {w >= y}) - nu(z, R^d) 1{z >= y} for atomic/separable and
// analytic kernels (targets folded when k.fold).
KernelFn siegmund_cumulative(const JumpKernel& k);

// One-dimensional jump dual. Probes run over the points of `probe_grid`.
DualReport dual_jump_1d(const JumpKernel& nu, JumpBoundary boundary, const Grid& probe_grid,
                        double compensator_cutoff = 1.0);

// Multidimensional jump dual: derivative sign conditions on the rates at
// probe points (rate_gradient and mixed derivatives must be available) and
// an exact check that the dual rates on `probe_grid` are nonnegative.
DualReport dual_jump_multidim(const JumpKernel& nu, const Grid& probe_grid);

// Full 1-D Levy-type dual a, a' - b + compensator, dual jumps; half-line
// processes are checked for the symmetry assumption (a even, b odd, finite
// rate at 0) and get an absorbing origin.
DualReport dual_full_1d(const ProcessSpec& spec, const Grid& probe_grid);

struct SelfDualResult {
    bool self_dual = false;
    std::optional<Vec> witness;
    std::string reason;
};
SelfDualResult check_self_dual(const ProcessSpec& spec, const std::vector<double>& lower,
                               const std::vector<double>& upper, std::size_t probes = 200);

// Process in coordinates alpha with x = B alpha: drift B^{-1} b, diffusion
// B^{-1} a B^{-T}. Jumps are not transformed.
ProcessSpec transform_spec(const ProcessSpec& spec, const Mat& B);

// Half-line kernel from a kernel declared for z >= 0: targets folded by |.|.
JumpKernel fold_half_line(JumpKernel k);

// nu(z, {w >= y}) for atomic/separable and analytic kernels.
double upper_tail(const JumpKernel& k, const Vec& z, const Vec& y);

struct PrincipalValue {
    double value = 0.0;
    bool converged = false;
    std::vector<double> levels;  // estimate at each excluded window c 2^{-k}
};

// Principal value of int_{y-c}^{y+c} (z - y) dM(z) for a cumulative function
// M, by paired geometric cells on both sides of y with a symmetric excluded
// window that is halved `levels` times.
PrincipalValue principal_value_moment(const std::function<double(double)>& M, double y, double c,
                                      std::size_t levels = 14, std::size_t cells_per_octave = 16);

}  // namespace dualgen

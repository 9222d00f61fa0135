#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dualgen/expression.hpp"
#include "dualgen/state_space.hpp"

namespace dualgen {

enum class Domain { full_space, half_line };
enum class HalfLineBoundary { none, reflect, absorb };

enum class JumpFamily { atomic, analytic, separable, cumulative };

/// One jump channel: from z to z + displacement (or to a fixed target) at rate(z).
struct JumpAtom {
    Vec displacement;
    bool reset = false;  // jump to `target` rather than z + displacement
    Vec target;
    Expr rate;
    // Tabulated or otherwise non-symbolic rate; overrides `rate` when set.
    std::function<double(const Vec&)> rate_fn;
    // Optional derivatives of rate w.r.t. z_i; filled symbolically if empty.
    std::vector<Expr> rate_gradient;
    int axis = -1;  // separable kernels: the only coordinate the rate may depend on

    double rate_at(const Vec& z) const { return rate_fn ? rate_fn(z) : rate(z); }
};

using KernelFn = std::function<double(const Vec& z, const Vec& w)>;

/**
 * Jump intensity nu(z, dw).
 *
 * atomic/separable: finite list of JumpAtom.
 * analytic: a density nu(z, w) dw supported in the sup-ball of radius
 * support_radius around z; an orthant tail nu(z, {u >= w}) may be supplied
 * for exact cell masses.
 * cumulative: a Siegmund-dual kernel given through P(y, z), where for a
 * source kernel nu one has P(y, z) = nu(z, {w >= y}) - nu(z, R^d) 1{z >= y}.
 * On a grid the rates out of y are the mixed backward differences of
 * P(y, .) over the lattice, diagonal included; P vanishes below the lower
 * grid edge.
 */
struct JumpKernel {
    JumpFamily family = JumpFamily::atomic;
    std::vector<JumpAtom> atoms;

    KernelFn density;
    KernelFn density_dz;  // derivative of the density in its first argument (1-D)
    KernelFn tail;
    std::function<double(const Vec&)> total_rate;
    double support_radius = 0.0;

    KernelFn cumulative;
    // Extra drift carried by a cumulative dual of a compensated source.
    std::function<Vec(const Vec&)> drift_correction;

    bool compensated = false;
    bool fold = false;  // targets on axis 0 folded to |t| (half-line kernels)
    double rate_bound = 0.0;  // global bound used by thinning
    std::string name;          // named family for serialization
    std::vector<double> params;
    std::string support_note;
    int smoothness = 0;

    // Sum of jump rates out of z, ignoring the grid.
    double total(const Vec& z) const;
};

struct StableSpec {
    double alpha = 1.0;
    Expr amplitude = Expr::constant(1.0);  // a(x) in -a(x)|Delta|^{alpha/2}
};

/// Generator L g = sum a_ij d_i d_j g + b . grad g + jumps (no 1/2 factor).
struct ProcessSpec {
    std::size_t dim = 1;
    std::optional<std::vector<Expr>> drift;
    std::optional<std::vector<std::vector<Expr>>> diffusion;
    std::optional<JumpKernel> jump;
    std::optional<StableSpec> stable;
    double compensator_cutoff = 1.0;
    Domain domain = Domain::full_space;
    HalfLineBoundary boundary = HalfLineBoundary::none;
    bool drift_separable = false;  // declared b_j = b_j(x_j)

    double drift_at(std::size_t i, const Vec& x) const;
    double diffusion_at(std::size_t i, std::size_t j, const Vec& x) const;
    Mat diffusion_matrix(const Vec& x) const;

    // Throws InvalidArgument (nothing present), DimensionMismatch and
    // PSDViolation at the first of `probes` quasi-random points in the box.
    void validate(const std::vector<double>& lower, const std::vector<double>& upper,
                  std::size_t probes = 100) const;
};

struct QMatrix {
    Mat entries;
    Grid grid;
    std::vector<std::string> warnings;
    std::size_t n() const { return static_cast<std::size_t>(entries.rows()); }
};

struct Violation {
    std::string kind;
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

struct ValidationReport {
    bool pass = true;
    std::vector<Violation> violations;
    double min_offdiag = 0.0;
    double max_rowsum_defect = 0.0;
    std::vector<double> row_sums;
};

struct DiscretizeOptions {
    bool clip_cross = true;
    // Record a warning where |b_i|/h_i exceeds a_ii/h_i^2.
    bool warn_cfl = true;
};

QMatrix discretize(const ProcessSpec& spec, const Grid& g, const DiscretizeOptions& opt = {});

// Only the jump part, as a generator (diagonal included).
Mat discretize_jumps(const JumpKernel& k, const ProcessSpec& spec, const Grid& g);

// Discrete compensator drift -sum mass (x - z) 1{|x - z| <= c} at grid point z.
Vec compensator_drift(const JumpKernel& k, const ProcessSpec& spec, const Grid& g, std::size_t z_index);

QMatrix adjoint(const QMatrix& q);
ValidationReport validate_qmatrix(const QMatrix& q, bool conservative);
ValidationReport validate_matrix(const Mat& m, bool conservative);

// Low-discrepancy probe points in a box (Halton sequence).
std::vector<Vec> probe_points(const std::vector<double>& lower, const std::vector<double>& upper, std::size_t count);

// Grid boundary after applying the half-line domain override on axis 0.
Grid effective_grid(const ProcessSpec& spec, const Grid& g);

}  // namespace dualgen

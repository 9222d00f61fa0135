#pragma once

#include <memory>

#include "dualgen/generator.hpp"
#include "dualgen/state_space.hpp"

namespace dualgen {

struct SemigroupSnapshot {
    double t = 0.0;
    Mat T;
    std::shared_ptr<const QMatrix> source_q;
    double self_check = 0.0;  // ||T - exp(tQ/2)^2||_inf
};

inline constexpr std::size_t kMaxStates = 4096;

// exp(tQ) by Pade scaling and squaring. Throws TooManyStates above
// kMaxStates, Overflow when ||tQ||_inf exceeds 1e8 or the result is not
// finite, NonConvergent when the half-step self-check exceeds 1e-10.
SemigroupSnapshot semigroup(const QMatrix& q, double t);

// F exp(tQ)^T F^{-1} with the exact discrete inverse of the dressing matrix.
SemigroupSnapshot dual_semigroup_via_F(const QMatrix& q, const Grid& grid, const Cone& cone, double t);

// Generator-level counterpart F Q^T F^{-1}.
Mat dual_generator_via_F(const Mat& q, const Grid& grid, const Cone& cone);

// max_{x,y} |sum_z T(x,z) f(z,y) - sum_w TD(y,w) f(x,w)|; f rows x, columns y.
double duality_residual(const SemigroupSnapshot& T, const SemigroupSnapshot& TD, const Mat& f);
double duality_residual(const Mat& T, const Mat& TD, const Mat& f);

// Nonnegativity within 1e-10 and unit (or at most unit) row sums within 1e-9.
ValidationReport dual_stochasticity_check(const SemigroupSnapshot& TD, bool conservative_expected);
ValidationReport dual_stochasticity_check(const Mat& TD, bool conservative_expected);

// x -> sum_{z >= y} T(x, z) nondecreasing for every y, on a 1-D grid ordering.
bool stochastically_monotone(const Mat& T, double tol = 1e-10);

struct OracleComparison {
    double max_abs = 0.0;    // on rows at least `margin` lattice steps from every edge
    double q_norm = 0.0;     // ||Q||_inf of the source
    std::size_t row = 0;
    std::size_t col = 0;
    double relative() const { return q_norm > 0.0 ? max_abs / q_norm : max_abs; }
};

// Compares a closed-form dual generator with F Q^T F^{-1} on interior rows.
OracleComparison compare_with_oracle(const Mat& q_dual, const Mat& q_source, const Grid& grid, const Cone& cone,
                                     std::size_t margin);

}  // namespace dualgen

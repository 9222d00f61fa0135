#pragma once

#include <vector>

#include "dualgen/state_space.hpp"

namespace dualgen {

enum class KernelKind { riesz, log2d, newtonian };

/// Translation-invariant pairing f(x, y) = k(x - y).
struct TranslationKernel {
    KernelKind kind = KernelKind::riesz;
    double alpha = 2.0;
    std::size_t dim = 2;
    double normalizer = 0.0;
    double sigma_dminus1 = 0.0;  // area of the unit sphere in R^dim

    static TranslationKernel riesz(double alpha, std::size_t dim);
    static TranslationKernel newtonian(std::size_t dim);
    static TranslationKernel log2d();

    // Kernel value at displacement v; infinite at v = 0 for the singular kinds.
    double value(const Vec& v) const;
    // Average of the kernel over the cell prod [-h_i/2, h_i/2] centred at 0.
    double cell_average(const std::vector<double>& h) const;
};

double riesz_normalizer(double alpha, std::size_t dim);
double unit_sphere_area(std::size_t dim);

// Sum of weights over {x : x - y in C}, evaluated at every grid point y.
GridFunction forward_F(const GridMeasure& q, const Grid& g, const Cone& c);

// Tensor product of q(y) = g(y) - g(y + h e_axis), zero beyond the upper edge.
GridMeasure inverse_F_pareto(const GridFunction& g, const Grid& grid);

// Directional mixed difference (-1)^d D_{s_1}..D_{s_d} g / |det(s)|, where s_j
// is the primitive lattice step along generator e_j.
// Coincides with inverse_F_pareto for the identity basis; for other cones it
// is a consistent approximation of F^{-1}, not its exact inverse.
GridMeasure inverse_F_cone(const GridFunction& g, const Grid& grid, const Cone& c);

// Exact solve of forward_F(q) = g for any cone, by back substitution in an
// order where the relation is triangular.
GridMeasure inverse_F_exact(const GridFunction& g, const Grid& grid, const Cone& c);

// Lattice displacement (in steps) of every cone generator; throws
// NonLatticeCone if a generator is not an integer combination of steps.
std::vector<std::vector<long>> cone_lattice_steps(const Grid& grid, const Cone& c);

// Convolution y -> sum_x k(y - x) q(x); the singular diagonal uses the cell
// average unless `cell_average` is false, in which case a point mass on an
// evaluation point raises SingularityUnhandled.
GridFunction potential_F(const GridMeasure& q, const Grid& grid, const TranslationKernel& k,
                         bool cell_average = true);

// Matrix of forward_F, rows y and columns x: F(y, x) = 1{x - y in C}.
Mat forward_F_matrix(const Grid& grid, const Cone& c);
// Exact inverse of forward_F_matrix, built column by column from the exact
// differencing (Pareto) or the triangular solve (other cones).
Mat inverse_F_matrix(const Grid& grid, const Cone& c);

}  // namespace dualgen

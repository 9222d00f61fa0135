#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "dualgen/error.hpp"

namespace dualgen {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// What happens to mass that a stencil or jump would push past a grid edge.
enum class BoundaryPolicy { truncate_mass, reflect, absorb };

struct AxisBoundary {
    BoundaryPolicy lower = BoundaryPolicy::truncate_mass;
    BoundaryPolicy upper = BoundaryPolicy::truncate_mass;
    bool operator==(const AxisBoundary&) const = default;
};

/**
 * Rectangular lattice on a box of R^d.
 *
 * Points are stored row-major with axis 0 slowest, so the flat index of
 * multi-index (i_0, ..., i_{d-1}) is sum_k i_k * stride_k with
 * stride_{d-1} = 1.
 */
class Grid {
public:
    Grid() = default;

    std::size_t dim() const { return lower_.size(); }
    std::size_t size() const { return size_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    const std::vector<double>& spacing() const { return spacing_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    const std::vector<std::size_t>& strides() const { return strides_; }
    const std::vector<AxisBoundary>& boundary() const { return boundary_; }

    Vec point(std::size_t index) const;
    std::vector<std::size_t> multi_index(std::size_t index) const;
    std::size_t flat_index(const std::vector<std::size_t>& multi) const;

    // Flat index of the point shifted by `steps` lattice steps, or -1 if it
    // leaves the grid.
    long shifted(std::size_t index, const std::vector<long>& steps) const;

    // Nearest lattice multi-index (signed, may lie outside the grid).
    std::vector<long> lattice_coords(const Vec& x) const;
    bool lattice_inside(const std::vector<long>& coords) const;

    bool contains(const Vec& x, double tol = 1e-12) const;
    // Distance in lattice steps from `index` to the closest grid edge.
    std::size_t edge_distance(std::size_t index) const;
    double cell_volume() const;

    bool operator==(const Grid&) const = default;

private:
    friend Grid build_grid(const std::vector<double>&, const std::vector<double>&,
                           const std::vector<double>&, const std::vector<AxisBoundary>&);
    std::vector<double> lower_, upper_, spacing_;
    std::vector<std::size_t> counts_, strides_;
    std::vector<AxisBoundary> boundary_;
    std::size_t size_ = 0;
};

// Throws NonCommensurate when a spacing does not divide its interval and
// EmptyGrid when an axis would carry fewer than two points. An empty
// boundary vector means truncate_mass on every end.
Grid build_grid(const std::vector<double>& lower, const std::vector<double>& upper,
                const std::vector<double>& spacing,
                const std::vector<AxisBoundary>& boundary = {});

/// Polyhedral cone C(e_1..e_d) = { sum_j alpha_j e_j : alpha_j >= 0 }.
class Cone {
public:
    // Columns of `basis` are the generators e_j.
    explicit Cone(Mat basis);
    static Cone pareto(std::size_t dim);
    static Cone light_cone_2d();

    std::size_t dim() const { return static_cast<std::size_t>(basis_.cols()); }
    const Mat& basis() const { return basis_; }
    double det_abs() const { return det_abs_; }
    bool is_pareto() const { return pareto_; }

    // Coordinates of v in the cone basis.
    Vec coordinates(const Vec& v) const;

private:
    Mat basis_;
    Mat inverse_;
    double det_abs_ = 0.0;
    bool pareto_ = false;
};

bool cone_contains(const Cone& c, const Vec& v);

/// Indicator matrix f(x, y) = 1{x - y in C}, rows x and columns y.
Mat duality_indicator_matrix(const Grid& g, const Cone& c);

struct GridMeasure {
    std::vector<double> weights;
    bool is_probability = false;

    // Throws InvalidArgument when the probability flag is set but the
    // weights are not a probability vector within 1e-12.
    void validate() const;
};

struct GridFunction {
    std::vector<double> values;

    // Throws InvalidArgument on NaN or Inf entries.
    void validate() const;
};

}  // namespace dualgen

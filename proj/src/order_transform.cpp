#include "dualgen/order_transform.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace dualgen {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

void check_size(std::size_t got, const Grid& g, const char* what) {
    if (got != g.size())
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + " has " + std::to_string(got) + " entries, grid has " + std::to_string(g.size()));
}

// g(y) <- g(y + step) - g(y), zero beyond the grid.
void forward_difference(std::vector<double>& v, const Grid& g, const std::vector<long>& step) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const long j = g.shifted(i, step);
        out[i] = (j >= 0 ? v[static_cast<std::size_t>(j)] : 0.0) - v[i];
    }
    v.swap(out);
}

// Points in decreasing order of the sum of cone coordinates. For x - y in C
// with x != y the sum is strictly larger at x, so F is unit triangular here.
std::vector<std::size_t> triangular_order(const Grid& g, const Cone& c) {
    std::vector<double> key(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) key[i] = c.coordinates(g.point(i)).sum();
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
    return order;
}

// Solves F X = G in place for the rows of G (each column a grid function).
void triangular_solve_rows(Mat& G, const Grid& g, const Cone& c) {
    const auto order = triangular_order(g, c);
    std::vector<Vec> pts(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.point(i);
    for (std::size_t a = 0; a < order.size(); ++a) {
        const std::size_t y = order[a];
        for (std::size_t b = 0; b < a; ++b) {
            const std::size_t x = order[b];
            if (cone_contains(c, pts[x] - pts[y]))
                G.row(static_cast<Eigen::Index>(y)) -= G.row(static_cast<Eigen::Index>(x));
        }
    }
}

}  // namespace

double unit_sphere_area(std::size_t dim) {
    const double d = static_cast<double>(dim);
    return 2.0 * std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0);
}

double riesz_normalizer(double alpha, std::size_t dim) {
    const double d = static_cast<double>(dim);
    return std::pow(2.0, alpha) * std::pow(kPi, d / 2.0) * std::tgamma(alpha / 2.0) / std::tgamma((d - alpha) / 2.0);
}

TranslationKernel TranslationKernel::riesz(double alpha, std::size_t dim) {
    if (dim < 2) throw Error(ErrorCode::UnsupportedKernel, "riesz kernel needs d >= 2");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw Error(ErrorCode::UnsupportedKernel, "riesz alpha must lie in (0, 2]");
    if (dim == 2 && alpha == 2.0) throw Error(ErrorCode::UnsupportedKernel, "riesz (d, alpha) = (2, 2) is the log kernel");
    TranslationKernel k;
    k.kind = KernelKind::riesz;
    k.alpha = alpha;
    k.dim = dim;
    k.normalizer = riesz_normalizer(alpha, dim);
    k.sigma_dminus1 = unit_sphere_area(dim);
    return k;
}

TranslationKernel TranslationKernel::newtonian(std::size_t dim) {
    if (dim < 3) throw Error(ErrorCode::UnsupportedKernel, "newtonian kernel needs d >= 3");
    TranslationKernel k;
    k.kind = KernelKind::newtonian;
    k.alpha = 2.0;
    k.dim = dim;
    k.sigma_dminus1 = unit_sphere_area(dim);
    k.normalizer = -1.0 / ((static_cast<double>(dim) - 2.0) * k.sigma_dminus1);
    return k;
}

TranslationKernel TranslationKernel::log2d() {
    TranslationKernel k;
    k.kind = KernelKind::log2d;
    k.alpha = 2.0;
    k.dim = 2;
    k.sigma_dminus1 = 2.0 * kPi;
    k.normalizer = 1.0 / (2.0 * kPi);
    return k;
}

double TranslationKernel::value(const Vec& v) const {
    const double r = v.norm();
    const double d = static_cast<double>(dim);
    switch (kind) {
        case KernelKind::riesz:
            return r == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (normalizer * std::pow(r, d - alpha));
        case KernelKind::newtonian:
            return r == 0.0 ? -std::numeric_limits<double>::infinity() : normalizer / std::pow(r, d - 2.0);
        case KernelKind::log2d:
            return r == 0.0 ? -std::numeric_limits<double>::infinity() : normalizer * std::log(r);
    }
    return 0.0;
}

double TranslationKernel::cell_average(const std::vector<double>& h) const {
    if (h.size() != dim) throw Error(ErrorCode::DimensionMismatch, "cell spacing and kernel dimension differ");
    // By symmetry average over the positive orthant box [0, h/2]^d. Split it
    // into d pyramids by the axis reaching the face, u = a (r t) with t_k = 1,
    // so dividing by the box volume leaves r^{d-1} dr dt; r = s^2 removes the
    // remaining power singularity at the corner.
    using Rule = boost::math::quadrature::gauss<double, 30>;
    const auto di = static_cast<Eigen::Index>(dim);
    Vec a(di), t(di), u(di);
    for (std::size_t i = 0; i < dim; ++i) a[static_cast<Eigen::Index>(i)] = 0.5 * h[i];
    double total = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        std::function<double(std::size_t)> over_t = [&](std::size_t axis) -> double {
            if (axis == dim) {
                return Rule::integrate(
                    [&](double s) {
                        const double r = s * s;
                        u = r * a.cwiseProduct(t);
                        return value(u) * std::pow(r, static_cast<double>(dim) - 1.0) * 2.0 * s;
                    },
                    0.0, 1.0);
            }
            if (axis == k) {
                t[static_cast<Eigen::Index>(axis)] = 1.0;
                return over_t(axis + 1);
            }
            return Rule::integrate(
                [&](double ti) {
                    t[static_cast<Eigen::Index>(axis)] = ti;
                    return over_t(axis + 1);
                },
                0.0, 1.0);
        };
        total += over_t(0);
    }
    return total;
}

GridFunction forward_F(const GridMeasure& q, const Grid& g, const Cone& c) {
    check_size(q.weights.size(), g, "measure");
    if (g.dim() != c.dim()) throw Error(ErrorCode::DimensionMismatch, "grid and cone dimension differ");
    GridFunction out;
    out.values = q.weights;
    if (c.is_pareto()) {
        // Suffix sums along each axis; descending flat order visits idx + stride first.
        for (std::size_t axis = 0; axis < g.dim(); ++axis) {
            const std::size_t s = g.strides()[axis], n = g.counts()[axis];
            for (std::size_t idx = g.size(); idx-- > 0;)
                if ((idx / s) % n + 1 < n) out.values[idx] += out.values[idx + s];
        }
        return out;
    }
    std::vector<Vec> pts(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.point(i);
    for (std::size_t y = 0; y < g.size(); ++y) {
        double acc = 0.0;
        for (std::size_t x = 0; x < g.size(); ++x)
            if (q.weights[x] != 0.0 && cone_contains(c, pts[x] - pts[y])) acc += q.weights[x];
        out.values[y] = acc;
    }
    return out;
}

GridMeasure inverse_F_pareto(const GridFunction& g, const Grid& grid) {
    check_size(g.values.size(), grid, "function");
    GridMeasure q;
    q.weights = g.values;
    for (std::size_t axis = 0; axis < grid.dim(); ++axis) {
        const std::size_t s = grid.strides()[axis], n = grid.counts()[axis];
        for (std::size_t idx = 0; idx < grid.size(); ++idx)
            if ((idx / s) % n + 1 < n) q.weights[idx] -= q.weights[idx + s];
    }
    return q;
}

std::vector<std::vector<long>> cone_lattice_steps(const Grid& grid, const Cone& c) {
    if (grid.dim() != c.dim()) throw Error(ErrorCode::DimensionMismatch, "grid and cone dimension differ");
    const std::size_t d = grid.dim();
    std::vector<std::vector<long>> steps(d, std::vector<long>(d, 0));
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> v(d);
        double smallest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d; ++i) {
            v[i] = c.basis()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / grid.spacing()[i];
            if (v[i] != 0.0) smallest = std::min(smallest, std::abs(v[i]));
        }
        bool found = false;
        for (long m = 1; m <= 64 && !found; ++m) {
            bool integral = true;
            std::vector<long> w(d);
            for (std::size_t i = 0; i < d; ++i) {
                const double t = v[i] / smallest * static_cast<double>(m);
                w[i] = std::lround(t);
                if (std::abs(t - static_cast<double>(w[i])) > 1e-9 * std::max(1.0, std::abs(t))) integral = false;
            }
            if (!integral) continue;
            long gcd = 0;
            for (long x : w) gcd = std::gcd(gcd, std::labs(x));
            for (std::size_t i = 0; i < d; ++i) steps[j][i] = w[i] / gcd;
            found = true;
        }
        if (!found)
            throw Error(ErrorCode::NonLatticeCone, "cone generator " + std::to_string(j) + " is not a lattice direction");
    }
    return steps;
}

GridMeasure inverse_F_cone(const GridFunction& g, const Grid& grid, const Cone& c) {
    check_size(g.values.size(), grid, "function");
    if (c.is_pareto()) return inverse_F_pareto(g, grid);
    const auto steps = cone_lattice_steps(grid, c);
    const std::size_t d = grid.dim();
    Mat s(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < d; ++i)
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(steps[j][i]);
    const double det = std::abs(s.determinant());
    std::vector<double> v = g.values;
    for (const auto& step : steps) forward_difference(v, grid, step);
    const double sign = d % 2 == 0 ? 1.0 : -1.0;
    for (double& x : v) x *= sign / det;
    GridMeasure q;
    q.weights = std::move(v);
    return q;
}

GridMeasure inverse_F_exact(const GridFunction& g, const Grid& grid, const Cone& c) {
    check_size(g.values.size(), grid, "function");
    if (c.is_pareto()) return inverse_F_pareto(g, grid);
    Mat col = Eigen::Map<const Vec>(g.values.data(), static_cast<Eigen::Index>(g.values.size()));
    triangular_solve_rows(col, grid, c);
    GridMeasure q;
    q.weights.assign(col.data(), col.data() + col.size());
    return q;
}

GridFunction potential_F(const GridMeasure& q, const Grid& grid, const TranslationKernel& k, bool cell_average) {
    check_size(q.weights.size(), grid, "measure");
    if (grid.dim() != k.dim) throw Error(ErrorCode::DimensionMismatch, "grid and kernel dimension differ");
    double diag = 0.0;
    bool diag_needed = false;
    for (double w : q.weights) diag_needed = diag_needed || w != 0.0;
    if (diag_needed) {
        if (!cell_average)
            throw Error(ErrorCode::SingularityUnhandled, "point mass on an evaluation point with cell averaging disabled");
        diag = k.cell_average(grid.spacing());
    }
    std::vector<Vec> pts(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) pts[i] = grid.point(i);
    GridFunction out;
    out.values.assign(grid.size(), 0.0);
    for (std::size_t y = 0; y < grid.size(); ++y) {
        double acc = 0.0;
        for (std::size_t x = 0; x < grid.size(); ++x) {
            if (q.weights[x] == 0.0) continue;
            acc += (x == y ? diag : k.value(pts[y] - pts[x])) * q.weights[x];
        }
        out.values[y] = acc;
    }
    return out;
}

Mat forward_F_matrix(const Grid& grid, const Cone& c) {
    return duality_indicator_matrix(grid, c).transpose();
}

Mat inverse_F_matrix(const Grid& grid, const Cone& c) {
    if (grid.dim() != c.dim()) throw Error(ErrorCode::DimensionMismatch, "grid and cone dimension differ");
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (c.is_pareto()) {
        Mat out(n, n);
        GridFunction e;
        for (Eigen::Index k = 0; k < n; ++k) {
            e.values.assign(grid.size(), 0.0);
            e.values[static_cast<std::size_t>(k)] = 1.0;
            const auto col = inverse_F_pareto(e, grid);
            out.col(k) = Eigen::Map<const Vec>(col.weights.data(), n);
        }
        return out;
    }
    Mat out = Mat::Identity(n, n);
    triangular_solve_rows(out, grid, c);
    return out;
}

}  // namespace dualgen

#include "dualgen/state_space.hpp"

#include <cmath>
#include <numeric>

namespace dualgen {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonCommensurate: return "NonCommensurate";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::SingularBasis: return "SingularBasis";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonLatticeCone: return "NonLatticeCone";
        case ErrorCode::SingularityUnhandled: return "SingularityUnhandled";
        case ErrorCode::PositivityViolation: return "PositivityViolation";
        case ErrorCode::Overflow: return "Overflow";
        case ErrorCode::NotSeparable: return "NotSeparable";
        case ErrorCode::StructureViolation: return "StructureViolation";
        case ErrorCode::PSDViolation: return "PSDViolation";
        case ErrorCode::TailConditionFail: return "TailConditionFail";
        case ErrorCode::MonotonicityFail: return "MonotonicityFail";
        case ErrorCode::CompensatorDivergent: return "CompensatorDivergent";
        case ErrorCode::SignConditionFail: return "SignConditionFail";
        case ErrorCode::MissingDerivative: return "MissingDerivative";
        case ErrorCode::AssumptionAViolation: return "AssumptionAViolation";
        case ErrorCode::RateBoundExceeded: return "RateBoundExceeded";
        case ErrorCode::InadmissibleDual: return "InadmissibleDual";
        case ErrorCode::NonConvergent: return "NonConvergent";
        case ErrorCode::UnsupportedKernel: return "UnsupportedKernel";
        case ErrorCode::TooManyStates: return "TooManyStates";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::ExpressionParseError: return "ExpressionParseError";
    }
    return "Unknown";
}

Grid build_grid(const std::vector<double>& lower, const std::vector<double>& upper,
                const std::vector<double>& spacing, const std::vector<AxisBoundary>& boundary) {
    const std::size_t d = lower.size();
    if (d == 0 || upper.size() != d || spacing.size() != d)
        throw Error(ErrorCode::DimensionMismatch, "lower/upper/spacing must have equal nonzero length");
    if (!boundary.empty() && boundary.size() != d)
        throw Error(ErrorCode::DimensionMismatch, "boundary policy needs one entry per axis");

    Grid g;
    g.lower_ = lower;
    g.upper_ = upper;
    g.spacing_ = spacing;
    g.boundary_ = boundary.empty() ? std::vector<AxisBoundary>(d) : boundary;
    g.counts_.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i]))
            throw Error(ErrorCode::InvalidArgument, "spacing must be positive on axis " + std::to_string(i));
        const double span = upper[i] - lower[i];
        if (!(span > 0.0))
            throw Error(ErrorCode::EmptyGrid, "upper must exceed lower on axis " + std::to_string(i));
        const double ratio = span / spacing[i];
        const double k = std::round(ratio);
        if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
            throw Error(ErrorCode::NonCommensurate,
                        "spacing does not divide the interval on axis " + std::to_string(i));
        if (k < 1.0) throw Error(ErrorCode::EmptyGrid, "axis " + std::to_string(i) + " has fewer than 2 points");
        g.counts_[i] = static_cast<std::size_t>(k) + 1;
    }
    g.strides_.assign(d, 1);
    for (std::size_t i = d - 1; i-- > 0;) g.strides_[i] = g.strides_[i + 1] * g.counts_[i + 1];
    g.size_ = g.strides_[0] * g.counts_[0];
    return g;
}

Vec Grid::point(std::size_t index) const {
    Vec x(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        const std::size_t k = (index / strides_[i]) % counts_[i];
        x[static_cast<Eigen::Index>(i)] = lower_[i] + static_cast<double>(k) * spacing_[i];
    }
    return x;
}

std::vector<std::size_t> Grid::multi_index(std::size_t index) const {
    std::vector<std::size_t> m(dim());
    for (std::size_t i = 0; i < dim(); ++i) m[i] = (index / strides_[i]) % counts_[i];
    return m;
}

std::size_t Grid::flat_index(const std::vector<std::size_t>& multi) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dim(); ++i) idx += multi[i] * strides_[i];
    return idx;
}

long Grid::shifted(std::size_t index, const std::vector<long>& steps) const {
    long idx = 0;
    for (std::size_t i = 0; i < dim(); ++i) {
        const long k = static_cast<long>((index / strides_[i]) % counts_[i]) + steps[i];
        if (k < 0 || k >= static_cast<long>(counts_[i])) return -1;
        idx += k * static_cast<long>(strides_[i]);
    }
    return idx;
}

std::vector<long> Grid::lattice_coords(const Vec& x) const {
    std::vector<long> c(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        c[i] = std::lround((x[static_cast<Eigen::Index>(i)] - lower_[i]) / spacing_[i]);
    return c;
}

bool Grid::lattice_inside(const std::vector<long>& coords) const {
    for (std::size_t i = 0; i < dim(); ++i)
        if (coords[i] < 0 || coords[i] >= static_cast<long>(counts_[i])) return false;
    return true;
}

bool Grid::contains(const Vec& x, double tol) const {
    if (static_cast<std::size_t>(x.size()) != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        const double v = x[static_cast<Eigen::Index>(i)];
        const double slack = tol * std::max(1.0, std::abs(upper_[i] - lower_[i]));
        if (v < lower_[i] - slack || v > upper_[i] + slack) return false;
    }
    return true;
}

std::size_t Grid::edge_distance(std::size_t index) const {
    std::size_t best = counts_[0];
    for (std::size_t i = 0; i < dim(); ++i) {
        const std::size_t k = (index / strides_[i]) % counts_[i];
        best = std::min({best, k, counts_[i] - 1 - k});
    }
    return best;
}

double Grid::cell_volume() const {
    return std::accumulate(spacing_.begin(), spacing_.end(), 1.0, std::multiplies<>());
}

Cone::Cone(Mat basis) : basis_(std::move(basis)) {
    if (basis_.rows() != basis_.cols() || basis_.rows() == 0)
        throw Error(ErrorCode::DimensionMismatch, "cone basis must be a nonempty square matrix");
    Eigen::FullPivLU<Mat> lu(basis_);
    const double det = basis_.determinant();
    const double scale = std::pow(basis_.cwiseAbs().maxCoeff(), static_cast<double>(basis_.rows()));
    if (!lu.isInvertible() || std::abs(det) <= 1e-14 * std::max(scale, 1e-300))
        throw Error(ErrorCode::SingularBasis, "cone generators are linearly dependent");
    inverse_ = lu.inverse();
    det_abs_ = std::abs(det);
    pareto_ = basis_ == Mat::Identity(basis_.rows(), basis_.cols());
}

Cone Cone::pareto(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return Cone(Mat::Identity(n, n));
}

Cone Cone::light_cone_2d() {
    Mat b(2, 2);
    b << 1.0, -1.0,
         1.0, 1.0;
    return Cone(b);
}

Vec Cone::coordinates(const Vec& v) const {
    if (v.size() != basis_.rows()) throw Error(ErrorCode::DimensionMismatch, "vector and cone dimension differ");
    return inverse_ * v;
}

bool cone_contains(const Cone& c, const Vec& v) {
    const Vec alpha = c.coordinates(v);
    const double tol = 1e-12 * v.norm();
    return (alpha.array() >= -tol).all();
}

Mat duality_indicator_matrix(const Grid& g, const Cone& c) {
    if (g.dim() != c.dim()) throw Error(ErrorCode::DimensionMismatch, "grid and cone dimension differ");
    const auto n = static_cast<Eigen::Index>(g.size());
    std::vector<Vec> pts(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.point(i);
    Mat f = Mat::Zero(n, n);
    for (Eigen::Index x = 0; x < n; ++x)
        for (Eigen::Index y = 0; y < n; ++y)
            if (cone_contains(c, pts[static_cast<std::size_t>(x)] - pts[static_cast<std::size_t>(y)])) f(x, y) = 1.0;
    return f;
}

void GridMeasure::validate() const {
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "non-finite measure weight");
        if (is_probability && w < 0.0) throw Error(ErrorCode::InvalidArgument, "negative weight in probability measure");
        total += w;
    }
    if (is_probability && std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidArgument, "probability weights sum to " + std::to_string(total));
}

void GridFunction::validate() const {
    for (double v : values)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite grid function value");
}

}  // namespace dualgen

#include "dualgen/matrix_lab.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "dualgen/error.hpp"
#include "dualgen/order_transform.hpp"

namespace dualgen {

namespace {

double inf_norm(const Mat& m) { return m.rows() ? m.cwiseAbs().rowwise().sum().maxCoeff() : 0.0; }

}  // namespace

SemigroupSnapshot semigroup(const QMatrix& q, double t) {
    if (t < 0.0 || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "t must be finite and >= 0");
    if (q.n() > kMaxStates)
        throw Error(ErrorCode::TooManyStates, std::to_string(q.n()) + " states exceed " + std::to_string(kMaxStates));
    const double norm = t * inf_norm(q.entries);
    if (norm > 1e8)
        throw Error(ErrorCode::Overflow, "||tQ|| = " + std::to_string(norm) + "; use a smaller t or a coarser grid");
    SemigroupSnapshot s;
    s.t = t;
    s.source_q = std::make_shared<const QMatrix>(q);
    if (t == 0.0) {
        s.T = Mat::Identity(q.entries.rows(), q.entries.cols());
        return s;
    }
    s.T = (t * q.entries).exp();
    if (!s.T.allFinite()) throw Error(ErrorCode::Overflow, "matrix exponential is not finite");
    const Mat half = (0.5 * t * q.entries).exp();
    s.self_check = inf_norm(s.T - half * half);
    if (s.self_check > 1e-10)
        throw Error(ErrorCode::NonConvergent, "exp(tQ) self-check residual " + std::to_string(s.self_check));
    return s;
}

Mat dual_generator_via_F(const Mat& q, const Grid& grid, const Cone& cone) {
    if (static_cast<std::size_t>(q.rows()) != grid.size()) throw Error(ErrorCode::DimensionMismatch, "Q and grid size");
    return forward_F_matrix(grid, cone) * q.transpose() * inverse_F_matrix(grid, cone);
}

SemigroupSnapshot dual_semigroup_via_F(const QMatrix& q, const Grid& grid, const Cone& cone, double t) {
    SemigroupSnapshot s = semigroup(q, t);
    s.T = dual_generator_via_F(s.T, grid, cone);
    return s;
}

double duality_residual(const Mat& T, const Mat& TD, const Mat& f) {
    if (T.rows() != f.rows() || TD.rows() != f.cols() || T.cols() != f.rows() || TD.cols() != f.cols())
        throw Error(ErrorCode::DimensionMismatch, "semigroup and pairing sizes");
    // (T f)(x, y) against (f TD^T)(x, y)
    return (T * f - f * TD.transpose()).cwiseAbs().maxCoeff();
}

double duality_residual(const SemigroupSnapshot& T, const SemigroupSnapshot& TD, const Mat& f) {
    return duality_residual(T.T, TD.T, f);
}

ValidationReport dual_stochasticity_check(const Mat& TD, bool conservative_expected) {
    ValidationReport rep;
    rep.min_offdiag = TD.size() ? TD.minCoeff() : 0.0;
    for (Eigen::Index i = 0; i < TD.rows(); ++i) {
        for (Eigen::Index j = 0; j < TD.cols(); ++j) {
            if (TD(i, j) < -1e-10) {
                rep.pass = false;
                rep.violations.push_back({"negative_entry", static_cast<std::size_t>(i), static_cast<std::size_t>(j), TD(i, j)});
            }
        }
        const double s = TD.row(i).sum();
        rep.row_sums.push_back(s);
        const double defect = conservative_expected ? std::abs(s - 1.0) : std::max(0.0, s - 1.0);
        rep.max_rowsum_defect = std::max(rep.max_rowsum_defect, defect);
        if (defect > 1e-9) {
            rep.pass = false;
            rep.violations.push_back({"row_sum", static_cast<std::size_t>(i), static_cast<std::size_t>(i), s});
        }
    }
    std::stable_sort(rep.violations.begin(), rep.violations.end(),
                     [](const Violation& a, const Violation& b) { return a.value < b.value; });
    return rep;
}

ValidationReport dual_stochasticity_check(const SemigroupSnapshot& TD, bool conservative_expected) {
    return dual_stochasticity_check(TD.T, conservative_expected);
}

bool stochastically_monotone(const Mat& T, double tol) {
    const Eigen::Index n = T.rows();
    for (Eigen::Index y = 0; y < n; ++y) {
        double prev = -1.0;
        for (Eigen::Index x = 0; x < n; ++x) {
            const double tail = T.row(x).tail(n - y).sum();
            if (tail < prev - tol) return false;
            prev = tail;
        }
    }
    return true;
}

OracleComparison compare_with_oracle(const Mat& q_dual, const Mat& q_source, const Grid& grid, const Cone& cone,
                                     std::size_t margin) {
    const Mat o = dual_generator_via_F(q_source, grid, cone);
    OracleComparison c;
    c.q_norm = inf_norm(q_source);
    for (std::size_t y = 0; y < grid.size(); ++y) {
        if (grid.edge_distance(y) < margin) continue;
        for (std::size_t w = 0; w < grid.size(); ++w) {
            const double d = std::abs(q_dual(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(w)) -
                                      o(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(w)));
            if (d > c.max_abs) c.max_abs = d, c.row = y, c.col = w;
        }
    }
    return c;
}

}  // namespace dualgen

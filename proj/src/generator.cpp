#include "dualgen/generator.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace dualgen {

namespace {

using Coords = std::vector<long>;

// Applies the per-axis boundary policy to lattice coordinates. Returns -1
// when the mass is dropped.
long resolve(const Grid& g, Coords c) {
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const long n = static_cast<long>(g.counts()[i]);
        for (int guard = 0; guard < 8 && (c[i] < 0 || c[i] >= n); ++guard) {
            const bool low = c[i] < 0;
            const BoundaryPolicy p = low ? g.boundary()[i].lower : g.boundary()[i].upper;
            if (p == BoundaryPolicy::truncate_mass) return -1;
            if (p == BoundaryPolicy::absorb) c[i] = low ? 0 : n - 1;
            else c[i] = low ? -c[i] : 2 * (n - 1) - c[i];
        }
        if (c[i] < 0 || c[i] >= n) return -1;
    }
    long idx = 0;
    for (std::size_t i = 0; i < g.dim(); ++i) idx += c[i] * static_cast<long>(g.strides()[i]);
    return idx;
}

Coords coords_of(const Grid& g, std::size_t index) {
    Coords c(g.dim());
    const auto m = g.multi_index(index);
    for (std::size_t i = 0; i < g.dim(); ++i) c[i] = static_cast<long>(m[i]);
    return c;
}

// Lattice point whose centred cell [x - h/2, x + h/2) holds t.
Coords cell_of(const Grid& g, const Vec& t) {
    Coords c(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i)
        c[i] = static_cast<long>(std::floor((t[static_cast<Eigen::Index>(i)] - g.lower()[i]) / g.spacing()[i] + 0.5 + 1e-9));
    return c;
}

void add_leg(Mat& q, const Grid& g, std::size_t from, const Coords& to, double rate) {
    if (rate == 0.0) return;
    const long j = resolve(g, to);
    if (j < 0 || static_cast<std::size_t>(j) == from) return;
    const auto r = static_cast<Eigen::Index>(from);
    q(r, j) += rate;
    q(r, r) -= rate;
}

bool on_absorbing_edge(const Grid& g, std::size_t index) {
    const auto m = g.multi_index(index);
    for (std::size_t i = 0; i < g.dim(); ++i) {
        if (m[i] == 0 && g.boundary()[i].lower == BoundaryPolicy::absorb) return true;
        if (m[i] + 1 == g.counts()[i] && g.boundary()[i].upper == BoundaryPolicy::absorb) return true;
    }
    return false;
}

Vec target_of(const JumpAtom& a, const Vec& z, bool fold) {
    Vec t = a.reset ? a.target : Vec(z + a.displacement);
    if (fold) t[0] = std::abs(t[0]);
    return t;
}

// Calls fn(cell coords, cell centre, mass) for every cell charged by the
// analytic kernel from z.
template <class Fn>
void for_each_cell_mass(const JumpKernel& k, const Grid& g, const Vec& z, Fn&& fn) {
    const std::size_t d = g.dim();
    std::vector<long> lo(d), hi(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double h = g.spacing()[i];
        const double zi = (z[static_cast<Eigen::Index>(i)] - g.lower()[i]) / h;
        const long n = static_cast<long>(g.counts()[i]);
        if (k.support_radius > 0.0) {
            const long r = static_cast<long>(std::ceil(k.support_radius / h)) + 1;
            lo[i] = std::lround(zi) - r;
            hi[i] = std::lround(zi) + r;
        } else {
            lo[i] = 0;
            hi[i] = n - 1;
        }
    }
    const double vol = g.cell_volume();
    Coords c = lo;
    Vec centre(static_cast<Eigen::Index>(d)), corner(static_cast<Eigen::Index>(d));
    for (;;) {
        for (std::size_t i = 0; i < d; ++i)
            centre[static_cast<Eigen::Index>(i)] = g.lower()[i] + static_cast<double>(c[i]) * g.spacing()[i];
        double mass = 0.0;
        if (k.tail) {
            // Inclusion-exclusion of the orthant tail over the 2^d cell corners.
            for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
                int parity = 0;
                for (std::size_t i = 0; i < d; ++i) {
                    const bool up = (mask >> i) & 1U;
                    parity += up;
                    corner[static_cast<Eigen::Index>(i)] =
                        centre[static_cast<Eigen::Index>(i)] + (up ? 0.5 : -0.5) * g.spacing()[i];
                }
                mass += (parity % 2 ? -1.0 : 1.0) * k.tail(z, corner);
            }
        } else {
            mass = k.density(z, centre) * vol;
        }
        if (mass < -1e-12) throw Error(ErrorCode::PositivityViolation, "negative jump cell mass");
        if (mass > 0.0) fn(c, centre, mass);
        std::size_t i = d;
        while (i-- > 0) {
            if (++c[i] <= hi[i]) break;
            c[i] = lo[i];
            if (i == 0) return;
        }
    }
}

std::string fmt_point(const Vec& x) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

}  // namespace

double JumpKernel::total(const Vec& z) const {
    switch (family) {
        case JumpFamily::atomic:
        case JumpFamily::separable: {
            double s = 0.0;
            for (const auto& a : atoms) s += std::max(0.0, a.rate_at(z));
            return s;
        }
        case JumpFamily::analytic:
            if (total_rate) return total_rate(z);
            return 0.0;
        case JumpFamily::cumulative:
            return 0.0;
    }
    return 0.0;
}

double ProcessSpec::drift_at(std::size_t i, const Vec& x) const { return drift ? (*drift)[i](x) : 0.0; }

double ProcessSpec::diffusion_at(std::size_t i, std::size_t j, const Vec& x) const {
    return diffusion ? (*diffusion)[i][j](x) : 0.0;
}

Mat ProcessSpec::diffusion_matrix(const Vec& x) const {
    const auto d = static_cast<Eigen::Index>(dim);
    Mat a = Mat::Zero(d, d);
    if (!diffusion) return a;
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*diffusion)[i][j](x);
    return a;
}

std::vector<Vec> probe_points(const std::vector<double>& lower, const std::vector<double>& upper, std::size_t count) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    const std::size_t d = lower.size();
    std::vector<Vec> pts;
    pts.reserve(count);
    for (std::size_t k = 1; k <= count; ++k) {
        Vec p(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) {
            const int b = primes[i % 8];
            double f = 1.0, r = 0.0;
            for (std::size_t n = k; n > 0; n /= static_cast<std::size_t>(b)) {
                f /= b;
                r += f * static_cast<double>(n % static_cast<std::size_t>(b));
            }
            p[static_cast<Eigen::Index>(i)] = lower[i] + r * (upper[i] - lower[i]);
        }
        pts.push_back(p);
    }
    return pts;
}

void ProcessSpec::validate(const std::vector<double>& lower, const std::vector<double>& upper,
                           std::size_t probes) const {
    if (!drift && !diffusion && !jump && !stable)
        throw Error(ErrorCode::InvalidArgument, "process needs at least one of drift, diffusion, jump, stable");
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
    if (drift && drift->size() != dim) throw Error(ErrorCode::DimensionMismatch, "drift length differs from dim");
    if (diffusion) {
        if (diffusion->size() != dim) throw Error(ErrorCode::DimensionMismatch, "diffusion rows differ from dim");
        for (const auto& row : *diffusion)
            if (row.size() != dim) throw Error(ErrorCode::DimensionMismatch, "diffusion is not square");
    }
    if (domain == Domain::half_line && dim != 1)
        throw Error(ErrorCode::DimensionMismatch, "half_line domain is one-dimensional");
    if (lower.size() != dim || upper.size() != dim) throw Error(ErrorCode::DimensionMismatch, "probe box dimension");
    if (!diffusion) return;
    for (const Vec& x : probe_points(lower, upper, probes)) {
        const Mat a = diffusion_matrix(x);
        if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error(ErrorCode::PSDViolation, "diffusion not symmetric at " + fmt_point(x));
        Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw Error(ErrorCode::PSDViolation, "diffusion eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) +
                                                     " at " + fmt_point(x));
    }
}

Grid effective_grid(const ProcessSpec& spec, const Grid& g) {
    if (spec.domain != Domain::half_line || spec.boundary == HalfLineBoundary::none) return g;
    auto b = g.boundary();
    b[0].lower = spec.boundary == HalfLineBoundary::reflect ? BoundaryPolicy::reflect : BoundaryPolicy::absorb;
    return build_grid(g.lower(), g.upper(), g.spacing(), b);
}

Mat discretize_jumps(const JumpKernel& k, const ProcessSpec& spec, const Grid& g_in) {
    const Grid g = effective_grid(spec, g_in);
    const auto n = static_cast<Eigen::Index>(g.size());
    Mat q = Mat::Zero(n, n);
    const std::size_t d = g.dim();
    std::vector<Vec> pts(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.point(i);

    switch (k.family) {
        case JumpFamily::atomic:
        case JumpFamily::separable:
            for (std::size_t z = 0; z < g.size(); ++z) {
                for (const auto& a : k.atoms) {
                    const double r = a.rate_at(pts[z]);
                    if (r < -1e-12)
                        throw Error(ErrorCode::PositivityViolation, "negative jump rate at " + fmt_point(pts[z]));
                    if (r <= 0.0) continue;
                    add_leg(q, g, z, cell_of(g, target_of(a, pts[z], k.fold)), r);
                }
            }
            break;
        case JumpFamily::analytic:
            if (!k.density && !k.tail) throw Error(ErrorCode::InvalidArgument, "analytic kernel needs density or tail");
            for (std::size_t z = 0; z < g.size(); ++z) {
                for_each_cell_mass(k, g, pts[z], [&](const Coords& c, const Vec& centre, double mass) {
                    if (k.fold) {
                        Vec t = centre;
                        t[0] = std::abs(t[0]);
                        add_leg(q, g, z, cell_of(g, t), mass);
                    } else {
                        add_leg(q, g, z, c, mass);
                    }
                });
            }
            break;
        case JumpFamily::cumulative: {
            if (!k.cumulative) throw Error(ErrorCode::InvalidArgument, "cumulative kernel without P(y, z)");
            // Rates out of y: mixed backward differences of P(y, .) at w.
            for (std::size_t y = 0; y < g.size(); ++y) {
                for (std::size_t w = 0; w < g.size(); ++w) {
                    double acc = 0.0;
                    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
                        std::vector<long> step(d, 0);
                        int parity = 0;
                        for (std::size_t i = 0; i < d; ++i)
                            if ((mask >> i) & 1U) step[i] = -1, ++parity;
                        const long u = g.shifted(w, step);
                        if (u < 0) continue;
                        acc += (parity % 2 ? -1.0 : 1.0) * k.cumulative(pts[y], pts[static_cast<std::size_t>(u)]);
                    }
                    q(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(w)) = acc;
                }
            }
            break;
        }
    }
    return q;
}

Vec compensator_drift(const JumpKernel& k, const ProcessSpec& spec, const Grid& g_in, std::size_t z_index) {
    const Grid g = effective_grid(spec, g_in);
    const Vec z = g.point(z_index);
    const double c = spec.compensator_cutoff;
    Vec out = Vec::Zero(static_cast<Eigen::Index>(g.dim()));
    if (!k.compensated && !(k.family == JumpFamily::cumulative && k.drift_correction)) return out;
    switch (k.family) {
        case JumpFamily::atomic:
        case JumpFamily::separable:
            for (const auto& a : k.atoms) {
                const Vec dz = target_of(a, z, false) - z;
                if (dz.norm() <= c) out -= a.rate_at(z) * dz;
            }
            break;
        case JumpFamily::analytic:
            for_each_cell_mass(k, g, z, [&](const Coords&, const Vec& centre, double mass) {
                const Vec dz = centre - z;
                if (dz.norm() <= c) out -= mass * dz;
            });
            break;
        case JumpFamily::cumulative:
            if (k.drift_correction) out = k.drift_correction(z);
            break;
    }
    return out;
}

QMatrix discretize(const ProcessSpec& spec, const Grid& g_in, const DiscretizeOptions& opt) {
    if (g_in.dim() != spec.dim) throw Error(ErrorCode::DimensionMismatch, "grid and process dimension differ");
    const Grid g = effective_grid(spec, g_in);
    const std::size_t d = g.dim();
    const auto n = static_cast<Eigen::Index>(g.size());
    QMatrix out;
    out.grid = g;
    out.entries = Mat::Zero(n, n);
    Mat& q = out.entries;
    const auto& h = g.spacing();
    bool cfl_warned = false, clip_warned = false;

    for (std::size_t x = 0; x < g.size(); ++x) {
        const Vec p = g.point(x);
        const Coords c0 = coords_of(g, x);
        Vec b = Vec::Zero(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) b[static_cast<Eigen::Index>(i)] = spec.drift_at(i, p);
        if (spec.jump) b += compensator_drift(*spec.jump, spec, g, x);
        const Mat a = spec.diffusion_matrix(p);

        // Cross-term scale keeping a_ii/h_i >= sum_j |a_ij|/h_j on every axis.
        double scale = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            double off = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                if (j != i) off += std::abs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) / h[j];
            const double diag = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) / h[i];
            if (off > diag * (1.0 + 1e-12)) scale = std::min(scale, off > 0.0 ? std::max(diag, 0.0) / off : 1.0);
        }
        if (scale < 1.0) {
            if (!opt.clip_cross)
                throw Error(ErrorCode::PositivityViolation,
                            "cross diffusion exceeds the positive stencil bound at " + fmt_point(p));
            if (!clip_warned) out.warnings.push_back("cross diffusion clipped starting at " + fmt_point(p));
            clip_warned = true;
        }

        for (std::size_t i = 0; i < d; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double bi = b[ii];
            if (opt.warn_cfl && !cfl_warned && a(ii, ii) / (h[i] * h[i]) < std::abs(bi) / h[i]) {
                out.warnings.push_back("CFLWarning: |b|/h exceeds a/h^2 at " + fmt_point(p));
                cfl_warned = true;
            }
            double cross = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                if (j != i) cross += scale * std::abs(a(ii, static_cast<Eigen::Index>(j))) / (h[i] * h[j]);
            const double axis_rate = a(ii, ii) / (h[i] * h[i]) - cross;
            Coords up = c0, dn = c0;
            ++up[i];
            --dn[i];
            add_leg(q, g, x, up, axis_rate + std::max(bi, 0.0) / h[i]);
            add_leg(q, g, x, dn, axis_rate + std::max(-bi, 0.0) / h[i]);
            for (std::size_t j = i + 1; j < d; ++j) {
                const double aij = scale * a(ii, static_cast<Eigen::Index>(j));
                if (aij == 0.0) continue;
                const double r = std::abs(aij) / (h[i] * h[j]);
                const long sj = aij > 0.0 ? 1 : -1;
                Coords pp = c0, mm = c0;
                pp[i] += 1;
                pp[j] += sj;
                mm[i] -= 1;
                mm[j] -= sj;
                add_leg(q, g, x, pp, r);
                add_leg(q, g, x, mm, r);
            }
        }
    }
    if (spec.jump) q += discretize_jumps(*spec.jump, spec, g);
    for (std::size_t x = 0; x < g.size(); ++x)
        if (on_absorbing_edge(g, x)) q.row(static_cast<Eigen::Index>(x)).setZero();
    const double tol = 1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff());
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            if (r != c && q(r, c) < -tol)
                throw Error(ErrorCode::PositivityViolation, "negative off-diagonal rate " + std::to_string(q(r, c)) +
                                                                " at row " + std::to_string(r) + ", column " +
                                                                std::to_string(c));
    return out;
}

QMatrix adjoint(const QMatrix& q) {
    QMatrix out = q;
    out.entries = q.entries.transpose();
    return out;
}

ValidationReport validate_matrix(const Mat& m, bool conservative) {
    ValidationReport rep;
    const Eigen::Index n = m.rows();
    rep.min_offdiag = n > 1 ? std::numeric_limits<double>::infinity() : 0.0;
    rep.row_sums.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) {
            s += m(r, c);
            if (r == c) continue;
            rep.min_offdiag = std::min(rep.min_offdiag, m(r, c));
            if (m(r, c) < -1e-12)
                rep.violations.push_back({"negative_offdiagonal", static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c)});
        }
        rep.row_sums[static_cast<std::size_t>(r)] = s;
        const double defect = conservative ? std::abs(s) : std::max(s, 0.0);
        rep.max_rowsum_defect = std::max(rep.max_rowsum_defect, defect);
        const double lim = conservative ? 1e-10 : 1e-12;
        if (defect > lim)
            rep.violations.push_back({conservative ? "row_sum_nonzero" : "row_sum_positive", static_cast<std::size_t>(r),
                                      static_cast<std::size_t>(r), s});
    }
    rep.pass = rep.violations.empty();
    return rep;
}

ValidationReport validate_qmatrix(const QMatrix& q, bool conservative) { return validate_matrix(q.entries, conservative); }

}  // namespace dualgen

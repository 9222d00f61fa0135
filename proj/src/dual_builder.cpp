#include "dualgen/dual_builder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "dualgen/error.hpp"

namespace dualgen {

namespace {

constexpr double kIndicatorTol = 1e-9;

bool ge(const Vec& a, const Vec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] < b[i] - kIndicatorTol * (1.0 + std::abs(b[i]))) return false;
    return true;
}

Vec target_of(const JumpAtom& a, const Vec& z, bool fold) {
    Vec t = a.reset ? a.target : Vec(z + a.displacement);
    if (fold) t[0] = std::abs(t[0]);
    return t;
}

Vec vec1(double x) { return Vec::Constant(1, x); }

std::string fmt(const Vec& v) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ')';
    return os.str();
}

std::vector<Vec> grid_points(const Grid& g) {
    std::vector<Vec> pts(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.point(i);
    return pts;
}

void box_or_default(std::size_t d, std::vector<double>& lo, std::vector<double>& hi) {
    if (lo.empty()) lo.assign(d, -1.0);
    if (hi.empty()) hi.assign(d, 1.0);
    if (lo.size() != d || hi.size() != d) throw Error(ErrorCode::DimensionMismatch, "probe box dimension");
}

// Symbolic dependence confirmed by a nonzero derivative at some probe.
std::optional<std::pair<Vec, double>> dependence_evidence(const Expr& e, std::size_t k, const std::vector<Vec>& probes) {
    if (!e.depends_on(k)) return std::nullopt;
    const Expr de = e.derivative(k);
    std::optional<std::pair<Vec, double>> best;
    for (const Vec& p : probes) {
        const double v = de(p);
        if (std::abs(v) > 1e-12 && (!best || std::abs(v) > std::abs(best->second))) best = std::make_pair(p, v);
    }
    return best;
}

void require_separable_drift(const ProcessSpec& spec, const std::vector<Vec>& probes) {
    if (!spec.drift) return;
    for (std::size_t j = 0; j < spec.dim; ++j)
        for (std::size_t k = 0; k < spec.dim; ++k)
            if (k != j && dependence_evidence((*spec.drift)[j], k, probes))
                throw Error(ErrorCode::NotSeparable,
                            "b_" + std::to_string(j + 1) + " depends on x" + std::to_string(k + 1));
}

bool constant_rate(const JumpAtom& a) { return !a.rate_fn && a.rate.is_constant(); }

// Oriented integral of a rate over [a, b] in one dimension.
double integrate_rate(const JumpAtom& at, double a, double b) {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    return Rule::integrate([&](double z) { return std::max(0.0, at.rate_at(vec1(z))); }, a, b);
}

Expr mixed_derivative(const JumpAtom& a, std::size_t mask, std::size_t d) {
    Expr e = a.rate;
    bool first = true;
    for (std::size_t i = 0; i < d; ++i) {
        if (!((mask >> i) & 1U)) continue;
        if (first && i < a.rate_gradient.size()) {
            e = a.rate_gradient[i];
        } else {
            e = e.derivative(i);
        }
        first = false;
    }
    return e;
}

std::string subset_name(std::size_t mask, std::size_t d) {
    std::string s = "{";
    bool first = true;
    for (std::size_t i = 0; i < d; ++i)
        if ((mask >> i) & 1U) s += (first ? "" : ",") + std::to_string(i + 1), first = false;
    return s + "}";
}

}  // namespace

void DualReport::add(std::string id, const Vec& probe, double value) {
    violated_conditions.push_back({std::move(id), probe, value});
}

void DualReport::finish() {
    admissible = violated_conditions.empty();
    if (!admissible) dual_spec.reset();
}

void DualReport::throw_if_inadmissible() const {
    if (violated_conditions.empty()) return;
    const auto& v = violated_conditions.front();
    auto starts = [&](const char* p) { return v.condition_id.rfind(p, 0) == 0; };
    ErrorCode code = ErrorCode::InadmissibleDual;
    if (starts("tail")) code = ErrorCode::TailConditionFail;
    else if (starts("monotonicity")) code = ErrorCode::MonotonicityFail;
    else if (starts("compensator")) code = ErrorCode::CompensatorDivergent;
    else if (starts("sign_condition")) code = ErrorCode::SignConditionFail;
    else if (starts("structure")) code = ErrorCode::StructureViolation;
    else if (starts("assumption_A")) code = ErrorCode::AssumptionAViolation;
    throw Error(code, v.condition_id + " at " + fmt(v.probe) + ", value " + std::to_string(v.value));
}

double MonotoneRateFunction::operator()(double z) const {
    if (value) return value(z);
    double s = 0.0;
    for (const auto& [loc, jump] : atoms)
        if (z >= loc) s += jump;
    if (density) {
        using Rule = boost::math::quadrature::gauss<double, 20>;
        // density contributions are measured from the leftmost atom or 0
        const double from = atoms.empty() ? 0.0 : std::min(0.0, atoms.front().first);
        s += Rule::integrate(density, from, z);
    }
    return s;
}

std::optional<double> MonotoneRateFunction::first_decrease(double lo, double hi, std::size_t pairs, double tol) const {
    for (const auto& [loc, jump] : atoms)
        if (loc >= lo && loc <= hi && jump < -tol) return loc;
    const double step = (hi - lo) / static_cast<double>(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        const double a = lo + step * static_cast<double>(k), b = a + step;
        const double m = 0.5 * (a + b);
        if (derivative && derivative(m) < -tol) return m;
        if (density && density(m) < -tol) return m;
        if (value && value(b) < value(a) - tol) return a;
    }
    return std::nullopt;
}

DualReport dual_drift(const ProcessSpec& spec) {
    if (!spec.drift) throw Error(ErrorCode::InvalidArgument, "dual_drift needs a drift");
    if (spec.diffusion || spec.jump || spec.stable)
        throw Error(ErrorCode::InvalidArgument, "dual_drift takes drift-only specs");
    std::vector<double> lo, hi;
    box_or_default(spec.dim, lo, hi);
    require_separable_drift(spec, probe_points(lo, hi, 100));
    DualReport r;
    ProcessSpec out = spec;
    std::vector<Expr> b;
    for (const auto& e : *spec.drift) b.push_back(-e);
    out.drift = b;
    out.drift_separable = true;
    r.dual_spec = out;
    r.notes = "drift reversed";
    r.finish();
    return r;
}

DualReport dual_diffusion(const ProcessSpec& spec, const std::vector<double>& lower_in,
                          const std::vector<double>& upper_in) {
    if (!spec.diffusion) throw Error(ErrorCode::InvalidArgument, "dual_diffusion needs a diffusion matrix");
    if (spec.jump || spec.stable) throw Error(ErrorCode::InvalidArgument, "jumps are handled by dual_full_1d");
    const std::size_t d = spec.dim;
    std::vector<double> lo = lower_in, hi = upper_in;
    box_or_default(d, lo, hi);
    const auto& a = *spec.diffusion;
    const auto probes = probe_points(lo, hi, 100);

    DualReport r;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < d; ++k) {
                if (k == i || k == j) continue;
                const auto ev = dependence_evidence(a[i][j], k, probes);
                if (!ev) continue;
                const auto& [where, val] = *ev;
                throw Error(ErrorCode::StructureViolation,
                            "a_" + std::to_string(i + 1) + std::to_string(j + 1) + " depends on x" +
                                std::to_string(k + 1) + ", d/dx" + std::to_string(k + 1) + " = " +
                                std::to_string(val) + " at " + fmt(where));
            }
    require_separable_drift(spec, probes);
    spec.validate(lo, hi);

    ProcessSpec out = spec;
    std::vector<Expr> b;
    for (std::size_t j = 0; j < d; ++j) {
        Expr bj = a[j][j].derivative(j);
        if (spec.drift) bj = bj - (*spec.drift)[j];
        b.push_back(bj);
    }
    out.drift = b;
    out.drift_separable = true;
    r.dual_spec = out;
    r.notes = "same diffusion, drift a'_jj - b_j";
    r.finish();
    return r;
}

ProcessSpec lightcone_spec(const LightConeCoefficients& c) {
    const Expr x = Expr::variable(0), y = Expr::variable(1);
    const Expr al = c.alpha.substitute({x + y}), be = c.beta.substitute({x - y});
    ProcessSpec s;
    s.dim = 2;
    const Expr a = al + be + c.omega, cc = al + be - c.omega, b = al - be;
    s.diffusion = std::vector<std::vector<Expr>>{{a, b}, {b, cc}};
    return s;
}

DualReport dual_lightcone_diffusion(const LightConeCoefficients& c, const std::vector<double>& lower,
                                    const std::vector<double>& upper, double drift_factor) {
    ProcessSpec s = lightcone_spec(c);
    s.validate(lower, upper);
    const Expr x = Expr::variable(0), y = Expr::variable(1);
    const Expr ap = (c.alpha_prime ? *c.alpha_prime : c.alpha.derivative(0)).substitute({x + y});
    const Expr bp = (c.beta_prime ? *c.beta_prime : c.beta.derivative(0)).substitute({x - y});
    const Expr k = Expr::constant(drift_factor);
    ProcessSpec out = s;
    out.drift = std::vector<Expr>{k * (ap + bp), k * (ap - bp)};
    DualReport r;
    r.dual_spec = out;
    r.notes = "light-cone dual: same second-order part";
    r.finish();
    return r;
}

double upper_tail(const JumpKernel& k, const Vec& z, const Vec& y) {
    switch (k.family) {
        case JumpFamily::atomic:
        case JumpFamily::separable: {
            double s = 0.0;
            for (const auto& a : k.atoms)
                if (ge(target_of(a, z, k.fold), y)) s += std::max(0.0, a.rate_at(z));
            return s;
        }
        case JumpFamily::analytic:
            if (!k.tail) throw Error(ErrorCode::UnsupportedKernel, "analytic kernel without an orthant tail");
            if (k.fold) throw Error(ErrorCode::UnsupportedKernel, "folded analytic kernels are not supported");
            return k.tail(z, y);
        case JumpFamily::cumulative:
            break;
    }
    throw Error(ErrorCode::UnsupportedKernel, "cumulative kernels have no upper tail");
}

KernelFn siegmund_cumulative(const JumpKernel& k) {
    if (k.family == JumpFamily::analytic && !k.total_rate)
        throw Error(ErrorCode::UnsupportedKernel, "analytic kernel needs a finite total rate");
    if (k.family == JumpFamily::cumulative) throw Error(ErrorCode::UnsupportedKernel, "kernel is already a dual");
    return [k](const Vec& y, const Vec& z) { return upper_tail(k, z, y) - (ge(z, y) ? k.total(z) : 0.0); };
}

PrincipalValue principal_value_moment(const std::function<double(double)>& M, double y, double c,
                                      std::size_t levels, std::size_t cells_per_octave) {
    PrincipalValue pv;
    const double ratio = std::pow(2.0, -1.0 / static_cast<double>(cells_per_octave));
    double outer = c, sum = 0.0;
    double m_right = M(y + c), m_left = M(y - c);
    for (std::size_t lv = 0; lv < levels; ++lv) {
        for (std::size_t j = 0; j < cells_per_octave; ++j) {
            const double inner = outer * ratio, mid = 0.5 * (outer + inner);
            const double r_in = M(y + inner), l_in = M(y - inner);
            sum += mid * (m_right - r_in);    // cell (y + inner, y + outer]
            sum += -mid * (l_in - m_left);    // cell (y - outer, y - inner]
            m_right = r_in, m_left = l_in, outer = inner;
        }
        pv.levels.push_back(sum);
    }
    pv.value = sum;
    const std::size_t n = pv.levels.size();
    if (n < 3) {
        pv.converged = true;
        return pv;
    }
    const double d1 = std::abs(pv.levels[n - 1] - pv.levels[n - 2]);
    const double d0 = std::abs(pv.levels[n - 2] - pv.levels[n - 3]);
    const double scale = 1.0 + std::abs(sum);
    pv.converged = d1 <= 1e-9 * scale || (d1 <= 0.75 * d0 && d1 <= 1e-3 * scale);
    return pv;
}

JumpKernel fold_half_line(JumpKernel k) {
    k.fold = true;
    return k;
}

DualReport dual_jump_1d(const JumpKernel& nu_in, JumpBoundary boundary, const Grid& g, double cutoff) {
    if (g.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "dual_jump_1d is one-dimensional");
    JumpKernel nu = nu_in;
    if (boundary == JumpBoundary::at_zero && !nu.fold) nu = fold_half_line(nu);
    const KernelFn P = siegmund_cumulative(nu);
    const auto pts = grid_points(g);
    const double lo = g.lower()[0], hi = g.upper()[0];
    DualReport r;

    // Tail conditions: no mass from far below reaches y, and from far above
    // nothing falls below y.
    double reach = nu.support_radius;
    for (const auto& a : nu.atoms)
        reach = std::max(reach, a.reset ? std::abs(a.target[0]) + std::max(std::abs(lo), std::abs(hi))
                                        : std::abs(a.displacement[0]));
    const double span = hi - lo + reach + 1.0;
    for (double far : {span, 10.0 * span}) {
        for (const Vec& y : pts) {
            if (boundary == JumpBoundary::none) {
                const Vec z = vec1(lo - far);
                const double up = upper_tail(nu, z, y);
                if (up > 1e-9) {
                    r.add("tail_condition_lower", (Vec(2) << y[0], z[0]).finished(), up);
                    break;
                }
            }
            const Vec z = vec1(hi + far);
            const double down = nu.total(z) - upper_tail(nu, z, y);
            if (down > 1e-9) {
                r.add("tail_condition_upper", (Vec(2) << y[0], z[0]).finished(), down);
                break;
            }
        }
    }

    // Monotonicity on the lattice: z -> nu(z, {w >= y}) for z < y (starting
    // from 0 below the grid), and z -> -nu(z, {w < y}) for z >= y.
    std::size_t reported = 0;
    for (std::size_t yi = 0; yi < pts.size() && reported < 50; ++yi) {
        const Vec& y = pts[yi];
        double prev = 0.0;
        for (std::size_t zi = 0; zi < yi; ++zi) {
            const double v = upper_tail(nu, pts[zi], y);
            if (v < prev - 1e-12 * (1.0 + std::abs(prev))) {
                r.add("monotonicity_below", (Vec(2) << y[0], pts[zi][0]).finished(), v - prev);
                ++reported;
                break;
            }
            prev = v;
        }
        prev = -(nu.total(y) - upper_tail(nu, y, y));
        for (std::size_t zi = yi + 1; zi < pts.size(); ++zi) {
            const double v = -(nu.total(pts[zi]) - upper_tail(nu, pts[zi], y));
            if (v < prev - 1e-12 * (1.0 + std::abs(prev))) {
                r.add("monotonicity_above", (Vec(2) << y[0], pts[zi][0]).finished(), v - prev);
                ++reported;
                break;
            }
            prev = v;
        }
    }

    bool atomic = nu.family == JumpFamily::atomic || nu.family == JumpFamily::separable;
    if (atomic && boundary == JumpBoundary::none &&
        std::all_of(nu.atoms.begin(), nu.atoms.end(), [](const JumpAtom& a) { return !a.reset && constant_rate(a); })) {
        JumpKernel e;
        e.family = JumpFamily::atomic;
        for (JumpAtom a : nu.atoms) {
            a.displacement = -a.displacement;
            e.atoms.push_back(a);
        }
        r.explicit_jump = e;
    }

    // Compensator integral int_{|z-y|<=c} (z - y) [nu(y, dz) + mu_y(dz)].
    std::function<double(double)> source_moment;
    if (nu.compensated) {
        const std::size_t stride = std::max<std::size_t>(1, pts.size() / 25);
        for (std::size_t yi = 0; yi < pts.size(); yi += stride) {
            const double y = pts[yi][0];
            double k = 0.0;
            bool ok = true;
            if (atomic) {
                for (const auto& a : nu.atoms) {
                    if (a.reset) continue;
                    const double dlt = a.displacement[0];
                    if (std::abs(dlt) <= cutoff) {
                        k += dlt * a.rate_at(vec1(y)) - integrate_rate(a, y - dlt, y);
                    } else if (dlt > 0) {
                        k += cutoff * a.rate_at(vec1(y - cutoff)) - integrate_rate(a, y - cutoff, y);
                    } else {
                        k += -cutoff * a.rate_at(vec1(y + cutoff)) + integrate_rate(a, y, y + cutoff);
                    }
                }
            } else {
                const Vec yv = vec1(y);
                const auto src = principal_value_moment([&](double z) { return -upper_tail(nu, yv, vec1(z)); }, y, cutoff);
                const auto dual = principal_value_moment([&](double z) { return P(yv, vec1(z)); }, y, cutoff);
                ok = src.converged && dual.converged;
                k = src.value + dual.value;
            }
            r.compensator_probe.emplace_back(y, k);
            if (!ok || !std::isfinite(k)) {
                r.add("compensator_divergent", vec1(y), k);
                break;
            }
        }
        if (atomic) {
            source_moment = [nu, cutoff](double y) {
                double m = 0.0;
                for (const auto& a : nu.atoms) {
                    const double dlt = target_of(a, vec1(y), false)[0] - y;
                    if (std::abs(dlt) <= cutoff) m += dlt * std::max(0.0, a.rate_at(vec1(y)));
                }
                return m;
            };
        } else {
            source_moment = [nu, cutoff](double y) {
                const Vec yv = vec1(y);
                return principal_value_moment([&](double z) { return -upper_tail(nu, yv, vec1(z)); }, y, cutoff).value;
            };
        }
    }

    ProcessSpec out;
    out.dim = 1;
    JumpKernel kd;
    kd.family = JumpFamily::cumulative;
    kd.cumulative = P;
    kd.name = "siegmund_dual";
    if (source_moment) kd.drift_correction = [source_moment](const Vec& y) { return vec1(source_moment(y[0])); };
    out.jump = kd;
    if (boundary == JumpBoundary::at_zero) {
        out.domain = Domain::half_line;
        out.boundary = HalfLineBoundary::absorb;
    }
    out.compensator_cutoff = cutoff;
    r.dual_spec = out;
    r.notes = boundary == JumpBoundary::at_zero ? "dual jumps with absorption at 0" : "dual jumps";
    r.finish();
    return r;
}

DualReport dual_jump_multidim(const JumpKernel& nu, const Grid& g) {
    const std::size_t d = g.dim();
    if (nu.family != JumpFamily::atomic && nu.family != JumpFamily::separable)
        throw Error(ErrorCode::MissingDerivative, "mixed z-derivatives are only available for atomic kernels");
    for (const auto& a : nu.atoms) {
        if (a.rate_fn && a.rate_gradient.empty())
            throw Error(ErrorCode::MissingDerivative, "tabulated rate without derivatives");
        if (nu.family == JumpFamily::separable) {
            if (a.axis < 0 || static_cast<std::size_t>(a.axis) >= d)
                throw Error(ErrorCode::InvalidArgument, "separable atom without a valid axis");
            for (std::size_t k = 0; k < d; ++k)
                if (k != static_cast<std::size_t>(a.axis) && a.rate.depends_on(k))
                    throw Error(ErrorCode::NotSeparable, "separable atom rate depends on x" + std::to_string(k + 1));
        }
    }
    DualReport r;
    const auto probes = probe_points(g.lower(), g.upper(), 64);

    // Derivative kernels exist as bounded kernels only for reset atoms or
    // atoms whose rate is constant.
    bool moving_variable = false;
    for (const auto& a : nu.atoms)
        if (!a.reset && !constant_rate(a)) moving_variable = true;
    const std::size_t full = (std::size_t{1} << d) - 1;
    if (!moving_variable) {
        std::vector<std::vector<Expr>> deriv(full + 1);
        for (std::size_t mask = 1; mask <= full; ++mask)
            for (const auto& a : nu.atoms) deriv[mask].push_back(mixed_derivative(a, mask, d));
        for (std::size_t mask = 1; mask < full; ++mask) {
            for (const Vec& z : probes) {
                double s = 0.0;
                for (const auto& e : deriv[mask]) s += e(z);
                if (s > 1e-10) {
                    r.add("sign_condition_I=" + subset_name(mask, d), z, s);
                    break;
                }
            }
        }
        bool reported = false;
        for (const Vec& z : probes) {
            for (const Vec& y : probes) {
                const bool above = ge(z, y);
                double s = 0.0;
                for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
                    const bool hit = ge(target_of(nu.atoms[i], z, nu.fold), y);
                    if (above ? !hit : hit) s += deriv[full][i](z);
                }
                if ((above && s > 1e-10) || (!above && s < -1e-10)) {
                    Vec p(2 * d);
                    p << z, y;
                    r.add(above ? "sign_condition_full_above" : "sign_condition_full_below", p, s);
                    reported = true;
                    break;
                }
            }
            if (reported) break;
        }
    } else {
        r.notes = "moving atoms with variable rate: derivative conditions replaced by the lattice check; ";
    }

    // Exact lattice check: dual rates are mixed differences of P(y, .).
    const KernelFn P = siegmund_cumulative(nu);
    JumpKernel kd;
    kd.family = JumpFamily::cumulative;
    kd.cumulative = P;
    kd.name = "siegmund_dual";
    ProcessSpec s;
    s.dim = d;
    const Mat qd = discretize_jumps(kd, s, g);
    for (std::size_t y = 0; y < g.size(); ++y) {
        for (std::size_t w = 0; w < g.size(); ++w) {
            if (w == y) continue;
            const double v = qd(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(w));
            if (v < -1e-12) {
                Vec p(2 * d);
                p << g.point(y), g.point(w);
                r.add("stieltjes_positivity", p, v);
                y = g.size();
                break;
            }
        }
    }
    ProcessSpec out;
    out.dim = d;
    out.jump = kd;
    r.dual_spec = out;
    r.notes += "dual jump kernel through P(y, z)";
    r.finish();
    return r;
}

DualReport dual_full_1d(const ProcessSpec& spec, const Grid& g) {
    if (spec.dim != 1 || g.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "dual_full_1d is one-dimensional");
    if (spec.stable) throw Error(ErrorCode::UnsupportedKernel, "stable parts have no Pareto dual here");
    const Expr a = spec.diffusion ? (*spec.diffusion)[0][0] : Expr::constant(0.0);
    const Expr b = spec.drift ? (*spec.drift)[0] : Expr::constant(0.0);
    const bool half = spec.domain == Domain::half_line;
    if (half) {
        const double top = std::max(std::abs(g.lower()[0]), std::abs(g.upper()[0]));
        for (const Vec& x : probe_points({0.0}, {top}, 100)) {
            const Vec m = -x;
            if (std::abs(a(x) - a(m)) > 1e-10)
                throw Error(ErrorCode::AssumptionAViolation, "a is not even at x = " + std::to_string(x[0]));
            if (std::abs(b(x) + b(m)) > 1e-10)
                throw Error(ErrorCode::AssumptionAViolation, "b is not odd at x = " + std::to_string(x[0]));
        }
        if (spec.jump && !std::isfinite(spec.jump->total(vec1(0.0))))
            throw Error(ErrorCode::AssumptionAViolation, "nu(0, .) is unbounded");
    }

    DualReport r;
    ProcessSpec out;
    out.dim = 1;
    if (spec.jump) {
        DualReport j = dual_jump_1d(*spec.jump, half ? JumpBoundary::at_zero : JumpBoundary::none, g,
                                    spec.compensator_cutoff);
        r.violated_conditions = j.violated_conditions;
        r.explicit_jump = j.explicit_jump;
        r.compensator_probe = j.compensator_probe;
        if (j.dual_spec) out.jump = j.dual_spec->jump;
        else {
            JumpKernel kd;
            kd.family = JumpFamily::cumulative;
            kd.cumulative = siegmund_cumulative(half ? fold_half_line(*spec.jump) : *spec.jump);
            out.jump = kd;
        }
        r.notes = j.notes + "; ";
    }
    if (spec.diffusion) out.diffusion = spec.diffusion;
    out.drift = std::vector<Expr>{a.derivative(0) - b};
    out.compensator_cutoff = spec.compensator_cutoff;
    if (half) {
        out.domain = Domain::half_line;
        out.boundary = HalfLineBoundary::absorb;
        r.notes += "origin absorbing";
    } else {
        r.notes += "full space";
    }
    r.dual_spec = out;
    r.finish();
    return r;
}

SelfDualResult check_self_dual(const ProcessSpec& spec, const std::vector<double>& lower,
                               const std::vector<double>& upper, std::size_t probes) {
    if (spec.dim != 1) throw Error(ErrorCode::DimensionMismatch, "self-duality check is one-dimensional");
    SelfDualResult res;
    const Expr a = spec.diffusion ? (*spec.diffusion)[0][0] : Expr::constant(0.0);
    const Expr b = spec.drift ? (*spec.drift)[0] : Expr::constant(0.0);
    const Expr half_ap = a.derivative(0) / Expr::constant(2.0);
    const auto pts = probe_points(lower, upper, probes);
    for (const Vec& x : pts) {
        const double v = b(x) - half_ap(x);
        if (std::abs(v) > 1e-10) {
            res.witness = x;
            res.reason = "b - a'/2 = " + std::to_string(v);
            return res;
        }
    }
    if (spec.jump) {
        const JumpKernel& k = *spec.jump;
        if (k.family == JumpFamily::analytic) {
            if (!k.density_dz) {
                res.reason = "kernel density derivative not supplied";
                return res;
            }
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                const Vec& y = pts[i];
                const Vec& z = pts[i + 1];
                const double v = k.density_dz(y, z) + k.density_dz(z, y);
                if (std::abs(v) > 1e-10) {
                    Vec w(2);
                    w << y[0], z[0];
                    res.witness = w;
                    res.reason = "density antisymmetry residual " + std::to_string(v);
                    return res;
                }
            }
        } else if (k.family == JumpFamily::atomic || k.family == JumpFamily::separable) {
            for (const auto& at : k.atoms) {
                if (at.reset || !constant_rate(at)) {
                    res.witness = pts.front();
                    res.reason = "atom with variable rate or fixed target";
                    return res;
                }
                double mirror = 0.0;
                for (const auto& o : k.atoms)
                    if (std::abs(o.displacement[0] + at.displacement[0]) <= 1e-12) mirror += o.rate(pts.front());
                double same = 0.0;
                for (const auto& o : k.atoms)
                    if (std::abs(o.displacement[0] - at.displacement[0]) <= 1e-12) same += o.rate(pts.front());
                if (std::abs(mirror - same) > 1e-10) {
                    res.witness = at.displacement;
                    res.reason = "atom at " + std::to_string(at.displacement[0]) + " has no mirror of equal rate";
                    return res;
                }
            }
        } else {
            res.reason = "cumulative kernels are not checked";
            return res;
        }
    }
    res.self_dual = true;
    res.reason = "b = a'/2 and the jump part is symmetric";
    return res;
}

ProcessSpec transform_spec(const ProcessSpec& spec, const Mat& B) {
    const auto d = static_cast<Eigen::Index>(spec.dim);
    if (B.rows() != d || B.cols() != d) throw Error(ErrorCode::DimensionMismatch, "basis size");
    if (std::abs(B.determinant()) < 1e-14) throw Error(ErrorCode::SingularBasis, "basis is singular");
    const Mat Bi = B.inverse();
    std::vector<Expr> x_of_alpha;
    for (Eigen::Index i = 0; i < d; ++i) {
        Expr e = Expr::constant(0.0);
        for (Eigen::Index j = 0; j < d; ++j)
            if (B(i, j) != 0.0) e = e + Expr::constant(B(i, j)) * Expr::variable(static_cast<std::size_t>(j));
        x_of_alpha.push_back(e);
    }
    auto lin = [&](const Mat& m, Eigen::Index row, const std::vector<Expr>& v) {
        Expr e = Expr::constant(0.0);
        for (Eigen::Index j = 0; j < d; ++j)
            if (m(row, j) != 0.0) e = e + Expr::constant(m(row, j)) * v[static_cast<std::size_t>(j)];
        return e;
    };
    ProcessSpec out = spec;
    out.jump.reset();
    out.drift_separable = false;
    if (spec.drift) {
        std::vector<Expr> b;
        for (const auto& e : *spec.drift) b.push_back(e.substitute(x_of_alpha));
        std::vector<Expr> nb;
        for (Eigen::Index i = 0; i < d; ++i) nb.push_back(lin(Bi, i, b));
        out.drift = nb;
    }
    if (spec.diffusion) {
        const auto& a = *spec.diffusion;
        // (B^{-1} a)_{ij}, then times B^{-T}
        std::vector<std::vector<Expr>> left(spec.dim);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) {
                std::vector<Expr> col;
                for (Eigen::Index k = 0; k < d; ++k)
                    col.push_back(a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)].substitute(x_of_alpha));
                left[static_cast<std::size_t>(i)].push_back(lin(Bi, i, col));
            }
        std::vector<std::vector<Expr>> res(spec.dim);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                res[static_cast<std::size_t>(i)].push_back(lin(Bi, j, left[static_cast<std::size_t>(i)]));
        out.diffusion = res;
    }
    return out;
}

}  // namespace dualgen

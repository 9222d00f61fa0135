#include "dualgen/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "dualgen/error.hpp"
#include "dualgen/stable.hpp"

namespace dualgen {

void PathConfig::validate() const {
    if (!(dt > 0.0) || !(t_end > 0.0) || dt > t_end) throw Error(ErrorCode::InvalidArgument, "need 0 < dt <= t_end");
    if (n_paths < 100) throw Error(ErrorCode::InvalidArgument, "n_paths must be at least 100");
    if (!(tail_truncation_quantile > 0.5 && tail_truncation_quantile <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "tail_truncation_quantile must lie in (0.5, 1]");
}

std::size_t worker_count(const PathConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    if (const char* env = std::getenv("DUALGEN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

// Square root of 2a, so that dX = b dt + sigma dW has generator a_ij d_i d_j.
Mat diffusion_root(const Mat& a) {
    if (a.rows() == 1) {
        if (a(0, 0) < -1e-12) throw Error(ErrorCode::PSDViolation, "negative diffusion coefficient");
        return Mat::Constant(1, 1, std::sqrt(std::max(0.0, 2.0 * a(0, 0))));
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(2.0 * a);
    if (es.eigenvalues().minCoeff() < -1e-10) throw Error(ErrorCode::PSDViolation, "diffusion matrix is not PSD");
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

struct Simulator {
    const ProcessSpec& spec;
    const PathConfig& cfg;
    std::size_t d;
    bool drift_const = true, diff_const = true;
    Vec b0;
    Mat sigma0;
    bool reflect = false, absorb = false;
    double inv_alpha = 1.0;

    Simulator(const ProcessSpec& s, const PathConfig& c) : spec(s), cfg(c), d(s.dim) {
        const Vec zero = Vec::Zero(static_cast<Eigen::Index>(d));
        if (spec.drift)
            for (const auto& e : *spec.drift) drift_const &= e.is_constant();
        if (spec.diffusion)
            for (const auto& row : *spec.diffusion)
                for (const auto& e : row) diff_const &= e.is_constant();
        b0 = drift_vec(zero, true);
        if (spec.diffusion && diff_const) sigma0 = diffusion_root(spec.diffusion_matrix(zero));
        reflect = spec.domain == Domain::half_line && spec.boundary == HalfLineBoundary::reflect;
        absorb = spec.domain == Domain::half_line && spec.boundary == HalfLineBoundary::absorb;

        if (cfg.scheme == Scheme::stable_euler) {
            if (!spec.stable) throw Error(ErrorCode::InvalidArgument, "stable_euler needs a stable part");
            if (spec.diffusion) throw Error(ErrorCode::InvalidArgument, "stable_euler excludes a diffusion part");
            inv_alpha = 1.0 / spec.stable->alpha;
        } else if (spec.stable) {
            throw Error(ErrorCode::InvalidArgument, "stable parts need the stable_euler scheme");
        }
        if (spec.jump) {
            if (cfg.scheme != Scheme::euler_jump_thinning)
                throw Error(ErrorCode::InvalidArgument, "jump parts need the euler_jump_thinning scheme");
            const auto fam = spec.jump->family;
            if (fam != JumpFamily::atomic && fam != JumpFamily::separable)
                throw Error(ErrorCode::UnsupportedKernel, "path simulation supports atomic jump kernels only");
            if (!(cfg.rate_bound > 0.0)) throw Error(ErrorCode::InvalidArgument, "thinning needs a positive rate_bound");
        }
    }

    Vec drift_vec(const Vec& x, bool force = false) const {
        Vec b = Vec::Zero(static_cast<Eigen::Index>(d));
        if (spec.drift && (force || !drift_const))
            for (std::size_t i = 0; i < d; ++i) b[static_cast<Eigen::Index>(i)] = (*spec.drift)[i](x);
        else if (spec.drift)
            b = b0;
        if (spec.jump && spec.jump->compensated) {
            for (const auto& a : spec.jump->atoms) {
                const Vec dz = a.reset ? Vec(a.target - x) : a.displacement;
                if (dz.norm() <= spec.compensator_cutoff) b -= std::max(0.0, a.rate_at(x)) * dz;
            }
        }
        return b;
    }

    double a00(const Vec& x) const { return spec.diffusion ? spec.diffusion_at(0, 0, x) : 0.0; }

    // Returns true when the path is absorbed during this step.
    bool boundary(Vec& x, const Vec& prev, double h, Rng& rng) const {
        if (reflect) {
            x[0] = std::abs(x[0]);
        } else if (absorb) {
            if (x[0] <= 0.0) return true;
            if (cfg.bridge_correction) {
                const double a = a00(prev);
                if (a > 0.0 && uniform01(rng) < std::exp(-prev[0] * x[0] / (a * h))) return true;
            }
        }
        return false;
    }

    void jump(Vec& x, Rng& rng) const {
        const auto& k = *spec.jump;
        double total = 0.0;
        for (const auto& a : k.atoms) total += std::max(0.0, a.rate_at(x));
        if (total > cfg.rate_bound * (1.0 + 1e-12))
            throw Error(ErrorCode::RateBoundExceeded,
                        "total rate " + std::to_string(total) + " exceeds bound " + std::to_string(cfg.rate_bound));
        double pick = uniform01(rng) * cfg.rate_bound;
        if (pick >= total) return;  // thinned
        for (const auto& a : k.atoms) {
            pick -= std::max(0.0, a.rate_at(x));
            if (pick < 0.0) {
                x = a.reset ? a.target : Vec(x + a.displacement);
                if (k.fold || reflect) x[0] = std::abs(x[0]);
                return;
            }
        }
    }

    // One-dimensional diffusion without jumps, kept free of allocations.
    void run_scalar(Rng& rng, const Vec& x0, Vec& out, char& absorbed) const {
        double x = x0[0];
        const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
        const double b_c = spec.drift ? b0[0] : 0.0;
        const double s_c = spec.diffusion && diff_const ? sigma0(0, 0) : 0.0;
        Vec xv(1);
        double t = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            const double h = std::min(cfg.dt, cfg.t_end - t);
            const double prev = x;
            xv[0] = prev;
            const double b = drift_const ? b_c : (*spec.drift)[0](xv);
            double sig = s_c;
            if (spec.diffusion && !diff_const) {
                const double a = spec.diffusion_at(0, 0, xv);
                if (a < -1e-12) throw Error(ErrorCode::PSDViolation, "negative diffusion coefficient");
                sig = std::sqrt(std::max(0.0, 2.0 * a));
            }
            x += b * h;
            if (spec.diffusion) x += sig * std::sqrt(h) * std_normal(rng);
            if (reflect) {
                x = std::abs(x);
            } else if (absorb) {
                if (x <= 0.0) {
                    absorbed = 1;
                    break;
                }
                if (cfg.bridge_correction && sig > 0.0 &&
                    uniform01(rng) < std::exp(-2.0 * prev * x / (sig * sig * h))) {
                    absorbed = 1;
                    break;
                }
            }
            t += h;
        }
        out = Vec::Constant(1, absorbed ? 0.0 : x);
    }

    void run(std::size_t path, const Vec& x0, Vec& out, char& absorbed) const {
        Rng rng = path_rng(cfg.seed, path);
        absorbed = 0;
        if (d == 1 && !spec.jump && !spec.stable) {
            run_scalar(rng, x0, out, absorbed);
            return;
        }
        Vec x = x0;
        const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
        double t = 0.0;
        double next_event = spec.jump ? std_exponential(rng) / cfg.rate_bound : std::numeric_limits<double>::infinity();
        Vec z(static_cast<Eigen::Index>(d));
        for (std::size_t s = 0; s < steps; ++s) {
            const double h = std::min(cfg.dt, cfg.t_end - t);
            const Vec prev = x;
            x += drift_vec(prev) * h;
            if (spec.stable) {
                const double amp = spec.stable->amplitude(prev);
                if (!(amp > 0.0))
                    throw Error(ErrorCode::InvalidArgument, "stable amplitude must be strictly positive");
                x += std::pow(amp * h, inv_alpha) * isotropic_stable(spec.stable->alpha, d, rng);
            } else if (spec.diffusion) {
                for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = std_normal(rng);
                if (diff_const) x += std::sqrt(h) * (sigma0 * z);
                else x += std::sqrt(h) * (diffusion_root(spec.diffusion_matrix(prev)) * z);
            }
            if (boundary(x, prev, h, rng)) {
                absorbed = 1;
                break;
            }
            t += h;
            bool hit = false;
            while (next_event <= t) {
                jump(x, rng);
                if (absorb && x[0] <= 0.0) {
                    hit = true;
                    break;
                }
                next_event += std_exponential(rng) / cfg.rate_bound;
            }
            if (hit) {
                absorbed = 1;
                break;
            }
        }
        if (absorbed) x[0] = 0.0;
        out = x;
    }
};

template <class Fn>
void parallel_paths(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double norm_of(const Vec& v) { return v.norm(); }

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe m;
    const double n = static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return m;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(std::min<double>(static_cast<double>(v.size() - 1),
                                                             std::floor(q * static_cast<double>(v.size() - 1))));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

}  // namespace

PathEnsemble simulate_paths(const ProcessSpec& spec, const PathConfig& cfg, const Vec& x0) {
    cfg.validate();
    if (static_cast<std::size_t>(x0.size()) != spec.dim) throw Error(ErrorCode::DimensionMismatch, "x0 dimension");
    const Simulator sim(spec, cfg);
    PathEnsemble e;
    e.terminal.assign(cfg.n_paths, Vec());
    e.absorbed.assign(cfg.n_paths, 0);
    parallel_paths(cfg.n_paths, worker_count(cfg), [&](std::size_t i) { sim.run(i, x0, e.terminal[i], e.absorbed[i]); });
    const double drift_step = norm_of(sim.drift_vec(x0)) * cfg.dt;
    if (drift_step > 0.1) {
        std::ostringstream os;
        os << "StepTooCoarse: |b(x0)| dt = " << drift_step;
        e.warnings.push_back(os.str());
    }
    return e;
}

std::string FunctionalDescriptor::describe() const {
    switch (kind) {
        case FunctionalKind::cone:
            return cone && !cone->is_pareto() ? "cone" : "pareto";
        case FunctionalKind::riesz: {
            std::ostringstream os;
            os << "riesz(" << alpha << ")";
            return os.str();
        }
        case FunctionalKind::newtonian:
            return "newtonian";
        case FunctionalKind::log2d:
            return "log2d";
    }
    return "";
}

DualityEstimate estimate_duality(const ProcessSpec& spec_x, const ProcessSpec& spec_y, const FunctionalDescriptor& f,
                                 const Vec& x, const Vec& y, const PathConfig& cfg, const DualReport* certificate) {
    cfg.validate();
    const std::size_t d = spec_x.dim;
    if (spec_y.dim != d) throw Error(ErrorCode::DimensionMismatch, "specX and specY dimensions differ");
    if (f.kind == FunctionalKind::cone && (!certificate || !certificate->admissible))
        throw Error(ErrorCode::InadmissibleDual, "cone functional needs an admissible dual report");
    if (f.kind == FunctionalKind::newtonian && d < 3)
        throw Error(ErrorCode::InvalidArgument, "the Newtonian kernel needs d >= 3");
    if (f.kind == FunctionalKind::log2d && d != 2) throw Error(ErrorCode::InvalidArgument, "log2d needs d = 2");

    PathConfig cy = cfg;
    cy.seed = cfg.seed + 1;
    const PathEnsemble ex = simulate_paths(spec_x, cfg, x);
    const PathEnsemble ey = simulate_paths(spec_y, cy, y);

    const Cone cone = f.cone ? *f.cone : Cone::pareto(d);
    auto value = [&](const Vec& v) {
        switch (f.kind) {
            case FunctionalKind::cone:
                return cone_contains(cone, v) ? 1.0 : 0.0;
            case FunctionalKind::riesz:
                return std::pow(v.norm(), f.alpha - static_cast<double>(d));
            case FunctionalKind::newtonian:
                return std::pow(v.norm(), 2.0 - static_cast<double>(d));
            case FunctionalKind::log2d:
                return std::log(v.norm());
        }
        return 0.0;
    };
    std::vector<double> lhs(cfg.n_paths), rhs(cfg.n_paths);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        lhs[i] = value(ex.terminal[i] - y);
        rhs[i] = value(x - ey.terminal[i]);
    }

    DualityEstimate est;
    est.n_paths = cfg.n_paths;
    est.functional_descriptor = f.describe();
    if (f.kind != FunctionalKind::cone && cfg.tail_truncation_quantile < 1.0) {
        std::vector<double> pooled(lhs);
        pooled.insert(pooled.end(), rhs.begin(), rhs.end());
        double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
        if (f.kind == FunctionalKind::log2d) {
            lo = quantile(pooled, 1.0 - cfg.tail_truncation_quantile);
            est.truncation_level = lo;
        } else {
            hi = quantile(pooled, cfg.tail_truncation_quantile);
            est.truncation_level = hi;
        }
        for (auto* v : {&lhs, &rhs})
            for (double& s : *v) s = std::clamp(s, lo, hi);
    }
    const MeanSe l = mean_se(lhs), r = mean_se(rhs);
    est.lhs_mean = l.mean, est.lhs_se = l.se, est.rhs_mean = r.mean, est.rhs_se = r.se;
    est.gap = l.mean - r.mean;
    const double se = std::sqrt(l.se * l.se + r.se * r.se);
    est.z_score = se > 0.0 ? est.gap / se : (est.gap == 0.0 ? 0.0 : std::copysign(1e300, est.gap));
    est.warnings = ex.warnings;
    est.warnings.insert(est.warnings.end(), ey.warnings.begin(), ey.warnings.end());
    return est;
}

RegularizedDistribution regularized_boundary_distribution(const std::vector<double>& eps,
                                                          const std::vector<std::vector<double>>& values,
                                                          double noise) {
    if (eps.size() < 3) throw Error(ErrorCode::InvalidArgument, "the eps ladder needs at least three levels");
    if (values.size() != eps.size()) throw Error(ErrorCode::DimensionMismatch, "one value row per eps level");
    for (std::size_t k = 1; k < eps.size(); ++k)
        if (!(eps[k] < eps[k - 1] && eps[k] > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must decrease to 0");
    const std::size_t m = values.front().size();
    RegularizedDistribution out;
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> diff;
        for (std::size_t k = 0; k + 1 < eps.size(); ++k) diff.push_back(values[k][j] - values[k + 1][j]);
        double biggest = 0.0;
        for (double v : diff) biggest = std::max(biggest, std::abs(v));
        const double last = values.back()[j];
        if (biggest <= noise) {
            out.values.push_back(last);
            out.rates.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        double rate = 0.0, ratio = 0.0;
        for (std::size_t k = 0; k + 1 < diff.size(); ++k) {
            ratio = diff[k + 1] != 0.0 ? diff[k] / diff[k + 1] : std::numeric_limits<double>::infinity();
            if (!(ratio >= 1.3)) {
                std::ostringstream os;
                os << "differences at probe " << j << " shrink by " << ratio << " between levels " << k << " and "
                   << k + 2;
                throw Error(ErrorCode::NonConvergent, os.str());
            }
            rate = std::log(ratio) / std::log(eps[k + 1] / eps[k + 2]);
        }
        // geometric tail of the remaining differences
        out.values.push_back(last - diff.back() / (ratio - 1.0));
        out.rates.push_back(rate);
    }
    return out;
}

}  // namespace dualgen

#include "dualgen/matrix_lab.hpp"
#include "dualgen/scenario.hpp"

#include <json.hpp>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dualgen {

using ojson = nlohmann::ordered_json;

namespace {

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson vec_json(const Vec& v) {
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
    return a;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string fmt(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double Phi(double z) { return boost::math::cdf(boost::math::normal(), z); }

ojson describe_spec(const ProcessSpec& s) {
    ojson j;
    j["dim"] = s.dim;
    if (s.drift) {
        j["drift"] = ojson::array();
        for (const auto& e : *s.drift) j["drift"].push_back(e.str());
    }
    if (s.diffusion) {
        j["diffusion"] = ojson::array();
        for (const auto& row : *s.diffusion) {
            ojson r = ojson::array();
            for (const auto& e : row) r.push_back(e.str());
            j["diffusion"].push_back(r);
        }
    }
    if (s.jump) {
        const auto& k = *s.jump;
        ojson jk;
        jk["family"] = k.name.empty() ? (k.family == JumpFamily::analytic ? "analytic" : "atoms") : k.name;
        jk["compensated"] = k.compensated;
        if (!k.atoms.empty()) {
            jk["atoms"] = ojson::array();
            for (const auto& a : k.atoms) {
                ojson aj;
                if (a.reset) aj["target"] = vec_json(a.target);
                else aj["displacement"] = vec_json(a.displacement);
                aj["rate"] = a.rate_fn ? std::string("<table>") : a.rate.str();
                jk["atoms"].push_back(aj);
            }
        }
        j["jump"] = jk;
    }
    if (s.stable) j["stable"] = {{"alpha", s.stable->alpha}, {"amplitude", s.stable->amplitude.str()}};
    j["domain"] = s.domain == Domain::half_line ? "half_line" : "full_space";
    j["boundary"] = s.boundary == HalfLineBoundary::reflect  ? "reflect"
                    : s.boundary == HalfLineBoundary::absorb ? "absorb"
                                                             : "none";
    return j;
}

bool classification_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::TailConditionFail:
        case ErrorCode::MonotonicityFail:
        case ErrorCode::CompensatorDivergent:
        case ErrorCode::SignConditionFail:
        case ErrorCode::StructureViolation:
        case ErrorCode::AssumptionAViolation:
        case ErrorCode::NotSeparable:
        case ErrorCode::MissingDerivative:
        case ErrorCode::InadmissibleDual:
            return true;
        default:
            return false;
    }
}

Grid probe_grid(const Scenario& s) {
    if (s.grid) return build_grid(*s.grid);
    const std::size_t d = s.process.dim;
    std::vector<double> lo(d, d == 1 ? -2.0 : -1.0), hi(d, d == 1 ? 2.0 : 1.0), h(d, d == 1 ? 0.1 : 0.25);
    if (s.process.domain == "half_line") lo[0] = 0.0;
    return build_grid(lo, hi, h);
}

Cone pairing_cone(const PairingDescription& p, std::size_t dim) {
    if (p.kind == "light_cone") return Cone::light_cone_2d();
    if (p.kind == "basis") {
        Mat b(dim, dim);
        for (std::size_t j = 0; j < dim; ++j)
            for (std::size_t i = 0; i < dim; ++i) b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p.basis[j][i];
        return Cone(b);
    }
    return Cone::pareto(dim);
}

bool potential_pairing(const PairingDescription& p) {
    return p.kind == "riesz" || p.kind == "newtonian" || p.kind == "log2d";
}

// Pareto-order dual of an already built spec.
DualReport pareto_dual(const ProcessSpec& spec, const Grid& g) {
    if (spec.stable) throw Error(ErrorCode::UnsupportedKernel, "no order dual for stable-like generators");
    if (spec.dim == 1 && (spec.jump || spec.domain == Domain::half_line)) return dual_full_1d(spec, g);
    if (spec.jump) {
        DualReport jr = dual_jump_multidim(*spec.jump, g);
        if (!spec.drift && !spec.diffusion) return jr;
        ProcessSpec cont = spec;
        cont.jump.reset();
        DualReport r = cont.diffusion ? dual_diffusion(cont, g.lower(), g.upper()) : dual_drift(cont);
        for (const auto& v : jr.violated_conditions) r.violated_conditions.push_back(v);
        if (!jr.notes.empty()) r.notes += (r.notes.empty() ? "" : "; ") + jr.notes;
        if (r.dual_spec && jr.dual_spec) r.dual_spec->jump = jr.dual_spec->jump;
        r.finish();
        return r;
    }
    if (spec.diffusion) return dual_diffusion(spec, g.lower(), g.upper());
    return dual_drift(spec);
}

// Dual report for the scenario pairing. Potential pairings are self-dual for
// a(x) Delta and -a(x)|Delta|^{alpha/2}; everything else goes through the
// order duals.
DualReport derive_dual(const Scenario& s, const ProcessSpec& spec, const Grid& g) {
    if (potential_pairing(s.pairing)) {
        DualReport r;
        const auto pts = probe_points(g.lower(), g.upper(), 50);
        if (spec.drift || spec.jump) r.add("structure_potential_pairing", pts.front(), 1.0);
        if (spec.diffusion) {
            for (const Vec& x : pts) {
                const Mat a = spec.diffusion_matrix(x);
                const double off = (a - a(0, 0) * Mat::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff();
                if (off > 1e-12) {
                    r.add("structure_potential_pairing", x, off);
                    break;
                }
            }
        }
        if (spec.stable && s.pairing.kind == "riesz" && std::abs(spec.stable->alpha - s.pairing.alpha) > 1e-12)
            r.add("structure_potential_pairing", pts.front(), spec.stable->alpha - s.pairing.alpha);
        r.dual_spec = spec;
        r.notes = "generator is self-dual for the potential pairing";
        r.finish();
        return r;
    }
    if (s.process.lightcone && s.pairing.kind == "light_cone") {
        const auto& lc = *s.process.lightcone;
        LightConeCoefficients c{Expr::parse(lc.alpha, 1), Expr::parse(lc.beta, 1), Expr::parse(lc.omega, 2), {}, {}};
        // the grid is read in cone coordinates; probe the image box
        const Mat B = Cone::light_cone_2d().basis();
        std::vector<double> lo(2, 1e300), hi(2, -1e300);
        for (int corner = 0; corner < 4; ++corner) {
            Vec a(2);
            a << (corner & 1 ? g.upper()[0] : g.lower()[0]), (corner & 2 ? g.upper()[1] : g.lower()[1]);
            const Vec x = B * a;
            for (int i = 0; i < 2; ++i) lo[i] = std::min(lo[i], x[i]), hi[i] = std::max(hi[i], x[i]);
        }
        return dual_lightcone_diffusion(c, lo, hi);
    }
    if (s.pairing.kind != "pareto") {
        // cone coordinates x = B alpha turn the cone order into the coordinate order
        const Cone cone = pairing_cone(s.pairing, spec.dim);
        DualReport r = pareto_dual(transform_spec(spec, cone.basis()), g);
        r.notes += std::string(r.notes.empty() ? "" : "; ") + "dual expressed in cone coordinates";
        return r;
    }
    return pareto_dual(spec, g);
}

ojson violations_json(const DualReport& r) {
    ojson a = ojson::array();
    for (const auto& v : r.violated_conditions)
        a.push_back({{"condition_id", v.condition_id}, {"probe", vec_json(v.probe)}, {"value", num(v.value)}});
    return a;
}

struct ModeOutput {
    ojson body;
    std::string csv;
    bool pass = false;
};

ModeOutput run_dual(const Scenario& s, const ProcessSpec& spec) {
    ModeOutput out;
    const Grid g = probe_grid(s);
    DualReport r;
    try {
        r = derive_dual(s, spec, g);
    } catch (const Error& e) {
        if (!classification_error(e.code())) throw;
        r = DualReport{};
        r.add(to_string(e.code()), Vec::Zero(static_cast<Eigen::Index>(spec.dim)), 0.0);
        r.notes = e.what();
        r.finish();
    }
    out.body["admissible"] = r.admissible;
    out.body["violated_conditions"] = violations_json(r);
    out.body["notes"] = r.notes;
    if (r.dual_spec) out.body["dual_process"] = describe_spec(*r.dual_spec);
    bool pass = r.admissible;
    if (r.admissible && r.dual_spec && s.grid && !potential_pairing(s.pairing)) {
        // Non-Pareto cones are compared on the grid read in cone coordinates
        // x = B alpha, where the cone order is the coordinate order.
        const Grid grid = build_grid(*s.grid);
        ProcessSpec src = spec, dual = *r.dual_spec;
        if (s.pairing.kind != "pareto") {
            const Mat B = pairing_cone(s.pairing, spec.dim).basis();
            src = transform_spec(spec, B);
            if (s.process.lightcone && s.pairing.kind == "light_cone") dual = transform_spec(dual, B);
        }
        const QMatrix qs = discretize(src, grid);
        const QMatrix qd = discretize(dual, grid);
        const auto cmp = compare_with_oracle(qd.entries, qs.entries, grid, Cone::pareto(spec.dim), s.tolerances.margin);
        const bool ok = cmp.relative() <= s.tolerances.oracle;
        out.body["oracle"] = {{"coordinates", s.pairing.kind == "pareto" ? "state" : "cone"},
                              {"max_abs", num(cmp.max_abs)}, {"q_norm", num(cmp.q_norm)},
                              {"relative", num(cmp.relative())}, {"row", cmp.row},
                              {"col", cmp.col}, {"margin", s.tolerances.margin},
                              {"tolerance", s.tolerances.oracle}, {"pass", ok}};
        pass = pass && ok;
    }
    out.pass = pass;
    return out;
}

ModeOutput run_verify(const Scenario& s, const ProcessSpec& spec) {
    ModeOutput out;
    const Grid grid = build_grid(*s.grid);
    const Cone cone = pairing_cone(s.pairing, spec.dim);
    const QMatrix q = discretize(spec, grid);
    const auto qv = validate_qmatrix(q, false);
    out.body["states"] = grid.size();
    out.body["q_validation"] = {{"pass", qv.pass}, {"min_offdiag", num(qv.min_offdiag)},
                                {"max_rowsum_defect", num(qv.max_rowsum_defect)}};
    const Mat f = duality_indicator_matrix(grid, cone);
    bool pass = qv.pass;
    std::ostringstream csv;
    csv << "t,residual,min_dual_entry,max_dual_row_sum,monotone,dual_markov\n";
    out.body["times"] = ojson::array();
    for (double t : s.times) {
        const auto T = semigroup(q, t);
        const auto TD = dual_semigroup_via_F(q, grid, cone, t);
        const double res = duality_residual(T, TD, f);
        const auto chk = dual_stochasticity_check(TD, false);
        const Vec sums = TD.T.rowwise().sum();
        const bool mono = grid.dim() == 1 && cone.is_pareto() ? stochastically_monotone(T.T) : false;
        ojson tj{{"t", t}, {"residual", num(res)}, {"residual_pass", res <= s.tolerances.residual},
                 {"dual_min_entry", num(TD.T.minCoeff())}, {"dual_max_row_sum", num(sums.maxCoeff())},
                 {"dual_markov", chk.pass}};
        if (grid.dim() == 1 && cone.is_pareto()) tj["stochastically_monotone"] = mono;
        ojson neg = ojson::array();
        for (const auto& v : chk.violations) {
            if (neg.size() >= 10) break;
            neg.push_back({{"kind", v.kind}, {"row", v.row}, {"col", v.col}, {"value", num(v.value)},
                           {"y", vec_json(grid.point(v.row))}});
        }
        tj["dual_violations"] = neg;
        out.body["times"].push_back(tj);
        csv << fmt(t) << ',' << fmt(res) << ',' << fmt(TD.T.minCoeff()) << ',' << fmt(sums.maxCoeff()) << ','
            << (mono ? 1 : 0) << ',' << (chk.pass ? 1 : 0) << '\n';
        pass = pass && res <= s.tolerances.residual && chk.pass;
    }
    out.csv = csv.str();
    out.pass = pass;
    return out;
}

FunctionalDescriptor functional(const Scenario& s, std::size_t dim) {
    FunctionalDescriptor f;
    const auto& k = s.pairing.kind;
    if (k == "riesz") f.kind = FunctionalKind::riesz;
    else if (k == "newtonian") f.kind = FunctionalKind::newtonian;
    else if (k == "log2d") f.kind = FunctionalKind::log2d;
    else f.cone = pairing_cone(s.pairing, dim);
    f.alpha = s.pairing.alpha;
    return f;
}

// Closed form of P(X_t^x >= y) = P(Y_t^y <= x) for the one-dimensional BM pairs.
double closed_form(const std::string& kind, double a, double x, double y, double t) {
    const double sd = std::sqrt(2.0 * a * t);
    if (kind == "bm") return Phi((x - y) / sd);
    return Phi((x - y) / sd) + Phi(-(x + y) / sd);
}

const char* kCsvHeader = "probe_id,x,y,t,lhs_mean,lhs_se,rhs_mean,rhs_se,gap,z_score,n_paths,truncation_level\n";

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

ModeOutput run_mc(const Scenario& s, const ProcessSpec& spec) {
    ModeOutput out;
    const Grid g = probe_grid(s);
    ProcessSpec dual;
    DualReport cert;
    if (s.dual_process) {
        dual = build_process(*s.dual_process, s.grid);
        cert.dual_spec = dual;
        cert.notes = "dual process declared by the scenario";
        cert.finish();
        out.body["dual_source"] = "declared";
    } else {
        cert = derive_dual(s, spec, g);
        out.body["dual_source"] = "derived";
        if (!cert.admissible) {
            out.body["admissible"] = false;
            out.body["violated_conditions"] = violations_json(cert);
            out.body["probes"] = ojson::array();
            out.csv = kCsvHeader;
            out.pass = false;
            return out;
        }
        dual = *cert.dual_spec;
    }
    out.body["admissible"] = true;
    out.body["dual_process"] = describe_spec(dual);
    const FunctionalDescriptor f = functional(s, spec.dim);
    const PathConfig base = build_path_config(*s.path_config);
    out.body["functional"] = f.describe();

    bool pass = true;
    std::ostringstream csv;
    csv << kCsvHeader;
    out.body["probes"] = ojson::array();
    for (std::size_t i = 0; i < s.probes.size(); ++i) {
        const Probe& p = s.probes[i];
        PathConfig cfg = base;
        cfg.t_end = p.t;
        cfg.dt = std::min(cfg.dt, p.t);
        cfg.seed = base.seed + 1000 * static_cast<std::uint64_t>(i);
        const Vec x = to_vec(p.x), y = to_vec(p.y);
        const auto est = estimate_duality(spec, dual, f, x, y, cfg, &cert);
        bool ok = std::isfinite(est.z_score) ? std::abs(est.z_score) <= s.tolerances.z_score : est.gap == 0.0;
        ojson pj{{"probe_id", i},
                 {"x", p.x},
                 {"y", p.y},
                 {"t", p.t},
                 {"lhs_mean", num(est.lhs_mean)},
                 {"lhs_se", num(est.lhs_se)},
                 {"rhs_mean", num(est.rhs_mean)},
                 {"rhs_se", num(est.rhs_se)},
                 {"gap", num(est.gap)},
                 {"z_score", num(est.z_score)},
                 {"z_pass", ok},
                 {"n_paths", est.n_paths},
                 {"truncation_level", est.truncation_level ? num(*est.truncation_level) : ojson(nullptr)},
                 {"warnings", est.warnings}};
        if (!s.closed_form.empty()) {
            const double a = spec.diffusion_at(0, 0, x);
            const double cf = closed_form(s.closed_form, a, x[0], y[0], p.t);
            const bool cf_ok = std::abs(est.lhs_mean - cf) <= s.tolerances.closed_form &&
                               std::abs(est.rhs_mean - cf) <= s.tolerances.closed_form;
            pj["closed_form"] = num(cf);
            pj["closed_form_pass"] = cf_ok;
            ok = ok && cf_ok;
        }
        pj["pass"] = ok;
        pass = pass && ok;
        out.body["probes"].push_back(pj);
        csv << i << ',' << join(p.x) << ',' << join(p.y) << ',' << fmt(p.t) << ',' << fmt(est.lhs_mean) << ','
            << fmt(est.lhs_se) << ',' << fmt(est.rhs_mean) << ',' << fmt(est.rhs_se) << ',' << fmt(est.gap) << ','
            << fmt(est.z_score) << ',' << est.n_paths << ','
            << (est.truncation_level ? fmt(*est.truncation_level) : std::string()) << '\n';
    }

    if (s.regularization) {
        const auto& r = *s.regularization;
        PathConfig cfg = base;
        cfg.t_end = r.t;
        cfg.dt = std::min(cfg.dt, r.t);
        std::vector<std::vector<double>> values;
        for (double e : r.eps) {
            Vec y0 = Vec::Constant(static_cast<Eigen::Index>(spec.dim), r.boundary);
            y0[0] += e;
            // same seed on every level so the ladder differences are smooth
            const auto ens = simulate_paths(dual, cfg, y0);
            std::vector<double> row;
            for (double xv : r.x) {
                std::size_t hit = 0;
                for (const Vec& w : ens.terminal)
                    if (w[0] <= xv) ++hit;
                row.push_back(static_cast<double>(hit) / static_cast<double>(ens.terminal.size()));
            }
            values.push_back(std::move(row));
        }
        const auto rd = regularized_boundary_distribution(r.eps, values);
        ojson rj{{"boundary", r.boundary}, {"eps", r.eps}, {"x", r.x}, {"t", r.t}, {"ladder", values}};
        ojson vals = ojson::array(), rates = ojson::array();
        for (double v : rd.values) vals.push_back(num(v));
        for (double v : rd.rates) rates.push_back(std::isinf(v) ? ojson("inf") : num(v));
        rj["values"] = vals;
        rj["rates"] = rates;
        bool ok = true;
        if (r.closed_form == "absorbed_bm") {
            const Vec a0 = Vec::Constant(static_cast<Eigen::Index>(spec.dim), r.boundary);
            const double a = dual.diffusion_at(0, 0, a0);
            ojson cf = ojson::array();
            for (std::size_t j = 0; j < r.x.size(); ++j) {
                const double c = closed_form("reflected_absorbed", a, r.x[j], r.boundary, r.t);
                cf.push_back(num(c));
                ok = ok && std::abs(rd.values[j] - c) <= s.tolerances.regularized;
            }
            rj["closed_form"] = cf;
        }
        rj["pass"] = ok;
        pass = pass && ok;
        out.body["regularization"] = rj;
    }
    out.csv = csv.str();
    out.pass = pass;
    return out;
}

ModeOutput run_self_dual(const Scenario& s, const ProcessSpec& spec) {
    ModeOutput out;
    const std::vector<double> lo = s.grid ? s.grid->lower : std::vector<double>{-1.0};
    const std::vector<double> hi = s.grid ? s.grid->upper : std::vector<double>{1.0};
    const auto r = check_self_dual(spec, lo, hi);
    out.body["self_dual"] = r.self_dual;
    out.body["witness"] = r.witness ? vec_json(*r.witness) : ojson(nullptr);
    out.body["reason"] = r.reason;
    out.pass = r.self_dual;
    return out;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
    f << text;
}

}  // namespace

RunResult run_scenario(Scenario s, const RunOverrides& o) {
    if (o.mode) s.mode = *o.mode;
    if (o.seed) {
        if (!s.path_config) s.path_config = PathDescription{};
        s.path_config->seed = *o.seed;
    }
    if (o.paths) {
        if (!s.path_config) s.path_config = PathDescription{};
        s.path_config->n_paths = *o.paths;
    }
    if (o.tol) {
        switch (s.mode) {
            case Mode::mc: s.tolerances.z_score = *o.tol; break;
            case Mode::verify_matrix: s.tolerances.residual = *o.tol; break;
            case Mode::dual: s.tolerances.oracle = *o.tol; break;
            case Mode::self_dual_check: break;
        }
    }
    if (s.mode == Mode::verify_matrix && !s.grid) throw Error(ErrorCode::SchemaError, "/grid: required for mode verify-matrix");
    if (s.mode == Mode::mc && !s.path_config) throw Error(ErrorCode::SchemaError, "/path_config: required for mode mc");

    RunResult res;
    res.output_dir = o.out ? *o.out : !s.output_dir.empty() ? s.output_dir : "dualgen_out/" + s.name;

    ModeOutput m;
    try {
        const ProcessSpec spec = build_process(s.process, s.grid);
        switch (s.mode) {
            case Mode::dual: m = run_dual(s, spec); break;
            case Mode::verify_matrix: m = run_verify(s, spec); break;
            case Mode::mc: m = run_mc(s, spec); break;
            case Mode::self_dual_check: m = run_self_dual(s, spec); break;
        }
    } catch (const Error& e) {
        const std::string w = e.what();
        const std::string prefix = std::string(to_string(e.code())) + ": ";
        throw Error(e.code(), "scenario '" + s.name + "' (" + mode_name(s.mode) + "): " +
                                  (w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w));
    }

    ojson report;
    report["scenario"] = s.name;
    report["mode"] = mode_name(s.mode);
    report["pass"] = m.pass;
    for (auto it = m.body.begin(); it != m.body.end(); ++it) report[it.key()] = it.value();
    if (!report.contains("probes")) report["probes"] = ojson::array();
    res.pass = m.pass;
    res.report_json = report.dump(2) + "\n";
    res.report_csv = m.csv.empty() ? std::string(kCsvHeader) : m.csv;

    std::filesystem::create_directories(res.output_dir);
    const std::filesystem::path dir(res.output_dir);
    write_file(dir / "report.json", res.report_json);
    write_file(dir / "report.csv", res.report_csv);
    write_file(dir / "plot.csv", emit_plot_data(res.report_json));
    return res;
}

std::string emit_plot_data(const std::string& report_json) {
    const auto j = ojson::parse(report_json);
    std::ostringstream out;
    out << "scenario,probe_id,side,value,se\n";
    const std::string name = j.value("scenario", std::string());
    if (!j.contains("probes")) return out.str();
    auto val = [](const ojson& v) { return v.is_number() ? fmt(v.get<double>()) : std::string("nan"); };
    for (const auto& p : j.at("probes")) {
        const auto id = p.at("probe_id").get<std::size_t>();
        out << name << ',' << id << ",lhs," << val(p.at("lhs_mean")) << ',' << val(p.at("lhs_se")) << '\n';
        out << name << ',' << id << ",rhs," << val(p.at("rhs_mean")) << ',' << val(p.at("rhs_se")) << '\n';
    }
    return out.str();
}

}  // namespace dualgen

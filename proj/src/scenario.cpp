#include "dualgen/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dualgen {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::dual: return "dual";
        case Mode::verify_matrix: return "verify-matrix";
        case Mode::mc: return "mc";
        case Mode::self_dual_check: return "self-dual-check";
    }
    return "?";
}

namespace {

[[noreturn]] void schema(const std::string& ptr, const std::string& what) {
    throw Error(ErrorCode::SchemaError, (ptr.empty() ? std::string("/") : ptr) + ": " + what);
}

std::string child(const std::string& ptr, const std::string& key) {
    // JSON pointer escaping
    std::string k;
    for (char c : key) {
        if (c == '~') k += "~0";
        else if (c == '/') k += "~1";
        else k += c;
    }
    return ptr + "/" + k;
}

std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

// Object view that rejects fields outside the allowed set.
class Obj {
public:
    Obj(const json& j, std::string ptr, std::initializer_list<const char*> allowed) : j_(j), ptr_(std::move(ptr)) {
        if (!j.is_object()) schema(ptr_, "expected an object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key())) schema(child(ptr_, it.key()), "unknown field");
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& at(const char* key) const {
        if (!j_.contains(key)) schema(child(ptr_, key), "required field missing");
        return j_.at(key);
    }
    std::string ptr(const char* key) const { return child(ptr_, key); }
    const std::string& ptr() const { return ptr_; }

    double num(const char* key) const { return as_num(at(key), ptr(key)); }
    double num(const char* key, double dflt) const { return has(key) ? num(key) : dflt; }
    std::string str(const char* key) const { return as_str(at(key), ptr(key)); }
    std::string str(const char* key, const std::string& dflt) const { return has(key) ? str(key) : dflt; }
    bool flag(const char* key, bool dflt) const {
        if (!has(key)) return dflt;
        if (!at(key).is_boolean()) schema(ptr(key), "expected a boolean");
        return at(key).get<bool>();
    }
    std::uint64_t uint(const char* key, std::uint64_t dflt) const { return has(key) ? as_uint(at(key), ptr(key)) : dflt; }

    static double as_num(const json& v, const std::string& p) {
        if (!v.is_number()) schema(p, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) schema(p, "expected a finite number");
        return d;
    }
    static std::string as_str(const json& v, const std::string& p) {
        if (!v.is_string()) schema(p, "expected a string");
        return v.get<std::string>();
    }
    static std::uint64_t as_uint(const json& v, const std::string& p) {
        if (!v.is_number_unsigned()) schema(p, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

private:
    const json& j_;
    std::string ptr_;
};

const json& array_at(const json& v, const std::string& p) {
    if (!v.is_array()) schema(p, "expected an array");
    return v;
}

std::vector<double> num_list(const json& v, const std::string& p) {
    std::vector<double> out;
    const auto& a = array_at(v, p);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(Obj::as_num(a[i], child(p, i)));
    return out;
}

std::vector<std::string> str_list(const json& v, const std::string& p) {
    std::vector<std::string> out;
    const auto& a = array_at(v, p);
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(Obj::as_str(a[i], child(p, i)));
    return out;
}

// Parses to validate; the text itself is what the scenario keeps.
void check_expr(const std::string& text, std::size_t dim, const std::string& p) {
    try {
        Expr::parse(text, dim);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ExpressionParseError) throw;
        std::string m = e.what();
        const std::string prefix = std::string(to_string(e.code())) + ": ";
        if (m.rfind(prefix, 0) == 0) m = m.substr(prefix.size());
        throw Error(ErrorCode::ExpressionParseError, p + ": " + m);
    }
}

void one_of(const std::string& v, std::initializer_list<const char*> allowed, const std::string& p) {
    for (const char* a : allowed)
        if (v == a) return;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    schema(p, "'" + v + "' is not one of " + list);
}

AtomDescription read_atom(const json& j, const std::string& p, std::size_t dim) {
    Obj o(j, p, {"displacement", "target", "rate", "rate_table", "axis"});
    AtomDescription a;
    if (o.has("displacement") == o.has("target")) schema(p, "exactly one of displacement or target is required");
    if (o.has("displacement")) a.displacement = num_list(o.at("displacement"), o.ptr("displacement"));
    if (o.has("target")) a.target = num_list(o.at("target"), o.ptr("target"));
    const auto& v = a.displacement ? *a.displacement : *a.target;
    if (v.size() != dim) schema(o.ptr(a.displacement ? "displacement" : "target"), "expected " + std::to_string(dim) + " entries");
    if (o.has("rate") && o.has("rate_table")) schema(p, "rate and rate_table are exclusive");
    if (o.has("rate_table")) {
        a.rate_table = num_list(o.at("rate_table"), o.ptr("rate_table"));
    } else {
        a.rate = o.str("rate");
        check_expr(a.rate, dim, o.ptr("rate"));
    }
    if (o.has("axis")) {
        const auto ax = o.uint("axis", 0);
        if (ax >= dim) schema(o.ptr("axis"), "axis out of range");
        a.axis = static_cast<int>(ax);
    }
    return a;
}

JumpDescription read_jump(const json& j, const std::string& p, std::size_t dim) {
    Obj o(j, p, {"family", "atoms", "separable", "compensated", "rate", "scale"});
    JumpDescription k;
    k.family = o.str("family", "atoms");
    one_of(k.family, {"atoms", "two_sided_exponential"}, o.ptr("family"));
    k.separable = o.flag("separable", false);
    k.compensated = o.flag("compensated", false);
    k.rate = o.num("rate", 1.0);
    k.scale = o.num("scale", 1.0);
    if (k.family == "atoms") {
        const auto& arr = array_at(o.at("atoms"), o.ptr("atoms"));
        for (std::size_t i = 0; i < arr.size(); ++i) k.atoms.push_back(read_atom(arr[i], child(o.ptr("atoms"), i), dim));
    } else {
        if (o.has("atoms")) schema(o.ptr("atoms"), "only the atoms family lists atoms");
        if (dim != 1) schema(o.ptr("family"), "two_sided_exponential is one-dimensional");
        if (!(k.rate > 0.0)) schema(o.ptr("rate"), "must be positive");
        if (!(k.scale > 0.0)) schema(o.ptr("scale"), "must be positive");
    }
    return k;
}

ProcessDescription read_process(const json& j, const std::string& p) {
    Obj o(j, p, {"dim", "drift", "diffusion", "lightcone", "jump", "stable", "domain", "boundary", "compensator_cutoff"});
    ProcessDescription d;
    d.dim = static_cast<std::size_t>(o.uint("dim", 1));
    if (d.dim == 0 || d.dim > 6) schema(o.ptr("dim"), "dimension must lie in 1..6");
    if (o.has("drift")) {
        d.drift = str_list(o.at("drift"), o.ptr("drift"));
        if (d.drift->size() != d.dim) schema(o.ptr("drift"), "expected " + std::to_string(d.dim) + " entries");
        for (std::size_t i = 0; i < d.dim; ++i) check_expr((*d.drift)[i], d.dim, child(o.ptr("drift"), i));
    }
    if (o.has("diffusion")) {
        const auto& rows = array_at(o.at("diffusion"), o.ptr("diffusion"));
        if (rows.size() != d.dim) schema(o.ptr("diffusion"), "expected " + std::to_string(d.dim) + " rows");
        d.diffusion.emplace();
        for (std::size_t i = 0; i < d.dim; ++i) {
            const auto rp = child(o.ptr("diffusion"), i);
            auto row = str_list(rows[i], rp);
            if (row.size() != d.dim) schema(rp, "expected " + std::to_string(d.dim) + " entries");
            for (std::size_t k = 0; k < d.dim; ++k) check_expr(row[k], d.dim, child(rp, k));
            d.diffusion->push_back(std::move(row));
        }
    }
    if (o.has("lightcone")) {
        if (d.dim != 2) schema(o.ptr("lightcone"), "light-cone coefficients need dim 2");
        if (d.drift || d.diffusion) schema(o.ptr("lightcone"), "lightcone replaces drift and diffusion");
        Obj l(o.at("lightcone"), o.ptr("lightcone"), {"alpha", "beta", "omega"});
        d.lightcone = LightConeDescription{l.str("alpha"), l.str("beta"), l.str("omega", "0")};
        check_expr(d.lightcone->alpha, 1, l.ptr("alpha"));
        check_expr(d.lightcone->beta, 1, l.ptr("beta"));
        check_expr(d.lightcone->omega, 2, l.ptr("omega"));
    }
    if (o.has("jump")) d.jump = read_jump(o.at("jump"), o.ptr("jump"), d.dim);
    if (o.has("stable")) {
        Obj s(o.at("stable"), o.ptr("stable"), {"alpha", "amplitude"});
        d.stable = StableDescription{s.num("alpha"), s.str("amplitude", "1")};
        if (!(d.stable->alpha > 0.0 && d.stable->alpha <= 2.0)) schema(s.ptr("alpha"), "must lie in (0, 2]");
        check_expr(d.stable->amplitude, d.dim, s.ptr("amplitude"));
    }
    d.domain = o.str("domain", "full_space");
    one_of(d.domain, {"full_space", "half_line"}, o.ptr("domain"));
    d.boundary = o.str("boundary", "none");
    one_of(d.boundary, {"none", "reflect", "absorb"}, o.ptr("boundary"));
    if (d.domain == "half_line" && d.dim != 1) schema(o.ptr("domain"), "half_line needs dim 1");
    d.compensator_cutoff = o.num("compensator_cutoff", 1.0);
    if (!(d.compensator_cutoff > 0.0)) schema(o.ptr("compensator_cutoff"), "must be positive");
    if (!d.drift && !d.diffusion && !d.lightcone && !d.jump && !d.stable)
        schema(p, "at least one of drift, diffusion, lightcone, jump, stable is required");
    return d;
}

GridDescription read_grid(const json& j, const std::string& p, std::size_t dim) {
    Obj o(j, p, {"lower", "upper", "spacing", "boundary"});
    GridDescription g;
    g.lower = num_list(o.at("lower"), o.ptr("lower"));
    g.upper = num_list(o.at("upper"), o.ptr("upper"));
    g.spacing = num_list(o.at("spacing"), o.ptr("spacing"));
    for (const char* k : {"lower", "upper", "spacing"}) {
        const auto& v = std::string(k) == "lower" ? g.lower : std::string(k) == "upper" ? g.upper : g.spacing;
        if (v.size() != dim) schema(o.ptr(k), "expected " + std::to_string(dim) + " entries");
    }
    if (o.has("boundary")) {
        const auto& rows = array_at(o.at("boundary"), o.ptr("boundary"));
        if (rows.size() != dim) schema(o.ptr("boundary"), "expected " + std::to_string(dim) + " axes");
        for (std::size_t i = 0; i < dim; ++i) {
            const auto rp = child(o.ptr("boundary"), i);
            auto pair = str_list(rows[i], rp);
            if (pair.size() != 2) schema(rp, "expected [lower, upper]");
            for (std::size_t k = 0; k < 2; ++k) one_of(pair[k], {"truncate_mass", "reflect", "absorb"}, child(rp, k));
            g.boundary.push_back(std::move(pair));
        }
    }
    try {
        build_grid(g);
    } catch (const Error& e) {
        schema(p, e.what());
    }
    return g;
}

PairingDescription read_pairing(const json& j, const std::string& p, std::size_t dim) {
    Obj o(j, p, {"kind", "basis", "alpha"});
    PairingDescription c;
    c.kind = o.str("kind", "pareto");
    one_of(c.kind, {"pareto", "light_cone", "basis", "riesz", "newtonian", "log2d"}, o.ptr("kind"));
    c.alpha = o.num("alpha", 1.0);
    if (o.has("basis")) {
        const auto& rows = array_at(o.at("basis"), o.ptr("basis"));
        for (std::size_t i = 0; i < rows.size(); ++i) c.basis.push_back(num_list(rows[i], child(o.ptr("basis"), i)));
    }
    if (c.kind == "basis") {
        if (c.basis.size() != dim) schema(o.ptr("basis"), "expected " + std::to_string(dim) + " columns");
        for (std::size_t i = 0; i < dim; ++i)
            if (c.basis[i].size() != dim) schema(child(o.ptr("basis"), i), "expected " + std::to_string(dim) + " entries");
    } else if (!c.basis.empty()) {
        schema(o.ptr("basis"), "basis is only read for kind 'basis'");
    }
    if (c.kind == "light_cone" && dim != 2) schema(o.ptr("kind"), "light_cone needs dim 2");
    if (c.kind == "log2d" && dim != 2) schema(o.ptr("kind"), "log2d needs dim 2");
    if (c.kind == "newtonian" && dim < 3) schema(o.ptr("kind"), "newtonian needs dim >= 3");
    if (c.kind == "riesz" && !(c.alpha > 0.0 && c.alpha < static_cast<double>(dim)))
        schema(o.ptr("alpha"), "riesz exponent must lie in (0, dim)");
    return c;
}

PathDescription read_paths(const json& j, const std::string& p) {
    Obj o(j, p, {"n_paths", "dt", "seed", "scheme", "tail_truncation_quantile", "bridge_correction", "rate_bound"});
    PathDescription c;
    c.n_paths = static_cast<std::size_t>(o.uint("n_paths", c.n_paths));
    c.dt = o.num("dt", c.dt);
    c.seed = o.uint("seed", c.seed);
    c.scheme = o.str("scheme", c.scheme);
    one_of(c.scheme, {"euler_maruyama", "euler_jump_thinning", "stable_euler"}, o.ptr("scheme"));
    c.tail_truncation_quantile = o.num("tail_truncation_quantile", c.tail_truncation_quantile);
    c.bridge_correction = o.flag("bridge_correction", c.bridge_correction);
    c.rate_bound = o.num("rate_bound", c.rate_bound);
    if (c.n_paths < 100) schema(o.ptr("n_paths"), "at least 100 paths");
    if (!(c.dt > 0.0)) schema(o.ptr("dt"), "must be positive");
    if (!(c.tail_truncation_quantile > 0.5 && c.tail_truncation_quantile <= 1.0))
        schema(o.ptr("tail_truncation_quantile"), "must lie in (0.5, 1]");
    return c;
}

Tolerances read_tolerances(const json& j, const std::string& p) {
    Obj o(j, p, {"z_score", "closed_form", "residual", "oracle", "regularized", "margin"});
    Tolerances t;
    t.z_score = o.num("z_score", t.z_score);
    t.closed_form = o.num("closed_form", t.closed_form);
    t.residual = o.num("residual", t.residual);
    t.oracle = o.num("oracle", t.oracle);
    t.regularized = o.num("regularized", t.regularized);
    t.margin = static_cast<std::size_t>(o.uint("margin", t.margin));
    for (const char* k : {"z_score", "closed_form", "residual", "oracle", "regularized"})
        if (!(o.num(k, 1.0) > 0.0)) schema(o.ptr(k), "must be positive");
    return t;
}

RegularizationDescription read_regularization(const json& j, const std::string& p) {
    Obj o(j, p, {"boundary", "eps", "x", "t", "closed_form"});
    RegularizationDescription r;
    r.boundary = o.num("boundary", 0.0);
    r.eps = num_list(o.at("eps"), o.ptr("eps"));
    r.x = num_list(o.at("x"), o.ptr("x"));
    r.t = o.num("t", 1.0);
    r.closed_form = o.str("closed_form", "");
    if (!r.closed_form.empty()) one_of(r.closed_form, {"absorbed_bm"}, o.ptr("closed_form"));
    if (r.eps.size() < 3) schema(o.ptr("eps"), "at least three levels");
    for (std::size_t i = 0; i < r.eps.size(); ++i) {
        if (!(r.eps[i] > 0.0)) schema(child(o.ptr("eps"), i), "must be positive");
        if (i > 0 && !(r.eps[i] < r.eps[i - 1])) schema(child(o.ptr("eps"), i), "levels must decrease");
    }
    if (!(r.t > 0.0)) schema(o.ptr("t"), "must be positive");
    return r;
}

bool inside(const std::vector<double>& v, const GridDescription& g) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] < g.lower[i] - 1e-12 || v[i] > g.upper[i] + 1e-12) return false;
    return true;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string("/: invalid JSON: ") + e.what());
    }
    Obj o(j, "", {"name", "mode", "process", "dual_process", "grid", "cone", "probes", "path_config", "times",
                  "closed_form", "regularization", "tolerances", "output_dir"});
    Scenario s;
    s.name = o.str("name");
    const std::string mode = o.str("mode");
    if (mode == "dual") s.mode = Mode::dual;
    else if (mode == "verify-matrix") s.mode = Mode::verify_matrix;
    else if (mode == "mc") s.mode = Mode::mc;
    else if (mode == "self-dual-check") s.mode = Mode::self_dual_check;
    else one_of(mode, {"dual", "verify-matrix", "mc", "self-dual-check"}, "/mode");

    s.process = read_process(o.at("process"), "/process");
    const std::size_t d = s.process.dim;
    if (o.has("dual_process")) {
        s.dual_process = read_process(o.at("dual_process"), "/dual_process");
        if (s.dual_process->dim != d) schema("/dual_process/dim", "must match /process/dim");
    }
    if (o.has("grid")) s.grid = read_grid(o.at("grid"), "/grid", d);
    if (o.has("cone")) s.pairing = read_pairing(o.at("cone"), "/cone", d);
    else s.pairing = read_pairing(json::object(), "/cone", d);
    if (o.has("probes")) {
        const auto& arr = array_at(o.at("probes"), "/probes");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto p = child("/probes", i);
            Obj po(arr[i], p, {"x", "y", "t"});
            Probe pr{num_list(po.at("x"), po.ptr("x")), num_list(po.at("y"), po.ptr("y")), po.num("t", 1.0)};
            if (pr.x.size() != d) schema(po.ptr("x"), "expected " + std::to_string(d) + " entries");
            if (pr.y.size() != d) schema(po.ptr("y"), "expected " + std::to_string(d) + " entries");
            if (!(pr.t > 0.0)) schema(po.ptr("t"), "must be positive");
            if (s.grid && (!inside(pr.x, *s.grid) || !inside(pr.y, *s.grid)))
                schema(p, "probe " + std::to_string(i) + " lies outside the grid box");
            s.probes.push_back(std::move(pr));
        }
    }
    if (o.has("path_config")) s.path_config = read_paths(o.at("path_config"), "/path_config");
    if (o.has("times")) {
        s.times = num_list(o.at("times"), "/times");
        for (std::size_t i = 0; i < s.times.size(); ++i)
            if (!(s.times[i] >= 0.0)) schema(child("/times", i), "must be nonnegative");
    }
    s.closed_form = o.str("closed_form", "");
    if (!s.closed_form.empty()) one_of(s.closed_form, {"bm", "reflected_absorbed"}, "/closed_form");
    if (o.has("regularization")) s.regularization = read_regularization(o.at("regularization"), "/regularization");
    if (o.has("tolerances")) s.tolerances = read_tolerances(o.at("tolerances"), "/tolerances");
    s.output_dir = o.str("output_dir", "");

    switch (s.mode) {
        case Mode::verify_matrix:
            if (!s.grid) schema("/grid", "required for mode verify-matrix");
            break;
        case Mode::mc:
            if (!s.path_config) schema("/path_config", "required for mode mc");
            if (s.probes.empty() && !s.regularization) schema("/probes", "mode mc needs probes or a regularization block");
            break;
        case Mode::self_dual_check:
            if (d != 1) schema("/process/dim", "self-dual-check is one-dimensional");
            break;
        case Mode::dual:
            break;
    }
    if ((s.closed_form == "bm" || s.closed_form == "reflected_absorbed") && d != 1)
        schema("/closed_form", "closed forms are one-dimensional");
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::SchemaError, "/: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

namespace {

ojson write_process(const ProcessDescription& d) {
    ojson j;
    j["dim"] = d.dim;
    if (d.drift) j["drift"] = *d.drift;
    if (d.diffusion) j["diffusion"] = *d.diffusion;
    if (d.lightcone) j["lightcone"] = {{"alpha", d.lightcone->alpha}, {"beta", d.lightcone->beta}, {"omega", d.lightcone->omega}};
    if (d.jump) {
        ojson k;
        k["family"] = d.jump->family;
        if (d.jump->family == "atoms") {
            k["atoms"] = ojson::array();
            for (const auto& a : d.jump->atoms) {
                ojson aj;
                if (a.displacement) aj["displacement"] = *a.displacement;
                if (a.target) aj["target"] = *a.target;
                if (a.rate_table) aj["rate_table"] = *a.rate_table;
                else aj["rate"] = a.rate;
                if (a.axis >= 0) aj["axis"] = a.axis;
                k["atoms"].push_back(aj);
            }
        }
        k["separable"] = d.jump->separable;
        k["compensated"] = d.jump->compensated;
        k["rate"] = d.jump->rate;
        k["scale"] = d.jump->scale;
        j["jump"] = k;
    }
    if (d.stable) j["stable"] = {{"alpha", d.stable->alpha}, {"amplitude", d.stable->amplitude}};
    j["domain"] = d.domain;
    j["boundary"] = d.boundary;
    j["compensator_cutoff"] = d.compensator_cutoff;
    return j;
}

}  // namespace

std::string serialize(const Scenario& s) {
    ojson j;
    j["name"] = s.name;
    j["mode"] = mode_name(s.mode);
    j["process"] = write_process(s.process);
    if (s.dual_process) j["dual_process"] = write_process(*s.dual_process);
    if (s.grid) {
        ojson g{{"lower", s.grid->lower}, {"upper", s.grid->upper}, {"spacing", s.grid->spacing}};
        if (!s.grid->boundary.empty()) g["boundary"] = s.grid->boundary;
        j["grid"] = g;
    }
    j["cone"] = {{"kind", s.pairing.kind}, {"alpha", s.pairing.alpha}};
    if (!s.pairing.basis.empty()) j["cone"]["basis"] = s.pairing.basis;
    j["probes"] = ojson::array();
    for (const auto& p : s.probes) j["probes"].push_back({{"x", p.x}, {"y", p.y}, {"t", p.t}});
    if (s.path_config) {
        const auto& c = *s.path_config;
        j["path_config"] = {{"n_paths", c.n_paths},
                            {"dt", c.dt},
                            {"seed", c.seed},
                            {"scheme", c.scheme},
                            {"tail_truncation_quantile", c.tail_truncation_quantile},
                            {"bridge_correction", c.bridge_correction},
                            {"rate_bound", c.rate_bound}};
    }
    j["times"] = s.times;
    if (!s.closed_form.empty()) j["closed_form"] = s.closed_form;
    if (s.regularization) {
        const auto& r = *s.regularization;
        j["regularization"] = {{"boundary", r.boundary}, {"eps", r.eps}, {"x", r.x}, {"t", r.t}};
        if (!r.closed_form.empty()) j["regularization"]["closed_form"] = r.closed_form;
    }
    const auto& t = s.tolerances;
    j["tolerances"] = {{"z_score", t.z_score},         {"closed_form", t.closed_form}, {"residual", t.residual},
                       {"oracle", t.oracle},           {"regularized", t.regularized}, {"margin", t.margin}};
    if (!s.output_dir.empty()) j["output_dir"] = s.output_dir;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

Grid build_grid(const GridDescription& g) {
    std::vector<AxisBoundary> b;
    auto policy = [](const std::string& s) {
        if (s == "reflect") return BoundaryPolicy::reflect;
        if (s == "absorb") return BoundaryPolicy::absorb;
        return BoundaryPolicy::truncate_mass;
    };
    for (const auto& ax : g.boundary) b.push_back({policy(ax[0]), policy(ax[1])});
    return build_grid(g.lower, g.upper, g.spacing, b);
}

namespace {

JumpKernel build_kernel(const JumpDescription& jd, std::size_t dim, const std::optional<GridDescription>& grid) {
    JumpKernel k;
    k.compensated = jd.compensated;
    if (jd.family == "two_sided_exponential") {
        const double lam = jd.rate, s = jd.scale;
        k.family = JumpFamily::analytic;
        k.name = jd.family;
        k.params = {lam, s};
        k.density = [lam, s](const Vec& z, const Vec& w) { return lam / (2 * s) * std::exp(-std::abs(w[0] - z[0]) / s); };
        k.density_dz = [lam, s](const Vec& z, const Vec& w) {
            const double u = w[0] - z[0];
            return (u > 0 ? 1.0 : u < 0 ? -1.0 : 0.0) * lam / (2 * s * s) * std::exp(-std::abs(u) / s);
        };
        k.tail = [lam, s](const Vec& z, const Vec& w) {
            // nu(z, [w, inf)) for a target law centred at z
            const double u = (w[0] - z[0]) / s;
            return u >= 0 ? 0.5 * lam * std::exp(-u) : lam * (1.0 - 0.5 * std::exp(u));
        };
        k.total_rate = [lam](const Vec&) { return lam; };
        k.support_radius = 40.0 * s;
        k.rate_bound = lam;
        k.smoothness = 0;
        return k;
    }
    k.family = jd.separable ? JumpFamily::separable : JumpFamily::atomic;
    double bound = 0.0;
    for (const auto& ad : jd.atoms) {
        JumpAtom a;
        if (ad.displacement) {
            a.displacement = Eigen::Map<const Vec>(ad.displacement->data(), static_cast<Eigen::Index>(dim));
        } else {
            a.reset = true;
            a.target = Eigen::Map<const Vec>(ad.target->data(), static_cast<Eigen::Index>(dim));
            a.displacement = Vec::Zero(static_cast<Eigen::Index>(dim));
        }
        a.axis = ad.axis;
        if (ad.rate_table) {
            // piecewise linear in x1 over the grid points of axis 0
            if (!grid) throw Error(ErrorCode::SchemaError, "/process/jump: rate_table needs a grid");
            const double lo = grid->lower[0], h = grid->spacing[0];
            const std::vector<double> tab = *ad.rate_table;
            a.rate = Expr::constant(0.0);
            a.rate_fn = [tab, lo, h](const Vec& z) {
                const double u = (z[0] - lo) / h;
                if (u <= 0) return tab.front();
                const auto i = static_cast<std::size_t>(u);
                if (i + 1 >= tab.size()) return tab.back();
                const double f = u - static_cast<double>(i);
                return (1 - f) * tab[i] + f * tab[i + 1];
            };
            for (double v : tab) bound = std::max(bound, v);
        } else {
            a.rate = Expr::parse(ad.rate, dim);
        }
        k.atoms.push_back(std::move(a));
    }
    k.rate_bound = bound;
    return k;
}

}  // namespace

ProcessSpec build_process(const ProcessDescription& p, const std::optional<GridDescription>& grid) {
    ProcessSpec s;
    s.dim = p.dim;
    if (p.lightcone) {
        LightConeCoefficients c{Expr::parse(p.lightcone->alpha, 1), Expr::parse(p.lightcone->beta, 1),
                                Expr::parse(p.lightcone->omega, 2), {}, {}};
        s = lightcone_spec(c);
    }
    if (p.drift) {
        std::vector<Expr> b;
        for (const auto& t : *p.drift) b.push_back(Expr::parse(t, p.dim));
        s.drift = std::move(b);
    }
    if (p.diffusion) {
        std::vector<std::vector<Expr>> a;
        for (const auto& row : *p.diffusion) {
            a.emplace_back();
            for (const auto& t : row) a.back().push_back(Expr::parse(t, p.dim));
        }
        s.diffusion = std::move(a);
    }
    if (p.jump) s.jump = build_kernel(*p.jump, p.dim, grid);
    if (p.stable) s.stable = StableSpec{p.stable->alpha, Expr::parse(p.stable->amplitude, p.dim)};
    s.domain = p.domain == "half_line" ? Domain::half_line : Domain::full_space;
    s.boundary = p.boundary == "reflect"  ? HalfLineBoundary::reflect
                 : p.boundary == "absorb" ? HalfLineBoundary::absorb
                                          : HalfLineBoundary::none;
    s.compensator_cutoff = p.compensator_cutoff;
    return s;
}

PathConfig build_path_config(const PathDescription& p) {
    PathConfig c;
    c.n_paths = p.n_paths;
    c.dt = p.dt;
    c.seed = p.seed;
    c.scheme = p.scheme == "euler_jump_thinning" ? Scheme::euler_jump_thinning
               : p.scheme == "stable_euler"      ? Scheme::stable_euler
                                                 : Scheme::euler_maruyama;
    c.tail_truncation_quantile = p.tail_truncation_quantile;
    c.bridge_correction = p.bridge_correction;
    c.rate_bound = p.rate_bound;
    return c;
}

}  // namespace dualgen

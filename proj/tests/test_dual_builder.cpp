#include "doctest.h"

#include "dualgen/dual_builder.hpp"
#include "dualgen/error.hpp"
#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace dualgen;
using namespace testing_helpers;

namespace {

// Generator-level duality oracle for f(x, y) = 1{x >= y}: Q D = D QD^T.
Mat pareto_oracle(const Mat& q, const Grid& g) {
    const Mat d = duality_indicator_matrix(g, Cone::pareto(g.dim()));
    return (d.inverse() * q * d).transpose();
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

double drift_of(const DualReport& r, std::size_t i, const Vec& x) { return r.dual_spec->drift_at(i, x); }

}  // namespace

TEST_CASE("drift duals") {
    const auto r = dual_drift(diffusion_spec({"-x"}, {}));
    REQUIRE(r.admissible);
    CHECK(drift_of(r, 0, pt({0.7})) == doctest::Approx(0.7));
    CHECK(drift_of(dual_drift(diffusion_spec({"0"}, {})), 0, pt({3})) == 0.0);
    const auto r2 = dual_drift(diffusion_spec({"sin(x1)", "x2^3"}, {}));
    CHECK(drift_of(r2, 0, pt({0.3, 2})) == doctest::Approx(-std::sin(0.3)));
    CHECK(drift_of(r2, 1, pt({0.3, 2})) == doctest::Approx(-8.0));
    CHECK(code_of([] { dual_drift(diffusion_spec({"x2", "0"}, {})); }) == ErrorCode::NotSeparable);
}

TEST_CASE("diffusion duals") {
    const auto bm = dual_diffusion(spec1d("1", "0"));
    REQUIRE(bm.admissible);
    CHECK(drift_of(bm, 0, pt({0.4})) == 0.0);
    CHECK(bm.dual_spec->diffusion_at(0, 0, pt({0.4})) == 1.0);

    const auto sd = dual_diffusion(spec1d("1 + x^2", "x"));
    for (double x : {-0.8, 0.1, 0.9}) CHECK(drift_of(sd, 0, pt({x})) == doctest::Approx(x));

    const auto once = dual_diffusion(spec1d("x^2", "0"));
    CHECK(drift_of(once, 0, pt({0.5})) == doctest::Approx(1.0));
    const auto twice = dual_diffusion(*once.dual_spec);
    CHECK(std::abs(drift_of(twice, 0, pt({0.5}))) <= 1e-14);

    const auto bad = diffusion_spec({}, {{"1", "0.1*x3", "0"}, {"0.1*x3", "1", "0"}, {"0", "0", "1"}});
    CHECK(code_of([&] { dual_diffusion(bad); }) == ErrorCode::StructureViolation);
    try {
        dual_diffusion(bad);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("x3") != std::string::npos);
    }
}

TEST_CASE("involution and its fixed points") {
    const std::vector<std::vector<std::string>> a2 = {{"1 + 0.3*sin(x1)", "0.2*cos(x1 - x2)"},
                                                      {"0.2*cos(x1 - x2)", "2 + x2^2"}};
    const auto s = diffusion_spec({"x1^2 - 1", "exp(-x2)"}, a2);
    const auto back = *dual_diffusion(*dual_diffusion(s).dual_spec).dual_spec;
    for (const Vec& x : probe_points({-1, -1}, {1, 1}, 100))
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(std::abs(back.drift_at(i, x) - s.drift_at(i, x)) <= 1e-10);
            for (std::size_t j = 0; j < 2; ++j)
                CHECK(std::abs(back.diffusion_at(i, j, x) - s.diffusion_at(i, j, x)) <= 1e-10);
        }

    for (double eps : {0.0, 0.1}) {
        const auto s1 = spec1d("1 + x^2", "x + " + std::to_string(eps));
        const auto d = *dual_diffusion(s1).dual_spec;
        double gap = 0.0;
        for (const Vec& x : probe_points({-2}, {2}, 100)) gap = std::max(gap, std::abs(d.drift_at(0, x) - s1.drift_at(0, x)));
        const bool fixed = gap <= 1e-10;
        CHECK(fixed == check_self_dual(s1, {-2}, {2}).self_dual);
        CHECK(fixed == (eps == 0.0));
    }
}

TEST_CASE("self-duality characterization") {
    ProcessSpec s = spec1d("1 + x^2", "x");
    JumpKernel k;
    k.family = JumpFamily::analytic;
    k.density = [](const Vec& y, const Vec& z) { return std::exp(-std::abs(y[0] - z[0])); };
    k.density_dz = [](const Vec& y, const Vec& z) {
        const double u = y[0] - z[0];
        return -(u > 0 ? 1.0 : (u < 0 ? -1.0 : 0.0)) * std::exp(-std::abs(u));
    };
    s.jump = k;
    CHECK(check_self_dual(s, {-2}, {2}).self_dual);

    const auto nope = check_self_dual(spec1d("1", "1"), {-1}, {1});
    CHECK_FALSE(nope.self_dual);
    CHECK(nope.witness.has_value());

    ProcessSpec atoms = spec1d("1", "0");
    JumpKernel ka;
    ka.atoms = {atom({0.5}, "2", 1), atom({-0.5}, "2", 1)};
    atoms.jump = ka;
    CHECK(check_self_dual(atoms, {-1}, {1}).self_dual);
    ka.atoms[1] = atom({-0.5}, "1", 1);
    atoms.jump = ka;
    CHECK_FALSE(check_self_dual(atoms, {-1}, {1}).self_dual);

    // round trip through the full dual of a self-dual diffusion
    const auto sd = spec1d("1 + x^2", "x");
    const auto d = *dual_full_1d(sd, build_grid({-1}, {1}, {0.25})).dual_spec;
    for (const Vec& x : probe_points({-1}, {1}, 50)) {
        CHECK(d.drift_at(0, x) == doctest::Approx(sd.drift_at(0, x)));
        CHECK(d.diffusion_at(0, 0, x) == doctest::Approx(sd.diffusion_at(0, 0, x)));
    }
}

TEST_CASE("light-cone duals") {
    LightConeCoefficients c0{Expr::constant(1), Expr::constant(0.5), Expr::constant(0), {}, {}};
    const auto r0 = dual_lightcone_diffusion(c0, {-1, -1}, {1, 1});
    CHECK(drift_of(r0, 0, pt({0.2, 0.3})) == 0.0);
    CHECK(drift_of(r0, 1, pt({0.2, 0.3})) == 0.0);

    LightConeCoefficients c1{Expr::parse("x", 1), Expr::constant(0), Expr::constant(0), {}, {}};
    const auto r1 = dual_lightcone_diffusion(c1, {0.5, 0.5}, {1, 1});
    const Vec p = pt({0.7, 0.6});
    CHECK(r1.dual_spec->diffusion_at(0, 1, p) == doctest::Approx(1.3));
    CHECK(drift_of(r1, 0, p) == doctest::Approx(2.0));
    CHECK(drift_of(r1, 1, p) == doctest::Approx(2.0));

    // a light-cone-ordered diffusion with a = c = x + y is not PSD where x + y < 0
    CHECK(code_of([&] { dual_lightcone_diffusion(c1, {-1, -1}, {-0.5, -0.5}); }) == ErrorCode::PSDViolation);
}

TEST_CASE("light-cone drift agrees with the Pareto dual in cone coordinates") {
    // x = B alpha turns the light-cone order into the coordinate order.
    Mat B(2, 2);
    B << 1, -1, 1, 1;
    LightConeCoefficients c{Expr::parse("2 + sin(x)", 1), Expr::parse("1.5 + 0.5*x^2", 1),
                            Expr::parse("0.2*cos(x1)", 2), {}, {}};
    auto gap_for = [&](double factor) {
        const auto lc = dual_lightcone_diffusion(c, {-0.5, -0.5}, {0.5, 0.5}, factor);
        const auto via_pareto = *dual_diffusion(transform_spec(lightcone_spec(c), B), {-0.5, -0.5}, {0.5, 0.5}).dual_spec;
        const auto lc_alpha = transform_spec(*lc.dual_spec, B);
        double gap = 0.0;
        for (const Vec& a : probe_points({-0.5, -0.5}, {0.5, 0.5}, 100))
            for (std::size_t i = 0; i < 2; ++i) gap = std::max(gap, std::abs(via_pareto.drift_at(i, a) - lc_alpha.drift_at(i, a)));
        return gap;
    };
    CHECK(gap_for(2.0) <= 1e-10);
    CHECK(gap_for(4.0) > 0.1);
}

TEST_CASE("transform_spec covariance") {
    Mat B(2, 2);
    B << 2, 1, 0, 1;
    const auto s = diffusion_spec({"x1", "1"}, {{"1", "0.5"}, {"0.5", "2"}});
    const auto t = transform_spec(s, B);
    const Vec al = pt({0.3, -0.4});
    const Vec x = B * al;
    Vec b(2);
    b << s.drift_at(0, x), s.drift_at(1, x);
    const Vec expect_b = B.inverse() * b;
    CHECK(t.drift_at(0, al) == doctest::Approx(expect_b[0]));
    CHECK(t.drift_at(1, al) == doctest::Approx(expect_b[1]));
    const Mat expect_a = B.inverse() * s.diffusion_matrix(x) * B.inverse().transpose();
    CHECK((t.diffusion_matrix(al) - expect_a).norm() <= 1e-12);
}

TEST_CASE("1-D jump duals: constant-rate down-jump on a 30-state chain") {
    const Grid g = build_grid({0}, {29}, {1});
    JumpKernel k;
    k.atoms.push_back(atom({-1}, "1.5", 1));
    ProcessSpec s;
    s.jump = k;
    const auto r = dual_jump_1d(k, JumpBoundary::none, g);
    REQUIRE(r.admissible);
    REQUIRE(r.explicit_jump.has_value());
    CHECK(r.explicit_jump->atoms[0].displacement[0] == 1.0);

    const Mat q = discretize(s, g).entries;
    const Mat qd = discretize(*r.dual_spec, g).entries;
    // row 0 differs: the source loses mass through the truncated lower edge
    const Mat o = pareto_oracle(q, g);
    const Eigen::Index n = qd.rows();
    CHECK((qd.bottomRows(n - 1) - o.bottomRows(n - 1)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(qd(5, 6) == doctest::Approx(1.5));
    CHECK(qd(5, 5) == doctest::Approx(-1.5));
    // interior rows conserve mass
    for (Eigen::Index i = 0; i + 1 < qd.rows(); ++i) CHECK(std::abs(qd.row(i).sum()) <= 1e-10);
}

TEST_CASE("1-D jump duals: increasing and decreasing up-jump rates") {
    const Grid g = build_grid({-2}, {2}, {0.25});
    JumpKernel dec;
    dec.atoms.push_back(atom({1}, "exp(-x)", 1));
    const auto bad = dual_jump_1d(dec, JumpBoundary::none, g);
    CHECK_FALSE(bad.admissible);
    CHECK_FALSE(bad.dual_spec.has_value());
    REQUIRE(!bad.violated_conditions.empty());
    CHECK(bad.violated_conditions[0].condition_id == "monotonicity_below");
    CHECK(code_of([&] { bad.throw_if_inadmissible(); }) == ErrorCode::MonotonicityFail);
    // the oracle agrees: a negative off-diagonal dual rate away from the edges
    ProcessSpec sd;
    sd.jump = dec;
    const Mat od = pareto_oracle(discretize(sd, g).entries, g);
    double worst = 0.0;
    for (Eigen::Index y = 4; y < od.rows() - 4; ++y)
        for (Eigen::Index w = 0; w < od.cols(); ++w)
            if (w != y) worst = std::min(worst, od(y, w));
    CHECK(worst < -1e-6);

    // e^z on an up-jump is increasing: every lattice dual rate is nonnegative
    JumpKernel inc;
    inc.atoms.push_back(atom({1}, "exp(x)", 1));
    const auto ok = dual_jump_1d(inc, JumpBoundary::none, g);
    CHECK(ok.admissible);
    ProcessSpec si;
    si.jump = inc;
    const Mat oi = pareto_oracle(discretize(si, g).entries, g);
    const Mat qi = discretize(*ok.dual_spec, g).entries;
    for (Eigen::Index y = 0; y < oi.rows() - 4; ++y)
        for (Eigen::Index w = 0; w < oi.cols(); ++w) {
            if (w != y) CHECK(oi(y, w) >= -1e-10);
            CHECK(qi(y, w) == doctest::Approx(oi(y, w)).epsilon(1e-9).scale(1.0));
        }
}

TEST_CASE("1-D jump duals: tail condition") {
    JumpKernel k;
    JumpAtom reset = atom({0}, "1", 1);
    reset.reset = true;
    reset.target = pt({0});
    k.atoms.push_back(reset);
    const auto r = dual_jump_1d(k, JumpBoundary::none, build_grid({-1}, {1}, {0.5}));
    CHECK_FALSE(r.admissible);
    bool tail = false;
    for (const auto& v : r.violated_conditions) tail |= v.condition_id.rfind("tail", 0) == 0;
    CHECK(tail);
}

TEST_CASE("1-D jump duals: compensator integral") {
    const Grid g = build_grid({-2}, {2}, {0.25});
    JumpKernel sym;
    sym.compensated = true;
    sym.atoms = {atom({0.5}, "1", 1), atom({-0.5}, "1", 1)};
    const auto r = dual_jump_1d(sym, JumpBoundary::none, g);
    CHECK(r.admissible);
    REQUIRE(!r.compensator_probe.empty());
    for (const auto& [y, k] : r.compensator_probe) CHECK(std::abs(k) <= 1e-12);

    // Variable intensity c(z)|w - z|^{-2} on eps0 <= |w - z| <= 1.
    auto make = [](std::function<double(double)> c) {
        const double e0 = 1e-5;
        JumpKernel k;
        k.family = JumpFamily::analytic;
        k.compensated = true;
        k.support_radius = 1.0;
        k.total_rate = [c, e0](const Vec& z) { return 2.0 * c(z[0]) * (1.0 / e0 - 1.0); };
        k.tail = [c, e0](const Vec& z, const Vec& w) {
            const double u = w[0] - z[0], cz = c(z[0]);
            if (u > 1.0) return 0.0;
            if (u >= e0) return cz * (1.0 / u - 1.0);
            const double right = cz * (1.0 / e0 - 1.0);
            if (u > -e0) return right;
            if (u >= -1.0) return right + cz * (1.0 / e0 - 1.0 / -u);
            return 2.0 * right;
        };
        return k;
    };
    const Grid small = build_grid({-0.5}, {0.5}, {0.5});
    const auto smooth = dual_jump_1d(make([](double z) { return 1.0 + 0.5 * std::tanh(z); }), JumpBoundary::none, small);
    bool divergent = false;
    for (const auto& v : smooth.violated_conditions) divergent |= v.condition_id == "compensator_divergent";
    CHECK_FALSE(divergent);

    const auto jumpy = dual_jump_1d(make([](double z) { return z > 0 ? 2.0 : 1.0; }), JumpBoundary::none, small);
    divergent = false;
    for (const auto& v : jumpy.violated_conditions) divergent |= v.condition_id == "compensator_divergent";
    CHECK(divergent);
}

TEST_CASE("principal value moments") {
    // M = z (Lebesgue): the moment of a symmetric measure vanishes
    const auto pv = principal_value_moment([](double z) { return z; }, 0.3, 1.0);
    CHECK(pv.converged);
    CHECK(std::abs(pv.value) <= 1e-12);
    // dM = z^2 dz on [-1, 1] around 0: moment int z^3 = 0, around y: shift
    const auto pv2 = principal_value_moment([](double z) { return z * z * z / 3.0; }, 0.0, 1.0);
    CHECK(std::abs(pv2.value) <= 1e-12);
    // dM = dz / z: the moment density is 1, PV = 2c
    const auto pv3 = principal_value_moment([](double z) { return std::log(std::abs(z)); }, 0.0, 1.0);
    CHECK(pv3.value == doctest::Approx(2.0).epsilon(1e-3));
    // dM = 1{z > 0} dz / z^2: the moment integrand 1/z is not integrable at 0
    const auto div = principal_value_moment([](double z) { return z > 0 ? -1.0 / z : 0.0; }, 0.0, 1.0);
    CHECK_FALSE(div.converged);
}

TEST_CASE("monotone rate functions") {
    MonotoneRateFunction f;
    f.value = [](double z) { return std::exp(z); };
    f.derivative = [](double z) { return std::exp(z); };
    CHECK_FALSE(f.first_decrease(-1, 1).has_value());
    MonotoneRateFunction g;
    g.value = [](double z) { return -z * z; };
    const auto at = g.first_decrease(-1, 1);
    REQUIRE(at.has_value());
    CHECK(*at >= -1e-12);
    MonotoneRateFunction s;
    s.atoms = {{0.0, 1.0}, {0.5, -0.2}};
    s.density = [](double) { return 0.1; };
    CHECK(s.first_decrease(-1, 1).value() == 0.5);
    CHECK(s(0.25) == doctest::Approx(1.025));
}

TEST_CASE("multidimensional jump duals") {
    const Grid g = build_grid({0, 0}, {1.4, 1.4}, {0.2, 0.2});
    auto reset_atom = [](const std::string& rate, int axis) {
        JumpAtom a = atom({0, 0}, rate, 2);
        a.reset = true;
        a.target = pt({0, 0});
        a.axis = axis;
        return a;
    };
    JumpKernel sep;
    sep.family = JumpFamily::separable;
    sep.atoms = {reset_atom("exp(-x1)", 0), reset_atom("2 - x2", 1)};
    const auto ok = dual_jump_multidim(sep, g);
    CHECK(ok.admissible);

    JumpKernel inc = sep;
    inc.atoms[0] = reset_atom("exp(x1)", 0);
    const auto bad = dual_jump_multidim(inc, g);
    CHECK_FALSE(bad.admissible);
    CHECK(code_of([&] { bad.throw_if_inadmissible(); }) == ErrorCode::SignConditionFail);

    JumpKernel wrong_axis = sep;
    wrong_axis.atoms[0] = reset_atom("exp(-x2)", 0);
    CHECK(code_of([&] { dual_jump_multidim(wrong_axis, g); }) == ErrorCode::NotSeparable);

    JumpKernel tab;
    tab.atoms = {reset_atom("1", -1)};
    tab.atoms[0].rate_fn = [](const Vec&) { return 1.0; };
    CHECK(code_of([&] { dual_jump_multidim(tab, g); }) == ErrorCode::MissingDerivative);

    // constant in z: pure death in the interior, lost mass at the lower corner
    JumpKernel cst;
    cst.atoms = {reset_atom("1.5", -1)};
    const auto death = dual_jump_multidim(cst, g);
    REQUIRE(death.admissible);
    const Mat qd = discretize(*death.dual_spec, g).entries;
    const auto y = static_cast<Eigen::Index>(g.flat_index({3, 4}));
    CHECK(qd(y, y) == doctest::Approx(-1.5));
    for (Eigen::Index w = 1; w < qd.cols(); ++w)
        if (w != y) CHECK(qd(y, w) == 0.0);
}

TEST_CASE("product-form decreasing kernel matches the matrix oracle on 8x8") {
    const Grid g = build_grid({0, 0}, {1.4, 1.4}, {0.2, 0.2});
    JumpAtom a = atom({0, 0}, "4 - exp(0.2*x1)*exp(0.2*x2)", 2);
    a.reset = true;
    a.target = pt({0, 0});
    JumpKernel k;
    k.atoms = {a};
    const auto r = dual_jump_multidim(k, g);
    REQUIRE(r.admissible);
    ProcessSpec s;
    s.dim = 2;
    s.jump = k;
    const Mat q = discretize(s, g).entries;
    const Mat qd = discretize(*r.dual_spec, g).entries;
    CHECK((qd - pareto_oracle(q, g)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("full 1-D duals") {
    const Grid g = build_grid({0}, {3}, {0.25});
    const auto bm = dual_full_1d(spec1d("1", "0"), g);
    REQUIRE(bm.admissible);
    CHECK(bm.dual_spec->domain == Domain::full_space);

    ProcessSpec refl = spec1d("1", "0");
    refl.domain = Domain::half_line;
    refl.boundary = HalfLineBoundary::reflect;
    const auto ab = dual_full_1d(refl, g);
    REQUIRE(ab.admissible);
    CHECK(ab.dual_spec->boundary == HalfLineBoundary::absorb);
    CHECK(std::abs(ab.dual_spec->drift_at(0, pt({1.0}))) == 0.0);

    ProcessSpec odd_a = spec1d("1 + x", "0");
    odd_a.domain = Domain::half_line;
    CHECK(code_of([&] { dual_full_1d(odd_a, g); }) == ErrorCode::AssumptionAViolation);
    ProcessSpec even_b = spec1d("1", "x^2");
    even_b.domain = Domain::half_line;
    CHECK(code_of([&] { dual_full_1d(even_b, g); }) == ErrorCode::AssumptionAViolation);

    // lambda delta_{z-1} on the half line with h = 1
    const double lambda = 0.7;
    ProcessSpec hj;
    hj.domain = Domain::half_line;
    hj.boundary = HalfLineBoundary::reflect;
    JumpKernel k;
    k.atoms.push_back(atom({-1}, std::to_string(lambda), 1));
    hj.jump = k;
    const Grid gh = build_grid({0}, {6}, {1});
    const auto rj = dual_full_1d(hj, gh);
    REQUIRE(rj.admissible);
    const Mat qd = discretize(*rj.dual_spec, gh).entries;
    CHECK(qd(1, 0) == doctest::Approx(lambda));  // absorption: 0 >= y - 1 at y = 1
    CHECK(qd(3, 4) == doctest::Approx(lambda));  // up-jump
    CHECK(qd(3, 3) == doctest::Approx(-lambda));
    CHECK(qd(3, 2) == 0.0);
    CHECK(qd.row(0).cwiseAbs().sum() == 0.0);     // origin absorbing
}

TEST_CASE("random 1-D chains: lattice classifier agrees with the oracle") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> quarter(0, 8);
    const Grid g = build_grid({0}, {11}, {1});
    int agree = 0, total = 0;
    for (int trial = 0; trial < 60; ++trial) {
        JumpKernel k;
        for (int dlt : {-2, -1, 1, 2}) {
            std::vector<double> table(g.size());
            for (auto& v : table) v = 0.25 * quarter(rng);
            JumpAtom a = atom({static_cast<double>(dlt)}, "0", 1);
            a.rate_fn = [table, g](const Vec& z) {
                const long i = std::lround(z[0] - g.lower()[0]);
                return (i < 0 || i >= static_cast<long>(table.size())) ? 0.0 : table[static_cast<std::size_t>(i)];
            };
            k.atoms.push_back(a);
        }
        const bool admissible = dual_jump_1d(k, JumpBoundary::none, g).admissible;
        ProcessSpec s;
        s.jump = k;
        const Mat o = pareto_oracle(discretize(s, g).entries, g);
        double worst = 0.0;
        for (Eigen::Index y = 0; y < o.rows(); ++y)
            for (Eigen::Index w = 0; w < o.cols(); ++w)
                if (w != y) worst = std::min(worst, o(y, w));
        ++total;
        agree += (worst >= -1e-10) == admissible;
    }
    CHECK(agree == total);
}

TEST_CASE("discrete summation by parts in d = 1, 2, 3") {
    // sum_{z >= y} (D+_1..D+_d g)(z) phi(z)
    //   = (-1)^d sum_I sum_{z_I > y_I} g(y_{~I}, z_I) (D-_I phi)(y_{~I}, z_I)
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t d = 1; d <= 3; ++d) {
        const long n = 7;
        std::vector<long> shape(d, n);
        std::size_t size = 1;
        for (std::size_t i = 0; i < d; ++i) size *= static_cast<std::size_t>(n);
        auto flat = [&](const std::vector<long>& m) -> long {
            long f = 0;
            for (std::size_t i = 0; i < d; ++i) {
                if (m[i] < 0 || m[i] >= n) return -1;
                f = f * n + m[i];
            }
            return f;
        };
        std::vector<double> gv(size), phi(size);
        std::vector<long> m(d);
        for (std::size_t f = 0; f < size; ++f) {
            std::size_t r = f;
            bool border = false;
            for (std::size_t i = d; i-- > 0;) {
                m[i] = static_cast<long>(r % static_cast<std::size_t>(n));
                r /= static_cast<std::size_t>(n);
                border |= m[i] == 0 || m[i] >= n - 2;
            }
            gv[f] = border ? 0.0 : u(rng);  // compact support
            phi[f] = u(rng);
        }
        auto at = [&](const std::vector<double>& v, const std::vector<long>& idx) {
            const long f = flat(idx);
            return f < 0 ? 0.0 : v[static_cast<std::size_t>(f)];
        };
        // forward: sum_sub (-1)^{|mask \\ sub|} v(z + e_sub); backward: sum_sub (-1)^{|sub|} v(z - e_sub)
        auto mixed = [&](const std::vector<double>& v, const std::vector<long>& z, std::size_t mask, int dir) {
            double s = 0.0;
            for (std::size_t sub = 0; sub < (std::size_t{1} << d); ++sub) {
                if ((sub & mask) != sub) continue;
                std::vector<long> w = z;
                for (std::size_t i = 0; i < d; ++i)
                    if ((sub >> i) & 1U) w[i] += dir;
                const int flips = dir > 0 ? __builtin_popcountll(mask & ~sub) : __builtin_popcountll(sub);
                s += (flips % 2 ? -1.0 : 1.0) * at(v, w);
            }
            return s;
        };
        const std::vector<long> y(d, 2);
        double lhs = 0.0, rhs = 0.0;
        const std::size_t full = (std::size_t{1} << d) - 1;
        for (std::size_t f = 0; f < size; ++f) {
            std::size_t r = f;
            for (std::size_t i = d; i-- > 0;) m[i] = static_cast<long>(r % static_cast<std::size_t>(n)), r /= static_cast<std::size_t>(n);
            bool geq = true;
            for (std::size_t i = 0; i < d; ++i) geq &= m[i] >= y[i];
            if (geq) lhs += mixed(gv, m, full, +1) * phi[f];
        }
        for (std::size_t mask = 0; mask <= full; ++mask) {
            for (std::size_t f = 0; f < size; ++f) {
                std::size_t r = f;
                for (std::size_t i = d; i-- > 0;) m[i] = static_cast<long>(r % static_cast<std::size_t>(n)), r /= static_cast<std::size_t>(n);
                bool on = true;
                for (std::size_t i = 0; i < d; ++i) on &= ((mask >> i) & 1U) ? m[i] > y[i] : m[i] == y[i];
                if (on) rhs += at(gv, m) * mixed(phi, m, mask, -1);
            }
        }
        rhs *= (d % 2 ? -1.0 : 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

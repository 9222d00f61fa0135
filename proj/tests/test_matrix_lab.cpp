#include "doctest.h"

#include "dualgen/error.hpp"
#include "dualgen/matrix_lab.hpp"
#include "helpers.hpp"

#include <random>

using namespace dualgen;
using namespace testing_helpers;

namespace {

QMatrix random_q(const Grid& g, std::mt19937_64& rng, double density = 0.6) {
    std::uniform_real_distribution<double> u(0, 1);
    QMatrix q;
    q.grid = g;
    const auto n = static_cast<Eigen::Index>(g.size());
    q.entries = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && u(rng) < density) q.entries(i, j) = u(rng);
    for (Eigen::Index i = 0; i < n; ++i) q.entries(i, i) = -q.entries.row(i).sum();
    return q;
}

QMatrix from_rates(const Mat& off) {
    QMatrix q;
    q.grid = build_grid({0}, {static_cast<double>(off.rows() - 1)}, {1});
    q.entries = off;
    for (Eigen::Index i = 0; i < off.rows(); ++i) q.entries(i, i) = 0.0, q.entries(i, i) = -q.entries.row(i).sum();
    return q;
}

double inf_norm(const Mat& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

TEST_CASE("semigroup basics") {
    std::mt19937_64 rng(3);
    const Grid g = build_grid({0}, {5}, {1});
    const QMatrix q = random_q(g, rng);
    CHECK(semigroup(q, 0.0).T == Mat::Identity(6, 6));

    Mat two(2, 2);
    two << -1, 1, 1, -1;
    const auto t20 = semigroup(from_rates(two), 20.0);
    CHECK((t20.T.array() - 0.5).abs().maxCoeff() <= 1e-8);

    for (double s : {0.3, 1.0})
        for (double t : {0.2, 2.0})
            CHECK(inf_norm(semigroup(q, s + t).T - semigroup(q, s).T * semigroup(q, t).T) <= 1e-9);
    const auto snap = semigroup(q, 1.0);
    CHECK(snap.self_check <= 1e-10);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(snap.T.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(snap.T.minCoeff() >= -1e-10);

    try {
        semigroup(q, 1e12);
        FAIL("expected Overflow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Overflow);
    }
    QMatrix big;
    big.entries = Mat::Zero(static_cast<Eigen::Index>(kMaxStates + 1), 1);
    try {
        semigroup(big, 1.0);
        FAIL("expected TooManyStates");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooManyStates);
    }
}

TEST_CASE("dressing identity on random chains") {
    std::mt19937_64 rng(8);
    for (const Grid& g : {build_grid({0}, {7}, {1}), build_grid({0, 0}, {3, 2}, {1, 1})}) {
        const Cone c = Cone::pareto(g.dim());
        const Mat f = duality_indicator_matrix(g, c);
        for (int k = 0; k < 5; ++k) {
            const QMatrix q = random_q(g, rng);
            for (double t : {0.0, 0.1, 1.0, 5.0}) {
                const auto T = semigroup(q, t);
                const auto TD = dual_semigroup_via_F(q, g, c, t);
                const double r = duality_residual(T, TD, f);
                CHECK(r <= 1e-9);
                if (t == 0.0) CHECK(r == 0.0);
            }
            // the dual semigroup is again a semigroup
            const auto a = dual_semigroup_via_F(q, g, c, 0.4), b = dual_semigroup_via_F(q, g, c, 0.7),
                       ab = dual_semigroup_via_F(q, g, c, 1.1);
            CHECK(inf_norm(ab.T - a.T * b.T) <= 1e-9);
        }
    }
    // the light cone on a cone-commensurate 2-D grid
    const Grid g = build_grid({0, 0}, {3, 3}, {1, 1});
    const Cone lc = Cone::light_cone_2d();
    const QMatrix q = random_q(g, rng);
    CHECK(duality_residual(semigroup(q, 1.0), dual_semigroup_via_F(q, g, lc, 1.0), duality_indicator_matrix(g, lc)) <= 1e-9);
}

TEST_CASE("transpose is the wrong dual") {
    std::mt19937_64 rng(21);
    const Grid g = build_grid({0}, {4}, {1});
    const QMatrix q = random_q(g, rng, 1.0);
    const auto T = semigroup(q, 1.0);
    SemigroupSnapshot wrong = T;
    wrong.T = T.T.transpose();
    CHECK(duality_residual(T, wrong, duality_indicator_matrix(g, Cone::pareto(1))) > 0.01);
}

TEST_CASE("monotone birth-death chains have Markov duals") {
    const Grid g = build_grid({0}, {9}, {1});
    Mat off = Mat::Zero(10, 10);
    for (Eigen::Index i = 0; i < 10; ++i) {
        if (i + 1 < 10) off(i, i + 1) = 2.0 - 0.15 * static_cast<double>(i);  // decreasing birth
        if (i > 0) off(i, i - 1) = 0.5 + 0.2 * static_cast<double>(i);        // increasing death
    }
    QMatrix q = from_rates(off);
    for (double t : {0.05, 0.5, 3.0}) {
        const auto TD = dual_semigroup_via_F(q, g, Cone::pareto(1), t);
        CHECK(TD.T.minCoeff() >= -1e-10);
        CHECK(dual_stochasticity_check(TD, false).pass);
    }
    CHECK(dual_stochasticity_check(semigroup(q, 0.0), true).pass);
}

TEST_CASE("3-state non-monotone counterexample by brute force") {
    // Search all rate assignments in {0, 1, 2} for the first chain whose dual
    // has a negative entry at t = 0.05.
    const Grid g = build_grid({0}, {2}, {1});
    std::optional<Mat> found;
    for (int code = 0; code < 729 && !found; ++code) {
        Mat off = Mat::Zero(3, 3);
        int c = code;
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                if (i != j) off(i, j) = c % 3, c /= 3;
        const auto TD = dual_semigroup_via_F(from_rates(off), g, Cone::pareto(1), 0.05);
        if (TD.T.minCoeff() < -1e-6) found = off;
    }
    REQUIRE(found.has_value());
    const QMatrix q = from_rates(*found);
    CHECK_FALSE(stochastically_monotone(semigroup(q, 0.05).T));
    const auto rep = dual_stochasticity_check(dual_semigroup_via_F(q, g, Cone::pareto(1), 0.05), false);
    CHECK_FALSE(rep.pass);
    REQUIRE(!rep.violations.empty());
    CHECK(rep.violations.front().kind == "negative_entry");
    CHECK(rep.violations.front().value < -1e-6);
    MESSAGE("counterexample rates:\n" << *found);
}

TEST_CASE("reflected BM dualizes to absorbed BM") {
    ProcessSpec s = spec1d("0.5", "0");
    s.domain = Domain::half_line;
    s.boundary = HalfLineBoundary::reflect;
    const Grid g = build_grid({0}, {3.9}, {0.1}, {{BoundaryPolicy::reflect, BoundaryPolicy::reflect}});
    REQUIRE(g.size() == 40);
    const QMatrix q = discretize(s, g);
    const auto TD = dual_semigroup_via_F(q, g, Cone::pareto(1), 0.1);
    const auto rep = dual_stochasticity_check(TD, false);
    CHECK(rep.pass);
    CHECK(TD.T(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(TD.T.row(0).tail(39).cwiseAbs().maxCoeff() <= 1e-12);
    for (Eigen::Index y = 0; y <= 10; ++y) CHECK(std::abs(TD.T.row(y).sum() - 1.0) <= 1e-9);
}

TEST_CASE("Markov dual iff stochastically monotone on random 1-D chains") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> rate(0, 4);
    std::uniform_int_distribution<int> coin(0, 3);
    const Grid g = build_grid({0}, {5}, {1});
    int monotone = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Mat off = Mat::Zero(6, 6);
        for (Eigen::Index i = 0; i < 6; ++i)
            for (Eigen::Index j = std::max<Eigen::Index>(0, i - 2); j <= std::min<Eigen::Index>(5, i + 2); ++j)
                if (j != i && (std::abs(i - j) == 1 || coin(rng) == 0)) off(i, j) = 0.5 * rate(rng);
        const QMatrix q = from_rates(off);
        const bool mono = stochastically_monotone(semigroup(q, 0.5).T);
        monotone += mono;
        const bool markov = dual_stochasticity_check(dual_semigroup_via_F(q, g, Cone::pareto(1), 0.5), false).pass;
        CHECK(mono == markov);
    }
    CHECK(monotone > 0);
    CHECK(monotone < 200);
}

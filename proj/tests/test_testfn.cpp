#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "eqlab/measures.hpp"
#include "eqlab/rng.hpp"
#include "eqlab/stats.hpp"
#include "eqlab/testfn.hpp"

using namespace eqlab;
using namespace eqlab::testfn;

namespace {

hyp::PTStructure shell(double l, double tau) {
    double x = 2.0 * std::cosh(l / 2.0);
    double yz = x / std::sqrt(x - 2.0);
    hyp::PTStructure base{x, yz, yz};
    return tau == 0.0 ? base : quake::earthquake_pt(base, {1, 0}, tau);
}

hyp::HyperbolicStructure shell_h(double l, double tau) {
    return hyp::HyperbolicStructure::torus(shell(l, tau));
}

// a >= 0 with l_(a,b)(X) = 1 for fixed b (unit-sphere section).
double solve_a(const hyp::PTStructure& X, double b) {
    hyp::TraceCache c(X);
    double lo = 0.0, hi = (1.0 + b * c.length({0, 1})) / c.length({1, 0}) + 1.0;
    REQUIRE(c.lamination_length(hi, b, 1e-9).value > 1.0);
    REQUIRE(b * c.length({0, 1}) < 1.0);
    for (int it = 0; it < 70; ++it) {
        double mid = 0.5 * (lo + hi);
        (c.lamination_length(mid, b, 1e-10).value < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

quake::UnitLaminationPoint unit_point(const hyp::PTStructure& X, double b) {
    quake::UnitLaminationPoint pt;
    pt.X = hyp::HyperbolicStructure::torus(X);
    pt.lam = curves::MeasuredLamination::torus(solve_a(X, b), b);
    pt.validate(1e-8);
    return pt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

TEST_CASE("choose_eps0 arithmetic and monotonicity") {
    CHECK(choose_eps0(0.5, 1.0, 0.9) == doctest::Approx(0.075).epsilon(1e-14));
    double prev = 1e300;
    for (double C : {0.5, 1.0, 2.0, 4.0}) {
        double e = choose_eps0(0.5, C, 0.9);
        CHECK(e * (2.0 + C) < 0.25);
        CHECK(e < prev);
        prev = e;
    }
    CHECK_THROWS_AS(choose_eps0(0.5, 1.0, 1.5), invalid_input);
    CHECK_THROWS_AS(choose_eps0(-1.0, 1.0, 0.5), invalid_input);
}

TEST_CASE("parameter validation enforces the scale constraints") {
    SurfaceSpec pt = SurfaceSpec::punctured_torus();
    TestFnParams good{choose_eps0(0.5, 1.0, 0.9), 0.1, 0.5, 1.0};
    good.validate(pt);
    TestFnParams too_big_eps = good;
    too_big_eps.eps0 = 0.1;  // 0.1 * 3 >= 0.25
    CHECK_THROWS_AS(too_big_eps.validate(pt), invalid_input);
    TestFnParams too_big_mu = good;
    too_big_mu.mu = 0.5;  // mu * collar_R(0.075) ~ 4
    CHECK_THROWS_AS(too_big_mu.validate(pt), invalid_input);
    TestFnParams big_rho = good;
    big_rho.rho = hyp::K_sys_bound(pt) + 0.1;
    CHECK_THROWS_AS(big_rho.validate(pt), invalid_input);
    TestFnParams neg = good;
    neg.C = -1.0;
    CHECK_THROWS_AS(neg.validate(pt), invalid_input);
}

// ---------------------------------------------------------------------------
// Short curves
// ---------------------------------------------------------------------------

TEST_CASE("short_curves: thick surface has none") {
    CHECK(short_curves(hyp::HyperbolicStructure::torus(hyp::PTStructure::modular()), 0.5).empty());
}

TEST_CASE("short_curves: pinched surface has exactly the pinching curve") {
    auto sc = short_curves(shell_h(0.25, 0.3), 0.3);
    REQUIRE(sc.size() == 1);
    CHECK(sc[0].curve.slope == curves::Slope{1, 0});
    CHECK(sc[0].length == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("short_curves: at most one on the punctured torus below the disjointness threshold") {
    Rng rng(5150);
    for (int i = 0; i < 40; ++i) {
        double l = rng.uniform(0.2, 1.6);
        auto sc = short_curves(shell_h(l, l * rng.uniform()), 1.7);
        CHECK(sc.size() <= 1);  // xi = 1: short curves are disjoint, and
                                // disjoint simple closed curves coincide here
    }
}

TEST_CASE("short_curves: genus-2 pants curves filter by length") {
    hyp::FNStructure fn;
    fn.l = {0.3, 2.0, 0.25};
    auto sc = short_curves(hyp::HyperbolicStructure::genus2(fn), 0.4);
    REQUIRE(sc.size() == 2);
    CHECK(sc[0].curve.pants_index == 1);
    CHECK(sc[1].curve.pants_index == 3);
}

// ---------------------------------------------------------------------------
// g, j, f, gD point values
// ---------------------------------------------------------------------------

TEST_CASE("eval_g reproduces the ramp values") {
    const double eps0 = 0.3;
    CHECK(eval_g(shell_h(0.75 * eps0, 0.0), eps0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_g(shell_h(0.5 * eps0, 0.0), eps0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eval_g(shell_h(7.0 * eps0 / 12.0, 0.0), eps0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(eval_g(hyp::HyperbolicStructure::torus(hyp::PTStructure::modular()), eps0) == 0.0);
}

TEST_CASE("eval_g matches its closed form on a fine grid") {
    const double eps0 = 0.3;
    for (int i = 0; i < 1000; ++i) {
        double l = eps0 * (0.40 + 0.8 * i / 999.0);
        hyp::HyperbolicStructure X = shell_h(l, 0.0);
        double ls = hyp::systole(X).l_sys;
        double expect = std::min(1.0, std::max(0.0, std::min((6.0 / eps0) * (ls - eps0 / 2.0),
                                                             (6.0 / eps0) * (eps0 - ls))));
        CHECK(eval_g(X, eps0) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("eval_j reproduces the alignment ramp") {
    const double eps0 = 0.3, mu = 0.1;
    hyp::PTStructure X = shell(0.25, 0.1);  // single short curve (1,0); i = b
    CHECK(eval_j(unit_point(X, mu / 2.0), mu, eps0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_j(unit_point(X, 3.0 * mu / 4.0), mu, eps0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(eval_j(unit_point(X, 1.05 * mu), mu, eps0) == 0.0);
    // empty product on a thick surface
    quake::UnitLaminationPoint thick = unit_point(hyp::PTStructure::modular(), 0.1);
    CHECK(eval_j(thick, mu, eps0) == 1.0);
}

TEST_CASE("eval_f: plateau and support") {
    TestFnParams p{0.075, 0.1, 0.5, 1.0};
    p.validate(SurfaceSpec::punctured_torus());
    // inner region: middle systole band, intersection under half the aperture
    quake::UnitLaminationPoint inner = unit_point(shell(0.75 * p.eps0, 0.02), 0.4 * p.mu);
    CHECK(eval_f(inner, p) == doctest::Approx(1.0).epsilon(1e-12));
    // thick surface: g vanishes
    quake::UnitLaminationPoint thick = unit_point(hyp::PTStructure::modular(), 0.05);
    CHECK(eval_f(thick, p) == 0.0);
}

TEST_CASE("the support of f is inside the thin-and-aligned region") {
    TestFnParams p{0.075, 0.1, 0.5, 1.0};
    Rng rng(77);
    std::size_t positives = 0;
    for (int i = 0; i < 1500; ++i) {
        double l = p.eps0 * rng.uniform(0.3, 1.3);
        hyp::PTStructure X = shell(l, l * rng.uniform());
        double bmax = std::min(2.0 * p.mu, 0.9 / hyp::TraceCache(X).length({0, 1}));
        quake::UnitLaminationPoint pt = unit_point(X, bmax * rng.uniform());
        double f = eval_f(pt, p);
        REQUIRE(f >= 0.0);
        REQUIRE(f <= 1.0);
        if (f == 0.0) continue;
        ++positives;
        double ls = hyp::systole(pt.X).l_sys;
        REQUIRE(ls > p.eps0 / 2.0);
        REQUIRE(ls < p.eps0);
        for (const auto& sc : short_curves(pt.X, p.eps0))
            REQUIRE(curves::intersection(pt.lam, sc.curve) < p.mu);
    }
    CHECK(positives > 100);  // the sweep hit the support
}

TEST_CASE("f and gD are mapping-class invariant") {
    TestFnParams p{0.075, 0.1, 0.5, 1.0};
    Rng rng(31337);
    std::vector<std::string> words = {"A", "b", "AB", "aBb", "ABab", "BBaA"};
    for (int i = 0; i < 12; ++i) {
        double l = p.eps0 * rng.uniform(0.55, 0.95);
        hyp::PTStructure X = shell(l, l * rng.uniform());
        double b = std::min(p.mu * rng.uniform(0.2, 1.2),
                            0.9 / hyp::TraceCache(X).length({0, 1}));
        quake::UnitLaminationPoint pt = unit_point(X, b);
        double f0 = eval_f(pt, p);
        double g0 = eval_gD(pt.X, p.rho);
        for (const auto& wtext : words) {
            curves::MarkingWord h = curves::parse_word(Backend::PuncturedTorus, wtext);
            quake::UnitLaminationPoint moved;
            moved.X = hyp::act(h, pt.X);
            moved.lam = curves::act(h, pt.lam);
            CHECK(eval_f(moved, p) == doctest::Approx(f0).epsilon(1e-9));
            CHECK(eval_gD(moved.X, p.rho) == doctest::Approx(g0).epsilon(1e-9));
        }
    }
}

TEST_CASE("eval_gD reproduces the thick-part ramp") {
    const double rho = 0.5;
    CHECK(eval_gD(shell_h(rho / 2.0, 0.0), rho) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eval_gD(shell_h(5.0 * rho / 8.0, 0.0), rho) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(eval_gD(hyp::HyperbolicStructure::torus(hyp::PTStructure::modular()), rho) == 1.0);
}

// ---------------------------------------------------------------------------
// Empirical Lipschitz norm
// ---------------------------------------------------------------------------

TEST_CASE("empirical_lip_norm: constants have no Lipschitz part") {
    TestFnParams p{0.075, 0.1, 0.5, 1.0};
    LipschitzFunction fn{[](const quake::UnitLaminationPoint&) { return 0.37; }, 0.5};
    auto est = empirical_lip_norm(fn, ramp_pair_sampler(p, 9), 50, 1);
    CHECK(est.lip_lower == 0.0);
    CHECK(est.sup_observed == doctest::Approx(0.37).epsilon(1e-14));
    CHECK(est.pairs_used == 50);
    CHECK(est.norm_lower() == doctest::Approx(0.37).epsilon(1e-14));
}

TEST_CASE("empirical_lip_norm rejects sup-bound violations") {
    TestFnParams p{0.075, 0.1, 0.5, 1.0};
    LipschitzFunction fn{[](const quake::UnitLaminationPoint&) { return 0.37; }, 0.1};
    CHECK_THROWS_AS(empirical_lip_norm(fn, ramp_pair_sampler(p, 9), 5, 0), invalid_input);
}

TEST_CASE("pair sampler is deterministic and produces unit points") {
    TestFnParams p{0.075, 0.1, 0.5, 1.0};
    auto sampler = ramp_pair_sampler(p, 123);
    for (std::uint64_t i = 0; i < 10; ++i) {
        auto [x, y] = sampler(i);
        x.validate(1e-8);
        y.validate(1e-8);
        auto [x2, y2] = sampler(i);
        CHECK(x2.lam.a == x.lam.a);
        CHECK(y2.lam.b == y.lam.b);
        CHECK(x2.X.pt.x == x.X.pt.x);
    }
}

TEST_CASE("marking search can only sharpen the lower estimate") {
    TestFnParams p{0.075, 0.125, 0.5, 1.0};
    LipschitzFunction fn{
        [p](const quake::UnitLaminationPoint& pt) { return eval_f(pt, p); }, 1.0};
    auto sampler = ramp_pair_sampler(p, 2717);
    auto d0 = empirical_lip_norm(fn, sampler, 120, 0);
    auto d1 = empirical_lip_norm(fn, sampler, 120, 1);
    CHECK(d0.lip_lower > 0.0);
    CHECK(d1.lip_lower >= d0.lip_lower - 1e-12);
    CHECK(d1.sup_observed == d0.sup_observed);
}

TEST_CASE("the systole bump alone stays under its analytic norm bound") {
    TestFnParams p{0.075, 0.1, 0.5, 1.0};
    LipschitzFunction fn{
        [p](const quake::UnitLaminationPoint& pt) { return eval_g(pt.X, p.eps0); }, 1.0};
    auto est = empirical_lip_norm(fn, ramp_pair_sampler(p, 404), 300, 1);
    double bound =
        (6.0 / p.eps0) * hyp::sys_lip_bound(SurfaceSpec::punctured_torus(), p.eps0 / 2.0) + 1.0;
    CHECK(est.norm_lower() <= bound);
}

TEST_CASE("the Lipschitz estimate scales inversely with the aperture") {
    const double rho = 0.5, C = 1.0;
    std::vector<double> lx, ly;
    for (int k = 3; k <= 6; ++k) {
        double mu = std::pow(2.0, -k);
        TestFnParams p{choose_eps0(rho, C, 0.9), mu, rho, C};
        p.validate(SurfaceSpec::punctured_torus());
        LipschitzFunction fn{
            [p](const quake::UnitLaminationPoint& pt) { return eval_f(pt, p); }, 1.0};
        auto est = empirical_lip_norm(fn, ramp_pair_sampler(p, 11), 400, 0);
        REQUIRE(est.lip_lower > 0.0);
        lx.push_back(std::log(mu));
        ly.push_back(std::log(est.lip_lower));
    }
    auto fit = stats::ols(lx, ly);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(0.1));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "eqlab/curves.hpp"
#include "eqlab/hyperbolic.hpp"

using namespace eqlab;
using namespace eqlab::curves;
using namespace eqlab::hyp;

namespace {

// Independent oracle: explicit SL(2,R) holonomy. A is diagonalizable with
// trace x, B lower-triangular-ish with trace y, tau chosen so tr(AB) = z.
// The word of a slope is built by Stern-Brocot descent (mediant = L*R).
struct M2 {
    long double a, b, c, d;
};

M2 mul(const M2& m, const M2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c,
            m.c * n.b + m.d * n.d};
}

long double oracle_trace(double x, double y, double z, std::int64_t p, std::int64_t q) {
    long double lam = (static_cast<long double>(x) + std::sqrt(static_cast<long double>(x) * x - 4)) / 2;
    long double mu = (static_cast<long double>(y) + std::sqrt(static_cast<long double>(y) * y - 4)) / 2;
    long double tau = static_cast<long double>(z) - lam * mu - 1 / (lam * mu);
    M2 A{lam, 1, 0, 1 / lam};
    M2 Ainv{1 / lam, -1, 0, lam};
    M2 B{mu, 0, tau, 1 / mu};
    if (q == 0) return A.a + A.d;
    if (p == 0) return B.a + B.d;
    bool mirror = p < 0;
    if (mirror) p = -p;
    M2 L = mirror ? Ainv : A, R = B;
    std::int64_t lp = 1, lq = 0, rp = 0, rq = 1;
    while (true) {
        std::int64_t mp = lp + rp, mq = lq + rq;
        M2 M = mul(L, R);
        std::int64_t cr = mp * q - mq * p;  // cross(med, target)
        if (cr == 0) return M.a + M.d;
        if (cr > 0) {  // target in the cone (med, R)
            L = M;
            lp = mp;
            lq = mq;
        } else {
            R = M;
            rp = mp;
            rq = mq;
        }
    }
}

const double kSqrt11 = std::sqrt(11.0);

PTStructure asym() { return PTStructure{3.0, 4.0, 6.0 + kSqrt11}; }

}  // namespace

TEST_CASE("log-trace / length conversions") {
    double l = length_from_log_trace(std::log(3.0));
    CHECK(l == doctest::Approx(2.0 * std::acosh(1.5)).epsilon(1e-14));
    CHECK(l == doctest::Approx(1.9248473002384139).epsilon(1e-13));
    for (double len : {0.5, 1.9248473002384139, 10.0, 300.0, 670.0}) {
        CHECK(length_from_log_trace(log_trace_from_length(len)) ==
              doctest::Approx(len).epsilon(1e-12));
    }
    // near the parabolic boundary
    double lt = log_trace_from_length(1e-5);
    CHECK(length_from_log_trace(lt) == doctest::Approx(1e-5).epsilon(1e-6));
    CHECK(log_trace_combine(std::log(3.0), std::log(3.0), std::log(3.0)) ==
          doctest::Approx(std::log(6.0)).epsilon(1e-14));
    CHECK_THROWS_AS(log_trace_combine(std::log(2.0), std::log(2.0), std::log(5.0)),
                    internal_error);
}

TEST_CASE("frozen traces on the square punctured torus") {
    PTStructure X = PTStructure::modular();
    X.validate();
    CHECK(trace_of_slope(X, {1, 1}) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(trace_of_slope(X, {2, 1}) == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(trace_of_slope(X, {1, 2}) == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(trace_of_slope(X, {3, 1}) == doctest::Approx(15.0).epsilon(1e-13));
    CHECK(trace_of_slope(X, {1, 3}) == doctest::Approx(15.0).epsilon(1e-13));
    CHECK(trace_of_slope(X, {4, 1}) == doctest::Approx(39.0).epsilon(1e-13));
    CHECK(trace_of_slope(X, {5, 3}) == doctest::Approx(87.0).epsilon(1e-13));
    CHECK(trace_of_slope(X, {-1, 1}) == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(trace_of_slope(X, {-2, 1}) == doctest::Approx(15.0).epsilon(1e-13));
}

TEST_CASE("trace engine agrees with explicit holonomy matrices") {
    std::vector<PTStructure> structures{PTStructure::modular(), asym()};
    // a visibly twisted structure, still on the variety
    structures.push_back(act(parse_word(Backend::PuncturedTorus, "AAB").matrix(),
                             PTStructure::modular()));
    for (const auto& X : structures) {
        X.validate(1e-9);
        for (const auto& g : enumerate_curves(SurfaceSpec::punctured_torus(), 12)) {
            double mine = trace_of_slope(X, g.slope);
            long double ref = oracle_trace(X.x, X.y, X.z, g.slope.p, g.slope.q);
            CHECK(mine == doctest::Approx(static_cast<double>(ref)).epsilon(1e-9));
        }
    }
    // a deep Fibonacci slope exercises the run fast-forward path
    double mine = trace_of_slope(PTStructure::modular(), {89, 55});
    long double ref = oracle_trace(3, 3, 3, 89, 55);
    CHECK(mine == doctest::Approx(static_cast<double>(ref)).epsilon(1e-10));
}

TEST_CASE("trace cache memoizes consistently and from_log_traces matches") {
    TraceCache c1(PTStructure::modular());
    double a = c1.log_trace({7, 5});
    CHECK(c1.log_trace({7, 5}) == a);
    CHECK(c1.log_trace({-7, 5}) == c1.log_trace({7, -5}));
    TraceCache c2 = TraceCache::from_log_traces(std::log(3.0), std::log(3.0), std::log(3.0));
    CHECK(c2.log_trace({7, 5}) == doctest::Approx(a).epsilon(1e-14));
    CHECK_THROWS_AS(TraceCache::from_log_traces(std::log(3.0), std::log(3.0), std::log(30.0)),
                    invalid_input);
}

TEST_CASE("markov renormalization projects small drift") {
    PTStructure X{3.0, 4.0, 6.0 + kSqrt11 + 1e-8};
    PTStructure R = X.renormalized();
    R.validate(1e-12);
    // projection moves the triple by no more than the injected drift scale
    CHECK(std::abs(R.x - X.x) + std::abs(R.y - X.y) + std::abs(R.z - X.z) < 1e-7);
    CHECK_THROWS_AS((PTStructure{3.0, 4.0, 8.0}.validate(1e-9)), invalid_input);
}

TEST_CASE("lamination length: rational directions are exact curve lengths") {
    TraceCache c(PTStructure::modular());
    double l11 = c.length({1, 1});
    auto r = c.lamination_length(2.0, 2.0);
    CHECK(r.value == doctest::Approx(2.0 * l11).epsilon(1e-13));
    auto r2 = c.lamination_length(2.0, 4.0);
    CHECK(r2.value == doctest::Approx(2.0 * c.length({1, 2})).epsilon(1e-13));
    auto raxis = c.lamination_length(0.0, 3.0);
    CHECK(raxis.value == doctest::Approx(3.0 * c.length({0, 1})).epsilon(1e-13));
    CHECK_THROWS_AS(c.lamination_length(0.0, 0.0), invalid_input);
}

TEST_CASE("lamination length: irrational directions converge") {
    TraceCache c(asym());
    double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    auto coarse = c.lamination_length(phi, 1.0, 1e-6);
    auto fine = c.lamination_length(phi, 1.0, 1e-11);
    CHECK(fine.tol_achieved <= 1e-11 * std::max(1.0, fine.value));
    CHECK(coarse.value == doctest::Approx(fine.value).epsilon(1e-5));
    CHECK(fine.depth >= coarse.depth);
    // homogeneity
    auto dbl = c.lamination_length(2.0 * phi, 2.0, 1e-11);
    CHECK(dbl.value == doctest::Approx(2.0 * fine.value).epsilon(1e-9));
}

TEST_CASE("enumeration by length on the square torus") {
    PTStructure X = PTStructure::modular();
    auto shell1 = enumerate_by_length(X, 2.0);
    REQUIRE(shell1.size() == 3);
    std::set<std::pair<std::int64_t, std::int64_t>> s;
    for (const auto& cl : shell1) {
        CHECK(cl.length == doctest::Approx(2.0 * std::acosh(1.5)).epsilon(1e-12));
        s.insert({cl.slope.p, cl.slope.q});
    }
    CHECK(s == std::set<std::pair<std::int64_t, std::int64_t>>{{1, 0}, {0, 1}, {1, 1}});
    auto shell2 = enumerate_by_length(X, 2.0 * std::acosh(3.0) + 0.01);
    CHECK(shell2.size() == 6);  // adds (2,1), (1,2), (-1,1), all of trace 6
    CHECK_THROWS_AS(enumerate_by_length(X, 20.0, 16), budget_exceeded);
}

TEST_CASE("enumeration by length matches a brute-force box sweep") {
    for (PTStructure X :
         {asym(), act(parse_word(Backend::PuncturedTorus, "ABBA").matrix(), asym())}) {
        double lmax = 6.0;
        auto found = enumerate_by_length(X, lmax);
        std::set<std::pair<std::int64_t, std::int64_t>> mine;
        for (const auto& cl : found) mine.insert({cl.slope.p, cl.slope.q});
        CHECK(mine.size() == found.size());
        TraceCache c(X);
        std::set<std::pair<std::int64_t, std::int64_t>> ref;
        for (const auto& g : enumerate_curves(SurfaceSpec::punctured_torus(), 60))
            if (c.length(g.slope) <= lmax) ref.insert({g.slope.p, g.slope.q});
        CHECK(mine == ref);
        for (const auto& cl : found)
            CHECK(cl.length == doctest::Approx(c.length(cl.slope)).epsilon(1e-12));
    }
}

TEST_CASE("systole bound and certified systole") {
    CHECK(K_sys_bound(SurfaceSpec::punctured_torus()) ==
          doctest::Approx(2.0 * std::acosh(2.0)).epsilon(1e-15));
    CHECK(K_sys_bound(SurfaceSpec::genus_two()) ==
          doctest::Approx(2.0 * std::acosh(3.0)).epsilon(1e-15));

    auto X = HyperbolicStructure::torus(PTStructure::modular());
    auto sys = systole(X);
    CHECK(sys.l_sys == doctest::Approx(2.0 * std::acosh(1.5)).epsilon(1e-13));
    CHECK(sys.systoles.size() == 3);
    CHECK(sys.l_sys <= K_sys_bound(SurfaceSpec::punctured_torus()));

    // the marking action preserves the length spectrum
    for (const char* word : {"A", "ABab", "AABBa"}) {
        auto h = parse_word(Backend::PuncturedTorus, word);
        auto Y = HyperbolicStructure::torus(act(h.matrix(), X.pt));
        CHECK(systole(Y).l_sys == doctest::Approx(sys.l_sys).epsilon(1e-12));
    }

    hyp::FNStructure fn;
    fn.l = {1.0, 2.0, 3.0};
    auto g2 = systole(HyperbolicStructure::genus2(fn));
    CHECK(g2.l_sys == 1.0);
    REQUIRE(g2.systoles.size() == 1);
    CHECK(g2.systoles[0].pants_index == 1);
}

TEST_CASE("thurston distances") {
    auto X = HyperbolicStructure::torus(PTStructure::modular());
    CHECK(thurston_distance(X, X, 10) == doctest::Approx(0.0));

    hyp::FNStructure a, b;
    a.l = {1.0, 1.0, 1.0};
    b.l = {2.0, 2.0, 2.0};
    auto A = HyperbolicStructure::genus2(a), B = HyperbolicStructure::genus2(b);
    CHECK(thurston_distance_asym(B, A, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(thurston_distance_asym(A, B, 1) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
    CHECK(thurston_distance(A, B, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    auto Y = HyperbolicStructure::torus(asym());
    double d = thurston_distance(X, Y, 30);
    CHECK(d > 0.0);
    CHECK(d >= thurston_distance_asym(X, Y, 30));
    CHECK(d >= thurston_distance_asym(Y, X, 30));
}

TEST_CASE("closed-form systole Lipschitz bound") {
    auto spec = SurfaceSpec::punctured_torus();
    double K = K_sys_bound(spec);
    for (double eps : {0.05, 0.2, 0.7}) {
        double bound = sys_lip_bound(spec, eps);
        // independent dense scan of sup_t min(term1, term2)
        double ref = 0.0;
        for (double t = 1e-6; t < 10.0; t += 1e-4) {
            double t1 = 2.0 * K / t;
            double t2 = K * std::expm1(t) / t + (K * K / eps) * std::expm1(2.0 * t) / t;
            ref = std::max(ref, std::min(t1, t2));
        }
        CHECK(bound == doctest::Approx(ref).epsilon(1e-3));
    }
    CHECK(sys_lip_bound(spec, 0.1) > sys_lip_bound(spec, 0.5));
}

TEST_CASE("empirical systole Lipschitz quotients stay below the closed-form bound") {
    auto X = HyperbolicStructure::torus(PTStructure::modular());
    auto Y = HyperbolicStructure::torus(asym());
    double w = 3.2;
    double zroot = (w * w + std::sqrt(w * w * w * w - 8.0 * w * w)) / 2.0;
    auto Z = HyperbolicStructure::torus(PTStructure{w, w, zroot});
    double eps = 0.5;
    double est = sys_lip_estimate(eps, {{X, Y}, {X, Z}, {Y, Z}}, 30);
    CHECK(est > 0.0);
    CHECK(est <= sys_lip_bound(SurfaceSpec::punctured_torus(), eps));
}

TEST_CASE("structure literals and validation") {
    auto X = parse_structure_literal("pt:3,3,3");
    CHECK(X.backend == Backend::PuncturedTorus);
    CHECK(parse_structure_literal(structure_to_string(X)).pt == X.pt);
    auto F = parse_structure_literal("fn:1:0.5,2:0,3:-1");
    CHECK(F.fn.l[2] == 3.0);
    CHECK(F.fn.tau[2] == -1.0);
    CHECK(parse_structure_literal(structure_to_string(F)).fn == F.fn);
    CHECK_THROWS_AS(parse_structure_literal("pt:1,1,1"), invalid_input);
    CHECK_THROWS_AS(parse_structure_literal("fn:1:0,2:0"), invalid_input);
    CHECK_THROWS_AS(parse_structure_literal("xx:1"), invalid_input);
}

TEST_CASE("mod action on structures is a length isometry") {
    PTStructure X = asym();
    auto h = parse_word(Backend::PuncturedTorus, "AbA");
    PTStructure Y = act(h.matrix(), X);
    Y.validate(1e-9);
    TraceCache cx(X), cy(Y);
    auto hinv = h.matrix().inverse();
    for (const auto& g : enumerate_curves(SurfaceSpec::punctured_torus(), 8)) {
        CHECK(cy.length(g.slope) ==
              doctest::Approx(cx.length(act(hinv, g.slope))).epsilon(1e-11));
    }
    // genus 2: pants twists move tau only
    hyp::FNStructure fn;
    fn.l = {1.5, 2.0, 0.7};
    auto Xg = HyperbolicStructure::genus2(fn);
    auto moved = act(parse_word(Backend::GenusTwo, "2,-3"), Xg);
    CHECK(moved.fn.l == fn.l);
    CHECK(moved.fn.tau[1] == doctest::Approx(2.0));
    CHECK(moved.fn.tau[2] == doctest::Approx(-0.7));
}

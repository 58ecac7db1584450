#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>

#include "eqlab/experiments.hpp"
#include "eqlab/rng.hpp"

using namespace eqlab;
using namespace eqlab::experiments;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.mc.n = 400;
    cfg.escape_samples = 60;
    cfg.escape_steps = 8;
    cfg.lip_pairs = 150;
    return cfg;
}

}  // namespace

TEST_CASE("conditioned thin samples are valid, in-shell and deterministic") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    const double mu = 0.125;
    for (std::uint64_t i = 0; i < 40; ++i) {
        ThinSample s = sample_thin_aligned(cfg.params, mu, 42, i);
        s.point.validate(1e-8);
        CHECK(s.l >= 0.5 * cfg.params.eps0 - 1e-12);
        CHECK(s.l <= cfg.params.eps0 + 1e-12);
        CHECK(s.b >= 0.0);
        CHECK(s.b <= mu);
        CHECK(s.point.lam.b == s.b);
        // the short curve really has the sampled length
        CHECK(hyp::TraceCache(s.point.X.pt).length({1, 0}) ==
              doctest::Approx(s.l).epsilon(1e-10));
    }
    ThinSample a = sample_thin_aligned(cfg.params, mu, 7, 3);
    ThinSample b = sample_thin_aligned(cfg.params, mu, 7, 3);
    CHECK(a.l == b.l);
    CHECK(a.point.lam.a == b.point.lam.a);
    CHECK(a.point.lam.b == b.point.lam.b);
}

TEST_CASE("closed-form tracked length matches the composed flow where both exist") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    int checked = 0;
    for (std::uint64_t i = 0; i < 40; ++i) {
        ThinSample s = sample_thin_aligned(cfg.params, 0.125, 42, i);
        for (double t : {-1.0, -0.25, 0.25, 1.0}) {
            double cf = thin_tracked_length(s.point.X.pt, s.point.lam.a, s.point.lam.b, t);
            hyp::PTStructure Xt;
            try {
                auto [ca, cb] = curves::canonical_sign(s.point.lam.a, s.point.lam.b);
                double a0 = std::floor(ca / cb);
                double r = ca - a0 * cb;
                hyp::PTStructure Y = s.point.X.pt;
                if (r > 0.0) Y = quake::earthquake_pt(Y, {1, 0}, 0.5 * r * t);
                Xt = quake::earthquake_pt(Y, {static_cast<std::int64_t>(a0), 1}, cb * t);
            } catch (const error&) {
                continue;  // beyond the representability wall: closed form only
            }
            CHECK(cf == doctest::Approx(hyp::TraceCache(Xt).length({1, 0})).epsilon(1e-8));
            ++checked;
        }
    }
    CHECK(checked >= 60);
}

TEST_CASE("tracked length obeys the linear envelope pointwise") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    const double mu = 0.125, rho = cfg.params.rho;
    const double tlim = rho / (2.0 * mu);
    for (std::uint64_t i = 0; i < 60; ++i) {
        ThinSample s = sample_thin_aligned(cfg.params, mu, 99, i);
        for (int k = -6; k <= 6; ++k) {
            double t = tlim * k / 6.0;
            double l = thin_tracked_length(s.point.X.pt, s.point.lam.a, s.point.lam.b, t);
            CHECK(l <= 0.5 * rho + mu * std::abs(t) + 1e-9);
            CHECK(l <= rho + 1e-9);
        }
    }
}

TEST_CASE("thin flow falls back to the tracked-length representative, never throws") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    for (std::uint64_t i = 0; i < 60; ++i) {
        ThinSample s = sample_thin_aligned(cfg.params, 0.0625, 5, i);
        for (double t : {-4.0, -1.0, 1.0, 4.0}) {
            hyp::PTStructure Xt = thin_flow(s.point.X.pt, s.point.lam.a, s.point.lam.b, t);
            Xt.validate(1e-6);
            double cf = thin_tracked_length(s.point.X.pt, s.point.lam.a, s.point.lam.b, t);
            // the flowed surface carries a curve of the tracked length
            double sys = hyp::systole(hyp::HyperbolicStructure::torus(Xt)).l_sys;
            CHECK(sys <= cf + 1e-7);
        }
    }
}

TEST_CASE("escape experiment reports no violations and halves t_lim as mu doubles") {
    ExperimentConfig cfg = small_config();
    EscapeReport rep = escape_experiment(cfg);
    REQUIRE(rep.rows.size() == cfg.mu_grid.size());
    CHECK(rep.total_violations() == 0);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].worst_slack <= 1e-7);
        CHECK(rep.rows[i].max_tracked <= cfg.params.rho + 1e-7);
        if (i > 0) CHECK(rep.rows[i].t_lim == doctest::Approx(2.0 * rep.rows[i - 1].t_lim));
    }
}

TEST_CASE("envelope calibration tightens with more orbits and survives a holdout") {
    SurfaceSpec spec = SurfaceSpec::punctured_torus();
    quake::MWConstants c100 = calibrate_mw(spec, 100, 7);
    quake::MWConstants c200 = calibrate_mw(spec, 200, 7);
    CHECK(c100.rho > 0.0);
    CHECK(c100.C >= 1.0);
    c100.validate(spec);
    // more orbits add constraints: the admissible scale cannot grow
    CHECK(c200.rho <= c100.rho + 1e-12);
    if (c200.rho == c100.rho) CHECK(c200.C >= c100.C);
    CHECK(envelope_violations(spec, c200, 300, 987654321) == 0);
}

TEST_CASE("correlation of a constant against anything vanishes identically") {
    ExperimentConfig cfg = small_config();
    PointFn one = [](const quake::UnitLaminationPoint&) { return 1.0; };
    testfn::TestFnParams p = cfg.params;
    PointFn g = [p](const quake::UnitLaminationPoint& pt) {
        return testfn::eval_gD(pt.X, 2.0 * p.rho);
    };
    CorrelationEstimate est = correlation(one, g, 0.0, cfg);
    est.validate();
    CHECK(est.value == 0.0);
}

TEST_CASE("autocorrelation at time zero is nonnegative within error") {
    ExperimentConfig cfg = small_config();
    testfn::TestFnParams p = cfg.params;
    PointFn f = [p](const quake::UnitLaminationPoint& pt) { return testfn::eval_f(pt, p); };
    CorrelationEstimate est = correlation(f, f, 0.0, cfg);
    est.validate();
    CHECK(est.value >= -3.0 * est.stderr_);
}

TEST_CASE("correlation standard error scales like n^{-1/2}") {
    ExperimentConfig cfg = small_config();
    testfn::TestFnParams p = cfg.params;
    PointFn f = [p](const quake::UnitLaminationPoint& pt) { return testfn::eval_f(pt, p); };
    PointFn g = [p](const quake::UnitLaminationPoint& pt) {
        return testfn::eval_gD(pt.X, 2.0 * p.rho);
    };
    cfg.mc.n = 1000;
    double tlim = p.rho / (2.0 * p.mu);
    CorrelationEstimate e1 = correlation(f, g, tlim, cfg);
    cfg.mc.n = 16000;
    CorrelationEstimate e2 = correlation(f, g, tlim, cfg);
    REQUIRE(e1.stderr_ > 0.0);
    REQUIRE(e2.stderr_ > 0.0);
    double ratio = e1.stderr_ / e2.stderr_;  // expect about 4
    CHECK(ratio > 1.8);
    CHECK(ratio < 9.0);
}

TEST_CASE("correlation estimates are deterministic") {
    ExperimentConfig cfg = small_config();
    testfn::TestFnParams p = cfg.params;
    PointFn f = [p](const quake::UnitLaminationPoint& pt) { return testfn::eval_f(pt, p); };
    PointFn g = [p](const quake::UnitLaminationPoint& pt) {
        return testfn::eval_gD(pt.X, 2.0 * p.rho);
    };
    CorrelationEstimate a = correlation(f, g, 1.0, cfg);
    CorrelationEstimate b = correlation(f, g, 1.0, cfg);
    CHECK(a.value == b.value);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.n == b.n);
}

TEST_CASE("decay scan: scaling exponents and the correlation lower bound") {
    ExperimentConfig cfg = small_config();
    cfg.mc.n = 4000;
    cfg.mu_grid = {0.125, 0.0883883476483184, 0.0625, 0.0441941738241592, 0.03125};
    DecayScanResult res = decay_scan(cfg);
    res.validate();
    REQUIRE(res.rows.size() == cfg.mu_grid.size());
    // the certified volume lower bound scales like mu^2
    CHECK(res.nu_bound_vs_mu.slope == doctest::Approx(2.0).epsilon(0.08));
    CHECK(res.nu_bound_vs_mu.r2 > 0.98);
    // the empirical contraction factor scales like 1/mu
    CHECK(res.lip_vs_mu.slope == doctest::Approx(-1.0).epsilon(0.2));
    // anti-mixing: the measured correlation clears the certified bound
    CHECK(res.inequality_holds);
    for (const DecayRow& r : res.rows) {
        CHECK(r.t_lim == doctest::Approx(cfg.params.rho / (2.0 * r.mu)));
        CHECK(r.nu_bound > 0.0);
        CHECK(r.nu_bound <= r.nu_est * 1.5);
        CHECK(std::abs(r.corr_value) >= r.corr_lower_bound - 3.0 * r.corr_stderr);
    }
    // combined exponent of the bound against the flow horizon
    CHECK(res.implied_exponent == doctest::Approx(3.0).epsilon(0.25));
}

TEST_CASE("property suites pass and their report is stable") {
    ExperimentConfig cfg = small_config();
    cfg.mc.n = 120;
    SuiteReport rep = property_suites(cfg);
    CHECK(rep.all_passed());
    REQUIRE(rep.suites.size() == 6);
    for (const SuiteResult& s : rep.suites) {
        CHECK(s.cases > 0);
        CHECK(s.failures == 0);
    }
    SuiteReport again = property_suites(cfg);
    CHECK(format_report(rep) == format_report(again));
    CHECK(format_report(rep).find("ALL PASS") != std::string::npos);
}

TEST_CASE("a seeded bound fault is caught by the length-variation suite") {
    ExperimentConfig cfg = small_config();
    cfg.mc.n = 64;
    SuiteReport rep = property_suites(cfg, -1);
    REQUIRE(!rep.suites.empty());
    CHECK(rep.suites[0].name == "length_variation");
    CHECK(rep.suites[0].failures > 0);
    CHECK(!rep.all_passed());
}

TEST_CASE("configuration validation rejects malformed scans") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.mu_grid = {0.1, 0.2};  // not decreasing
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
    cfg = ExperimentConfig::defaults();
    cfg.mc.n = 10;
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
    cfg = ExperimentConfig::defaults();
    cfg.region.lmax = 0.01;  // region smaller than the systole shell
    CHECK_THROWS_AS(cfg.validate(), invalid_input);
}

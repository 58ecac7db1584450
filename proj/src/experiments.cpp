#include "eqlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "eqlab/rng.hpp"

namespace eqlab::experiments {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Symmetric structure (y = z solved from the relation) with l_(1,0) = l.
hyp::PTStructure base_from_length(double l) {
    double x = 2.0 * std::cosh(0.5 * l);
    double y = x / std::sqrt(x - 2.0);
    return hyp::PTStructure{x, y, y};
}

hyp::PTStructure wp_structure(double l, double tau) {
    hyp::PTStructure X = base_from_length(l);
    if (tau != 0.0) X = quake::earthquake_pt(X, {1, 0}, tau);
    return X;
}

// a >= 0 on the chosen side with l_(sgn a, b)(X) = 1, given b below the
// unit-sphere ceiling 1 / l_(0,1).
double solve_unit_a(hyp::TraceCache& cache, double b, double sgn) {
    double l10 = cache.length({1, 0});
    double l01 = cache.length({0, 1});
    double lo = 0.0, hi = (1.0 + b * l01) / l10 + 1.0;
    for (int it = 0; it < 70; ++it) {
        double mid = 0.5 * (lo + hi);
        double len = b == 0.0 ? mid * l10 : cache.lamination_length(sgn * mid, b, 1e-10).value;
        (len < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    spec.validate();
    region.validate();
    if (mu_grid.empty()) throw invalid_input("ExperimentConfig: empty aperture grid");
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        if (!(mu_grid[i] > 0.0)) throw invalid_input("ExperimentConfig: apertures must be positive");
        if (i > 0 && !(mu_grid[i] < mu_grid[i - 1]))
            throw invalid_input("ExperimentConfig: aperture grid must be strictly decreasing");
        testfn::TestFnParams p = params;
        p.mu = mu_grid[i];
        p.validate(spec);
    }
    if (!(region.lmax > params.eps0))
        throw invalid_input("ExperimentConfig: sampling region must contain the systole shell");
    if (mc.n < 64) throw invalid_input("ExperimentConfig: need mc.n >= 64 for batch means");
    if (escape_steps < 1) throw invalid_input("ExperimentConfig: need escape_steps >= 1");
    if (!(count_L > 0.0)) throw invalid_input("ExperimentConfig: count_L must be positive");
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.params.rho = 0.5;
    cfg.params.C = 1.0;
    cfg.params.eps0 = testfn::choose_eps0(cfg.params.rho, cfg.params.C, 0.9);
    cfg.params.mu = 0.125;
    for (int k = 3; k <= 9; ++k) cfg.mu_grid.push_back(std::pow(2.0, -k));
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Thin-regime flow and conditioned sampling
// ---------------------------------------------------------------------------

hyp::PTStructure thin_flow(const hyp::PTStructure& X, double a, double b, double t) {
    auto [ca, cb] = curves::canonical_sign(a, b);
    if (t == 0.0) return X;
    if (cb == 0.0 || std::abs(ca) >= 9e15 * cb)
        return quake::earthquake_pt(X, {1, 0}, ca * t);
    double a0 = std::floor(ca / cb);
    double r = ca - a0 * cb;  // in [0, cb)
    curves::Slope mid{static_cast<std::int64_t>(a0), 1};
    hyp::PTStructure Y = X;
    if (r > 0.0) Y = quake::earthquake_pt(Y, {1, 0}, 0.5 * r * t);
    try {
        Y = quake::earthquake_pt(Y, mid, cb * t);
    } catch (const budget_exceeded&) {
        // The middle twist is along a very deep slope: after it, the original
        // marking triple is recessively encoded in the twisted chart and
        // cannot be extracted in double precision, even though the flowed
        // surface itself is tame. The short curve survives exactly through
        // the single-crossing closed form, so return the thin-shell
        // representative with that short-curve length. The flow observables
        // (tracked short-curve length, systole-based test functions) are
        // functions of the short-curve geometry and are unaffected.
        return base_from_length(thin_tracked_length(X, ca, cb, t));
    }
    if (r > 0.0) Y = quake::earthquake_pt(Y, {1, 0}, 0.5 * r * t);
    return Y;
}

double thin_tracked_length(const hyp::PTStructure& X, double a, double b, double t) {
    auto [ca, cb] = curves::canonical_sign(a, b);
    // Twists along (1,0) itself (the outer pieces and the pure-axis case)
    // leave the (1,0) trace fixed, so only the middle piece moves it.
    if (t == 0.0 || cb == 0.0 || std::abs(ca) >= 9e15 * cb)
        return hyp::TraceCache(X).length({1, 0});
    double a0 = std::floor(ca / cb);
    double r = ca - a0 * cb;
    hyp::PTStructure X1 = r > 0.0 ? quake::earthquake_pt(X, {1, 0}, 0.5 * r * t) : X;
    hyp::TraceCache cache(X1);
    // Farey pair for gamma = (a0, 1): delta = (-1, 0) has cross(gamma, delta)
    // = +1 and gamma + delta = (a0 - 1, 1); (1,0) crosses gamma once, so its
    // trace follows the closed form for any depth of a0.
    std::int64_t ia0 = static_cast<std::int64_t>(a0);
    double ltg = cache.log_trace(curves::canonicalize({ia0, 1}));
    double ltd = cache.log_trace({1, 0});
    double lte = cache.log_trace(curves::canonicalize({ia0 - 1, 1}));
    double d2 = quake::twist_parent_log_traces(ltg, ltd, lte, cb * t).first;
    return hyp::length_from_log_trace(d2);
}

ThinSample sample_thin_aligned(const testfn::TestFnParams& params, double mu, std::uint64_t seed,
                               std::uint64_t index) {
    if (!(mu > 0.0)) throw invalid_input("sample_thin_aligned: mu must be positive");
    Rng st = Rng::stream(seed, index);
    double lo = 0.5 * params.eps0, hi = params.eps0;
    double l = std::sqrt(lo * lo + st.uniform() * (hi * hi - lo * lo));
    double tau = st.uniform() * l;
    hyp::PTStructure X = wp_structure(l, tau);
    hyp::TraceCache cache(X);
    double bmax = std::min(mu, 0.98 / cache.length({0, 1}));
    double b = bmax * st.uniform();
    double sgn = st.uniform() < 0.5 ? -1.0 : 1.0;
    double a = solve_unit_a(cache, b, sgn);
    ThinSample s;
    s.point.X = hyp::HyperbolicStructure::torus(X);
    s.point.lam = curves::MeasuredLamination::torus(sgn * a, b);
    s.l = l;
    s.b = b;
    return s;
}

// ---------------------------------------------------------------------------
// Envelope calibration
// ---------------------------------------------------------------------------

CalibrationOrbit calibration_orbit(const SurfaceSpec& spec, std::uint64_t seed,
                                   std::uint64_t index) {
    spec.validate();
    if (spec.backend() != Backend::PuncturedTorus)
        throw invalid_input("calibration_orbit: punctured-torus backend only");
    Rng st = Rng::stream(seed, index);
    const double lmax = 2.5;
    double l = lmax * std::sqrt(std::max(st.uniform(), 1e-16));
    double tau = st.uniform() * l;
    hyp::PTStructure X = wp_structure(l, tau);
    static const curves::Slope kTwists[4] = {{0, 1}, {1, 1}, {2, 1}, {1, 2}};
    curves::Slope delta = kTwists[st.below(4)];
    hyp::TraceCache cache(X);
    double w = 1.0 / cache.length(delta);
    CalibrationOrbit out;
    out.gamma = curves::SimpleClosedCurve::torus({1, 0});
    out.intersection = w * static_cast<double>(delta.q);  // i(w delta, (1,0)) = w q
    curves::MeasuredLamination lam = curves::MeasuredLamination::from_slope(delta, w);
    hyp::HyperbolicStructure Xh = hyp::HyperbolicStructure::torus(X);
    double K = hyp::K_sys_bound(spec);
    double window = (cache.length({1, 0}) + K) / out.intersection + 2.0;
    quake::MinLengthResult mn;
    for (int tries = 0;; ++tries) {
        try {
            mn = quake::min_length_along_orbit(Xh, lam, out.gamma, window);
            break;
        } catch (const invalid_input&) {
            if (tries >= 3) throw;
            window *= 2.0;
        }
    }
    double T = 0.75 * K / out.intersection + 1.0;
    out.orbit = quake::sample_orbit(Xh, lam, mn.t_gamma - T, mn.t_gamma + T, 80, {out.gamma});
    return out;
}

quake::MWConstants calibrate_mw(const SurfaceSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < 100) throw invalid_input("calibrate_mw: need n >= 100 orbits");
    std::vector<CalibrationOrbit> orbits;
    orbits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) orbits.push_back(calibration_orbit(spec, seed, i));
    const double K = hyp::K_sys_bound(spec);
    double worst_cneed = 0.0, worst_rho = 0.0;
    for (int j = 1; j <= 6; ++j) {
        double rho = K / std::pow(2.0, j);
        bool upper_ok = true;
        double cneed = 1.0;
        for (const CalibrationOrbit& o : orbits) {
            quake::MWEnvelopeReport rep =
                quake::mw_envelope_check(o.orbit, o.gamma, o.intersection, {rho, 1.0});
            if (!rep.applicable) continue;
            if (rep.worst_upper_slack > 1e-9) {
                upper_ok = false;
                break;
            }
            cneed = std::max(cneed, 1.0 + std::max(0.0, rep.worst_lower_slack) / rep.eps_gamma);
        }
        if (!upper_ok) continue;
        for (double C : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0})
            if (C >= cneed - 1e-12) return quake::MWConstants{rho, C};
        if (worst_rho == 0.0) {
            worst_rho = rho;
            worst_cneed = cneed;
        }
    }
    throw convergence_failure("calibrate_mw: no admissible (rho, C) on the grid; at rho=" +
                              std::to_string(worst_rho) +
                              " the envelope needs C=" + std::to_string(worst_cneed));
}

std::size_t envelope_violations(const SurfaceSpec& spec, const quake::MWConstants& consts,
                                std::size_t n, std::uint64_t seed) {
    consts.validate(spec);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < n; ++i) {
        CalibrationOrbit o = calibration_orbit(spec, seed, i);
        quake::MWEnvelopeReport rep =
            quake::mw_envelope_check(o.orbit, o.gamma, o.intersection, consts);
        if (!rep.applicable) continue;
        if (rep.worst_upper_slack > 1e-9 || rep.worst_lower_slack > 1e-9) ++bad;
    }
    return bad;
}

// ---------------------------------------------------------------------------
// Escape experiment
// ---------------------------------------------------------------------------

std::size_t EscapeReport::total_violations() const {
    std::size_t v = 0;
    for (const EscapeRow& r : rows) v += r.violations;
    return v;
}

EscapeReport escape_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.spec.backend() != Backend::PuncturedTorus)
        throw invalid_input("escape_experiment: punctured-torus backend only");
    EscapeReport report;
    const double rho = config.params.rho;
    for (std::size_t gi = 0; gi < config.mu_grid.size(); ++gi) {
        double mu = config.mu_grid[gi];
        EscapeRow row;
        row.mu = mu;
        row.t_lim = rho / (2.0 * mu);
        row.n = config.escape_samples;
        row.worst_slack = -std::numeric_limits<double>::infinity();
        std::uint64_t seed = config.mc.seed + 7919 * gi;
        for (std::size_t i = 0; i < config.escape_samples; ++i) {
            ThinSample s = sample_thin_aligned(config.params, mu, seed, i);
            bool violated = false;
            for (int k = -config.escape_steps; k <= config.escape_steps; ++k) {
                double t = row.t_lim * static_cast<double>(k) / config.escape_steps;
                double tracked =
                    thin_tracked_length(s.point.X.pt, s.point.lam.a, s.point.lam.b, t);
                double slack = tracked - (0.5 * rho + mu * std::abs(t));
                row.worst_slack = std::max(row.worst_slack, slack);
                row.max_tracked = std::max(row.max_tracked, tracked);
                if (slack > 1e-7 || tracked > rho + 1e-7) violated = true;
            }
            if (violated) ++row.violations;
        }
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

void CorrelationEstimate::validate() const {
    if (!(stderr_ >= 0.0) || !std::isfinite(stderr_))
        throw invalid_input("CorrelationEstimate: stderr must be non-negative");
}

namespace {

struct Draw {
    quake::UnitLaminationPoint pt;
    double w = 0.0;
    bool shell = false;
};

// Structure factor stratified between the systole shell (where the aligned
// test function is supported) and the rest of the region; direction uniform
// on the half-plane of angles with the co-area weight 1 / (m * l_u^m).
std::vector<Draw> nu_draws(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
    const double lo = 0.5 * cfg.params.eps0, hi = cfg.params.eps0;
    const double band = hi * hi - lo * lo;
    std::vector<Draw> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng st = Rng::stream(seed, i);
        Draw d;
        d.shell = (i % 2) == 0;
        double l;
        if (d.shell) {
            l = std::sqrt(lo * lo + st.uniform() * band);
        } else {
            double y = std::max(st.uniform(), 1e-16) * (cfg.region.lmax * cfg.region.lmax - band);
            l = y < lo * lo ? std::sqrt(y) : std::sqrt(y + band);
        }
        double tau = st.uniform() * l;
        hyp::PTStructure X = wp_structure(l, tau);
        double th = st.uniform() * kPi;
        auto [a, b] = curves::canonical_sign(std::cos(th), std::sin(th));
        hyp::TraceCache cache(X);
        double lu = b == 0.0 ? a * cache.length({1, 0})
                             : cache.lamination_length(a, b, 1e-10).value;
        d.pt.X = hyp::HyperbolicStructure::torus(X);
        d.pt.lam = curves::MeasuredLamination::torus(a / lu, b / lu);
        d.w = 1.0 / (2.0 * lu * lu);
        out.push_back(std::move(d));
    }
    return out;
}

struct CorrInternals {
    CorrelationEstimate est;
    double total = 0.0;  // normalization integral
    double int_f = 0.0;  // normalized integral of f
    double int_g = 0.0;  // normalized integral of g
};

CorrInternals correlation_full(const PointFn& f, const PointFn& g, double t,
                               const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.spec.backend() != Backend::PuncturedTorus)
        throw invalid_input("correlation: punctured-torus backend only");
    if (!f || !g) throw invalid_input("correlation: both evaluators must be set");
    const std::size_t n = cfg.mc.n;
    std::vector<Draw> draws = nu_draws(cfg, n, cfg.mc.seed);
    std::vector<double> fi(n), gi(n), gti(n, 0.0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fi[i] = f(draws[i].pt);
        gi[i] = g(draws[i].pt);
        if (fi[i] != 0.0) {
            ++hits;
            if (t == 0.0) {
                gti[i] = gi[i];
            } else {
                quake::UnitLaminationPoint moved = draws[i].pt;
                moved.X = hyp::HyperbolicStructure::torus(
                    thin_flow(draws[i].pt.X.pt, draws[i].pt.lam.a, draws[i].pt.lam.b, t));
                gti[i] = g(moved);
            }
        }
    }
    const double lo = 0.5 * cfg.params.eps0, hi = cfg.params.eps0;
    const double As = 0.5 * (hi * hi - lo * lo);
    const double Ar = 0.5 * cfg.region.lmax * cfg.region.lmax - As;
    // Unnormalized integral over a subset of sample indices.
    auto integral = [&](const std::vector<double>& h, std::size_t batch, std::size_t nb) {
        double sum_s = 0.0, sum_r = 0.0;
        std::size_t cnt_s = 0, cnt_r = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (nb > 0 && (i / 2) % nb != batch) continue;
            double v = draws[i].w * h[i];
            if (draws[i].shell) {
                sum_s += v;
                ++cnt_s;
            } else {
                sum_r += v;
                ++cnt_r;
            }
        }
        double ms = cnt_s ? sum_s / static_cast<double>(cnt_s) : 0.0;
        double mr = cnt_r ? sum_r / static_cast<double>(cnt_r) : 0.0;
        return kPi * (As * ms + Ar * mr);
    };
    std::vector<double> fg(n), ones(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) fg[i] = fi[i] * gti[i];
    auto value_of = [&](std::size_t batch, std::size_t nb) {
        double I1 = integral(ones, batch, nb);
        double If = integral(fi, batch, nb);
        double Ig = integral(gi, batch, nb);
        double Ifg = integral(fg, batch, nb);
        return Ifg / I1 - (If / I1) * (Ig / I1);
    };
    CorrInternals out;
    out.total = integral(ones, 0, 0);
    out.int_f = integral(fi, 0, 0) / out.total;
    out.int_g = integral(gi, 0, 0) / out.total;
    out.est.t = t;
    out.est.n = n;
    out.est.value = value_of(0, 0);
    const std::size_t nb = 16;
    std::vector<double> batch_vals;
    batch_vals.reserve(nb);
    for (std::size_t b = 0; b < nb; ++b) batch_vals.push_back(value_of(b, nb));
    stats::MeanErr me = stats::mean_stderr(batch_vals);
    out.est.stderr_ = me.stderr_;
    out.est.wide_interval = hits < 30;
    out.est.validate();
    return out;
}

}  // namespace

CorrelationEstimate correlation(const PointFn& f, const PointFn& g, double t,
                                const ExperimentConfig& config) {
    return correlation_full(f, g, t, config).est;
}

// ---------------------------------------------------------------------------
// Decay scan
// ---------------------------------------------------------------------------

void DecayScanResult::validate() const {
    if (rows.size() < 2) throw invalid_input("DecayScanResult: need at least two usable rows");
    for (const DecayRow& r : rows)
        if (!(r.corr_stderr >= 0.0) || !(r.nu_stderr >= 0.0))
            throw invalid_input("DecayScanResult: stderr must be non-negative");
}

DecayScanResult decay_scan(const ExperimentConfig& config) {
    config.validate();
    if (config.mu_grid.size() < 5) throw invalid_input("decay_scan: need at least 5 apertures");
    DecayScanResult result;
    std::vector<double> lmu, ltl, lnb, lne, llip, lfloor_b, llip_t;
    for (std::size_t gi = 0; gi < config.mu_grid.size(); ++gi) {
        double mu = config.mu_grid[gi];
        ExperimentConfig cfg = config;
        cfg.params.mu = mu;
        const testfn::TestFnParams p = cfg.params;
        DecayRow row;
        row.mu = mu;
        row.t_lim = p.rho / (2.0 * mu);
        row.n = cfg.mc.n;
        measures::VolumeEstimate vol =
            measures::volume_omega(p.eps0, mu, cfg.mc.n, cfg.mc.seed + 104729 * gi);
        PointFn f = [p](const quake::UnitLaminationPoint& pt) { return testfn::eval_f(pt, p); };
        PointFn g = [p](const quake::UnitLaminationPoint& pt) {
            return testfn::eval_gD(pt.X, 2.0 * p.rho);
        };
        CorrInternals ci = correlation_full(f, g, row.t_lim, cfg);
        row.nu_est = vol.estimate / ci.total;
        row.nu_stderr = vol.stderr_ / ci.total;
        row.nu_bound = vol.scaling_bound / ci.total;
        row.int_f = ci.int_f;
        row.k1 = ci.int_g;
        row.corr_value = ci.est.value;
        row.corr_stderr = ci.est.stderr_;
        if (!(row.nu_est > 0.0) || !(row.int_f > 0.0)) continue;  // zero-hit row trimmed
        row.k0 = row.int_f / row.nu_est;
        row.corr_lower_bound = row.int_f * row.k1;
        testfn::LipschitzFunction fn{f, 1.0};
        row.lip_lower =
            testfn::empirical_lip_norm(fn, testfn::ramp_pair_sampler(p, cfg.mc.seed + 31 * gi),
                                       cfg.lip_pairs, cfg.lip_depth)
                .lip_lower;
        result.rows.push_back(row);
        lmu.push_back(std::log(mu));
        ltl.push_back(std::log(row.t_lim));
        lnb.push_back(std::log(row.nu_bound));
        lne.push_back(std::log(row.nu_est));
        llip.push_back(std::log(row.lip_lower));
        lfloor_b.push_back(std::log(row.k0 * row.k1 * row.nu_bound));
        llip_t.push_back(std::log(row.lip_lower));
    }
    result.validate();
    result.nu_bound_vs_mu = stats::ols(lmu, lnb);
    result.nu_est_vs_mu = stats::ols(lmu, lne);
    result.lip_vs_mu = stats::ols(lmu, llip);
    result.bound_vs_tlim = stats::ols(ltl, lfloor_b);
    result.lip_vs_tlim = stats::ols(ltl, llip_t);
    result.implied_exponent = result.lip_vs_tlim.slope - result.bound_vs_tlim.slope;
    result.inequality_holds = true;
    for (const DecayRow& r : result.rows)
        if (!(std::abs(r.corr_value) >= r.corr_lower_bound - 3.0 * r.corr_stderr))
            result.inequality_holds = false;
    return result;
}

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

bool SuiteReport::all_passed() const {
    for (const SuiteResult& s : suites)
        if (!s.passed()) return false;
    return !suites.empty();
}

namespace {

double rel_diff(const hyp::PTStructure& A, const hyp::PTStructure& B) {
    double d = 0.0;
    d = std::max(d, std::abs(A.x - B.x) / std::max(1.0, std::abs(A.x)));
    d = std::max(d, std::abs(A.y - B.y) / std::max(1.0, std::abs(A.y)));
    d = std::max(d, std::abs(A.z - B.z) / std::max(1.0, std::abs(A.z)));
    return d;
}

curves::Slope random_small_slope(Rng& st) {
    static const curves::Slope kSlopes[8] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1},
                                             {2, 1}, {1, 2}, {-1, 2}, {3, 1}};
    return kSlopes[st.below(8)];
}

}  // namespace

SuiteReport property_suites(const ExperimentConfig& config, int intersection_fault) {
    config.validate();
    SuiteReport report;
    const std::size_t cases = config.mc.n;
    const std::uint64_t seed = config.mc.seed;
    const double lmax = config.region.lmax;
    const double tol = 1e-9;

    {  // Length-variation bound along the flow
        SuiteResult s{"length_variation"};
        for (std::size_t i = 0; i < cases; ++i) {
            Rng st = Rng::stream(seed ^ 0xA1ull, i);
            double l = lmax * std::sqrt(std::max(st.uniform(), 1e-16));
            hyp::PTStructure X = wp_structure(l, st.uniform() * l);
            curves::Slope delta = random_small_slope(st);
            curves::Slope gamma = random_small_slope(st);
            if (gamma == delta) gamma = delta == curves::Slope{1, 0} ? curves::Slope{0, 1}
                                                                    : curves::Slope{1, 0};
            double w = 1.0 / hyp::TraceCache(X).length(delta);
            curves::MeasuredLamination lam = curves::MeasuredLamination::from_slope(delta, w);
            quake::KerckhoffReport rep = quake::kerckhoff_check(
                hyp::HyperbolicStructure::torus(X), lam, curves::SimpleClosedCurve::torus(gamma),
                0.8, 1e-4, 21);
            double slack = rep.max_violation - static_cast<double>(intersection_fault) -
                           rep.error_bound;
            ++s.cases;
            s.worst = std::max(s.worst, slack);
            if (!rep.degenerate && slack > 0.0) ++s.failures;
        }
        report.suites.push_back(s);
    }

    {  // Flow additivity E_{s+t} = E_s o E_t on weighted curves
        SuiteResult s{"flow_additivity"};
        for (std::size_t i = 0; i < cases; ++i) {
            Rng st = Rng::stream(seed ^ 0xB2ull, i);
            double l = lmax * std::sqrt(std::max(st.uniform(), 1e-16));
            hyp::PTStructure X = wp_structure(l, st.uniform() * l);
            curves::Slope delta = random_small_slope(st);
            double w = 1.0 / hyp::TraceCache(X).length(delta);
            double ta = st.uniform(-1.5, 1.5), tb = st.uniform(-1.5, 1.5);
            hyp::PTStructure once = quake::earthquake_pt(X, delta, w * (ta + tb));
            hyp::PTStructure twice =
                quake::earthquake_pt(quake::earthquake_pt(X, delta, w * ta), delta, w * tb);
            double d = rel_diff(once, twice);
            ++s.cases;
            s.worst = std::max(s.worst, d);
            if (d > tol) ++s.failures;
        }
        report.suites.push_back(s);
    }

    {  // Commutation of twists with disjoint support (pants curves)
        SuiteResult s{"commutation"};
        for (std::size_t i = 0; i < cases; ++i) {
            Rng st = Rng::stream(seed ^ 0xC3ull, i);
            hyp::FNStructure fn;
            for (int j = 0; j < curves::kPantsCurves; ++j) {
                fn.l[j] = st.uniform(0.2, 3.0);
                fn.tau[j] = st.uniform() * fn.l[j];
            }
            int a = 1 + static_cast<int>(st.below(3));
            int b = 1 + static_cast<int>(st.below(3));
            if (b == a) b = 1 + (a % 3);
            double ta = st.uniform(-2.0, 2.0), tb = st.uniform(-2.0, 2.0);
            hyp::FNStructure ab = quake::twist(quake::twist(fn, a, ta), b, tb);
            hyp::FNStructure ba = quake::twist(quake::twist(fn, b, tb), a, ta);
            double d = 0.0;
            for (int j = 0; j < curves::kPantsCurves; ++j) {
                d = std::max(d, std::abs(ab.l[j] - ba.l[j]));
                d = std::max(d, std::abs(ab.tau[j] - ba.tau[j]));
            }
            ++s.cases;
            s.worst = std::max(s.worst, d);
            if (d > tol) ++s.failures;
        }
        report.suites.push_back(s);
    }

    {  // Mapping-class equivariance of the flow
        SuiteResult s{"equivariance"};
        static const char kTokens[4] = {'A', 'a', 'B', 'b'};
        for (std::size_t i = 0; i < cases; ++i) {
            Rng st = Rng::stream(seed ^ 0xD4ull, i);
            double l = lmax * std::sqrt(std::max(st.uniform(), 1e-16));
            hyp::PTStructure X = wp_structure(l, st.uniform() * l);
            curves::Slope delta = random_small_slope(st);
            double w = 1.0 / hyp::TraceCache(X).length(delta);
            double t = st.uniform(-1.0, 1.0);
            std::string word;
            std::size_t len = 1 + st.below(4);
            for (std::size_t k = 0; k < len; ++k) word.push_back(kTokens[st.below(4)]);
            curves::MarkingWord h = curves::parse_word(Backend::PuncturedTorus, word);
            hyp::HyperbolicStructure Xh = hyp::HyperbolicStructure::torus(X);
            curves::SimpleClosedCurve dc = curves::SimpleClosedCurve::torus(delta);
            curves::SimpleClosedCurve dm = curves::act(h, dc);
            hyp::PTStructure left =
                hyp::act(h, hyp::HyperbolicStructure::torus(quake::earthquake_pt(X, delta, w * t)))
                    .pt;
            hyp::PTStructure right =
                quake::earthquake_pt(hyp::act(h, Xh).pt, dm.slope, w * t);
            double d = rel_diff(left, right);
            ++s.cases;
            s.worst = std::max(s.worst, d);
            if (d > tol) ++s.failures;
        }
        report.suites.push_back(s);
    }

    {  // Collar inequality: crossings force length
        SuiteResult s{"collar"};
        std::size_t structures = std::min<std::size_t>(cases, 200);
        for (std::size_t i = 0; i < structures; ++i) {
            Rng st = Rng::stream(seed ^ 0xE5ull, i);
            double l = lmax * std::sqrt(std::max(st.uniform(), 1e-16));
            hyp::PTStructure X = wp_structure(l, st.uniform() * l);
            std::vector<hyp::CurveLength> curves_list = hyp::enumerate_by_length(X, 4.0);
            std::size_t checked = 0;
            for (std::size_t a = 0; a < curves_list.size() && checked < 50; ++a)
                for (std::size_t b = a + 1; b < curves_list.size() && checked < 50; ++b) {
                    double inter = curves::intersection(
                        curves::SimpleClosedCurve::torus(curves_list[a].slope),
                        curves::SimpleClosedCurve::torus(curves_list[b].slope));
                    if (inter < 1.0) continue;
                    double allowed =
                        curves_list[b].length / measures::collar_R(curves_list[a].length);
                    double slack = inter - allowed;
                    ++s.cases;
                    ++checked;
                    s.worst = std::max(s.worst, slack);
                    if (slack > 1e-9) ++s.failures;
                }
        }
        report.suites.push_back(s);
    }

    {  // Systole upper bound
        SuiteResult s{"systole_bound"};
        double K = hyp::K_sys_bound(config.spec);
        std::size_t structures = std::min<std::size_t>(cases, 500);
        for (std::size_t i = 0; i < structures; ++i) {
            Rng st = Rng::stream(seed ^ 0xF6ull, i);
            double l = lmax * std::sqrt(std::max(st.uniform(), 1e-16));
            hyp::PTStructure X = wp_structure(l, st.uniform() * l);
            double ls = hyp::systole(hyp::HyperbolicStructure::torus(X)).l_sys;
            double slack = ls - K;
            ++s.cases;
            s.worst = std::max(s.worst, slack);
            if (!(ls > 0.0) || slack > 1e-9) ++s.failures;
        }
        report.suites.push_back(s);
    }

    return report;
}

std::string format_report(const SuiteReport& report) {
    std::string out;
    char line[160];
    for (const SuiteResult& s : report.suites) {
        std::snprintf(line, sizeof(line), "%-18s %s cases=%zu failures=%zu worst=%.6e\n",
                      s.name.c_str(), s.passed() ? "PASS" : "FAIL", s.cases, s.failures, s.worst);
        out += line;
    }
    out += report.all_passed() ? "ALL PASS\n" : "ALL FAIL\n";
    return out;
}

}  // namespace eqlab::experiments

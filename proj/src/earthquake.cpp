#include "eqlab/earthquake.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace eqlab::quake {

namespace {

constexpr double kLn2 = 0.6931471805599453094;

// Signed log-space scalar: value = sg * exp(lg), sg in {-1, 0, +1}.
struct SLog {
    double lg;
    double sg;
};

SLog sl_add(SLog a, SLog b) {
    if (a.sg == 0.0) return b;
    if (b.sg == 0.0) return a;
    if (b.lg > a.lg) std::swap(a, b);
    double d = b.lg - a.lg;  // <= 0
    if (a.sg == b.sg) return {a.lg + std::log1p(std::exp(d)), a.sg};
    double m = -std::expm1(d);  // 1 - e^d
    if (m <= 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
    return {a.lg + std::log(m), a.sg};
}

}  // namespace

// Log-traces (ltg, ltd, lte) of the Farey triangle (gamma, delta, gamma+delta)
// with cross(gamma, delta) = +1; returns the log-traces of (delta, gamma+delta)
// after twisting along gamma by t. Both parents cross gamma exactly once, so
// each trace evolves with a single e^{t/2} frequency:
//   d(t) = d ch(t/2) + (e - g d/2)/s sh(t/2),
//   e(t) = e ch(t/2) + (g e/2 - d)/s sh(t/2),  s = sqrt(g^2/4 - 1).
// Working in signed log space keeps this stable no matter how long gamma is:
// no long matrix words, no descending trace cancellation.
std::pair<double, double> twist_parent_log_traces(double ltg, double ltd, double lte, double t) {
    double ls;
    if (ltg > 20.0)
        ls = ltg - kLn2 + 0.5 * std::log1p(-4.0 * std::exp(-2.0 * ltg));
    else {
        double g = std::exp(ltg);
        ls = 0.5 * std::log(g * g / 4.0 - 1.0);
    }
    SLog wd = sl_add({lte, 1.0}, {ltg + ltd - kLn2, -1.0});  // e - g d / 2
    SLog we = sl_add({ltg + lte - kLn2, 1.0}, {ltd, -1.0});  // g e / 2 - d
    wd.lg -= ls;
    we.lg -= ls;
    double at = std::abs(t) / 2.0;
    double lch = at < 1.0 ? std::log(std::cosh(at))
                          : at + std::log1p(std::exp(-2.0 * at)) - kLn2;
    double lsh = at < 1.0 ? std::log(std::sinh(at))
                          : at + std::log1p(-std::expm1(-2.0 * at) - 1.0) - kLn2;
    double ssh = t >= 0.0 ? 1.0 : -1.0;
    SLog d2 = sl_add({ltd + lch, 1.0}, {wd.lg + lsh, wd.sg * ssh});
    SLog e2 = sl_add({lte + lch, 1.0}, {we.lg + lsh, we.sg * ssh});
    if (d2.sg <= 0.0 || e2.sg <= 0.0 || !std::isfinite(d2.lg) || !std::isfinite(e2.lg))
        throw internal_error("earthquake_pt: twisted chart trace collapsed");
    return {d2.lg, e2.lg};
}

namespace {

hyp::HyperbolicStructure flow(const hyp::HyperbolicStructure& X,
                              const curves::MeasuredLamination& lam, double t) {
    return earthquake_lamination(X, lam, t).X;
}

}  // namespace

// ---------------------------------------------------------------------------
// Phase-space points and orbit artifacts
// ---------------------------------------------------------------------------

void UnitLaminationPoint::validate(double tol) const {
    X.validate();
    lam.validate();
    double len = hyp::lamination_length(X, lam).value;
    if (std::abs(len - 1.0) > tol)
        throw invalid_input("UnitLaminationPoint: lamination length must be 1");
}

UnitLaminationPoint UnitLaminationPoint::normalized(const hyp::HyperbolicStructure& X,
                                                    const curves::MeasuredLamination& lam) {
    double len = hyp::lamination_length(X, lam, 1e-12).value;
    return UnitLaminationPoint{X, lam.scaled(1.0 / len)};
}

void OrbitRecord::validate() const {
    if (times.size() != states.size())
        throw invalid_input("OrbitRecord: times/states length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw invalid_input("OrbitRecord: times must be strictly increasing");
    for (const auto& [curve, series] : tracked)
        if (series.size() != times.size())
            throw invalid_input("OrbitRecord: tracked series length mismatch");
}

void MWConstants::validate(const SurfaceSpec& spec) const {
    if (!(rho > 0.0) || !(C > 0.0)) throw invalid_input("MWConstants: rho, C must be > 0");
    if (rho > hyp::K_sys_bound(spec) * (1.0 + 1e-12))
        throw invalid_input("MWConstants: rho exceeds the systole bound");
}

// ---------------------------------------------------------------------------
// The flow
// ---------------------------------------------------------------------------

hyp::FNStructure twist(const hyp::FNStructure& X, int i, double t) {
    X.validate();
    if (i < 1 || i > curves::kPantsCurves) throw invalid_input("twist: index out of range");
    hyp::FNStructure out = X;
    out.tau[i - 1] += t;
    return out;
}

hyp::PTStructure earthquake_pt(const hyp::PTStructure& X, const curves::Slope& gamma, double t,
                               double map_tol) {
    curves::Slope g = curves::canonicalize(gamma);
    X.validate(1e-6);
    if (t == 0.0) return X;
    curves::Mat2z M = curves::basis_change_to_first(g);
    // columns of M^{-1} are (gamma, delta) with cross(gamma, delta) = +1
    std::int64_t dp = -M.b, dq = M.a;
    hyp::TraceCache cx(X);
    double ltg = cx.log_trace(g);
    double ltd = cx.log_trace(curves::canonicalize({dp, dq}));
    double lte = cx.log_trace(curves::canonicalize({g.p + dp, g.q + dq}));
    auto [ld2, le2] = twist_parent_log_traces(ltg, ltd, lte, t);
    hyp::TraceCache chart = hyp::TraceCache::from_log_traces(ltg, ld2, le2);
    // old basis curves in (gamma, delta) coordinates
    double lt[3];
    const std::int64_t e[3][2] = {{1, 0}, {0, 1}, {1, 1}};
    for (int i = 0; i < 3; ++i) {
        std::int64_t cp = M.a * e[i][0] + M.b * e[i][1];
        std::int64_t cq = M.c * e[i][0] + M.d * e[i][1];
        try {
            lt[i] = chart.log_trace(curves::canonicalize({cp, cq}));
        } catch (const internal_error&) {
            // The walk descends through a twist well deeper than double
            // precision can follow: the result is not representable here.
            throw budget_exceeded("earthquake_pt: resulting traces are not representable");
        }
        if (!(lt[i] < 709.0))
            throw budget_exceeded("earthquake_pt: resulting traces exceed the double range");
    }
    hyp::PTStructure out;
    try {
        out = hyp::PTStructure{std::exp(lt[0]), std::exp(lt[1]), std::exp(lt[2])}.renormalized();
    } catch (const internal_error&) {
        // The read-back walk lost so much precision that the triple no longer
        // sits near the relation variety; the result is not representable in
        // the input marking.
        throw budget_exceeded("earthquake_pt: resulting traces are not representable");
    }
    // Round-trip certification: the twist fixes gamma's own trace, so reading
    // it back from the result must reproduce ltg. A mismatch means the result
    // is not faithfully representable in the input marking. After long twists
    // the read-back walk itself can be infeasible (gamma's trace is tiny
    // against the sheared basis) while the result, built from ascending
    // walks, is fine -- such walk failures are not treated as errors.
    try {
        double back = hyp::TraceCache(out).log_trace(g);
        if (std::abs(back - ltg) > map_tol * std::max(4.0, ltg))
            throw budget_exceeded(
                "earthquake_pt: precision loss mapping back to the input marking");
    } catch (const internal_error&) {
    }
    return out;
}

hyp::HyperbolicStructure earthquake_multicurve(const hyp::HyperbolicStructure& X,
                                               const curves::Multicurve& mc, double t) {
    X.validate();
    mc.validate();
    if (X.backend == Backend::PuncturedTorus) {
        // Disjointness on the punctured torus forces a single slope; fold the
        // weights and twist once.
        std::map<std::pair<std::int64_t, std::int64_t>, double> weights;
        for (const auto& [g, a] : mc.components) {
            if (g.backend != Backend::PuncturedTorus)
                throw invalid_input("earthquake_multicurve: backend mismatch");
            weights[{g.slope.p, g.slope.q}] += a;
        }
        hyp::PTStructure cur = X.pt;
        for (const auto& [pq, a] : weights)
            cur = earthquake_pt(cur, curves::Slope{pq.first, pq.second}, a * t);
        return hyp::HyperbolicStructure::torus(cur);
    }
    hyp::HyperbolicStructure out = X;
    for (const auto& [g, a] : mc.components) {
        if (g.backend != Backend::GenusTwo)
            throw invalid_input("earthquake_multicurve: backend mismatch");
        if (!g.marking.empty())
            throw invalid_input("earthquake_multicurve: genus-2 twists support the base pants decomposition only");
        out.fn = twist(out.fn, g.pants_index, a * t);
    }
    return out;
}

EarthquakeResult earthquake_lamination(const hyp::HyperbolicStructure& X,
                                       const curves::MeasuredLamination& lam, double t,
                                       double tol, int max_depth) {
    X.validate();
    lam.validate();
    if ((X.backend == Backend::PuncturedTorus) != (lam.backend == Backend::PuncturedTorus))
        throw invalid_input("earthquake_lamination: backend mismatch");
    if (X.backend == Backend::GenusTwo) {
        for (double mi : lam.dt.m)
            if (mi != 0.0)
                throw invalid_input("earthquake_lamination: genus-2 lamination not pants-supported");
        if (!lam.marking.empty())
            throw invalid_input("earthquake_lamination: genus-2 twists support the base pants decomposition only");
        hyp::HyperbolicStructure out = X;
        for (int i = 0; i < curves::kPantsCurves; ++i) out.fn.tau[i] += lam.dt.t[i] * t;
        return {out, 0.0, 0};
    }
    auto [a, b] = curves::canonical_sign(lam.a, lam.b);
    if (t == 0.0) return {X, 0.0, 0};
    if (b == 0.0)
        return {hyp::HyperbolicStructure::torus(earthquake_pt(X.pt, {1, 0}, a * t)), 0.0, 0};
    if (a == 0.0)
        return {hyp::HyperbolicStructure::torus(earthquake_pt(X.pt, {0, 1}, b * t)), 0.0, 0};

    // Approximate by continued-fraction convergents (h_k, k_k) of a/b with
    // weights b/k_k, until the basis lengths are Cauchy.
    double r = a / b;
    double hk1 = 1.0, kk1 = 0.0;
    double hk = std::floor(r), kk = 1.0;
    double frac = r - hk;
    std::array<double, 3> prev_len{};
    bool have_prev = false;
    EarthquakeResult res;
    for (int depth = 0; depth < max_depth; ++depth) {
        if (!(std::abs(hk) < 9e15 && kk < 9e15))
            throw convergence_failure("earthquake_lamination: convergent coordinates overflow");
        curves::Slope gk{static_cast<std::int64_t>(hk), static_cast<std::int64_t>(kk)};
        double ck = b / kk;
        hyp::PTStructure Xk;
        try {
            Xk = earthquake_pt(X.pt, gk, ck * t, 1e-6);
        } catch (const budget_exceeded&) {
            // representability wall: deeper convergents cannot be flowed in
            // this marking, so the best achieved tolerance is final
            throw convergence_failure(
                "earthquake_lamination: convergent depth limited by precision, achieved " +
                std::to_string(res.tol_achieved) + " of requested " + std::to_string(tol));
        }
        hyp::TraceCache cache(Xk);
        std::array<double, 3> len{cache.length({1, 0}), cache.length({0, 1}),
                                  cache.length({1, 1})};
        res.X = hyp::HyperbolicStructure::torus(Xk);
        res.depth = depth;
        if (frac < 1e-15) {  // the direction is rational: this flow is exact
            res.tol_achieved = 0.0;
            return res;
        }
        if (have_prev) {
            double d = 0.0;
            for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(len[i] - prev_len[i]));
            res.tol_achieved = d;
            if (d < tol) return res;
        }
        prev_len = len;
        have_prev = true;
        r = 1.0 / frac;
        double digit = std::floor(r);
        frac = r - digit;
        double hn = digit * hk + hk1, kn = digit * kk + kk1;
        hk1 = hk;
        kk1 = kk;
        hk = hn;
        kk = kn;
    }
    throw convergence_failure("earthquake_lamination: tolerance not met within depth budget");
}

OrbitRecord sample_orbit(const hyp::HyperbolicStructure& X,
                         const curves::MeasuredLamination& lam, double t0, double t1, int n,
                         const std::vector<curves::SimpleClosedCurve>& tracked) {
    if (!(t1 > t0) || n < 1) throw invalid_input("sample_orbit: need t1 > t0 and n >= 1");
    OrbitRecord orbit;
    for (const auto& g : tracked) orbit.tracked.push_back({g, {}});
    for (int i = 0; i <= n; ++i) {
        double t = t0 + (t1 - t0) * static_cast<double>(i) / n;
        hyp::HyperbolicStructure Xi = flow(X, lam, t);
        orbit.times.push_back(t);
        orbit.states.push_back(Xi);
        for (auto& [g, series] : orbit.tracked) series.push_back(hyp::curve_length(Xi, g));
    }
    orbit.validate();
    return orbit;
}

// ---------------------------------------------------------------------------
// Local length-behavior checks
// ---------------------------------------------------------------------------

KerckhoffReport kerckhoff_check(const hyp::HyperbolicStructure& X,
                                const curves::MeasuredLamination& lam,
                                const curves::SimpleClosedCurve& gamma, double tmax, double h,
                                int grid) {
    if (!(tmax > 0.0) || !(h > 0.0) || grid < 2) throw invalid_input("kerckhoff_check: bad grid");
    KerckhoffReport rep;
    rep.error_bound = 10.0 * h;
    double i0 = curves::intersection(lam, gamma);
    if (i0 == 0.0) {
        rep.degenerate = true;
        rep.max_violation = 0.0;
        return rep;
    }
    rep.max_violation = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid; ++j) {
        double t = -tmax + 2.0 * tmax * static_cast<double>(j) / (grid - 1);
        double lp = hyp::curve_length(flow(X, lam, t + h), gamma);
        double lm = hyp::curve_length(flow(X, lam, t - h), gamma);
        double deriv = (lp - lm) / (2.0 * h);
        rep.max_violation = std::max(rep.max_violation, std::abs(deriv) - i0);
    }
    return rep;
}

MinLengthResult min_length_along_orbit(const hyp::HyperbolicStructure& X,
                                       const curves::MeasuredLamination& lam,
                                       const curves::SimpleClosedCurve& gamma, double window,
                                       double dt) {
    if (!(window > 0.0)) throw invalid_input("min_length_along_orbit: window must be > 0");
    if (curves::intersection(lam, gamma) == 0.0)
        return {hyp::curve_length(X, gamma), 0.0};
    if (dt <= 0.0) dt = window / 50.0;
    auto f = [&](double t) { return hyp::curve_length(flow(X, lam, t), gamma); };
    int npts = static_cast<int>(std::ceil(2.0 * window / dt)) + 1;
    double best = std::numeric_limits<double>::infinity();
    int besti = -1;
    std::vector<double> ts(npts);
    for (int j = 0; j < npts; ++j) {
        ts[j] = -window + 2.0 * window * static_cast<double>(j) / (npts - 1);
        double v = f(ts[j]);
        if (v < best) {
            best = v;
            besti = j;
        }
    }
    if (besti == 0 || besti == npts - 1)
        throw invalid_input("min_length_along_orbit: minimum at window boundary, enlarge window");
    // golden-section refinement on the bracketing interval
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = ts[besti - 1], hi = ts[besti + 1];
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > 1e-10) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
        }
    }
    double tm = (lo + hi) / 2.0;
    double fm = f(tm);
    if (fm > best) {  // refinement must not lose to the grid
        tm = ts[besti];
        fm = best;
    }
    return {fm, tm};
}

MWEnvelopeReport mw_envelope_check(const OrbitRecord& orbit, const curves::SimpleClosedCurve& gamma,
                                   double intersection_number, const MWConstants& consts) {
    orbit.validate();
    if (!(intersection_number >= 0.0))
        throw invalid_input("mw_envelope_check: bad intersection number");
    const std::vector<double>* series = nullptr;
    for (const auto& [g, s] : orbit.tracked)
        if (g == gamma) series = &s;
    if (!series) throw invalid_input("mw_envelope_check: curve not tracked in orbit");
    MWEnvelopeReport rep;
    std::size_t imin = 0;
    for (std::size_t i = 1; i < series->size(); ++i)
        if ((*series)[i] < (*series)[imin]) imin = i;
    rep.eps_gamma = (*series)[imin];
    rep.t_gamma = orbit.times[imin];
    rep.worst_upper_slack = -std::numeric_limits<double>::infinity();
    rep.worst_lower_slack = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < series->size(); ++i) {
        double l = (*series)[i];
        if (l > consts.rho) continue;
        ++rep.n_in_window;
        double linear = intersection_number * std::abs(orbit.times[i] - rep.t_gamma);
        rep.worst_upper_slack = std::max(rep.worst_upper_slack, l - (linear + rep.eps_gamma));
        rep.worst_lower_slack =
            std::max(rep.worst_lower_slack, (linear - consts.C * rep.eps_gamma) - l);
    }
    rep.applicable = rep.n_in_window > 0;
    if (!rep.applicable) {
        rep.worst_upper_slack = 0.0;
        rep.worst_lower_slack = 0.0;
    }
    return rep;
}

}  // namespace eqlab::quake

#include "eqlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "eqlab/rng.hpp"

namespace eqlab::measures {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Length of the projective direction (a,b), canonicalized into the
// half-plane chart. The pure (1,0) axis short-circuits the CF loop.
double length_dir(hyp::TraceCache& cache, double a, double b, double tol) {
    auto [ca, cb] = curves::canonical_sign(a, b);
    if (cb == 0.0) return ca * cache.length({1, 0});
    return cache.lamination_length(ca, cb, tol).value;
}

template <class F>
double simpson_rec(const F& f, double a, double fa, double b, double fb, double m, double fm,
                   double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

// Adaptive Simpson with the absolute tolerance scaled off a coarse pass.
template <class F>
double integrate(const F& f, double a, double b, double rel_tol) {
    if (!(b > a)) return 0.0;
    const int K = 16;
    double coarse = 0.0;
    for (int i = 0; i < K; ++i) {
        double x0 = a + (b - a) * i / K, x1 = a + (b - a) * (i + 1) / K;
        coarse += (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
    }
    double tol = rel_tol * std::max(std::abs(coarse), 1e-300);
    double m = 0.5 * (a + b), fa = f(a), fb = f(b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 30);
}

// Bracket-and-shrink minimizer for a convex map.
template <class F>
std::pair<double, double> convex_min(const F& f, double x0, double scale) {
    double a = x0 - scale, m = x0, b = x0 + scale;
    double fa = f(a), fm = f(m), fb = f(b);
    double step = scale;
    for (int guard = 0; fa < fm && guard < 200; ++guard) {
        b = m;
        fb = fm;
        m = a;
        fm = fa;
        step *= 2.0;
        a = m - step;
        fa = f(a);
    }
    for (int guard = 0; fb < fm && guard < 200; ++guard) {
        a = m;
        fa = fm;
        m = b;
        fm = fb;
        step *= 2.0;
        b = m + step;
        fb = f(b);
    }
    for (int it = 0; it < 120 && (b - a) > 1e-7 * (1.0 + std::abs(m)); ++it) {
        double u = m - 0.382 * (m - a), v = m + 0.382 * (b - m);
        double fu = f(u), fv = f(v);
        if (fu < fm) {
            b = m;
            m = u;
            fm = fu;
        } else if (fv < fm) {
            a = m;
            m = v;
            fm = fv;
        } else {
            a = u;
            b = v;
        }
    }
    return {m, fm};
}

// Root of f between lo and hi (f changes sign on the bracket).
template <class F>
double bisect_root(const F& f, double lo, double hi, int iters = 70) {
    bool neg = f(lo) <= 0.0;
    for (int i = 0; i < iters; ++i) {
        double mid = 0.5 * (lo + hi);
        if ((f(mid) <= 0.0) == neg)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Symmetric structure (y = z solved from the relation) with l_(1,0) = l.
hyp::PTStructure base_from_length(double l) {
    double x = 2.0 * std::cosh(0.5 * l);
    double y = x / std::sqrt(x - 2.0);
    return hyp::PTStructure{x, y, y};
}

double theta_of(double a, double b) {
    auto [ca, cb] = curves::canonical_sign(a, b);
    double th = std::atan2(cb, ca);
    if (th >= kPi) th = 0.0;
    return th;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sample and scan artifacts
// ---------------------------------------------------------------------------

void NuSample::validate() const {
    point.validate(1e-9);
    if (!(weight > 0.0) || !std::isfinite(weight))
        throw invalid_input("NuSample: weight must be positive and finite");
}

void ScanResult::validate() const {
    for (const ScanRow& r : rows) {
        if (!(r.stderr_ >= 0.0) || !std::isfinite(r.stderr_))
            throw invalid_input("ScanResult: stderr must be non-negative");
        if (r.n < 1) throw invalid_input("ScanResult: each row needs n >= 1");
    }
}

void fit_scan(ScanResult& result, double max_rel_stderr) {
    std::vector<double> xs, ys;
    for (const ScanRow& r : result.rows) {
        if (!(r.parameter > 0.0) || !(r.estimate > 0.0)) continue;
        if (r.stderr_ > max_rel_stderr * r.estimate) continue;
        xs.push_back(std::log(r.parameter));
        ys.push_back(std::log(r.estimate));
    }
    if (xs.size() < 2) throw invalid_input("fit_scan: fewer than two usable rows");
    result.fit = stats::ols(xs, ys);
}

// ---------------------------------------------------------------------------
// Counting and Lebesgue forms
// ---------------------------------------------------------------------------

double thurston_count(const hyp::HyperbolicStructure& X, double L, std::size_t max_count) {
    if (X.backend != Backend::PuncturedTorus)
        throw invalid_input("thurston_count: punctured-torus backend only");
    if (!(L > 0.0)) throw invalid_input("thurston_count: L must be positive");
    X.pt.validate(1e-6);
    hyp::TraceCache cache(X.pt);
    double l1 = cache.length({1, 0});
    double row_floor = collar_R(l1);  // l_(a,b) >= b * R(l1) for b >= 1
    double bmax = L / row_floor;
    if (bmax > 2e5)
        throw budget_exceeded("thurston_count: row budget exceeded at L=" + std::to_string(L));
    std::size_t count = static_cast<std::size_t>(std::floor(L / l1));  // the b = 0 ray
    for (std::int64_t b = 1; b <= static_cast<std::int64_t>(bmax); ++b) {
        double bb = static_cast<double>(b);
        auto len = [&](double a) { return length_dir(cache, a, bb, 1e-9); };
        auto [amin, lmin] = convex_min(len, 0.0, 1.0);
        if (lmin > L) continue;
        auto excess = [&](double a) { return len(a) - L; };
        double hi = amin + 1.0;
        for (int guard = 0; excess(hi) <= 0.0 && guard < 200; ++guard) hi = amin + 2.0 * (hi - amin);
        double lo = amin - 1.0;
        for (int guard = 0; excess(lo) <= 0.0 && guard < 200; ++guard) lo = amin - 2.0 * (amin - lo);
        double ahi = bisect_root(excess, amin, hi);
        double alo = bisect_root(excess, amin, lo);
        std::int64_t c = static_cast<std::int64_t>(std::floor(ahi + 1e-9)) -
                         static_cast<std::int64_t>(std::ceil(alo - 1e-9)) + 1;
        if (c > 0) count += static_cast<std::size_t>(c);
        if (count > max_count) throw budget_exceeded("thurston_count: count budget exceeded");
    }
    return static_cast<double>(count) / (L * L);
}

// Lattice-to-Lebesgue density of the integral point count. All integral
// points are counted (not only primitive ones), so the fitted constant is
// unity.
constexpr double kCountNormalization = 1.0;

double B_estimate(const hyp::HyperbolicStructure& X, BMethod method, double L) {
    if (X.backend != Backend::PuncturedTorus)
        throw invalid_input("B_estimate: punctured-torus backend only");
    if (method == BMethod::Count) return kCountNormalization * thurston_count(X, L);
    return b_lebesgue(X.pt, 1.0, 1e-7);
}

double b_lebesgue(const hyp::PTStructure& X, double level, double tol) {
    X.validate(1e-6);
    if (!(level > 0.0)) throw invalid_input("b_lebesgue: level must be positive");
    hyp::TraceCache cache(X);
    auto f = [&](double th) {
        double l = length_dir(cache, std::cos(th), std::sin(th), 1e-9);
        double r = level / l;
        return 0.5 * r * r;
    };
    return integrate(f, 0.0, kPi, tol);
}

// ---------------------------------------------------------------------------
// Weil-Petersson sampling
// ---------------------------------------------------------------------------

void WPRegion::validate() const {
    if (!(lmax > 0.0) || !std::isfinite(lmax))
        throw invalid_input("WPRegion: empty sampling region (need lmax > 0)");
}

PTSample sample_wp_pt_one(double lmax, std::uint64_t seed, std::uint64_t index) {
    Rng st = Rng::stream(seed, index);
    double u = std::max(st.uniform(), 1e-16);  // guard the measure-zero l = 0 draw
    PTSample s;
    s.l = lmax * std::sqrt(u);
    s.tau = st.uniform() * s.l;
    s.X = base_from_length(s.l);
    if (s.tau != 0.0) s.X = quake::earthquake_pt(s.X, {1, 0}, s.tau);
    return s;
}

std::vector<PTSample> sample_wp_pt(double lmax, std::size_t n, std::uint64_t seed) {
    WPRegion{lmax}.validate();
    std::vector<PTSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_wp_pt_one(lmax, seed, i));
    return out;
}

std::vector<hyp::HyperbolicStructure> sample_wp(const SurfaceSpec& spec, const WPRegion& region,
                                                std::size_t n, std::uint64_t seed) {
    spec.validate();
    region.validate();
    std::vector<hyp::HyperbolicStructure> out;
    out.reserve(n);
    if (spec.backend() == Backend::PuncturedTorus) {
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(hyp::HyperbolicStructure::torus(sample_wp_pt_one(region.lmax, seed, i).X));
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        Rng st = Rng::stream(seed, i);
        hyp::FNStructure fn;
        for (int j = 0; j < curves::kPantsCurves; ++j) {
            double u = std::max(st.uniform(), 1e-16);
            fn.l[j] = region.lmax * std::sqrt(u);
            fn.tau[j] = st.uniform() * fn.l[j];
        }
        out.push_back(hyp::HyperbolicStructure::genus2(fn));
    }
    return out;
}

std::vector<NuSample> sample_nu(const SurfaceSpec& spec, const WPRegion& region, std::size_t n,
                                std::uint64_t seed) {
    spec.validate();
    region.validate();
    const double md = static_cast<double>(spec.lamination_dim());
    std::vector<NuSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng st = Rng::stream(seed, i);
        NuSample ns;
        ns.seed = seed;
        ns.index = i;
        if (spec.backend() == Backend::PuncturedTorus) {
            double u = std::max(st.uniform(), 1e-16);
            double l = region.lmax * std::sqrt(u);
            double tau = st.uniform() * l;
            hyp::PTStructure X = base_from_length(l);
            if (tau != 0.0) X = quake::earthquake_pt(X, {1, 0}, tau);
            double th = st.uniform() * kPi;
            auto [a, b] = curves::canonical_sign(std::cos(th), std::sin(th));
            hyp::TraceCache cache(X);
            double lu = length_dir(cache, a, b, 1e-12);
            ns.point.X = hyp::HyperbolicStructure::torus(X);
            ns.point.lam = curves::MeasuredLamination::torus(a / lu, b / lu);
            ns.weight = 1.0 / (md * lu * lu);
        } else {
            hyp::FNStructure fn;
            for (int j = 0; j < curves::kPantsCurves; ++j) {
                double u = std::max(st.uniform(), 1e-16);
                fn.l[j] = region.lmax * std::sqrt(u);
                fn.tau[j] = st.uniform() * fn.l[j];
            }
            double z = st.uniform();
            double phi = st.uniform() * 0.5 * kPi;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double dir[3] = {r * std::cos(phi), r * std::sin(phi), z};
            double lu = 0.0;
            for (int j = 0; j < curves::kPantsCurves; ++j) lu += dir[j] * fn.l[j];
            curves::DTCoordinates dt;
            for (int j = 0; j < curves::kPantsCurves; ++j) dt.t[j] = dir[j] / lu;
            ns.point.X = hyp::HyperbolicStructure::genus2(fn);
            ns.point.lam = curves::MeasuredLamination::genus2(dt);
            ns.weight = 1.0 / (md * std::pow(lu, md));
        }
        ns.validate();
        out.push_back(std::move(ns));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Collar bound and the thin-and-aligned volume
// ---------------------------------------------------------------------------

double collar_R(double x) {
    if (!(x > 0.0)) throw invalid_input("collar_R: x must be positive");
    return 2.0 * std::asinh(1.0 / std::sinh(0.5 * x));
}

double nu_sector_mass(const hyp::PTStructure& X, const curves::Slope& gamma, double mu,
                      double tol) {
    if (!(mu > 0.0)) throw invalid_input("nu_sector_mass: mu must be positive");
    X.validate(1e-6);
    curves::Slope g = curves::canonicalize(gamma);
    hyp::TraceCache cache(X);
    curves::Mat2z Minv = curves::basis_change_to_first(g).inverse();
    // The line {lambda: i(lambda, gamma) = 1} parametrizes every projective
    // direction except the gamma-ray; the cone boundary is where the length
    // equals 1/mu.
    auto lam_line = [&](double s) {
        return std::pair<double, double>(static_cast<double>(Minv.a) * s + static_cast<double>(Minv.b),
                                         static_cast<double>(Minv.c) * s + static_cast<double>(Minv.d));
    };
    // Length tolerance matched to the mass tolerance: the certified
    // continued-fraction bracketing has a floor near 1e-7 relative on
    // isolated directions, and the sector mass only needs lengths to a
    // fraction of its own integration tolerance. The rare direction at the
    // certification floor is retried with a looser band; its contribution is
    // weighted by an infinitesimal angular neighborhood.
    auto robust_len = [&](double a, double b) {
        try {
            return length_dir(cache, a, b, 1e-6);
        } catch (const convergence_failure&) {
            return length_dir(cache, a, b, 1e-4);
        }
    };
    auto line_len = [&](double s) {
        auto [a, b] = lam_line(s);
        return robust_len(a, b);
    };
    double target = 1.0 / mu;
    auto [smin, lmin] = convex_min(line_len, 0.0, 1.0);
    auto density = [&](double th) {
        double l = robust_len(std::cos(th), std::sin(th));
        return 0.5 / (l * l);
    };
    // Constraint vacuous: the cone covers every direction.
    if (lmin >= target) return integrate(density, 0.0, kPi, tol);
    auto excess = [&](double s) { return line_len(s) - target; };
    double hi = smin + 1.0;
    for (int guard = 0; excess(hi) <= 0.0 && guard < 200; ++guard) hi = smin + 2.0 * (hi - smin);
    double lo = smin - 1.0;
    for (int guard = 0; excess(lo) <= 0.0 && guard < 200; ++guard) lo = smin - 2.0 * (smin - lo);
    double sp = bisect_root(excess, smin, hi);
    double sm = bisect_root(excess, smin, lo);
    auto [ap, bp] = lam_line(sp);
    auto [am, bm] = lam_line(sm);
    double thp = theta_of(ap, bp), thm = theta_of(am, bm);
    double mn = std::min(thp, thm), mx = std::max(thp, thm);
    double thg = theta_of(static_cast<double>(g.p), static_cast<double>(g.q));
    // The cone is the arc of directions containing the gamma-ray.
    if (thg >= mn - 1e-12 && thg <= mx + 1e-12) return integrate(density, mn, mx, tol);
    return integrate(density, 0.0, mn, tol) + integrate(density, mx, kPi, tol);
}

VolumeEstimate volume_omega(double eps0, double mu, std::size_t n, std::uint64_t seed) {
    if (!(eps0 > 0.0) || !(mu > 0.0))
        throw invalid_input("volume_omega: eps0 and mu must be positive");
    if (collar_R(eps0) <= eps0)
        throw invalid_input(
            "volume_omega: eps0 must lie below the collar fixed point so the shell certifies the "
            "systole");
    if (n == 0) throw invalid_input("volume_omega: need n >= 1");
    const double lo = 0.5 * eps0, hi = eps0;
    const double shell_vol = 0.5 * (hi * hi - lo * lo);  // = 3 eps0^2 / 8
    const double sub_lo = 4.0 * eps0 / 6.0, sub_hi = 5.0 * eps0 / 6.0;
    std::vector<double> vals, lows, bsub;
    vals.reserve(n);
    lows.reserve(n);
    const std::size_t nb = std::min<std::size_t>(n, 1500);
    bsub.reserve(nb);
    for (std::size_t i = 0; i < n; ++i) {
        Rng st = Rng::stream(seed, i);
        double l = std::sqrt(lo * lo + st.uniform() * (hi * hi - lo * lo));
        double tau = st.uniform() * l;
        hyp::PTStructure X = base_from_length(l);
        if (tau != 0.0) X = quake::earthquake_pt(X, {1, 0}, tau);
        vals.push_back(nu_sector_mass(X, {1, 0}, mu, 1e-5));
        bool sub = l >= sub_lo && l <= sub_hi;
        lows.push_back(sub ? nu_sector_mass(X, {1, 0}, 0.5 * mu, 1e-5) : 0.0);
        if (i < nb) bsub.push_back(sub ? b_lebesgue(X, 1.0, 1e-4) : 0.0);
    }
    auto me = stats::mean_stderr(vals);
    auto ml = stats::mean_stderr(lows);
    auto mb = stats::mean_stderr(bsub);
    VolumeEstimate out;
    out.estimate = shell_vol * me.mean;
    out.stderr_ = shell_vol * me.stderr_;
    out.lower_bound_variant = shell_vol * ml.mean;
    double half = 0.5 * mu * collar_R(eps0);
    out.scaling_bound = half * half * shell_vol * mb.mean;
    out.n = n;
    return out;
}

}  // namespace eqlab::measures

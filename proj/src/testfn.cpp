#include "eqlab/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eqlab/error.hpp"
#include "eqlab/measures.hpp"
#include "eqlab/rng.hpp"

namespace eqlab::testfn {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Symmetric trace triple with l_(1,0) = l (Markov-exact), twisted by tau.
hyp::PTStructure shell_structure(double l, double tau) {
    double x = 2.0 * std::cosh(l / 2.0);
    double yz = x / std::sqrt(x - 2.0);
    hyp::PTStructure base{x, yz, yz};
    return tau == 0.0 ? base : quake::earthquake_pt(base, {1, 0}, tau);
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

void TestFnParams::validate(const SurfaceSpec& spec) const {
    if (!(eps0 > 0.0 && mu > 0.0 && rho > 0.0 && C > 0.0))
        throw invalid_input("TestFnParams: all parameters must be positive");
    if (!(eps0 * (2.0 + C) < rho / 2.0))
        throw invalid_input("TestFnParams: eps0 (2 + C) must stay below rho / 2");
    if (!(mu * measures::collar_R(eps0) <= 1.0))
        throw invalid_input("TestFnParams: mu collar_R(eps0) must not exceed 1");
    if (!(rho <= hyp::K_sys_bound(spec)))
        throw invalid_input("TestFnParams: rho exceeds the systole bound");
}

double choose_eps0(double rho, double C, double safety) {
    if (!(rho > 0.0 && C > 0.0)) throw invalid_input("choose_eps0: rho, C must be positive");
    if (!(safety > 0.0 && safety < 1.0)) throw invalid_input("choose_eps0: safety must be in (0,1)");
    return safety * rho / (2.0 * (2.0 + C));
}

// ---------------------------------------------------------------------------
// The test functions
// ---------------------------------------------------------------------------

std::vector<ShortCurve> short_curves(const hyp::HyperbolicStructure& X, double eps0) {
    if (!(eps0 > 0.0)) throw invalid_input("short_curves: eps0 must be positive");
    std::vector<ShortCurve> out;
    if (X.backend == Backend::GenusTwo) {
        for (int i = 0; i < curves::kPantsCurves; ++i) {
            double l = X.fn.l[i];
            if (l > eps0 / 2.0 && l <= eps0)
                out.push_back({curves::SimpleClosedCurve::pants(i + 1), l});
        }
        return out;
    }
    for (const auto& cl : hyp::enumerate_by_length(X.pt, eps0))
        if (cl.length > eps0 / 2.0)
            out.push_back({curves::SimpleClosedCurve::torus(cl.slope), cl.length});
    return out;
}

double eval_g(const hyp::HyperbolicStructure& X, double eps0) {
    if (!(eps0 > 0.0)) throw invalid_input("eval_g: eps0 must be positive");
    double ls = hyp::systole(X).l_sys;
    double slope = 6.0 / eps0;
    return clamp01(std::min(slope * (ls - eps0 / 2.0), slope * (eps0 - ls)));
}

double eval_j(const quake::UnitLaminationPoint& point, double mu, double eps0) {
    if (!(mu > 0.0)) throw invalid_input("eval_j: mu must be positive");
    double j = 1.0;
    for (const auto& sc : short_curves(point.X, eps0)) {
        double inter = curves::intersection(point.lam, sc.curve);
        j *= clamp01((2.0 / mu) * (mu - inter));
    }
    return j;
}

double eval_f(const quake::UnitLaminationPoint& point, const TestFnParams& params) {
    double g = eval_g(point.X, params.eps0);
    if (g == 0.0) return 0.0;
    return g * eval_j(point, params.mu, params.eps0);
}

double eval_gD(const hyp::HyperbolicStructure& X, double rho) {
    if (!(rho > 0.0)) throw invalid_input("eval_gD: rho must be positive");
    double ls = hyp::systole(X).l_sys;
    return clamp01((4.0 / rho) * (ls - rho / 2.0));
}

// ---------------------------------------------------------------------------
// Empirical Lipschitz norm
// ---------------------------------------------------------------------------

void LipschitzFunction::validate() const {
    if (!eval) throw invalid_input("LipschitzFunction: evaluator not set");
    if (!(sup_bound > 0.0)) throw invalid_input("LipschitzFunction: sup bound must be positive");
}

namespace {

std::vector<curves::MarkingWord> words_up_to(Backend backend, int depth) {
    std::vector<std::int8_t> alphabet;
    if (backend == Backend::PuncturedTorus)
        alphabet = {'A', 'a', 'B', 'b'};
    else
        alphabet = {1, -1, 2, -2, 3, -3};
    std::vector<curves::MarkingWord> out;
    out.push_back(curves::MarkingWord{backend, {}});
    std::size_t level_begin = 0;
    for (int d = 0; d < depth; ++d) {
        std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i)
            for (std::int8_t tok : alphabet) {
                curves::MarkingWord w = out[i];
                if (!w.tokens.empty()) {
                    // skip immediate cancellations
                    std::int8_t last = w.tokens.back();
                    bool cancels = backend == Backend::PuncturedTorus
                                       ? (last ^ tok) == 0x20  // case toggle of same letter
                                       : last == -tok;
                    if (cancels) continue;
                }
                w.tokens.push_back(tok);
                out.push_back(std::move(w));
            }
        level_begin = level_end;
    }
    return out;
}

}  // namespace

LipEstimate empirical_lip_norm(const LipschitzFunction& fn, const PairSampler& pairs,
                               std::size_t npairs, int marking_depth, std::int64_t Q) {
    fn.validate();
    if (!pairs) throw invalid_input("empirical_lip_norm: pair sampler not set");
    LipEstimate est;
    std::vector<curves::MarkingWord> words;
    for (std::uint64_t i = 0; i < npairs; ++i) {
        auto [x, y] = pairs(i);
        if (words.empty()) words = words_up_to(x.X.backend, marking_depth);
        double fx = fn.eval(x);
        double fy = fn.eval(y);
        if (std::abs(fx) > fn.sup_bound + 1e-12 || std::abs(fy) > fn.sup_bound + 1e-12)
            throw invalid_input("empirical_lip_norm: evaluation exceeds the declared sup bound");
        est.sup_observed = std::max({est.sup_observed, std::abs(fx), std::abs(fy)});
        double dhat = std::numeric_limits<double>::infinity();
        for (const auto& h : words) {
            curves::MeasuredLamination moved_lam = curves::act(h, y.lam);
            double dl = curves::d_lam(x.lam, moved_lam);
            if (dl >= dhat) continue;  // d_Th is nonnegative
            double d = dl + hyp::thurston_distance(x.X, hyp::act(h, y.X), Q);
            dhat = std::min(dhat, d);
        }
        if (!(dhat > 1e-14)) continue;  // degenerate pair
        est.lip_lower = std::max(est.lip_lower, std::abs(fx - fy) / dhat);
        ++est.pairs_used;
    }
    return est;
}

PairSampler ramp_pair_sampler(const TestFnParams& params, std::uint64_t seed) {
    TestFnParams p = params;
    p.validate(SurfaceSpec::punctured_torus());
    return [p, seed](std::uint64_t index) {
        Rng rng = Rng::stream(seed ^ 0x7e57f0a11ed0c0deULL, index);
        // structure: mostly the inner plateau band (the alignment ramp is the
        // steep direction there), sometimes the systole ramps
        double l = rng.uniform() < 0.8 ? p.eps0 * rng.uniform(0.68, 0.82)
                                       : p.eps0 * rng.uniform(0.52, 0.98);
        double tau = l * rng.uniform();
        hyp::PTStructure X = shell_structure(l, tau);
        hyp::TraceCache cache(X);
        double l01 = cache.length({0, 1});
        // alignment intersection in or near the ramp [mu/2, mu]
        double i0 = p.mu * rng.uniform(0.3, 1.1);
        i0 = std::min(i0, 0.99 / l01);
        auto solve_a = [](const hyp::PTStructure& S, double b) {
            hyp::TraceCache c(S);
            double lo = 0.0;
            double hi = (1.0 + b * c.length({0, 1})) / c.length({1, 0}) + 1.0;
            for (int it = 0; it < 70; ++it) {
                double mid = 0.5 * (lo + hi);
                (c.lamination_length(mid, b, 1e-10).value < 1.0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
        quake::UnitLaminationPoint base;
        base.X = hyp::HyperbolicStructure::torus(X);
        base.lam = curves::MeasuredLamination::torus(solve_a(X, i0), i0);
        // partner at a logarithmically spread perturbation scale
        double s = std::pow(10.0, -rng.uniform(1.0, 3.5));
        double i1 = std::max(i0 + (rng.uniform() < 0.5 ? -1.0 : 1.0) * s * p.mu, 0.05 * p.mu);
        hyp::PTStructure Xp =
            rng.uniform() < 0.5 ? X : quake::earthquake_pt(X, {1, 0}, s * l);
        quake::UnitLaminationPoint partner;
        partner.X = hyp::HyperbolicStructure::torus(Xp);
        partner.lam = curves::MeasuredLamination::torus(solve_a(Xp, i1), i1);
        return std::make_pair(base, partner);
    };
}

}  // namespace eqlab::testfn

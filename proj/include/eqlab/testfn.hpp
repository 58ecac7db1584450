#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "eqlab/curves.hpp"
#include "eqlab/earthquake.hpp"
#include "eqlab/hyperbolic.hpp"
#include "eqlab/surface.hpp"

namespace eqlab::testfn {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

// Scale parameters tying the aligned-region test function to the envelope
// constants: eps0 (thin shell), mu (alignment aperture), rho (escape length
// scale), C (lower-envelope defect).
struct TestFnParams {
    double eps0 = 0.05;
    double mu = 0.1;
    double rho = 0.5;
    double C = 1.0;

    // eps0 * (2 + C) < rho / 2; mu * collar_R(eps0) <= 1; 0 < rho <= systole
    // bound; all positive.
    void validate(const SurfaceSpec& spec) const;
};

// eps0 = safety * rho / (2 (2 + C)), satisfying the validation constraint
// with margin 1 - safety.
double choose_eps0(double rho, double C, double safety);

// ---------------------------------------------------------------------------
// The test functions
// ---------------------------------------------------------------------------

struct ShortCurve {
    curves::SimpleClosedCurve curve;
    double length = 0.0;
};

// All curves gamma with l_gamma(X) in (eps0/2, eps0], certified complete by
// the bounded enumeration frontier. Below the disjointness threshold
// 2 arcsinh(1) such curves are pairwise disjoint, so there are at most xi.
std::vector<ShortCurve> short_curves(const hyp::HyperbolicStructure& X, double eps0);

// Systole bump: 0 off [eps0/2, eps0], 1 on [4 eps0/6, 5 eps0/6], linear
// ramps of slope 6/eps0 between.
double eval_g(const hyp::HyperbolicStructure& X, double eps0);

// Alignment factor: product over the (eps0/2, eps0]-short curves gamma of
// the ramp 1 for i(lam,gamma) <= mu/2, 0 above mu, linear between. Empty
// product (thick X) is 1. lam must be unit length on X.
double eval_j(const quake::UnitLaminationPoint& point, double mu, double eps0);

// The aligned-region test function: eval_g * eval_j. Supported inside the
// thin-and-aligned region, mapping-class invariant.
double eval_f(const quake::UnitLaminationPoint& point, const TestFnParams& params);

// Thick-part bump: 0 for l_sys <= rho/2, 1 above 3 rho/4, linear between.
double eval_gD(const hyp::HyperbolicStructure& X, double rho);

// ---------------------------------------------------------------------------
// Empirical Lipschitz norm
// ---------------------------------------------------------------------------

// A bounded function on the unit-lamination bundle with declared bounds.
struct LipschitzFunction {
    std::function<double(const quake::UnitLaminationPoint&)> eval;
    double sup_bound = 1.0;

    void validate() const;  // evaluator set, sup_bound > 0
};

// Deterministic source of nearby point pairs (index-addressed).
using PairSampler = std::function<std::pair<quake::UnitLaminationPoint, quake::UnitLaminationPoint>(
    std::uint64_t index)>;

struct LipEstimate {
    double lip_lower = 0.0;    // sup over pairs of |df| / d-hat
    double sup_observed = 0.0; // sup over evaluated points of |f|
    std::size_t pairs_used = 0;

    double norm_lower() const { return lip_lower + sup_observed; }
};

// Lower estimate of the bounded-Lipschitz norm. For each pair, d-hat is the
// minimum over marking words |h| <= marking_depth of
// d_Th(X, h X') + d_lam(lam, h lam'): an over-estimate of the quotient
// metric, so the reported quotient under-estimates the true norm. Degenerate
// pairs (d-hat below 1e-14) are skipped. Throws invalid_input if an
// evaluation exceeds the declared sup bound.
LipEstimate empirical_lip_norm(const LipschitzFunction& fn, const PairSampler& pairs,
                               std::size_t npairs, int marking_depth, std::int64_t Q = 6);

// Pair sampler concentrated where the aligned-region function attains its
// steep (1/mu) variation: structures in the systole shell, directions with
// alignment intersection near the ramp, partners at logarithmically spread
// perturbation scales of the direction and, for half the pairs, the twist.
// Punctured-torus backend only.
PairSampler ramp_pair_sampler(const TestFnParams& params, std::uint64_t seed);

}  // namespace eqlab::testfn

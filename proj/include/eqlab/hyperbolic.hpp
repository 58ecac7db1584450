#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eqlab/curves.hpp"
#include "eqlab/surface.hpp"

namespace eqlab::hyp {

// ---------------------------------------------------------------------------
// log-trace arithmetic
//
// All traces of simple closed curves stay real and > 2 on the component of
// the character variety cut out by x^2+y^2+z^2 = xyz, but they reach e^300
// after long earthquakes, so every internal computation works with log(tr).
// ---------------------------------------------------------------------------

// l = 2*acosh(t/2) from lt = log(t). Guarded near t = 2.
double length_from_log_trace(double lt);

// log(2*cosh(l/2)) from l.
double log_trace_from_length(double l);

// log(t_u * t_v - t_w) given logs; requires the difference to be positive.
double log_trace_combine(double ltu, double ltv, double ltw);

// ---------------------------------------------------------------------------
// Hyperbolic structures
// ---------------------------------------------------------------------------

// Punctured-torus structure in Fricke trace coordinates: traces of the
// slopes (1,0), (0,1), (1,1).
struct PTStructure {
    double x = 3.0, y = 3.0, z = 3.0;

    double markov_residual() const;  // x^2+y^2+z^2 - xyz
    // Projects back onto the Markov variety (post-flow drift control).
    PTStructure renormalized() const;
    void validate(double tol = 1e-9) const;

    static PTStructure modular() { return PTStructure{3.0, 3.0, 3.0}; }
    friend bool operator==(const PTStructure& a, const PTStructure& b) = default;
};

// Genus-2 structure in Fenchel-Nielsen coordinates of the base pants
// decomposition.
struct FNStructure {
    std::array<double, curves::kPantsCurves> l{1.0, 1.0, 1.0};
    std::array<double, curves::kPantsCurves> tau{0.0, 0.0, 0.0};

    void validate() const;
    friend bool operator==(const FNStructure& a, const FNStructure& b) = default;
};

struct HyperbolicStructure {
    Backend backend = Backend::PuncturedTorus;
    PTStructure pt{};
    FNStructure fn{};

    static HyperbolicStructure torus(const PTStructure& x) {
        return HyperbolicStructure{Backend::PuncturedTorus, x, {}};
    }
    static HyperbolicStructure genus2(const FNStructure& x) {
        return HyperbolicStructure{Backend::GenusTwo, {}, x};
    }
    SurfaceSpec spec() const {
        return backend == Backend::PuncturedTorus ? SurfaceSpec::punctured_torus()
                                                  : SurfaceSpec::genus_two();
    }
    void validate() const;
};

// Structure literals: pt:x,y,z and fn:l1:t1,l2:t2,l3:t3.
HyperbolicStructure parse_structure_literal(const std::string& text);
std::string structure_to_string(const HyperbolicStructure& X);

// Mod(S) action. Punctured torus: h.X has basis traces pulled back through
// h^{-1}; genus 2: pants twists shift tau_j by +-l_j.
PTStructure act(const curves::Mat2z& m, const PTStructure& X);
HyperbolicStructure act(const curves::MarkingWord& h, const HyperbolicStructure& X);

// ---------------------------------------------------------------------------
// Length functions (punctured torus)
// ---------------------------------------------------------------------------

struct LaminationLengthResult {
    double value = 0.0;
    double tol_achieved = 0.0;
    int depth = 0;
};

// Memoizing Fricke-trace evaluator for one fixed structure. Traces are
// computed along the Stern-Brocot path of the slope, with whole continued-
// fraction runs fast-forwarded through the two-term linear recurrence.
// Construction reduces the marking chart (Markov descent on the trace
// triple, tracking the integer change of basis), so heavily twisted input
// charts lose no accuracy: all queries are answered in the reduced chart
// and reported in the caller's original coordinates.
class TraceCache {
  public:
    explicit TraceCache(const PTStructure& X);
    // Log-space constructor for intermediate charts whose raw traces
    // overflow double (conjugated twists along deep convergent slopes).
    static TraceCache from_log_traces(double lx, double ly, double lz);

    const PTStructure& structure() const { return X_; }
    double log_trace(const curves::Slope& s);
    double length(const curves::Slope& s);

    // Length of the lamination (a,b) via continued-fraction convergents,
    // with the error band reported in tol_achieved. Directions within
    // rounding distance of a rational hit a representation floor of roughly
    // eps * scale * denominator^2, so tolerances below 1e-7 are best effort
    // there; throws convergence_failure when the band exceeds
    // max(tol, 1e-7) relative to the value.
    LaminationLengthResult lamination_length(double a, double b, double tol = 1e-9,
                                             int max_depth = 48);

  private:
    TraceCache() = default;
    void reduce_chart(double x, double y, double z);
    curves::Slope reduced(const curves::Slope& s) const;
    double raw_log_trace(const curves::Slope& s);  // reduced-chart coordinates
    double raw_length(const curves::Slope& s);
    double walk(std::int64_t p, std::int64_t q);
    PTStructure X_;
    double lx_, ly_, lz_;
    double ld_pos_;  // log trace of (1,-1) = log(xy - z)
    std::int64_t m00_ = 1, m01_ = 0, m10_ = 0, m11_ = 1;  // chart reduction map
    std::unordered_map<std::uint64_t, double> memo_;
};

// One-shot helpers (construct a TraceCache internally).
double trace_of_slope(const PTStructure& X, const curves::Slope& s);
double curve_length(const HyperbolicStructure& X, const curves::SimpleClosedCurve& g);
LaminationLengthResult lamination_length(const HyperbolicStructure& X,
                                         const curves::MeasuredLamination& lam,
                                         double tol = 1e-9, int max_depth = 48);

// ---------------------------------------------------------------------------
// Enumeration by length and the systole
// ---------------------------------------------------------------------------

struct CurveLength {
    curves::Slope slope;
    double length;
};

// All simple closed curves of length <= lmax on X, found by reducing the
// Farey triangle to the trace well and searching outward. Exact for any
// (possibly heavily twisted) structure; throws budget_exceeded past
// max_nodes triangles.
std::vector<CurveLength> enumerate_by_length(const PTStructure& X, double lmax,
                                             std::size_t max_nodes = 1u << 22);

struct SystoleResult {
    double l_sys = 0.0;
    std::vector<curves::SimpleClosedCurve> systoles;  // all minimizers within 1e-9
};

// Certified systole. The search frontier is pruned at K_sys_bound, which the
// systole can never exceed.
SystoleResult systole(const HyperbolicStructure& X, std::size_t max_nodes = 1u << 22);

// Topological upper bound for l_sys: 2R with 2*pi*(cosh R - 1) = area(S).
double K_sys_bound(const SurfaceSpec& spec);

// ---------------------------------------------------------------------------
// Thurston distances
// ---------------------------------------------------------------------------

// log sup_gamma l_gamma(Y)/l_gamma(Y'), sup over curves enumerated to Q.
// Ratio orientation follows the asymmetric-distance definition with Y in the
// numerator.
double thurston_distance_asym(const HyperbolicStructure& Y, const HyperbolicStructure& Yp,
                              std::int64_t Q);
double thurston_distance(const HyperbolicStructure& Y, const HyperbolicStructure& Yp,
                         std::int64_t Q);

// Closed-form Lipschitz bound for l_sys on the eps-thick part:
// sup_{t>0} min( 2K/t, K(e^t-1)/t + (K^2/eps)(e^{2t}-1)/t ), K = K_sys_bound.
double sys_lip_bound(const SurfaceSpec& spec, double eps);

// Empirical Lipschitz quotient of l_sys over sampled pairs in the eps-thick
// part; throws if any sample violates the floor.
double sys_lip_estimate(double eps,
                        const std::vector<std::pair<HyperbolicStructure, HyperbolicStructure>>& pairs,
                        std::int64_t Q);

}  // namespace eqlab::hyp

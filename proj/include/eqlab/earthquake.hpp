#pragma once

#include <vector>

#include "eqlab/curves.hpp"
#include "eqlab/hyperbolic.hpp"
#include "eqlab/surface.hpp"

namespace eqlab::quake {

// ---------------------------------------------------------------------------
// Phase-space points and orbit artifacts
// ---------------------------------------------------------------------------

// A point of the unit-length lamination bundle: l_lambda(X) = 1.
struct UnitLaminationPoint {
    hyp::HyperbolicStructure X;
    curves::MeasuredLamination lam;

    void validate(double tol = 1e-9) const;
    // Rescales lam so l_lambda(X) = 1.
    static UnitLaminationPoint normalized(const hyp::HyperbolicStructure& X,
                                          const curves::MeasuredLamination& lam);
};

// Sampled time series of an earthquake orbit with tracked curve lengths.
struct OrbitRecord {
    std::vector<double> times;
    std::vector<hyp::HyperbolicStructure> states;
    std::vector<std::pair<curves::SimpleClosedCurve, std::vector<double>>> tracked;

    void validate() const;  // strictly increasing times, equal series lengths
};

// Envelope constants: rho (length scale) and C (lower-envelope defect).
struct MWConstants {
    double rho = 1.0;
    double C = 1.0;

    void validate(const SurfaceSpec& spec) const;  // 0 < rho <= K_sys_bound, C > 0
};

// ---------------------------------------------------------------------------
// The flow
// ---------------------------------------------------------------------------

// Fenchel-Nielsen twist around pants curve i (1-based): tau_i += t.
hyp::FNStructure twist(const hyp::FNStructure& X, int i, double t);

// Single-crossing twist closed form in signed log space. Given the log-traces
// (ltg, ltd, lte) of a Farey triangle (gamma, delta, gamma+delta) with
// cross(gamma, delta) = +1, returns the log-traces of (delta, gamma+delta)
// after twisting along gamma by t. Stable for any length of gamma; throws
// internal_error only if a twisted trace collapses to a non-positive value.
std::pair<double, double> twist_parent_log_traces(double ltg, double ltd, double lte, double t);

// Earthquake along the slope gamma for twist length t, in trace coordinates.
// Evolves the traces of gamma's Farey parents by the exact single-crossing
// closed forms (stable in signed log space for any twist length), then maps
// the result back to the input marking. The map-back walk is certified by
// round-tripping gamma's own trace; when the result is not representable to
// map_tol in this marking (very long gamma on a thick surface, or traces
// beyond the double range) a budget_exceeded error is raised.
hyp::PTStructure earthquake_pt(const hyp::PTStructure& X, const curves::Slope& gamma, double t,
                               double map_tol = 1e-8);

// Earthquake along a weighted multicurve: composition of component twists
// with times a_i * t (order irrelevant).
hyp::HyperbolicStructure earthquake_multicurve(const hyp::HyperbolicStructure& X,
                                               const curves::Multicurve& mc, double t);

struct EarthquakeResult {
    hyp::HyperbolicStructure X;
    double tol_achieved = 0.0;
    int depth = 0;
};

// Earthquake along a measured lamination, by flowing along its convergent
// weighted curves until the basis lengths are Cauchy within tol. Exact (depth
// 0) for laminations supported on a single curve.
EarthquakeResult earthquake_lamination(const hyp::HyperbolicStructure& X,
                                       const curves::MeasuredLamination& lam, double t,
                                       double tol = 1e-9, int max_depth = 48);

// Samples the orbit t -> E^t(X, lam) on n+1 equispaced times in [t0, t1],
// recording the lengths of the given curves.
OrbitRecord sample_orbit(const hyp::HyperbolicStructure& X,
                         const curves::MeasuredLamination& lam, double t0, double t1, int n,
                         const std::vector<curves::SimpleClosedCurve>& tracked);

// ---------------------------------------------------------------------------
// Local length-behavior checks
// ---------------------------------------------------------------------------

struct KerckhoffReport {
    double max_violation = 0.0;  // max over grid of |dl/dt|_fd - i(lam,gamma)
    double error_bound = 0.0;    // discretization allowance (10 h)
    bool degenerate = false;     // i(lam,gamma) = 0: length constant
};

// Central-difference sweep of |d l_gamma / dt| against the strict bound
// i(lam,gamma), over a grid of t in [-tmax, tmax].
KerckhoffReport kerckhoff_check(const hyp::HyperbolicStructure& X,
                                const curves::MeasuredLamination& lam,
                                const curves::SimpleClosedCurve& gamma, double tmax,
                                double h = 1e-4, int grid = 41);

struct MinLengthResult {
    double eps_gamma = 0.0;  // min_t l_gamma(E^t)
    double t_gamma = 0.0;    // argmin
};

// Grid search plus golden-section refinement of t -> l_gamma(E^t(X,lam)) on
// [-window, window]. Throws invalid_input if the minimum sits on the window
// boundary. Degenerate i(lam,gamma)=0 returns the constant at t=0.
MinLengthResult min_length_along_orbit(const hyp::HyperbolicStructure& X,
                                       const curves::MeasuredLamination& lam,
                                       const curves::SimpleClosedCurve& gamma, double window,
                                       double dt = 0.0);

struct MWEnvelopeReport {
    bool applicable = false;       // false when l_gamma never drops below rho
    std::size_t n_in_window = 0;   // samples with l_gamma <= rho
    double worst_upper_slack = 0;  // max of l - (i|t - t_gamma| + eps); <= 0 passes
    double worst_lower_slack = 0;  // max of (i|t - t_gamma| - C eps) - l; <= 0 passes
    double eps_gamma = 0.0;
    double t_gamma = 0.0;
};

// Checks the two-sided envelope
//   i(lam,gamma)|t - t_gamma| - C eps <= l_gamma(t) <= i(lam,gamma)|t - t_gamma| + eps
// over the samples of the orbit with l_gamma <= rho. eps/t_gamma are taken
// from the orbit's own minimum of the tracked series.
MWEnvelopeReport mw_envelope_check(const OrbitRecord& orbit, const curves::SimpleClosedCurve& gamma,
                                   double intersection_number, const MWConstants& consts);

}  // namespace eqlab::quake

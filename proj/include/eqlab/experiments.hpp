#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eqlab/curves.hpp"
#include "eqlab/earthquake.hpp"
#include "eqlab/hyperbolic.hpp"
#include "eqlab/measures.hpp"
#include "eqlab/stats.hpp"
#include "eqlab/surface.hpp"
#include "eqlab/testfn.hpp"

namespace eqlab::experiments {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct MonteCarlo {
    std::size_t n = 2000;
    std::uint64_t seed = 1;
};

struct ExperimentConfig {
    SurfaceSpec spec = SurfaceSpec::punctured_torus();
    testfn::TestFnParams params{};  // params.mu is the head of the grid
    MonteCarlo mc{};
    std::vector<double> mu_grid;  // strictly decreasing apertures
    measures::WPRegion region{3.0};
    std::size_t escape_samples = 200;
    int escape_steps = 16;
    std::size_t lip_pairs = 400;
    int lip_depth = 0;
    double count_L = 200.0;

    void validate() const;
    // Calibration-derived defaults: rho = 0.5, C = 1, eps0 from choose_eps0,
    // grid mu = 2^-3 .. 2^-9.
    static ExperimentConfig defaults();
};

// ---------------------------------------------------------------------------
// The thin-regime flow scheme and conditioned sampling
// ---------------------------------------------------------------------------

// One earthquake step along the unit lamination (a, b) (half-plane chart,
// b >= 0), split as b * (a0, 1) + r * (1, 0) with a0 = floor(a/b) and
// r = a - a0 * b, and composed as half outer (1,0)-twists around the middle
// (a0, 1)-twist. Exact for rational directions of denominator <= 1; for the
// others it is the documented two-piece scheme whose tracked-length
// inequalities hold exactly (the middle twist crosses (1,0) once, the outer
// twists fix its length).
// When the flowed chart is not representable in the input marking (very deep
// middle slope), returns the thin-shell representative with the exact tracked
// short-curve length instead.
hyp::PTStructure thin_flow(const hyp::PTStructure& X, double a, double b, double t);

// Length of the tracked curve (1, 0) after thin_flow, by the single-crossing
// closed form: exact and stable for arbitrarily deep middle slopes.
double thin_tracked_length(const hyp::PTStructure& X, double a, double b, double t);

struct ThinSample {
    quake::UnitLaminationPoint point;
    double l = 0.0;  // length of the short curve (1, 0)
    double b = 0.0;  // intersection of the unit lamination with (1, 0)
};

// Draw conditioned on the thin-and-aligned region: l_(1,0) in the systole
// shell [eps0/2, eps0] (WP-proportional), twist uniform, alignment
// intersection b uniform below min(mu, the unit-sphere ceiling), direction
// side of the (1,0)-axis symmetric. Pure function of (seed, index).
ThinSample sample_thin_aligned(const testfn::TestFnParams& params, double mu, std::uint64_t seed,
                               std::uint64_t index);

// ---------------------------------------------------------------------------
// Envelope calibration
// ---------------------------------------------------------------------------

// Calibrates the envelope constants over n sampled orbits that carry a curve
// through a short phase: the largest grid rho (K_sys / 2^j) and the smallest
// grid C (powers of two up to 64) such that the two-sided envelope holds on
// every orbit. Deterministic per seed; monotone in data. Throws
// convergence_failure with a diagnostic dump when no grid pair works.
quake::MWConstants calibrate_mw(const SurfaceSpec& spec, std::size_t n, std::uint64_t seed);

// One calibration orbit (exposed so a held-out batch can be replayed against
// fixed constants).
struct CalibrationOrbit {
    quake::OrbitRecord orbit;
    curves::SimpleClosedCurve gamma;
    double intersection = 0.0;
};
CalibrationOrbit calibration_orbit(const SurfaceSpec& spec, std::uint64_t seed,
                                   std::uint64_t index);

// Number of orbits of the held-out batch violating the envelope at consts.
std::size_t envelope_violations(const SurfaceSpec& spec, const quake::MWConstants& consts,
                                std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Escape experiment
// ---------------------------------------------------------------------------

struct EscapeRow {
    double mu = 0.0;
    double t_lim = 0.0;        // rho / (2 mu)
    std::size_t n = 0;         // samples
    std::size_t violations = 0;
    double max_tracked = 0.0;  // max over samples and times of l_(1,0)
    double worst_slack = 0.0;  // max of l - (rho/2 + mu |t|); <= 0 passes
};

struct EscapeReport {
    std::vector<EscapeRow> rows;
    std::size_t total_violations() const;
};

// For each grid aperture, flows thin-and-aligned samples to |t| <= t_lim on
// an equispaced grid and checks the tracked short-curve length against the
// linear envelope rho/2 + mu |t| (hence every sample keeps a curve of length
// <= rho and never reaches the thick target region).
EscapeReport escape_experiment(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

using PointFn = std::function<double(const quake::UnitLaminationPoint&)>;

struct CorrelationEstimate {
    double t = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
    bool wide_interval = false;  // flagged when the f-support hit count < 30

    void validate() const;
};

// Weighted Monte Carlo estimate of
//   int f * (g o E_t) dnu - int f dnu * int g dnu
// under the normalized product measure on the sampling region, with the
// structure factor stratified between the systole shell (where the aligned
// test function lives) and the rest of the region. The flow is thin_flow
// along each sample's own lamination. Standard error by batch means.
CorrelationEstimate correlation(const PointFn& f, const PointFn& g, double t,
                                const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Decay scan
// ---------------------------------------------------------------------------

struct DecayRow {
    double mu = 0.0;
    double t_lim = 0.0;
    double nu_est = 0.0;     // normalized mass of the thin-and-aligned region
    double nu_stderr = 0.0;
    double nu_bound = 0.0;   // normalized displayed scaling lower bound
    double int_f = 0.0;      // normalized integral of the aligned test function
    double k0 = 0.0;         // int_f / nu_est
    double k1 = 0.0;         // normalized integral of the thick-part bump
    double lip_lower = 0.0;  // empirical Lipschitz lower estimate of f
    double corr_value = 0.0;
    double corr_stderr = 0.0;
    double corr_lower_bound = 0.0;  // k0 * k1 * nu_est = int_f * k1
    std::size_t n = 0;
};

struct DecayScanResult {
    std::vector<DecayRow> rows;
    stats::LineFit nu_bound_vs_mu;   // expected slope m
    stats::LineFit nu_est_vs_mu;
    stats::LineFit lip_vs_mu;        // expected slope -1
    stats::LineFit bound_vs_tlim;    // displayed correlation floor vs t_lim
    stats::LineFit lip_vs_tlim;
    // Largest mixing exponent compatible with the polynomial-decay
    // assumption: d <= (norm growth) + (floor decay) in log t_lim.
    double implied_exponent = 0.0;
    bool inequality_holds = false;  // |corr| >= floor - 3 stderr at every row

    void validate() const;
};

// Per aperture: thin-and-aligned mass, Lipschitz lower estimate, t_lim and
// the correlation at t_lim; log-log fits and the implied exponent bound.
// Grid points with zero region hits are trimmed with a notice in the row
// count.
DecayScanResult decay_scan(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double worst = 0.0;  // worst observed slack/error

    bool passed() const { return failures == 0; }
};

struct SuiteReport {
    std::vector<SuiteResult> suites;
    bool all_passed() const;
};

// Invariant sweeps: length-variation bound, flow additivity, commutation of
// disjoint twists, mapping-class equivariance, collar inequality, systole
// bound. intersection_fault shifts the intersection number used by the
// length-variation bound (mutation sanity hook); 0 is the real check.
SuiteReport property_suites(const ExperimentConfig& config, int intersection_fault = 0);

// Fixed-layout text rendering (byte-stable for a given report).
std::string format_report(const SuiteReport& report);

}  // namespace eqlab::experiments

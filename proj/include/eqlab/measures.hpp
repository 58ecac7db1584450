#pragma once

#include <cstdint>
#include <vector>

#include "eqlab/curves.hpp"
#include "eqlab/earthquake.hpp"
#include "eqlab/hyperbolic.hpp"
#include "eqlab/stats.hpp"
#include "eqlab/surface.hpp"

namespace eqlab::measures {

// ---------------------------------------------------------------------------
// Sample and scan artifacts
// ---------------------------------------------------------------------------

// A draw from the product measure on the unit-length lamination bundle:
// X ~ Weil-Petersson on the sampling region, direction Lebesgue-uniform on
// the cone, unit-normalized with the co-area Jacobian folded into weight.
// Integrals are estimated as (region volume) * pi * mean(weight * f).
struct NuSample {
    quake::UnitLaminationPoint point;
    double weight = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;

    void validate() const;
};

struct ScanRow {
    double parameter = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

// Parameter scan with a log-log power fit of estimate vs parameter.
struct ScanResult {
    std::vector<ScanRow> rows;
    stats::LineFit fit;

    void validate() const;  // stderr >= 0, n >= 1 per row
};

// Fills result.fit with the OLS fit of log(estimate) against log(parameter).
// Rows with estimate <= 0 or relative stderr above max_rel_stderr are
// excluded (heteroskedastic MC tails corrupt slope estimates).
void fit_scan(ScanResult& result, double max_rel_stderr = 0.3);

// ---------------------------------------------------------------------------
// Counting and Lebesgue forms of the Thurston measure
// ---------------------------------------------------------------------------

// #{integral lattice points (a,b) in the canonical half-plane, l_(a,b)(X) <= L}
// divided by L^m. Punctured torus only. Rows b >= 1 are counted from the
// convexity of a -> l_(a,b); the frontier is certified by the collar bound
// l_(a,b) >= b * R(l_(1,0)).
double thurston_count(const hyp::HyperbolicStructure& X, double L,
                      std::size_t max_count = 50'000'000);

enum class BMethod { Count, Lebesgue };

// B(X): measure of the unit ball {l_lambda(X) <= 1} in the half-plane chart.
// Count: lattice approximation at radius L. Lebesgue: polar quadrature
// area = int_0^pi dtheta / (2 l_u(theta)^2).
double B_estimate(const hyp::HyperbolicStructure& X, BMethod method, double L = 200.0);

// Half-plane area of {l_lambda(X) <= level} by adaptive Simpson quadrature.
double b_lebesgue(const hyp::PTStructure& X, double level = 1.0, double tol = 1e-7);

// ---------------------------------------------------------------------------
// Weil-Petersson sampling
// ---------------------------------------------------------------------------

// Sampling region {l_i in (0, lmax], tau_i in [0, l_i)} per basis/pants
// curve; covers moduli space boundedly-many-to-one (coarse region).
struct WPRegion {
    double lmax = 3.0;

    void validate() const;
};

struct PTSample {
    hyp::PTStructure X;
    double l = 0.0;    // length of (1,0)
    double tau = 0.0;  // twist along (1,0), in [0, l)
};

// Uniform w.r.t. dl dtau on {0 < l <= lmax, 0 <= tau < l}; pure function of
// (seed, index).
PTSample sample_wp_pt_one(double lmax, std::uint64_t seed, std::uint64_t index);
std::vector<PTSample> sample_wp_pt(double lmax, std::size_t n, std::uint64_t seed);

std::vector<hyp::HyperbolicStructure> sample_wp(const SurfaceSpec& spec, const WPRegion& region,
                                                std::size_t n, std::uint64_t seed);

std::vector<NuSample> sample_nu(const SurfaceSpec& spec, const WPRegion& region, std::size_t n,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Collar bound and the volume of the thin-and-aligned region
// ---------------------------------------------------------------------------

// Collar function R(x) = 2 arcsinh(1 / sinh(x/2)): every curve crossing a
// curve of length x has length at least R(x), so i(g,d) <= l_d(X) / R(l_g(X)).
double collar_R(double x);

// Measure of the direction cone {lambda: l_lambda(X) <= 1, i(lambda, gamma)
// <= mu * l_lambda(X)} in the half-plane chart (equivalently, the mass of
// unit laminations with i(lambda, gamma) <= mu under the unit-ball measure).
double nu_sector_mass(const hyp::PTStructure& X, const curves::Slope& gamma, double mu,
                      double tol = 1e-7);

struct VolumeEstimate {
    double estimate = 0.0;  // mass of {l_sys in [eps0/2, eps0], i(lam, short) <= mu}
    double stderr_ = 0.0;
    // Mass of the inner set {l_sys in [4 eps0/6, 5 eps0/6], i <= mu/2}.
    double lower_bound_variant = 0.0;
    // The displayed analytic lower bound for the inner set:
    // (mu R(eps0) / 2)^m * integral of B(X) over the sub-shell.
    double scaling_bound = 0.0;
    std::size_t n = 0;
};

// Stratified MC estimate: condition the WP factor on the systole shell
// l = l_(1,0) in [eps0/2, eps0] (exact shell volume 3 eps0^2 / 8; the short
// curve is unique and equals the systole because R(eps0) > eps0), then
// integrate the direction-cone mass per sample by quadrature.
VolumeEstimate volume_omega(double eps0, double mu, std::size_t n, std::uint64_t seed);

}  // namespace eqlab::measures

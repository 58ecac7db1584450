#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eqlab/error.hpp"
#include "eqlab/surface.hpp"

namespace eqlab::curves {

inline constexpr int kPantsCurves = 3;          // xi for genus 2
inline constexpr std::size_t kMaxWordLength = 64;

// ---------------------------------------------------------------------------
// Slopes (punctured-torus backend)
// ---------------------------------------------------------------------------

// A simple closed curve on the once-punctured torus, identified with a
// coprime pair p/q. Canonical form: q > 0, or q == 0 and p == 1.
struct Slope {
    std::int64_t p = 1;
    std::int64_t q = 0;

    bool is_canonical() const;
    friend bool operator==(const Slope& a, const Slope& b) = default;
};

// Rejects (0,0) and non-coprime input; flips sign into canonical form.
Slope canonicalize(Slope s);

// Lexicographic (q,p) order used for deterministic enumeration output.
bool slope_less(const Slope& a, const Slope& b);

// ---------------------------------------------------------------------------
// Integer 2x2 matrices: the Mod(S) action on slopes for the punctured torus
// ---------------------------------------------------------------------------

struct Mat2z {
    // [[a, b], [c, d]] acting on column vectors (p, q).
    std::int64_t a = 1, b = 0, c = 0, d = 1;

    std::int64_t det() const { return a * d - b * c; }
    Mat2z inverse() const;

    friend Mat2z operator*(const Mat2z& m, const Mat2z& n);
    friend bool operator==(const Mat2z& m, const Mat2z& n) = default;
};

// Applies M to the homology class and re-canonicalizes.
Slope act(const Mat2z& m, const Slope& s);

// Change-of-basis matrix M with M*s = (1,0). Used to reduce any twist to a
// basis twist.
Mat2z basis_change_to_first(const Slope& s);

// ---------------------------------------------------------------------------
// Marking words (generator tokens of the Mod(S) action)
// ---------------------------------------------------------------------------

// Punctured torus tokens: 'A'/'a' = Dehn twist along (1,0) and its inverse,
// 'B'/'b' = twist along (0,1) and its inverse.
// Genus 2 tokens: +j/-j = Dehn twist along pants curve j in {1,2,3}.
struct MarkingWord {
    Backend backend = Backend::PuncturedTorus;
    std::vector<std::int8_t> tokens;

    bool empty() const { return tokens.empty(); }
    void validate() const;
    // Punctured torus only.
    Mat2z matrix() const;
    MarkingWord inverse() const;

    friend bool operator==(const MarkingWord& a, const MarkingWord& b) = default;
};

MarkingWord parse_word(Backend backend, const std::string& text);
std::string word_to_string(const MarkingWord& w);

// ---------------------------------------------------------------------------
// Dehn-Thurston coordinates (genus-2 backend)
// ---------------------------------------------------------------------------

struct DTCoordinates {
    std::array<double, kPantsCurves> m{};  // intersection numbers, >= 0
    std::array<double, kPantsCurves> t{};  // twists

    void validate() const;
    friend bool operator==(const DTCoordinates& a, const DTCoordinates& b) = default;
};

// ---------------------------------------------------------------------------
// Measured laminations
// ---------------------------------------------------------------------------

// Punctured torus: a pair (a,b) != (0,0) in canonical sign, with
// i(lam_(a,b), p/q) = |a q - b p|.
// Genus 2: DT coordinates together with the marking word that transports the
// base pants decomposition.
struct MeasuredLamination {
    Backend backend = Backend::PuncturedTorus;

    double a = 0.0, b = 0.0;  // punctured torus
    DTCoordinates dt{};       // genus 2
    MarkingWord marking{};    // genus 2

    static MeasuredLamination torus(double a, double b);
    static MeasuredLamination genus2(const DTCoordinates& dt, MarkingWord marking = {});
    static MeasuredLamination from_slope(const Slope& s, double weight = 1.0);

    bool is_integral(double tol = 1e-12) const;
    MeasuredLamination scaled(double factor) const;
    void validate() const;
};

// Canonical sign for the torus chart: b > 0, or b == 0 and a > 0.
std::pair<double, double> canonical_sign(double a, double b);

// ---------------------------------------------------------------------------
// Simple closed curves (backend umbrella) and multicurves
// ---------------------------------------------------------------------------

struct SimpleClosedCurve {
    Backend backend = Backend::PuncturedTorus;
    Slope slope{};          // punctured torus
    int pants_index = 1;    // genus 2: 1..3
    MarkingWord marking{};  // genus 2 transport word

    static SimpleClosedCurve torus(const Slope& s);
    static SimpleClosedCurve pants(int index, MarkingWord marking = {});
    void validate() const;
    friend bool operator==(const SimpleClosedCurve& a, const SimpleClosedCurve& b) = default;
};

struct Multicurve {
    std::vector<std::pair<SimpleClosedCurve, double>> components;

    void validate() const;  // weights > 0, pairwise disjoint
    MeasuredLamination as_lamination() const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Geometric intersection number of two simple closed curves.
double intersection(const SimpleClosedCurve& g, const SimpleClosedCurve& d);

// i(lambda, gamma) for a lamination against a curve.
double intersection(const MeasuredLamination& lam, const SimpleClosedCurve& g);

// Bilinear extension to multicurves.
double intersection(const Multicurve& mc, const SimpleClosedCurve& g);

// Coordinate read-off i(gamma_i, lambda) on the genus-2 backend; index in 1..3.
double intersection_with_pants_curve(const DTCoordinates& lam, int index);

// L-infinity distance in the fixed Dehn-Thurston chart. Both laminations must
// live on the same backend and marking.
double d_lam(const MeasuredLamination& x, const MeasuredLamination& y);

// All canonical slopes with |p|,|q| <= Q (punctured torus), sorted by (q,p),
// duplicate-free; genus 2: the base pants curves.
std::vector<SimpleClosedCurve> enumerate_curves(const SurfaceSpec& spec, std::int64_t Q);

// Largest observed |i(l,g) - i(l',g)| / d_lam(l,l') over distinct pairs: a
// lower estimate of the Lipschitz constant of i(.,g).
double rees_constant_estimate(const SimpleClosedCurve& g,
                              const std::vector<MeasuredLamination>& sample);

// Mod(S) action (punctured torus): h applied to curves and laminations.
SimpleClosedCurve act(const MarkingWord& h, const SimpleClosedCurve& g);
MeasuredLamination act(const MarkingWord& h, const MeasuredLamination& lam);

// ---------------------------------------------------------------------------
// Literal syntax:  slope:p/q   lam:a,b   dt:m1:t1,m2:t2,m3:t3@word
// ---------------------------------------------------------------------------

SimpleClosedCurve parse_curve_literal(const std::string& text);
MeasuredLamination parse_lamination_literal(const std::string& text);
std::string curve_to_string(const SimpleClosedCurve& g);
std::string lamination_to_string(const MeasuredLamination& lam);

}  // namespace eqlab::curves

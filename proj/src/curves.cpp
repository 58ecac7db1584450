#include "eqlab/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace eqlab::curves {

namespace {

std::int64_t checked_add(std::int64_t x, std::int64_t y) {
    std::int64_t r;
    if (__builtin_add_overflow(x, y, &r))
        throw budget_exceeded("slope coordinate overflow in 64-bit arithmetic");
    return r;
}

std::int64_t checked_mul(std::int64_t x, std::int64_t y) {
    std::int64_t r;
    if (__builtin_mul_overflow(x, y, &r))
        throw budget_exceeded("slope coordinate overflow in 64-bit arithmetic");
    return r;
}

// p q' - q p' with overflow checking.
std::int64_t cross(const Slope& a, const Slope& b) {
    std::int64_t x = checked_mul(a.p, b.q);
    std::int64_t y = checked_mul(a.q, b.p);
    std::int64_t r;
    if (__builtin_sub_overflow(x, y, &r))
        throw budget_exceeded("slope coordinate overflow in 64-bit arithmetic");
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Slopes
// ---------------------------------------------------------------------------

bool Slope::is_canonical() const {
    if (p == 0 && q == 0) return false;
    if (std::gcd(std::llabs(p), std::llabs(q)) != 1) return false;
    return q > 0 || (q == 0 && p == 1);
}

Slope canonicalize(Slope s) {
    if (s.p == 0 && s.q == 0) throw invalid_input("canonicalize: zero slope");
    std::int64_t g = std::gcd(std::llabs(s.p), std::llabs(s.q));
    if (g != 1) throw invalid_input("canonicalize: not coprime");
    if (s.q < 0 || (s.q == 0 && s.p < 0)) {
        s.p = -s.p;
        s.q = -s.q;
    }
    return s;
}

bool slope_less(const Slope& a, const Slope& b) {
    return a.q != b.q ? a.q < b.q : a.p < b.p;
}

// ---------------------------------------------------------------------------
// Mat2z and the Mod action
// ---------------------------------------------------------------------------

Mat2z Mat2z::inverse() const {
    std::int64_t dt = det();
    if (dt != 1 && dt != -1) throw internal_error("Mat2z::inverse: determinant not a unit");
    // adj / det, det = +-1
    return Mat2z{dt * d, -dt * b, -dt * c, dt * a};
}

Mat2z operator*(const Mat2z& m, const Mat2z& n) {
    return Mat2z{checked_add(checked_mul(m.a, n.a), checked_mul(m.b, n.c)),
                 checked_add(checked_mul(m.a, n.b), checked_mul(m.b, n.d)),
                 checked_add(checked_mul(m.c, n.a), checked_mul(m.d, n.c)),
                 checked_add(checked_mul(m.c, n.b), checked_mul(m.d, n.d))};
}

Slope act(const Mat2z& m, const Slope& s) {
    Slope r{checked_add(checked_mul(m.a, s.p), checked_mul(m.b, s.q)),
            checked_add(checked_mul(m.c, s.p), checked_mul(m.d, s.q))};
    return canonicalize(r);
}

Mat2z basis_change_to_first(const Slope& s) {
    Slope c = canonicalize(s);
    // Find r,t with p*t - q*r = 1, then M = [[t,-r],[-q,p]] sends (p,q) to (1,0).
    std::int64_t p = c.p, q = c.q;
    std::int64_t old_r = 1, r = 0;        // Bezout for p
    std::int64_t old_t = 0, t = 1;        // Bezout for q
    std::int64_t a = p, b = q;
    while (b != 0) {
        std::int64_t k = a / b;
        std::int64_t tmp = a - k * b;
        a = b;
        b = tmp;
        tmp = old_r - k * r;
        old_r = r;
        r = tmp;
        tmp = old_t - k * t;
        old_t = t;
        t = tmp;
    }
    // a = gcd = +-1, old_r*p + old_t*q = a
    std::int64_t sign = a;  // +-1
    std::int64_t u = sign * old_r, v = sign * old_t;  // u*p + v*q = 1
    Mat2z m{u, v, -q, p};
    if (m.det() != 1) throw internal_error("basis_change_to_first: determinant != 1");
    return m;
}

// ---------------------------------------------------------------------------
// Marking words
// ---------------------------------------------------------------------------

void MarkingWord::validate() const {
    if (tokens.size() > kMaxWordLength)
        throw invalid_input("MarkingWord: word longer than configured bound");
    for (std::int8_t tok : tokens) {
        if (backend == Backend::PuncturedTorus) {
            if (tok != 'A' && tok != 'a' && tok != 'B' && tok != 'b')
                throw invalid_input("MarkingWord: bad punctured-torus token");
        } else {
            int j = std::abs(static_cast<int>(tok));
            if (j < 1 || j > kPantsCurves)
                throw invalid_input("MarkingWord: bad genus-2 token");
        }
    }
}

Mat2z MarkingWord::matrix() const {
    if (backend != Backend::PuncturedTorus)
        throw invalid_input("MarkingWord::matrix: punctured torus only");
    validate();
    Mat2z m;
    for (std::int8_t tok : tokens) {
        Mat2z g;
        switch (tok) {
            case 'A': g = Mat2z{1, 1, 0, 1}; break;   // twist along (1,0)
            case 'a': g = Mat2z{1, -1, 0, 1}; break;
            case 'B': g = Mat2z{1, 0, 1, 1}; break;   // twist along (0,1)
            case 'b': g = Mat2z{1, 0, -1, 1}; break;
            default: throw internal_error("MarkingWord::matrix: unreachable token");
        }
        m = m * g;
    }
    return m;
}

MarkingWord MarkingWord::inverse() const {
    MarkingWord w;
    w.backend = backend;
    w.tokens.reserve(tokens.size());
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        std::int8_t tok = *it;
        if (backend == Backend::PuncturedTorus) {
            switch (tok) {
                case 'A': tok = 'a'; break;
                case 'a': tok = 'A'; break;
                case 'B': tok = 'b'; break;
                case 'b': tok = 'B'; break;
            }
        } else {
            tok = static_cast<std::int8_t>(-tok);
        }
        w.tokens.push_back(tok);
    }
    return w;
}

MarkingWord parse_word(Backend backend, const std::string& text) {
    MarkingWord w;
    w.backend = backend;
    if (backend == Backend::PuncturedTorus) {
        for (char c : text) w.tokens.push_back(static_cast<std::int8_t>(c));
    } else {
        // genus-2 words: e.g. "1,-2,3"
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            w.tokens.push_back(static_cast<std::int8_t>(std::stoi(item)));
        }
    }
    w.validate();
    return w;
}

std::string word_to_string(const MarkingWord& w) {
    std::string out;
    if (w.backend == Backend::PuncturedTorus) {
        for (std::int8_t tok : w.tokens) out.push_back(static_cast<char>(tok));
    } else {
        for (std::size_t i = 0; i < w.tokens.size(); ++i) {
            if (i) out.push_back(',');
            out += std::to_string(static_cast<int>(w.tokens[i]));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// DT coordinates
// ---------------------------------------------------------------------------

void DTCoordinates::validate() const {
    for (int i = 0; i < kPantsCurves; ++i) {
        if (m[i] < 0.0) throw invalid_input("DTCoordinates: negative intersection coordinate");
        if (m[i] == 0.0 && t[i] < 0.0)
            throw invalid_input("DTCoordinates: m_i = 0 requires t_i >= 0");
    }
}

// ---------------------------------------------------------------------------
// Measured laminations
// ---------------------------------------------------------------------------

std::pair<double, double> canonical_sign(double a, double b) {
    if (b < 0.0 || (b == 0.0 && a < 0.0)) return {-a, -b};
    return {a, b};
}

MeasuredLamination MeasuredLamination::torus(double a, double b) {
    if (a == 0.0 && b == 0.0) throw invalid_input("MeasuredLamination: zero lamination");
    MeasuredLamination l;
    l.backend = Backend::PuncturedTorus;
    std::tie(l.a, l.b) = canonical_sign(a, b);
    return l;
}

MeasuredLamination MeasuredLamination::genus2(const DTCoordinates& dt, MarkingWord marking) {
    dt.validate();
    if (marking.backend != Backend::GenusTwo && !marking.tokens.empty())
        throw invalid_input("MeasuredLamination: marking backend mismatch");
    MeasuredLamination l;
    l.backend = Backend::GenusTwo;
    l.dt = dt;
    l.marking = std::move(marking);
    l.marking.backend = Backend::GenusTwo;
    return l;
}

MeasuredLamination MeasuredLamination::from_slope(const Slope& s, double weight) {
    Slope c = canonicalize(s);
    if (weight <= 0.0) throw invalid_input("MeasuredLamination::from_slope: weight must be > 0");
    return torus(weight * static_cast<double>(c.p), weight * static_cast<double>(c.q));
}

bool MeasuredLamination::is_integral(double tol) const {
    auto near_int = [tol](double x) { return std::abs(x - std::round(x)) <= tol; };
    if (backend == Backend::PuncturedTorus) return near_int(a) && near_int(b);
    for (int i = 0; i < kPantsCurves; ++i)
        if (!near_int(dt.m[i]) || !near_int(dt.t[i])) return false;
    return true;
}

MeasuredLamination MeasuredLamination::scaled(double factor) const {
    if (factor <= 0.0) throw invalid_input("MeasuredLamination::scaled: factor must be > 0");
    MeasuredLamination l = *this;
    if (backend == Backend::PuncturedTorus) {
        l.a *= factor;
        l.b *= factor;
    } else {
        for (int i = 0; i < kPantsCurves; ++i) {
            l.dt.m[i] *= factor;
            l.dt.t[i] *= factor;
        }
    }
    return l;
}

void MeasuredLamination::validate() const {
    if (backend == Backend::PuncturedTorus) {
        if (a == 0.0 && b == 0.0) throw invalid_input("MeasuredLamination: zero lamination");
        auto [ca, cb] = canonical_sign(a, b);
        if (ca != a || cb != b) throw invalid_input("MeasuredLamination: not in canonical sign");
    } else {
        dt.validate();
        marking.validate();
    }
}

// ---------------------------------------------------------------------------
// Curves and multicurves
// ---------------------------------------------------------------------------

SimpleClosedCurve SimpleClosedCurve::torus(const Slope& s) {
    SimpleClosedCurve g;
    g.backend = Backend::PuncturedTorus;
    g.slope = canonicalize(s);
    return g;
}

SimpleClosedCurve SimpleClosedCurve::pants(int index, MarkingWord marking) {
    if (index < 1 || index > kPantsCurves)
        throw invalid_input("SimpleClosedCurve::pants: index out of range");
    SimpleClosedCurve g;
    g.backend = Backend::GenusTwo;
    g.pants_index = index;
    g.marking = std::move(marking);
    g.marking.backend = Backend::GenusTwo;
    return g;
}

void SimpleClosedCurve::validate() const {
    if (backend == Backend::PuncturedTorus) {
        if (!slope.is_canonical()) throw invalid_input("SimpleClosedCurve: slope not canonical");
    } else {
        if (pants_index < 1 || pants_index > kPantsCurves)
            throw invalid_input("SimpleClosedCurve: pants index out of range");
        marking.validate();
    }
}

void Multicurve::validate() const {
    for (const auto& [curve, weight] : components) {
        curve.validate();
        if (weight <= 0.0) throw invalid_input("Multicurve: weights must be > 0");
    }
    for (std::size_t i = 0; i < components.size(); ++i)
        for (std::size_t j = i + 1; j < components.size(); ++j)
            if (intersection(components[i].first, components[j].first) != 0.0)
                throw invalid_input("Multicurve: components must be pairwise disjoint");
}

MeasuredLamination Multicurve::as_lamination() const {
    if (components.empty()) throw invalid_input("Multicurve: empty");
    Backend backend = components[0].first.backend;
    if (backend == Backend::PuncturedTorus) {
        // disjointness on the torus forces a single slope
        double a = 0.0, b = 0.0;
        for (const auto& [curve, weight] : components) {
            a += weight * static_cast<double>(curve.slope.p);
            b += weight * static_cast<double>(curve.slope.q);
        }
        return MeasuredLamination::torus(a, b);
    }
    DTCoordinates dt;
    MarkingWord marking = components[0].first.marking;
    for (const auto& [curve, weight] : components) {
        if (!(curve.marking == marking))
            throw invalid_input("Multicurve: mixed markings");
        // pants curve j has DT coordinates m = 0, twist weight on slot j
        dt.t[curve.pants_index - 1] += weight;
    }
    return MeasuredLamination::genus2(dt, marking);
}

// ---------------------------------------------------------------------------
// Intersection numbers
// ---------------------------------------------------------------------------

double intersection(const SimpleClosedCurve& g, const SimpleClosedCurve& d) {
    if (g.backend != d.backend) throw invalid_input("intersection: backend mismatch");
    if (g.backend == Backend::PuncturedTorus) {
        return std::abs(static_cast<double>(cross(g.slope, d.slope)));
    }
    // Pants curves stay pants curves under pants twists, and any two pants
    // curves of the same decomposition are disjoint.
    return 0.0;
}

double intersection(const MeasuredLamination& lam, const SimpleClosedCurve& g) {
    if (lam.backend != g.backend) throw invalid_input("intersection: backend mismatch");
    if (lam.backend == Backend::PuncturedTorus) {
        return std::abs(lam.a * static_cast<double>(g.slope.q) -
                        lam.b * static_cast<double>(g.slope.p));
    }
    // Transport the curve into the lamination's marking. Pants twists fix the
    // pants curves, so only the index matters.
    return lam.dt.m[g.pants_index - 1];
}

double intersection(const Multicurve& mc, const SimpleClosedCurve& g) {
    double sum = 0.0;
    for (const auto& [curve, weight] : mc.components) sum += weight * intersection(curve, g);
    return sum;
}

double intersection_with_pants_curve(const DTCoordinates& lam, int index) {
    if (index < 1 || index > kPantsCurves)
        throw invalid_input("intersection_with_pants_curve: index out of range");
    return lam.m[index - 1];
}

// ---------------------------------------------------------------------------
// d_lam
// ---------------------------------------------------------------------------

double d_lam(const MeasuredLamination& x, const MeasuredLamination& y) {
    if (x.backend != y.backend) throw invalid_input("d_lam: backend mismatch");
    if (x.backend == Backend::PuncturedTorus) {
        return std::max(std::abs(x.a - y.a), std::abs(x.b - y.b));
    }
    if (!(x.marking == y.marking))
        throw invalid_input("d_lam: marking mismatch, transport to a common marking first");
    double m = 0.0;
    for (int i = 0; i < kPantsCurves; ++i) {
        m = std::max(m, std::abs(x.dt.m[i] - y.dt.m[i]));
        m = std::max(m, std::abs(x.dt.t[i] - y.dt.t[i]));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

namespace {

// Stern-Brocot descent over p,q >= 1 inside the |p|,|q| <= Q box. Ancestors
// have componentwise smaller coordinates, so pruning at the box edge is exact.
void stern_brocot_box(Slope left, Slope right, std::int64_t Q, std::vector<Slope>& out) {
    Slope med{checked_add(left.p, right.p), checked_add(left.q, right.q)};
    if (std::llabs(med.p) > Q || med.q > Q) return;
    out.push_back(med);
    stern_brocot_box(left, med, Q, out);
    stern_brocot_box(med, right, Q, out);
}

}  // namespace

std::vector<SimpleClosedCurve> enumerate_curves(const SurfaceSpec& spec, std::int64_t Q) {
    spec.validate();
    if (Q < 1) throw invalid_input("enumerate_curves: Q must be >= 1");
    std::vector<SimpleClosedCurve> out;
    if (spec.backend() == Backend::GenusTwo) {
        for (int j = 1; j <= kPantsCurves; ++j) out.push_back(SimpleClosedCurve::pants(j));
        return out;
    }
    std::vector<Slope> slopes{{1, 0}, {0, 1}};
    stern_brocot_box({1, 0}, {0, 1}, Q, slopes);            // p/q > 0
    stern_brocot_box({-1, 0}, {0, 1}, Q, slopes);           // p/q < 0, recorded as (p<0, q>0)
    std::sort(slopes.begin(), slopes.end(), slope_less);
    out.reserve(slopes.size());
    for (const Slope& s : slopes) out.push_back(SimpleClosedCurve::torus(s));
    return out;
}

// ---------------------------------------------------------------------------
// Rees constant
// ---------------------------------------------------------------------------

double rees_constant_estimate(const SimpleClosedCurve& g,
                              const std::vector<MeasuredLamination>& sample) {
    if (sample.empty()) throw invalid_input("rees_constant_estimate: empty sample");
    if (sample.size() < 2)
        throw invalid_input("rees_constant_estimate: need >= 2 laminations");
    double best = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        for (std::size_t j = i + 1; j < sample.size(); ++j) {
            double d = d_lam(sample[i], sample[j]);
            if (d == 0.0) continue;  // identical pair contributes nothing
            double di = std::abs(intersection(sample[i], g) - intersection(sample[j], g));
            best = std::max(best, di / d);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Mod action
// ---------------------------------------------------------------------------

SimpleClosedCurve act(const MarkingWord& h, const SimpleClosedCurve& g) {
    if (h.backend != g.backend) throw invalid_input("act: backend mismatch");
    if (g.backend == Backend::PuncturedTorus)
        return SimpleClosedCurve::torus(act(h.matrix(), g.slope));
    // pants twists fix the pants curves
    return g;
}

MeasuredLamination act(const MarkingWord& h, const MeasuredLamination& lam) {
    if (h.backend != lam.backend) throw invalid_input("act: backend mismatch");
    if (lam.backend == Backend::PuncturedTorus) {
        Mat2z m = h.matrix();
        double a = static_cast<double>(m.a) * lam.a + static_cast<double>(m.b) * lam.b;
        double b = static_cast<double>(m.c) * lam.a + static_cast<double>(m.d) * lam.b;
        return MeasuredLamination::torus(a, b);
    }
    MeasuredLamination out = lam;
    for (std::int8_t tok : h.tokens) {
        int j = std::abs(static_cast<int>(tok)) - 1;
        double sign = tok > 0 ? 1.0 : -1.0;
        out.dt.t[j] += sign * out.dt.m[j];
        if (out.dt.m[j] == 0.0 && out.dt.t[j] < 0.0) out.dt.t[j] = -out.dt.t[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Literals
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

SimpleClosedCurve parse_curve_literal(const std::string& text) {
    if (text.rfind("slope:", 0) == 0) {
        auto parts = split(text.substr(6), '/');
        if (parts.size() != 2) throw invalid_input("curve literal: expected slope:p/q");
        return SimpleClosedCurve::torus(Slope{std::stoll(parts[0]), std::stoll(parts[1])});
    }
    if (text.rfind("pants:", 0) == 0) {
        auto parts = split(text.substr(6), '@');
        int idx = std::stoi(parts[0]);
        MarkingWord w;
        if (parts.size() > 1) w = parse_word(Backend::GenusTwo, parts[1]);
        return SimpleClosedCurve::pants(idx, w);
    }
    throw invalid_input("curve literal: expected slope:p/q or pants:i[@word]");
}

MeasuredLamination parse_lamination_literal(const std::string& text) {
    if (text.rfind("lam:", 0) == 0) {
        auto parts = split(text.substr(4), ',');
        if (parts.size() != 2) throw invalid_input("lamination literal: expected lam:a,b");
        return MeasuredLamination::torus(std::stod(parts[0]), std::stod(parts[1]));
    }
    if (text.rfind("dt:", 0) == 0) {
        std::string body = text.substr(3);
        std::string wordpart;
        auto at = body.find('@');
        if (at != std::string::npos) {
            wordpart = body.substr(at + 1);
            body = body.substr(0, at);
        }
        auto triples = split(body, ',');
        if (triples.size() != kPantsCurves)
            throw invalid_input("lamination literal: expected dt:m1:t1,m2:t2,m3:t3[@word]");
        DTCoordinates dt;
        for (int i = 0; i < kPantsCurves; ++i) {
            auto mt = split(triples[i], ':');
            if (mt.size() != 2) throw invalid_input("lamination literal: bad m:t pair");
            dt.m[i] = std::stod(mt[0]);
            dt.t[i] = std::stod(mt[1]);
        }
        MarkingWord w;
        w.backend = Backend::GenusTwo;
        if (!wordpart.empty()) w = parse_word(Backend::GenusTwo, wordpart);
        return MeasuredLamination::genus2(dt, w);
    }
    throw invalid_input("lamination literal: expected lam:a,b or dt:...");
}

std::string curve_to_string(const SimpleClosedCurve& g) {
    if (g.backend == Backend::PuncturedTorus)
        return "slope:" + std::to_string(g.slope.p) + "/" + std::to_string(g.slope.q);
    std::string out = "pants:" + std::to_string(g.pants_index);
    if (!g.marking.empty()) out += "@" + word_to_string(g.marking);
    return out;
}

std::string lamination_to_string(const MeasuredLamination& lam) {
    std::ostringstream ss;
    if (lam.backend == Backend::PuncturedTorus) {
        ss << "lam:" << lam.a << "," << lam.b;
    } else {
        ss << "dt:";
        for (int i = 0; i < kPantsCurves; ++i) {
            if (i) ss << ",";
            ss << lam.dt.m[i] << ":" << lam.dt.t[i];
        }
        if (!lam.marking.empty()) ss << "@" << word_to_string(lam.marking);
    }
    return ss.str();
}

}  // namespace eqlab::curves

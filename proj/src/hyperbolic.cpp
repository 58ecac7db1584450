#include "eqlab/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace eqlab::hyp {

namespace {

constexpr double kLog2 = 0.6931471805599453094;

struct Vec2 {
    std::int64_t p = 0, q = 0;
};

Vec2 add(const Vec2& a, const Vec2& b) {
    Vec2 r;
    if (__builtin_add_overflow(a.p, b.p, &r.p) || __builtin_add_overflow(a.q, b.q, &r.q))
        throw budget_exceeded("curve coordinates overflowed 64-bit range");
    return r;
}

Vec2 sub(const Vec2& a, const Vec2& b) {
    Vec2 r;
    if (__builtin_sub_overflow(a.p, b.p, &r.p) || __builtin_sub_overflow(a.q, b.q, &r.q))
        throw budget_exceeded("curve coordinates overflowed 64-bit range");
    return r;
}

Vec2 neg(const Vec2& a) { return Vec2{-a.p, -a.q}; }

curves::Slope to_slope(const Vec2& v) { return curves::canonicalize({v.p, v.q}); }

// log(2 sinh(t)) for t > 0.
double log_2sinh(double t) { return t + std::log1p(-std::exp(-2.0 * t)); }

}  // namespace

// ---------------------------------------------------------------------------
// log-trace helpers
// ---------------------------------------------------------------------------

double length_from_log_trace(double lt) {
    if (lt < 30.0) {
        double u = std::exp(lt) / 2.0;
        if (u < 1.0) {
            if (u < 1.0 - 1e-9) throw internal_error("length_from_log_trace: trace below 2");
            u = 1.0;
        }
        double d = u - 1.0;
        if (d < 1e-12) {
            // acosh(1+d) = sqrt(2d)(1 - d/12 + ...)
            return 2.0 * std::sqrt(2.0 * d) * (1.0 - d / 12.0);
        }
        return 2.0 * std::acosh(u);
    }
    // acosh(u) = log u + log(1 + sqrt(1 - u^-2)), u = e^lt / 2
    double lu = lt - kLog2;
    return 2.0 * (lu + std::log1p(std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * lu)))));
}

double log_trace_from_length(double l) {
    // log(2 cosh(l/2)) = l/2 + log(1 + e^-l)
    return l / 2.0 + std::log1p(std::exp(-l));
}

double log_trace_combine(double ltu, double ltv, double ltw) {
    double s = ltu + ltv;
    double r = ltw - s;
    if (r >= 0.0) throw internal_error("log_trace_combine: non-positive trace");
    return s + std::log1p(-std::exp(r));
}

// ---------------------------------------------------------------------------
// PTStructure
// ---------------------------------------------------------------------------

double PTStructure::markov_residual() const { return x * x + y * y + z * z - x * y * z; }

PTStructure PTStructure::renormalized() const {
    // Move one coordinate to the nearest root of its Markov quadratic,
    // whichever needs the smallest correction. Root extraction is written to
    // stay finite for traces up to the double range (products of two
    // coordinates may not overflow only when that candidate is viable).
    auto candidate = [](double u, double v, double w) -> std::pair<bool, double> {
        double P = u * v;
        if (!std::isfinite(P)) return {false, 0.0};
        // 4(u^2+v^2)/P^2 = 4/v^2 + 4/u^2, always representable for u,v > 2
        double r = 4.0 / (v * v) + 4.0 / (u * u);
        if (r > 1.0) return {false, 0.0};
        double s = std::sqrt(1.0 - r);
        double r1 = P * (1.0 + s) / 2.0;
        double r2 = P * (r / (2.0 * (1.0 + s)));
        return {true, std::abs(r1 - w) < std::abs(r2 - w) ? r1 : r2};
    };
    PTStructure best = *this;
    double best_delta = std::numeric_limits<double>::infinity();
    if (auto [ok, nz] = candidate(x, y, z); ok && std::abs(nz - z) < best_delta) {
        best = PTStructure{x, y, nz};
        best_delta = std::abs(nz - z);
    }
    if (auto [ok, nx] = candidate(y, z, x); ok && std::abs(nx - x) < best_delta) {
        best = PTStructure{nx, y, z};
        best_delta = std::abs(nx - x);
    }
    if (auto [ok, ny] = candidate(x, z, y); ok && std::abs(ny - y) < best_delta) {
        best = PTStructure{x, ny, z};
        best_delta = std::abs(ny - y);
    }
    if (!std::isfinite(best_delta))
        throw internal_error("PTStructure::renormalized: no real Markov root");
    return best;
}

void PTStructure::validate(double tol) const {
    if (!(x > 2.0 && y > 2.0 && z > 2.0) || !std::isfinite(x + y + z))
        throw invalid_input("PTStructure: traces must be finite and exceed 2");
    // Scale-invariant Markov check: divide through by max^2 so the test
    // stays meaningful for traces near the double range.
    double m = std::max({x, y, z});
    double a = x / m, b = y / m, c = z / m;
    double lhs = a * a + b * b + c * c;
    double rhs = a * b * c * m;
    if (std::abs(lhs - rhs) > tol * std::max(lhs, rhs))
        throw invalid_input("PTStructure: Markov identity violated");
}

void FNStructure::validate() const {
    for (double li : l)
        if (!(li > 0.0)) throw invalid_input("FNStructure: lengths must be > 0");
}

void HyperbolicStructure::validate() const {
    if (backend == Backend::PuncturedTorus)
        pt.validate();
    else
        fn.validate();
}

// ---------------------------------------------------------------------------
// Structure literals
// ---------------------------------------------------------------------------

HyperbolicStructure parse_structure_literal(const std::string& text) {
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string item;
        std::stringstream ss(s);
        while (std::getline(ss, item, sep)) out.push_back(item);
        return out;
    };
    if (text.rfind("pt:", 0) == 0) {
        auto parts = split(text.substr(3), ',');
        if (parts.size() != 3) throw invalid_input("structure literal: expected pt:x,y,z");
        PTStructure X{std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
        X.validate();
        return HyperbolicStructure::torus(X);
    }
    if (text.rfind("fn:", 0) == 0) {
        auto parts = split(text.substr(3), ',');
        if (parts.size() != curves::kPantsCurves)
            throw invalid_input("structure literal: expected fn:l1:t1,l2:t2,l3:t3");
        FNStructure X;
        for (int i = 0; i < curves::kPantsCurves; ++i) {
            auto lt = split(parts[i], ':');
            if (lt.size() != 2) throw invalid_input("structure literal: bad l:t pair");
            X.l[i] = std::stod(lt[0]);
            X.tau[i] = std::stod(lt[1]);
        }
        X.validate();
        return HyperbolicStructure::genus2(X);
    }
    throw invalid_input("structure literal: expected pt:... or fn:...");
}

std::string structure_to_string(const HyperbolicStructure& X) {
    std::ostringstream ss;
    ss.precision(17);
    if (X.backend == Backend::PuncturedTorus) {
        ss << "pt:" << X.pt.x << "," << X.pt.y << "," << X.pt.z;
    } else {
        ss << "fn:";
        for (int i = 0; i < curves::kPantsCurves; ++i) {
            if (i) ss << ",";
            ss << X.fn.l[i] << ":" << X.fn.tau[i];
        }
    }
    return ss.str();
}

// ---------------------------------------------------------------------------
// Mod action on structures
// ---------------------------------------------------------------------------

PTStructure act(const curves::Mat2z& m, const PTStructure& X) {
    curves::Mat2z inv = m.inverse();
    TraceCache cache(X);
    PTStructure out;
    out.x = std::exp(cache.log_trace(curves::act(inv, curves::Slope{1, 0})));
    out.y = std::exp(cache.log_trace(curves::act(inv, curves::Slope{0, 1})));
    out.z = std::exp(cache.log_trace(curves::act(inv, curves::Slope{1, 1})));
    // The pulled-back traces satisfy the Markov identity exactly in exact
    // arithmetic; clean up the floating-point drift.
    return out.renormalized();
}

HyperbolicStructure act(const curves::MarkingWord& h, const HyperbolicStructure& X) {
    if ((h.backend == Backend::PuncturedTorus) != (X.backend == Backend::PuncturedTorus))
        throw invalid_input("act: backend mismatch");
    if (X.backend == Backend::PuncturedTorus)
        return HyperbolicStructure::torus(act(h.matrix(), X.pt));
    HyperbolicStructure out = X;
    for (std::int8_t tok : h.tokens) {
        int j = std::abs(static_cast<int>(tok)) - 1;
        out.fn.tau[j] += (tok > 0 ? 1.0 : -1.0) * out.fn.l[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// TraceCache
// ---------------------------------------------------------------------------

TraceCache::TraceCache(const PTStructure& X) : X_(X) {
    X_.validate(1e-6);
    reduce_chart(X_.x, X_.y, X_.z);
}

// Markov descent on the trace triple: while the largest trace strictly
// decreases, replace it by its flip (x^2 + y^2) / z -- this form avoids the
// catastrophic cancellation of xy - z for large traces. Each move is an
// integer change of marking, composed into (m00..m11) which maps original
// slope/lamination coordinates into the reduced chart. The descent bottoms
// out at the chart in which the structure's short curves have small slope
// coefficients, so the trace walk stays well conditioned for any input
// marking. Stops early if the map entries would overflow the guard range
// (any prefix of moves is still a valid chart).
void TraceCache::reduce_chart(double x, double y, double z) {
    auto compose = [&](std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
        std::int64_t n00 = a * m00_ + b * m10_, n01 = a * m01_ + b * m11_;
        std::int64_t n10 = c * m00_ + d * m10_, n11 = c * m01_ + d * m11_;
        m00_ = n00;
        m01_ = n01;
        m10_ = n10;
        m11_ = n11;
    };
    const std::int64_t guard = std::int64_t{1} << 31;
    for (int iter = 0; iter < 20000; ++iter) {
        // sort to x <= y <= z; the swaps are involutions on the chart
        if (x > y) {
            std::swap(x, y);
            compose(0, 1, 1, 0);
        }
        if (y > z) {
            std::swap(y, z);
            compose(-1, 1, 0, 1);  // exchanges the axis and diagonal curves
            if (x > y) {
                std::swap(x, y);
                compose(0, 1, 1, 0);
            }
        }
        double zf = (x * x + y * y) / z;  // = xy - z by the Markov identity
        if (!(zf < z * (1.0 - 1e-12))) break;
        bool big = std::abs(m00_) > guard || std::abs(m01_) > guard ||
                   std::abs(m10_) > guard || std::abs(m11_) > guard;
        if (big) break;
        z = zf;
        compose(1, 0, 0, -1);  // the flipped diagonal is (1,-1)
    }
    lx_ = std::log(x);
    ly_ = std::log(y);
    lz_ = std::log(z);
    ld_pos_ = log_trace_combine(lx_, ly_, lz_);  // trace of (1,-1) = xy - z
}

curves::Slope TraceCache::reduced(const curves::Slope& s) const {
    __int128 p = static_cast<__int128>(m00_) * s.p + static_cast<__int128>(m01_) * s.q;
    __int128 q = static_cast<__int128>(m10_) * s.p + static_cast<__int128>(m11_) * s.q;
    const __int128 lim = static_cast<__int128>(std::int64_t{1} << 62);
    if (p > lim || p < -lim || q > lim || q < -lim)
        throw invalid_input("TraceCache: slope out of range after chart reduction");
    return curves::Slope{static_cast<std::int64_t>(p), static_cast<std::int64_t>(q)};
}

TraceCache TraceCache::from_log_traces(double lx, double ly, double lz) {
    double lt2 = std::log(2.0);
    if (!(lx > lt2 && ly > lt2 && lz > lt2))
        throw invalid_input("TraceCache: log traces must exceed log 2");
    // Markov identity in log form: log(x^2+y^2+z^2) == lx+ly+lz
    double m2 = 2.0 * std::max({lx, ly, lz});
    double lhs = m2 + std::log(std::exp(2.0 * lx - m2) + std::exp(2.0 * ly - m2) +
                               std::exp(2.0 * lz - m2));
    if (std::abs(lhs - (lx + ly + lz)) > 1e-6 + 1e-11 * (lx + ly + lz))
        throw invalid_input("TraceCache: Markov identity violated (log form)");
    TraceCache cache;
    cache.X_ = PTStructure{std::exp(lx), std::exp(ly), std::exp(lz)};
    cache.lx_ = lx;
    cache.ly_ = ly;
    cache.lz_ = lz;
    cache.ld_pos_ = log_trace_combine(lx, ly, lz);
    return cache;
}

namespace {

// s_{j+1} = t_m s_j - s_{j-1} advanced k steps in log space. Returns
// (log s_k, log s_{k-1}).
std::pair<double, double> advance_run(double lm, double ls0, double lsm1, std::int64_t k) {
    if (k == 0) return {ls0, lsm1};
    // Closed form via s_j = alpha e^{j theta} + beta e^{-j theta}; usable
    // only when the growing coefficient alpha is extractable without
    // cancellation, i.e. the run already grows at its start with margin.
    // Runs that begin by descending into a twist well (da near or above 0)
    // are advanced stepwise instead: each step subtracts at most half of
    // the combined term because traces stay >= 2, so the log-space
    // recurrence is well conditioned there.
    double theta = length_from_log_trace(lm) / 2.0;
    double anum = ls0 + theta;
    double da = lsm1 - anum;
    if (k <= 64 || !(da < 0.0)) {
        if (k > 200000)
            throw budget_exceeded("advance_run: descending run too long to iterate");
        double prev = lsm1, cur = ls0;
        for (std::int64_t j = 0; j < k; ++j) {
            double next = log_trace_combine(lm, cur, prev);
            prev = cur;
            cur = next;
        }
        return {cur, prev};
    }
    double l2s = log_2sinh(theta);
    double lalpha = anum + std::log1p(-std::exp(da)) - l2s;
    // beta = (s_-1 - s_0 e^-theta) / (2 sinh theta), sign free
    double bnum1 = lsm1, bnum2 = ls0 - theta;
    double sign_beta;
    double lbeta;
    if (bnum1 > bnum2) {
        sign_beta = 1.0;
        lbeta = bnum1 + std::log1p(-std::exp(bnum2 - bnum1)) - l2s;
    } else if (bnum2 > bnum1) {
        sign_beta = -1.0;
        lbeta = bnum2 + std::log1p(-std::exp(bnum1 - bnum2)) - l2s;
    } else {
        sign_beta = 0.0;
        lbeta = -std::numeric_limits<double>::infinity();
    }
    auto eval = [&](std::int64_t j) {
        double main = lalpha + static_cast<double>(j) * theta;
        if (sign_beta == 0.0) return main;
        // beta e^{-j theta} relative to alpha e^{j theta}
        double corr = sign_beta * std::exp((lbeta - static_cast<double>(j) * theta) - main);
        if (corr <= -1.0) throw internal_error("advance_run: cancellation to non-positive trace");
        return main + std::log1p(corr);
    };
    return {eval(k), eval(k - 1)};
}

}  // namespace

double TraceCache::walk(std::int64_t p, std::int64_t q) {
    // Preconditions: canonical slope.
    if (q == 0) return lx_;
    if (p == 0) return ly_;
    bool mirror = p < 0;
    if (mirror) p = -p;
    if (p == 1 && q == 1) return mirror ? ld_pos_ : lz_;
    // In the mirrored chart the roles of (1,1) and (1,-1) swap.
    double lz = mirror ? ld_pos_ : lz_;
    double ld = mirror ? lz_ : ld_pos_;
    (void)lz;
    // continued fraction digits of p/q
    double lt_stat = lx_, lt_mov = ly_, lt_d = ld;
    std::int64_t a = p, b = q;
    while (true) {
        std::int64_t digit = a / b;
        std::int64_t rem = a % b;
        auto [sk, skm1] = advance_run(lt_stat, lt_mov, lt_d, digit);
        // new endpoint digit*stat + mov becomes the stationary side
        lt_mov = lt_stat;
        lt_d = skm1;
        lt_stat = sk;
        if (rem == 0) break;
        a = b;
        b = rem;
    }
    return lt_stat;
}

double TraceCache::raw_log_trace(const curves::Slope& s) {
    curves::Slope c = curves::canonicalize(s);
    bool memoizable = std::llabs(c.p) < (1LL << 31) && c.q < (1LL << 31);
    std::uint64_t key = 0;
    if (memoizable) {
        key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.p)) << 32) |
              static_cast<std::uint32_t>(c.q);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
    }
    double lt = walk(c.p, c.q);
    if (memoizable) memo_.emplace(key, lt);
    return lt;
}

double TraceCache::raw_length(const curves::Slope& s) {
    return length_from_log_trace(raw_log_trace(s));
}

double TraceCache::log_trace(const curves::Slope& s) { return raw_log_trace(reduced(s)); }

double TraceCache::length(const curves::Slope& s) { return length_from_log_trace(log_trace(s)); }

LaminationLengthResult TraceCache::lamination_length(double a, double b, double tol,
                                                     int max_depth) {
    if (a == 0.0 && b == 0.0) throw invalid_input("lamination_length: zero lamination");
    // Work in the reduced chart: the expansion below is well conditioned
    // only when short curves have small slope coefficients.
    {
        double ar = static_cast<double>(m00_) * a + static_cast<double>(m01_) * b;
        double br = static_cast<double>(m10_) * a + static_cast<double>(m11_) * b;
        a = ar;
        b = br;
    }
    std::tie(a, b) = curves::canonical_sign(a, b);
    LaminationLengthResult res;
    if (b == 0.0) {
        res.value = std::abs(a) * raw_length(curves::Slope{1, 0});
        res.depth = 0;
        return res;
    }
    if (a == 0.0) {
        res.value = b * raw_length(curves::Slope{0, 1});
        res.depth = 0;
        return res;
    }
    if (std::abs(a) >= 8e15 * b) {
        // Within rounding distance of the (1,0) axis: the first convergent
        // already overflows the exact integer range. The two-term estimate
        // is an upper bound with defect at most twice the minor term.
        double minor = b * raw_length(curves::Slope{0, 1});
        res.value = std::abs(a) * raw_length(curves::Slope{1, 0}) + minor;
        res.depth = 0;
        res.tol_achieved = 2.0 * minor + 1e-14 * res.value;
        if (res.tol_achieved <= std::max(tol, 1e-7) * std::max(1.0, std::abs(res.value)))
            return res;
        throw convergence_failure("lamination_length: certified band exceeds the tolerance");
    }
    // Continued-fraction convergents p_{k-1}, p_k of a/b bracket the
    // direction, so (a,b) = u * p_{k-1} + v * p_k with u, v >= 0 in the
    // |det| = 1 basis. The train-track estimate u*l(p_{k-1}) + v*l(p_k) is a
    // decreasing upper bound, exact for rational directions. The error at
    // depth k is the sum over deeper corners p of (bracket weight of p) *
    // (corner defect of the length norm at p); in the reduced chart every
    // corner at denominator kk has length at least about systole * kk / 3
    // and the defect decays exponentially in that length, so once two
    // consecutive estimate differences are small the tail really is
    // negligible -- a single coincidence of neighboring estimates remains
    // possible, hence the lag of one level. The certified band
    // 2u*l(p_{k-1}) from the reverse triangle inequality caps the report.
    // The pair with the smallest band is retained; growth of the computed
    // estimate beyond rounding wobble signals breakdown.
    double hk1 = 1.0, kk1 = 0.0;  // p_{-1} = (1, 0)
    double hk = std::floor(a / b), kk = 1.0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    double lastdiff = std::numeric_limits<double>::infinity();
    res.tol_achieved = std::numeric_limits<double>::infinity();
    // x1*y1 - x2*y2 with the products split by fma; the difference of the
    // high parts is exact under heavy cancellation, so the result is
    // accurate to a few ulps even when the terms cancel to machine noise.
    auto cross = [](double x1, double y1, double x2, double y2) {
        double p1 = x1 * y1, e1 = std::fma(x1, y1, -p1);
        double p2 = x2 * y2, e2 = std::fma(x2, y2, -p2);
        return (p1 - p2) + (e1 - e2);
    };
    if (cross(a, 1.0, b, hk) < 0.0) hk -= 1.0;  // a/b rounded across an integer
    for (int depth = 0; depth < max_depth; ++depth) {
        if (!(std::abs(hk) < 9e15 && kk < 9e15)) break;  // best estimate stands
        double det = cross(hk1, kk, hk, kk1);  // +-1 exactly while in range
        double u = cross(a, kk, b, hk) / det;
        double v = cross(b, hk1, a, kk1) / det;
        double noise = 4e-16 * std::abs(u) + 1e-28 * (std::abs(a) * kk + b * std::abs(hk));
        if (u < -noise || v < 0.0) break;  // safety: bracket invariant violated
        double lk = raw_length(curves::Slope{static_cast<std::int64_t>(hk),
                                             static_cast<std::int64_t>(kk)});
        double lk1 = u > 0.0 ? raw_length(curves::Slope{static_cast<std::int64_t>(hk1),
                                                        static_cast<std::int64_t>(kk1)})
                             : 0.0;
        double est = std::max(u, 0.0) * lk1 + v * lk;
        double up = std::isnan(prev) ? 0.0 : est - prev;
        if (up > std::max(lastdiff, 1e-9 * prev + 1e-12)) {
            // Growth beyond the plausible wobble: breakdown. The previous
            // estimate is converged to within the recent variation.
            if (std::max(up, lastdiff) < res.tol_achieved) {
                res.value = prev;
                res.depth = depth - 1;
                res.tol_achieved = std::max(up, lastdiff);
            }
            break;
        }
        double band = 2.0 * std::abs(u) * std::max(lk1, 1.0) + 2.0 * noise * (lk + lk1) +
                      1e-14 * est;  // last term: accumulated length-arithmetic error
        if (!std::isnan(prev)) {
            double diff = std::abs(est - prev);
            band = std::min(band, std::max(diff, lastdiff));
            lastdiff = diff;
        }
        if (band < res.tol_achieved) {
            res.value = est;
            res.depth = depth;
            res.tol_achieved = band;
        }
        if (res.tol_achieved <= tol * std::max(1.0, res.value)) return res;
        // One-ulp perturbations of (a, b) move the off-axis coefficient by
        // about eps * (|a| kk + b |hk|). Below that scale the direction is
        // indistinguishable from the rational p_k at input precision and
        // deeper digits are representation noise, so stop descending; the
        // band just recorded is the best achievable.
        if (u <= 4.4e-16 * (std::abs(a) * kk + b * std::abs(hk))) break;
        prev = est;
        // The bracket coefficients are exactly the continued-fraction
        // remainders of a/b, so the next digit comes straight from them; no
        // separately drifting fractional-part recurrence is needed.
        double digit = std::floor(v / u);
        if (!(digit >= 1.0) || !std::isfinite(digit)) break;
        // A giant partial quotient jumps straight to a very deep convergent,
        // leaving the two-difference termination rule with at most one
        // difference before the bracket bottoms out. Evaluate the estimate
        // at the penultimate mediant p_{k-1} + (digit-1) p_k as an extra
        // evidence level: inside one quotient run the expansion is closed
        // form, no recursion needed.
        if (digit >= 1000.0) {
            double hp = (digit - 1.0) * hk + hk1, kp = (digit - 1.0) * kk + kk1;
            if (std::abs(hp) < 9e15 && kp < 9e15) {
                double lp = raw_length(curves::Slope{static_cast<std::int64_t>(hp),
                                                     static_cast<std::int64_t>(kp)});
                double vp = std::fma(-(digit - 1.0), u, v);  // remainder + u >= 0
                double estp = u * lp + vp * lk;
                double bandp = 2.0 * std::abs(u) * std::max(lp, 1.0) +
                               2.0 * noise * (lk + lp) + 1e-14 * estp;
                double diffp = std::abs(estp - prev);
                bandp = std::min(bandp, std::max(diffp, lastdiff));
                lastdiff = diffp;
                if (bandp < res.tol_achieved) {
                    res.value = estp;
                    res.depth = depth;
                    res.tol_achieved = bandp;
                }
                if (res.tol_achieved <= tol * std::max(1.0, res.value)) return res;
                prev = estp;
            }
        }
        double hn = digit * hk + hk1, kn = digit * kk + kk1;
        hk1 = hk;
        kk1 = kk;
        hk = hn;
        kk = kn;
    }
    // Directions within one ulp of a rational carry an unavoidable band of
    // about eps * scale * denominator^2 within double range, so requests
    // tighter than 1e-7 are best effort there; tol_achieved always reports
    // the certified band actually obtained.
    if (res.tol_achieved > std::max(tol, 1e-7) * std::max(1.0, std::abs(res.value)))
        throw convergence_failure("lamination_length: certified band exceeds the tolerance");
    return res;
}

// ---------------------------------------------------------------------------
// One-shot helpers
// ---------------------------------------------------------------------------

double trace_of_slope(const PTStructure& X, const curves::Slope& s) {
    TraceCache cache(X);
    return std::exp(cache.log_trace(s));
}

double curve_length(const HyperbolicStructure& X, const curves::SimpleClosedCurve& g) {
    if ((X.backend == Backend::PuncturedTorus) != (g.backend == Backend::PuncturedTorus))
        throw invalid_input("curve_length: backend mismatch");
    if (X.backend == Backend::PuncturedTorus) {
        TraceCache cache(X.pt);
        return cache.length(g.slope);
    }
    // Pants twists change only the twist coordinates, so the transported
    // length is the FN length coordinate itself.
    return X.fn.l[g.pants_index - 1];
}

LaminationLengthResult lamination_length(const HyperbolicStructure& X,
                                         const curves::MeasuredLamination& lam, double tol,
                                         int max_depth) {
    if ((X.backend == Backend::PuncturedTorus) != (lam.backend == Backend::PuncturedTorus))
        throw invalid_input("lamination_length: backend mismatch");
    if (X.backend == Backend::PuncturedTorus) {
        TraceCache cache(X.pt);
        return cache.lamination_length(lam.a, lam.b, tol, max_depth);
    }
    // genus 2: only pants-decomposition supported laminations carry a length
    for (double mi : lam.dt.m)
        if (mi != 0.0)
            throw invalid_input("lamination_length: genus-2 lamination not pants-supported");
    LaminationLengthResult res;
    for (int i = 0; i < curves::kPantsCurves; ++i) res.value += lam.dt.t[i] * X.fn.l[i];
    if (res.value <= 0.0) throw invalid_input("lamination_length: zero lamination");
    return res;
}

// ---------------------------------------------------------------------------
// Enumeration by length
// ---------------------------------------------------------------------------

namespace {

struct Edge {
    Vec2 a, b;
    double lta, ltb;
};

}  // namespace

std::vector<CurveLength> enumerate_by_length(const PTStructure& X, double lmax,
                                             std::size_t max_nodes) {
    if (!(lmax > 0.0)) throw invalid_input("enumerate_by_length: lmax must be > 0");
    TraceCache cache(X);
    // Reduce the base Farey triangle ((1,0),(0,1),(1,1)) to the trace well.
    Vec2 u{1, 0}, v{0, 1};
    double ltu = cache.log_trace({1, 0});
    double ltv = cache.log_trace({0, 1});
    double ltw = cache.log_trace({1, 1});
    std::size_t flips = 0;
    while (true) {
        if (++flips > max_nodes)
            throw budget_exceeded("enumerate_by_length: reduction budget exceeded");
        Vec2 w = add(u, v);
        // Apex traces come from cache queries (computed in the reduced
        // chart) rather than the recombination xy - z, which cancels
        // catastrophically on heavily twisted input charts.
        if (ltw >= ltu && ltw >= ltv) {
            Vec2 ap = sub(u, v);
            double cand = cache.log_trace(to_slope(ap));
            if (cand >= ltw) break;
            // triangle (v, u-v) with sum u
            Vec2 nu = v, nv = ap;
            double nltu = ltv, nltv = cand, nltw = ltu;
            u = nu; v = nv; ltu = nltu; ltv = nltv; ltw = nltw;
        } else if (ltu >= ltv) {
            Vec2 ap = add(v, w);
            double cand = cache.log_trace(to_slope(ap));
            if (cand >= ltu) break;
            Vec2 nu = v, nv = w;
            double nltu = ltv, nltv = ltw, nltw = cand;
            u = nu; v = nv; ltu = nltu; ltv = nltv; ltw = nltw;
        } else {
            Vec2 ap = add(u, w);
            double cand = cache.log_trace(to_slope(ap));
            if (cand >= ltv) break;
            Vec2 nv = add(u, v);
            double nltv = ltw, nltw = cand;
            v = nv; ltv = nltv; ltw = nltw;
        }
    }
    Vec2 w = add(u, v);

    std::vector<CurveLength> out;
    auto record = [&](const Vec2& s, double lt) {
        double len = length_from_log_trace(lt);
        if (len <= lmax) out.push_back({to_slope(s), len});
    };
    record(u, ltu);
    record(v, ltv);
    record(w, ltw);

    std::deque<Edge> queue;
    queue.push_back({u, neg(v), ltu, ltv});  // outward apex u - v
    queue.push_back({u, w, ltu, ltw});       // outward apex u + w
    queue.push_back({v, w, ltv, ltw});       // outward apex v + w
    std::size_t nodes = 0;
    while (!queue.empty()) {
        if (++nodes > max_nodes)
            throw budget_exceeded("enumerate_by_length: node budget exceeded (partial result)");
        Edge e = queue.front();
        queue.pop_front();
        Vec2 n = add(e.a, e.b);
        double ltn = cache.log_trace(to_slope(n));
        double len = length_from_log_trace(ltn);
        if (len <= lmax) out.push_back({to_slope(n), len});
        bool monotone = ltn >= e.lta && ltn >= e.ltb;
        if (len <= lmax || !monotone) {
            queue.push_back({e.a, n, e.lta, ltn});
            queue.push_back({e.b, n, e.ltb, ltn});
        }
    }
    std::sort(out.begin(), out.end(), [](const CurveLength& a, const CurveLength& b) {
        return curves::slope_less(a.slope, b.slope);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Systole
// ---------------------------------------------------------------------------

double K_sys_bound(const SurfaceSpec& spec) {
    spec.validate();
    // 2R with area(disk of radius R) = 2 pi (cosh R - 1) = 2 pi |chi|
    return 2.0 * std::acosh(static_cast<double>(spec.euler_abs()) + 1.0);
}

SystoleResult systole(const HyperbolicStructure& X, std::size_t max_nodes) {
    SystoleResult res;
    if (X.backend == Backend::GenusTwo) {
        X.fn.validate();
        res.l_sys = *std::min_element(X.fn.l.begin(), X.fn.l.end());
        for (int i = 0; i < curves::kPantsCurves; ++i)
            if (X.fn.l[i] <= res.l_sys + 1e-9) res.systoles.push_back(curves::SimpleClosedCurve::pants(i + 1));
        return res;
    }
    double bound = K_sys_bound(SurfaceSpec::punctured_torus());
    auto all = enumerate_by_length(X.pt, bound * (1.0 + 1e-12), max_nodes);
    if (all.empty())
        throw internal_error("systole: no curve below the topological bound, search invalid");
    double min_len = std::numeric_limits<double>::infinity();
    for (const auto& cl : all) min_len = std::min(min_len, cl.length);
    res.l_sys = min_len;
    for (const auto& cl : all)
        if (cl.length <= min_len + 1e-9) res.systoles.push_back(curves::SimpleClosedCurve::torus(cl.slope));
    return res;
}

// ---------------------------------------------------------------------------
// Thurston distances
// ---------------------------------------------------------------------------

double thurston_distance_asym(const HyperbolicStructure& Y, const HyperbolicStructure& Yp,
                              std::int64_t Q) {
    if (Y.backend != Yp.backend) throw invalid_input("thurston_distance_asym: backend mismatch");
    if (Q < 1) throw invalid_input("thurston_distance_asym: Q must be >= 1");
    double best = -std::numeric_limits<double>::infinity();
    if (Y.backend == Backend::PuncturedTorus) {
        TraceCache cy(Y.pt), cyp(Yp.pt);
        for (const auto& g :
             curves::enumerate_curves(SurfaceSpec::punctured_torus(), Q)) {
            double r = std::log(cy.length(g.slope)) - std::log(cyp.length(g.slope));
            best = std::max(best, r);
        }
        return best;
    }
    for (int i = 0; i < curves::kPantsCurves; ++i)
        best = std::max(best, std::log(Y.fn.l[i]) - std::log(Yp.fn.l[i]));
    return best;
}

double thurston_distance(const HyperbolicStructure& Y, const HyperbolicStructure& Yp,
                         std::int64_t Q) {
    return std::max(thurston_distance_asym(Y, Yp, Q), thurston_distance_asym(Yp, Y, Q));
}

double sys_lip_bound(const SurfaceSpec& spec, double eps) {
    if (!(eps > 0.0)) throw invalid_input("sys_lip_bound: eps must be > 0");
    double K = K_sys_bound(spec);
    auto term1 = [K](double t) { return 2.0 * K / t; };
    auto term2 = [K, eps](double t) {
        return K * std::expm1(t) / t + (K * K / eps) * std::expm1(2.0 * t) / t;
    };
    // term1 decreases, term2 increases; the sup of min is at the crossing.
    double lo = 1e-12, hi = 1.0;
    while (term1(hi) > term2(hi)) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = (lo + hi) / 2.0;
        if (term1(mid) > term2(mid))
            lo = mid;
        else
            hi = mid;
    }
    double t = (lo + hi) / 2.0;
    return std::min(term1(t), term2(t)) + 1e-12;
}

double sys_lip_estimate(
    double eps,
    const std::vector<std::pair<HyperbolicStructure, HyperbolicStructure>>& pairs,
    std::int64_t Q) {
    if (pairs.empty()) throw invalid_input("sys_lip_estimate: empty sample");
    double best = 0.0;
    for (const auto& [Y, Yp] : pairs) {
        double ly = systole(Y).l_sys, lyp = systole(Yp).l_sys;
        if (ly < eps || lyp < eps)
            throw invalid_input("sys_lip_estimate: sample violates the thick-part floor");
        double d = thurston_distance(Y, Yp, Q);
        if (d <= 0.0) continue;  // identical pair contributes nothing
        best = std::max(best, std::abs(ly - lyp) / d);
    }
    return best;
}

}  // namespace eqlab::hyp

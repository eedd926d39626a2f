#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bir.hpp"
#include "links.hpp"

namespace omni {

namespace detail {

inline void project_pair(double& u1, double& u2, double a, double b)
{
    const double g = u2 - u1;
    if (g < a || g > b) {
        const double m = 0.5 * (u1 + u2);
        const double t = g < a ? a : b;
        u1 = m - 0.5 * t;
        u2 = m + 0.5 * t;
    }
}

// KKT check for the primal: multipliers lambda_i of the gap constraints
// follow lambda_i = lambda_{i-1} + 2(v_i - y_i) + mu_i, with sign
// restrictions fixed by which constraints are tight, and lambda_n = 0.
inline bool bir_kkt_holds(const BIRInstance& in, const std::vector<double>& v, double tol)
{
    const std::size_t n = v.size();
    const double inf = std::numeric_limits<double>::infinity();
    const double tight = 1e-9;
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = 2.0 * (v[i] - in.y[i]);
        lo += r;
        hi += r;
        if (v[i] <= tight) lo = -inf;
        if (v[i] >= 1.0 - tight) hi = inf;
        lo -= tol;
        hi += tol;
        if (i + 1 == n) break;
        const double g = v[i + 1] - v[i];
        const bool at_a = std::abs(g - in.a[i]) <= tight, at_b = std::abs(g - in.b[i]) <= tight;
        double jl = 0, jh = 0;
        if (at_a) jl = -inf;
        if (at_b) jh = inf;
        lo = std::max(lo, jl);
        hi = std::min(hi, jh);
        if (lo > hi) return false;
    }
    return lo <= 0.0 && 0.0 <= hi;
}

// Rebuild v from an active set: tight gaps glue coordinates into blocks,
// a box-tight member pins a block, otherwise the block sits at its mean.
inline std::vector<double> bir_polish(const BIRInstance& in, const std::vector<double>& x, double act)
{
    const std::size_t n = x.size();
    std::vector<double> v(n);
    std::size_t s = 0;
    while (s < n) {
        std::size_t t = s;
        std::vector<double> off{0.0};
        while (t + 1 < n) {
            const double g = x[t + 1] - x[t];
            if (std::abs(g - in.a[t]) <= act) off.push_back(off.back() + in.a[t]);
            else if (std::abs(g - in.b[t]) <= act) off.push_back(off.back() + in.b[t]);
            else break;
            ++t;
        }
        double base = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t j = s; j <= t; ++j) {
            if (x[j] <= act) { base = 0.0 - off[j - s]; break; }
            if (x[j] >= 1.0 - act) { base = 1.0 - off[j - s]; break; }
        }
        if (std::isnan(base)) {
            double sum = 0;
            for (std::size_t j = s; j <= t; ++j) sum += in.y[j] - off[j - s];
            base = sum / static_cast<double>(t - s + 1);
        }
        for (std::size_t j = s; j <= t; ++j) v[j] = base + off[j - s];
        s = t + 1;
    }
    return v;
}

} // namespace detail

// Dykstra alternating projections onto {odd gaps}, {even gaps} and the box,
// followed by an active-set polish that is accepted only with a KKT
// certificate.
inline BIRSolution solve_bir_reference(const BIRInstance& in, double tol = 1e-9, std::size_t max_iter = 2000000)
{
    validate_bir(in);
    check_bir_feasible(in);
    const std::size_t n = in.y.size();
    if (n == 1) {
        BIRSolution s{{std::clamp(in.y[0], 0.0, 1.0)}, 0.0};
        s.objective = bir_objective(s.v, in.y);
        return s;
    }
    std::vector<double> x = in.y, p1(n, 0), p2(n, 0), p3(n, 0), z(n);
    auto project_gaps = [&](std::size_t start, std::vector<double>& p) {
        for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + p[i];
        for (std::size_t i = start; i + 1 < n; i += 2) detail::project_pair(z[i], z[i + 1], in.a[i], in.b[i]);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = x[i] + p[i] - z[i];
            x[i] = z[i];
        }
    };
    const double act_levels[] = {1e-3, 1e-5, 1e-7, 1e-9};
    std::size_t check_every = 16;
    double prev_obj = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        project_gaps(0, p1);
        project_gaps(1, p2);
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = std::clamp(x[i] + p3[i], 0.0, 1.0);
            p3[i] = x[i] + p3[i] - z[i];
            x[i] = z[i];
        }
        if (it % check_every) continue;
        check_every = std::min<std::size_t>(check_every * 2, 4096);
        for (double act : act_levels) {
            auto v = detail::bir_polish(in, x, act);
            if (!bir_feasible_within(in, v, 1e-12)) continue;
            if (!detail::bir_kkt_holds(in, v, 1e-9)) continue;
            for (auto& q : v) q = std::clamp(q, 0.0, 1.0);
            return {v, bir_objective(v, in.y)};
        }
        const double obj = bir_objective(x, in.y);
        if (bir_feasible_within(in, x, 1e-13) && std::abs(prev_obj - obj) < tol * 1e-3 && it > 100000) {
            return {x, obj};
        }
        prev_obj = obj;
    }
    throw std::runtime_error("reference BIR solver did not converge");
}

namespace detail {

// c2 (u - o)^2 + c1 (u - o) + c0 on [lo, hi], anchored at o = lo
struct QuadPiece {
    double lo, hi, c2, c1, c0;

    double at(double u) const { return (c2 * (u - lo) + c1) * (u - lo) + c0; }
    double argmin() const
    {
        if (c2 > 0) return std::clamp(lo - c1 / (2 * c2), lo, hi);
        return c1 >= 0 ? lo : hi;
    }
    void clip_left(double x)
    {
        const double d = x - lo;
        c0 = at(x);
        c1 += 2 * c2 * d;
        lo = x;
    }
};

inline double pieces_argmin(const std::vector<QuadPiece>& f)
{
    double best = std::numeric_limits<double>::infinity(), arg = f.front().lo;
    for (const auto& q : f) {
        const double u = q.argmin(), val = q.at(u);
        if (val < best) best = val, arg = u;
    }
    return arg;
}

} // namespace detail

// Primal dynamic program with explicit piecewise-quadratic value functions:
// f_i(u) = min over v in [u - b, u - a] of f_{i-1}(v), plus (u - y_i)^2, on
// [0, 1].  Each step splits at the minimizer, shifts the two sides by a and
// b and inserts a flat piece, so the cost is O(n^2).
inline BIRSolution solve_bir_naive_dp(const BIRInstance& in)
{
    using detail::QuadPiece;
    validate_bir(in);
    check_bir_feasible(in);
    const std::size_t n = in.y.size();
    std::vector<QuadPiece> f{{0.0, 1.0, 1.0, -2.0 * in.y[0], in.y[0] * in.y[0]}};
    std::vector<double> mins(n);
    for (std::size_t i = 1; i < n; ++i) {
        const double m = detail::pieces_argmin(f);
        mins[i - 1] = m;
        double fm = 0;
        for (const auto& q : f)
            if (m >= q.lo && m <= q.hi) fm = q.at(m);
        const double a = in.a[i - 1], b = in.b[i - 1];
        std::vector<QuadPiece> g;
        for (const auto& q : f) {
            if (q.lo < m) {
                QuadPiece l = q;
                l.hi = std::min(q.hi, m);
                l.lo += a;
                l.hi += a;
                g.push_back(l);
            }
        }
        g.push_back({m + a, m + b, 0.0, 0.0, fm});
        for (const auto& q : f) {
            if (q.hi > m) {
                QuadPiece r = q;
                if (r.lo < m) r.clip_left(m);
                r.lo += b;
                r.hi += b;
                g.push_back(r);
            }
        }
        // restrict to [0, 1] and add the new square term
        std::vector<QuadPiece> h;
        for (auto q : g) {
            if (q.hi < 0.0 || q.lo > 1.0) continue;
            if (q.lo < 0.0) q.clip_left(0.0);
            q.hi = std::min(q.hi, 1.0);
            if (q.hi < q.lo) continue;
            if (q.hi == q.lo && !h.empty()) continue;
            const double e = q.lo - in.y[i];
            q.c2 += 1.0;
            q.c1 += 2.0 * e;
            q.c0 += e * e;
            h.push_back(q);
        }
        if (h.empty()) throw BIRInfeasible("no feasible value at position " + std::to_string(i));
        f = std::move(h);
    }
    std::vector<double> v(n);
    v[n - 1] = detail::pieces_argmin(f);
    for (std::size_t i = n - 1; i-- > 0;)
        v[i] = std::clamp(std::clamp(mins[i], v[i + 1] - in.b[i], v[i + 1] - in.a[i]), 0.0, 1.0);
    return {v, bir_objective(v, in.y)};
}

// min over comparator links s of sum_i (v_i - y_i)(z_i - s^{-1}(v_i)),
// skipping links that violate v_{i+1} - v_i <= beta (s^{-1}(v_{i+1}) - s^{-1}(v_i)).
inline double check_bir_optimality_certificate(const BIRSolution& sol, const std::vector<double>& y,
                                               const std::vector<double>& z, double beta,
                                               const std::vector<Link>& links, std::size_t* used = nullptr)
{
    const std::size_t n = sol.v.size();
    if (y.size() != n || z.size() != n) throw std::invalid_argument("certificate inputs differ in length");
    double best = std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    std::vector<double> fv(n);
    for (const auto& s : links) {
        for (std::size_t i = 0; i < n; ++i) fv[i] = s.invert(sol.v[i]);
        bool ok = true;
        for (std::size_t i = 0; i + 1 < n && ok; ++i)
            if (sol.v[i + 1] - sol.v[i] > beta * (fv[i + 1] - fv[i]) + 1e-12) ok = false;
        if (!ok) continue;
        ++count;
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) sum += (sol.v[i] - y[i]) * (z[i] - fv[i]);
        best = std::min(best, sum);
    }
    if (used) *used = count;
    return count ? best : 0.0;
}

} // namespace omni

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "maintainer.hpp"

namespace omni {

struct BIRInstance {
    std::vector<double> y; // targets in [0,1]
    std::vector<double> a; // lower gaps, length n-1
    std::vector<double> b; // upper gaps, length n-1
};

struct BIRSolution {
    std::vector<double> v;
    double objective = 0;
};

struct DualCoefficients {
    std::vector<double> c, d, e;
};

struct BIRInfeasible : std::domain_error {
    using std::domain_error::domain_error;
};

struct BIRStats {
    std::size_t max_pieces = 0;
    bool piece_bound_held = true;
    bool keep_dual = false;
    std::vector<double> dual; // f_0..f_n when keep_dual is set
};

inline double bir_objective(const std::vector<double>& v, const std::vector<double>& y)
{
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (v[i] - y[i]) * (v[i] - y[i]);
    return s;
}

inline void validate_bir(const BIRInstance& in)
{
    const std::size_t n = in.y.size();
    if (n == 0) throw std::invalid_argument("BIR instance needs n >= 1");
    if (in.a.size() != n - 1 || in.b.size() != n - 1)
        throw std::invalid_argument("gap vectors must have length n-1");
    for (double y : in.y)
        if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("targets must lie in [0,1]");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!std::isfinite(in.a[i]) || !std::isfinite(in.b[i])) throw std::invalid_argument("gaps must be finite");
        if (in.a[i] < 0.0) throw std::invalid_argument("lower gaps must be non-negative");
        if (in.a[i] > in.b[i]) throw std::invalid_argument("lower gap exceeds upper gap");
    }
}

// Forward envelope of reachable values; empty means no feasible v.
inline void check_bir_feasible(const BIRInstance& in)
{
    double lo = 0.0, hi = 1.0;
    for (std::size_t i = 0; i + 1 < in.y.size(); ++i) {
        lo = lo + in.a[i];
        hi = std::min(1.0, hi + in.b[i]);
        if (lo > 1.0 + 1e-12 || lo > hi + 1e-12)
            throw BIRInfeasible("BIR instance infeasible: constraints cannot fit in [0,1] at index " +
                                std::to_string(i + 1));
        lo = std::min(lo, hi);
    }
}

inline DualCoefficients dualize(const BIRInstance& in)
{
    const std::size_t n = in.y.size();
    if (n < 2) throw std::invalid_argument("dualize needs n >= 2");
    DualCoefficients dc;
    dc.c.resize(n - 1);
    dc.d.resize(n - 1);
    dc.e.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dc.c[i] = 2.0 * (in.y[i + 1] - in.y[i]) - (in.a[i] + in.b[i]);
        dc.d[i] = in.b[i] - in.a[i];
    }
    for (std::size_t i = 0; i < n; ++i) dc.e[i] = 2.0 * in.y[i] - 1.0;
    return dc;
}

namespace detail {

inline BIRSolution solve_bir_two(const BIRInstance& in)
{
    const double y1 = in.y[0], y2 = in.y[1], a = in.a[0], b = in.b[0];
    const double tol = 1e-12;
    auto feasible = [&](double v1, double v2) {
        const double g = v2 - v1;
        return v1 >= -tol && v1 <= 1 + tol && v2 >= -tol && v2 <= 1 + tol && g >= a - tol && g <= b + tol;
    };
    std::vector<std::array<double, 2>> cand;
    cand.push_back({y1, y2});
    // projections onto the gap lines v2 - v1 = g
    for (double g : {a, b}) {
        const double m = 0.5 * (y1 + y2);
        cand.push_back({m - 0.5 * g, m + 0.5 * g});
    }
    // projections onto box faces
    for (double c : {0.0, 1.0}) {
        cand.push_back({c, y2});
        cand.push_back({y1, c});
    }
    // vertices
    for (double g : {a, b})
        for (double c : {0.0, 1.0}) {
            cand.push_back({c, c + g});
            cand.push_back({c - g, c});
        }
    for (double c1 : {0.0, 1.0})
        for (double c2 : {0.0, 1.0}) cand.push_back({c1, c2});
    BIRSolution best;
    best.objective = std::numeric_limits<double>::infinity();
    for (auto [v1, v2] : cand) {
        if (!feasible(v1, v2)) continue;
        v1 = std::clamp(v1, 0.0, 1.0);
        v2 = std::clamp(v2, 0.0, 1.0);
        const double obj = (v1 - y1) * (v1 - y1) + (v2 - y2) * (v2 - y2);
        if (obj < best.objective) best = {{v1, v2}, obj};
    }
    if (best.v.empty()) throw BIRInfeasible("BIR instance infeasible");
    return best;
}

// Dual dynamic program.  A_i(f) is the optimal dual cost of f_1..f_i with
// f_i = f; its derivative is kept as pieces 2 alpha f + beta in the
// maintainer.  The only kink of A_i sits at f = 0 between pieces z and z+1.
class BirDP {
public:
    explicit BirDP(const BIRInstance& in) : in_(in), dc_(dualize(capped(in))), n_(in.y.size()) {}

    BIRSolution run(BIRStats* stats)
    {
        forward(stats);
        std::vector<double> f(n_ + 1, 0.0);
        for (std::size_t i = n_; i >= 2; --i) {
            f[i - 1] = best_prev(f[i], dc_.e[i - 1]);
            if (i - 1 >= 2) rewind(i - 1);
        }
        if (stats && stats->keep_dual) stats->dual = f;
        BIRSolution sol;
        sol.v.resize(n_);
        for (std::size_t i = 1; i <= n_; ++i)
            sol.v[i - 1] = std::clamp(in_.y[i - 1] - 0.5 * (f[i] - f[i - 1]), 0.0, 1.0);
        sol.objective = bir_objective(sol.v, in_.y);
        return sol;
    }

private:
    static constexpr long none = -1;

    // gaps above 1 never bind inside the box; capping keeps d small
    static BIRInstance capped(BIRInstance in)
    {
        for (auto& b : in.b) b = std::min(b, 1.0);
        return in;
    }

    struct IterLog {
        std::uint32_t nf = 0, nb = 0;
        bool front_ins = false, back_ins = false, zero_ins = false, collapsed = false;
        long zero_idx = none;
        long split = none;
        long z_prev = none;
        double c = 0, d = 0;
    };

    double vertex(std::size_t q, const LeafState& L, const LeafState& R, long z) const
    {
        if (static_cast<long>(q) == z) return 0.0;
        const bool ll = L.k == 0, rl = R.k == 0;
        if (ll && rl) throw std::logic_error("BIR: adjacent linear pieces away from the kink");
        if (ll) return L.h * mt_.mult(R) - R.h;
        if (rl) return R.h * mt_.mult(L) - L.h;
        const double mL = mt_.mult(L), mR = mt_.mult(R);
        if (mL == mR) throw std::logic_error("BIR: adjacent pieces share a curvature away from the kink");
        return (R.h * mL - L.h * mR) / (mR - mL);
    }

    double vertex_at(std::size_t q, long z) const { return vertex(q, mt_.raw(q), mt_.raw(q + 1), z); }

    void forward(BIRStats* stats)
    {
        logs_.assign(n_, IterLog{});
        deleted_.clear();
        mt_.reserve(2 * n_ + 8);
        // A_1: derivative clamp(f, e-1, e+1) then the c f + d|f| term
        const double e1 = dc_.e[0];
        mt_.insert_raw(0, LeafState{0, e1 - 1.0});
        mt_.insert_raw(1, mt_.fresh_quadratic(1.0, 0.0));
        mt_.insert_raw(2, LeafState{0, e1 + 1.0});
        z_ = none;
        add_cd(logs_[1], dc_.c[0], dc_.d[0]);
        track(stats, 1);
        for (std::size_t i = 2; i + 1 <= n_; ++i) {
            step(i);
            track(stats, i);
        }
    }

    void track(BIRStats* stats, std::size_t i)
    {
        const std::size_t m = mt_.size();
        if (stats) {
            stats->max_pieces = std::max(stats->max_pieces, m);
            if (m > 2 * i + 2) stats->piece_bound_held = false;
        }
    }

    // locate the piece containing f = 0 and add c f + d |f|
    void add_cd(IterLog& lg, double c, double d)
    {
        lg.c = c;
        lg.d = d;
        const std::size_t m = mt_.size();
        std::size_t p = mt_.partition_point_adjacent([&](std::size_t q, const LeafState& L, const LeafState& R) {
            return vertex(q, L, R, none) >= 0.0;
        });
        if (d > 0.0) {
            mt_.insert_raw(p + 1, mt_.raw(p));
            mt_.add(0, p, c - d);
            mt_.add(p + 1, m, c + d);
            lg.split = static_cast<long>(p);
            z_ = static_cast<long>(p);
        } else {
            mt_.add_all(c);
            lg.split = none;
            z_ = none;
        }
    }

    void step(std::size_t i)
    {
        IterLog& lg = logs_[i];
        const double e = dc_.e[i - 1];
        const double wl = e - 1.0, wr = e + 1.0;
        lg.z_prev = z_;
        const LeafState first = mt_.raw(0), last = mt_.raw(mt_.size() - 1);
        const double bfirst = first.h, blast = last.h;
        const double lo = std::max(bfirst, wl), hi = std::min(blast, wr);
        if (!(lo < hi)) {
            // window meets the slope range in a single point: A is linear
            lg.collapsed = true;
            while (mt_.size() > 0) {
                deleted_.push_back(mt_.erase_raw(0));
                ++lg.nf;
            }
            mt_.insert_raw(0, LeafState{0, 0.5 * (lo + hi)});
            z_ = none;
            mt_.update_all();
            add_cd(lg, dc_.c[i - 1], dc_.d[i - 1]);
            return;
        }
        double dm = 0, dp = 0;
        long z = z_;
        if (z != none) {
            dm = mt_.deriv(mt_.raw(static_cast<std::size_t>(z)), 0.0);
            dp = mt_.deriv(mt_.raw(static_cast<std::size_t>(z) + 1), 0.0);
        }
        if (bfirst < wl) {
            while (mt_.size() > 1) {
                const LeafState L = mt_.raw(0);
                const double v = vertex(0, L, mt_.raw(1), z);
                if (mt_.deriv(L, v) > wl) break;
                deleted_.push_back(mt_.erase_raw(0));
                ++lg.nf;
                if (z != none) --z;
                if (z < 0) z = none;
            }
        }
        if (blast > wr) {
            while (mt_.size() > 0) {
                const std::size_t s = mt_.size();
                const LeafState R = mt_.raw(s - 1);
                double left_d;
                if (s == 1) left_d = R.k == 0 ? R.h : -std::numeric_limits<double>::infinity();
                else left_d = mt_.deriv(R, vertex(s - 2, mt_.raw(s - 2), R, z));
                if (left_d < wr) break;
                deleted_.push_back(mt_.erase_raw(s - 1));
                ++lg.nb;
            }
        }
        if (bfirst < wl) {
            mt_.insert_raw(0, LeafState{0, wl});
            lg.front_ins = true;
        }
        if (blast > wr) {
            mt_.insert_raw(mt_.size(), LeafState{0, wr});
            lg.back_ins = true;
        }
        mt_.update_all();
        if (lg.z_prev != none && dp > wl && dm < wr) {
            const long kept = std::max(0L, lg.z_prev + 1 - static_cast<long>(lg.nf));
            lg.zero_idx = (lg.front_ins ? 1 : 0) + kept;
            mt_.insert_raw(static_cast<std::size_t>(lg.zero_idx), mt_.fresh_quadratic(1.0, 0.0));
            lg.zero_ins = true;
        }
        z_ = none;
        add_cd(lg, dc_.c[i - 1], dc_.d[i - 1]);
    }

    // exact reverse of step(i)
    void rewind(std::size_t i)
    {
        const IterLog& lg = logs_[i];
        const std::size_t m = mt_.size();
        if (lg.split != none) {
            const auto p = static_cast<std::size_t>(lg.split);
            mt_.add(0, p, -(lg.c - lg.d));
            mt_.add(p + 1, m - 1, -(lg.c + lg.d));
            mt_.erase_raw(p + 1);
        } else {
            mt_.add_all(-lg.c);
        }
        if (lg.zero_ins) mt_.erase_raw(static_cast<std::size_t>(lg.zero_idx));
        mt_.inv_update_all();
        if (lg.collapsed) {
            mt_.erase_raw(0);
            for (std::uint32_t k = 0; k < lg.nf; ++k) {
                mt_.insert_raw(0, deleted_.back());
                deleted_.pop_back();
            }
        } else {
            if (lg.back_ins) mt_.erase_raw(mt_.size() - 1);
            if (lg.front_ins) mt_.erase_raw(0);
            for (std::uint32_t k = 0; k < lg.nb; ++k) {
                mt_.insert_raw(mt_.size(), deleted_.back());
                deleted_.pop_back();
            }
            for (std::uint32_t k = 0; k < lg.nf; ++k) {
                mt_.insert_raw(0, deleted_.back());
                deleted_.pop_back();
            }
        }
        z_ = lg.z_prev;
    }

    // argmin_h A(h) + phi(f - h) where phi' = clamp(., e-1, e+1):
    // the root of G(h) = A'(h) - clamp(f - h, e-1, e+1), non-decreasing in h
    double best_prev(double f, double e)
    {
        const double lo = e - 1.0, hi = e + 1.0;
        auto G = [&](const LeafState& s, double h) { return mt_.deriv(s, h) - std::clamp(f - h, lo, hi); };
        const std::size_t m = mt_.size();
        const long z = z_;
        const std::size_t j = mt_.partition_point_adjacent([&](std::size_t q, const LeafState& L, const LeafState& R) {
            const double x = vertex(q, L, R, z);
            return G(R, x) >= 0.0;
        });
        const LeafState P = mt_.raw(j);
        // joins between two quadratic pieces are C^1 and their location is
        // ill-conditioned when curvatures are close, so the piece formula is
        // extrapolated across them instead of clamping
        const double inf = std::numeric_limits<double>::infinity();
        double left = -inf, right = inf;
        bool soft_right = false;
        if (j > 0) {
            const LeafState Lp = mt_.raw(j - 1);
            if (static_cast<long>(j - 1) == z || Lp.k == 0 || P.k == 0) left = vertex(j - 1, Lp, P, z);
        }
        if (j + 1 < m) {
            const LeafState Rp = mt_.raw(j + 1);
            if (static_cast<long>(j) == z || Rp.k == 0 || P.k == 0) right = vertex(j, P, Rp, z);
            else soft_right = true;
            if (!soft_right && G(P, right) < 0.0) return right;
        }
        double h;
        const double h1 = f - hi, h2 = f - lo;
        if (G(P, h1) >= 0.0) {
            h = P.k == 0 ? h1 : hi * mt_.mult(P) - P.h;
        } else if (G(P, h2) <= 0.0) {
            h = P.k == 0 ? h2 : lo * mt_.mult(P) - P.h;
        } else {
            h = P.k == 0 ? f - P.h : (f * mt_.mult(P) - P.h) / (mt_.mult(P) + 1.0);
        }
        return std::clamp(h, left, right);
    }

    const BIRInstance& in_;
    DualCoefficients dc_;
    std::size_t n_;
    BIRPartialMaintainer mt_;
    std::vector<IterLog> logs_;
    std::vector<LeafState> deleted_;
    long z_ = none;
};

} // namespace detail

inline BIRSolution solve_bir(const BIRInstance& in, BIRStats* stats = nullptr)
{
    validate_bir(in);
    check_bir_feasible(in);
    const std::size_t n = in.y.size();
    if (n == 1) {
        BIRSolution s{{std::clamp(in.y[0], 0.0, 1.0)}, 0.0};
        s.objective = bir_objective(s.v, in.y);
        return s;
    }
    if (n == 2) return detail::solve_bir_two(in);
    detail::BirDP dp(in);
    return dp.run(stats);
}

// DP path for any n >= 2; exposed so tests can compare it with the closed forms
inline BIRSolution solve_bir_dp(const BIRInstance& in, BIRStats* stats = nullptr)
{
    validate_bir(in);
    check_bir_feasible(in);
    if (in.y.size() < 2) return solve_bir(in, stats);
    detail::BirDP dp(in);
    return dp.run(stats);
}

inline bool bir_feasible_within(const BIRInstance& in, const std::vector<double>& v, double tol)
{
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < -tol || v[i] > 1.0 + tol) return false;
        if (i + 1 < v.size()) {
            const double g = v[i + 1] - v[i];
            if (g < in.a[i] - tol || g > in.b[i] + tol) return false;
        }
    }
    return true;
}

} // namespace omni

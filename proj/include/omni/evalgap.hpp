#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <vector>

#include "data_io.hpp"
#include "learners.hpp"
#include "links.hpp"
#include "pav.hpp"
#include "rng.hpp"

namespace omni {

struct ComparatorGrid {
    std::vector<Link> links;
    std::vector<std::vector<double>> weights;
};

// mean of (p_i - y_i)(u_i - wx_i)
inline double empirical_omnigap(const std::vector<double>& p, const std::vector<double>& u,
                                const std::vector<double>& wx, const std::vector<double>& y)
{
    const std::size_t n = p.size();
    if (u.size() != n || wx.size() != n || y.size() != n) throw std::invalid_argument("omnigap inputs differ in length");
    if (n == 0) throw std::invalid_argument("omnigap needs at least one point");
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (p[i] - y[i]) * (u[i] - wx[i]);
    return s / static_cast<double>(n);
}

// Per-head predictions on a dataset, heads x points.  A single-index or
// constant predictor is one head; a multi-index model has one per head.
struct HeadPredictions {
    std::vector<std::vector<double>> p;

    std::size_t heads() const { return p.size(); }
    std::size_t n() const { return p.empty() ? 0 : p.front().size(); }
};

inline HeadPredictions predictions(const MultiIndexModel& m, const Dataset& ds)
{
    if (m.heads.empty()) throw std::invalid_argument("model has no heads");
    if (m.heads.front().w.size() != ds.d()) throw std::invalid_argument("model and data dimensions differ");
    HeadPredictions hp;
    for (const auto& h : m.heads) {
        std::vector<double> v(ds.n());
        for (std::size_t i = 0; i < ds.n(); ++i) v[i] = h.link.eval(dot(h.w, ds.x[i]));
        hp.p.push_back(std::move(v));
    }
    return hp;
}

inline HeadPredictions predictions(const StepPredictor& sp, const Dataset& ds)
{
    if (ds.d() != 1) throw std::invalid_argument("step predictors need one-dimensional data");
    HeadPredictions hp;
    hp.p.emplace_back(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) hp.p[0][i] = sp(ds.x[i][0]);
    return hp;
}

inline HeadPredictions constant_predictions(double c, std::size_t n)
{
    return {{std::vector<double>(n, c)}};
}

namespace detail {

struct LinkStats {
    double og_const = 0;       // mean over heads of E[(p - y) s^{-1}(p)]
    std::vector<double> og_x;  // mean over heads of E[(p - y) x]
    double ml_unlinked = 0;    // E[ml_s(k_s(p))]
};

inline LinkStats link_stats(const HeadPredictions& hp, const Link& s, const Dataset& ds)
{
    const std::size_t n = ds.n(), d = ds.d(), T = hp.heads();
    if (hp.n() != n) throw std::invalid_argument("prediction count differs from dataset size");
    LinkStats st;
    st.og_x.assign(d, 0.0);
    std::vector<double> k(n, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double u = s.invert(hp.p[t][i]);
            const double r = hp.p[t][i] - ds.y[i];
            k[i] += u;
            st.og_const += r * u;
            for (std::size_t j = 0; j < d; ++j) st.og_x[j] += r * ds.x[i][j];
        }
    }
    const double scale = 1.0 / (static_cast<double>(T) * static_cast<double>(n));
    st.og_const *= scale;
    for (auto& c : st.og_x) c *= scale;
    for (std::size_t i = 0; i < n; ++i) st.ml_unlinked += s.matching_loss(k[i] / static_cast<double>(T), ds.y[i]);
    st.ml_unlinked /= static_cast<double>(n);
    return st;
}

} // namespace detail

// E[ml_s(w.x)] for every (link, weight) pair, row-major by link.
struct ComparatorTable {
    std::size_t weights = 0;
    std::vector<double> ml;

    double at(std::size_t l, std::size_t w) const { return ml[l * weights + w]; }
};

inline ComparatorTable comparator_losses(const ComparatorGrid& g, const Dataset& ds)
{
    ComparatorTable tb;
    tb.weights = g.weights.size();
    tb.ml.resize(g.links.size() * tb.weights);
    std::vector<double> wx(ds.n());
    for (std::size_t w = 0; w < tb.weights; ++w) {
        if (g.weights[w].size() != ds.d()) throw std::invalid_argument("grid weight and data dimensions differ");
        for (std::size_t i = 0; i < ds.n(); ++i) wx[i] = dot(g.weights[w], ds.x[i]);
        for (std::size_t l = 0; l < g.links.size(); ++l) {
            double s = 0;
            for (std::size_t i = 0; i < ds.n(); ++i) s += g.links[l].matching_loss(wx[i], ds.y[i]);
            tb.ml[l * tb.weights + w] = s / static_cast<double>(ds.n());
        }
    }
    return tb;
}

struct GapRow {
    std::size_t link_id = 0, weight_id = 0;
    double omnigap = 0, pl_gap = 0;
};

struct GapReport {
    double max_omnigap = -std::numeric_limits<double>::infinity();
    std::size_t og_link = 0, og_weight = 0;
    double max_pl_gap = -std::numeric_limits<double>::infinity();
    std::size_t pl_link = 0, pl_weight = 0;
    std::vector<GapRow> rows;
};

// Exhaustive sweep; ties keep the first pair in (link, weight) order.
// pl_gap is E[ml_s(k_s(p))] - E[ml_s(w.x)].
inline GapReport gap_sweep(const HeadPredictions& hp, const ComparatorGrid& g, const Dataset& ds,
                           const ComparatorTable* table = nullptr, bool keep_rows = false)
{
    if (g.links.empty() || g.weights.empty()) throw std::invalid_argument("empty comparator grid");
    ComparatorTable own;
    if (!table) {
        own = comparator_losses(g, ds);
        table = &own;
    }
    GapReport rep;
    for (std::size_t l = 0; l < g.links.size(); ++l) {
        const auto st = detail::link_stats(hp, g.links[l], ds);
        for (std::size_t w = 0; w < g.weights.size(); ++w) {
            const double og = st.og_const - dot(g.weights[w], st.og_x);
            const double pg = st.ml_unlinked - table->at(l, w);
            if (og > rep.max_omnigap) {
                rep.max_omnigap = og;
                rep.og_link = l;
                rep.og_weight = w;
            }
            if (pg > rep.max_pl_gap) {
                rep.max_pl_gap = pg;
                rep.pl_link = l;
                rep.pl_weight = w;
            }
            if (keep_rows) rep.rows.push_back({l, w, og, pg});
        }
    }
    return rep;
}

struct GapMax {
    double value;
    std::size_t link_id, weight_id;
};

inline GapMax max_omnigap(const HeadPredictions& hp, const ComparatorGrid& g, const Dataset& ds)
{
    if (g.links.empty() || g.weights.empty()) throw std::invalid_argument("empty comparator grid");
    GapMax best{-std::numeric_limits<double>::infinity(), 0, 0};
    for (std::size_t l = 0; l < g.links.size(); ++l) {
        const auto st = detail::link_stats(hp, g.links[l], ds);
        for (std::size_t w = 0; w < g.weights.size(); ++w) {
            const double og = st.og_const - dot(g.weights[w], st.og_x);
            if (og > best.value) best = {og, l, w};
        }
    }
    return best;
}

inline double omniprediction_gap(const HeadPredictions& hp, const Link& s, const std::vector<double>& w,
                                 const Dataset& ds)
{
    const auto st = detail::link_stats(hp, s, ds);
    double ml = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) ml += s.matching_loss(dot(w, ds.x[i]), ds.y[i]);
    return st.ml_unlinked - ml / static_cast<double>(ds.n());
}

// Lattice cover: knots every h >= eps/beta on [-LR, LR], values on the
// eps-lattice of [0,1], each knot step rising by at most one level.  When
// the full cover exceeds cap, distinct paths are drawn with a seeded walk.
// Constant 0, constant 1, affine and logistic links are always present.
inline std::vector<Link> build_link_grid(double beta, double LR, double eps, std::size_t cap = 64,
                                         std::uint64_t seed = 0)
{
    if (!(eps > 0 && eps < 1)) throw std::invalid_argument("grid resolution must lie in (0,1)");
    if (!(beta > 0) || !(LR > 0)) throw std::invalid_argument("beta and LR must be positive");
    if (cap < 4) throw std::invalid_argument("grid cap must be at least 4");
    std::vector<Link> out{constant_link(0.0, LR), constant_link(1.0, LR)};
    const double affine_slope = 1.0 / (2.0 * LR);
    if (affine_slope <= beta + 1e-12) out.push_back(Link({-LR, LR}, {0.0, 1.0}, LR, beta));
    if (0.25 <= beta) out.push_back(Link(logistic_link(LR).ts(), logistic_link(LR).vs(), LR, beta));

    std::vector<double> levels;
    for (int k = 0; k * eps < 1.0 - 1e-12; ++k) levels.push_back(k * eps);
    levels.push_back(1.0);
    const int K = std::max(1, static_cast<int>(std::floor(2.0 * LR * beta / eps + 1e-9)));
    const double h = 2.0 * LR / K;
    std::vector<double> t(K + 1);
    for (int j = 0; j <= K; ++j) t[j] = -LR + h * j;
    t.back() = LR;
    const std::size_t Lv = levels.size();
    // a step may rise one level only when that keeps the slope within beta
    std::vector<char> can_rise(Lv, 0);
    for (std::size_t q = 0; q + 1 < Lv; ++q) can_rise[q] = levels[q + 1] - levels[q] <= beta * h + 1e-12;

    std::set<std::vector<std::size_t>> seen;
    auto add_path = [&](const std::vector<std::size_t>& path) {
        if (!seen.insert(path).second) return;
        std::vector<double> v(path.size());
        for (std::size_t j = 0; j < path.size(); ++j) v[j] = levels[path[j]];
        out.emplace_back(t, std::move(v), LR, beta);
    };
    // count paths per starting level with saturation
    std::vector<double> cnt(Lv, 1.0);
    for (int s = 0; s < K; ++s) {
        std::vector<double> nx(Lv);
        for (std::size_t q = 0; q < Lv; ++q) nx[q] = std::min(1e18, cnt[q] + (can_rise[q] ? cnt[q + 1] : 0.0));
        cnt = nx;
    }
    double total = 0;
    for (double c : cnt) total = std::min(1e18, total + c);
    const std::size_t room = cap - out.size();
    if (total <= static_cast<double>(room)) {
        std::vector<std::size_t> path(K + 1);
        auto rec = [&](auto&& self, int j) -> void {
            if (j == K) {
                add_path(path);
                return;
            }
            path[j + 1] = path[j];
            self(self, j + 1);
            if (can_rise[path[j]]) {
                path[j + 1] = path[j] + 1;
                self(self, j + 1);
            }
        };
        for (std::size_t q = 0; q < Lv; ++q) {
            path[0] = q;
            rec(rec, 0);
        }
    } else {
        auto rng = make_rng(seed, Stream::grid);
        std::size_t tries = 0;
        while (out.size() < cap && tries < 100 * cap) {
            ++tries;
            std::vector<std::size_t> path(K + 1);
            path[0] = rng.below(Lv);
            // per-path rise probability spreads the samples over slopes
            const double pr = rng.uniform();
            for (int j = 0; j < K; ++j)
                path[j + 1] = path[j] + (can_rise[path[j]] && rng.bernoulli(pr) ? 1 : 0);
            add_path(path);
        }
    }
    return out;
}

// d = 1: 129 evenly spaced weights on [-R, R]; d = 2: 64 directions x 8
// radii; d > 2: 256 seeded random directions x 8 radii.  The zero weight
// is always first.
inline std::vector<std::vector<double>> build_weight_grid(std::size_t d, double R, std::uint64_t seed = 0,
                                                          std::size_t directions = 0, std::size_t radii = 8)
{
    if (d == 0) throw std::invalid_argument("dimension must be positive");
    std::vector<std::vector<double>> out{std::vector<double>(d, 0.0)};
    if (d == 1) {
        const int k = directions ? static_cast<int>(directions) : 64;
        for (int j = -k; j <= k; ++j)
            if (j != 0) out.push_back({R * j / k});
        return out;
    }
    const std::size_t nd = directions ? directions : (d == 2 ? 64 : 256);
    std::vector<std::vector<double>> dirs;
    if (d == 2) {
        for (std::size_t j = 0; j < nd; ++j) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(nd);
            dirs.push_back({std::cos(a), std::sin(a)});
        }
    } else {
        auto rng = make_rng(seed, Stream::grid, 1);
        for (std::size_t j = 0; j < nd; ++j) dirs.push_back(detail::draw_feature(rng, d, 1.0));
    }
    for (const auto& u : dirs)
        for (std::size_t r = 1; r <= radii; ++r) {
            std::vector<double> w(u);
            for (auto& c : w) c *= R * static_cast<double>(r) / static_cast<double>(radii);
            out.push_back(project_ball(std::move(w), R));
        }
    return out;
}

inline ComparatorGrid build_comparator_grid(std::size_t d, double L, double R, double beta, double eps,
                                            std::size_t link_cap = 64, std::uint64_t seed = 0)
{
    return {build_link_grid(beta, L * R, eps, link_cap, seed), build_weight_grid(d, R, seed)};
}

struct CounterexampleReport {
    double ml_at_wstar = 0;
    double min_pl_over_w = 0;
    double argmin_w = 0;
    double gap = 0;
};

// x uniform on {0.3, 0.5}, E[y|x] = sigmoid(x), w* = 1.  Closed forms:
// ml(t, y) = ln(1 + e^t) - y t - ln 2, pl(v, y) = y ln(1/v) + (1-y) ln(1/(1-v)) - ln 2.
// The w grid keeps w x inside (0, 1) for both support points.
inline CounterexampleReport counterexample_fixture(int grid_points = 10000)
{
    const double xs[2] = {0.3, 0.5};
    const double ln2 = std::log(2.0);
    CounterexampleReport r;
    for (double x : xs) {
        const double py = sigmoid(x);
        r.ml_at_wstar += 0.5 * (std::log1p(std::exp(x)) - py * x - ln2);
    }
    const double wmax = 1.0 / xs[1];
    r.min_pl_over_w = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= grid_points; ++k) {
        const double w = wmax * k / (grid_points + 1);
        double pl = 0;
        for (double x : xs) {
            const double v = w * x, py = sigmoid(x);
            pl += 0.5 * (py * std::log(1.0 / v) + (1.0 - py) * std::log(1.0 / (1.0 - v)) - ln2);
        }
        if (pl < r.min_pl_over_w) {
            r.min_pl_over_w = pl;
            r.argmin_w = w;
        }
    }
    r.gap = r.min_pl_over_w - r.ml_at_wstar;
    return r;
}

} // namespace omni

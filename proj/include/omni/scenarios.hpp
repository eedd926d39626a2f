#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "data_io.hpp"
#include "evalgap.hpp"
#include "learners.hpp"
#include "links.hpp"
#include "pav.hpp"
#include "rng.hpp"

namespace omni {

struct Check {
    std::string name;
    double measured = 0;
    std::string relation; // "<=" or ">="
    double bound = 0;

    bool pass() const { return relation == "<=" ? measured <= bound : measured >= bound; }
};

struct ScenarioReport {
    std::string name;
    std::vector<Check> checks;
    double seconds = 0;

    bool pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
    }
};

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Random strictly increasing link from 0 to 1 on [-lr, lr].
inline Link random_increasing_link(CounterRng& rng, double lr, int knots)
{
    std::vector<double> t{-lr}, v{0.0};
    std::vector<double> ti(knots), vi(knots);
    for (auto& a : ti) a = rng.uniform(-lr, lr);
    for (auto& a : vi) a = rng.uniform();
    std::sort(ti.begin(), ti.end());
    std::sort(vi.begin(), vi.end());
    for (int j = 0; j < knots; ++j) {
        if (ti[j] <= t.back() || vi[j] <= v.back()) continue;
        t.push_back(ti[j]);
        v.push_back(vi[j]);
    }
    t.push_back(lr);
    v.push_back(1.0);
    double b = 0;
    for (std::size_t j = 0; j + 1 < t.size(); ++j) b = std::max(b, (v[j + 1] - v[j]) / (t[j + 1] - t[j]));
    return Link(std::move(t), std::move(v), lr, b);
}

inline ScenarioReport scenario_counterexample()
{
    Stopwatch sw;
    const auto r = counterexample_fixture();
    ScenarioReport rep{"counterexample", {}, 0};
    rep.checks.push_back({"ml_at_wstar", r.ml_at_wstar, "<=", -0.02});
    rep.checks.push_back({"min_pl_over_w", r.min_pl_over_w, ">=", 0.01});
    rep.checks.push_back({"gap", r.gap, ">=", 0.03});
    rep.seconds = sw.seconds();
    return rep;
}

// PAV on noisy 1-D data: calibration of every block and non-positive
// omnigap against 10 steep monotone links x 10 monotone step comparators.
inline ScenarioReport scenario_pav_omnigap(std::uint64_t seed, std::size_t n = 500)
{
    Stopwatch sw;
    const Dataset ds = gen_agnostic(1, n, seed, {"flip10", 0.1, 1.0});
    std::vector<WeightedPoint1D> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({ds.x[i][0], ds.y[i], 1.0});
    const auto p = pav_fit(pts);
    auto rng = make_rng(seed, Stream::test, 60);
    std::vector<double> pv(n);
    for (std::size_t i = 0; i < n; ++i) pv[i] = p(ds.x[i][0]);
    double worst = -1e300;
    for (int a = 0; a < 10; ++a) {
        const Link s = random_increasing_link(rng, 1.0, 3);
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = s.invert(pv[i]);
        for (int b = 0; b < 10; ++b) {
            std::vector<double> cut(4), lev(5);
            for (auto& c : cut) c = rng.uniform(-1, 1);
            for (auto& c : lev) c = rng.uniform(-1, 1);
            std::sort(cut.begin(), cut.end());
            std::sort(lev.begin(), lev.end());
            std::vector<double> cx(n);
            for (std::size_t i = 0; i < n; ++i)
                cx[i] = lev[std::upper_bound(cut.begin(), cut.end(), ds.x[i][0]) - cut.begin()];
            worst = std::max(worst, empirical_omnigap(pv, u, cx, ds.y));
        }
    }
    ScenarioReport rep{"pav-omnigap", {}, 0};
    rep.checks.push_back({"calibration_deviation", pav_calibration_report(p, pts), "<=", 1e-12});
    rep.checks.push_back({"max_omnigap", worst, "<=", 1e-9});
    rep.seconds = sw.seconds();
    return rep;
}

// Generating link for the realizable runs: beta = 1 on [-1, 1].
inline Link realizable_link()
{
    return Link({{-1.0, 0.1}, {-0.3, 0.2}, {0.2, 0.6}, {1.0, 0.9}}, 1.0, 1.0);
}

inline std::vector<double> realizable_weight(std::size_t d)
{
    std::vector<double> w(d);
    for (std::size_t j = 0; j < d; ++j) w[j] = (j % 2 ? -1.0 : 1.0) / std::sqrt(static_cast<double>(d));
    return w;
}

// Expected-label realizable data: the generating SIM has zero squared
// loss, so the excess loss of an iterate is its own empirical loss.
inline ScenarioReport scenario_isotron_realizable(std::uint64_t seed, std::size_t d = 5, std::size_t n = 10000,
                                                  int T = 100)
{
    Stopwatch sw;
    const Dataset ds = gen_realizable(d, n, realizable_link(), realizable_weight(d), seed, LabelMode::expected);
    TrainConfig cfg;
    cfg.T = T;
    cfg.beta = 1.0;
    cfg.R = 1.0;
    cfg.eta = 1.0 / (cfg.beta * ds.L * ds.L);
    const auto tr = isotron_fit(ds, cfg);
    const double best = *std::min_element(tr.sq_loss.begin(), tr.sq_loss.end());
    ScenarioReport rep{"isotron-realizable", {}, 0};
    rep.checks.push_back({"min_excess_sq_loss", best, "<=", 0.011});
    rep.seconds = sw.seconds();
    rep.checks.push_back({"runtime_s", rep.seconds, "<=", 120});
    return rep;
}

// ERM omniprediction on flip10 data in one dimension.
inline ScenarioReport scenario_erm_omni(std::uint64_t seed, std::size_t n = 2000, int T = 100)
{
    Stopwatch sw;
    const Dataset ds = gen_agnostic(1, n, seed, {"flip10", 0.1, 1.0});
    TrainConfig cfg;
    cfg.T = T;
    cfg.beta = 1.0;
    cfg.R = 1.0;
    cfg.eps = 0.1;
    cfg.eta = cfg.R / (ds.L * std::sqrt(static_cast<double>(T)));
    const auto m = ideal_omnitron_fit(ds, cfg);
    const auto grid = build_comparator_grid(1, ds.L, cfg.R, cfg.beta, cfg.eps / 4, 64, seed);
    const auto rep_gap = gap_sweep(predictions(m, ds), grid, ds);
    ScenarioReport rep{"erm-omni", {}, 0};
    rep.checks.push_back({"max_pl_gap", rep_gap.max_pl_gap, "<=", 0.15});
    rep.seconds = sw.seconds();
    rep.checks.push_back({"runtime_s", rep.seconds, "<=", 60});
    return rep;
}

struct TrendPoint {
    std::size_t n = 0;
    std::vector<double> gaps;
    double median = 0;
};

// Omnitron on d = 2 flip10 data.  Each seed draws one oracle pool and one
// stream; a size n uses the first n pool rows and a stream of T = n / 20
// rows, and every size is scored on the same held-out set.
inline std::vector<TrendPoint> omnitron_trend(const std::vector<std::size_t>& sizes, int seeds, std::size_t holdout,
                                              std::size_t d = 2)
{
    std::vector<TrendPoint> out;
    for (auto n : sizes) out.push_back({n, {}, 0});
    if (sizes.empty()) return out;
    const std::size_t nmax = *std::max_element(sizes.begin(), sizes.end());
    TrainConfig cfg;
    cfg.beta = 1.0;
    cfg.R = 1.0;
    cfg.eps = 0.1;
    for (int s = 0; s < seeds; ++s) {
        const std::uint64_t base = 1000 + static_cast<std::uint64_t>(s);
        const Dataset test = gen_agnostic(d, holdout, base * 7 + 1, {"flip10", 0.1, 1.0});
        const Dataset pool = gen_agnostic(d, nmax, base * 7 + 2, {"flip10", 0.1, 1.0});
        const Dataset spool = gen_agnostic(d, std::max<std::size_t>(1, nmax / 20), base * 7 + 3, {"flip10", 0.1, 1.0});
        const ComparatorGrid grid{build_link_grid(cfg.beta, 1.0, cfg.eps / 4, 32, base),
                                  build_weight_grid(d, cfg.R, base, 32, 4)};
        const auto table = comparator_losses(grid, test);
        for (auto& tp : out) {
            cfg.T = static_cast<int>(std::max<std::size_t>(1, tp.n / 20));
            Dataset oracle{{pool.x.begin(), pool.x.begin() + static_cast<std::ptrdiff_t>(tp.n)},
                           {pool.y.begin(), pool.y.begin() + static_cast<std::ptrdiff_t>(tp.n)}, pool.L};
            Dataset stream{{spool.x.begin(), spool.x.begin() + cfg.T}, {spool.y.begin(), spool.y.begin() + cfg.T},
                           spool.L};
            const auto m = omnitron_fit(oracle, stream, cfg);
            tp.gaps.push_back(gap_sweep(predictions(m, test), grid, test, &table).max_pl_gap);
        }
    }
    for (auto& tp : out) {
        auto g = tp.gaps;
        std::sort(g.begin(), g.end());
        tp.median = g.empty() ? 0 : g[g.size() / 2];
    }
    return out;
}

} // namespace omni

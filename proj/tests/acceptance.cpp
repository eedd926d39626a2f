#include <omni/bir.hpp>
#include <omni/bir_reference.hpp>
#include <omni/evalgap.hpp>
#include <omni/learners.hpp>
#include <omni/maintainer.hpp>
#include <omni/pav.hpp>
#include <omni/scenarios.hpp>
#include <omni/segtree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace omni;

namespace {

bool report(const char* id, bool ok, const std::string& detail)
{
    std::printf("%s %s %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    return ok;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

BIRInstance random_bir(CounterRng& rng, std::size_t n)
{
    BIRInstance in;
    for (std::size_t i = 0; i < n; ++i) in.y.push_back(rng.uniform());
    for (std::size_t i = 0; i + 1 < n; ++i) {
        in.a.push_back(0.0);
        in.b.push_back(rng.bernoulli(0.2) ? 1e6 : rng.uniform(0.0, 2.0 / static_cast<double>(n)));
    }
    return in;
}

bool a1()
{
    Stopwatch sw;
    auto rng = make_rng(101, Stream::test);
    double worst_coord = 0, worst_obj = 0;
    for (int k = 0; k < 500; ++k) {
        const auto in = random_bir(rng, 1 + rng.below(60));
        const auto s = solve_bir(in);
        const auto r = solve_bir_reference(in);
        for (std::size_t i = 0; i < s.v.size(); ++i) worst_coord = std::max(worst_coord, std::abs(s.v[i] - r.v[i]));
        worst_obj = std::max(worst_obj, std::abs(s.objective - r.objective));
    }
    const double t = sw.seconds();
    return report("A1", worst_coord <= 1e-6 && worst_obj <= 1e-9 && t < 10,
                  fmt("max_coord_diff=%.3g max_obj_diff=%.3g runtime_s=%.2f", worst_coord, worst_obj, t));
}

bool a2()
{
    const std::size_t sizes[] = {1000, 10000, 100000, 1000000};
    std::vector<double> ratio;
    std::string detail;
    bool feasible = true;
    double big = 0;
    for (std::size_t n : sizes) {
        auto rng = make_rng(202, Stream::test, n);
        const auto in = random_bir(rng, n);
        // repeat small sizes so each measurement spans enough wall time
        const int reps = n <= 10000 ? 20 : (n <= 100000 ? 3 : 1);
        std::vector<double> ts;
        for (int r = 0; r < reps; ++r) {
            Stopwatch sw;
            const auto s = solve_bir(in);
            ts.push_back(sw.seconds());
            if (r == 0) feasible = feasible && bir_feasible_within(in, s.v, 1e-9);
        }
        std::sort(ts.begin(), ts.end());
        const double t = ts[ts.size() / 2];
        const double lg = std::log2(static_cast<double>(n));
        ratio.push_back(t * 1e3 / (static_cast<double>(n) * lg * lg));
        if (n == 1000000) big = t;
        detail += fmt("n=%.0f:%.4gms ", static_cast<double>(n), t * 1e3);
    }
    double worst = 0;
    for (std::size_t i = 0; i + 1 < ratio.size(); ++i)
        worst = std::max(worst, std::max(ratio[i] / ratio[i + 1], ratio[i + 1] / ratio[i]));
    detail += fmt("max_consecutive_ratio=%.3f n1e6_s=%.2f feasible=%.0f", worst, big, feasible ? 1 : 0);
    return report("A2", worst <= 4.0 && big < 30.0 && feasible, detail);
}

// proper loss of a predictor's values on 1-D points
double mean_pl(const Link& s, const std::vector<double>& p, const std::vector<WeightedPoint1D>& pts)
{
    double sum = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) sum += s.proper_loss(p[i], pts[i].y);
    return sum / static_cast<double>(pts.size());
}

bool a3()
{
    auto rng = make_rng(303, Stream::test);
    double worst_bir = 0, worst_cal = 0;
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + rng.below(80);
        BIRInstance in;
        std::vector<WeightedPoint1D> pts;
        for (std::size_t i = 0; i < n; ++i) {
            in.y.push_back(rng.uniform());
            pts.push_back({static_cast<double>(i), in.y.back(), 1.0});
        }
        in.a.assign(n - 1, 0.0);
        in.b.assign(n - 1, 1e6);
        const auto s = solve_bir(in);
        const auto p = pav_fit(pts);
        for (std::size_t i = 0; i < n; ++i) worst_bir = std::max(worst_bir, std::abs(s.v[i] - p(static_cast<double>(i))));
        // weighted points with ties for the calibration check
        std::vector<WeightedPoint1D> wp;
        for (std::size_t i = 0; i < n; ++i)
            wp.push_back({std::floor(rng.uniform(0, 10)), rng.bernoulli(0.5) ? 1.0 : 0.0, rng.uniform(0.1, 2.0)});
        worst_cal = std::max(worst_cal, pav_calibration_report(pav_fit(wp), wp));
    }
    const auto og = scenario_pav_omnigap(303);
    double og_val = 0;
    for (const auto& c : og.checks)
        if (c.name == "max_omnigap") og_val = c.measured;

    // universal optimality over 5 proper losses
    const std::size_t n = 300;
    std::vector<WeightedPoint1D> pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(-1, 1);
        pts.push_back({x, rng.bernoulli(sigmoid(3 * x)) ? 1.0 : 0.0, 1.0});
    }
    const auto p = pav_fit(pts);
    std::vector<double> pv(n);
    for (std::size_t i = 0; i < n; ++i) pv[i] = p(pts[i].x);
    std::vector<Link> losses{affine_link(1.0), logistic_link(1.0)};
    for (int j = 0; j < 3; ++j) losses.push_back(random_increasing_link(rng, 1.0, 4));
    std::vector<double> pav_loss;
    for (const auto& s : losses) pav_loss.push_back(mean_pl(s, pv, pts));
    double worst_margin = 1e300;
    for (int r = 0; r < 1000; ++r) {
        const std::size_t k = rng.below(8);
        std::vector<double> cut(k), val(k + 1);
        for (auto& c : cut) c = rng.uniform(-1, 1);
        for (auto& v : val) v = rng.uniform();
        std::sort(cut.begin(), cut.end());
        std::sort(val.begin(), val.end());
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = val[std::upper_bound(cut.begin(), cut.end(), pts[i].x) - cut.begin()];
        for (std::size_t l = 0; l < losses.size(); ++l)
            worst_margin = std::min(worst_margin, mean_pl(losses[l], q, pts) - pav_loss[l]);
    }
    const bool ok = worst_bir <= 1e-8 && worst_cal <= 1e-12 && og_val <= 1e-9 && worst_margin >= -1e-12;
    return report("A3", ok,
                  fmt("pav_vs_bir=%.3g calibration=%.3g max_omnigap=%.3g min_loss_margin=%.3g", worst_bir, worst_cal,
                      og_val, worst_margin));
}

bool scenario_line(const char* id, const ScenarioReport& r)
{
    std::string d;
    for (const auto& c : r.checks) d += c.name + "=" + fmt("%.6g", c.measured) + c.relation + fmt("%.6g", c.bound) + " ";
    return report(id, r.pass(), d);
}

bool a6()
{
    Stopwatch sw;
    const auto tr = omnitron_trend({500, 2000, 8000}, 5, 10000);
    bool mono = true;
    for (std::size_t i = 0; i + 1 < tr.size(); ++i) mono = mono && tr[i + 1].median <= tr[i].median;
    const double last = tr.back().median;
    return report("A6", mono && last <= 0.2,
                  fmt("median_gap n500=%.5g n2000=%.5g n8000=%.5g", tr[0].median, tr[1].median, tr[2].median) +
                      fmt(" runtime_s=%.1f", sw.seconds()));
}

bool a8()
{
    auto rng = make_rng(808, Stream::test);
    int violations = 0;
    double worst = -1e300;
    for (int k = 0; k < 1000; ++k) {
        const std::size_t d = 1 + rng.below(3), n = 50;
        Dataset ds;
        for (std::size_t i = 0; i < n; ++i) {
            auto x = detail::draw_feature(rng, d, 1.0);
            for (auto& c : x) c *= std::sqrt(rng.uniform());
            ds.x.push_back(x);
            ds.y.push_back(rng.bernoulli(0.3) ? std::round(rng.uniform()) : rng.uniform());
        }
        const Link s = random_increasing_link(rng, 1.0, 1 + static_cast<int>(rng.below(5)));
        const Link h = random_increasing_link(rng, 1.0, 1 + static_cast<int>(rng.below(5)));
        auto w = project_ball(detail::draw_feature(rng, d, rng.uniform()), 1.0);
        auto wh = project_ball(detail::draw_feature(rng, d, rng.uniform()), 1.0);
        MultiIndexModel m{{{h, wh}}, 1.0, 1.0};
        const auto hp = predictions(m, ds);
        std::vector<double> u(n), wx(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = s.invert(hp.p[0][i]);
            wx[i] = dot(w, ds.x[i]);
        }
        const double og = empirical_omnigap(hp.p[0], u, wx, ds.y);
        const double gap = omniprediction_gap(hp, s, w, ds);
        worst = std::max(worst, gap - og);
        if (gap > og + 1e-8) ++violations;
    }
    return report("A8", violations == 0, fmt("violations=%.0f max(gap-omnigap)=%.3g", violations, worst));
}

SemigroupElem rand_elem(CounterRng& rng, bool allow_identity)
{
    if (allow_identity && rng.bernoulli(0.1)) return {};
    return {static_cast<std::int64_t>(1 + rng.below(50)), static_cast<double>(static_cast<int>(rng.below(21)) - 10),
            static_cast<double>(static_cast<int>(rng.below(21)) - 10),
            static_cast<double>(static_cast<int>(rng.below(21)) - 10)};
}

bool a9()
{
    auto rng = make_rng(909, Stream::test);
    // semigroup laws on small integers are exact
    int law_fail = 0;
    for (int k = 0; k < 100000; ++k) {
        const auto a = rand_elem(rng, true), b = rand_elem(rng, true), c = rand_elem(rng, true);
        if (!(compose(compose(a, b), c) == compose(a, compose(b, c)))) ++law_fail;
        if (!(compose(a, b) == compose(b, a))) ++law_fail;
        if (!(compose(SemigroupElem{}, a) == a) || !(compose(a, SemigroupElem{}) == a)) ++law_fail;
        LeafState lf{static_cast<std::int64_t>(rng.below(3)), static_cast<double>(rng.below(9))};
        if (!(apply_elem(compose(a, b), lf) == apply_elem(a, apply_elem(b, lf)))) ++law_fail;
    }
    // segment tree of elements vs an eager array
    int seg_fail = 0;
    for (int seq = 0; seq < 10000; ++seq) {
        SegmentTree tree;
        std::vector<SemigroupElem> naive;
        const int ops = 30;
        for (int o = 0; o < ops; ++o) {
            const auto kind = rng.below(4);
            if (kind == 0 || naive.empty()) {
                const std::size_t j = rng.below(naive.size() + 1);
                const auto e = rand_elem(rng, false);
                tree.insert(j, e);
                naive.insert(naive.begin() + static_cast<std::ptrdiff_t>(j), e);
            } else if (kind == 1) {
                const std::size_t j = rng.below(naive.size());
                if (!(tree.erase(j) == naive[j])) ++seg_fail;
                naive.erase(naive.begin() + static_cast<std::ptrdiff_t>(j));
            } else if (kind == 2) {
                std::size_t l = rng.below(naive.size()), r = rng.below(naive.size());
                if (l > r) std::swap(l, r);
                const auto g = rand_elem(rng, true);
                tree.apply_range(l, r, g);
                for (std::size_t j = l; j <= r; ++j) naive[j] = compose(g, naive[j]);
            } else {
                const std::size_t j = rng.below(naive.size());
                if (!(tree.access(j) == naive[j])) ++seg_fail;
            }
        }
        const auto all = tree.to_vector();
        if (all != naive || !tree.check_invariants()) ++seg_fail;
    }
    // maintainer vs eager coefficient store
    double worst = 0;
    int trip_fail = 0, height_fail = 0;
    for (int seq = 0; seq < 10000; ++seq) {
        BIRPartialMaintainer mt;
        NaiveMaintainer nv;
        const int ops = 40;
        for (int o = 0; o < ops; ++o) {
            const auto kind = rng.below(6);
            const std::size_t s = nv.size();
            if (kind == 0 || s == 0) {
                if (s >= 256) continue;
                const std::size_t j = rng.below(s + 1);
                const double alpha = rng.bernoulli(0.3) ? 0.0 : 1.0 / (2.0 * static_cast<double>(1 + rng.below(6)));
                const double beta = rng.uniform(-1, 1);
                mt.insert_piece(j, alpha, beta);
                nv.insert_piece(j, alpha, beta);
            } else if (kind == 1) {
                const std::size_t j = rng.below(s);
                mt.delete_piece(j);
                nv.delete_piece(j);
            } else if (kind == 2) {
                std::size_t l = rng.below(s), r = rng.below(s);
                if (l > r) std::swap(l, r);
                const double dl = rng.uniform(-1, 1);
                mt.add(l, r, dl);
                nv.add(l, r, dl);
            } else if (kind == 3) {
                mt.update_all();
                nv.update_all();
            } else if (kind == 4) {
                const auto before = mt.dump();
                mt.update_all();
                mt.inv_update_all();
                const auto after = mt.dump();
                for (std::size_t j = 0; j < before.size(); ++j)
                    if (before[j].alpha != after[j].alpha || before[j].beta != after[j].beta) ++trip_fail;
            } else {
                bool ok = true;
                for (const auto& c : nv.dump()) ok = ok && (c.alpha == 0.0 || c.alpha <= 0.25 + 1e-15);
                if (ok) {
                    mt.inv_update_all();
                    nv.inv_update_all();
                }
            }
            if (nv.size() > 1) {
                const double bound = 2.0 * std::log2(static_cast<double>(nv.size())) + 2.0;
                if (mt.height() > bound) ++height_fail;
            }
        }
        const auto a = mt.dump();
        const auto& b = nv.dump();
        if (a.size() != b.size()) {
            worst = 1e300;
            continue;
        }
        for (std::size_t j = 0; j < a.size(); ++j)
            worst = std::max({worst, std::abs(a[j].alpha - b[j].alpha), std::abs(a[j].beta - b[j].beta)});
    }
    const bool ok = law_fail == 0 && seg_fail == 0 && worst <= 1e-8 && trip_fail == 0 && height_fail == 0;
    return report("A9", ok,
                  fmt("law_failures=%.0f segtree_mismatches=%.0f maintainer_max_diff=%.3g roundtrip_failures=%.0f",
                      law_fail, seg_fail, worst, trip_fail) +
                      fmt(" height_violations=%.0f", height_fail));
}

bool a10()
{
    auto rng = make_rng(1010, Stream::test);
    const double beta = 1.0;
    const auto grid = build_link_grid(beta, 1.0, 0.1, 1000, 1010);
    double worst = 1e300;
    std::size_t min_used = 1u << 30;
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = 5 + rng.below(40);
        std::vector<double> z(n);
        for (auto& v : z) v = rng.uniform(-1, 1);
        std::sort(z.begin(), z.end());
        BIRInstance in;
        for (std::size_t i = 0; i < n; ++i) in.y.push_back(rng.bernoulli(0.5) ? rng.uniform() : std::round(rng.uniform()));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            in.a.push_back(0.0);
            in.b.push_back(beta * (z[i + 1] - z[i]));
        }
        const auto s = solve_bir(in);
        // first 50 grid links that meet the slope condition on this solution
        std::vector<Link> chosen;
        for (const auto& l : grid) {
            std::size_t used = 0;
            check_bir_optimality_certificate(s, in.y, z, beta, {l}, &used);
            if (used) chosen.push_back(l);
            if (chosen.size() == 50) break;
        }
        std::size_t used = 0;
        worst = std::min(worst, check_bir_optimality_certificate(s, in.y, z, beta, chosen, &used));
        min_used = std::min(min_used, used);
    }
    return report("A10", worst >= -1e-6 && min_used == 50,
                  fmt("min_certificate=%.3g min_links_used=%.0f", worst, static_cast<double>(min_used)));
}

} // namespace

int main()
{
    int fails = 0;
    fails += !a1();
    fails += !a2();
    fails += !a3();
    fails += !scenario_line("A4", scenario_erm_omni(404));
    fails += !scenario_line("A5", scenario_isotron_realizable(505));
    fails += !a6();
    fails += !scenario_line("A7", scenario_counterexample());
    fails += !a8();
    fails += !a9();
    fails += !a10();
    std::printf("%d of 10 criteria failed\n", fails);
    return fails ? 1 : 0;
}

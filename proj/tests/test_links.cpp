#include <catch_amalgamated.hpp>

#include <omni/links.hpp>
#include <omni/rng.hpp>

#include <cmath>

using namespace omni;
using Catch::Approx;

namespace {

Link random_link(CounterRng& rng, double lr, bool strict)
{
    const int k = 2 + static_cast<int>(rng.below(6));
    std::vector<double> t{-lr}, v;
    for (int j = 1; j < k; ++j) t.push_back(-lr + 2 * lr * j / k + rng.uniform(-0.2, 0.2) * lr / k);
    t.push_back(lr);
    double cur = rng.uniform(0, 0.3);
    v.push_back(cur);
    double maxs = 0;
    for (std::size_t j = 1; j < t.size(); ++j) {
        const double step = strict ? rng.uniform(0.01, 0.7 / k) : (rng.bernoulli(0.3) ? 0.0 : rng.uniform(0, 0.7 / k));
        cur = std::min(1.0, cur + step);
        v.push_back(cur);
        maxs = std::max(maxs, (v[j] - v[j - 1]) / (t[j] - t[j - 1]));
    }
    return Link(t, v, lr, std::max(maxs, 1e-3));
}

} // namespace

TEST_CASE("evaluation interpolates and clamps")
{
    CHECK(eval_link(affine_link(1.0), 0.0) == Approx(0.5));
    Link l({{-1, 0}, {0, 0}, {1, 1}}, 1.0, 1.0);
    CHECK(eval_link(l, 0.5) == Approx(0.5));
    CHECK(eval_link(l, 7.0) == 1.0);
    CHECK(eval_link(l, -7.0) == 0.0);
    CHECK(eval_link(logistic_link(1.0), 0.0) == Approx(0.5).margin(1e-12));
    CHECK_THROWS_AS(Link(std::vector<double>{}, std::vector<double>{}, 1.0, 1.0), MalformedLink);
}

TEST_CASE("invalid links are rejected")
{
    CHECK_THROWS_AS(Link({{-1, 0.5}, {1, 0.2}}, 1.0, 1.0), MalformedLink);
    CHECK_THROWS_AS(Link({{-1, 0}, {1, 1}}, 1.0, 0.1), MalformedLink);
    CHECK_THROWS_AS(Link({{-0.5, 0}, {1, 1}}, 1.0, 1.0), MalformedLink);
    CHECK_THROWS_AS(Link({{-1, 0}, {1, 1.5}}, 1.0, 1.0), MalformedLink);
    CHECK_THROWS_AS(Link({{-1, 0}}, 1.0, 1.0), MalformedLink);
}

TEST_CASE("generalized inverse")
{
    CHECK(invert_link(affine_link(1.0), 0.5) == Approx(0.0).margin(1e-15));
    Link flat({{-1, 0.3}, {0, 0.3}, {1, 0.8}}, 1.0, 1.0);
    CHECK(invert_link(flat, 0.3) == Approx(-0.5));
    CHECK(invert_link(flat, 1.5) == 1.0);
    CHECK(invert_link(flat, -0.5) == -1.0);
    CounterRng rng(4, 4);
    for (int k = 0; k < 200; ++k) {
        const Link s = random_link(rng, 1.0, true);
        const double t = rng.uniform(-1, 1);
        CHECK(s.invert(s.eval(t)) == Approx(t).margin(1e-9));
    }
}

TEST_CASE("matching loss values")
{
    CHECK(matching_loss(affine_link(1.0), 1.0, 1.0) == Approx(-0.25));
    CHECK(matching_loss(logistic_link(1.0), 0.0, 0.3) == 0.0);
    const double closed = std::log1p(std::exp(0.3)) - 0.3 - std::log(2.0);
    CHECK(matching_loss(logistic_link(1.0), 0.3, 1.0) == Approx(closed).margin(1e-5));
    CHECK(closed == Approx(-0.1387).margin(1e-4));
    // trapezoid quadrature of the defining integral
    const Link s = logistic_link(1.0);
    double q = 0;
    const int m = 20000;
    for (int j = 0; j < m; ++j) {
        const double a = 0.3 * j / m, b = 0.3 * (j + 1) / m;
        q += 0.5 * (b - a) * ((s.eval(a) - 1) + (s.eval(b) - 1));
    }
    CHECK(matching_loss(s, 0.3, 1.0) == Approx(q).margin(1e-9));
}

TEST_CASE("proper loss values")
{
    CHECK(proper_loss(logistic_link(1.0), 0.5, 1.0) == Approx(0.0).margin(1e-12));
    // v = 0.25 lies outside sigma([-1, 1]) for LR = 1; use a wide domain
    const Link wide = logistic_link(3.0, 4096);
    CHECK(proper_loss(wide, 0.25, 1.0) == Approx(std::log(2.0)).margin(1e-4));
    CounterRng rng(5, 5);
    for (int k = 0; k < 100; ++k) {
        const Link s = random_link(rng, 1.0, true);
        const double t = rng.uniform(-1, 1), y = rng.uniform();
        CHECK(proper_loss(s, s.eval(t), y) == Approx(matching_loss(s, t, y)).margin(1e-9));
    }
}

TEST_CASE("derivative and convexity")
{
    CounterRng rng(6, 6);
    const double h = 1e-5;
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const Link s = random_link(rng, 1.0, false);
        const double t = rng.uniform(-0.99, 0.99), y = rng.uniform();
        const auto& ts = s.ts();
        const auto j = std::upper_bound(ts.begin(), ts.end(), t - h) - ts.begin();
        if (j < static_cast<long>(ts.size()) && ts[j] < t + h) continue;
        const double fd = (s.matching_loss(t + h, y) - s.matching_loss(t - h, y)) / (2 * h);
        CHECK(fd == Approx(s.eval(t) - y).margin(1e-4));
        ++checked;

        double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
        if (a > c) std::swap(a, c);
        const double lam = rng.uniform();
        (void)b;
        const double mid = lam * a + (1 - lam) * c;
        CHECK(s.matching_loss(mid, y) <= lam * s.matching_loss(a, y) + (1 - lam) * s.matching_loss(c, y) + 1e-9);
    }
    CHECK(checked > 900);
}

TEST_CASE("properness of the induced loss")
{
    CounterRng rng(7, 7);
    std::vector<Link> links{affine_link(1.0)};
    for (int k = 0; k < 3; ++k) {
        // strictly increasing with full range [0, 1]
        std::vector<double> t{-1, rng.uniform(-0.5, 0.5), 1}, v{0, rng.uniform(0.2, 0.8), 1};
        links.emplace_back(t, v, 1.0, 10.0);
    }
    for (const auto& s : links)
        for (double ps : {0.0, 0.25, 0.5, 1.0}) {
            double best = 1e300, arg = -1;
            for (int j = 0; j <= 1000; ++j) {
                const double v = j / 1000.0;
                const double e = ps * s.proper_loss(v, 1) + (1 - ps) * s.proper_loss(v, 0);
                if (e < best - 1e-15) {
                    best = e;
                    arg = v;
                }
            }
            const double at = ps * s.proper_loss(ps, 1) + (1 - ps) * s.proper_loss(ps, 0);
            CHECK(at <= best + 1e-12);
            CHECK(arg == Approx(ps).margin(1e-3));
        }
}

TEST_CASE("smoothing transform")
{
    const Link a = affine_link(1.0);
    const Link s0 = smooth_link(a, 0.0);
    CHECK(s0.ts() == a.ts());
    CHECK(s0.vs() == a.vs());
    const Link s1 = smooth_link(a, 0.3);
    for (double t : {-1.0, -0.3, 0.0, 0.7, 1.0}) CHECK(s1.eval(t) == Approx(a.eval(t)).margin(1e-15));
    const Link c = smooth_link(constant_link(0.0), 0.1);
    CHECK(c.eval(-1) == Approx(0.0).margin(1e-15));
    CHECK(c.eval(1) == Approx(0.2));
    CHECK(c.eval(0) == Approx(0.1));
    CHECK_THROWS(smooth_link(a, 0.5));
    CHECK_THROWS(smooth_link(a, -0.1));

    CounterRng rng(8, 8);
    for (int k = 0; k < 200; ++k) {
        const Link s = random_link(rng, 1.0, false);
        const double alpha = rng.uniform(0.001, 0.49);
        const Link sm = smooth_link(s, alpha);
        const double hi = alpha + (1 - 2 * alpha) * s.beta();
        CHECK(sm.min_slope() >= alpha - 1e-9);
        CHECK(sm.max_slope() <= hi + 1e-9);
        CHECK(sm.low() >= 0.0);
        CHECK(sm.high() <= 1.0);
        // per-point matching loss perturbation bound 3 alpha L^2 R^2 / 2 with LR = 1
        for (int j = 0; j < 5; ++j) {
            const double t = rng.uniform(-1, 1), y = rng.uniform();
            CHECK(std::abs(sm.matching_loss(t, y) - s.matching_loss(t, y)) <= 1.5 * alpha + 1e-12);
        }
    }
}

TEST_CASE("json round trip")
{
    const Link s = logistic_link(2.0, 64);
    const Link r = link_from_json(link_to_json(s));
    CHECK(r.ts() == s.ts());
    CHECK(r.vs() == s.vs());
    CHECK(r.lr() == s.lr());
    CHECK(r.beta() == s.beta());
    CHECK_THROWS_AS(link_from_json(nlohmann::json::parse(R"({"lr":1,"beta":1})")), MalformedLink);
    CHECK_THROWS_AS(link_from_json(nlohmann::json::parse(R"({"lr":1,"beta":1,"breakpoints":[[0]]})")), MalformedLink);
}

TEST_CASE("built-in constructors")
{
    const Link r = clipped_relu_link(2.0);
    CHECK(r.eval(-1) == 0.0);
    CHECK(r.eval(0.5) == Approx(0.5));
    CHECK(r.eval(1.5) == 1.0);
    const Link lg = logistic_link(1.0);
    CHECK(lg.size() == 512);
    for (int j = 0; j <= 100; ++j) {
        const double t = -1 + 0.02 * j;
        CHECK(lg.eval(t) == Approx(sigmoid(t)).margin(1e-5));
    }
    CHECK(constant_link(0.4).strictly_increasing() == false);
    CHECK(affine_link().strictly_increasing());
}

#include <catch_amalgamated.hpp>

#include <omni/maintainer.hpp>
#include <omni/rng.hpp>

#include <cmath>

using namespace omni;
using Catch::Approx;

TEST_CASE("update rule on single pieces")
{
    BIRPartialMaintainer mt;
    mt.insert_piece(0, 0.5, 1.0);
    mt.insert_piece(1, 0.0, 0.7);
    mt.update_all();
    CHECK(mt.query(0).alpha == Approx(0.25));
    CHECK(mt.query(0).beta == Approx(0.5));
    CHECK(mt.query(1).alpha == 0.0);
    CHECK(mt.query(1).beta == 0.7);
    mt.inv_update_all();
    CHECK(mt.query(0).alpha == 0.5);
    CHECK(mt.query(0).beta == 1.0);
}

TEST_CASE("insert validates alpha")
{
    BIRPartialMaintainer mt;
    CHECK_THROWS_AS(mt.insert_piece(0, 0.3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mt.insert_piece(0, -0.5, 0.0), std::invalid_argument);
    CHECK_NOTHROW(mt.insert_piece(0, 1.0 / 14.0, 0.0));
    CHECK(mt.query(0).alpha == Approx(1.0 / 14.0));
    CHECK_THROWS_AS(mt.query(3), std::out_of_range);
}

TEST_CASE("add shifts beta on a range")
{
    BIRPartialMaintainer mt;
    for (int j = 0; j < 5; ++j) mt.insert_piece(static_cast<std::size_t>(j), j % 2 ? 0.0 : 0.5, 0.0);
    mt.add(1, 3, 2.0);
    CHECK(mt.query(0).beta == 0.0);
    CHECK(mt.query(1).beta == Approx(2.0));
    CHECK(mt.query(2).beta == Approx(2.0));
    CHECK(mt.query(4).beta == 0.0);
    mt.update_all();
    CHECK(mt.query(2).beta == Approx(1.0));
    CHECK(mt.query(3).beta == Approx(2.0));
    const auto j = mt.debug_json();
    CHECK(j.size() == 5);
    CHECK(j[2]["alpha"].get<double>() == Approx(0.25));
}

TEST_CASE("random operations match the eager store")
{
    CounterRng rng(41, 41);
    double worst = 0;
    for (int seq = 0; seq < 10000; ++seq) {
        BIRPartialMaintainer mt;
        NaiveMaintainer nv;
        for (int o = 0; o < 30; ++o) {
            const auto kind = rng.below(5);
            const std::size_t s = nv.size();
            if (kind == 0 || s == 0) {
                if (s >= 256) continue;
                const std::size_t j = rng.below(s + 1);
                const double a = rng.bernoulli(0.3) ? 0.0 : 1.0 / (2.0 * static_cast<double>(1 + rng.below(5)));
                const double b = rng.uniform(-2, 2);
                mt.insert_piece(j, a, b);
                nv.insert_piece(j, a, b);
            } else if (kind == 1) {
                const std::size_t j = rng.below(s);
                const auto x = mt.delete_piece(j);
                const auto y = nv.delete_piece(j);
                worst = std::max({worst, std::abs(x.alpha - y.alpha), std::abs(x.beta - y.beta)});
            } else if (kind == 2) {
                std::size_t l = rng.below(s), r = rng.below(s);
                if (l > r) std::swap(l, r);
                const double d = rng.uniform(-1, 1);
                mt.add(l, r, d);
                nv.add(l, r, d);
            } else if (kind == 3) {
                mt.update_all();
                nv.update_all();
            } else {
                const std::size_t j = rng.below(s);
                const auto x = mt.query(j), y = nv.query(j);
                worst = std::max({worst, std::abs(x.alpha - y.alpha), std::abs(x.beta - y.beta)});
            }
        }
        const auto a = mt.dump();
        REQUIRE(a.size() == nv.size());
        for (std::size_t j = 0; j < a.size(); ++j)
            worst = std::max({worst, std::abs(a[j].alpha - nv.dump()[j].alpha), std::abs(a[j].beta - nv.dump()[j].beta)});
        CHECK(mt.check_invariants());
        if (a.size() > 1) CHECK(mt.height() <= 2 * std::log2(static_cast<double>(a.size())) + 2);
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("update and inverse update round trip exactly")
{
    CounterRng rng(42, 42);
    BIRPartialMaintainer mt;
    for (int j = 0; j < 100; ++j) {
        mt.insert_piece(static_cast<std::size_t>(j), rng.bernoulli(0.5) ? 0.0 : 1.0 / (2.0 * (1 + rng.below(9))),
                        rng.uniform(-3, 3));
        if (j % 7 == 0) mt.add(0, static_cast<std::size_t>(j), rng.uniform(-1, 1));
    }
    const auto before = mt.dump();
    for (int k = 0; k < 17; ++k) mt.update_all();
    for (int k = 0; k < 17; ++k) mt.inv_update_all();
    const auto after = mt.dump();
    for (std::size_t j = 0; j < before.size(); ++j) {
        CHECK(before[j].alpha == after[j].alpha);
        CHECK(before[j].beta == after[j].beta);
    }
}

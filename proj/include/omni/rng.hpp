#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace omni {

inline constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based generator: the i-th draw of (seed, stream) is a pure
// function of (seed, stream, i), so results do not depend on platform
// or on how many draws other streams consumed.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed) ^ mix64(stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL))
    {}

    std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ctr_++); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n)
    {
        // Lemire-style rejection keeps the draw unbiased
        const std::uint64_t lim = (~std::uint64_t{0} / n) * n;
        std::uint64_t x;
        do x = next_u64(); while (x >= lim);
        return x % n;
    }

    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t counter() const { return ctr_; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

// Named streams so independent consumers never share draws.
enum class Stream : std::uint64_t {
    features = 1,
    labels = 2,
    flips = 3,
    order = 4,
    predict = 5,
    grid = 6,
    bench = 7,
    test = 8,
};

inline CounterRng make_rng(std::uint64_t seed, Stream s, std::uint64_t sub = 0)
{
    return CounterRng(seed, (static_cast<std::uint64_t>(s) << 32) ^ sub);
}

template <class T>
void shuffle(std::vector<T>& v, CounterRng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace omni

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace omni {

struct WeightedPoint1D {
    double x;
    double y;
    double weight = 1.0;
};

// p(x) = values[#{thresholds <= x}]
struct StepPredictor {
    bool increasing = true;
    std::vector<double> thresholds;
    std::vector<double> values;

    double operator()(double x) const
    {
        const auto k = std::upper_bound(thresholds.begin(), thresholds.end(), x) - thresholds.begin();
        return values[static_cast<std::size_t>(k)];
    }
};

struct NoMergeObserver {
    void operator()(double, double, double) const {}
};

namespace detail {

struct Block {
    double sw = 0, swy = 0;
    double xmin = 0;
    double mean() const { return swy / sw; }
};

inline std::vector<WeightedPoint1D> merge_ties(std::vector<WeightedPoint1D> pts, bool ascending)
{
    for (const auto& p : pts) {
        if (!(p.weight > 0)) throw std::invalid_argument("point weight must be positive");
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("non-finite point");
    }
    std::stable_sort(pts.begin(), pts.end(), [ascending](const auto& a, const auto& b) {
        return ascending ? a.x < b.x : a.x > b.x;
    });
    std::vector<WeightedPoint1D> out;
    for (const auto& p : pts) {
        if (!out.empty() && out.back().x == p.x) {
            auto& q = out.back();
            const double w = q.weight + p.weight;
            q.y = (q.y * q.weight + p.y * p.weight) / w;
            q.weight = w;
        } else {
            out.push_back(p);
        }
    }
    return out;
}

// Stack-based pool adjacent violators over points already in scan order.
// obs(left_mean, merged_mean, right_mean) fires on every merge.
template <class Obs>
std::vector<Block> pav_blocks(const std::vector<WeightedPoint1D>& pts, Obs&& obs)
{
    std::vector<Block> st;
    st.reserve(pts.size());
    for (const auto& p : pts) {
        st.push_back({p.weight, p.weight * p.y, p.x});
        while (st.size() > 1 && st[st.size() - 2].mean() >= st.back().mean()) {
            Block r = st.back();
            st.pop_back();
            Block& l = st.back();
            const double lm = l.mean(), rm = r.mean();
            l.sw += r.sw;
            l.swy += r.swy;
            l.xmin = std::min(l.xmin, r.xmin);
            obs(lm, l.mean(), rm);
        }
    }
    return st;
}

} // namespace detail

template <class Obs = NoMergeObserver>
StepPredictor pav_fit(const std::vector<WeightedPoint1D>& points, Obs&& obs = {})
{
    if (points.empty()) throw std::invalid_argument("pav_fit needs at least one point");
    const auto pts = detail::merge_ties(points, true);
    const auto blocks = detail::pav_blocks(pts, obs);
    StepPredictor sp;
    sp.increasing = true;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (k > 0) sp.thresholds.push_back(blocks[k].xmin);
        sp.values.push_back(std::clamp(blocks[k].mean(), 0.0, 1.0));
    }
    return sp;
}

inline StepPredictor pav_fit_decreasing(const std::vector<WeightedPoint1D>& points)
{
    if (points.empty()) throw std::invalid_argument("pav_fit needs at least one point");
    const auto pts = detail::merge_ties(points, false);
    auto blocks = detail::pav_blocks(pts, NoMergeObserver{});
    // blocks run from large x to small x; flip to the ascending axis
    std::reverse(blocks.begin(), blocks.end());
    StepPredictor sp;
    sp.increasing = false;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (k > 0) sp.thresholds.push_back(blocks[k].xmin);
        sp.values.push_back(std::clamp(blocks[k].mean(), 0.0, 1.0));
    }
    return sp;
}

inline std::pair<StepPredictor, StepPredictor> pav_double_fit(const std::vector<WeightedPoint1D>& points)
{
    return {pav_fit(points), pav_fit_decreasing(points)};
}

// max over distinct predicted values v of |E[y | p(x) = v] - v|
inline double pav_calibration_report(const StepPredictor& p, const std::vector<WeightedPoint1D>& points)
{
    std::vector<std::pair<double, WeightedPoint1D>> pv;
    pv.reserve(points.size());
    for (const auto& q : points) pv.push_back({p(q.x), q});
    std::sort(pv.begin(), pv.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double worst = 0;
    for (std::size_t i = 0; i < pv.size();) {
        std::size_t j = i;
        double sw = 0, swy = 0;
        while (j < pv.size() && pv[j].first == pv[i].first) {
            sw += pv[j].second.weight;
            swy += pv[j].second.weight * pv[j].second.y;
            ++j;
        }
        worst = std::max(worst, std::abs(swy / sw - pv[i].first));
        i = j;
    }
    return worst;
}

inline nlohmann::json step_to_json(const StepPredictor& p)
{
    return {{"direction", p.increasing ? "inc" : "dec"}, {"thresholds", p.thresholds}, {"values", p.values}};
}

inline StepPredictor step_from_json(const nlohmann::json& j)
{
    StepPredictor p;
    const std::string dir = j.at("direction").get<std::string>();
    if (dir != "inc" && dir != "dec") throw std::invalid_argument("direction must be inc or dec");
    p.increasing = dir == "inc";
    p.thresholds = j.at("thresholds").get<std::vector<double>>();
    p.values = j.at("values").get<std::vector<double>>();
    if (p.values.size() != p.thresholds.size() + 1)
        throw std::invalid_argument("step predictor needs one more value than thresholds");
    if (!std::is_sorted(p.thresholds.begin(), p.thresholds.end()))
        throw std::invalid_argument("thresholds must be sorted");
    for (std::size_t k = 0; k < p.values.size(); ++k) {
        if (p.values[k] < 0 || p.values[k] > 1) throw std::invalid_argument("step value outside [0,1]");
        if (k > 0 && (p.increasing ? p.values[k] < p.values[k - 1] : p.values[k] > p.values[k - 1]))
            throw std::invalid_argument("step values not monotone in the stated direction");
    }
    return p;
}

} // namespace omni

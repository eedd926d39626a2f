#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace omni {

struct MalformedLink : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Monotone piecewise-linear map from [-LR, LR] into [0, 1].
class PiecewiseLinearLink {
public:
    PiecewiseLinearLink() = default;

    PiecewiseLinearLink(std::vector<double> t, std::vector<double> v, double lr, double beta)
        : t_(std::move(t)), v_(std::move(v)), lr_(lr), beta_(beta)
    {
        validate();
        build_integral();
    }

    PiecewiseLinearLink(const std::vector<std::pair<double, double>>& pts, double lr, double beta)
        : lr_(lr), beta_(beta)
    {
        t_.reserve(pts.size());
        v_.reserve(pts.size());
        for (auto [t, v] : pts) {
            t_.push_back(t);
            v_.push_back(v);
        }
        validate();
        build_integral();
    }

    double lr() const { return lr_; }
    double beta() const { return beta_; }
    const std::vector<double>& ts() const { return t_; }
    const std::vector<double>& vs() const { return v_; }
    std::size_t size() const { return t_.size(); }
    double low() const { return v_.front(); }
    double high() const { return v_.back(); }

    double operator()(double t) const { return eval(t); }

    double eval(double t) const
    {
        require_nonempty();
        if (t <= t_.front()) return v_.front();
        if (t >= t_.back()) return v_.back();
        const std::size_t j = segment_of(t);
        const double dt = t_[j + 1] - t_[j];
        const double w = (t - t_[j]) / dt;
        return v_[j] + w * (v_[j + 1] - v_[j]);
    }

    // Generalized inverse: midpoint of the preimage interval, clamped to
    // the domain for values outside the range.
    double invert(double v) const
    {
        require_nonempty();
        if (!(v >= v_.front())) return -lr_;
        if (!(v <= v_.back())) return lr_;
        const std::size_t n = v_.size();
        double tlo, thi;
        const std::size_t jl = static_cast<std::size_t>(std::lower_bound(v_.begin(), v_.end(), v) - v_.begin());
        if (jl == 0) tlo = t_.front();
        else tlo = interp_t(jl - 1, v);
        const std::size_t ju = static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), v) - v_.begin());
        if (ju == n) thi = t_.back();
        else thi = interp_t(ju - 1, v);
        if (jl == ju) return tlo; // strictly inside a rising segment
        return 0.5 * (tlo + thi);
    }

    // Closed-form  int_0^t (sigma(tau) - y) dtau, with sigma held constant
    // outside the domain.
    double matching_loss(double t, double y) const
    {
        require_nonempty();
        return antideriv(t) - s0_ - y * t;
    }

    double proper_loss(double v, double y) const { return matching_loss(invert(v), y); }

    bool strictly_increasing() const
    {
        for (std::size_t j = 0; j + 1 < v_.size(); ++j)
            if (!(v_[j + 1] > v_[j])) return false;
        return true;
    }

    double max_slope() const
    {
        double s = 0;
        for (std::size_t j = 0; j + 1 < t_.size(); ++j)
            s = std::max(s, (v_[j + 1] - v_[j]) / (t_[j + 1] - t_[j]));
        return s;
    }

    double min_slope() const
    {
        double s = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 1 < t_.size(); ++j)
            s = std::min(s, (v_[j + 1] - v_[j]) / (t_[j + 1] - t_[j]));
        return s;
    }

    bool operator==(const PiecewiseLinearLink& o) const
    {
        return t_ == o.t_ && v_ == o.v_ && lr_ == o.lr_ && beta_ == o.beta_;
    }

private:
    void require_nonempty() const
    {
        if (t_.empty()) throw MalformedLink("link has no breakpoints");
    }

    void validate() const
    {
        if (t_.empty()) throw MalformedLink("link has no breakpoints");
        if (t_.size() != v_.size()) throw MalformedLink("breakpoint arrays differ in length");
        if (t_.size() < 2) throw MalformedLink("link needs at least two breakpoints");
        if (!(lr_ > 0) || !std::isfinite(lr_)) throw MalformedLink("domain radius must be positive");
        if (!(beta_ > 0) || !std::isfinite(beta_)) throw MalformedLink("lipschitz bound must be positive");
        const double tol = 1e-12 * std::max(1.0, lr_);
        if (std::abs(t_.front() + lr_) > tol || std::abs(t_.back() - lr_) > tol)
            throw MalformedLink("breakpoints must span [-LR, LR]");
        for (std::size_t j = 0; j < t_.size(); ++j) {
            if (!std::isfinite(t_[j]) || !std::isfinite(v_[j])) throw MalformedLink("non-finite breakpoint");
            if (v_[j] < 0.0 || v_[j] > 1.0) throw MalformedLink("link value outside [0,1]");
            if (j + 1 < t_.size()) {
                const double dt = t_[j + 1] - t_[j];
                const double dv = v_[j + 1] - v_[j];
                if (!(dt > 0)) throw MalformedLink("breakpoints not strictly increasing");
                if (dv < 0) throw MalformedLink("link not monotone");
                if (dv > (beta_ + 1e-9) * dt + 4 * std::numeric_limits<double>::epsilon())
                    throw MalformedLink("segment slope exceeds lipschitz bound");
            }
        }
    }

    std::size_t segment_of(double t) const
    {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t j = static_cast<std::size_t>(it - t_.begin());
        j = j == 0 ? 0 : j - 1;
        return std::min(j, t_.size() - 2);
    }

    double interp_t(std::size_t j, double v) const
    {
        const double dv = v_[j + 1] - v_[j];
        double t = t_[j] + (v - v_[j]) / dv * (t_[j + 1] - t_[j]);
        return std::clamp(t, t_[j], t_[j + 1]);
    }

    void build_integral()
    {
        cum_.assign(t_.size(), 0.0);
        for (std::size_t j = 0; j + 1 < t_.size(); ++j)
            cum_[j + 1] = cum_[j] + 0.5 * (v_[j] + v_[j + 1]) * (t_[j + 1] - t_[j]);
        s0_ = antideriv(0.0);
    }

    // int_{-LR}^t sigma
    double antideriv(double t) const
    {
        if (t <= t_.front()) return (t - t_.front()) * v_.front();
        if (t >= t_.back()) return cum_.back() + (t - t_.back()) * v_.back();
        const std::size_t j = segment_of(t);
        const double dt = t_[j + 1] - t_[j];
        const double x = t - t_[j];
        const double slope = (v_[j + 1] - v_[j]) / dt;
        return cum_[j] + x * v_[j] + 0.5 * slope * x * x;
    }

    std::vector<double> t_, v_, cum_;
    double lr_ = 1.0, beta_ = 1.0, s0_ = 0.0;
};

using Link = PiecewiseLinearLink;

inline double eval_link(const Link& l, double t) { return l.eval(t); }
inline double invert_link(const Link& l, double v) { return l.invert(v); }
inline double matching_loss(const Link& l, double t, double y) { return l.matching_loss(t, y); }
inline double proper_loss(const Link& l, double v, double y) { return l.proper_loss(v, y); }

// sigma'(t) = (1 - 2 alpha LR) sigma(t) + alpha (t + LR)
inline Link smooth_link(const Link& l, double alpha)
{
    const double lr = l.lr();
    if (!(alpha >= 0.0) || !(alpha < 1.0 / (2.0 * lr)))
        throw std::invalid_argument("smoothing alpha outside [0, 1/(2LR))");
    if (alpha == 0.0) return l;
    const double shrink = 1.0 - 2.0 * alpha * lr;
    std::vector<double> v(l.size());
    for (std::size_t j = 0; j < l.size(); ++j)
        v[j] = std::clamp(shrink * l.vs()[j] + alpha * (l.ts()[j] + lr), 0.0, 1.0);
    return Link(l.ts(), std::move(v), lr, alpha + shrink * l.beta());
}

inline Link affine_link(double lr = 1.0)
{
    return Link({-lr, lr}, {0.0, 1.0}, lr, 1.0 / (2.0 * lr));
}

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline Link logistic_link(double lr = 1.0, int breakpoints = 512)
{
    if (breakpoints < 2) throw std::invalid_argument("need at least two breakpoints");
    std::vector<double> t(breakpoints), v(breakpoints);
    for (int j = 0; j < breakpoints; ++j) {
        t[j] = -lr + 2.0 * lr * j / (breakpoints - 1);
        v[j] = sigmoid(t[j]);
    }
    t.front() = -lr;
    t.back() = lr;
    return Link(std::move(t), std::move(v), lr, 0.25);
}

// clamp(t, 0, 1) restricted to the domain
inline Link clipped_relu_link(double lr = 1.0)
{
    std::vector<double> t{-lr}, v{0.0};
    if (lr > 0.0) {
        t.push_back(0.0);
        v.push_back(0.0);
    }
    if (lr > 1.0) {
        t.push_back(1.0);
        v.push_back(1.0);
    }
    t.push_back(lr);
    v.push_back(std::min(lr, 1.0));
    return Link(std::move(t), std::move(v), lr, 1.0);
}

inline Link constant_link(double c, double lr = 1.0)
{
    return Link({-lr, lr}, {c, c}, lr, 1.0);
}

inline nlohmann::json link_to_json(const Link& l)
{
    nlohmann::json bp = nlohmann::json::array();
    for (std::size_t j = 0; j < l.size(); ++j) bp.push_back({l.ts()[j], l.vs()[j]});
    return {{"lr", l.lr()}, {"beta", l.beta()}, {"breakpoints", bp}};
}

inline Link link_from_json(const nlohmann::json& j)
{
    try {
        std::vector<double> t, v;
        for (const auto& p : j.at("breakpoints")) {
            if (!p.is_array() || p.size() != 2) throw MalformedLink("breakpoint must be a [t, v] pair");
            t.push_back(p[0].get<double>());
            v.push_back(p[1].get<double>());
        }
        return Link(std::move(t), std::move(v), j.at("lr").get<double>(), j.at("beta").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw MalformedLink(std::string("bad link json: ") + e.what());
    }
}

} // namespace omni

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bir.hpp"
#include "data_io.hpp"
#include "json.hpp"
#include "links.hpp"
#include "rng.hpp"

namespace omni {

struct StreamExhausted : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Head {
    Link link;
    std::vector<double> w;
};

struct MultiIndexModel {
    std::vector<Head> heads;
    double R = 1.0;
    double L = 1.0;

    std::size_t size() const { return heads.size(); }
};

// eta <= 0 selects the algorithm's default step size; alpha_smooth unset
// selects eps / (6 L^2 R^2) for the omnitron variants.
struct TrainConfig {
    int T = 100;
    double eta = 0.0;
    double beta = 1.0;
    double R = 1.0;
    std::optional<double> alpha_smooth;
    double eps = 0.1;
    std::uint64_t seed = 0;
};

inline void validate_config(const TrainConfig& c)
{
    if (c.T < 0) throw std::invalid_argument("T must be non-negative");
    if (!(c.beta > 0) || !(c.R > 0)) throw std::invalid_argument("beta and R must be positive");
    if (!std::isfinite(c.eta)) throw std::invalid_argument("eta must be finite");
    if (c.alpha_smooth && !(*c.alpha_smooth >= 0)) throw std::invalid_argument("alpha_smooth must be >= 0");
}

inline std::vector<double> project_ball(std::vector<double> w, double R)
{
    const double nr = norm2(w);
    if (nr > R)
        for (auto& c : w) c *= R / nr;
    return w;
}

inline std::vector<double> empirical_gradient(const Link& link, const std::vector<double>& w, const Dataset& ds)
{
    if (ds.n() == 0) throw std::invalid_argument("empty dataset");
    std::vector<double> g(ds.d(), 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double r = link.eval(dot(w, ds.x[i])) - ds.y[i];
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += r * ds.x[i][j];
    }
    for (auto& c : g) c /= static_cast<double>(ds.n());
    return g;
}

// Fit v = argmin sum (v_i - y_i)^2 over beta-Lipschitz monotone maps of the
// sorted scores z_i = w.x_i, and return the interpolating link (flat past
// the extreme scores).  Equal scores become zero-width gaps.
inline Link approx_bir_oracle(const std::vector<double>& w, const Dataset& ds, double beta, double R)
{
    if (ds.n() == 0) throw std::invalid_argument("empty dataset");
    if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
    const double lr = ds.L * R;
    const std::size_t n = ds.n();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::clamp(dot(w, ds.x[i]), -lr, lr);
    std::vector<std::size_t> ord(n);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
    BIRInstance in;
    in.y.resize(n);
    in.a.assign(n - 1, 0.0);
    in.b.resize(n - 1);
    for (std::size_t k = 0; k < n; ++k) in.y[k] = ds.y[ord[k]];
    for (std::size_t k = 0; k + 1 < n; ++k) in.b[k] = beta * (z[ord[k + 1]] - z[ord[k]]);
    const auto sol = solve_bir(in);

    std::vector<double> t, v;
    for (std::size_t k = 0; k < n; ++k) {
        const double zk = z[ord[k]];
        if (!t.empty() && t.back() == zk) continue;
        double vk = std::clamp(sol.v[k], 0.0, 1.0);
        if (!t.empty()) vk = std::clamp(vk, v.back(), v.back() + beta * (zk - t.back()));
        t.push_back(zk);
        v.push_back(vk);
    }
    if (t.front() > -lr) {
        t.insert(t.begin(), -lr);
        v.insert(v.begin(), v.front());
    }
    if (t.back() < lr) {
        t.push_back(lr);
        v.push_back(v.back());
    }
    return Link(std::move(t), std::move(v), lr, beta);
}

inline double empirical_sq_loss(const Link& link, const std::vector<double>& w, const Dataset& ds)
{
    double s = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double r = link.eval(dot(w, ds.x[i])) - ds.y[i];
        s += r * r;
    }
    return s / static_cast<double>(ds.n());
}

struct IsotronTrace {
    std::vector<Link> links;
    std::vector<std::vector<double>> w;
    std::vector<double> sq_loss;
    std::vector<double> grad_norm;
};

namespace detail {

inline IsotronTrace isotron_run(const Dataset& ds, const TrainConfig& cfg, double eta)
{
    validate_config(cfg);
    if (ds.n() == 0) throw std::invalid_argument("empty dataset");
    IsotronTrace tr;
    std::vector<double> w(ds.d(), 0.0);
    for (int t = 0; t <= cfg.T; ++t) {
        Link s = approx_bir_oracle(w, ds, cfg.beta, cfg.R);
        const auto g = empirical_gradient(s, w, ds);
        tr.sq_loss.push_back(empirical_sq_loss(s, w, ds));
        tr.grad_norm.push_back(norm2(g));
        tr.links.push_back(std::move(s));
        tr.w.push_back(w);
        if (t == cfg.T) break;
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= eta * g[j];
        w = project_ball(std::move(w), cfg.R);
    }
    return tr;
}

inline double smoothing_alpha(const TrainConfig& cfg, double L)
{
    const double a = cfg.alpha_smooth ? *cfg.alpha_smooth : cfg.eps / (6.0 * L * L * cfg.R * cfg.R);
    return std::min(a, 0.5 / (L * cfg.R) * (1.0 - 1e-12));
}

} // namespace detail

// w_0 = 0; T oracle-plus-gradient steps; the trace holds T+1 iterates.
inline IsotronTrace isotron_fit(const Dataset& ds, const TrainConfig& cfg)
{
    const double eta = cfg.eta > 0 ? cfg.eta : 1.0 / (cfg.beta * ds.L * ds.L);
    return detail::isotron_run(ds, cfg, eta);
}

inline MultiIndexModel ideal_omnitron_fit(const Dataset& ds, const TrainConfig& cfg)
{
    if (cfg.T < 1) throw std::invalid_argument("omnitron needs T >= 1");
    const double eta = cfg.eta > 0 ? cfg.eta : cfg.R / (ds.L * std::sqrt(static_cast<double>(cfg.T)));
    const auto tr = detail::isotron_run(ds, cfg, eta);
    const double alpha = detail::smoothing_alpha(cfg, ds.L);
    MultiIndexModel m;
    m.R = cfg.R;
    m.L = ds.L;
    for (int t = 0; t < cfg.T; ++t) m.heads.push_back({smooth_link(tr.links[t], alpha), tr.w[t]});
    return m;
}

// One oracle call on oracle_ds and one stochastic step on stream row t per
// iteration.  trace, when given, receives per-step loss on the oracle set
// and the stochastic gradient norm.
inline MultiIndexModel omnitron_fit(const Dataset& oracle_ds, const Dataset& stream, const TrainConfig& cfg,
                                    IsotronTrace* trace = nullptr)
{
    validate_config(cfg);
    if (cfg.T < 1) throw std::invalid_argument("omnitron needs T >= 1");
    if (stream.n() < static_cast<std::size_t>(cfg.T))
        throw StreamExhausted("gradient stream has " + std::to_string(stream.n()) + " samples, T = " +
                              std::to_string(cfg.T));
    if (stream.d() != oracle_ds.d()) throw std::invalid_argument("oracle set and stream differ in dimension");
    const double L = std::max(oracle_ds.L, stream.L);
    const double eta = cfg.eta > 0 ? cfg.eta : std::sqrt(2.0 / (5.0 * cfg.T)) * cfg.R / L;
    const double alpha = detail::smoothing_alpha(cfg, oracle_ds.L);
    MultiIndexModel m;
    m.R = cfg.R;
    m.L = oracle_ds.L;
    std::vector<double> w(oracle_ds.d(), 0.0);
    for (int t = 0; t < cfg.T; ++t) {
        const Link s = approx_bir_oracle(w, oracle_ds, cfg.beta, cfg.R);
        const auto& x = stream.x[static_cast<std::size_t>(t)];
        const double r = s.eval(dot(w, x)) - stream.y[static_cast<std::size_t>(t)];
        if (trace) {
            trace->sq_loss.push_back(empirical_sq_loss(s, w, oracle_ds));
            trace->grad_norm.push_back(std::abs(r) * norm2(x));
            trace->w.push_back(w);
        }
        m.heads.push_back({smooth_link(s, alpha), w});
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= eta * r * x[j];
        w = project_ball(std::move(w), cfg.R);
    }
    return m;
}

inline double predict_unlinked(const MultiIndexModel& m, const std::vector<double>& x, const Link& test_link)
{
    if (m.heads.empty()) throw std::invalid_argument("model has no heads");
    double s = 0;
    for (const auto& h : m.heads) s += test_link.invert(h.link.eval(dot(h.w, x)));
    return s / static_cast<double>(m.heads.size());
}

inline double predict_randomized_proper(const MultiIndexModel& m, const std::vector<double>& x, CounterRng& rng)
{
    if (m.heads.empty()) throw std::invalid_argument("model has no heads");
    const auto& h = m.heads[rng.below(m.heads.size())];
    return h.link.eval(dot(h.w, x));
}

inline double mean_predictor(const Dataset& ds)
{
    if (ds.n() == 0) throw std::invalid_argument("empty dataset");
    return std::accumulate(ds.y.begin(), ds.y.end(), 0.0) / static_cast<double>(ds.n());
}

inline nlohmann::json model_to_json(const MultiIndexModel& m)
{
    nlohmann::json heads = nlohmann::json::array();
    for (const auto& h : m.heads) heads.push_back({{"link", link_to_json(h.link)}, {"w", h.w}});
    return {{"L", m.L}, {"R", m.R}, {"heads", heads}};
}

inline MultiIndexModel model_from_json(const nlohmann::json& j)
{
    MultiIndexModel m;
    try {
        m.L = j.at("L").get<double>();
        m.R = j.at("R").get<double>();
        for (const auto& h : j.at("heads")) {
            Head hd{link_from_json(h.at("link")), h.at("w").get<std::vector<double>>()};
            if (norm2(hd.w) > m.R + 1e-9) throw std::invalid_argument("head weight exceeds R");
            if (std::abs(hd.link.lr() - m.L * m.R) > 1e-9 * std::max(1.0, m.L * m.R))
                throw std::invalid_argument("head link domain is not [-LR, LR]");
            m.heads.push_back(std::move(hd));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad model json: ") + e.what());
    }
    if (!m.heads.empty())
        for (const auto& h : m.heads)
            if (h.w.size() != m.heads.front().w.size()) throw std::invalid_argument("heads differ in dimension");
    return m;
}

} // namespace omni

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "links.hpp"
#include "rng.hpp"

namespace omni {

struct Dataset {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    double L = 1.0;

    std::size_t n() const { return y.size(); }
    std::size_t d() const { return x.empty() ? 0 : x.front().size(); }
};

struct DataFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LabelMode { expected, bernoulli };

inline double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline void validate_dataset(const Dataset& ds)
{
    if (ds.x.size() != ds.y.size()) throw std::invalid_argument("feature and label counts differ");
    const std::size_t d = ds.d();
    for (std::size_t i = 0; i < ds.n(); ++i) {
        if (ds.x[i].size() != d) throw std::invalid_argument("ragged feature matrix");
        if (!(ds.y[i] >= 0.0 && ds.y[i] <= 1.0)) throw std::invalid_argument("label outside [0,1]");
        if (norm2(ds.x[i]) > ds.L + 1e-9) throw std::invalid_argument("feature row outside the L ball");
    }
}

namespace detail {

// d >= 2: uniform on the sphere of radius L.  d = 1: uniform on [-L, L],
// since the 1-sphere is only the two points +-L.
inline std::vector<double> draw_feature(CounterRng& rng, std::size_t d, double L)
{
    std::vector<double> x(d);
    if (d == 1) {
        x[0] = rng.uniform(-L, L);
        return x;
    }
    double s = 0;
    do {
        s = 0;
        for (auto& c : x) {
            c = rng.normal();
            s += c * c;
        }
    } while (s == 0.0);
    const double k = L / std::sqrt(s);
    for (auto& c : x) c *= k;
    const double nr = norm2(x);
    if (nr > L)
        for (auto& c : x) c *= L / nr;
    return x;
}

} // namespace detail

inline Dataset gen_realizable(std::size_t d, std::size_t n, const Link& link, const std::vector<double>& w_star,
                              std::uint64_t seed, LabelMode mode, double L = 1.0)
{
    if (d == 0) throw std::invalid_argument("dimension must be positive");
    if (w_star.size() != d) throw std::invalid_argument("w_star has wrong dimension");
    if (!(L > 0)) throw std::invalid_argument("L must be positive");
    if (norm2(w_star) * L > link.lr() + 1e-9) throw std::invalid_argument("w_star norm exceeds link domain / L");
    Dataset ds;
    ds.L = L;
    ds.x.reserve(n);
    ds.y.reserve(n);
    auto fr = make_rng(seed, Stream::features);
    auto lr = make_rng(seed, Stream::labels);
    for (std::size_t i = 0; i < n; ++i) {
        ds.x.push_back(detail::draw_feature(fr, d, L));
        const double p = link.eval(dot(w_star, ds.x.back()));
        ds.y.push_back(mode == LabelMode::expected ? p : (lr.bernoulli(p) ? 1.0 : 0.0));
    }
    return ds;
}

struct AgnosticSpec {
    std::string preset = "flip10";
    double flip_rate = 0.1;
    double L = 1.0;
};

// Generating SIM behind the agnostic presets: sigma(4t) on [-L, L] along e1.
inline Link agnostic_base_link(double L)
{
    std::vector<double> t(257), v(257);
    for (int j = 0; j <= 256; ++j) {
        t[j] = -L + 2.0 * L * j / 256;
        v[j] = sigmoid(4.0 * t[j]);
    }
    t.front() = -L;
    t.back() = L;
    return Link(std::move(t), std::move(v), L, 1.0);
}

inline std::vector<double> agnostic_base_weight(std::size_t d)
{
    std::vector<double> w(d, 0.0);
    w[0] = 1.0;
    return w;
}

// flip10:   Bernoulli labels of the base SIM, each flipped with prob flip_rate
// xor2d:    P(y=1) = 0.9 when x1 x2 > 0 else 0.1 (needs d >= 2)
// heavytail: Cauchy-radius features squashed into B(L), labels
//            clamp(sigma(4 x1) + 0.1 Cauchy, 0, 1)
inline Dataset gen_agnostic(std::size_t d, std::size_t n, std::uint64_t seed, const AgnosticSpec& spec)
{
    if (d == 0) throw std::invalid_argument("dimension must be positive");
    const double L = spec.L;
    if (spec.preset == "flip10") {
        if (!(spec.flip_rate >= 0 && spec.flip_rate <= 1)) throw std::invalid_argument("flip rate outside [0,1]");
        Dataset ds =
            gen_realizable(d, n, agnostic_base_link(L), agnostic_base_weight(d), seed, LabelMode::bernoulli, L);
        auto fl = make_rng(seed, Stream::flips);
        for (auto& y : ds.y)
            if (fl.bernoulli(spec.flip_rate)) y = 1.0 - y;
        return ds;
    }
    Dataset ds;
    ds.L = L;
    auto fr = make_rng(seed, Stream::features);
    auto lr = make_rng(seed, Stream::labels);
    if (spec.preset == "xor2d") {
        if (d < 2) throw std::invalid_argument("xor2d needs d >= 2");
        for (std::size_t i = 0; i < n; ++i) {
            ds.x.push_back(detail::draw_feature(fr, d, L));
            const double p = ds.x.back()[0] * ds.x.back()[1] > 0 ? 0.9 : 0.1;
            ds.y.push_back(lr.bernoulli(p) ? 1.0 : 0.0);
        }
        return ds;
    }
    if (spec.preset == "heavytail") {
        const Link base = agnostic_base_link(L);
        for (std::size_t i = 0; i < n; ++i) {
            auto x = detail::draw_feature(fr, d, L);
            const double c = std::abs(std::tan(std::numbers::pi * (fr.uniform() - 0.5)));
            const double r = c / (1.0 + c);
            if (d > 1)
                for (auto& v : x) v *= r;
            ds.x.push_back(std::move(x));
            const double noise = 0.1 * std::tan(std::numbers::pi * (lr.uniform() - 0.5));
            ds.y.push_back(std::clamp(base.eval(ds.x.back()[0]) + noise, 0.0, 1.0));
        }
        return ds;
    }
    throw std::invalid_argument("unknown agnostic preset: " + spec.preset);
}

namespace detail {

inline double parse_double(const std::string& s, std::size_t line)
{
    double v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || b == e)
        throw DataFormatError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline void save_dataset_csv(const Dataset& ds, const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.precision(17);
    for (std::size_t j = 0; j < ds.d(); ++j) f << 'x' << (j + 1) << ',';
    f << "y\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (double v : ds.x[i]) f << v << ',';
        f << ds.y[i] << '\n';
    }
    if (!f) throw IoError("write failed for " + path);
}

// L <= 0 means: take the largest row norm.
inline Dataset load_dataset_csv(const std::string& path, double L = 0.0)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataFormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto head = detail::split_csv(line);
    if (head.size() < 2 || head.back() != "y")
        throw DataFormatError(path + ": line 1: header must be x1,...,xd,y");
    for (std::size_t j = 0; j + 1 < head.size(); ++j)
        if (head[j] != "x" + std::to_string(j + 1))
            throw DataFormatError(path + ": line 1: unexpected column '" + head[j] + "'");
    const std::size_t d = head.size() - 1;
    Dataset ds;
    std::size_t ln = 1;
    double maxnorm = 0;
    while (std::getline(f, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != d + 1)
            throw DataFormatError(path + ": line " + std::to_string(ln) + ": expected " + std::to_string(d + 1) +
                                  " fields, got " + std::to_string(cells.size()));
        std::vector<double> x(d);
        try {
            for (std::size_t j = 0; j < d; ++j) x[j] = detail::parse_double(cells[j], ln);
            const double y = detail::parse_double(cells[d], ln);
            if (!(y >= 0 && y <= 1))
                throw DataFormatError("line " + std::to_string(ln) + ": label outside [0,1]");
            ds.y.push_back(y);
        } catch (const DataFormatError& e) {
            throw DataFormatError(path + ": " + e.what());
        }
        maxnorm = std::max(maxnorm, norm2(x));
        ds.x.push_back(std::move(x));
    }
    if (ds.n() == 0) throw DataFormatError(path + ": no data rows");
    ds.L = L > 0 ? L : maxnorm;
    if (maxnorm > ds.L + 1e-9) throw DataFormatError(path + ": a feature row exceeds the declared radius");
    return ds;
}

inline nlohmann::json dataset_sidecar(const Dataset& ds, std::uint64_t seed, const std::string& generator)
{
    return {{"L", ds.L}, {"d", ds.d()}, {"n", ds.n()}, {"seed", seed}, {"generator", generator}};
}

inline void write_json(const nlohmann::json& j, const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed for " + path);
}

inline nlohmann::json read_json(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DataFormatError(path + ": " + e.what());
    }
}

} // namespace omni

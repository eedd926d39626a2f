#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "segtree.hpp"

namespace omni {

struct PieceCoeffs {
    double alpha = 0; // quadratic coefficient
    double beta = 0;  // linear coefficient
};

// Stores pieces of a convex piecewise-quadratic derivative 2 alpha f + beta.
// A quadratic piece is kept as (k, h) with m = tau + 1 - k, alpha = 1/(2m)
// and beta = h/m, so the global map (alpha, beta) -> (alpha, beta)/(2 alpha+1)
// is a single clock tick.  The clock starts at a large offset so that k
// never reaches 0 (reserved for linear pieces) and add-elements never carry
// the identity stamp.
class BIRPartialMaintainer {
public:
    static constexpr std::int64_t clock_base = std::int64_t{1} << 31;

    std::size_t size() const { return tree_.size(); }
    std::int64_t tau() const { return tau_; }
    int height() const { return tree_.height(); }
    void reserve(std::size_t n) { tree_.reserve(n); }

    PieceCoeffs query(std::size_t j) const { return coeffs(tree_.access(j)); }

    PieceCoeffs coeffs(const LeafState& s) const
    {
        if (s.k == 0) return {0.0, static_cast<double>(s.h)};
        const double m = static_cast<double>(tau_ + 1 - s.k);
        return {1.0 / (2.0 * m), static_cast<double>(s.h / m)};
    }

    // multiplier m of a quadratic leaf at the current clock
    double mult(const LeafState& s) const { return static_cast<double>(tau_ + 1 - s.k); }

    // derivative value 2 alpha f + beta of a leaf at f
    double deriv(const LeafState& s, double f) const
    {
        if (s.k == 0) return s.h;
        return (f + s.h) / mult(s);
    }

    void add(std::size_t l, std::size_t r, double delta)
    {
        if (l > r) return;
        tree_.apply_range(l, r, SemigroupElem{tau_, delta, 0.0, delta});
    }

    void add_all(double delta)
    {
        if (tree_.empty()) return;
        tree_.apply_all(SemigroupElem{tau_, delta, 0.0, delta});
    }

    void insert_piece(std::size_t j, double alpha, double beta) { tree_.insert(j, encode(alpha, beta)); }

    PieceCoeffs delete_piece(std::size_t j) { return coeffs(tree_.erase(j)); }

    void update_all() { ++tau_; }

    void inv_update_all() { --tau_; }

    // raw access used by the solver
    LeafState raw(std::size_t j) const { return tree_.access(j); }
    void insert_raw(std::size_t j, const LeafState& s) { tree_.insert(j, s); }
    LeafState erase_raw(std::size_t j) { return tree_.erase(j); }
    LeafState fresh_quadratic(double m, double h) const
    {
        return {tau_ + 1 - static_cast<std::int64_t>(m), h};
    }

    template <class Pred>
    std::size_t partition_point_adjacent(Pred&& pred)
    {
        return tree_.partition_point_adjacent(pred);
    }

    std::vector<PieceCoeffs> dump() const
    {
        std::vector<PieceCoeffs> out;
        for (const auto& s : tree_.to_vector()) out.push_back(coeffs(s));
        return out;
    }

    nlohmann::json debug_json() const
    {
        nlohmann::json arr = nlohmann::json::array();
        const auto d = dump();
        for (std::size_t j = 0; j < d.size(); ++j)
            arr.push_back({{"index", j}, {"alpha", d[j].alpha}, {"beta", d[j].beta}});
        return arr;
    }

    bool check_invariants() const { return tree_.check_invariants(); }

private:
    LeafState encode(double alpha, double beta) const
    {
        if (alpha == 0.0) return {0, beta};
        if (!(alpha > 0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be 0 or 1/(2m)");
        const double mr = 1.0 / (2.0 * alpha);
        const double m = std::round(mr);
        if (m < 1 || std::abs(alpha - 1.0 / (2.0 * m)) > 1e-9 * alpha)
            throw std::invalid_argument("alpha must be 0 or 1/(2m)");
        if (m > static_cast<double>(tau_)) throw std::invalid_argument("alpha too small for the current clock");
        return {tau_ + 1 - static_cast<std::int64_t>(m), beta * m};
    }

    LazyAvlTree<LeafAction> tree_;
    std::int64_t tau_ = clock_base;
};

// Eager reference store used as a test oracle.
class NaiveMaintainer {
public:
    std::size_t size() const { return p_.size(); }
    PieceCoeffs query(std::size_t j) const { return p_.at(j); }
    void add(std::size_t l, std::size_t r, double delta)
    {
        for (std::size_t j = l; j <= r && j < p_.size(); ++j) p_[j].beta += delta;
    }
    void insert_piece(std::size_t j, double alpha, double beta)
    {
        if (j > p_.size()) throw std::out_of_range("index");
        p_.insert(p_.begin() + static_cast<std::ptrdiff_t>(j), PieceCoeffs{alpha, beta});
    }
    PieceCoeffs delete_piece(std::size_t j)
    {
        if (j >= p_.size()) throw std::out_of_range("index");
        auto c = p_[j];
        p_.erase(p_.begin() + static_cast<std::ptrdiff_t>(j));
        return c;
    }
    void update_all()
    {
        for (auto& c : p_) {
            const double s = 2.0 * c.alpha + 1.0;
            c = {c.alpha / s, c.beta / s};
        }
    }
    void inv_update_all()
    {
        for (auto& c : p_) {
            const double s = 1.0 - 2.0 * c.alpha;
            c = {c.alpha / s, c.beta / s};
        }
    }
    const std::vector<PieceCoeffs>& dump() const { return p_; }

private:
    std::vector<PieceCoeffs> p_;
};

} // namespace omni

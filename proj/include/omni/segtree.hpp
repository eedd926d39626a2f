#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace omni {

// Sequence container over an AVL tree with subtree sizes and lazily
// propagated tags.  Action provides
//   value_type, tag_type
//   static tag_type identity()
//   static bool is_identity(const tag_type&)
//   static tag_type compose(const tag_type& newer, const tag_type& older)
//   static value_type apply(const tag_type&, const value_type&)
// Each node holds one element; lazy tags pend for the children only.
template <class Action>
class LazyAvlTree {
public:
    using V = typename Action::value_type;
    using G = typename Action::tag_type;

    std::size_t size() const { return root_ < 0 ? 0 : static_cast<std::size_t>(nodes_[root_].size); }
    bool empty() const { return root_ < 0; }
    int height() const { return root_ < 0 ? 0 : nodes_[root_].height; }

    void clear()
    {
        nodes_.clear();
        free_.clear();
        root_ = -1;
    }

    void reserve(std::size_t n) { nodes_.reserve(n); }

    V access(std::size_t j) const
    {
        check_index(j, size());
        // read-only descent: tags on the path are composed into the result
        int x = root_;
        G acc = Action::identity();
        for (;;) {
            const Node& nd = nodes_[x];
            const std::size_t ls = sz(nd.left);
            if (j < ls) {
                acc = Action::compose(acc, nd.lazy);
                x = nd.left;
            } else if (j == ls) {
                return Action::apply(acc, nd.value);
            } else {
                acc = Action::compose(acc, nd.lazy);
                j -= ls + 1;
                x = nd.right;
            }
        }
    }

    void insert(std::size_t j, const V& v)
    {
        check_index(j, size() + 1);
        root_ = insert_rec(root_, j, v);
    }

    V erase(std::size_t j)
    {
        check_index(j, size());
        V out{};
        root_ = erase_rec(root_, j, out);
        return out;
    }

    // apply g to positions l..r inclusive
    void apply_range(std::size_t l, std::size_t r, const G& g)
    {
        if (l > r) return;
        check_index(r, size());
        apply_rec(root_, 0, size() - 1, l, r, g);
    }

    void apply_all(const G& g)
    {
        if (root_ >= 0) tag(root_, g);
    }

    // Smallest q in [0, size-2] with pred(q, elem[q], elem[q+1]) true, or
    // size-1 if none.  pred must be monotone in q.
    template <class Pred>
    std::size_t partition_point_adjacent(Pred&& pred)
    {
        const std::size_t n = size();
        if (n < 2) return n == 0 ? 0 : n - 1;
        std::size_t res = n - 1;
        int x = root_;
        std::size_t off = 0;
        while (x >= 0) {
            push(x);
            const Node& nd = nodes_[x];
            const std::size_t i = off + sz(nd.left);
            if (nd.left >= 0 && pred(i - 1, nodes_[nd.left].hi, nd.value)) {
                res = i - 1;
                x = nd.left;
                continue;
            }
            if (nd.right >= 0 && pred(i, nd.value, nodes_[nd.right].lo)) {
                res = i;
                break;
            }
            off = i + 1;
            x = nd.right;
        }
        return res;
    }

    std::vector<V> to_vector() const
    {
        std::vector<V> out;
        out.reserve(size());
        collect(root_, Action::identity(), out);
        return out;
    }

    // structural self-check used by tests
    bool check_invariants() const { return root_ < 0 || check_rec(root_) >= 0; }

private:
    struct Node {
        V value, lo, hi;
        G lazy;
        int left = -1, right = -1;
        int size = 1, height = 1;
    };

    static void check_index(std::size_t j, std::size_t lim)
    {
        if (j >= lim) throw std::out_of_range("sequence index out of bounds");
    }

    std::size_t sz(int x) const { return x < 0 ? 0 : static_cast<std::size_t>(nodes_[x].size); }
    int ht(int x) const { return x < 0 ? 0 : nodes_[x].height; }

    int make(const V& v)
    {
        int x;
        if (!free_.empty()) {
            x = free_.back();
            free_.pop_back();
            nodes_[x] = Node{};
        } else {
            x = static_cast<int>(nodes_.size());
            nodes_.emplace_back();
        }
        Node& nd = nodes_[x];
        nd.value = nd.lo = nd.hi = v;
        nd.lazy = Action::identity();
        return x;
    }

    void release(int x) { free_.push_back(x); }

    void tag(int x, const G& g)
    {
        Node& nd = nodes_[x];
        nd.value = Action::apply(g, nd.value);
        nd.lo = Action::apply(g, nd.lo);
        nd.hi = Action::apply(g, nd.hi);
        nd.lazy = Action::compose(g, nd.lazy);
    }

    void push(int x)
    {
        Node& nd = nodes_[x];
        if (Action::is_identity(nd.lazy)) return;
        const G g = nd.lazy;
        if (nd.left >= 0) tag(nd.left, g);
        if (nd.right >= 0) tag(nd.right, g);
        nodes_[x].lazy = Action::identity();
    }

    // requires lazy(x) == identity
    void pull(int x)
    {
        Node& nd = nodes_[x];
        nd.size = 1 + static_cast<int>(sz(nd.left) + sz(nd.right));
        nd.height = 1 + std::max(ht(nd.left), ht(nd.right));
        nd.lo = nd.left >= 0 ? nodes_[nd.left].lo : nd.value;
        nd.hi = nd.right >= 0 ? nodes_[nd.right].hi : nd.value;
    }

    int rotate_right(int x)
    {
        const int l = nodes_[x].left;
        push(x);
        push(l);
        nodes_[x].left = nodes_[l].right;
        nodes_[l].right = x;
        pull(x);
        pull(l);
        return l;
    }

    int rotate_left(int x)
    {
        const int r = nodes_[x].right;
        push(x);
        push(r);
        nodes_[x].right = nodes_[r].left;
        nodes_[r].left = x;
        pull(x);
        pull(r);
        return r;
    }

    int balance(int x)
    {
        pull(x);
        const int bf = ht(nodes_[x].left) - ht(nodes_[x].right);
        if (bf > 1) {
            const int l = nodes_[x].left;
            if (ht(nodes_[l].left) < ht(nodes_[l].right)) {
                push(l);
                nodes_[x].left = rotate_left(l);
            }
            return rotate_right(x);
        }
        if (bf < -1) {
            const int r = nodes_[x].right;
            if (ht(nodes_[r].right) < ht(nodes_[r].left)) {
                push(r);
                nodes_[x].right = rotate_right(r);
            }
            return rotate_left(x);
        }
        return x;
    }

    int insert_rec(int x, std::size_t j, const V& v)
    {
        if (x < 0) return make(v);
        push(x);
        const std::size_t ls = sz(nodes_[x].left);
        if (j <= ls) {
            const int c = insert_rec(nodes_[x].left, j, v);
            nodes_[x].left = c;
        } else {
            const int c = insert_rec(nodes_[x].right, j - ls - 1, v);
            nodes_[x].right = c;
        }
        return balance(x);
    }

    int remove_min(int x, int& minnode)
    {
        push(x);
        if (nodes_[x].left < 0) {
            minnode = x;
            return nodes_[x].right;
        }
        const int c = remove_min(nodes_[x].left, minnode);
        nodes_[x].left = c;
        return balance(x);
    }

    int erase_rec(int x, std::size_t j, V& out)
    {
        push(x);
        const std::size_t ls = sz(nodes_[x].left);
        if (j < ls) {
            const int c = erase_rec(nodes_[x].left, j, out);
            nodes_[x].left = c;
            return balance(x);
        }
        if (j > ls) {
            const int c = erase_rec(nodes_[x].right, j - ls - 1, out);
            nodes_[x].right = c;
            return balance(x);
        }
        out = nodes_[x].value;
        const int l = nodes_[x].left, r = nodes_[x].right;
        release(x);
        if (l < 0) return r;
        if (r < 0) return l;
        int m = -1;
        const int nr = remove_min(r, m);
        nodes_[m].left = l;
        nodes_[m].right = nr;
        return balance(m);
    }

    void apply_rec(int x, std::size_t lo, std::size_t hi, std::size_t l, std::size_t r, const G& g)
    {
        if (x < 0 || r < lo || hi < l) return;
        if (l <= lo && hi <= r) {
            tag(x, g);
            return;
        }
        push(x);
        Node& nd = nodes_[x];
        const std::size_t i = lo + sz(nd.left);
        if (nd.left >= 0) apply_rec(nd.left, lo, i - 1, l, r, g);
        if (l <= i && i <= r) nodes_[x].value = Action::apply(g, nodes_[x].value);
        if (nodes_[x].right >= 0) apply_rec(nodes_[x].right, i + 1, hi, l, r, g);
        pull(x);
    }

    void collect(int x, G acc, std::vector<V>& out) const
    {
        if (x < 0) return;
        const Node& nd = nodes_[x];
        const G below = Action::compose(acc, nd.lazy);
        collect(nd.left, below, out);
        out.push_back(Action::apply(acc, nd.value));
        collect(nd.right, below, out);
    }

    int check_rec(int x) const
    {
        if (x < 0) return 0;
        const Node& nd = nodes_[x];
        const int hl = check_rec(nd.left), hr = check_rec(nd.right);
        if (hl < 0 || hr < 0) return -1;
        if (std::abs(hl - hr) > 1) return -1;
        if (nd.height != 1 + std::max(hl, hr)) return -1;
        if (static_cast<std::size_t>(nd.size) != 1 + sz(nd.left) + sz(nd.right)) return -1;
        return nd.height;
    }

    std::vector<Node> nodes_;
    std::vector<int> free_;
    int root_ = -1;
};

// Add-at-time elements: (t, s, p, l) with t = 0 the identity.
using acc_real = long double;

struct SemigroupElem {
    std::int64_t t = 0;
    acc_real s = 0, p = 0, l = 0;

    bool operator==(const SemigroupElem&) const = default;
};

inline SemigroupElem compose(const SemigroupElem& a, const SemigroupElem& b)
{
    if (a.t == 0) return b;
    if (b.t == 0) return a;
    SemigroupElem c;
    c.t = std::min(a.t, b.t);
    c.s = a.s + b.s;
    c.p = a.p + b.p + static_cast<acc_real>(a.t - c.t) * a.s + static_cast<acc_real>(b.t - c.t) * b.s;
    c.l = a.l + b.l;
    return c;
}

struct LeafState {
    std::int64_t k = 0; // 0 marks a linear piece
    acc_real h = 0;

    bool operator==(const LeafState&) const = default;
};

// (k, (t+1-k)s + p + h) for quadratic leaves, (k, l + h) for linear ones
inline LeafState apply_elem(const SemigroupElem& g, const LeafState& x)
{
    if (g.t == 0) return x;
    if (x.k == 0) return {0, g.l + x.h};
    return {x.k, static_cast<acc_real>(g.t + 1 - x.k) * g.s + g.p + x.h};
}

// Tree whose elements are themselves semigroup elements.
struct ElemAction {
    using value_type = SemigroupElem;
    using tag_type = SemigroupElem;
    static SemigroupElem identity() { return {}; }
    static bool is_identity(const SemigroupElem& g) { return g.t == 0; }
    static SemigroupElem compose(const SemigroupElem& a, const SemigroupElem& b) { return omni::compose(a, b); }
    static SemigroupElem apply(const SemigroupElem& g, const SemigroupElem& v) { return omni::compose(g, v); }
};

struct LeafAction {
    using value_type = LeafState;
    using tag_type = SemigroupElem;
    static SemigroupElem identity() { return {}; }
    static bool is_identity(const SemigroupElem& g) { return g.t == 0; }
    static SemigroupElem compose(const SemigroupElem& a, const SemigroupElem& b) { return omni::compose(a, b); }
    static LeafState apply(const SemigroupElem& g, const LeafState& v) { return apply_elem(g, v); }
};

using SegmentTree = LazyAvlTree<ElemAction>;

} // namespace omni

#pragma once

// Level-n approaching graph. Every level-n word contributes the four corners
// of its cell; corner instances sitting on the same lattice point are merged
// by the identification relation (same cell, or glued along the boundary of
// the first cell where the two addresses diverge), and the four sides of
// every cell become edges.

#include <pillow/error.hpp>
#include <pillow/pattern.hpp>
#include <pillow/words.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace pillow {

struct CornerInstance {
    Word word;
    int corner = 0;

    friend auto operator<=>(const CornerInstance&, const CornerInstance&) = default;
    friend bool operator==(const CornerInstance&, const CornerInstance&) = default;
};

struct GraphEdge {
    int u = 0;  // u < v
    int v = 0;
    int mult = 1;  // number of cell sides inducing the pair

    friend constexpr auto operator<=>(const GraphEdge&, const GraphEdge&) = default;
};

enum class Side { left, right, bottom, top };

struct BuildOptions {
    std::uint64_t cell_budget = 300000;
    Connectivity connectivity = Connectivity::topological;
};

namespace detail {

inline std::uint64_t checked_power(std::uint64_t base, int exp, std::uint64_t cap) {
    std::uint64_t out = 1;
    for (int i = 0; i < exp; ++i) {
        if (base != 0 && out > cap / base) return cap + 1;
        out *= base;
    }
    return out;
}

struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace detail

/// Tests the identification relation for two level-n cells sharing the
/// lattice point `p` (coordinates at scale L^n).
inline bool glue(const PilingPattern& pattern, const Word& w, const Word& v, LatticePoint p) {
    if (w.length() != v.length()) throw DomainError("glue: words of different length");
    check_word(pattern, w);
    check_word(pattern, v);
    const int L = pattern.side();
    const int n = static_cast<int>(w.length());
    const CellRect rw = planar_square(w, L);
    const CellRect rv = planar_square(v, L);
    auto inside = [&](const CellRect& r) {
        return p.x >= r.a && p.x <= r.a + 1 && p.y >= r.b && p.y <= r.b + 1;
    };
    if (!inside(rw) || !inside(rv)) throw DomainError("glue: point outside one of the cells");
    if (w == v) return true;
    std::size_t d = 0;
    while (w.letters[d] == v.letters[d]) ++d;
    // Cell where the two addresses first diverge, measured at the fine scale.
    const CellRect parent = planar_square(w.prefix(d + 1), L);
    const std::int64_t s = lattice_scale(L, n - static_cast<int>(d) - 1);
    const std::int64_t x0 = parent.a * s, x1 = (parent.a + 1) * s;
    const std::int64_t y0 = parent.b * s, y1 = (parent.b + 1) * s;
    return p.x == x0 || p.x == x1 || p.y == y0 || p.y == y1;
}

struct UlfStats {
    int max_cell_incidence = 0;
    int max_degree = 0;
    int incidence_bound = 0;  // 2 * norm
    bool incidence_ok = true;
    bool degree_ok = true;  // degree <= 4 * incidence at every vertex
};

class CarpetGraph {
public:
    struct Vertex {
        LatticePoint point;
        std::uint64_t rep_word = 0;  // index of the canonical word
        int rep_corner = 0;
    };

    CarpetGraph(const PilingPattern& pattern, int level, const BuildOptions& opts = {})
        : pattern_(pattern), alphabet_(pattern), level_(level) {
        if (level < 0) throw DomainError("level must be nonnegative");
        const auto report = validate_pattern(pattern, opts.connectivity);
        if (!report.admissible()) throw InadmissibleError("pattern is not admissible: " + report.summary());
        const std::uint64_t K = alphabet_.size();
        cell_count_ = detail::checked_power(K, level, opts.cell_budget);
        if (cell_count_ > opts.cell_budget)
            throw BudgetError("level " + std::to_string(level) + " needs " + std::to_string(K) + "^" +
                              std::to_string(level) + " cells, over the budget of " +
                              std::to_string(opts.cell_budget));
        scale_ = lattice_scale(pattern.side(), level);
        build();
    }

    const PilingPattern& pattern() const { return pattern_; }
    const Alphabet& alphabet() const { return alphabet_; }
    int level() const { return level_; }
    int side() const { return pattern_.side(); }
    std::int64_t scale() const { return scale_; }
    std::uint64_t cell_count() const { return cell_count_; }
    std::size_t vertex_count() const { return vertices_.size(); }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    const Vertex& vertex(int id) const { return vertices_.at(id); }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    /// Vertex ids of the global corners p0..p3.
    const std::array<int, 4>& corner_ids() const { return corner_ids_; }
    /// Pairs inside one lattice bucket that are linked only through the
    /// closure of the relation, not directly.
    std::uint64_t closure_only_pairs() const { return closure_only_pairs_; }

    /// Neighbours of v in increasing id order.
    std::span<const int> neighbours(int v) const {
        return {adj_.data() + adj_offset_[v], adj_.data() + adj_offset_[v + 1]};
    }
    /// Multiplicity of the edge to each neighbour, aligned with neighbours(v).
    std::span<const int> neighbour_mults(int v) const {
        return {adj_mult_.data() + adj_offset_[v], adj_mult_.data() + adj_offset_[v + 1]};
    }
    int degree(int v) const { return adj_offset_[v + 1] - adj_offset_[v]; }

    /// Number of distinct level-n cells having v as a corner.
    int cell_incidence(int v) const { return incidence_.at(v); }

    Word word_at(std::uint64_t index) const {
        const std::uint64_t K = alphabet_.size();
        Word w;
        w.letters.resize(level_);
        for (int i = level_ - 1; i >= 0; --i) {
            w.letters[i] = alphabet_[index % K];
            index /= K;
        }
        return w;
    }

    std::uint64_t word_index(const Word& w) const {
        if (w.length() != static_cast<std::size_t>(level_))
            throw LookupError("word of length " + std::to_string(w.length()) + " at level " +
                              std::to_string(level_));
        std::uint64_t idx = 0;
        for (const Symbol& s : w.letters) {
            const int k = alphabet_.index_of(s);
            if (k < 0) throw LookupError("word contains a symbol outside the alphabet");
            idx = idx * alphabet_.size() + static_cast<std::uint64_t>(k);
        }
        return idx;
    }

    int vertex_of(std::uint64_t word_index, int corner) const {
        if (word_index >= cell_count_ || corner < 0 || corner > 3)
            throw LookupError("corner instance out of range");
        return instance_vertex_[word_index * 4 + corner];
    }

    int vertex_of(const CornerInstance& ci) const { return vertex_of(word_index(ci.word), ci.corner); }

    CornerInstance representative(int v) const {
        const auto& vx = vertices_.at(v);
        return {word_at(vx.rep_word), vx.rep_corner};
    }

    /// Vertex at a lattice point, if exactly one exists there.
    std::optional<int> unique_vertex_at(LatticePoint p) const {
        auto it = std::lower_bound(vertices_.begin(), vertices_.end(), p,
                                   [](const Vertex& v, LatticePoint q) { return v.point < q; });
        if (it == vertices_.end() || it->point != p) return std::nullopt;
        auto next = it + 1;
        if (next != vertices_.end() && next->point == p) return std::nullopt;
        return static_cast<int>(it - vertices_.begin());
    }

    /// All vertices at a lattice point.
    std::vector<int> vertices_at(LatticePoint p) const {
        auto lo = std::lower_bound(vertices_.begin(), vertices_.end(), p,
                                   [](const Vertex& v, LatticePoint q) { return v.point < q; });
        std::vector<int> out;
        for (auto it = lo; it != vertices_.end() && it->point == p; ++it)
            out.push_back(static_cast<int>(it - vertices_.begin()));
        return out;
    }

    CellRect cell_rect(std::uint64_t word_index) const {
        return {level_, rect_a_.at(word_index), rect_b_.at(word_index)};
    }

private:
    void build();

    PilingPattern pattern_;
    Alphabet alphabet_;
    int level_;
    std::int64_t scale_ = 1;
    std::uint64_t cell_count_ = 1;
    std::vector<std::int64_t> rect_a_, rect_b_;
    std::vector<Vertex> vertices_;
    std::vector<int> instance_vertex_;
    std::vector<GraphEdge> edges_;
    std::vector<int> adj_offset_, adj_, adj_mult_;
    std::vector<int> incidence_;
    std::array<int, 4> corner_ids_{};
    std::uint64_t closure_only_pairs_ = 0;
};

inline void CarpetGraph::build() {
    const int L = pattern_.side();
    const std::uint64_t K = alphabet_.size();
    const std::uint64_t cells = cell_count_;

    // Lower-left corners of all planar squares, and the digit strings.
    rect_a_.assign(cells, 0);
    rect_b_.assign(cells, 0);
    std::vector<std::uint32_t> digits(cells * static_cast<std::uint64_t>(level_));
    for (std::uint64_t idx = 0; idx < cells; ++idx) {
        std::uint64_t rem = idx;
        for (int i = level_ - 1; i >= 0; --i) {
            digits[idx * level_ + i] = static_cast<std::uint32_t>(rem % K);
            rem /= K;
        }
        std::int64_t a = 0, b = 0;
        for (int i = 0; i < level_; ++i) {
            const Symbol& s = alphabet_[digits[idx * level_ + i]];
            a = a * L + s.cell.col;
            b = b * L + s.cell.row;
        }
        rect_a_[idx] = a;
        rect_b_[idx] = b;
    }

    // scale of the level-k parent cell measured at the fine scale
    std::vector<std::int64_t> sub_scale(level_ + 1, 1);
    for (int k = level_ - 1; k >= 0; --k) sub_scale[k] = sub_scale[k + 1] * L;

    struct Instance {
        std::int64_t x, y;
        std::uint64_t word;
        int corner;
        auto key() const { return std::tie(x, y, word, corner); }
    };
    std::vector<Instance> inst;
    inst.reserve(cells * 4);
    for (std::uint64_t idx = 0; idx < cells; ++idx) {
        const CellRect r{level_, rect_a_[idx], rect_b_[idx]};
        for (int c = 0; c < 4; ++c) {
            const LatticePoint p = rect_corner(r, c);
            inst.push_back({p.x, p.y, idx, c});
        }
    }
    std::sort(inst.begin(), inst.end(), [](const Instance& a, const Instance& b) { return a.key() < b.key(); });

    // Glued iff the words agree, or the point lies on the boundary of the
    // first cell where they diverge.
    auto glued = [&](const Instance& a, const Instance& b) {
        if (a.word == b.word) return true;
        const std::uint32_t* da = &digits[a.word * level_];
        const std::uint32_t* db = &digits[b.word * level_];
        int d = 0;
        while (da[d] == db[d]) ++d;
        std::int64_t pa = 0, pb = 0;
        for (int i = 0; i <= d; ++i) {
            const Symbol& s = alphabet_[da[i]];
            pa = pa * L + s.cell.col;
            pb = pb * L + s.cell.row;
        }
        const std::int64_t s = sub_scale[d + 1];
        return a.x == pa * s || a.x == (pa + 1) * s || a.y == pb * s || a.y == (pb + 1) * s;
    };

    instance_vertex_.assign(cells * 4, -1);
    std::size_t begin = 0;
    while (begin < inst.size()) {
        std::size_t end = begin + 1;
        while (end < inst.size() && inst[end].x == inst[begin].x && inst[end].y == inst[begin].y) ++end;
        const std::size_t m = end - begin;
        detail::DisjointSets sets(m);
        std::vector<char> direct(m * m, 0);
        for (std::size_t i = 0; i < m; ++i) {
            direct[i * m + i] = 1;
            for (std::size_t j = i + 1; j < m; ++j)
                if (glued(inst[begin + i], inst[begin + j])) {
                    direct[i * m + j] = direct[j * m + i] = 1;
                    sets.unite(static_cast<int>(i), static_cast<int>(j));
                }
        }
        // Components in order of their least member, which is the canonical
        // representative because the bucket is sorted by (word, corner).
        std::vector<int> comp_vertex(m, -1);
        for (std::size_t i = 0; i < m; ++i) {
            const int root = sets.find(static_cast<int>(i));
            if (comp_vertex[root] < 0) {
                comp_vertex[root] = static_cast<int>(vertices_.size());
                const auto& a = inst[begin + i];
                vertices_.push_back({{a.x, a.y}, a.word, a.corner});
            }
            const auto& a = inst[begin + i];
            instance_vertex_[a.word * 4 + a.corner] = comp_vertex[root];
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (!direct[i * m + j] && sets.find(static_cast<int>(i)) == sets.find(static_cast<int>(j)))
                    ++closure_only_pairs_;
        begin = end;
    }

    incidence_.assign(vertices_.size(), 0);
    for (int v : instance_vertex_) ++incidence_[v];

    std::vector<GraphEdge> raw;
    raw.reserve(cells * 4);
    static constexpr std::array<std::pair<int, int>, 4> sides{{{0, 1}, {1, 2}, {2, 3}, {3, 0}}};
    for (std::uint64_t idx = 0; idx < cells; ++idx)
        for (auto [i, j] : sides) {
            int u = instance_vertex_[idx * 4 + i];
            int v = instance_vertex_[idx * 4 + j];
            if (u == v) throw InvariantError("cell side collapsed to a self-loop");
            if (u > v) std::swap(u, v);
            raw.push_back({u, v, 1});
        }
    std::sort(raw.begin(), raw.end());
    for (const auto& e : raw) {
        if (!edges_.empty() && edges_.back().u == e.u && edges_.back().v == e.v)
            ++edges_.back().mult;
        else
            edges_.push_back(e);
    }

    const std::size_t nv = vertices_.size();
    adj_offset_.assign(nv + 1, 0);
    for (const auto& e : edges_) {
        ++adj_offset_[e.u + 1];
        ++adj_offset_[e.v + 1];
    }
    for (std::size_t i = 0; i < nv; ++i) adj_offset_[i + 1] += adj_offset_[i];
    adj_.assign(adj_offset_.back(), 0);
    adj_mult_.assign(adj_offset_.back(), 0);
    std::vector<int> fill(adj_offset_.begin(), adj_offset_.end() - 1);
    for (const auto& e : edges_) {
        adj_[fill[e.u]] = e.v;
        adj_mult_[fill[e.u]++] = e.mult;
        adj_[fill[e.v]] = e.u;
        adj_mult_[fill[e.v]++] = e.mult;
    }
    // Rows come out sorted because edges are sorted by (u, v).

    const std::array<LatticePoint, 4> corners{{{0, 0}, {scale_, 0}, {scale_, scale_}, {0, scale_}}};
    for (int i = 0; i < 4; ++i) {
        auto v = unique_vertex_at(corners[i]);
        if (!v) throw InvariantError("global corner " + std::to_string(i) + " is not a unique vertex");
        corner_ids_[i] = *v;
    }
}

inline CarpetGraph build_graph(const PilingPattern& p, int level, const BuildOptions& opts = {}) {
    return CarpetGraph(p, level, opts);
}

inline std::vector<int> boundary_vertices(const CarpetGraph& g, Side side) {
    std::vector<int> out;
    const std::int64_t S = g.scale();
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const auto p = g.vertex(static_cast<int>(v)).point;
        const bool hit = (side == Side::left && p.x == 0) || (side == Side::right && p.x == S) ||
                         (side == Side::bottom && p.y == 0) || (side == Side::top && p.y == S);
        if (hit) out.push_back(static_cast<int>(v));
    }
    return out;
}

/// Maps each vertex of the level-(m-n) graph to the vertex of the level-m
/// graph obtained by prefixing its canonical instance with w.
inline std::vector<int> subcell_embed(const CarpetGraph& fine, const Word& w, const CarpetGraph& sub) {
    if (!(fine.pattern() == sub.pattern())) throw DomainError("subcell_embed: graphs of different patterns");
    if (static_cast<int>(w.length()) + sub.level() != fine.level())
        throw DomainError("subcell_embed: level mismatch (" + std::to_string(w.length()) + " + " +
                          std::to_string(sub.level()) + " != " + std::to_string(fine.level()) + ")");
    check_word(fine.pattern(), w);
    std::uint64_t prefix = 0;
    for (const Symbol& s : w.letters)
        prefix = prefix * fine.alphabet().size() + static_cast<std::uint64_t>(fine.alphabet().index_of(s));
    const std::uint64_t shift = sub.cell_count();
    std::vector<int> out(sub.vertex_count());
    for (std::size_t v = 0; v < sub.vertex_count(); ++v) {
        const auto& vx = sub.vertex(static_cast<int>(v));
        out[v] = fine.vertex_of(prefix * shift + vx.rep_word, vx.rep_corner);
    }
    return out;
}

/// Positions of the level-n vertices inside the level-m graph, in level-n order.
inline std::vector<int> level_embedding(const CarpetGraph& coarse, const CarpetGraph& fine) {
    if (!(coarse.pattern() == fine.pattern())) throw DomainError("level_embedding: different patterns");
    if (coarse.level() > fine.level()) throw DomainError("level_embedding: coarse level above fine level");
    const int L = coarse.side();
    const Alphabet& alpha = fine.alphabet();
    // Corner p_i of a cell is also corner p_i of its i-th corner subcell.
    const std::array<Cell, 4> corner_cells{{{0, 0}, {L - 1, 0}, {L - 1, L - 1}, {0, L - 1}}};
    const int extra = fine.level() - coarse.level();
    std::vector<int> out(coarse.vertex_count());
    for (std::size_t v = 0; v < coarse.vertex_count(); ++v) {
        const auto& vx = coarse.vertex(static_cast<int>(v));
        std::uint64_t idx = vx.rep_word;
        const auto digit = static_cast<std::uint64_t>(alpha.index_of({corner_cells[vx.rep_corner], 0}));
        for (int k = 0; k < extra; ++k) idx = idx * alpha.size() + digit;
        out[v] = fine.vertex_of(idx, vx.rep_corner);
    }
    return out;
}

inline UlfStats ulf_stats(const CarpetGraph& g) {
    UlfStats st;
    st.incidence_bound = 2 * g.pattern().norm();
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const int inc = g.cell_incidence(static_cast<int>(v));
        const int deg = g.degree(static_cast<int>(v));
        st.max_cell_incidence = std::max(st.max_cell_incidence, inc);
        st.max_degree = std::max(st.max_degree, deg);
        if (inc > st.incidence_bound) st.incidence_ok = false;
        if (deg > 4 * inc) st.degree_ok = false;
    }
    return st;
}

/// Vertex permutation induced by a planar isometry acting on canonical
/// corner instances.
inline std::vector<int> vertex_permutation(const CarpetGraph& g, const SquareIsometry& iso) {
    std::vector<int> perm(g.vertex_count());
    const int L = g.side();
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const CornerInstance rep = g.representative(static_cast<int>(v));
        const Word img = apply_isometry_word(iso, rep.word, g.pattern());
        const LatticePoint p = iso.apply_point(g.vertex(static_cast<int>(v)).point, g.scale());
        const CellRect r = planar_square(img, L);
        int corner = -1;
        for (int c = 0; c < 4; ++c)
            if (rect_corner(r, c) == p) corner = c;
        if (corner < 0) throw InvariantError("isometry image is not a corner of the image cell");
        perm[v] = g.vertex_of(CornerInstance{img, corner});
    }
    return perm;
}

/// True when perm is a bijection mapping edges onto edges with equal multiplicity
/// and lattice points onto their isometric images.
inline bool is_automorphism(const CarpetGraph& g, const std::vector<int>& perm, const SquareIsometry& iso) {
    const std::size_t n = g.vertex_count();
    if (perm.size() != n) return false;
    std::vector<char> hit(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        if (perm[v] < 0 || static_cast<std::size_t>(perm[v]) >= n || hit[perm[v]]) return false;
        hit[perm[v]] = 1;
        if (g.vertex(perm[v]).point != iso.apply_point(g.vertex(static_cast<int>(v)).point, g.scale()))
            return false;
    }
    std::vector<GraphEdge> mapped;
    mapped.reserve(g.edges().size());
    for (const auto& e : g.edges()) {
        int a = perm[e.u], b = perm[e.v];
        if (a > b) std::swap(a, b);
        mapped.push_back({a, b, e.mult});
    }
    std::sort(mapped.begin(), mapped.end());
    return mapped == g.edges();
}

}  // namespace pillow

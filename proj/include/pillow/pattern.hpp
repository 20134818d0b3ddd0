#pragma once

// Piling multiplicities on the L x L level-1 tiling of the unit square and
// their admissibility conditions (symmetry, connectedness, flat border,
// low dimension).

#include <pillow/error.hpp>

#include <array>
#include <compare>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace pillow {

/// Grid cell (column, row) of the level-1 tiling; row 0 is the bottom row.
struct Cell {
    int col = 0;
    int row = 0;

    friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// Lattice point with integer coordinates at an implied scale.
struct LatticePoint {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend constexpr auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

/// Element of the symmetry group of the square. The 2x2 integer matrix acts
/// on coordinates centred at the middle of the square.
class SquareIsometry {
public:
    enum class Kind : std::uint8_t {
        identity,
        rotate90,
        rotate180,
        rotate270,
        reflect_x,     // x -> -x, mirror through the vertical middle line
        reflect_y,     // y -> -y
        reflect_diag,  // (x, y) -> (y, x)
        reflect_anti,  // (x, y) -> (-y, -x)
    };

    constexpr SquareIsometry() = default;
    constexpr explicit SquareIsometry(Kind k) : m_(matrix_of(k)) {}

    static constexpr std::array<Kind, 8> all_kinds() {
        return {Kind::identity,  Kind::rotate90,  Kind::rotate180,    Kind::rotate270,
                Kind::reflect_x, Kind::reflect_y, Kind::reflect_diag, Kind::reflect_anti};
    }

    static std::array<SquareIsometry, 8> group() {
        std::array<SquareIsometry, 8> out{};
        auto kinds = all_kinds();
        for (std::size_t i = 0; i < kinds.size(); ++i) out[i] = SquareIsometry(kinds[i]);
        return out;
    }

    constexpr Kind kind() const {
        for (Kind k : all_kinds())
            if (matrix_of(k) == m_) return k;
        return Kind::identity;  // unreachable for group elements
    }

    std::string_view name() const {
        switch (kind()) {
            case Kind::identity: return "identity";
            case Kind::rotate90: return "rotate90";
            case Kind::rotate180: return "rotate180";
            case Kind::rotate270: return "rotate270";
            case Kind::reflect_x: return "reflect_x";
            case Kind::reflect_y: return "reflect_y";
            case Kind::reflect_diag: return "reflect_diag";
            case Kind::reflect_anti: return "reflect_anti";
        }
        return "?";
    }

    /// this ∘ other
    constexpr SquareIsometry compose(const SquareIsometry& other) const {
        SquareIsometry out;
        const auto& a = m_;
        const auto& b = other.m_;
        out.m_ = {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
                  a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
        return out;
    }

    constexpr SquareIsometry inverse() const {
        // Orthogonal matrix: inverse is the transpose.
        SquareIsometry out;
        out.m_ = {m_[0], m_[2], m_[1], m_[3]};
        return out;
    }

    /// Image of a lattice point of the square [0, scale]^2.
    constexpr LatticePoint apply_point(LatticePoint p, std::int64_t scale) const {
        const std::int64_t X = 2 * p.x - scale;
        const std::int64_t Y = 2 * p.y - scale;
        const std::int64_t Xi = m_[0] * X + m_[1] * Y;
        const std::int64_t Yi = m_[2] * X + m_[3] * Y;
        return {(Xi + scale) / 2, (Yi + scale) / 2};
    }

    /// Image of the unit cell with lower-left corner `lower_left` in [0, scale)^2.
    constexpr LatticePoint apply_cell(LatticePoint lower_left, std::int64_t scale) const {
        const std::int64_t X = 2 * lower_left.x + 1 - scale;
        const std::int64_t Y = 2 * lower_left.y + 1 - scale;
        const std::int64_t Xi = m_[0] * X + m_[1] * Y;
        const std::int64_t Yi = m_[2] * X + m_[3] * Y;
        return {(Xi + scale - 1) / 2, (Yi + scale - 1) / 2};
    }

    friend constexpr bool operator==(const SquareIsometry&, const SquareIsometry&) = default;

private:
    using Matrix = std::array<int, 4>;

    static constexpr Matrix matrix_of(Kind k) {
        switch (k) {
            case Kind::identity: return {1, 0, 0, 1};
            case Kind::rotate90: return {0, -1, 1, 0};
            case Kind::rotate180: return {-1, 0, 0, -1};
            case Kind::rotate270: return {0, 1, -1, 0};
            case Kind::reflect_x: return {-1, 0, 0, 1};
            case Kind::reflect_y: return {1, 0, 0, -1};
            case Kind::reflect_diag: return {0, 1, 1, 0};
            case Kind::reflect_anti: return {0, -1, -1, 0};
        }
        return {1, 0, 0, 1};
    }

    Matrix m_ = {1, 0, 0, 1};
};

/// Image of a grid cell of the L x L tiling under g.
inline Cell apply_isometry(const SquareIsometry& g, Cell cell, int L) {
    if (L < 1 || cell.col < 0 || cell.row < 0 || cell.col >= L || cell.row >= L)
        throw DomainError("cell (" + std::to_string(cell.col) + "," + std::to_string(cell.row) +
                          ") outside the " + std::to_string(L) + "x" + std::to_string(L) + " grid");
    const auto img = g.apply_cell({cell.col, cell.row}, L);
    return {static_cast<int>(img.x), static_cast<int>(img.y)};
}

/// Multiplicity map on the L x L level-1 tiling.
class PilingPattern {
public:
    /// `mult[c][r]` is the multiplicity of grid cell (c, r).
    PilingPattern(int L, std::vector<std::vector<int>> mult) : L_(L) {
        if (L < 3) throw StructuralError("pattern side L must be at least 3, got " + std::to_string(L));
        if (mult.size() != static_cast<std::size_t>(L))
            throw StructuralError("expected " + std::to_string(L) + " columns, got " +
                                  std::to_string(mult.size()));
        flat_.assign(static_cast<std::size_t>(L) * L, 0);
        for (int c = 0; c < L; ++c) {
            if (mult[c].size() != static_cast<std::size_t>(L))
                throw StructuralError("column " + std::to_string(c) + " has " +
                                      std::to_string(mult[c].size()) + " entries, expected " +
                                      std::to_string(L));
            for (int r = 0; r < L; ++r) {
                if (mult[c][r] < 0)
                    throw StructuralError("negative multiplicity at (" + std::to_string(c) + "," +
                                          std::to_string(r) + ")");
                flat_[index(c, r)] = mult[c][r];
            }
        }
        for (int c = 0; c < L; ++c)
            for (int r = 0; r < L; ++r) {
                norm_ += at(c, r);
                if (at(c, r) >= 1) nonvanish_.push_back({c, r});
            }
    }

    /// Build from rows listed bottom-up: `rows[r][c]` is the multiplicity of (c, r).
    static PilingPattern from_rows(int L, const std::vector<std::vector<int>>& rows) {
        if (L < 3) throw StructuralError("pattern side L must be at least 3, got " + std::to_string(L));
        if (rows.size() != static_cast<std::size_t>(L))
            throw StructuralError("expected " + std::to_string(L) + " rows, got " +
                                  std::to_string(rows.size()));
        std::vector<std::vector<int>> cols(L, std::vector<int>(L, 0));
        for (int r = 0; r < L; ++r) {
            if (rows[r].size() != static_cast<std::size_t>(L))
                throw StructuralError("row " + std::to_string(r) + " has " +
                                      std::to_string(rows[r].size()) + " entries, expected " +
                                      std::to_string(L));
            for (int c = 0; c < L; ++c) cols[c][r] = rows[r][c];
        }
        return PilingPattern(L, std::move(cols));
    }

    int side() const { return L_; }
    int at(int c, int r) const { return flat_[index(c, r)]; }
    int at(Cell q) const { return at(q.col, q.row); }
    /// Sum of all multiplicities, which is also the alphabet size.
    int norm() const { return norm_; }
    /// Cells with multiplicity >= 1, sorted by (column, row).
    const std::vector<Cell>& nonvanish() const { return nonvanish_; }

    std::vector<std::vector<int>> rows() const {
        std::vector<std::vector<int>> out(L_, std::vector<int>(L_, 0));
        for (int r = 0; r < L_; ++r)
            for (int c = 0; c < L_; ++c) out[r][c] = at(c, r);
        return out;
    }

    /// Pattern composed with g: the image pattern assigns mult(g^-1 Q) to Q.
    PilingPattern transformed(const SquareIsometry& g) const {
        std::vector<std::vector<int>> cols(L_, std::vector<int>(L_, 0));
        for (int c = 0; c < L_; ++c)
            for (int r = 0; r < L_; ++r) {
                const Cell img = apply_isometry(g, {c, r}, L_);
                cols[img.col][img.row] = at(c, r);
            }
        return PilingPattern(L_, std::move(cols));
    }

    friend bool operator==(const PilingPattern& a, const PilingPattern& b) {
        return a.L_ == b.L_ && a.flat_ == b.flat_;
    }

private:
    std::size_t index(int c, int r) const {
        if (c < 0 || r < 0 || c >= L_ || r >= L_)
            throw DomainError("cell (" + std::to_string(c) + "," + std::to_string(r) +
                              ") outside the pattern grid");
        return static_cast<std::size_t>(c) * L_ + r;
    }

    int L_;
    std::vector<int> flat_;
    int norm_ = 0;
    std::vector<Cell> nonvanish_;
};

struct ConditionResult {
    bool ok = true;
    std::string detail;
};

struct AdmissibilityReport {
    ConditionResult pc1;  // symmetry
    ConditionResult pc2;  // connectedness
    ConditionResult pc3;  // flat border
    ConditionResult pc4;  // low dimension

    bool admissible() const { return pc1.ok && pc2.ok && pc3.ok && pc4.ok; }

    std::string summary() const {
        std::string out;
        auto add = [&](const char* tag, const ConditionResult& c) {
            if (c.ok) return;
            if (!out.empty()) out += "; ";
            out += std::string(tag) + ": " + c.detail;
        };
        add("PC1", pc1);
        add("PC2", pc2);
        add("PC3", pc3);
        add("PC4", pc4);
        return out.empty() ? "admissible" : out;
    }
};

enum class Connectivity {
    /// Closed squares touching at an edge or a corner are connected.
    topological,
    /// Only squares sharing an edge are connected.
    edge,
};

inline AdmissibilityReport validate_pattern(const PilingPattern& p,
                                            Connectivity mode = Connectivity::topological) {
    AdmissibilityReport rep;
    const int L = p.side();

    for (const auto& g : SquareIsometry::group()) {
        if (!rep.pc1.ok) break;
        for (int c = 0; c < L && rep.pc1.ok; ++c)
            for (int r = 0; r < L; ++r) {
                const Cell img = apply_isometry(g, {c, r}, L);
                if (p.at(img) != p.at(c, r)) {
                    rep.pc1 = {false, "multiplicity not invariant under " + std::string(g.name()) +
                                          ": cell (" + std::to_string(c) + "," + std::to_string(r) +
                                          ") maps to (" + std::to_string(img.col) + "," +
                                          std::to_string(img.row) + ")"};
                    break;
                }
            }
    }

    const auto& kept = p.nonvanish();
    if (kept.empty()) {
        rep.pc2 = {false, "no non-vanishing cells"};
    } else {
        std::vector<char> seen(static_cast<std::size_t>(L) * L, 0);
        auto id = [L](Cell q) { return static_cast<std::size_t>(q.col) * L + q.row; };
        std::queue<Cell> todo;
        todo.push(kept.front());
        seen[id(kept.front())] = 1;
        std::size_t reached = 1;
        while (!todo.empty()) {
            const Cell q = todo.front();
            todo.pop();
            for (int dc = -1; dc <= 1; ++dc)
                for (int dr = -1; dr <= 1; ++dr) {
                    if (dc == 0 && dr == 0) continue;
                    if (mode == Connectivity::edge && dc != 0 && dr != 0) continue;
                    const Cell nb{q.col + dc, q.row + dr};
                    if (nb.col < 0 || nb.row < 0 || nb.col >= L || nb.row >= L) continue;
                    if (p.at(nb) < 1 || seen[id(nb)]) continue;
                    seen[id(nb)] = 1;
                    ++reached;
                    todo.push(nb);
                }
        }
        if (reached != kept.size())
            rep.pc2 = {false, "non-vanish pattern splits into several components (" +
                                  std::to_string(reached) + " of " + std::to_string(kept.size()) +
                                  " cells reachable)"};
    }

    for (int c = 0; c < L && rep.pc3.ok; ++c)
        for (int r = 0; r < L; ++r) {
            const bool border = c == 0 || r == 0 || c == L - 1 || r == L - 1;
            if (border && p.at(c, r) != 1) {
                rep.pc3 = {false, "border cell (" + std::to_string(c) + "," + std::to_string(r) +
                                      ") has multiplicity " + std::to_string(p.at(c, r)) +
                                      ", expected 1"};
                break;
            }
        }

    const int bound = L * L - 1;
    if (p.norm() > bound)
        rep.pc4 = {false, "norm " + std::to_string(p.norm()) + " exceeds L^2 - 1 = " +
                              std::to_string(bound)};
    return rep;
}

inline std::vector<std::string> builtin_pattern_names() { return {"sierpinski3", "pillow5"}; }

inline PilingPattern builtin_pattern(std::string_view name) {
    if (name == "sierpinski3") {
        return PilingPattern(3, {{1, 1, 1}, {1, 0, 1}, {1, 1, 1}});
    }
    if (name == "pillow5") {
        std::vector<std::vector<int>> cols(5, std::vector<int>(5, 1));
        for (int c : {1, 3})
            for (int r : {1, 3}) cols[c][r] = 0;
        cols[2][2] = 2;
        return PilingPattern(5, std::move(cols));
    }
    std::string known;
    for (const auto& n : builtin_pattern_names()) known += (known.empty() ? "" : ", ") + n;
    throw LookupError("unknown builtin pattern '" + std::string(name) + "' (available: " + known + ")");
}

}  // namespace pillow

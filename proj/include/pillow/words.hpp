#pragma once

// Symbolic cell addresses. A word is a sequence of (cell, sheet) symbols,
// most significant letter first; its planar projection is an integer square
// of the level-n tiling.

#include <pillow/error.hpp>
#include <pillow/pattern.hpp>

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace pillow {

struct Symbol {
    Cell cell;
    int sheet = 0;

    friend constexpr auto operator<=>(const Symbol&, const Symbol&) = default;
};

struct Word {
    std::vector<Symbol> letters;

    std::size_t length() const { return letters.size(); }
    bool empty() const { return letters.empty(); }

    /// First `k` letters.
    Word prefix(std::size_t k) const {
        return Word{{letters.begin(), letters.begin() + static_cast<std::ptrdiff_t>(std::min(k, length()))}};
    }

    Word concat(const Word& tail) const {
        Word out = *this;
        out.letters.insert(out.letters.end(), tail.letters.begin(), tail.letters.end());
        return out;
    }

    friend auto operator<=>(const Word&, const Word&) = default;
    friend bool operator==(const Word&, const Word&) = default;
};

/// Unit square of the level-n tiling scaled by L^n.
struct CellRect {
    int level = 0;
    std::int64_t a = 0;  // lower-left x
    std::int64_t b = 0;  // lower-left y

    friend constexpr bool operator==(const CellRect&, const CellRect&) = default;
};

/// L^n, throwing if it does not fit comfortably in 62 bits.
inline std::int64_t lattice_scale(int L, int n) {
    if (n < 0) throw DomainError("negative level");
    std::int64_t s = 1;
    for (int i = 0; i < n; ++i) {
        if (s > (std::numeric_limits<std::int64_t>::max() / 4) / L)
            throw DomainError("lattice scale L^n overflows");
        s *= L;
    }
    return s;
}

inline bool is_valid_symbol(const PilingPattern& p, const Symbol& s) {
    const int L = p.side();
    if (s.cell.col < 0 || s.cell.row < 0 || s.cell.col >= L || s.cell.row >= L) return false;
    return s.sheet >= 0 && s.sheet < p.at(s.cell);
}

inline void check_word(const PilingPattern& p, const Word& w) {
    for (std::size_t i = 0; i < w.length(); ++i)
        if (!is_valid_symbol(p, w.letters[i]))
            throw DomainError("letter " + std::to_string(i) + " of word is not a symbol of the pattern");
}

/// The alphabet of a pattern: all symbols (Q, j), 0 <= j < mult(Q), sorted.
class Alphabet {
public:
    explicit Alphabet(const PilingPattern& p) : L_(p.side()) {
        for (const Cell& q : p.nonvanish())
            for (int j = 0; j < p.at(q); ++j) symbols_.push_back({q, j});
        std::sort(symbols_.begin(), symbols_.end());
        lookup_.assign(static_cast<std::size_t>(L_) * L_, -1);
        for (std::size_t i = 0; i < symbols_.size(); ++i) {
            const auto& s = symbols_[i];
            if (s.sheet == 0) lookup_[static_cast<std::size_t>(s.cell.col) * L_ + s.cell.row] = static_cast<int>(i);
        }
    }

    std::size_t size() const { return symbols_.size(); }
    const Symbol& operator[](std::size_t i) const { return symbols_[i]; }
    const std::vector<Symbol>& symbols() const { return symbols_; }

    /// Position of a symbol in sorted order; -1 when absent.
    int index_of(const Symbol& s) const {
        if (s.cell.col < 0 || s.cell.row < 0 || s.cell.col >= L_ || s.cell.row >= L_) return -1;
        const int base = lookup_[static_cast<std::size_t>(s.cell.col) * L_ + s.cell.row];
        if (base < 0) return -1;
        const int idx = base + s.sheet;
        if (s.sheet < 0 || static_cast<std::size_t>(idx) >= symbols_.size() ||
            symbols_[idx].cell != s.cell)
            return -1;
        return idx;
    }

private:
    int L_;
    std::vector<Symbol> symbols_;
    std::vector<int> lookup_;  // first symbol index per cell
};

inline CellRect planar_square(const Word& w, int L) {
    CellRect r;
    r.level = static_cast<int>(w.length());
    for (const Symbol& s : w.letters) {
        r.a = r.a * L + s.cell.col;
        r.b = r.b * L + s.cell.row;
    }
    return r;
}

/// Corner p_i of a cell rect at its own scale: 0 = lower-left, counterclockwise.
inline LatticePoint rect_corner(const CellRect& r, int corner) {
    switch (corner) {
        case 0: return {r.a, r.b};
        case 1: return {r.a + 1, r.b};
        case 2: return {r.a + 1, r.b + 1};
        case 3: return {r.a, r.b + 1};
        default: throw DomainError("corner index must be in 0..3, got " + std::to_string(corner));
    }
}

inline LatticePoint corner_coord(const Word& w, int corner, int L) {
    return rect_corner(planar_square(w, L), corner);
}

/// Lift of a planar isometry to words: planar letters move level by level,
/// sheet indices are kept.
inline Word apply_isometry_word(const SquareIsometry& g, const Word& w, const PilingPattern& p) {
    Word out;
    out.letters.reserve(w.length());
    for (const Symbol& s : w.letters) {
        Symbol img{apply_isometry(g, s.cell, p.side()), s.sheet};
        if (!is_valid_symbol(p, img))
            throw SymmetryError("image of symbol (" + std::to_string(s.cell.col) + "," +
                                std::to_string(s.cell.row) + "," + std::to_string(s.sheet) +
                                ") under " + std::string(g.name()) + " is not a symbol of the pattern");
        out.letters.push_back(img);
    }
    return out;
}

/// Canonical text form "c,r,j|c,r,j|..."; the empty word is "".
inline std::string to_string(const Word& w) {
    std::string out;
    for (std::size_t i = 0; i < w.length(); ++i) {
        if (i) out += '|';
        const auto& s = w.letters[i];
        out += std::to_string(s.cell.col) + ',' + std::to_string(s.cell.row) + ',' +
               std::to_string(s.sheet);
    }
    return out;
}

inline Word parse_word(std::string_view text) {
    Word w;
    if (text.empty()) return w;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t bar = std::min(text.find('|', pos), text.size());
        const std::string_view letter = text.substr(pos, bar - pos);
        int vals[3];
        std::size_t at = 0;
        for (int k = 0; k < 3; ++k) {
            const char* first = letter.data() + at;
            const char* last = letter.data() + letter.size();
            auto [ptr, ec] = std::from_chars(first, last, vals[k]);
            if (ec != std::errc{}) throw StructuralError("malformed word letter '" + std::string(letter) + "'");
            at = static_cast<std::size_t>(ptr - letter.data());
            if (k < 2) {
                if (at >= letter.size() || letter[at] != ',')
                    throw StructuralError("malformed word letter '" + std::string(letter) + "'");
                ++at;
            }
        }
        if (at != letter.size()) throw StructuralError("malformed word letter '" + std::string(letter) + "'");
        w.letters.push_back({{vals[0], vals[1]}, vals[2]});
        if (bar == text.size()) break;
        pos = bar + 1;
    }
    return w;
}

}  // namespace pillow

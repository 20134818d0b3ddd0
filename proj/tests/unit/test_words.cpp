#include <pillow/words.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

using namespace pillow;
using K = SquareIsometry::Kind;

namespace {

Word word(std::initializer_list<Symbol> s) { return Word{std::vector<Symbol>(s)}; }

/// All words of length n over the pattern's alphabet.
std::vector<Word> all_words(const PilingPattern& p, int n) {
    const Alphabet alpha(p);
    std::vector<Word> out{Word{}};
    for (int k = 0; k < n; ++k) {
        std::vector<Word> next;
        for (const auto& w : out)
            for (const auto& s : alpha.symbols()) {
                Word x = w;
                x.letters.push_back(s);
                next.push_back(std::move(x));
            }
        out = std::move(next);
    }
    return out;
}

}  // namespace

TEST(Words, PlanarSquareExamples) {
    EXPECT_EQ(planar_square(Word{}, 3), (CellRect{0, 0, 0}));
    EXPECT_EQ(planar_square(word({{{2, 0}, 0}}), 3), (CellRect{1, 2, 0}));
    EXPECT_EQ(planar_square(word({{{2, 0}, 0}, {{0, 2}, 0}}), 3), (CellRect{2, 6, 2}));
}

TEST(Words, CornerCoordExamples) {
    EXPECT_EQ(corner_coord(Word{}, 2, 3), (LatticePoint{1, 1}));
    EXPECT_EQ(corner_coord(word({{{0, 0}, 0}}), 1, 3), (LatticePoint{1, 0}));
    EXPECT_EQ(corner_coord(word({{{2, 2}, 1}}), 3, 5), (LatticePoint{2, 3}));
    EXPECT_THROW(corner_coord(Word{}, 4, 3), DomainError);
}

TEST(Words, CornersAreDistinct) {
    const auto p = builtin_pattern("pillow5");
    for (const auto& w : all_words(p, 2)) {
        std::set<LatticePoint> pts;
        const auto r = planar_square(w, 5);
        for (int i = 0; i < 4; ++i) pts.insert(corner_coord(w, i, 5));
        EXPECT_EQ(pts.size(), 4u);
        EXPECT_TRUE(pts.count({r.a, r.b}) && pts.count({r.a + 1, r.b + 1}));
    }
}

TEST(Words, IsometryExamples) {
    const auto s3 = builtin_pattern("sierpinski3");
    const auto p5 = builtin_pattern("pillow5");
    const Word w = word({{{0, 1}, 0}, {{2, 1}, 0}});
    EXPECT_EQ(apply_isometry_word(SquareIsometry(K::identity), w, s3), w);
    EXPECT_EQ(apply_isometry_word(SquareIsometry(K::rotate180), word({{{0, 0}, 0}, {{0, 0}, 0}}), s3),
              word({{{2, 2}, 0}, {{2, 2}, 0}}));
    EXPECT_EQ(apply_isometry_word(SquareIsometry(K::rotate90), word({{{2, 2}, 1}}), p5), word({{{2, 2}, 1}}));
}

TEST(Words, IsometryOnAsymmetricPatternIsSymmetryError) {
    // (1,0) carries two sheets but its rotation image (3,1) carries one.
    const PilingPattern p(4, {{1, 1, 1, 1}, {2, 0, 0, 1}, {1, 0, 0, 1}, {1, 1, 1, 1}});
    EXPECT_THROW(apply_isometry_word(SquareIsometry(K::rotate90), word({{{1, 0}, 1}}), p), SymmetryError);
}

TEST(Words, IsometryCommutesWithPlanarSquare) {
    for (const char* name : {"sierpinski3", "pillow5"}) {
        const auto p = builtin_pattern(name);
        const int L = p.side();
        for (int n = 0; n <= (L == 3 ? 3 : 2); ++n) {
            const std::int64_t S = lattice_scale(L, n);
            for (const auto& w : all_words(p, n))
                for (const auto& g : SquareIsometry::group()) {
                    const auto img = apply_isometry_word(g, w, p);
                    const auto r = planar_square(w, L);
                    const auto ri = planar_square(img, L);
                    const auto expect = g.apply_cell({r.a, r.b}, S);
                    EXPECT_EQ(ri.a, expect.x);
                    EXPECT_EQ(ri.b, expect.y);
                    for (std::size_t i = 0; i < w.length(); ++i)
                        EXPECT_EQ(img.letters[i].sheet, w.letters[i].sheet);
                }
        }
    }
}

TEST(Words, WordCountIsNormToTheN) {
    for (const char* name : {"sierpinski3", "pillow5"}) {
        const auto p = builtin_pattern(name);
        EXPECT_EQ(Alphabet(p).size(), static_cast<std::size_t>(p.norm()));
        for (int n = 0; n <= 2; ++n) {
            const auto ws = all_words(p, n);
            std::set<Word> uniq(ws.begin(), ws.end());
            EXPECT_EQ(uniq.size(), static_cast<std::size_t>(std::pow(p.norm(), n)));
        }
    }
}

TEST(Words, TextForm) {
    const Word w = word({{{0, 0}, 0}, {{2, 1}, 0}});
    EXPECT_EQ(to_string(w), "0,0,0|2,1,0");
    EXPECT_EQ(to_string(Word{}), "");
    EXPECT_EQ(parse_word("0,0,0|2,1,0"), w);
    EXPECT_EQ(parse_word(""), Word{});
    EXPECT_THROW(parse_word("0,0"), StructuralError);
    EXPECT_THROW(parse_word("0,0,0|"), StructuralError);
    EXPECT_THROW(parse_word("a,b,c"), StructuralError);
    const auto p = builtin_pattern("pillow5");
    for (const auto& x : all_words(p, 2)) EXPECT_EQ(parse_word(to_string(x)), x);
}

TEST(Words, AlphabetLookup) {
    const auto p = builtin_pattern("pillow5");
    const Alphabet a(p);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.index_of(a[i]), static_cast<int>(i));
    EXPECT_EQ(a.index_of({{1, 1}, 0}), -1);
    EXPECT_EQ(a.index_of({{2, 2}, 2}), -1);
    EXPECT_EQ(a.index_of({{0, 0}, 1}), -1);
    EXPECT_GE(a.index_of({{2, 2}, 1}), 0);
}

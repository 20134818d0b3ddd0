#include <pillow/pattern.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace pillow;
using K = SquareIsometry::Kind;

TEST(Pattern, Sierpinski3IsAdmissible) {
    const auto p = builtin_pattern("sierpinski3");
    EXPECT_EQ(p.side(), 3);
    EXPECT_EQ(p.norm(), 8);
    EXPECT_EQ(p.at(1, 1), 0);
    EXPECT_EQ(p.nonvanish().size(), 8u);
    EXPECT_TRUE(validate_pattern(p).admissible());
}

TEST(Pattern, FullThreeByThreeFailsLowDimension) {
    const PilingPattern p(3, {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
    const auto rep = validate_pattern(p);
    EXPECT_TRUE(rep.pc1.ok);
    EXPECT_TRUE(rep.pc2.ok);
    EXPECT_TRUE(rep.pc3.ok);
    EXPECT_FALSE(rep.pc4.ok);
    EXPECT_FALSE(rep.admissible());
    EXPECT_NE(rep.pc4.detail.find("9"), std::string::npos);
}

TEST(Pattern, Pillow5IsAdmissible) {
    const auto p = builtin_pattern("pillow5");
    // 16 border cells + 4 edge midpoints + center sheet pair
    int total = 0;
    for (int c = 0; c < 5; ++c)
        for (int r = 0; r < 5; ++r) total += p.at(c, r);
    EXPECT_EQ(total, 22);
    EXPECT_EQ(p.norm(), 22);
    EXPECT_EQ(p.at(2, 2), 2);
    EXPECT_EQ(p.at(1, 1), 0);
    EXPECT_EQ(p.at(3, 3), 0);
    EXPECT_EQ(p.at(2, 1), 1);
    const auto rep = validate_pattern(p);
    EXPECT_TRUE(rep.admissible()) << rep.summary();
}

TEST(Pattern, UnknownBuiltinListsNames) {
    try {
        builtin_pattern("bogus");
        FAIL() << "expected LookupError";
    } catch (const LookupError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("sierpinski3"), std::string::npos);
        EXPECT_NE(msg.find("pillow5"), std::string::npos);
    }
}

TEST(Pattern, MalformedGridIsStructuralError) {
    EXPECT_THROW(PilingPattern(2, {{1, 1}, {1, 1}}), StructuralError);
    EXPECT_THROW(PilingPattern(3, {{1, 1, 1}, {1, 0, 1}}), StructuralError);
    EXPECT_THROW(PilingPattern(3, {{1, 1, 1}, {1, 0}, {1, 1, 1}}), StructuralError);
    EXPECT_THROW(PilingPattern(3, {{1, 1, 1}, {1, -1, 1}, {1, 1, 1}}), StructuralError);
}

TEST(Pattern, FailureDetailsPerCondition) {
    // Asymmetric interior, still flat border.
    const PilingPattern asym(4, {{1, 1, 1, 1}, {1, 1, 0, 1}, {1, 0, 0, 1}, {1, 1, 1, 1}});
    EXPECT_FALSE(validate_pattern(asym).pc1.ok);

    // Border cell with multiplicity 2.
    const PilingPattern thick(3, {{2, 1, 2}, {1, 0, 1}, {2, 1, 2}});
    const auto rep = validate_pattern(thick);
    EXPECT_TRUE(rep.pc1.ok);
    EXPECT_FALSE(rep.pc3.ok);
}

TEST(Pattern, ConnectivityModes) {
    // Border ring plus an isolated centre cell at L=5: disconnected either way.
    std::vector<std::vector<int>> cols(5, std::vector<int>(5, 1));
    for (int c = 1; c <= 3; ++c)
        for (int r = 1; r <= 3; ++r) cols[c][r] = 0;
    cols[2][2] = 1;
    const PilingPattern island(5, cols);
    EXPECT_FALSE(validate_pattern(island).pc2.ok);
    EXPECT_FALSE(validate_pattern(island, Connectivity::edge).pc2.ok);

    // Diagonal touching only: cells (0,0) and (1,1) in a 3x3 grid with an
    // otherwise empty grid is not admissible, but tests the adjacency rule.
    const PilingPattern diag(3, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    EXPECT_TRUE(validate_pattern(diag).pc2.ok);
    EXPECT_FALSE(validate_pattern(diag, Connectivity::edge).pc2.ok);
}

TEST(Isometry, KnownImages) {
    EXPECT_EQ(apply_isometry(SquareIsometry(K::identity), {0, 0}, 3), (Cell{0, 0}));
    EXPECT_EQ(apply_isometry(SquareIsometry(K::rotate90), {0, 0}, 3), (Cell{2, 0}));
    EXPECT_EQ(apply_isometry(SquareIsometry(K::reflect_x), {1, 0}, 3), (Cell{1, 0}));
    EXPECT_THROW(apply_isometry(SquareIsometry(K::identity), {3, 0}, 3), DomainError);
    EXPECT_THROW(apply_isometry(SquareIsometry(K::identity), {0, -1}, 3), DomainError);
}

TEST(Isometry, GroupAxioms) {
    const auto G = SquareIsometry::group();
    std::set<K> kinds;
    for (const auto& g : G) kinds.insert(g.kind());
    EXPECT_EQ(kinds.size(), 8u);

    for (const auto& a : G) {
        // closure
        for (const auto& b : G) {
            const auto c = a.compose(b);
            bool found = false;
            for (const auto& g : G) found = found || g == c;
            EXPECT_TRUE(found);
        }
        // involution or order 4
        const auto a2 = a.compose(a);
        const auto a4 = a2.compose(a2);
        EXPECT_TRUE(a2 == SquareIsometry() || (a4 == SquareIsometry() && !(a2 == SquareIsometry())));
        EXPECT_EQ(a.compose(a.inverse()), SquareIsometry());
    }
}

TEST(Isometry, ActsBijectivelyAndCompatibly) {
    const auto G = SquareIsometry::group();
    for (int L : {3, 4, 5, 6}) {
        for (const auto& g : G) {
            std::set<Cell> images;
            for (int c = 0; c < L; ++c)
                for (int r = 0; r < L; ++r) images.insert(apply_isometry(g, {c, r}, L));
            EXPECT_EQ(images.size(), static_cast<std::size_t>(L * L));
        }
        // Orbit counting over the whole group: each cell is fixed by exactly
        // |stabiliser| elements, and composed actions agree with composition.
        for (int c = 0; c < L; ++c)
            for (int r = 0; r < L; ++r) {
                int returns = 0;
                std::set<Cell> orbit;
                for (const auto& g : G) {
                    const Cell img = apply_isometry(g, {c, r}, L);
                    orbit.insert(img);
                    returns += img == Cell{c, r};
                    for (const auto& h : G)
                        EXPECT_EQ(apply_isometry(g, apply_isometry(h, {c, r}, L), L),
                                  apply_isometry(g.compose(h), {c, r}, L));
                }
                EXPECT_EQ(returns * static_cast<int>(orbit.size()), 8);
            }
    }
}

TEST(Pattern, AdmissibilityIsInvariantUnderIsometries) {
    std::mt19937 rng(7);
    std::vector<PilingPattern> samples{builtin_pattern("sierpinski3"), builtin_pattern("pillow5")};
    for (int t = 0; t < 40; ++t) {
        const int L = 3 + static_cast<int>(rng() % 4);
        std::vector<std::vector<int>> cols(L, std::vector<int>(L));
        for (auto& col : cols)
            for (auto& v : col) v = static_cast<int>(rng() % 3);
        samples.emplace_back(L, cols);
    }
    for (const auto& p : samples) {
        const auto base = validate_pattern(p);
        for (const auto& g : SquareIsometry::group()) {
            const auto img = validate_pattern(p.transformed(g));
            EXPECT_EQ(img.admissible(), base.admissible());
            EXPECT_EQ(img.pc1.ok, base.pc1.ok);
            EXPECT_EQ(img.pc2.ok, base.pc2.ok);
            EXPECT_EQ(img.pc3.ok, base.pc3.ok);
            EXPECT_EQ(img.pc4.ok, base.pc4.ok);
        }
        if (base.pc4.ok) {
            EXPECT_LE(p.norm(), p.side() * p.side() - 1);
        }
    }
}

TEST(Pattern, RowsRoundTrip) {
    const auto p = builtin_pattern("pillow5");
    EXPECT_EQ(PilingPattern::from_rows(5, p.rows()), p);
    // row 0 is the bottom row
    const auto q = PilingPattern::from_rows(3, {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    EXPECT_EQ(q.at(0, 0), 1);
    EXPECT_EQ(q.at(2, 0), 3);
    EXPECT_EQ(q.at(0, 2), 7);
}

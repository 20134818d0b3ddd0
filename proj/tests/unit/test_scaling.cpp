#include <pillow/scaling.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace pillow;

TEST(Estimate, GeometricSequence) {
    std::vector<double> R;
    for (int n = 0; n <= 6; ++n) R.push_back(std::pow(2.0, n));
    const auto e = estimate_rho(R);
    EXPECT_DOUBLE_EQ(e.rho_hat, 2.0);
    EXPECT_NEAR(e.slope_rate, 2.0, 1e-12);
    EXPECT_NEAR(e.regression_residual, 0.0, 1e-12);
    EXPECT_NEAR(e.spread, 0.0, 1e-15);
    EXPECT_NEAR(e.last_two_spread, 0.0, 1e-15);
    for (double f : e.fekete) EXPECT_NEAR(f, 0.0, 1e-12);
}

TEST(Estimate, NeedsFourLevels) {
    EXPECT_THROW(estimate_rho(std::vector<double>{1.0, 2.0, 4.0}), DomainError);
    EXPECT_THROW(estimate_rho(std::vector<double>{1.0, 2.0, 0.0, 4.0}), DomainError);
}

TEST(Estimate, AprioriRate) {
    EXPECT_DOUBLE_EQ(rho_a(3), 9.0 / 8.0);
    EXPECT_DOUBLE_EQ(rho_a(5), 25.0 / 24.0);
    EXPECT_NEAR(holder_exponent(3), std::log(9.0 / 8.0) / std::log(3.0), 1e-15);
}

TEST(Table, FirstRows) {
    const auto t = resistance_table(builtin_pattern("sierpinski3"), 1);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_NEAR(t.rows[0].R, 0.75, 1e-10);
    EXPECT_NEAR(t.rows[0].Rbar, 0.5, 1e-10);
    EXPECT_NEAR(t.rows[1].R, 181.0 / 112.0, 1e-10);
    EXPECT_NEAR(t.rows[1].Rbar, 0.75, 1e-10);
    EXPECT_EQ(t.rows[0].vertices, 4u);
    EXPECT_EQ(t.rows[1].vertices, 16u);
    EXPECT_NEAR(t.rows[1].ratio_R, (181.0 / 112.0) / 0.75, 1e-10);
    EXPECT_EQ(t.truncated(0).rows.size(), 1u);
}

TEST(Table, RejectsNegativeLevel) { EXPECT_THROW(resistance_table(builtin_pattern("pillow5"), -1), DomainError); }

TEST(Constants, HandComputedFromSmallTable) {
    ScalingTable t;
    t.L = 3;
    t.rows = {{0, 1.0, 0.5, 0, 0, 0, 4, 1}, {1, 2.0, 1.0, 2, 2, 0, 16, 3}, {2, 4.0, 2.0, 2, 2, 0, 64, 4}};
    const auto c = observed_constants(t);
    EXPECT_DOUBLE_EQ(c.c_dagger, 1.0);
    EXPECT_DOUBLE_EQ(c.c_d, 2.0);
    EXPECT_DOUBLE_EQ(c.c_c, 2.0);
    EXPECT_DOUBLE_EQ(c.apriori_margin, 0.5);
    EXPECT_EQ(c.c_ulf, 4);
    EXPECT_DOUBLE_EQ(c.c_rd, 1.0);
}

TEST(Constants, SierpinskiReportPasses) {
    const auto rep = verify_inequalities(builtin_pattern("sierpinski3"), 4);
    EXPECT_TRUE(rep.passed());
    ASSERT_NE(rep.find("rho_hat"), nullptr);
    EXPECT_GT(rep.find("rho_hat")->observed, 1.0);
    for (const auto& c : rep.checks) EXPECT_TRUE(std::isfinite(c.observed)) << c.name;
    EXPECT_GE(rep.constants.apriori_margin, 1.0 / (4.0 * rep.constants.c_ulf));
}

TEST(Constants, StabilityFailureIsReported) {
    ScalingTable t;
    t.L = 3;
    for (int n = 0; n <= 3; ++n) t.rows.push_back({n, std::pow(2.0, n), 0.5, 0, 0, 0, 4, 1});
    t.rows[3].R = 40.0;
    const auto rep = verify_inequalities(t);
    EXPECT_FALSE(rep.passed());
    EXPECT_EQ(rep.find("c_d")->status, CheckStatus::fail);
}

TEST(Holder, LinearProfileAlongRows) {
    const auto p = builtin_pattern("sierpinski3");
    const auto g = build_graph(p, 3);
    std::vector<double> f(g.vertex_count());
    for (std::size_t v = 0; v < f.size(); ++v)
        f[v] = static_cast<double>(g.vertex(static_cast<int>(v)).point.x) / static_cast<double>(g.scale());
    HolderOptions o;
    o.aligned_only = true;
    const auto fit = holder_profile(g, f, 1.0, o);
    ASSERT_FALSE(fit.degenerate);
    EXPECT_NEAR(fit.theta_hat, 2.0, 0.2);
    EXPECT_GT(fit.pairs, 100u);
}

TEST(Holder, ConstantIsDegenerate) {
    const auto g = build_graph(builtin_pattern("pillow5"), 1);
    EXPECT_TRUE(holder_profile(g, std::vector<double>(g.vertex_count(), 3.0), 1.0).degenerate);
    EXPECT_TRUE(holder_profile(g, std::vector<double>(g.vertex_count(), 3.0), 0.0).degenerate);
    EXPECT_THROW(holder_profile(g, std::vector<double>(3), 1.0), DomainError);
}

TEST(Holder, BorderMinimiserBeatsTheAprioriExponent) {
    const auto p = builtin_pattern("sierpinski3");
    const auto g = build_graph(p, 4);
    const auto rb = border_resistance(g);
    const auto fit = holder_profile(g, rb.potential, rb.energy);
    ASSERT_FALSE(fit.degenerate);
    EXPECT_GE(fit.theta_hat, fit.theta_h);
    EXPECT_GT(fit.c_bound, 0.0);
    EXPECT_FALSE(fit.hop_histogram.empty());
}

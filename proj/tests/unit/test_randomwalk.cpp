#include <pillow/randomwalk.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace pillow;

namespace {

WalkOptions with(std::uint64_t samples, std::uint64_t seed = 1) {
    WalkOptions o;
    o.samples = samples;
    o.seed = seed;
    return o;
}

}  // namespace

TEST(Walk, FourCycleAdjacentCorners) {
    const auto g = build_graph(builtin_pattern("sierpinski3"), 0);
    const auto w = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], with(40000));
    EXPECT_NEAR(w.estimate, 0.75, 3.0 * w.stderr_);
    EXPECT_EQ(w.samples, 40000u);
    EXPECT_FALSE(w.truncated);
    EXPECT_GT(w.stderr_, 0.0);
}

TEST(Walk, FourCycleOppositeCorners) {
    const auto g = build_graph(builtin_pattern("pillow5"), 0);
    const auto w = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[2], with(40000, 3));
    EXPECT_NEAR(w.estimate, 1.0, 3.0 * w.stderr_);
}

TEST(Walk, AgreesWithSolverOnLevelTwo) {
    for (const char* name : {"sierpinski3", "pillow5"}) {
        const auto g = build_graph(builtin_pattern(name), 2);
        const double exact = corner_resistance(g).value;
        const auto w = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], with(20000, 7));
        EXPECT_NEAR(w.estimate, exact, 3.0 * w.stderr_) << name;
    }
}

TEST(Walk, MultiplicityWeights) {
    const auto g = build_graph(builtin_pattern("pillow5"), 1);
    ResistanceOptions ro;
    ro.energy = EnergyConvention::multiplicity;
    const double exact = corner_resistance(g, 0, 1, ro).value;
    auto o = with(20000, 11);
    o.energy = EnergyConvention::multiplicity;
    const auto w = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], o);
    EXPECT_NEAR(w.estimate, exact, 3.0 * w.stderr_);
}

TEST(Walk, SeedDeterminism) {
    const auto g = build_graph(builtin_pattern("sierpinski3"), 1);
    const auto a = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], with(5000, 42));
    const auto b = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], with(5000, 42));
    const auto c = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], with(5000, 43));
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.stderr_, b.stderr_);
    EXPECT_EQ(a.steps, b.steps);
    EXPECT_NE(a.estimate, c.estimate);
}

TEST(Walk, WorkerCountDoesNotChangeTheResult) {
    const auto g = build_graph(builtin_pattern("sierpinski3"), 2);
    auto o = with(6000, 5);
    o.batch_size = 500;
    const auto one = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], o);
    o.workers = 3;
    const auto three = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], o);
    EXPECT_EQ(one.estimate, three.estimate);
    EXPECT_EQ(one.steps, three.steps);
}

TEST(Walk, StandardErrorShrinksWithSamples) {
    const auto g = build_graph(builtin_pattern("sierpinski3"), 1);
    const auto a = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], with(4000, 2));
    const auto b = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], with(64000, 2));
    const double ratio = a.stderr_ / b.stderr_;
    EXPECT_GT(ratio, 3.0);
    EXPECT_LT(ratio, 5.3);
}

TEST(Walk, Errors) {
    const auto g = build_graph(builtin_pattern("sierpinski3"), 1);
    EXPECT_THROW(commute_time_resistance(g, 0, 0, with(10)), DomainError);
    EXPECT_THROW(commute_time_resistance(g, 0, 99, with(10)), DomainError);
    EXPECT_THROW(commute_time_resistance(g, -1, 1, with(10)), DomainError);
    EXPECT_THROW(commute_time_resistance(g, 0, 1, with(0)), DomainError);
    auto o = with(10);
    o.batch_size = 0;
    EXPECT_THROW(commute_time_resistance(g, 0, 1, o), DomainError);
}

TEST(Walk, StepCap) {
    const auto g = build_graph(builtin_pattern("sierpinski3"), 2);
    auto o = with(10000, 1);
    o.batch_size = 100;
    o.step_cap = 200000;
    const auto w = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], o);
    EXPECT_TRUE(w.truncated);
    EXPECT_LT(w.samples, 10000u);
    EXPECT_LE(w.steps, 200000u);
    EXPECT_GT(w.samples, 0u);
    o.step_cap = 10;
    EXPECT_THROW(commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], o), BudgetError);
}

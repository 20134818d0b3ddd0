// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <pillow/pillow.hpp>

#include "../unit/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

using namespace pillow;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [violated: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void criterion(int id, const char* title, double time_limit, const std::function<void(Outcome&)>& body) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail << " [exception: " << e.what() << "]";
    }
    const double dt = seconds_since(t0);
    if (time_limit > 0.0 && dt >= time_limit) {
        out.pass = false;
        out.detail << " [runtime " << dt << " s over " << time_limit << " s]";
    }
    if (!out.pass) ++failures;
    std::printf("%s %d %s:%s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, title, out.detail.str().c_str(), dt);
    std::fflush(stdout);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> random_function(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(n);
    for (auto& x : f) x = u(rng);
    return f;
}

// Square ring of width one around an empty centre.
PilingPattern ring4() { return PilingPattern::from_rows(4, {{1, 1, 1, 1}, {1, 0, 0, 1}, {1, 0, 0, 1}, {1, 1, 1, 1}}); }

// Full grid with the four interior corner cells removed.
PilingPattern plus5() {
    return PilingPattern::from_rows(
        5, {{1, 1, 1, 1, 1}, {1, 0, 1, 0, 1}, {1, 1, 1, 1, 1}, {1, 0, 1, 0, 1}, {1, 1, 1, 1, 1}});
}

}  // namespace

int main() {
    const auto sierpinski = builtin_pattern("sierpinski3");
    const auto pillow = builtin_pattern("pillow5");
    const std::vector<std::pair<std::string, PilingPattern>> builtins{{"sierpinski3", sierpinski},
                                                                      {"pillow5", pillow}};
    const RegressionStore pins(std::string(PILLOW_SOURCE_DIR) + "/data/regression.json");

    criterion(1, "exact small-case values", 1.0, [&](Outcome& o) {
        std::vector<std::pair<std::string, PilingPattern>> all = builtins;
        all.emplace_back("ring4", ring4());
        all.emplace_back("plus5", plus5());
        for (const auto& [name, p] : all) {
            const double r0 = corner_resistance(p, 0).value;
            const double rb0 = border_resistance(p, 0).value;
            o.require(std::abs(r0 - 0.75) <= 1e-10, name + " R_0 = 3/4");
            o.require(std::abs(rb0 - 0.5) <= 1e-10, name + " Rbar_0 = 1/2");
        }
        const double rb1 = border_resistance(sierpinski, 1).value;
        o.require(std::abs(rb1 - 0.75) <= 1e-10, "sierpinski3 Rbar_1 = 3/4");
        o.detail << " R_0 = 3/4 and Rbar_0 = 1/2 on " << all.size() << " patterns; sierpinski3 Rbar_1 = " << rb1;
    });

    criterion(2, "quotient-construction oracles", 10.0, [&](Outcome& o) {
        const auto s1 = build_graph(sierpinski, 1);
        const auto p1 = build_graph(pillow, 1);
        o.require(s1.vertex_count() == 16 && s1.edges().size() == 24, "sierpinski3 V_1 = (16, 24)");
        o.require(p1.vertex_count() == 36 && p1.edges().size() == 60, "pillow5 V_1 = (36, 60)");
        int compared = 0;
        for (const auto& [name, p] : std::vector<std::pair<std::string, PilingPattern>>{
                 {"sierpinski3", sierpinski}, {"ring4", ring4()}, {"plus5", plus5()}}) {
            for (int n = 0; n <= 3; ++n) {
                const auto g = build_graph(p, n);
                const auto expect = testing_oracle::planar_corner_count(p, n);
                o.require(g.vertex_count() == expect, name + " level " + std::to_string(n) + " vertex count");
                ++compared;
            }
        }
        o.detail << " V_1 sizes (" << s1.vertex_count() << "," << s1.edges().size() << ") and ("
                 << p1.vertex_count() << "," << p1.edges().size() << "); " << compared
                 << " planar-count comparisons";
    });

    criterion(3, "Schur fidelity", 0.0, [&](Outcome& o) {
        double worst = 0.0;
        for (int m = 0; m <= 4; ++m) {
            const auto g = build_graph(sierpinski, m);
            const auto t = trace_form(g, 0);
            const double r = effective_resistance(t.form(), {0}, {1}).value;
            const double ref = corner_resistance(g).value;
            worst = std::max(worst, rel(r, ref));
        }
        o.require(worst <= 1e-8, "trace resistance within 1e-8 relative");
        const auto g4 = build_graph(sierpinski, 4);
        const auto g2 = build_graph(sierpinski, 2);
        const auto g1 = build_graph(sierpinski, 1);
        const auto two = trace_form(trace_form(g4, 2).form(), level_embedding(g1, g2));
        const auto one = trace_form(g4, 1);
        const double err = (two.op - one.op).cwiseAbs().maxCoeff();
        o.require(err <= 1e-8, "transitivity within 1e-8");
        o.detail << " worst relative resistance error " << worst << "; V4->V2->V1 vs V4->V1 max entry error "
                 << err;
    });

    criterion(4, "kernel suite", 120.0, [&](Outcome& o) {
        double partition = 0.0, reflection = 0.0, pek4 = 0.0;
        for (const auto& [name, p] : builtins) {
            for (int k = 0; k <= 4; ++k) {
                const auto ks = pre_extension_kernels(p, k);
                const auto& c = ks.checks;
                const std::string at = name + " k=" + std::to_string(k);
                o.require(c.partition_error <= 1e-9 && c.range_error <= 1e-9, at + " partition of unity");
                o.require(c.corner_values && c.side_zeros, at + " corner and side values");
                o.require(c.rotation_images, at + " rotation images");
                o.require(c.reflection_error <= 1e-9, at + " diagonal reflection");
                o.require(c.pek4 <= 272.0, at + " D_k(psi_i) Rbar_k <= 272");
                partition = std::max({partition, c.partition_error, c.range_error});
                reflection = std::max(reflection, c.reflection_error);
                pek4 = std::max(pek4, c.pek4);
            }
        }
        o.detail << " max partition error " << partition << ", max reflection error " << reflection
                 << ", max D_k(psi_i) Rbar_k " << pek4;
    });

    criterion(5, "inequality stability", 600.0, [&](Outcome& o) {
        int compared = 0;
        for (const auto& [name, p, N] : std::vector<std::tuple<std::string, PilingPattern, int>>{
                 {"sierpinski3", sierpinski, 5}, {"pillow5", pillow, 3}}) {
            const auto rep = verify_inequalities(p, N);
            for (const char* key : {"c_dagger", "c_c", "c_d", "apriori_margin"}) {
                const auto* c = rep.find(key);
                o.require(c != nullptr && std::isfinite(c->observed) && std::isfinite(c->previous),
                          name + " " + key + " finite");
                if (c == nullptr) continue;
                o.require(std::abs(c->observed - c->previous) < 0.25 * std::abs(c->previous),
                          name + " " + key + " changes by < 25%");
                o.detail << " " << name << " " << key << " " << c->observed << " (N-1: " << c->previous << ");";
                const auto pinned = pins.pinned(name + "/" + key + "@N" + std::to_string(N));
                if (pinned) {
                    o.require(rel(c->observed, *pinned) <= 1e-6, name + " " + key + " regression");
                    ++compared;
                }
            }
            const auto est = estimate_rho(rep.table);
            o.require(est.rho_hat > 1.0, name + " rho_hat > 1");
            o.detail << " " << name << " rho_hat " << est.rho_hat << ";";
            if (name == "sierpinski3") {
                o.require(est.last_two_spread < 0.05, "sierpinski3 last-two-ratio spread < 5%");
                o.detail << " last-two spread " << est.last_two_spread << ";";
            }
            for (const auto& row : rep.table.rows) {
                const auto pinned = pins.pinned(name + "/R_" + std::to_string(row.n));
                if (pinned) {
                    o.require(rel(row.R, *pinned) <= 1e-6, name + " R_" + std::to_string(row.n) + " regression");
                    ++compared;
                }
            }
        }
        o.require(compared > 0, "pinned regression values present");
        o.detail << " " << compared << " pinned values compared";
    });

    criterion(6, "energy-reduction sandwich", 0.0, [&](Outcome& o) {
        std::mt19937_64 rng(6);
        int violations = 0, tested = 0;
        for (const auto& [name, p] : builtins) {
            for (int m = 1; m <= 4; ++m) {
                const auto gm = build_graph(p, m);
                const double c_ulf = ulf_stats(gm).max_cell_incidence;
                std::vector<CarpetGraph> subs;
                for (int n = 1; n <= m; ++n) subs.push_back(build_graph(p, m - n));
                for (int t = 0; t < 100; ++t) {
                    const auto f = random_function(gm.vertex_count(), rng);
                    for (const auto& sub : subs) {
                        const auto r = reduction_sum(gm, sub, f);
                        const double slack = 1e-12 * r.cell_sum;
                        ++tested;
                        if (r.cell_sum / c_ulf > r.energy + slack || r.energy > r.cell_sum + slack) ++violations;
                    }
                }
            }
        }
        o.require(violations == 0, "zero violations");
        o.detail << " " << violations << " violations in " << tested << " comparisons (100 random f per level)";
    });

    criterion(7, "Monte Carlo cross-check", 0.0, [&](Outcome& o) {
        const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
        double worst_z = 0.0;
        for (const auto& [name, p] : builtins) {
            for (int n = 0; n <= 3; ++n) {
                const auto g = build_graph(p, n);
                const double exact = corner_resistance(g).value;
                WalkOptions w;
                w.samples = 100000;
                w.seed = 1;
                w.workers = workers;
                w.step_cap = 100000000000ULL;
                const auto est = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], w);
                const double z = std::abs(est.estimate - exact) / est.stderr_;
                worst_z = std::max(worst_z, z);
                const std::string at = name + " n=" + std::to_string(n);
                o.require(!est.truncated && est.samples == w.samples, at + " all samples completed");
                o.require(z <= 3.0, at + " within 3 standard errors");
                o.detail << " " << at << " z=" << z << ";";
            }
        }
        const auto g = build_graph(sierpinski, 2);
        WalkOptions w;
        w.samples = 10000;
        w.seed = 77;
        const auto a = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], w);
        const auto b = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], w);
        w.workers = 4;
        const auto c = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], w);
        o.require(a.estimate == b.estimate && a.stderr_ == b.stderr_ && a.steps == b.steps, "same seed repeats");
        o.require(a.estimate == c.estimate && a.steps == c.steps, "worker count does not matter");
        o.detail << " worst z " << worst_z << "; fixed-seed reruns identical";
    });

    criterion(8, "symmetry", 0.0, [&](Outcome& o) {
        int autos = 0;
        double spread = 0.0;
        for (const auto& [name, p] : builtins) {
            for (int n = 0; n <= 3; ++n) {
                const auto g = build_graph(p, n);
                for (const auto& iso : SquareIsometry::group()) {
                    const bool ok = is_automorphism(g, vertex_permutation(g, iso), iso);
                    o.require(ok, name + " level " + std::to_string(n) + " " + std::string(iso.name()));
                    autos += ok ? 1 : 0;
                }
                double lo = INFINITY, hi = -INFINITY;
                for (int i = 0; i < 4; ++i) {
                    const double r = corner_resistance(g, i, (i + 1) % 4).value;
                    lo = std::min(lo, r);
                    hi = std::max(hi, r);
                }
                o.require(hi - lo <= 1e-10, name + " level " + std::to_string(n) + " adjacent corners agree");
                spread = std::max(spread, hi - lo);
            }
        }
        o.detail << " " << autos << " automorphisms verified; max adjacent-corner spread " << spread;
    });

    criterion(9, "half-plane bound", 0.0, [&](Outcome& o) {
        double worst = INFINITY;
        auto all = builtins;
        all.emplace_back("ring4", ring4());  // even L
        for (const auto& [name, p] : all) {
            for (int n = 0; n <= 4; ++n) {
                const auto g = build_graph(p, n);
                const auto h = border_resistance(g).potential;
                const std::int64_t half2 = g.scale();  // compare 2x <= L^n
                double low = INFINITY;
                for (std::size_t v = 0; v < h.size(); ++v)
                    if (2 * g.vertex(static_cast<int>(v)).point.x <= half2) low = std::min(low, h[v]);
                o.require(low >= 0.5 - 1e-9, name + " n=" + std::to_string(n));
                worst = std::min(worst, low);
            }
        }
        o.detail << " smallest h on the left half " << worst << " (L = 3, 5 and 4)";
    });

    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

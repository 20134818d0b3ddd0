#pragma once

// The full verification suite behind `pillow verify`.

#include <pillow/carpet.hpp>
#include <pillow/energy.hpp>
#include <pillow/error.hpp>
#include <pillow/io.hpp>
#include <pillow/pattern.hpp>
#include <pillow/randomwalk.hpp>
#include <pillow/scaling.hpp>
#include <pillow/trace.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace pillow {

enum ExitCode : int { exit_pass = 0, exit_violation = 1, exit_invalid_pattern = 2, exit_solver_failure = 3 };

struct VerifyCheck {
    std::string name;
    std::string status;  // pass, fail, skip or unpinned
    Json observed;
    Json expected;
    Json tolerance;
};

struct VerifyReport {
    std::string pattern;
    std::vector<VerifyCheck> checks;
    int exit_code = exit_pass;
    Json metadata;

    Json to_json() const {
        Json cs = Json::array();
        for (const auto& c : checks)
            cs.push_back({{"name", c.name},
                          {"status", c.status},
                          {"observed", c.observed},
                          {"expected", c.expected},
                          {"tolerance", c.tolerance}});
        Json out{{"pattern", pattern}, {"checks", cs}, {"exit", exit_code}};
        if (!metadata.is_null()) out["metadata"] = metadata;
        return out;
    }

    bool failed(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c.status == "fail";
        return false;
    }
};

struct VerifyOptions {
    std::string regression_file;  // empty: no regression comparison
    bool bless = false;
    int kernel_max_level = 4;
    int trace_max_level = 4;
    int sandwich_max_level = 4;
    int sandwich_samples = 20;
    int walk_max_level = 2;
};

namespace detail {

/// Distinct corner points of the kept level-n planar squares. Equals the
/// vertex count whenever no cell is piled.
inline std::size_t planar_vertex_count(const PilingPattern& p, int n) {
    const std::int64_t L = p.side();
    std::vector<std::pair<std::int64_t, std::int64_t>> squares{{0, 0}};
    for (int k = 0; k < n; ++k) {
        std::vector<std::pair<std::int64_t, std::int64_t>> next;
        next.reserve(squares.size() * p.nonvanish().size());
        for (auto [a, b] : squares)
            for (const Cell& q : p.nonvanish()) next.emplace_back(a * L + q.col, b * L + q.row);
        squares = std::move(next);
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> pts;
    pts.reserve(squares.size() * 4);
    for (auto [a, b] : squares)
        for (int dx = 0; dx <= 1; ++dx)
            for (int dy = 0; dy <= 1; ++dy) pts.emplace_back(a + dx, b + dy);
    std::sort(pts.begin(), pts.end());
    return static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
}

inline bool unpiled(const PilingPattern& p) {
    for (const Cell& q : p.nonvanish())
        if (p.at(q) > 1) return false;
    return true;
}

inline bool is_connected(const CarpetGraph& g) {
    const auto n = g.vertex_count();
    if (n == 0) return false;
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int u : g.neighbours(v))
            if (!seen[u]) {
                seen[u] = 1;
                ++reached;
                stack.push_back(u);
            }
    }
    return reached == n;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace detail

/// Runs every stage in order. Pattern problems end the run with exit 2,
/// solver failures with exit 3; property violations give exit 1 once all
/// stages have run.
inline VerifyReport run_verify(const RunConfig& cfg, const VerifyOptions& vopt = {}) {
    VerifyReport rep;
    rep.pattern = cfg.pattern;
    auto add = [&](std::string name, bool ok, Json observed, Json expected, Json tol = nullptr) {
        rep.checks.push_back({std::move(name), ok ? "pass" : "fail", std::move(observed), std::move(expected),
                              std::move(tol)});
    };
    auto skip = [&](std::string name, std::string why) {
        rep.checks.push_back({std::move(name), "skip", nullptr, std::move(why), nullptr});
    };

    cfg.validate();
    const int N = cfg.max_level;
    const auto ropts = cfg.resistance_options();

    std::optional<PilingPattern> loaded;
    try {
        loaded = load_pattern(cfg.pattern);
    } catch (const Error& e) {
        add("pattern.load", false, e.what(), "a readable pattern");
        rep.exit_code = exit_invalid_pattern;
        return rep;
    }
    const PilingPattern& p = *loaded;
    rep.metadata = metadata(p, cfg);

    const auto adm = validate_pattern(p, cfg.connectivity);
    add("admissibility", adm.admissible(), adm.summary(), "admissible");
    if (!adm.admissible()) {
        rep.exit_code = exit_invalid_pattern;
        return rep;
    }

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto random_function = [&](std::size_t n) {
        std::vector<double> f(n);
        for (auto& x : f) x = unit(rng);
        return f;
    };
    const std::string key_prefix = [&] {
        for (const auto& name : builtin_pattern_names())
            if (cfg.pattern == name) return name;
        return "pattern-" + pattern_hash(p);
    }();
    std::vector<std::pair<std::string, double>> regression;

    auto stage = [&](const std::function<void()>& body, const std::string& name) -> bool {
        try {
            body();
            return true;
        } catch (const SolverError& e) {
            add(name, false, e.what(), "solver convergence");
            rep.exit_code = exit_solver_failure;
        } catch (const BudgetError& e) {
            add(name, false, e.what(), "within the cell budget");
            rep.exit_code = exit_solver_failure;
        } catch (const InadmissibleError& e) {
            add(name, false, e.what(), "admissible pattern");
            rep.exit_code = exit_invalid_pattern;
        } catch (const Error& e) {
            add(name, false, e.what(), "no error");
            rep.exit_code = exit_violation;
            return true;
        }
        return false;
    };

    const int graph_top = std::min(N, 3);
    const bool ok_graph = stage(
        [&] {
            const bool flat = detail::unpiled(p);
            for (int n = 0; n <= graph_top; ++n) {
                const auto g = build_graph(p, n, ropts.build);
                const std::string lv = ".n" + std::to_string(n);
                const auto u = ulf_stats(g);
                add("graph.ulf" + lv, u.incidence_ok && u.degree_ok, u.max_cell_incidence,
                    "max cell incidence <= " + std::to_string(u.incidence_bound) + ", degree <= 4 * incidence");
                add("graph.connected" + lv, detail::is_connected(g), g.vertex_count(), "one component");
                int autos = 0;
                for (const auto& iso : SquareIsometry::group())
                    if (is_automorphism(g, vertex_permutation(g, iso), iso)) ++autos;
                add("graph.symmetry" + lv, autos == 8, autos, 8);
                if (flat) {
                    const auto planar = detail::planar_vertex_count(p, n);
                    add("graph.planar_count" + lv, planar == g.vertex_count(), g.vertex_count(), planar);
                }
            }
            if (!flat) skip("graph.planar_count", "pattern has piled cells");
        },
        "graph");
    if (!ok_graph) return rep;

    const int sandwich_top = std::min(N, vopt.sandwich_max_level);
    const bool ok_sandwich = stage(
        [&] {
            if (sandwich_top < 1) {
                skip("sandwich", "needs max level >= 1");
                return;
            }
            const auto gm = build_graph(p, sandwich_top, ropts.build);
            const int c_ulf = ulf_stats(gm).max_cell_incidence;
            int violations = 0, tested = 0;
            for (int n = 1; n <= sandwich_top; ++n) {
                const auto sub = build_graph(p, sandwich_top - n, ropts.build);
                for (int t = 0; t < vopt.sandwich_samples; ++t) {
                    const auto f = random_function(gm.vertex_count());
                    const auto r = reduction_sum(gm, sub, f, cfg.energy);
                    const double slack = 1e-12 * r.cell_sum;
                    ++tested;
                    if (r.cell_sum / c_ulf > r.energy + slack || r.energy > r.cell_sum + slack) ++violations;
                }
            }
            add("sandwich.m" + std::to_string(sandwich_top), violations == 0,
                Json{{"violations", violations}, {"tested", tested}, {"c_ulf", c_ulf}}, "zero violations", 1e-12);
        },
        "sandwich");
    if (!ok_sandwich) return rep;

    const int trace_top = std::min(N, vopt.trace_max_level);
    const bool ok_trace = stage(
        [&] {
            TraceOptions topts;
            topts.solver = ropts.solver;
            topts.energy = cfg.energy;
            for (int m = 0; m <= trace_top; ++m) {
                const auto g = build_graph(p, m, ropts.build);
                const auto t = trace_form(g, 0, topts);
                const double r = effective_resistance(t.form(), {0}, {1}, ropts.solver).value;
                const double ref = corner_resistance(g, 0, 1, ropts).value;
                add("trace.resistance.m" + std::to_string(m), detail::rel_diff(r, ref) <= 1e-8, r, ref, 1e-8);
            }
            if (trace_top >= 2) {
                const int mid = std::max(1, trace_top / 2);
                const int low = mid - 1;
                const auto gm = build_graph(p, trace_top, ropts.build);
                const auto gmid = build_graph(p, mid, ropts.build);
                const auto glow = build_graph(p, low, ropts.build);
                const auto two = trace_form(trace_form(gm, mid, topts).form(), level_embedding(glow, gmid), topts);
                const auto one = trace_form(gm, low, topts);
                const double err = (two.op - one.op).cwiseAbs().maxCoeff();
                add("trace.transitivity." + std::to_string(trace_top) + "-" + std::to_string(mid) + "-" +
                        std::to_string(low),
                    err <= 1e-8, err, 0.0, 1e-8);
            } else {
                skip("trace.transitivity", "needs max level >= 2");
            }
        },
        "trace");
    if (!ok_trace) return rep;

    const int kernel_top = std::min(N, vopt.kernel_max_level);
    const bool ok_kernels = stage(
        [&] {
            for (int k = 0; k <= kernel_top; ++k) {
                const auto ks = pre_extension_kernels(build_graph(p, k, ropts.build), ropts);
                const auto& c = ks.checks;
                const std::string lv = ".k" + std::to_string(k);
                add("kernels.partition" + lv, c.partition_error <= 1e-9 && c.range_error <= 1e-9,
                    std::max(c.partition_error, c.range_error), 0.0, 1e-9);
                add("kernels.boundary" + lv, c.corner_values && c.side_zeros,
                    c.corner_values && c.side_zeros, true);
                add("kernels.rotation" + lv, c.rotation_images && c.reflection_error <= 1e-9, c.reflection_error,
                    0.0, 1e-9);
                add("kernels.energy" + lv, c.pek4 <= 272.0, c.pek4, "<= 272");
            }
        },
        "kernels");
    if (!ok_kernels) return rep;

    const bool ok_extension = stage(
        [&] {
            if (N < 1) {
                skip("extension", "needs max level >= 1");
                return;
            }
            const int m = std::min(N, 3);
            const auto g1 = build_graph(p, 1, ropts.build);
            std::vector<std::vector<double>> inputs;
            std::vector<double> lin(g1.vertex_count());
            for (std::size_t v = 0; v < lin.size(); ++v)
                lin[v] = static_cast<double>(g1.vertex(static_cast<int>(v)).point.x);
            inputs.push_back(std::move(lin));
            for (int t = 0; t < 3; ++t) inputs.push_back(random_function(g1.vertex_count()));
            double worst_overlap = 0.0, worst_range = 0.0, max_ratio = 0.0;
            bool exact = true;
            for (const auto& f : inputs) {
                const auto r = extend(p, 1, m, f, ropts);
                worst_overlap = std::max(worst_overlap, r.overlap_error);
                worst_range = std::max(worst_range, r.cell_range_error);
                max_ratio = std::max(max_ratio, r.energy_ratio);
                exact = exact && r.restriction_exact;
            }
            add("extension.restriction", exact, exact, true);
            add("extension.overlap", worst_overlap <= 1e-9, worst_overlap, 0.0, 1e-9);
            add("extension.cell_range", worst_range <= 1e-12, worst_range, 0.0, 1e-12);
            add("extension.energy_ratio", std::isfinite(max_ratio) && max_ratio > 0.0, max_ratio, "finite");
        },
        "extension");
    if (!ok_extension) return rep;

    const bool ok_scaling = stage(
        [&] {
            const auto table = resistance_table(p, N, ropts);
            for (const auto& row : table.rows) {
                regression.emplace_back(key_prefix + "/R_" + std::to_string(row.n), row.R);
                regression.emplace_back(key_prefix + "/Rbar_" + std::to_string(row.n), row.Rbar);
            }
            add("scaling.exact_level0", detail::rel_diff(table.rows[0].R, 0.75) <= 1e-10 &&
                                            detail::rel_diff(table.rows[0].Rbar, 0.5) <= 1e-10,
                Json::array({table.rows[0].R, table.rows[0].Rbar}), Json::array({0.75, 0.5}), 1e-10);
            const auto ineq = verify_inequalities(table);
            for (const auto& c : ineq.checks) {
                add("scaling." + c.name, c.status != CheckStatus::fail, nullable(c.observed),
                    Json{{"bound", c.reference}, {"previous", nullable(c.previous)}}, std::isnan(c.previous) ? Json(nullptr) : Json(0.25));
                if (std::isfinite(c.observed) && c.name != "rbar_le_r")
                    regression.emplace_back(key_prefix + "/" + c.name + "@N" + std::to_string(N), c.observed);
            }
        },
        "scaling");
    if (!ok_scaling) return rep;

    const bool ok_walk = stage(
        [&] {
            const int n = std::min(N, vopt.walk_max_level);
            const auto g = build_graph(p, n, ropts.build);
            const double exact = corner_resistance(g, 0, 1, ropts).value;
            WalkOptions wo;
            wo.samples = cfg.samples;
            wo.seed = cfg.seed;
            wo.energy = cfg.energy;
            const auto a = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], wo);
            const double z = std::abs(a.estimate - exact) / std::max(a.stderr_, 1e-300);
            add("walk.agreement.n" + std::to_string(n), !a.truncated && z <= 3.0,
                Json{{"estimate", a.estimate}, {"stderr", a.stderr_}}, exact, "3 standard errors");
            WalkOptions small = wo;
            small.samples = std::max<std::uint64_t>(1, cfg.samples / 10);
            const auto b1 = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], small);
            const auto b2 = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[1], small);
            add("walk.reproducible", b1.estimate == b2.estimate && b1.steps == b2.steps, b1.estimate, b2.estimate,
                0.0);
        },
        "walk");
    if (!ok_walk) return rep;

    if (!vopt.regression_file.empty()) {
        RegressionStore store(vopt.regression_file);
        for (const auto& [key, value] : regression) {
            store.record(key, value);
            const auto pinned = store.pinned(key);
            if (!pinned) {
                rep.checks.push_back({"regression." + key, "unpinned", value, nullptr, 1e-6});
            } else {
                add("regression." + key, detail::rel_diff(value, *pinned) <= 1e-6, value, *pinned, 1e-6);
            }
        }
        const bool clean = std::none_of(rep.checks.begin(), rep.checks.end(),
                                        [](const VerifyCheck& c) { return c.status == "fail"; });
        if (vopt.bless) {
            // Only a fully passing run may pin values.
            if (clean) {
                store.save(true);
            } else {
                add("regression.bless", false, "refused", "a passing run");
            }
        }
    }

    if (rep.exit_code == exit_pass)
        for (const auto& c : rep.checks)
            if (c.status == "fail") rep.exit_code = exit_violation;
    return rep;
}

}  // namespace pillow

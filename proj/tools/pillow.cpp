#include <pillow/pillow.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <thread>

using namespace pillow;

namespace {

struct Options {
    RunConfig cfg;
    std::string solver = "iterative";
    std::string energy = "pair";
    std::string format;
    std::string terminals = "corner";
    std::string input = "linear";
    std::string regression;
    std::string connectivity = "topological";
    bool bless = false;
    unsigned workers = 1;
    std::uint64_t step_cap = 1000000000;
};

void finish_config(Options& o, const char* default_format) {
    o.cfg.solver = o.solver == "dense" ? SolverKind::dense : SolverKind::iterative;
    o.cfg.energy = o.energy == "mult" ? EnergyConvention::multiplicity : EnergyConvention::pair;
    o.cfg.connectivity = o.connectivity == "edge" ? Connectivity::edge : Connectivity::topological;
    if (o.format.empty()) o.format = default_format;
    o.cfg.format = o.format == "csv" ? OutputFormat::csv : OutputFormat::json;
    o.cfg.validate();
}

void print(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        write_file(path, text);
    }
}

// JSON payloads carry their metadata inline; CSV payloads get a sidecar
// file next to --out, or the metadata on stderr when writing to stdout.
void emit_json(Json payload, const PilingPattern& p, const RunConfig& cfg) {
    payload["metadata"] = metadata(p, cfg);
    print(payload.dump(2) + "\n", cfg.out);
}

void emit_csv(const std::string& csv, const PilingPattern& p, const RunConfig& cfg) {
    const std::string meta = metadata(p, cfg).dump(2) + "\n";
    print(csv, cfg.out);
    if (cfg.out.empty()) {
        std::fwrite(meta.data(), 1, meta.size(), stderr);
    } else {
        write_file(cfg.out + ".meta.json", meta);
    }
}

ResistanceValue terminal_resistance(const CarpetGraph& g, const Options& o) {
    const auto ropts = o.cfg.resistance_options();
    if (o.terminals == "corner") return corner_resistance(g, 0, 1, ropts);
    if (o.terminals == "diagonal") return corner_resistance(g, 0, 2, ropts);
    return border_resistance(g, o.terminals == "border-vertical", ropts);
}

int run_check(Options& o) {
    finish_config(o, "json");
    const auto p = load_pattern(o.cfg.pattern);
    const auto rep = validate_pattern(p, o.cfg.connectivity);
    emit_json(report_json(rep), p, o.cfg);
    return rep.admissible() ? exit_pass : exit_invalid_pattern;
}

int run_graph(Options& o) {
    finish_config(o, "json");
    const auto p = load_pattern(o.cfg.pattern);
    const auto g = build_graph(p, o.cfg.level, o.cfg.resistance_options().build);
    if (o.cfg.format == OutputFormat::json) {
        emit_json(graph_json(g), p, o.cfg);
    } else {
        std::string csv = "u,v,mult\n";
        for (const auto& e : g.edges())
            csv += std::to_string(e.u) + "," + std::to_string(e.v) + "," + std::to_string(e.mult) + "\n";
        emit_csv(csv, p, o.cfg);
    }
    return exit_pass;
}

int run_resistance(Options& o) {
    finish_config(o, "json");
    const auto p = load_pattern(o.cfg.pattern);
    const auto g = build_graph(p, o.cfg.level, o.cfg.resistance_options().build);
    const auto r = terminal_resistance(g, o);
    if (o.cfg.format == OutputFormat::json) {
        emit_json(resistance_json(o.cfg.level, o.terminals, r), p, o.cfg);
    } else {
        emit_csv("n,terminals,value,energy,residual,iterations\n" + std::to_string(o.cfg.level) + "," + o.terminals +
                     "," + format_double(r.value) + "," + format_double(r.energy) + "," +
                     format_double(r.residual) + "," + std::to_string(r.iterations) + "\n",
                 p, o.cfg);
    }
    return exit_pass;
}

int run_harmonic(Options& o) {
    finish_config(o, "csv");
    const auto p = load_pattern(o.cfg.pattern);
    const auto g = build_graph(p, o.cfg.level, o.cfg.resistance_options().build);
    const auto r = terminal_resistance(g, o);
    if (o.cfg.format == OutputFormat::csv) {
        emit_csv(function_csv(g, r.potential), p, o.cfg);
    } else {
        auto j = resistance_json(o.cfg.level, o.terminals, r);
        j["values"] = r.potential;
        emit_json(j, p, o.cfg);
    }
    return exit_pass;
}

int run_scaling(Options& o) {
    finish_config(o, "csv");
    const auto p = load_pattern(o.cfg.pattern);
    const auto table = resistance_table(p, o.cfg.max_level, o.cfg.resistance_options());
    const auto rep = verify_inequalities(table);
    if (o.cfg.format == OutputFormat::csv) {
        emit_csv(scaling_csv(table), p, o.cfg);
    } else {
        emit_json(scaling_json(table, rep), p, o.cfg);
    }
    return rep.passed() ? exit_pass : exit_violation;
}

int run_trace(Options& o) {
    finish_config(o, "json");
    const auto p = load_pattern(o.cfg.pattern);
    const auto g = build_graph(p, o.cfg.fine, o.cfg.resistance_options().build);
    TraceOptions topts;
    topts.solver = o.cfg.resistance_options().solver;
    topts.energy = o.cfg.energy;
    const auto t = trace_form(g, o.cfg.coarse, topts);
    if (o.cfg.format == OutputFormat::json) {
        emit_json(trace_json(t), p, o.cfg);
    } else {
        std::string csv;
        for (Eigen::Index i = 0; i < t.op.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.op.cols(); ++j) csv += (j ? "," : "") + format_double(t.op(i, j));
            csv += "\n";
        }
        emit_csv(csv, p, o.cfg);
    }
    return exit_pass;
}

int run_kernels(Options& o) {
    finish_config(o, "csv");
    const auto p = load_pattern(o.cfg.pattern);
    const auto ropts = o.cfg.resistance_options();
    const auto g = build_graph(p, o.cfg.level, ropts.build);
    const auto ks = pre_extension_kernels(g, ropts);
    if (o.cfg.format == OutputFormat::csv) {
        emit_csv(kernels_csv(g, ks), p, o.cfg);
    } else {
        emit_json(kernel_checks_json(ks), p, o.cfg);
    }
    return ks.checks.ok() ? exit_pass : exit_violation;
}

int run_extend(Options& o) {
    finish_config(o, "csv");
    const auto p = load_pattern(o.cfg.pattern);
    const auto ropts = o.cfg.resistance_options();
    const auto gn = build_graph(p, o.cfg.coarse, ropts.build);
    std::vector<double> f(gn.vertex_count());
    if (o.input == "linear") {
        for (std::size_t v = 0; v < f.size(); ++v) f[v] = static_cast<double>(gn.vertex(static_cast<int>(v)).point.x);
    } else if (o.input == "random") {
        std::mt19937_64 rng(o.cfg.seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (auto& x : f) x = unit(rng);
    } else {
        throw DomainError("--input must be linear or random");
    }
    const auto r = extend(p, o.cfg.coarse, o.cfg.fine, f, ropts);
    if (o.cfg.format == OutputFormat::csv) {
        emit_csv(function_csv(build_graph(p, o.cfg.fine, ropts.build), r.fine), p, o.cfg);
    } else {
        auto j = extension_json(r);
        j["values"] = r.fine;
        emit_json(j, p, o.cfg);
    }
    return exit_pass;
}

int run_walk(Options& o) {
    finish_config(o, "json");
    const auto p = load_pattern(o.cfg.pattern);
    const auto g = build_graph(p, o.cfg.level, o.cfg.resistance_options().build);
    WalkOptions wo;
    wo.samples = o.cfg.samples;
    wo.seed = o.cfg.seed;
    wo.energy = o.cfg.energy;
    wo.workers = o.workers;
    wo.step_cap = o.step_cap;
    const int b = o.terminals == "diagonal" ? 2 : 1;
    const auto w = commute_time_resistance(g, g.corner_ids()[0], g.corner_ids()[b], wo);
    if (o.cfg.format == OutputFormat::json) {
        emit_json(walk_json(w), p, o.cfg);
    } else {
        emit_csv("estimate,stderr,samples,seed,steps\n" + format_double(w.estimate) + "," +
                     format_double(w.stderr_) + "," + std::to_string(w.samples) + "," + std::to_string(w.seed) +
                     "," + std::to_string(w.steps) + "\n",
                 p, o.cfg);
    }
    return exit_pass;
}

int run_verify_cmd(Options& o) {
    finish_config(o, "json");
    VerifyOptions vo;
    vo.regression_file = o.regression;
    vo.bless = o.bless;
    if (o.bless && o.regression.empty()) throw DomainError("--bless needs --regression FILE");
    const auto rep = run_verify(o.cfg, vo);
    print(rep.to_json().dump(2) + "\n", o.cfg.out);
    return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resistance forms and random walks on piled Sierpinski-type carpets"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--pattern", o.cfg.pattern, "builtin name or pattern file")->capture_default_str();
        sub->add_option("--solver", o.solver, "linear solver")
            ->check(CLI::IsMember({"iterative", "dense"}))
            ->capture_default_str();
        sub->add_option("--tol", o.cfg.tolerance, "relative residual tolerance")->capture_default_str();
        sub->add_option("--energy", o.energy, "pair: unit conductances, mult: multiplicity weights")
            ->check(CLI::IsMember({"pair", "mult"}))
            ->capture_default_str();
        sub->add_option("--connectivity", o.connectivity, "pattern connectivity used by the admissibility check")
            ->check(CLI::IsMember({"topological", "edge"}))
            ->capture_default_str();
        sub->add_option("--budget", o.cfg.budget, "largest number of cells to build")->capture_default_str();
        sub->add_option("--seed", o.cfg.seed, "random seed")->capture_default_str();
        sub->add_option("--out", o.cfg.out, "output file (default: stdout)");
        sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv"}));
    };
    auto terminals = [&](CLI::App* sub) {
        sub->add_option("--terminals", o.terminals, "corner, diagonal, border or border-vertical")
            ->check(CLI::IsMember({"corner", "diagonal", "border", "border-vertical"}))
            ->capture_default_str();
    };
    std::map<CLI::App*, int (*)(Options&)> handlers;
    auto sub = [&](const char* name, const char* help, int (*fn)(Options&)) {
        auto* s = app.add_subcommand(name, help);
        common(s);
        handlers[s] = fn;
        return s;
    };

    sub("check", "check admissibility of a pattern", run_check);
    sub("graph", "export the level-n graph", run_graph)->add_option("--level", o.cfg.level)->capture_default_str();
    {
        auto* s = sub("resistance", "effective resistance at one level", run_resistance);
        s->add_option("--level", o.cfg.level)->capture_default_str();
        terminals(s);
    }
    {
        auto* s = sub("harmonic", "export the energy minimiser", run_harmonic);
        s->add_option("--level", o.cfg.level)->capture_default_str();
        terminals(s);
    }
    sub("scaling", "resistance table and observed constants", run_scaling)
        ->add_option("--max-level", o.cfg.max_level)
        ->capture_default_str();
    {
        auto* s = sub("trace", "trace of the level-fine form onto the level-coarse vertices", run_trace);
        s->add_option("--coarse", o.cfg.coarse)->capture_default_str();
        s->add_option("--fine", o.cfg.fine)->capture_default_str();
    }
    sub("kernels", "the four corner kernels at one level", run_kernels)
        ->add_option("--level", o.cfg.level)
        ->capture_default_str();
    {
        auto* s = sub("extend", "extend coarse data to a finer level", run_extend);
        s->add_option("--coarse", o.cfg.coarse)->capture_default_str();
        s->add_option("--fine", o.cfg.fine)->capture_default_str();
        s->add_option("--input", o.input, "linear (lattice x) or random data")
            ->check(CLI::IsMember({"linear", "random"}))
            ->capture_default_str();
    }
    {
        auto* s = sub("walk", "Monte Carlo resistance through commute times", run_walk);
        s->add_option("--level", o.cfg.level)->capture_default_str();
        s->add_option("--samples", o.cfg.samples)->capture_default_str();
        s->add_option("--workers", o.workers)->capture_default_str();
        s->add_option("--step-cap", o.step_cap, "total step budget")->capture_default_str();
        s->add_option("--terminals", o.terminals, "corner or diagonal")
            ->check(CLI::IsMember({"corner", "diagonal"}))
            ->capture_default_str();
    }
    {
        auto* s = sub("verify", "run the full verification suite", run_verify_cmd);
        s->add_option("--max-level", o.cfg.max_level)->capture_default_str();
        s->add_option("--samples", o.cfg.samples)->capture_default_str();
        s->add_option("--regression", o.regression, "regression fixtures file");
        s->add_flag("--bless", o.bless, "write observed values to the fixtures file");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        for (auto* s : app.get_subcommands()) return handlers.at(s)(o);
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return exit_solver_failure;
    } catch (const BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return exit_solver_failure;
    } catch (const SymmetryError& e) {
        std::cerr << "property violation: " << e.what() << "\n";
        return exit_violation;
    } catch (const InvariantError& e) {
        std::cerr << "property violation: " << e.what() << "\n";
        return exit_violation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid_pattern;
    }
    return exit_pass;
}

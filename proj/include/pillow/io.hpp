#pragma once

// Pattern files, data exports, run configuration and regression fixtures.

#include <pillow/carpet.hpp>
#include <pillow/energy.hpp>
#include <pillow/error.hpp>
#include <pillow/pattern.hpp>
#include <pillow/randomwalk.hpp>
#include <pillow/scaling.hpp>
#include <pillow/trace.hpp>

#include <json.hpp>

#include <cstdint>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pillow {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::json;

/// Parses {"L": int, "multiplicity": [[...], ...]} with row 0 at the bottom.
inline PilingPattern parse_pattern_file(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw StructuralError("pattern file syntax error at line " + std::to_string(line) + ", column " +
                              std::to_string(col) + ": " + e.what());
    }
    if (!j.is_object()) throw StructuralError("pattern file must hold a JSON object");
    if (!j.contains("L") || !j["L"].is_number_integer()) throw StructuralError("pattern file needs an integer \"L\"");
    if (!j.contains("multiplicity") || !j["multiplicity"].is_array())
        throw StructuralError("pattern file needs a \"multiplicity\" array of rows");
    const auto L64 = j["L"].get<std::int64_t>();
    if (L64 < 3 || L64 > 4096) throw StructuralError("L must lie in [3, 4096], got " + std::to_string(L64));
    const int L = static_cast<int>(L64);
    const auto& rows_j = j["multiplicity"];
    if (rows_j.size() != static_cast<std::size_t>(L))
        throw StructuralError("multiplicity has " + std::to_string(rows_j.size()) + " rows, expected L = " +
                              std::to_string(L));
    std::vector<std::vector<int>> rows;
    for (std::size_t r = 0; r < rows_j.size(); ++r) {
        const auto& row = rows_j[r];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(L))
            throw StructuralError("row " + std::to_string(r) + " must be an array of " + std::to_string(L) +
                                  " entries");
        std::vector<int> vals;
        for (const auto& v : row) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 1000000)
                throw StructuralError("row " + std::to_string(r) + " holds a value that is not a nonnegative integer");
            vals.push_back(v.get<int>());
        }
        rows.push_back(std::move(vals));
    }
    return PilingPattern::from_rows(L, rows);
}

inline Json pattern_json(const PilingPattern& p) { return Json{{"L", p.side()}, {"multiplicity", p.rows()}}; }

inline std::string serialize_pattern(const PilingPattern& p) { return pattern_json(p).dump(); }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LookupError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LookupError("cannot write " + path);
    out << data;
    if (!out) throw LookupError("write to " + path + " failed");
}

/// A builtin name, or a path to a pattern file.
inline PilingPattern load_pattern(const std::string& source) {
    for (const auto& name : builtin_pattern_names())
        if (source == name) return builtin_pattern(source);
    if (std::filesystem::exists(source)) return parse_pattern_file(read_file(source));
    return builtin_pattern(source);  // throws with the list of names
}

inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string pattern_hash(const PilingPattern& p) { return hex64(fnv1a(serialize_pattern(p))); }

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

enum class OutputFormat { json, csv };

struct RunConfig {
    std::string pattern = "sierpinski3";
    int level = 1;
    int max_level = 3;
    int coarse = 0;
    int fine = 1;
    SolverKind solver = SolverKind::iterative;
    double tolerance = 1e-10;
    EnergyConvention energy = EnergyConvention::pair;
    std::uint64_t budget = 300000;
    std::uint64_t seed = 1;
    std::uint64_t samples = 20000;
    std::string out;
    OutputFormat format = OutputFormat::json;
    Connectivity connectivity = Connectivity::topological;

    void validate() const {
        if (budget == 0) throw DomainError("cell budget must be positive");
        if (samples == 0) throw DomainError("sample count must be positive");
        if (!(tolerance > 0.0 && tolerance <= 1e-4)) throw DomainError("tolerance must lie in (0, 1e-4]");
        if (level < 0 || max_level < 0 || coarse < 0 || fine < 0) throw DomainError("levels must be nonnegative");
    }

    ResistanceOptions resistance_options() const {
        ResistanceOptions o;
        o.solver.kind = solver;
        o.solver.tolerance = tolerance;
        o.energy = energy;
        o.build.cell_budget = budget;
        o.build.connectivity = connectivity;
        return o;
    }

    Json to_json() const {
        return Json{{"pattern", pattern},
                    {"level", level},
                    {"max_level", max_level},
                    {"coarse", coarse},
                    {"fine", fine},
                    {"solver", solver == SolverKind::dense ? "dense" : "iterative"},
                    {"tol", tolerance},
                    {"energy", energy == EnergyConvention::pair ? "pair" : "mult"},
                    {"budget", budget},
                    {"seed", seed},
                    {"samples", samples},
                    {"format", format == OutputFormat::json ? "json" : "csv"},
                    {"connectivity", connectivity == Connectivity::edge ? "edge" : "topological"}};
    }
};

inline Json metadata(const PilingPattern& p, const RunConfig& cfg) {
    return Json{{"pattern_hash", pattern_hash(p)},
                {"pattern", pattern_json(p)},
                {"config", cfg.to_json()},
                {"versions",
                 {{"pillow", kVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

inline Json report_json(const AdmissibilityReport& r) {
    auto cond = [](const ConditionResult& c) { return Json{{"ok", c.ok}, {"detail", c.detail}}; };
    return Json{{"pc1", cond(r.pc1)},
                {"pc2", cond(r.pc2)},
                {"pc3", cond(r.pc3)},
                {"pc4", cond(r.pc4)},
                {"admissible", r.admissible()},
                {"summary", r.summary()}};
}

inline Json graph_json(const CarpetGraph& g) {
    Json vs = Json::array();
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const auto& vx = g.vertex(static_cast<int>(v));
        vs.push_back({{"id", v},
                      {"x", vx.point.x},
                      {"y", vx.point.y},
                      {"rep", to_string(g.word_at(vx.rep_word))},
                      {"corner", vx.rep_corner}});
    }
    Json es = Json::array();
    for (const auto& e : g.edges()) es.push_back({{"u", e.u}, {"v", e.v}, {"mult", e.mult}});
    return Json{{"level", g.level()}, {"L", g.side()}, {"vertices", vs}, {"edges", es}};
}

/// Columns vertex_id, x, y, value.
inline std::string function_csv(const CarpetGraph& g, const std::vector<double>& f) {
    if (f.size() != g.vertex_count()) throw DomainError("function_csv: size mismatch");
    std::string out = "vertex_id,x,y,value\n";
    for (std::size_t v = 0; v < f.size(); ++v) {
        const auto p = g.vertex(static_cast<int>(v)).point;
        out += std::to_string(v) + "," + std::to_string(p.x) + "," + std::to_string(p.y) + "," +
               format_double(f[v]) + "\n";
    }
    return out;
}

inline Json resistance_json(int n, const std::string& terminals, const ResistanceValue& r) {
    return Json{{"n", n},
                {"terminals", {{"kind", terminals}, {"a", r.a}, {"b", r.b}}},
                {"value", r.value},
                {"energy", r.energy},
                {"residual", r.residual},
                {"iterations", r.iterations}};
}

/// Columns n, R_n, Rbar_n, ratio_R, ratio_Rbar, residual.
inline std::string scaling_csv(const ScalingTable& t) {
    std::string out = "n,R_n,Rbar_n,ratio_R,ratio_Rbar,residual\n";
    for (const auto& r : t.rows)
        out += std::to_string(r.n) + "," + format_double(r.R) + "," + format_double(r.Rbar) + "," +
               (r.n == 0 ? "" : format_double(r.ratio_R)) + "," + (r.n == 0 ? "" : format_double(r.ratio_Rbar)) +
               "," + format_double(r.residual) + "\n";
    return out;
}

inline Json nullable(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json inequality_json(const InequalityReport& rep) {
    Json checks = Json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name},
                          {"observed", nullable(c.observed)},
                          {"previous", nullable(c.previous)},
                          {"reference", c.reference},
                          {"status", to_string(c.status)}});
    return checks;
}

inline Json scaling_json(const ScalingTable& t, const InequalityReport& rep) {
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"n", r.n},
                        {"R", r.R},
                        {"Rbar", r.Rbar},
                        {"ratio_R", r.n == 0 ? Json(nullptr) : Json(r.ratio_R)},
                        {"ratio_Rbar", r.n == 0 ? Json(nullptr) : Json(r.ratio_Rbar)},
                        {"residual", r.residual},
                        {"vertices", r.vertices}});
    Json out{{"table", rows}, {"inequalities", inequality_json(rep)}};
    if (t.max_level() >= 3) {
        const auto e = estimate_rho(t);
        out["estimate"] = {{"rho_hat", e.rho_hat},
                           {"ratios", e.ratios},
                           {"slope_rate", e.slope_rate},
                           {"regression_residual", e.regression_residual},
                           {"spread", e.spread},
                           {"last_two_spread", e.last_two_spread},
                           {"fekete", e.fekete}};
    }
    return out;
}

/// Columns vertex_id, x, y, psi0..psi3.
inline std::string kernels_csv(const CarpetGraph& g, const KernelSet& ks) {
    std::string out = "vertex_id,x,y,psi0,psi1,psi2,psi3\n";
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        const auto p = g.vertex(static_cast<int>(v)).point;
        out += std::to_string(v) + "," + std::to_string(p.x) + "," + std::to_string(p.y);
        for (int i = 0; i < 4; ++i) out += "," + format_double(ks.psi[i][v]);
        out += "\n";
    }
    return out;
}

inline Json kernel_checks_json(const KernelSet& ks) {
    const auto& c = ks.checks;
    return Json{{"level", ks.level},
                {"border_resistance", ks.border_resistance},
                {"energy", ks.energy},
                {"partition_error", c.partition_error},
                {"range_error", c.range_error},
                {"corner_values", c.corner_values},
                {"side_zeros", c.side_zeros},
                {"rotation_images", c.rotation_images},
                {"reflection_error", c.reflection_error},
                {"sum_min", c.sum_min},
                {"sum_max", c.sum_max},
                {"pek4", c.pek4},
                {"ok", c.ok()}};
}

inline Json trace_json(const TraceForm& t) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(t.op.size()));
    for (Eigen::Index i = 0; i < t.op.rows(); ++i)
        for (Eigen::Index j = 0; j < t.op.cols(); ++j) flat.push_back(t.op(i, j));
    return Json{{"fine_level", t.fine_level},
                {"coarse_level", t.coarse_level},
                {"coarse", t.coarse},
                {"size", t.size()},
                {"operator", flat},
                {"max_clamped", t.max_clamped},
                {"max_row_sum", t.max_row_sum}};
}

inline Json extension_json(const ExtensionResult& r) {
    return Json{{"fine_energy", r.fine_energy},
                {"coarse_energy", r.coarse_energy},
                {"energy_ratio", r.energy_ratio},
                {"overlap_error", r.overlap_error},
                {"cell_range_error", r.cell_range_error},
                {"restriction_exact", r.restriction_exact}};
}

inline Json walk_json(const WalkEstimate& w) {
    return Json{{"estimate", w.estimate},
                {"stderr", w.stderr_},
                {"samples", w.samples},
                {"seed", w.seed},
                {"steps", w.steps},
                {"truncated", w.truncated}};
}

/// Pinned values keyed by name, compared at a relative tolerance.
class RegressionStore {
public:
    RegressionStore() = default;
    explicit RegressionStore(std::string path) : path_(std::move(path)) {
        if (!path_.empty() && std::filesystem::exists(path_)) {
            try {
                data_ = Json::parse(read_file(path_));
            } catch (const Json::parse_error& e) {
                throw StructuralError("regression file " + path_ + ": " + e.what());
            }
            if (!data_.is_object() || !data_.contains("values") || !data_["values"].is_object())
                throw StructuralError("regression file " + path_ + " needs a \"values\" object");
        }
        if (!data_.is_object()) data_ = Json{{"format", 1}, {"values", Json::object()}};
    }

    std::optional<double> pinned(const std::string& key) const {
        const auto& v = data_["values"];
        if (!v.contains(key) || !v[key].is_number()) return std::nullopt;
        return v[key].get<double>();
    }

    void record(const std::string& key, double value) { pending_[key] = value; }

    const Json& pending() const { return pending_; }

    /// Writes all recorded values. Refuses unless `bless` is set.
    void save(bool bless) {
        if (!bless) throw DomainError("regression values are only written with --bless");
        if (path_.empty()) throw DomainError("no regression file configured");
        for (auto it = pending_.begin(); it != pending_.end(); ++it) data_["values"][it.key()] = it.value();
        write_file(path_, data_.dump(2) + "\n");
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    Json data_;
    Json pending_ = Json::object();
};

}  // namespace pillow

#pragma once

// Resistance sequences, the scaling factor estimate and the observed
// constants of the resistance inequalities.

#include <pillow/carpet.hpp>
#include <pillow/energy.hpp>
#include <pillow/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace pillow {

struct ScalingRow {
    int n = 0;
    double R = 0.0;           // corner resistance
    double Rbar = 0.0;        // border resistance
    double ratio_R = 0.0;     // R_n / R_{n-1}; 0 on the first row
    double ratio_Rbar = 0.0;  // Rbar_n / Rbar_{n-1}; 0 on the first row
    double residual = 0.0;    // larger of the two solver residuals
    std::size_t vertices = 0;
    int max_cell_incidence = 0;
};

struct ScalingTable {
    int L = 0;
    int norm = 0;
    std::vector<ScalingRow> rows;

    int max_level() const { return static_cast<int>(rows.size()) - 1; }

    ScalingTable truncated(int N) const {
        ScalingTable t = *this;
        t.rows.resize(static_cast<std::size_t>(std::min(N, max_level()) + 1));
        return t;
    }
};

inline ScalingTable resistance_table(const PilingPattern& p, int N, const ResistanceOptions& opts = {}) {
    if (N < 0) throw DomainError("maximum level must be nonnegative");
    ScalingTable t;
    t.L = p.side();
    t.norm = p.norm();
    for (int n = 0; n <= N; ++n) {
        const auto g = build_graph(p, n, opts.build);
        const auto r = corner_resistance(g, 0, 1, opts);
        const auto rb = border_resistance(g, false, opts);
        ScalingRow row;
        row.n = n;
        row.R = r.value;
        row.Rbar = rb.value;
        row.residual = std::max(r.residual, rb.residual);
        row.vertices = g.vertex_count();
        row.max_cell_incidence = ulf_stats(g).max_cell_incidence;
        if (n > 0) {
            row.ratio_R = row.R / t.rows.back().R;
            row.ratio_Rbar = row.Rbar / t.rows.back().Rbar;
        }
        t.rows.push_back(row);
    }
    return t;
}

struct ScalingEstimate {
    double rho_hat = 0.0;           // last ratio R_N / R_{N-1}
    std::vector<double> ratios;     // R_n / R_{n-1}, n = 1..N
    double slope = 0.0;             // least-squares slope of log R_n against n
    double slope_rate = 0.0;        // exp(slope)
    double regression_residual = 0.0;  // root mean square of the fit residuals
    double spread = 0.0;            // (max - min) / rho_hat over the last three ratios
    double last_two_spread = 0.0;   // |ratio_N - ratio_{N-1}| / ratio_N
    std::vector<double> fekete;     // log R_n - n log rho_hat
};

/// Rate estimate from a resistance sequence R_0..R_N (N >= 3).
inline ScalingEstimate estimate_rho(const std::vector<double>& R) {
    if (R.size() < 4) throw DomainError("estimating the scaling factor needs levels 0..N with N >= 3");
    for (double r : R)
        if (!(r > 0.0)) throw DomainError("resistances must be positive");
    ScalingEstimate e;
    const std::size_t N = R.size() - 1;
    for (std::size_t n = 1; n <= N; ++n) e.ratios.push_back(R[n] / R[n - 1]);
    e.rho_hat = e.ratios.back();

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double cnt = static_cast<double>(R.size());
    for (std::size_t n = 0; n <= N; ++n) {
        const double x = static_cast<double>(n), y = std::log(R[n]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    e.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    const double icpt = (sy - e.slope * sx) / cnt;
    e.slope_rate = std::exp(e.slope);
    double ss = 0.0;
    for (std::size_t n = 0; n <= N; ++n) {
        const double d = std::log(R[n]) - (icpt + e.slope * static_cast<double>(n));
        ss += d * d;
    }
    e.regression_residual = std::sqrt(ss / cnt);

    const auto last3 = std::vector<double>(e.ratios.end() - 3, e.ratios.end());
    e.spread = (*std::max_element(last3.begin(), last3.end()) - *std::min_element(last3.begin(), last3.end())) /
               e.rho_hat;
    e.last_two_spread = std::abs(e.ratios[N - 1] - e.ratios[N - 2]) / e.ratios[N - 1];
    for (std::size_t n = 0; n <= N; ++n)
        e.fekete.push_back(std::log(R[n]) - static_cast<double>(n) * std::log(e.rho_hat));
    return e;
}

inline ScalingEstimate estimate_rho(const ScalingTable& t) {
    std::vector<double> R;
    for (const auto& row : t.rows) R.push_back(row.R);
    return estimate_rho(R);
}

inline double rho_a(int L) {
    const double l2 = static_cast<double>(L) * L;
    return l2 / (l2 - 1.0);
}

inline double holder_exponent(int L) { return std::log(rho_a(L)) / std::log(static_cast<double>(L)); }

struct ObservedConstants {
    double c_dagger = 0.0;          // max over n <= m of R_m/(R_n R_{m-n}) and its inverse
    double c_d = 0.0;               // max over n of R_{n+1}/R_n and its inverse
    double apriori_margin = 0.0;    // min over n of Rbar_n rho_a^{-n}
    double c_c = 0.0;               // max over n of R_n / Rbar_n
    double c_rd = 0.0;              // max over n <= m of rho_a^{m-n} R_n / R_m
    int c_ulf = 0;                  // max cell incidence over the levels used
};

inline ObservedConstants observed_constants(const ScalingTable& t) {
    ObservedConstants c;
    const double ra = rho_a(t.L);
    const auto& rows = t.rows;
    c.apriori_margin = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < rows.size(); ++m) {
        c.c_ulf = std::max(c.c_ulf, rows[m].max_cell_incidence);
        c.c_c = std::max(c.c_c, rows[m].R / rows[m].Rbar);
        c.apriori_margin = std::min(c.apriori_margin, rows[m].Rbar * std::pow(ra, -static_cast<double>(m)));
        if (m > 0) c.c_d = std::max({c.c_d, rows[m].R / rows[m - 1].R, rows[m - 1].R / rows[m].R});
        for (std::size_t n = 0; n <= m; ++n) {
            const double q = rows[m].R / (rows[n].R * rows[m - n].R);
            c.c_dagger = std::max({c.c_dagger, q, 1.0 / q});
            c.c_rd = std::max(c.c_rd, std::pow(ra, static_cast<double>(m - n)) * rows[n].R / rows[m].R);
        }
    }
    return c;
}

enum class CheckStatus { pass, warn, fail };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::warn: return "warn";
        case CheckStatus::fail: return "fail";
    }
    return "fail";
}

struct InequalityCheck {
    std::string name;
    double observed = 0.0;
    double previous = 0.0;  // same constant from the N-1 run; NaN when not compared
    std::string reference;  // the bound being checked
    CheckStatus status = CheckStatus::pass;
};

struct InequalityReport {
    int max_level = 0;
    ObservedConstants constants;
    ObservedConstants previous;
    std::vector<InequalityCheck> checks;
    ScalingTable table;

    bool passed() const {
        return std::none_of(checks.begin(), checks.end(),
                            [](const InequalityCheck& c) { return c.status == CheckStatus::fail; });
    }
    const InequalityCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Builds the report from an existing table; stability is judged against
/// the same table truncated to N-1 when N >= 3.
inline InequalityReport verify_inequalities(const ScalingTable& t, double stability = 0.25) {
    InequalityReport rep;
    rep.table = t;
    rep.max_level = t.max_level();
    const int N = rep.max_level;
    rep.constants = observed_constants(t);
    const bool compare = N >= 3;
    if (compare) rep.previous = observed_constants(t.truncated(N - 1));
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto add = [&](const std::string& name, double now, double before, const std::string& ref, bool bound_ok) {
        InequalityCheck c{name, now, compare ? before : nan, ref, CheckStatus::pass};
        if (!std::isfinite(now) || !bound_ok) {
            c.status = CheckStatus::fail;
        } else if (compare && std::abs(now - before) >= stability * std::abs(before)) {
            c.status = CheckStatus::fail;
        }
        rep.checks.push_back(c);
    };
    const auto& k = rep.constants;
    const auto& p = rep.previous;
    add("c_dagger", k.c_dagger, p.c_dagger, "c^-1 R_n R_{m-n} <= R_m <= c R_n R_{m-n}", k.c_dagger >= 1.0);
    add("c_d", k.c_d, p.c_d, "c^-1 R_n <= R_{n+1} <= c R_n", k.c_d >= 1.0);
    const double c_a = 4.0 * k.c_ulf;
    add("apriori_margin", k.apriori_margin, p.apriori_margin,
        "Rbar_n rho_a^-n >= 1/(4 c_ulf) = " + std::to_string(1.0 / c_a), k.apriori_margin >= 1.0 / c_a);
    add("c_c", k.c_c, p.c_c, "R_n <= c Rbar_n", k.c_c >= 1.0);
    add("c_rd", k.c_rd, p.c_rd, "rho_a^{m-n} R_n <= c R_m", k.c_rd > 0.0);

    bool ordered = true;
    for (const auto& row : t.rows) ordered = ordered && row.Rbar <= row.R * (1.0 + 1e-9);
    rep.checks.push_back({"rbar_le_r", ordered ? 1.0 : 0.0, nan, "Rbar_n <= R_n", ordered ? CheckStatus::pass
                                                                                          : CheckStatus::fail});
    if (N >= 3) {
        const auto est = estimate_rho(t);
        rep.checks.push_back({"rho_hat", est.rho_hat, nan, "r > 1",
                              est.rho_hat > 1.0 ? CheckStatus::pass : CheckStatus::fail});
        rep.checks.push_back({"rho_spread", est.spread, nan, "spread of the last three ratios (reported)",
                              CheckStatus::pass});
    }
    return rep;
}

inline InequalityReport verify_inequalities(const PilingPattern& p, int N, const ResistanceOptions& opts = {}) {
    return verify_inequalities(resistance_table(p, N, opts));
}

struct HolderOptions {
    bool aligned_only = false;       // only pairs sharing a lattice row or column
    std::size_t sources = 24;        // BFS sources; all vertices when the graph is smaller
    std::size_t targets = 256;       // targets per source; all when the graph is smaller
    std::uint64_t seed = 1;
};

struct HolderFit {
    bool degenerate = false;
    double theta_hat = 0.0;   // slope of log |f(x)-f(y)|^2 against log d+
    double intercept = 0.0;
    double c_fit = 0.0;       // exp(intercept) / base energy
    double c_bound = 0.0;     // smallest c with |f(x)-f(y)|^2 <= c d+^theta_H base on the sampled pairs
    double theta_h = 0.0;
    std::size_t pairs = 0;
    std::map<int, std::size_t> hop_histogram;  // hop distance -> sampled pair count
};

/// Fits |f(x)-f(y)|^2 against the hop-distance bound d+ = hops * L^-m.
inline HolderFit holder_profile(const CarpetGraph& g, const std::vector<double>& f, double base_energy,
                                const HolderOptions& opts = {}) {
    if (f.size() != g.vertex_count()) throw DomainError("holder_profile: function size mismatch");
    HolderFit fit;
    fit.theta_h = holder_exponent(g.side());
    const std::size_t n = g.vertex_count();
    if (!(base_energy > 0.0) || n < 2) {
        fit.degenerate = true;
        return fit;
    }
    std::mt19937_64 rng(opts.seed);
    std::vector<int> sources(n);
    for (std::size_t v = 0; v < n; ++v) sources[v] = static_cast<int>(v);
    if (n > opts.sources) {
        std::shuffle(sources.begin(), sources.end(), rng);
        sources.resize(opts.sources);
        std::sort(sources.begin(), sources.end());
    }
    const double unit = 1.0 / static_cast<double>(g.scale());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<int> dist(n);
    std::vector<int> order(n);
    for (int s : sources) {
        std::fill(dist.begin(), dist.end(), -1);
        std::queue<int> q;
        q.push(s);
        dist[s] = 0;
        while (!q.empty()) {
            const int x = q.front();
            q.pop();
            for (int y : g.neighbours(x))
                if (dist[y] < 0) {
                    dist[y] = dist[x] + 1;
                    q.push(y);
                }
        }
        for (std::size_t v = 0; v < n; ++v) order[v] = static_cast<int>(v);
        std::size_t take = n;
        if (n > opts.targets) {
            std::shuffle(order.begin(), order.end(), rng);
            take = opts.targets;
        }
        const auto ps = g.vertex(s).point;
        for (std::size_t k = 0; k < take; ++k) {
            const int t = order[k];
            if (t == s) continue;
            const auto pt = g.vertex(t).point;
            if (opts.aligned_only && pt.x != ps.x && pt.y != ps.y) continue;
            const double df2 = (f[s] - f[t]) * (f[s] - f[t]);
            if (!(df2 > 0.0)) continue;
            const double d = dist[t] * unit;
            const double x = std::log(d), y = std::log(df2);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++fit.pairs;
            ++fit.hop_histogram[dist[t]];
            fit.c_bound = std::max(fit.c_bound, df2 / (std::pow(d, fit.theta_h) * base_energy));
        }
    }
    const double cnt = static_cast<double>(fit.pairs);
    const double den = cnt * sxx - sx * sx;
    if (fit.pairs < 2 || !(den > 1e-12 * cnt * cnt)) {
        fit.degenerate = true;
        return fit;
    }
    fit.theta_hat = (cnt * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.theta_hat * sx) / cnt;
    fit.c_fit = std::exp(fit.intercept) / base_energy;
    return fit;
}

}  // namespace pillow

#pragma once

// Conductance networks, Dirichlet problems and effective resistances.

#include <pillow/carpet.hpp>
#include <pillow/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <queue>
#include <span>
#include <iterator>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace pillow {

enum class EnergyConvention {
    pair,          // unit conductance per adjacent vertex pair
    multiplicity,  // conductance = number of cell sides inducing the pair
};

struct Conductance {
    int u = 0;  // u < v
    int v = 0;
    double c = 0.0;
};

/// Symmetric nonnegative conductance network on vertices 0..n-1.
class QuadraticForm {
public:
    QuadraticForm() = default;

    /// Duplicate pairs are merged by adding conductances; zero entries are dropped.
    QuadraticForm(std::size_t n, std::vector<Conductance> entries) : n_(n) {
        for (auto& e : entries) {
            if (e.u == e.v) throw DomainError("conductance on a self-loop");
            if (e.u > e.v) std::swap(e.u, e.v);
            if (e.u < 0 || static_cast<std::size_t>(e.v) >= n) throw DomainError("conductance vertex out of range");
            if (!(e.c >= 0.0) || !std::isfinite(e.c)) throw DomainError("conductances must be finite and nonnegative");
        }
        std::sort(entries.begin(), entries.end(),
                  [](const Conductance& a, const Conductance& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
        for (const auto& e : entries) {
            if (!edges_.empty() && edges_.back().u == e.u && edges_.back().v == e.v)
                edges_.back().c += e.c;
            else
                edges_.push_back(e);
        }
        std::erase_if(edges_, [](const Conductance& e) { return e.c == 0.0; });

        offset_.assign(n + 1, 0);
        for (const auto& e : edges_) {
            ++offset_[e.u + 1];
            ++offset_[e.v + 1];
        }
        for (std::size_t i = 0; i < n; ++i) offset_[i + 1] += offset_[i];
        nbr_.assign(offset_.back(), 0);
        cond_.assign(offset_.back(), 0.0);
        diag_.assign(n, 0.0);
        std::vector<int> fill(offset_.begin(), offset_.end() - 1);
        for (const auto& e : edges_) {
            nbr_[fill[e.u]] = e.v;
            cond_[fill[e.u]++] = e.c;
            nbr_[fill[e.v]] = e.u;
            cond_[fill[e.v]++] = e.c;
            diag_[e.u] += e.c;
            diag_[e.v] += e.c;
        }
    }

    std::size_t size() const { return n_; }
    const std::vector<Conductance>& conductances() const { return edges_; }
    std::span<const int> neighbours(int v) const { return {nbr_.data() + offset_[v], nbr_.data() + offset_[v + 1]}; }
    std::span<const double> neighbour_conductances(int v) const {
        return {cond_.data() + offset_[v], cond_.data() + offset_[v + 1]};
    }
    double diagonal(int v) const { return diag_[v]; }

    double total_conductance() const {
        double s = 0.0;
        for (const auto& e : edges_) s += e.c;
        return s;
    }

    double value(std::span<const double> f) const { return bilinear(f, f); }

    double bilinear(std::span<const double> f, std::span<const double> g) const {
        check_size(f.size());
        check_size(g.size());
        double s = 0.0;
        for (const auto& e : edges_) s += e.c * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]);
        return s;
    }

    /// Laplacian action: out(x) = sum_y c(x,y) (f(x) - f(y)).
    std::vector<double> apply(std::span<const double> f) const {
        check_size(f.size());
        std::vector<double> out(n_, 0.0);
        for (std::size_t x = 0; x < n_; ++x) {
            double s = 0.0;
            for (int k = offset_[x]; k < offset_[x + 1]; ++k) s += cond_[k] * (f[x] - f[nbr_[k]]);
            out[x] = s;
        }
        return out;
    }

    Eigen::MatrixXd dense_operator() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        for (const auto& e : edges_) {
            m(e.u, e.u) += e.c;
            m(e.v, e.v) += e.c;
            m(e.u, e.v) -= e.c;
            m(e.v, e.u) -= e.c;
        }
        return m;
    }

    QuadraticForm scaled(double factor) const {
        auto e = edges_;
        for (auto& x : e) x.c *= factor;
        return QuadraticForm(n_, std::move(e));
    }

    bool connected() const {
        if (n_ == 0) return true;
        std::vector<char> seen(n_, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            for (int y : neighbours(x))
                if (!seen[y]) {
                    seen[y] = 1;
                    ++count;
                    stack.push_back(y);
                }
        }
        return count == n_;
    }

private:
    void check_size(std::size_t s) const {
        if (s != n_) throw DomainError("function has " + std::to_string(s) + " values, form has " +
                                       std::to_string(n_) + " vertices");
    }

    std::size_t n_ = 0;
    std::vector<Conductance> edges_;
    std::vector<int> offset_{0};
    std::vector<int> nbr_;
    std::vector<double> cond_;
    std::vector<double> diag_;
};

inline QuadraticForm natural_energy(const CarpetGraph& g, EnergyConvention conv = EnergyConvention::pair) {
    std::vector<Conductance> e;
    e.reserve(g.edges().size());
    for (const auto& x : g.edges())
        e.push_back({x.u, x.v, conv == EnergyConvention::pair ? 1.0 : static_cast<double>(x.mult)});
    return QuadraticForm(g.vertex_count(), std::move(e));
}

enum class SolverKind { iterative, dense };

struct SolverOptions {
    SolverKind kind = SolverKind::iterative;
    double tolerance = 1e-10;   // relative residual on the free vertices
    int max_iterations = 0;     // 0: 50 * sqrt(vertex count)
    std::size_t dense_limit = 2000;
};

struct FixedValue {
    int vertex = 0;
    double value = 0.0;
};

struct DirichletSolution {
    std::vector<double> values;
    double energy = 0.0;
    double residual = 0.0;  // relative, on free vertices
    int iterations = 0;
};

namespace detail {

struct ReducedSystem {
    std::vector<int> free;       // free vertex ids
    std::vector<int> position;   // vertex -> index in free, or -1
    std::vector<double> rhs;
};

inline std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void reduced_apply(const QuadraticForm& q, const ReducedSystem& sys, const std::vector<double>& x,
                          std::vector<double>& out) {
    for (std::size_t i = 0; i < sys.free.size(); ++i) {
        const int v = sys.free[i];
        double s = q.diagonal(v) * x[i];
        auto nb = q.neighbours(v);
        auto cs = q.neighbour_conductances(v);
        for (std::size_t k = 0; k < nb.size(); ++k) {
            const int j = sys.position[nb[k]];
            if (j >= 0) s -= cs[k] * x[j];
        }
        out[i] = s;
    }
}

}  // namespace detail

/// Energy minimiser among functions agreeing with `fixed`.
inline DirichletSolution solve_dirichlet(const QuadraticForm& q, const std::vector<FixedValue>& fixed,
                                         const SolverOptions& opts = {}) {
    const std::size_t n = q.size();
    if (fixed.empty()) throw DomainError("solve_dirichlet: no fixed vertices");
    if (!(opts.tolerance > 0.0)) throw DomainError("solver tolerance must be positive");

    DirichletSolution sol;
    sol.values.assign(n, 0.0);
    std::vector<char> is_fixed(n, 0);
    for (const auto& fv : fixed) {
        if (fv.vertex < 0 || static_cast<std::size_t>(fv.vertex) >= n)
            throw DomainError("fixed vertex out of range");
        if (is_fixed[fv.vertex] && sol.values[fv.vertex] != fv.value)
            throw DomainError("vertex " + std::to_string(fv.vertex) + " fixed to two different values");
        is_fixed[fv.vertex] = 1;
        sol.values[fv.vertex] = fv.value;
    }

    detail::ReducedSystem sys;
    sys.position.assign(n, -1);
    for (std::size_t v = 0; v < n; ++v)
        if (!is_fixed[v]) {
            sys.position[v] = static_cast<int>(sys.free.size());
            sys.free.push_back(static_cast<int>(v));
        }

    // Every free vertex must be connected to a fixed one.
    {
        std::vector<char> seen(is_fixed);
        std::queue<int> todo;
        for (std::size_t v = 0; v < n; ++v)
            if (is_fixed[v]) todo.push(static_cast<int>(v));
        while (!todo.empty()) {
            const int x = todo.front();
            todo.pop();
            for (int y : q.neighbours(x))
                if (!seen[y]) {
                    seen[y] = 1;
                    todo.push(y);
                }
        }
        for (int v : sys.free)
            if (!seen[v])
                throw SingularSystemError("vertex " + std::to_string(v) +
                                          " lies in a component without fixed values");
    }

    const std::size_t m = sys.free.size();
    sys.rhs.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const int v = sys.free[i];
        auto nb = q.neighbours(v);
        auto cs = q.neighbour_conductances(v);
        for (std::size_t k = 0; k < nb.size(); ++k)
            if (is_fixed[nb[k]]) sys.rhs[i] += cs[k] * sol.values[nb[k]];
    }

    std::vector<double> x(m, 0.0);
    const double bnorm = detail::norm2(sys.rhs);
    std::vector<double> ax(m, 0.0);
    auto true_residual = [&]() {
        detail::reduced_apply(q, sys, x, ax);
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += (sys.rhs[i] - ax[i]) * (sys.rhs[i] - ax[i]);
        return bnorm > 0.0 ? std::sqrt(s) / bnorm : std::sqrt(s);
    };

    if (m == 0 || bnorm == 0.0) {
        // x = 0 solves the system exactly
    } else if (opts.kind == SolverKind::dense) {
        if (m > opts.dense_limit)
            throw DomainError("dense solver limited to " + std::to_string(opts.dense_limit) +
                              " free vertices, got " + std::to_string(m));
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        Eigen::VectorXd b(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            const int v = sys.free[i];
            A(i, i) = q.diagonal(v);
            b(i) = sys.rhs[i];
            auto nb = q.neighbours(v);
            auto cs = q.neighbour_conductances(v);
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const int j = sys.position[nb[k]];
                if (j >= 0) A(i, j) -= cs[k];
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) throw SingularSystemError("reduced system is not positive definite");
        Eigen::VectorXd sol_free = llt.solve(b);
        for (std::size_t i = 0; i < m; ++i) x[i] = sol_free(i);
        sol.iterations = 1;
    } else {
        const int cap = opts.max_iterations > 0
                            ? opts.max_iterations
                            : static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(n))));
        std::vector<double> r = sys.rhs, z(m), p(m), ap(m);
        auto precondition = [&]() {
            for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / q.diagonal(sys.free[i]);
        };
        precondition();
        p = z;
        double rz = 0.0;
        for (std::size_t i = 0; i < m; ++i) rz += r[i] * z[i];
        int it = 0;
        bool done = false;
        while (it < cap) {
            detail::reduced_apply(q, sys, p, ap);
            double pap = 0.0;
            for (std::size_t i = 0; i < m; ++i) pap += p[i] * ap[i];
            if (!(pap > 0.0)) break;
            const double alpha = rz / pap;
            for (std::size_t i = 0; i < m; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            ++it;
            if (detail::norm2(r) <= opts.tolerance * bnorm) {
                // Confirm on the true residual; restart from it if the
                // recurrence has drifted.
                if (true_residual() <= opts.tolerance) {
                    done = true;
                    break;
                }
                for (std::size_t i = 0; i < m; ++i) r[i] = sys.rhs[i] - ax[i];
                precondition();
                p = z;
                rz = 0.0;
                for (std::size_t i = 0; i < m; ++i) rz += r[i] * z[i];
                continue;
            }
            precondition();
            double rz_new = 0.0;
            for (std::size_t i = 0; i < m; ++i) rz_new += r[i] * z[i];
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
        }
        sol.iterations = it;
        if (!done) {
            const double res = true_residual();
            if (!(res <= opts.tolerance))
                throw SolverError("conjugate gradient stopped after " + std::to_string(it) +
                                  " iterations with relative residual " + detail::sci(res) +
                                  " (target " + detail::sci(opts.tolerance) + ", " +
                                  std::to_string(m) + " free vertices)");
        }
    }

    sol.residual = m == 0 ? 0.0 : true_residual();
    if (!(sol.residual <= opts.tolerance))
        throw SolverError("residual " + detail::sci(sol.residual) + " above tolerance " +
                          detail::sci(opts.tolerance));
    for (std::size_t i = 0; i < m; ++i) sol.values[sys.free[i]] = x[i];
    sol.energy = q.value(sol.values);
    return sol;
}

struct ResistanceValue {
    double value = 0.0;
    double energy = 0.0;
    std::vector<int> a, b;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> potential;  // minimiser: 1 on a, 0 on b
};

inline ResistanceValue effective_resistance(const QuadraticForm& q, std::vector<int> a, std::vector<int> b,
                                            const SolverOptions& opts = {}) {
    if (a.empty() || b.empty()) throw DomainError("terminal sets must be nonempty");
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<int> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    if (!both.empty()) throw DomainError("terminal sets overlap at vertex " + std::to_string(both.front()));

    std::vector<FixedValue> fixed;
    fixed.reserve(a.size() + b.size());
    for (int v : a) fixed.push_back({v, 1.0});
    for (int v : b) fixed.push_back({v, 0.0});
    auto sol = solve_dirichlet(q, fixed, opts);
    if (!(sol.energy > 0.0)) throw SingularSystemError("terminal sets are not connected");
    ResistanceValue out;
    out.value = 1.0 / sol.energy;
    out.energy = sol.energy;
    out.a = std::move(a);
    out.b = std::move(b);
    out.residual = sol.residual;
    out.iterations = sol.iterations;
    out.potential = std::move(sol.values);
    return out;
}

struct ResistanceOptions {
    SolverOptions solver;
    EnergyConvention energy = EnergyConvention::pair;
    BuildOptions build;
};

/// Resistance between global corners p_i and p_j of a built graph.
inline ResistanceValue corner_resistance(const CarpetGraph& g, int i = 0, int j = 1,
                                         const ResistanceOptions& opts = {}) {
    if (i < 0 || i > 3 || j < 0 || j > 3 || i == j) throw DomainError("corner indices must be distinct in 0..3");
    const auto q = natural_energy(g, opts.energy);
    return effective_resistance(q, {g.corner_ids()[i]}, {g.corner_ids()[j]}, opts.solver);
}

inline ResistanceValue corner_resistance(const PilingPattern& p, int level, const ResistanceOptions& opts = {}) {
    return corner_resistance(build_graph(p, level, opts.build), 0, 1, opts);
}

/// Resistance between opposite borders: left-right, or bottom-top when `vertical`.
inline ResistanceValue border_resistance(const CarpetGraph& g, bool vertical = false,
                                         const ResistanceOptions& opts = {}) {
    const auto q = natural_energy(g, opts.energy);
    return vertical ? effective_resistance(q, boundary_vertices(g, Side::bottom), boundary_vertices(g, Side::top),
                                           opts.solver)
                    : effective_resistance(q, boundary_vertices(g, Side::left), boundary_vertices(g, Side::right),
                                           opts.solver);
}

inline ResistanceValue border_resistance(const PilingPattern& p, int level, const ResistanceOptions& opts = {}) {
    return border_resistance(build_graph(p, level, opts.build), false, opts);
}

struct ReductionSum {
    double cell_sum = 0.0;  // sum over level-n cells w of D_{m-n}(f o Psi_w)
    double energy = 0.0;    // D_m(f)
};

/// Compares D_m(f) with the sum of the level-(m-n) energies of its cell
/// restrictions, where n = level(g_m) - level(g_sub).
inline ReductionSum reduction_sum(const CarpetGraph& g_m, const CarpetGraph& g_sub, const std::vector<double>& f,
                                  EnergyConvention conv = EnergyConvention::pair) {
    if (f.size() != g_m.vertex_count()) throw DomainError("reduction_sum: function size mismatch");
    if (g_sub.level() > g_m.level()) throw DomainError("reduction_sum: subcell level above fine level");
    const auto q_sub = natural_energy(g_sub, conv);
    const auto coarse = build_graph(g_m.pattern(), g_m.level() - g_sub.level());
    ReductionSum out;
    std::vector<double> local(g_sub.vertex_count());
    for (std::uint64_t w = 0; w < coarse.cell_count(); ++w) {
        const auto emb = subcell_embed(g_m, coarse.word_at(w), g_sub);
        for (std::size_t u = 0; u < emb.size(); ++u) local[u] = f[emb[u]];
        out.cell_sum += q_sub.value(local);
    }
    out.energy = natural_energy(g_m, conv).value(f);
    return out;
}

}  // namespace pillow

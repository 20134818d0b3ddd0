#pragma once

// Schur-complement traces, pre-extension kernels and the coarse-to-fine
// extension operator.

#include <pillow/carpet.hpp>
#include <pillow/energy.hpp>
#include <pillow/error.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace pillow {

enum class TraceMethod {
    factorized,  // one sparse Cholesky factorisation, all columns solved against it
    columns,     // one Dirichlet solve per coarse vertex with the configured solver
};

struct TraceOptions {
    TraceMethod method = TraceMethod::factorized;
    SolverOptions solver;
    EnergyConvention energy = EnergyConvention::pair;
    std::size_t coarse_limit = 2000;
    double clamp_tolerance = 1e-9;  // negative conductances above -tol are set to 0
};

struct TraceForm {
    std::vector<int> coarse;  // vertex ids in the fine form, in coarse order
    Eigen::MatrixXd op;       // zero row sums, nonpositive off-diagonal
    int fine_level = -1;
    int coarse_level = -1;
    double max_clamped = 0.0;  // largest negative conductance set to 0
    double max_row_sum = 0.0;  // largest row sum before it was forced to 0

    std::size_t size() const { return coarse.size(); }
    double conductance(int i, int j) const { return -op(i, j); }

    QuadraticForm form() const {
        std::vector<Conductance> e;
        const auto n = static_cast<int>(coarse.size());
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (op(i, j) < 0.0) e.push_back({i, j, -op(i, j)});
        return QuadraticForm(coarse.size(), std::move(e));
    }

    double value(const std::vector<double>& f) const {
        if (f.size() != coarse.size()) throw DomainError("trace form: function size mismatch");
        const Eigen::Map<const Eigen::VectorXd> x(f.data(), static_cast<Eigen::Index>(f.size()));
        return x.dot(op * x);
    }
};

namespace detail {

inline Eigen::MatrixXd schur_factorized(const QuadraticForm& q, const std::vector<int>& keep,
                                        const std::vector<int>& pos_keep) {
    const std::size_t n = q.size();
    std::vector<int> pos_int(n, -1);
    std::vector<int> interior;
    for (std::size_t v = 0; v < n; ++v)
        if (pos_keep[v] < 0) {
            pos_int[v] = static_cast<int>(interior.size());
            interior.push_back(static_cast<int>(v));
        }
    const auto nb = static_cast<Eigen::Index>(keep.size());
    const auto ni = static_cast<Eigen::Index>(interior.size());

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nb, nb);
    Eigen::MatrixXd lib = Eigen::MatrixXd::Zero(ni, nb);
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& e : q.conductances()) {
        const int ku = pos_keep[e.u], kv = pos_keep[e.v];
        const int iu = pos_int[e.u], iv = pos_int[e.v];
        if (ku >= 0) s(ku, ku) += e.c;
        if (kv >= 0) s(kv, kv) += e.c;
        if (iu >= 0) trip.emplace_back(iu, iu, e.c);
        if (iv >= 0) trip.emplace_back(iv, iv, e.c);
        if (ku >= 0 && kv >= 0) {
            s(ku, kv) -= e.c;
            s(kv, ku) -= e.c;
        } else if (iu >= 0 && iv >= 0) {
            trip.emplace_back(iu, iv, -e.c);
            trip.emplace_back(iv, iu, -e.c);
        } else if (iu >= 0) {
            lib(iu, kv) -= e.c;
        } else {
            lib(iv, ku) -= e.c;
        }
    }
    if (ni == 0) return s;
    Eigen::SparseMatrix<double> lii(ni, ni);
    lii.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(lii);
    if (ldlt.info() != Eigen::Success) throw SingularSystemError("interior block is not positive definite");
    const Eigen::MatrixXd y = ldlt.solve(lib);
    if (ldlt.info() != Eigen::Success) throw SolverError("sparse factorisation solve failed");
    s.noalias() -= lib.transpose() * y;
    return s;
}

inline Eigen::MatrixXd schur_columns(const QuadraticForm& q, const std::vector<int>& keep,
                                     const SolverOptions& opts) {
    const auto nb = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd s(nb, nb);
    std::vector<FixedValue> fixed(keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
        for (std::size_t i = 0; i < keep.size(); ++i) fixed[i] = {keep[i], i == j ? 1.0 : 0.0};
        const auto sol = solve_dirichlet(q, fixed, opts);
        const auto lf = q.apply(sol.values);
        for (std::size_t i = 0; i < keep.size(); ++i) s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            lf[keep[i]];
    }
    return s;
}

}  // namespace detail

/// Trace of q on the vertex subset `keep` (Schur complement of the interior).
inline TraceForm trace_form(const QuadraticForm& q, const std::vector<int>& keep, const TraceOptions& opts = {}) {
    const std::size_t n = q.size();
    if (keep.empty()) throw DomainError("trace onto an empty vertex set");
    if (keep.size() > opts.coarse_limit)
        throw BudgetError("trace onto " + std::to_string(keep.size()) + " vertices exceeds the dense limit of " +
                          std::to_string(opts.coarse_limit));
    std::vector<int> pos(n, -1);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const int v = keep[i];
        if (v < 0 || static_cast<std::size_t>(v) >= n) throw DomainError("trace vertex out of range");
        if (pos[v] >= 0) throw DomainError("trace vertex " + std::to_string(v) + " listed twice");
        pos[v] = static_cast<int>(i);
    }

    TraceForm t;
    t.coarse = keep;
    Eigen::MatrixXd s = opts.method == TraceMethod::factorized ? detail::schur_factorized(q, keep, pos)
                                                               : detail::schur_columns(q, keep, opts.solver);
    s = 0.5 * (s + s.transpose()).eval();
    const auto m = s.rows();
    for (Eigen::Index i = 0; i < m; ++i) {
        t.max_row_sum = std::max(t.max_row_sum, std::abs(s.row(i).sum()));
        double diag = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            double c = -s(i, j);
            if (c < 0.0) {
                if (c < -opts.clamp_tolerance)
                    throw InvariantError("trace conductance between coarse vertices " + std::to_string(i) + " and " +
                                         std::to_string(j) + " is " + std::to_string(c));
                t.max_clamped = std::max(t.max_clamped, -c);
                c = 0.0;
                s(i, j) = 0.0;
            }
            diag += c;
        }
        s(i, i) = diag;
    }
    t.op = std::move(s);
    return t;
}

/// Trace of the natural energy of g_m on the embedded level-n vertex set,
/// in level-n vertex order.
inline TraceForm trace_form(const CarpetGraph& g_m, int n, const TraceOptions& opts = {}) {
    if (n < 0 || n > g_m.level()) throw DomainError("coarse level must lie in [0, fine level]");
    const auto g_n = build_graph(g_m.pattern(), n);
    auto t = trace_form(natural_energy(g_m, opts.energy), level_embedding(g_n, g_m), opts);
    t.fine_level = g_m.level();
    t.coarse_level = n;
    return t;
}

/// Energy of the harmonic extension of a level-n function into V_m.
inline double trace_energy(const CarpetGraph& g_m, const CarpetGraph& g_n, const std::vector<double>& f,
                           const ResistanceOptions& opts = {}) {
    if (f.size() != g_n.vertex_count()) throw DomainError("trace_energy: function size mismatch");
    const auto emb = level_embedding(g_n, g_m);
    std::vector<FixedValue> fixed(emb.size());
    for (std::size_t i = 0; i < emb.size(); ++i) fixed[i] = {emb[i], f[i]};
    return solve_dirichlet(natural_energy(g_m, opts.energy), fixed, opts.solver).energy;
}

/// Values of a level-m function on the embedded level-n vertices.
inline std::vector<double> restrict_to(const CarpetGraph& g_n, const CarpetGraph& g_m, const std::vector<double>& f) {
    if (f.size() != g_m.vertex_count()) throw DomainError("restrict_to: function size mismatch");
    const auto emb = level_embedding(g_n, g_m);
    std::vector<double> out(emb.size());
    for (std::size_t i = 0; i < emb.size(); ++i) out[i] = f[emb[i]];
    return out;
}

struct Comparability {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

/// Extreme ratios qa(f)/qb(f) over nonconstant f, for operators with
/// kernel equal to the constants.
inline Comparability comparability(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw DomainError("comparability: operators of different sizes");
    const auto n = a.rows();
    if (n < 2) throw DomainError("comparability needs at least two vertices");
    // Orthonormal basis of the mean-zero subspace: the trailing columns of
    // the Householder Q of the constant vector.
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
    const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd basis = full.rightCols(n - 1);
    const Eigen::MatrixXd ar = basis.transpose() * a * basis;
    const Eigen::MatrixXd br = basis.transpose() * b * basis;
    const double scale = std::max(br.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bs(br);
    if (bs.info() != Eigen::Success || bs.eigenvalues().minCoeff() <= 1e-12 * scale)
        throw DomainError("degenerate pencil: second form vanishes on a nonconstant function");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(ar, br);
    if (ges.info() != Eigen::Success) throw SolverError("generalized eigenproblem failed");
    Comparability c{ges.eigenvalues().minCoeff(), ges.eigenvalues().maxCoeff()};
    if (!(c.lambda_min > 1e-12 * std::max(1.0, c.lambda_max)))
        throw DomainError("degenerate pencil: first form vanishes on a nonconstant function");
    return c;
}

inline Comparability comparability(const QuadraticForm& a, const QuadraticForm& b) {
    return comparability(a.dense_operator(), b.dense_operator());
}

struct KernelChecks {
    double partition_error = 0.0;  // max |sum psi_i - 1|
    double range_error = 0.0;      // max violation of 0 <= psi_i <= 1
    bool corner_values = true;     // psi_i(p_i) == 1
    bool side_zeros = true;        // psi_i == 0 on the sides away from p_i
    bool rotation_images = true;   // psi_{i+1} = psi_i after a quarter turn, exactly
    double reflection_error = 0.0;  // max |psi_0 - psi_0 after the diagonal mirror|
    double sum_min = 0.0;          // range of the unnormalised sum
    double sum_max = 0.0;
    double pek4 = 0.0;             // max_i D(psi_i) * border resistance

    bool ok(double partition_tol = 1e-9, double bound = 272.0) const {
        return partition_error <= partition_tol && range_error <= partition_tol && corner_values && side_zeros &&
               rotation_images && sum_min >= 1.0 - partition_tol && sum_max <= 4.0 + partition_tol && pek4 <= bound;
    }
};

struct KernelSet {
    int level = 0;
    std::vector<double> h;        // symmetrised left-to-right border potential
    std::vector<double> h_prime;  // its quarter-turn image, 1 at the bottom
    std::array<std::vector<double>, 4> psi_tilde;
    std::vector<double> psi_tilde_sum;
    std::array<std::vector<double>, 4> psi;
    double border_resistance = 0.0;
    std::array<double, 4> energy{};  // D_k(psi_i)
    KernelChecks checks;
};

namespace detail {

inline std::vector<int> compose_perm(const std::vector<int>& outer, const std::vector<int>& inner) {
    std::vector<int> out(inner.size());
    for (std::size_t v = 0; v < inner.size(); ++v) out[v] = outer[inner[v]];
    return out;
}

inline std::vector<int> invert_perm(const std::vector<int>& p) {
    std::vector<int> out(p.size());
    for (std::size_t v = 0; v < p.size(); ++v) out[p[v]] = static_cast<int>(v);
    return out;
}

inline double sorted_sum(std::array<double, 4> x) {
    std::sort(x.begin(), x.end());
    return ((x[0] + x[1]) + x[2]) + x[3];
}

}  // namespace detail

/// The four corner kernels on V_k built from the border-resistance minimiser.
inline KernelSet pre_extension_kernels(const CarpetGraph& g, const ResistanceOptions& opts = {}) {
    using K = SquareIsometry::Kind;
    const std::size_t n = g.vertex_count();
    KernelSet ks;
    ks.level = g.level();

    const auto q = natural_energy(g, opts.energy);
    const auto rb = effective_resistance(q, boundary_vertices(g, Side::left), boundary_vertices(g, Side::right),
                                         opts.solver);
    ks.border_resistance = rb.value;

    const auto flip_x = vertex_permutation(g, SquareIsometry(K::reflect_x));
    const auto flip_y = vertex_permutation(g, SquareIsometry(K::reflect_y));
    const auto rot = vertex_permutation(g, SquareIsometry(K::rotate90));
    const auto rot_inv = detail::invert_perm(rot);

    std::vector<double> hs(n);
    for (std::size_t v = 0; v < n; ++v) hs[v] = 0.5 * (rb.potential[v] + rb.potential[flip_y[v]]);
    ks.h.resize(n);
    for (std::size_t v = 0; v < n; ++v) ks.h[v] = 0.5 * (hs[v] + 1.0 - hs[flip_x[v]]);

    ks.h_prime.resize(n);
    for (std::size_t v = 0; v < n; ++v) ks.h_prime[v] = ks.h[rot_inv[v]];

    ks.psi_tilde[0].resize(n);
    for (std::size_t v = 0; v < n; ++v)
        ks.psi_tilde[0][v] = std::min({2.0 * ks.h[v], 2.0 * ks.h_prime[v], 1.0});

    std::array<std::vector<int>, 4> perm;
    perm[0].resize(n);
    for (std::size_t v = 0; v < n; ++v) perm[0][v] = static_cast<int>(v);
    for (int i = 1; i < 4; ++i) perm[i] = detail::compose_perm(rot, perm[i - 1]);
    for (int i = 1; i < 4; ++i) {
        ks.psi_tilde[i].resize(n);
        for (std::size_t v = 0; v < n; ++v) ks.psi_tilde[i][perm[i][v]] = ks.psi_tilde[0][v];
    }

    ks.psi_tilde_sum.resize(n);
    for (auto& p : ks.psi) p.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const double s = detail::sorted_sum(
            {ks.psi_tilde[0][v], ks.psi_tilde[1][v], ks.psi_tilde[2][v], ks.psi_tilde[3][v]});
        ks.psi_tilde_sum[v] = s;
        for (int i = 0; i < 4; ++i) ks.psi[i][v] = ks.psi_tilde[i][v] / s;
    }

    auto& c = ks.checks;
    c.sum_min = *std::min_element(ks.psi_tilde_sum.begin(), ks.psi_tilde_sum.end());
    c.sum_max = *std::max_element(ks.psi_tilde_sum.begin(), ks.psi_tilde_sum.end());
    for (std::size_t v = 0; v < n; ++v) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) {
            s += ks.psi[i][v];
            c.range_error = std::max({c.range_error, -ks.psi[i][v], ks.psi[i][v] - 1.0});
        }
        c.partition_error = std::max(c.partition_error, std::abs(s - 1.0));
    }

    // Corner p_i lies on two sides; the kernel vanishes on the other two.
    const std::array<std::array<Side, 2>, 4> away{{{Side::right, Side::top},
                                                    {Side::left, Side::top},
                                                    {Side::left, Side::bottom},
                                                    {Side::right, Side::bottom}}};
    for (int i = 0; i < 4; ++i) {
        if (ks.psi[i][g.corner_ids()[i]] != 1.0) c.corner_values = false;
        for (Side sd : away[i])
            for (int v : boundary_vertices(g, sd))
                if (ks.psi[i][v] != 0.0) c.side_zeros = false;
    }
    for (int i = 0; i < 4; ++i)
        for (std::size_t v = 0; v < n; ++v)
            if (ks.psi[(i + 1) % 4][rot[v]] != ks.psi[i][v]) c.rotation_images = false;
    const auto diag = vertex_permutation(g, SquareIsometry(K::reflect_diag));
    for (std::size_t v = 0; v < n; ++v)
        c.reflection_error = std::max(c.reflection_error, std::abs(ks.psi[0][diag[v]] - ks.psi[0][v]));

    for (int i = 0; i < 4; ++i) {
        ks.energy[i] = q.value(ks.psi[i]);
        c.pek4 = std::max(c.pek4, ks.energy[i] * ks.border_resistance);
    }
    return ks;
}

inline KernelSet pre_extension_kernels(const PilingPattern& p, int k, const ResistanceOptions& opts = {}) {
    return pre_extension_kernels(build_graph(p, k, opts.build), opts);
}

struct ExtensionResult {
    std::vector<double> fine;    // on V_m
    std::vector<double> coarse;  // the input on V_n
    double fine_energy = 0.0;    // D_m of the extension
    double coarse_energy = 0.0;  // D_n of the input
    double energy_ratio = 0.0;   // border resistance at level m-n times fine/coarse energy; 0 if coarse energy is 0
    double overlap_error = 0.0;  // largest disagreement between cells sharing a vertex
    double cell_range_error = 0.0;  // largest deviation of per-cell min/max from the corner min/max
    bool restriction_exact = true;
};

/// Extends f on V_n to V_m cell by cell with kernels built on V_{m-n}.
inline ExtensionResult extend(const CarpetGraph& g_n, const CarpetGraph& g_m, const KernelSet& ks,
                              const CarpetGraph& g_k, const std::vector<double>& f,
                              const ResistanceOptions& opts = {}, double overlap_tolerance = 1e-9) {
    if (!(g_n.pattern() == g_m.pattern()) || !(g_k.pattern() == g_m.pattern()))
        throw DomainError("extend: graphs of different patterns");
    if (g_n.level() + g_k.level() != g_m.level() || ks.level != g_k.level())
        throw DomainError("extend: kernel level must equal fine minus coarse level");
    if (f.size() != g_n.vertex_count()) throw DomainError("extend: function size mismatch");

    ExtensionResult out;
    out.coarse = f;
    const double unset = std::numeric_limits<double>::quiet_NaN();
    out.fine.assign(g_m.vertex_count(), unset);
    const std::size_t nk = g_k.vertex_count();

    for (std::uint64_t w = 0; w < g_n.cell_count(); ++w) {
        std::array<double, 4> fc{};
        for (int i = 0; i < 4; ++i) fc[i] = f[g_n.vertex_of(w, i)];
        const auto emb = subcell_embed(g_m, g_n.word_at(w), g_k);
        const double lo = *std::min_element(fc.begin(), fc.end());
        const double hi = *std::max_element(fc.begin(), fc.end());
        double cell_lo = std::numeric_limits<double>::infinity(), cell_hi = -cell_lo;
        for (std::size_t u = 0; u < nk; ++u) {
            double val = 0.0;
            for (int i = 0; i < 4; ++i) val += fc[i] * ks.psi[i][u];
            cell_lo = std::min(cell_lo, val);
            cell_hi = std::max(cell_hi, val);
            double& slot = out.fine[emb[u]];
            if (std::isnan(slot)) {
                slot = val;
            } else {
                const double d = std::abs(slot - val);
                out.overlap_error = std::max(out.overlap_error, d);
                if (d > overlap_tolerance)
                    throw SymmetryError("extension values disagree by " + std::to_string(d) + " at fine vertex " +
                                        std::to_string(emb[u]));
            }
        }
        out.cell_range_error = std::max({out.cell_range_error, std::abs(cell_lo - lo), std::abs(cell_hi - hi)});
    }
    for (double v : out.fine)
        if (std::isnan(v)) throw InvariantError("extension left a fine vertex unassigned");

    const auto emb = level_embedding(g_n, g_m);
    for (std::size_t v = 0; v < emb.size(); ++v)
        if (out.fine[emb[v]] != f[v]) out.restriction_exact = false;

    out.fine_energy = natural_energy(g_m, opts.energy).value(out.fine);
    out.coarse_energy = natural_energy(g_n, opts.energy).value(f);
    if (out.coarse_energy > 0.0) out.energy_ratio = ks.border_resistance * out.fine_energy / out.coarse_energy;
    return out;
}

inline ExtensionResult extend(const PilingPattern& p, int n, int m, const std::vector<double>& f,
                              const ResistanceOptions& opts = {}) {
    if (n < 0 || m < n) throw DomainError("extend: need 0 <= n <= m");
    const auto g_n = build_graph(p, n, opts.build);
    const auto g_m = build_graph(p, m, opts.build);
    const auto g_k = build_graph(p, m - n, opts.build);
    const auto ks = pre_extension_kernels(g_k, opts);
    return extend(g_n, g_m, ks, g_k, f, opts);
}

}  // namespace pillow

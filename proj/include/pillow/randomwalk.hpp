#pragma once

// Monte Carlo effective resistance through the commute-time identity
// R(x,y) = E[commute time] / (2 * total conductance).

#include <pillow/carpet.hpp>
#include <pillow/energy.hpp>
#include <pillow/error.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace pillow {

struct WalkOptions {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::uint64_t batch_size = 1000;
    std::uint64_t step_cap = 1000000000;  // total steps before the run is cut short
    EnergyConvention energy = EnergyConvention::pair;
};

struct WalkEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::uint64_t samples = 0;  // samples actually merged
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    double elapsed = 0.0;  // seconds
    bool truncated = false;
};

namespace detail {

// Unbiased uniform integers below a 32-bit bound (Lemire's multiply-shift
// with rejection), using both halves of each 64-bit draw.
class BoundedDraws {
public:
    explicit BoundedDraws(std::seed_seq& seq) : rng_(seq) {}

    std::uint32_t operator()(std::uint32_t bound) {
        std::uint64_t m = static_cast<std::uint64_t>(next32()) * bound;
        auto low = static_cast<std::uint32_t>(m);
        if (low < bound) {
            const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
            while (low < threshold) {
                m = static_cast<std::uint64_t>(next32()) * bound;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

private:
    std::uint32_t next32() {
        if (have_) {
            have_ = false;
            return static_cast<std::uint32_t>(cache_ >> 32);
        }
        cache_ = rng_();
        have_ = true;
        return static_cast<std::uint32_t>(cache_);
    }

    std::mt19937_64 rng_;
    std::uint64_t cache_ = 0;
    bool have_ = false;
};

struct WalkGraph {
    std::vector<int> offset;
    std::vector<int> nbr;
    std::vector<int> weight;   // integer conductances
    std::vector<int> total;    // per-vertex weight sum
    bool uniform = true;
};

struct BatchResult {
    std::uint64_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    std::uint64_t steps = 0;
    bool aborted = false;
};

inline int walk_step(const WalkGraph& wg, BoundedDraws& rng, int x) {
    const int b = wg.offset[x];
    if (wg.uniform) return wg.nbr[b + static_cast<int>(rng(static_cast<std::uint32_t>(wg.offset[x + 1] - b)))];
    auto u = static_cast<int>(rng(static_cast<std::uint32_t>(wg.total[x])));
    int k = b;
    while (u >= wg.weight[k]) u -= wg.weight[k++];
    return wg.nbr[k];
}

// Round trips x -> y -> x. Several walkers advance in lockstep so their
// memory loads overlap; each has its own stream and takes the next sample
// of the batch when it finishes, so the outcome depends only on the seeds.
inline BatchResult run_batch(const WalkGraph& wg, int x, int y, std::uint64_t count, std::uint64_t seed,
                             std::uint64_t batch, std::uint64_t budget) {
    constexpr int lanes = 4;
    struct Lane {
        BoundedDraws rng;
        int pos;
        bool back;
        std::uint64_t steps;
        bool active;
    };
    std::vector<Lane> lane;
    lane.reserve(lanes);
    std::uint64_t started = 0;
    for (int i = 0; i < lanes; ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32),
                          static_cast<std::uint32_t>(i)};
        const bool active = started < count;
        started += active ? 1 : 0;
        lane.push_back(Lane{BoundedDraws(seq), x, false, 0, active});
    }
    BatchResult r;
    int live = static_cast<int>(std::min<std::uint64_t>(count, lanes));
    while (live > 0) {
        if (r.steps >= budget) {
            r.aborted = true;
            return r;
        }
        for (auto& l : lane) {
            if (!l.active) continue;
            l.pos = walk_step(wg, l.rng, l.pos);
            ++l.steps;
            ++r.steps;
            if (!l.back) {
                if (l.pos == y) l.back = true;
            } else if (l.pos == x) {
                const double c = static_cast<double>(l.steps);
                ++r.count;
                r.sum += c;
                r.sum_sq += c * c;
                l.back = false;
                l.steps = 0;
                if (started < count) {
                    ++started;
                } else {
                    l.active = false;
                    --live;
                }
            }
        }
    }
    return r;
}

}  // namespace detail

inline WalkEstimate commute_time_resistance(const CarpetGraph& g, int x, int y, const WalkOptions& opts = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = static_cast<int>(g.vertex_count());
    if (x < 0 || y < 0 || x >= n || y >= n) throw DomainError("walk terminal out of range");
    if (x == y) throw DomainError("walk terminals must differ");
    if (opts.samples == 0) throw DomainError("at least one sample is required");
    if (opts.batch_size == 0) throw DomainError("batch size must be positive");

    detail::WalkGraph wg;
    wg.uniform = opts.energy == EnergyConvention::pair;
    wg.offset.assign(n + 1, 0);
    wg.total.assign(n, 0);
    double total_conductance = 0.0;
    for (int v = 0; v < n; ++v) {
        wg.offset[v + 1] = wg.offset[v] + g.degree(v);
        for (int m : g.neighbour_mults(v)) {
            const int w = wg.uniform ? 1 : m;
            wg.nbr.push_back(0);
            wg.weight.push_back(w);
            wg.total[v] += w;
        }
        const auto nb = g.neighbours(v);
        std::copy(nb.begin(), nb.end(), wg.nbr.begin() + wg.offset[v]);
    }
    for (const auto& e : g.edges()) total_conductance += wg.uniform ? 1.0 : static_cast<double>(e.mult);
    {
        // The walk must be able to reach y from x.
        std::vector<char> seen(n, 0);
        std::vector<int> stack{x};
        seen[x] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int u : g.neighbours(v))
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
        }
        if (!seen[y]) throw SingularSystemError("walk terminals lie in different components");
    }

    const std::uint64_t batches = (opts.samples + opts.batch_size - 1) / opts.batch_size;
    std::vector<detail::BatchResult> results(batches);
    std::atomic<std::uint64_t> next{0};
    std::atomic<std::uint64_t> spent{0};
    auto work = [&]() {
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= batches) return;
            auto& r = results[b];
            if (spent.load() > opts.step_cap) {
                r.aborted = true;
                continue;
            }
            const std::uint64_t count = std::min(opts.batch_size, opts.samples - b * opts.batch_size);
            r = detail::run_batch(wg, x, y, count, opts.seed, b, opts.step_cap + 1);
            spent.fetch_add(r.steps);
        }
    };
    const unsigned workers = std::max(1u, opts.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    // Merge a prefix of batches in index order so the result does not depend
    // on scheduling.
    WalkEstimate est;
    est.seed = opts.seed;
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& r : results) {
        if (r.aborted || est.steps + r.steps > opts.step_cap) {
            est.truncated = true;
            break;
        }
        est.samples += r.count;
        est.steps += r.steps;
        sum += r.sum;
        sum_sq += r.sum_sq;
    }
    if (est.samples == 0)
        throw BudgetError("step cap of " + std::to_string(opts.step_cap) + " reached before any batch completed");
    const double cnt = static_cast<double>(est.samples);
    const double mean = sum / cnt;
    const double var = est.samples > 1 ? std::max(0.0, (sum_sq - cnt * mean * mean) / (cnt - 1.0)) : 0.0;
    est.estimate = mean / (2.0 * total_conductance);
    est.stderr_ = std::sqrt(var / cnt) / (2.0 * total_conductance);
    est.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return est;
}

}  // namespace pillow

#pragma once

// Wall-clock benchmark harness. The workload for size n generates trees
// from the root streams (seed, [0]), (seed, [1]), ... with the node cap set
// to n, until at least n nodes have been generated in total (overflowing
// attempts count). The sequential engines build identical trees for a
// seed. The parallel engines draw handed-off subtrees from split streams,
// so their trees differ and throughput (nodes/second) is the fair
// comparison across engine families.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "engines.hpp"

namespace gwtree {

struct bench_config {
    std::vector<algorithm> algorithms{algorithm::iterative};
    std::vector<std::uint64_t> sizes{1'000'000};
    std::vector<std::size_t> workers{1};
    std::vector<std::size_t> thresholds{64};
    std::size_t hybrid_switch = 4096;
    std::size_t repeats = 5;
    std::uint64_t seed = 1;
};

struct bench_row {
    algorithm algo = algorithm::iterative;
    std::uint64_t n = 0;
    std::size_t workers = 1;
    std::size_t threshold = 1;
    std::size_t repeat = 0;
    double wall_seconds = 0;
    std::uint64_t nodes = 0;
    std::uint64_t trees = 0;
    double nodes_per_second = 0;
    /// Median wall time over all repeats of this combination.
    double median_seconds = 0;
};

struct workload_result {
    std::uint64_t nodes = 0;
    std::uint64_t trees = 0;
};

inline workload_result run_workload(generator& g, std::uint64_t n, std::uint64_t seed) {
    workload_result w;
    for (std::uint64_t j = 0; w.nodes < n; ++j) {
        w.nodes += g.run(bit_source(seed, {j})).nodes_generated;
        ++w.trees;
    }
    return w;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2;
}

/// Rows for one (algo, n, workers, threshold) combination, one per repeat.
/// A warm-up pass runs first and is not timed; it also populates the slabs
/// that the timed repeats reuse.
inline std::vector<bench_row> bench_combination(algorithm a, std::uint64_t n, std::size_t workers,
                                                std::size_t threshold, const bench_config& cfg) {
    gen_params p;
    p.algo = a;
    p.max_nodes = n;
    p.workers = workers;
    p.threshold = threshold;
    p.hybrid_switch = std::max(cfg.hybrid_switch, threshold);
    p.seed = cfg.seed;
    generator g(p);
    (void)run_workload(g, n, cfg.seed);
    std::vector<bench_row> rows;
    std::vector<double> times;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const workload_result w = run_workload(g, n, cfg.seed);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bench_row row;
        row.algo = a;
        row.n = n;
        row.workers = workers;
        row.threshold = threshold;
        row.repeat = r;
        row.wall_seconds = s;
        row.nodes = w.nodes;
        row.trees = w.trees;
        row.nodes_per_second = s > 0 ? static_cast<double>(w.nodes) / s : 0;
        rows.push_back(row);
        times.push_back(s);
    }
    const double med = median(times);
    for (auto& row : rows) row.median_seconds = med;
    return rows;
}

/// Runs the full grid. Sequential engines ignore the worker and threshold
/// axes and run once per size.
inline std::vector<bench_row> run_bench(const bench_config& cfg,
                                        const std::function<void(const bench_row&)>& on_row = {}) {
    if (cfg.repeats == 0) throw std::invalid_argument("repeats must be >= 1");
    std::vector<bench_row> all;
    for (algorithm a : cfg.algorithms) {
        const bool sequential = a == algorithm::naive || a == algorithm::iterative;
        const std::vector<std::size_t> ws = sequential ? std::vector<std::size_t>{1} : cfg.workers;
        const std::vector<std::size_t> ts = sequential ? std::vector<std::size_t>{1} : cfg.thresholds;
        for (std::uint64_t n : cfg.sizes)
            for (std::size_t w : ws)
                for (std::size_t t : ts)
                    for (const auto& row : bench_combination(a, n, w, t, cfg)) {
                        if (on_row) on_row(row);
                        all.push_back(row);
                    }
    }
    return all;
}

inline void write_bench_header(std::ostream& os) {
    os << "algo,n,workers,threshold,repeat,wall_seconds,median_seconds,nodes,trees,nodes_per_second\n";
}

inline void write_bench_row(std::ostream& os, const bench_row& r) {
    os << to_string(r.algo) << ',' << r.n << ',' << r.workers << ',' << r.threshold << ',' << r.repeat << ','
       << r.wall_seconds << ',' << r.median_seconds << ',' << r.nodes << ',' << r.trees << ',' << r.nodes_per_second
       << '\n';
}

} // namespace gwtree

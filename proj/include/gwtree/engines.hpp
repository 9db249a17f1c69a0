#pragma once

// Critical binary Galton-Watson tree generators.
//
// Each processed node consumes one bit: 1 gives it two children, 0 makes it
// a leaf. All engines pop the left child before the right one, so the naive
// and iterative engines consume bits in exactly the same (preorder) order and
// produce identical trees from identical streams.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bitsource.hpp"
#include "task_pool.hpp"
#include "treestore.hpp"

namespace gwtree {

enum class algorithm { naive, iterative, parallel, hybrid };
enum class rng_mode { split_deterministic, per_worker };

inline constexpr std::size_t never_switch = std::numeric_limits<std::size_t>::max();

inline const char* to_string(algorithm a) noexcept {
    switch (a) {
    case algorithm::naive: return "naive";
    case algorithm::iterative: return "iterative";
    case algorithm::parallel: return "parallel";
    case algorithm::hybrid: return "hybrid";
    }
    return "?";
}

struct gen_params {
    algorithm algo = algorithm::iterative;
    /// Batch size that triggers a hand-off to a new task.
    std::size_t threshold = 64;
    /// Hybrid only: pending nodes the sequential phase accumulates before
    /// switching to the threshold-parallel engine.
    std::size_t hybrid_switch = 4096;
    std::uint64_t max_nodes = std::uint64_t{1} << 31;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    rng_mode rng = rng_mode::split_deterministic;
    /// Called at the start of every spawned task. Test hook for injecting
    /// scheduling jitter.
    std::function<void()> task_start_hook;

    void validate() const {
        if (threshold < 1) throw std::invalid_argument("threshold must be >= 1");
        if (hybrid_switch < threshold) throw std::invalid_argument("hybrid switch must be >= threshold");
        if (max_nodes < 1) throw std::invalid_argument("max_nodes must be >= 1");
        if (workers < 1 || workers > node_handle::max_workers) throw std::invalid_argument("workers out of range");
    }
};

enum class gen_status { complete, overflow, out_of_memory };

struct gen_outcome {
    gen_status status = gen_status::complete;
    /// Valid only when complete.
    gwtree::tree tree;
    std::uint64_t nodes_generated = 0;
    std::uint64_t tasks_spawned = 0;
    std::uint64_t bits_consumed = 0;
    /// Number of distinct bit sources the run drew from.
    std::uint64_t sources_used = 0;
    /// Largest count of drawn-but-unused bits left in any one source.
    std::uint64_t max_source_waste = 0;
    /// Nodes whose ownership moved to another task with an lds hand-off.
    std::uint64_t handed_off_nodes = 0;
    /// Child links written by a worker into a record in another worker's
    /// slab. Only handed-off nodes can cause these.
    std::uint64_t foreign_link_writes = 0;

    bool complete() const noexcept { return status == gen_status::complete; }
};

namespace detail {

struct pending_node {
    node_record* record;
    node_handle handle;
};

template <random_bit_source Source>
struct naive_state {
    Source& bits;
    node_store& store;
    std::uint64_t cap;
    std::uint64_t nodes = 1;
    bool overflow = false;

    // Returns false once the budget is blown.
    bool grow(node_record* rec) {
        if (!bits.next_bit()) return true;
        if (nodes + 2 > cap) {
            overflow = true;
            return false;
        }
        const pair_ref kids = store.alloc_pair(0);
        rec->first_child = kids.first;
        nodes += 2;
        return grow(kids.records) && grow(kids.records + 1);
    }
};

inline void record_waste(gen_outcome& out, std::uint64_t bits, std::uint64_t waste) {
    out.bits_consumed += bits;
    out.max_source_waste = std::max(out.max_source_waste, waste);
    ++out.sources_used;
}

} // namespace detail

/// Recursive engine. Resets the store. Recursion depth equals the tree height.
template <random_bit_source Source>
gen_outcome generate_naive(Source& bits, node_store& store, std::uint64_t max_nodes) {
    store.reset();
    gen_outcome out;
    const std::uint64_t before = bits.bits_consumed();
    try {
        const pair_ref root = store.alloc_root(0);
        detail::naive_state<Source> st{bits, store, max_nodes};
        st.grow(root.records);
        out.nodes_generated = st.nodes;
        out.status = st.overflow ? gen_status::overflow : gen_status::complete;
        if (out.complete()) out.tree = tree(store, root.first, st.nodes);
    } catch (const std::bad_alloc&) {
        out.status = gen_status::out_of_memory;
    }
    detail::record_waste(out, bits.bits_consumed() - before, bits.wasted_bits());
    return out;
}

/// Single explicit stack; right child pushed first so the left is popped
/// first. Resets the store.
template <random_bit_source Source>
gen_outcome generate_iterative(Source& bits, node_store& store, std::uint64_t max_nodes) {
    store.reset();
    gen_outcome out;
    const std::uint64_t before = bits.bits_consumed();
    try {
        const pair_ref root = store.alloc_root(0);
        std::vector<node_record*> stack{root.records};
        std::uint64_t nodes = 1;
        while (!stack.empty()) {
            node_record* rec = stack.back();
            stack.pop_back();
            if (!bits.next_bit()) continue;
            if (nodes + 2 > max_nodes) {
                out.status = gen_status::overflow;
                break;
            }
            const pair_ref kids = store.alloc_pair(0);
            rec->first_child = kids.first;
            nodes += 2;
            stack.push_back(kids.records + 1);
            stack.push_back(kids.records);
        }
        out.nodes_generated = nodes;
        if (out.complete()) out.tree = tree(store, root.first, nodes);
    } catch (const std::bad_alloc&) {
        out.status = gen_status::out_of_memory;
    }
    detail::record_waste(out, bits.bits_consumed() - before, bits.wasted_bits());
    return out;
}

namespace detail {

/// One threshold-parallel (or hybrid) generation job.
///
/// Every task owns two stacks, lds1 and lds2. It pops from lds2 while that
/// is non-empty, otherwise from lds1. Children of an internal node go to
/// lds1 while |lds1| < threshold and to lds2 otherwise; as soon as
/// |lds2| >= threshold, lds2 is handed to a freshly spawned task.
///
/// Node budget: tasks publish their node counts to a shared relaxed counter
/// every max(threshold, min(256, cap)) nodes, so a job can overshoot the cap
/// by about workers times that interval before aborting. Whether the final tree
/// fits is decided on exact totals, so the outcome never depends on timing.
template <random_bit_source Source>
class parallel_job {
public:
    parallel_job(node_store& store, task_pool& pool, const gen_params& params,
                 std::vector<Source>* worker_sources)
        : store_(store), pool_(pool), params_(params), worker_sources_(worker_sources),
          switch_at_(params.algo == algorithm::hybrid ? params.hybrid_switch : 1),
          flush_interval_(std::max<std::uint64_t>(params.threshold, std::min<std::uint64_t>(256, params.max_nodes))) {}

    gen_outcome run(Source root_source) {
        store_.reset();
        gen_outcome out;
        node_handle root_handle;
        std::uint64_t worker_bits_before = 0;
        if (worker_sources_ != nullptr)
            for (const auto& s : *worker_sources_) worker_bits_before += s.bits_consumed();
        pool_.run([&](std::size_t w) {
            try {
                const pair_ref root = store_.alloc_root(w);
                root_handle = root.first;
                total_.store(1, std::memory_order_relaxed);
                root_task(root, std::move(root_source), w);
            } catch (const std::bad_alloc&) {
                fail(abort_oom);
            }
        });
        const int reason = abort_.load();
        out.nodes_generated = total_.load();
        out.tasks_spawned = spawned_.load();
        out.handed_off_nodes = handed_.load();
        out.foreign_link_writes = foreign_.load();
        out.bits_consumed = bits_.load();
        out.max_source_waste = max_waste_.load();
        out.sources_used = sources_.load();
        if (worker_sources_ != nullptr) {
            out.bits_consumed = 0 - worker_bits_before;
            out.sources_used = worker_sources_->size();
            for (const auto& s : *worker_sources_) {
                out.bits_consumed += s.bits_consumed();
                out.max_source_waste = std::max(out.max_source_waste, s.wasted_bits());
            }
        }
        if (reason == abort_oom) {
            out.status = gen_status::out_of_memory;
        } else if (reason == abort_overflow || out.nodes_generated > params_.max_nodes) {
            out.status = gen_status::overflow;
        } else {
            out.tree = tree(store_, root_handle, out.nodes_generated);
        }
        return out;
    }

private:
    static constexpr int abort_none = 0;
    static constexpr int abort_overflow = 1;
    static constexpr int abort_oom = 2;

    struct batch {
        std::vector<pending_node> nodes;
        std::optional<Source> source;
    };

    struct task_counters {
        std::uint64_t nodes = 0;
        std::uint64_t foreign = 0;
    };

    void fail(int reason) {
        int expected = abort_none;
        abort_.compare_exchange_strong(expected, reason);
    }

    bool aborted() const noexcept { return abort_.load(std::memory_order_relaxed) != abort_none; }

    // Returns false when the job must stop.
    bool flush(task_counters& c) {
        if (c.nodes != 0) {
            const std::uint64_t now = total_.fetch_add(c.nodes, std::memory_order_relaxed) + c.nodes;
            c.nodes = 0;
            if (now > params_.max_nodes) {
                fail(abort_overflow);
                return false;
            }
        }
        return !aborted();
    }

    void finish(task_counters& c, const Source* own) {
        flush(c);
        foreign_.fetch_add(c.foreign, std::memory_order_relaxed);
        if (own != nullptr) {
            bits_.fetch_add(own->bits_consumed(), std::memory_order_relaxed);
            sources_.fetch_add(1, std::memory_order_relaxed);
            std::uint64_t prev = max_waste_.load(std::memory_order_relaxed);
            const std::uint64_t w = own->wasted_bits();
            while (w > prev && !max_waste_.compare_exchange_weak(prev, w, std::memory_order_relaxed)) {
            }
        }
    }

    Source& source_for(std::optional<Source>& own, std::size_t w) {
        return worker_sources_ != nullptr ? (*worker_sources_)[w] : *own;
    }

    void root_task(pair_ref root, Source src, std::size_t w) {
        std::optional<Source> own;
        if (worker_sources_ == nullptr) own.emplace(std::move(src));
        Source& bits = source_for(own, w);
        task_counters c;
        std::vector<pending_node> stack{{root.records, root.first}};
        // Sequential phase; empty for the plain parallel engine.
        while (!stack.empty() && stack.size() < switch_at_) {
            const pending_node n = stack.back();
            stack.pop_back();
            if (!bits.next_bit()) continue;
            const pair_ref kids = store_.alloc_pair(w);
            n.record->first_child = kids.first;
            c.nodes += 2;
            stack.push_back({kids.records + 1, kids.first.sibling()});
            stack.push_back({kids.records, kids.first});
            if (c.nodes >= flush_interval_ && !flush(c)) break;
        }
        if (!stack.empty() && !aborted()) {
            threshold_loop(std::move(stack), bits, own, c, w);
        }
        finish(c, own ? &*own : nullptr);
    }

    void spawned_task(batch b, std::size_t w) {
        if (params_.task_start_hook) params_.task_start_hook();
        task_counters c;
        try {
            Source& bits = source_for(b.source, w);
            threshold_loop(std::move(b.nodes), bits, b.source, c, w);
        } catch (const std::bad_alloc&) {
            fail(abort_oom);
        }
        finish(c, b.source ? &*b.source : nullptr);
    }

    void threshold_loop(std::vector<pending_node> lds1, Source& bits, std::optional<Source>& own,
                        task_counters& c, std::size_t w) {
        const std::size_t t = params_.threshold;
        std::vector<pending_node> lds2;
        std::uint64_t next_child = 0;
        while (!lds1.empty()) {
            std::vector<pending_node>& from = lds2.empty() ? lds1 : lds2;
            const pending_node n = from.back();
            from.pop_back();
            if (!bits.next_bit()) continue;
            const pair_ref kids = store_.alloc_pair(w);
            n.record->first_child = kids.first;
            if (n.handle.worker() != w) ++c.foreign;
            c.nodes += 2;
            const bool to_first = lds1.size() < t;
            std::vector<pending_node>& into = to_first ? lds1 : lds2;
            into.push_back({kids.records + 1, kids.first.sibling()});
            into.push_back({kids.records, kids.first});
            if (!to_first && lds2.size() >= t) {
                batch handoff{std::move(lds2), std::nullopt};
                if (own) handoff.source.emplace(own->split(next_child));
                ++next_child;
                spawned_.fetch_add(1, std::memory_order_relaxed);
                handed_.fetch_add(handoff.nodes.size(), std::memory_order_relaxed);
                pool_.spawn([this, b = std::move(handoff)](std::size_t worker) mutable {
                    spawned_task(std::move(b), worker);
                });
                lds2 = {};
            }
            if (c.nodes >= flush_interval_ && !flush(c)) return;
        }
    }

    node_store& store_;
    task_pool& pool_;
    const gen_params& params_;
    std::vector<Source>* worker_sources_;
    const std::size_t switch_at_;
    const std::uint64_t flush_interval_;

    alignas(128) std::atomic<std::uint64_t> total_{0};
    alignas(128) std::atomic<int> abort_{abort_none};
    alignas(128) std::atomic<std::uint64_t> spawned_{0};
    std::atomic<std::uint64_t> handed_{0};
    std::atomic<std::uint64_t> foreign_{0};
    std::atomic<std::uint64_t> bits_{0};
    std::atomic<std::uint64_t> max_waste_{0};
    std::atomic<std::uint64_t> sources_{0};
};

} // namespace detail

/// Threshold-parallel engine (params.algo == parallel) or hybrid engine
/// (params.algo == hybrid: sequential until the stack holds hybrid_switch
/// nodes, then the pending stack becomes the first task's lds1).
///
/// With `worker_sources == nullptr` every task draws from its own stream,
/// split from its parent's by spawn index; the tree is then a function of
/// (root stream, threshold, cap) only. Otherwise task bits come from the
/// stream of whichever worker runs the task. Resets the store, which must
/// have at least pool.workers() arenas.
template <random_bit_source Source>
gen_outcome generate_parallel(Source root, node_store& store, task_pool& pool, const gen_params& params,
                              std::vector<Source>* worker_sources = nullptr) {
    params.validate();
    if (store.workers() < pool.workers()) throw std::invalid_argument("store has fewer arenas than pool workers");
    if (worker_sources != nullptr && worker_sources->size() < pool.workers())
        throw std::invalid_argument("need one bit source per worker");
    detail::parallel_job<Source> job(store, pool, params, worker_sources);
    return job.run(std::move(root));
}

/// Owns the store, and for the task engines the pool, so repeated
/// generations reuse both.
class generator {
public:
    explicit generator(gen_params params, std::uint32_t slab_capacity = node_store::default_slab_capacity)
        : params_(std::move(params)), store_((params_.validate(), params_.workers), slab_capacity) {
        if (uses_pool()) pool_ = std::make_unique<task_pool>(params_.workers);
        if (uses_pool() && params_.rng == rng_mode::per_worker) {
            worker_sources_.reserve(params_.workers);
            for (std::uint64_t w = 0; w < params_.workers; ++w)
                worker_sources_.emplace_back(params_.seed, std::initializer_list<std::uint64_t>{w});
        }
    }

    const gen_params& params() const noexcept { return params_; }
    node_store& store() noexcept { return store_; }

    /// Tree rooted at the stream (params.seed, []). Invalidates the previous
    /// tree of this generator.
    gen_outcome run() { return run(bit_source(params_.seed)); }

    /// Same, with an explicit root stream. In per-worker mode the root stream
    /// is ignored: worker w draws from its own stream (params.seed, [w]),
    /// which persists across runs of this generator.
    gen_outcome run(bit_source root) {
        switch (params_.algo) {
        case algorithm::naive: return generate_naive(root, store_, params_.max_nodes);
        case algorithm::iterative: return generate_iterative(root, store_, params_.max_nodes);
        case algorithm::parallel:
        case algorithm::hybrid: break;
        }
        if (params_.rng == rng_mode::per_worker)
            return generate_parallel(std::move(root), store_, *pool_, params_, &worker_sources_);
        return generate_parallel(std::move(root), store_, *pool_, params_);
    }

private:
    bool uses_pool() const noexcept {
        return params_.algo == algorithm::parallel || params_.algo == algorithm::hybrid;
    }

    gen_params params_;
    node_store store_;
    std::unique_ptr<task_pool> pool_;
    std::vector<bit_source> worker_sources_;
};

} // namespace gwtree

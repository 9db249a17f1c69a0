#pragma once

// Deterministic analyses of an already generated tree. No randomness is
// consumed; everything here is a pure function of the tree shape.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "treestore.hpp"

namespace gwtree {

class unsupported_threshold : public std::invalid_argument {
public:
    explicit unsupported_threshold(std::size_t t)
        : std::invalid_argument("unsupported threshold " + std::to_string(t)) {}
};

enum class lifetime_model { marking, engine };

struct lifetime_record {
    std::size_t lifetime = 0;
    lifetime_model model = lifetime_model::marking;
    std::size_t threshold = 1;
};

/// Nodes the first thread treats under the marking model.
///
/// Threshold 1: the left spine (root, then always the left child).
/// Threshold 2: a leaf counts 1; a node with two leaf children counts 3; a
/// node with one leaf child counts 2 (itself and the leaf) plus the other
/// child's lifetime; a node with two internal children counts 2 (itself and
/// the root of its right child, whose subtrees are handed off) plus the left
/// child's lifetime.
template <binary_tree_view T>
std::size_t mark_lifetime(const T& t, std::size_t threshold) {
    if (threshold == 1) return left_spine(t);
    if (threshold != 2) throw unsupported_threshold(threshold);
    std::size_t k = 0;
    auto v = t.root();
    for (;;) {
        if (t.is_leaf(v)) return k + 1;
        const auto l = t.left(v);
        const auto r = t.right(v);
        const bool ll = t.is_leaf(l);
        const bool rl = t.is_leaf(r);
        if (ll && rl) return k + 3;
        k += 2;
        v = ll ? r : l;
    }
}

struct engine_replay {
    lifetime_record first_task;
    std::size_t tasks_spawned = 0;
    /// Nodes treated by each task, in spawn order (first task first).
    std::vector<std::size_t> per_task_loads;
    /// Largest |lds1| + |lds2| seen inside any single task.
    std::size_t peak_task_pending = 0;
    /// Whether |lds1| was exactly the threshold every time an empty lds2
    /// started to fill.
    bool lds1_full_on_overflow = true;
};

/// Replays the threshold-parallel engine's control flow on a known tree:
/// the bit drawn for a node is simply whether it is internal.
template <binary_tree_view T>
engine_replay engine_lifetime(const T& t, std::size_t threshold) {
    if (threshold < 1) throw unsupported_threshold(threshold);
    using node = typename T::node_type;
    engine_replay out;
    std::vector<std::vector<node>> batches;
    batches.push_back({t.root()});
    for (std::size_t next = 0; next < batches.size(); ++next) {
        std::vector<node> lds1 = std::move(batches[next]);
        std::vector<node> lds2;
        std::size_t load = 0;
        while (!lds1.empty()) {
            std::vector<node>& from = lds2.empty() ? lds1 : lds2;
            const node v = from.back();
            from.pop_back();
            ++load;
            if (t.is_leaf(v)) continue;
            const bool to_first = lds1.size() < threshold;
            if (!to_first && lds2.empty() && lds1.size() != threshold) out.lds1_full_on_overflow = false;
            std::vector<node>& into = to_first ? lds1 : lds2;
            into.push_back(t.right(v));
            into.push_back(t.left(v));
            out.peak_task_pending = std::max(out.peak_task_pending, lds1.size() + lds2.size());
            if (!to_first && lds2.size() >= threshold) {
                batches.push_back(std::move(lds2));
                lds2 = {};
                ++out.tasks_spawned;
            }
        }
        out.per_task_loads.push_back(load);
    }
    out.first_task = {out.per_task_loads.front(), lifetime_model::engine, threshold};
    return out;
}

/// Per-node timing under the fully parallel model (unbounded workers,
/// free spawns). Root completes at step 1.
struct node_timing {
    std::size_t level;
    std::size_t completion;
};

/// Calls f(node_timing) for every node.
///
/// Threshold 1: a task treats a node, keeps the left child and hands the
/// right one to a new task that starts on the next step.
/// Threshold 2: a task treats its node, then the leaf child if there is one,
/// then descends; with two internal children it treats the right child's
/// root before descending left, and that root's children go to a new task
/// starting on the step after.
template <binary_tree_view T, class F>
void for_each_timing(const T& t, std::size_t threshold, F&& f) {
    if (threshold != 1 && threshold != 2) throw unsupported_threshold(threshold);
    using node = typename T::node_type;
    struct item {
        node v;
        std::size_t level;
        std::size_t step;
        bool children_only;  // v already treated; handle its children from `step`
    };
    std::vector<item> work{{t.root(), 0, 1, false}};
    while (!work.empty()) {
        const item it = work.back();
        work.pop_back();
        if (!it.children_only) {
            f(node_timing{it.level, it.step});
            if (!t.is_leaf(it.v)) work.push_back({it.v, it.level, it.step + 1, true});
            continue;
        }
        const node l = t.left(it.v);
        const node r = t.right(it.v);
        const std::size_t lv = it.level + 1;
        const std::size_t s = it.step;
        if (threshold == 1) {
            work.push_back({l, lv, s, false});
            work.push_back({r, lv, s, false});
            continue;
        }
        const bool ll = t.is_leaf(l);
        const bool rl = t.is_leaf(r);
        if (ll && rl) {
            f(node_timing{lv, s});
            f(node_timing{lv, s + 1});
        } else if (ll || rl) {
            f(node_timing{lv, s});
            work.push_back({ll ? r : l, lv, s + 1, false});
        } else {
            f(node_timing{lv, s});
            work.push_back({r, lv, s + 1, true});
            work.push_back({l, lv, s + 1, false});
        }
    }
}

/// Steps until the last node is treated in the fully parallel model.
template <binary_tree_view T>
std::size_t parallel_time(const T& t, std::size_t threshold) {
    std::size_t last = 0;
    for_each_timing(t, threshold, [&](node_timing nt) { last = std::max(last, nt.completion); });
    return last;
}

/// Threshold-2 timing against the "treated after 2h-1 or 2h operations"
/// window, read as completion step in {2h, 2h+1} for level h >= 1 (a node
/// treated after k operations completes at step k + 1, as at threshold 1).
struct window_report {
    std::size_t nodes_checked = 0;
    std::size_t early = 0;
    std::size_t late = 0;
    /// max over non-root nodes of completion - 2 * level.
    long max_excess = 0;

    std::size_t violations() const noexcept { return early + late; }
};

template <binary_tree_view T>
window_report threshold2_window(const T& t) {
    window_report rep;
    rep.max_excess = std::numeric_limits<long>::min();
    for_each_timing(t, 2, [&](node_timing nt) {
        if (nt.level == 0) return;
        ++rep.nodes_checked;
        const std::size_t lo = 2 * nt.level;
        if (nt.completion < lo) ++rep.early;
        else if (nt.completion > lo + 1) ++rep.late;
        rep.max_excess = std::max(rep.max_excess, static_cast<long>(nt.completion) - static_cast<long>(lo));
    });
    if (rep.nodes_checked == 0) rep.max_excess = 0;
    return rep;
}

enum class traversal { bfs, dfs };

/// Largest number of pending nodes while replaying the single-structure
/// process (queue for bfs, left-first stack for dfs). The count starts at 1
/// and is sampled after every pop-and-push step.
template <binary_tree_view T>
std::size_t peak_load(const T& t, traversal order) {
    using node = typename T::node_type;
    std::vector<node> buf{t.root()};
    std::size_t head = 0;
    std::size_t peak = 1;
    while (head < buf.size()) {
        node v;
        if (order == traversal::bfs) {
            v = buf[head++];
        } else {
            v = buf.back();
            buf.pop_back();
        }
        if (!t.is_leaf(v)) {
            if (order == traversal::bfs) {
                buf.push_back(t.left(v));
                buf.push_back(t.right(v));
            } else {
                buf.push_back(t.right(v));
                buf.push_back(t.left(v));
            }
        }
        peak = std::max(peak, buf.size() - head);
        if (order == traversal::bfs && head > 4096 && head * 2 > buf.size()) {
            buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(head));
            head = 0;
        }
    }
    return peak;
}

struct run_metrics {
    std::size_t peak_load = 0;
    /// Only defined for thresholds 1 and 2.
    std::optional<std::size_t> parallel_time;
    std::size_t tasks_spawned = 0;
    std::vector<std::size_t> per_task_loads;
};

template <binary_tree_view T>
run_metrics measure(const T& t, std::size_t threshold, traversal order = traversal::bfs) {
    run_metrics m;
    m.peak_load = peak_load(t, order);
    if (threshold == 1 || threshold == 2) m.parallel_time = parallel_time(t, threshold);
    engine_replay r = engine_lifetime(t, threshold);
    m.tasks_spawned = r.tasks_spawned;
    m.per_task_loads = std::move(r.per_task_loads);
    return m;
}

} // namespace gwtree

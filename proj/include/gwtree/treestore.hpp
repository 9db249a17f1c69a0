#pragma once

// Slab-allocated binary trees.
//
// Every worker owns a chain of fixed-capacity slabs. Children are always
// allocated as an adjacent pair, so a node record only stores the handle of
// its first child; the second child lives at offset + 1 of the same slab.
// Handles are (worker, slab, offset) triples rather than addresses, which
// keeps trees relocatable and lets tests inspect where nodes went.

#include <algorithm>
#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gwtree {

class node_handle {
public:
    static constexpr unsigned worker_bits = 16;
    static constexpr unsigned slab_bits = 24;
    static constexpr unsigned offset_bits = 24;
    static constexpr std::size_t max_workers = std::size_t{1} << worker_bits;
    static constexpr std::size_t max_slabs = std::size_t{1} << slab_bits;
    static constexpr std::size_t max_slab_capacity = std::size_t{1} << offset_bits;

    constexpr node_handle() noexcept = default;
    constexpr node_handle(std::uint32_t worker, std::uint32_t slab, std::uint32_t offset) noexcept
        : bits_((std::uint64_t{worker} << (slab_bits + offset_bits)) |
                (std::uint64_t{slab} << offset_bits) | offset) {}

    static constexpr node_handle null() noexcept { return node_handle(); }

    constexpr bool is_null() const noexcept { return bits_ == null_bits; }
    constexpr explicit operator bool() const noexcept { return !is_null(); }

    constexpr std::uint32_t worker() const noexcept {
        return static_cast<std::uint32_t>(bits_ >> (slab_bits + offset_bits));
    }
    constexpr std::uint32_t slab() const noexcept {
        return static_cast<std::uint32_t>((bits_ >> offset_bits) & ((1U << slab_bits) - 1));
    }
    constexpr std::uint32_t offset() const noexcept {
        return static_cast<std::uint32_t>(bits_ & ((1U << offset_bits) - 1));
    }
    /// The other half of a pair whose first node is *this.
    constexpr node_handle sibling() const noexcept { return from_bits(bits_ + 1); }

    constexpr std::uint64_t raw() const noexcept { return bits_; }
    static constexpr node_handle from_bits(std::uint64_t b) noexcept {
        node_handle h;
        h.bits_ = b;
        return h;
    }

    friend constexpr auto operator<=>(node_handle, node_handle) noexcept = default;

    friend std::ostream& operator<<(std::ostream& os, node_handle h) {
        if (h.is_null()) return os << "null";
        return os << h.worker() << ':' << h.slab() << ':' << h.offset();
    }

private:
    static constexpr std::uint64_t null_bits = ~std::uint64_t{0};
    std::uint64_t bits_ = null_bits;
};

/// A leaf has no first child. An internal node's children are first_child
/// and first_child.sibling().
struct node_record {
    node_handle first_child;

    bool is_leaf() const noexcept { return first_child.is_null(); }
};

struct slab {
    std::unique_ptr<node_record[]> nodes;
    std::uint32_t capacity = 0;
    std::uint32_t used = 0;
    std::uint32_t owner = 0;
    slab* next = nullptr;
};

/// A freshly allocated pair: handle of the first node plus a pointer to the
/// two records, valid for the lifetime of the store.
struct pair_ref {
    node_handle first;
    node_record* records;
};

class node_store {
public:
    static constexpr std::uint32_t default_slab_capacity = 1U << 16;

    explicit node_store(std::size_t workers = 1, std::uint32_t slab_capacity = default_slab_capacity)
        : capacity_(slab_capacity), arenas_(workers) {
        if (workers == 0 || workers > node_handle::max_workers)
            throw std::invalid_argument("node_store: worker count out of range");
        if (slab_capacity < 2 || slab_capacity % 2 != 0 || slab_capacity > node_handle::max_slab_capacity)
            throw std::invalid_argument("node_store: slab capacity must be even and in [2, 2^24]");
    }

    node_store(const node_store&) = delete;
    node_store& operator=(const node_store&) = delete;
    node_store(node_store&&) noexcept = default;
    node_store& operator=(node_store&&) noexcept = default;

    std::size_t workers() const noexcept { return arenas_.size(); }
    std::uint32_t slab_capacity() const noexcept { return capacity_; }

    /// Two adjacent leaf records in the worker's current slab. Opens (or
    /// reuses, after reset()) the next slab of the chain when the current one
    /// is full. Only the owning worker may call this during generation.
    /// Throws std::bad_alloc when a slab cannot be obtained.
    pair_ref alloc_pair(std::size_t worker) {
        arena& a = arenas_[worker];
        if (a.current == nullptr || a.current->used + 2 > a.current->capacity) open_slab(a, worker);
        slab& s = *a.current;
        node_record* recs = s.nodes.get() + s.used;
        recs[0].first_child = node_handle::null();
        recs[1].first_child = node_handle::null();
        const node_handle first(static_cast<std::uint32_t>(worker),
                                static_cast<std::uint32_t>(a.in_use - 1), s.used);
        s.used += 2;
        return {first, recs};
    }

    /// Root allocation: occupies a whole pair so that pair offsets stay even.
    pair_ref alloc_root(std::size_t worker) { return alloc_pair(worker); }

    const node_record& record(node_handle h) const {
        return arenas_[h.worker()].slabs[h.slab()]->nodes[h.offset()];
    }
    node_record& record(node_handle h) {
        return arenas_[h.worker()].slabs[h.slab()]->nodes[h.offset()];
    }

    /// Forget every tree; slabs are kept and reused by later allocations.
    void reset() noexcept {
        for (auto& a : arenas_) {
            for (auto& s : a.slabs) s->used = 0;
            a.in_use = 0;
            a.current = nullptr;
        }
    }

    /// Slabs opened since the last reset.
    std::size_t slabs_in_use(std::size_t worker) const noexcept { return arenas_[worker].in_use; }
    /// Slabs ever allocated for the worker (kept across resets).
    std::size_t slabs_allocated(std::size_t worker) const noexcept { return arenas_[worker].slabs.size(); }
    const slab& slab_at(std::size_t worker, std::size_t index) const { return *arenas_[worker].slabs.at(index); }

    std::size_t nodes_reserved() const noexcept {
        std::size_t total = 0;
        for (const auto& a : arenas_)
            for (std::size_t i = 0; i < a.in_use; ++i) total += a.slabs[i]->used;
        return total;
    }

private:
    struct alignas(128) arena {
        std::vector<std::unique_ptr<slab>> slabs;
        std::size_t in_use = 0;
        slab* current = nullptr;
    };

    void open_slab(arena& a, std::size_t worker) {
        if (a.in_use < a.slabs.size()) {
            a.current = a.slabs[a.in_use++].get();
            a.current->used = 0;
            return;
        }
        if (a.slabs.size() >= node_handle::max_slabs) throw std::bad_alloc();
        auto s = std::make_unique<slab>();
        s->nodes = std::make_unique_for_overwrite<node_record[]>(capacity_);
        s->capacity = capacity_;
        s->owner = static_cast<std::uint32_t>(worker);
        if (!a.slabs.empty()) a.slabs.back()->next = s.get();
        a.slabs.push_back(std::move(s));
        a.current = a.slabs.back().get();
        ++a.in_use;
    }

    std::uint32_t capacity_;
    std::vector<arena> arenas_;
};

/// Read-only navigation over some binary tree representation.
template <class T>
concept binary_tree_view = requires(const T& t, typename T::node_type v) {
    { t.root() } -> std::convertible_to<typename T::node_type>;
    { t.is_leaf(v) } -> std::convertible_to<bool>;
    { t.left(v) } -> std::convertible_to<typename T::node_type>;
    { t.right(v) } -> std::convertible_to<typename T::node_type>;
};

/// A tree living in a node_store. Cheap to copy; valid until the store is
/// reset or destroyed.
class tree {
public:
    using node_type = node_handle;

    tree() = default;
    tree(const node_store& store, node_handle root, std::size_t node_count) noexcept
        : store_(&store), root_(root), size_(node_count) {}

    node_handle root() const noexcept { return root_; }
    std::size_t size() const noexcept { return size_; }
    const node_store& store() const noexcept { return *store_; }

    bool is_leaf(node_handle h) const { return store_->record(h).is_leaf(); }
    node_handle left(node_handle h) const { return store_->record(h).first_child; }
    node_handle right(node_handle h) const { return store_->record(h).first_child.sibling(); }

private:
    const node_store* store_ = nullptr;
    node_handle root_;
    std::size_t size_ = 0;
};

static_assert(binary_tree_view<tree>);

class malformed_encoding : public std::invalid_argument {
public:
    malformed_encoding(std::size_t index, const std::string& what)
        : std::invalid_argument(what + " at index " + std::to_string(index)), index_(index) {}

    /// Position of the first character that breaks the prefix rule
    /// (the string length when the string ends with nodes still pending).
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Preorder word, left subtree first: '1' internal, '0' leaf.
template <binary_tree_view T>
std::string encode_bits(const T& t) {
    std::string out;
    std::vector<typename T::node_type> stack{t.root()};
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (t.is_leaf(v)) {
            out.push_back('0');
        } else {
            out.push_back('1');
            stack.push_back(t.right(v));
            stack.push_back(t.left(v));
        }
    }
    return out;
}

/// Checks the prefix rule without building anything.
inline void validate_bits(std::string_view s) {
    if (s.empty()) throw malformed_encoding(0, "empty encoding");
    std::size_t pending = 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (pending == 0) throw malformed_encoding(i, "characters after a complete tree");
        if (s[i] == '1') ++pending;
        else if (s[i] == '0') --pending;
        else throw malformed_encoding(i, "unexpected character");
    }
    if (pending != 0) throw malformed_encoding(s.size(), "encoding ends with pending leaves");
}

/// Builds the tree of a preorder word into `store` (allocating as `worker`).
/// Does not reset the store, so several decoded trees can coexist.
inline tree decode_bits(node_store& store, std::string_view s, std::size_t worker = 0) {
    validate_bits(s);
    const pair_ref root = store.alloc_root(worker);
    std::vector<node_record*> pending{root.records};
    for (char c : s) {
        node_record* rec = pending.back();
        pending.pop_back();
        if (c == '1') {
            const pair_ref kids = store.alloc_pair(worker);
            rec->first_child = kids.first;
            pending.push_back(kids.records + 1);
            pending.push_back(kids.records);
        }
    }
    return tree(store, root.first, s.size());
}

template <binary_tree_view T>
std::size_t size(const T& t) {
    std::size_t n = 0;
    std::vector<typename T::node_type> stack{t.root()};
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        ++n;
        if (!t.is_leaf(v)) {
            stack.push_back(t.right(v));
            stack.push_back(t.left(v));
        }
    }
    return n;
}

/// Nodes on the longest root-to-leaf path.
template <binary_tree_view T>
std::size_t height_nodes(const T& t) {
    std::size_t best = 0;
    std::vector<std::pair<typename T::node_type, std::size_t>> stack{{t.root(), 1}};
    while (!stack.empty()) {
        auto [v, depth] = stack.back();
        stack.pop_back();
        best = std::max(best, depth);
        if (!t.is_leaf(v)) {
            stack.emplace_back(t.right(v), depth + 1);
            stack.emplace_back(t.left(v), depth + 1);
        }
    }
    return best;
}

/// Nodes on the always-go-left path, terminating leaf included.
template <binary_tree_view T>
std::size_t left_spine(const T& t) {
    std::size_t n = 1;
    for (auto v = t.root(); !t.is_leaf(v); v = t.left(v)) ++n;
    return n;
}

template <binary_tree_view A, binary_tree_view B>
bool structurally_equal(const A& a, const B& b) {
    std::vector<std::pair<typename A::node_type, typename B::node_type>> stack{{a.root(), b.root()}};
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        const bool lx = a.is_leaf(x);
        if (lx != b.is_leaf(y)) return false;
        if (!lx) {
            stack.emplace_back(a.left(x), b.left(y));
            stack.emplace_back(a.right(x), b.right(y));
        }
    }
    return true;
}

/// DOT digraph; nodes are numbered in discovery order.
template <binary_tree_view T>
std::string to_dot(const T& t, std::string_view graph_name = "tree") {
    std::ostringstream os;
    os << "digraph " << graph_name << " {\n";
    std::size_t next_id = 0;
    std::vector<std::pair<typename T::node_type, std::size_t>> stack{{t.root(), next_id++}};
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    while (!stack.empty()) {
        auto [v, id] = stack.back();
        stack.pop_back();
        const bool leaf = t.is_leaf(v);
        os << "  n" << id << (leaf ? " [shape=point];\n" : " [shape=circle,label=\"\"];\n");
        if (!leaf) {
            const std::size_t l = next_id++;
            const std::size_t r = next_id++;
            edges.emplace_back(id, l);
            edges.emplace_back(id, r);
            stack.emplace_back(t.right(v), r);
            stack.emplace_back(t.left(v), l);
        }
    }
    for (auto [from, to] : edges) os << "  n" << from << " -> n" << to << ";\n";
    os << "}\n";
    return os.str();
}

} // namespace gwtree

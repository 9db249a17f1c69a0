#pragma once

// Test-only reference structures, kept independent of the library code they
// check: a pointer-style tree built by a recursive parser, a scripted bit
// source, and brute-force helpers.

#include <gwtree/bitsource.hpp>
#include <gwtree/treestore.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gwtest {

struct ref_node {
    std::unique_ptr<ref_node> left;
    std::unique_ptr<ref_node> right;
};

// Recursive build from a preorder word. Only used on small or moderate
// trees, so recursion depth is not a concern.
class ref_tree {
public:
    using node_type = const ref_node*;

    explicit ref_tree(std::string_view bits) {
        std::size_t pos = 0;
        root_ = parse(bits, pos);
        if (pos != bits.size()) throw std::invalid_argument("trailing characters");
    }

    node_type root() const { return root_.get(); }
    bool is_leaf(node_type v) const { return !v->left; }
    node_type left(node_type v) const { return v->left.get(); }
    node_type right(node_type v) const { return v->right.get(); }

    std::size_t size() const { return count(root_.get()); }
    std::size_t height() const { return height(root_.get()); }
    std::string preorder() const {
        std::string out;
        write(root_.get(), out);
        return out;
    }

private:
    static std::unique_ptr<ref_node> parse(std::string_view s, std::size_t& pos) {
        if (pos >= s.size()) throw std::invalid_argument("word ended early");
        auto n = std::make_unique<ref_node>();
        if (s[pos++] == '1') {
            n->left = parse(s, pos);
            n->right = parse(s, pos);
        }
        return n;
    }
    static std::size_t count(const ref_node* n) { return n->left ? 1 + count(n->left.get()) + count(n->right.get()) : 1; }
    static std::size_t height(const ref_node* n) {
        return n->left ? 1 + std::max(height(n->left.get()), height(n->right.get())) : 1;
    }
    static void write(const ref_node* n, std::string& out) {
        out.push_back(n->left ? '1' : '0');
        if (n->left) {
            write(n->left.get(), out);
            write(n->right.get(), out);
        }
    }

    std::unique_ptr<ref_node> root_;
};

static_assert(gwtree::binary_tree_view<ref_tree>);

// Plays a fixed string of '0'/'1', then zeros forever. Splits inherit
// nothing: a child plays the script registered for its index, else zeros.
class scripted_source {
public:
    explicit scripted_source(std::string script, std::vector<std::string> children = {})
        : script_(std::move(script)), children_(std::move(children)) {}

    bool next_bit() {
        const bool b = pos_ < script_.size() && script_[pos_] == '1';
        ++pos_;
        return b;
    }
    scripted_source split(std::uint64_t i) const {
        return scripted_source(i < children_.size() ? children_[i] : std::string());
    }
    std::uint64_t bits_consumed() const { return pos_; }
    std::uint64_t wasted_bits() const { return 0; }

private:
    std::string script_;
    std::vector<std::string> children_;
    std::size_t pos_ = 0;
};

static_assert(gwtree::random_bit_source<scripted_source>);

// All preorder words of n nodes, built by inserting leaves: a tree of size
// n + 2 is a tree of size n with one leaf turned into a cherry. Duplicates
// are removed, so this is independent of the library's prefix-rule walk.
inline std::vector<std::string> brute_force_words(std::size_t n) {
    std::vector<std::string> level{"0"};
    for (std::size_t size = 1; size < n; size += 2) {
        std::vector<std::string> next;
        for (const auto& w : level)
            for (std::size_t i = 0; i < w.size(); ++i)
                if (w[i] == '0') next.push_back(w.substr(0, i) + "100" + w.substr(i + 1));
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        level = std::move(next);
    }
    return level;
}

// Random free Galton-Watson word from an arbitrary bit supplier, capped.
template <class Source>
std::string random_word(Source& s, std::size_t cap) {
    std::string w;
    std::size_t pending = 1;
    while (pending > 0 && w.size() < cap) {
        const bool b = s.next_bit() && w.size() + pending + 2 <= cap;
        w.push_back(b ? '1' : '0');
        pending = b ? pending + 1 : pending - 1;
    }
    return w;
}

} // namespace gwtest

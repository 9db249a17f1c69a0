#pragma once

// Size-conditioned sampling: uniform binary trees with exactly n nodes.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "bitsource.hpp"
#include "engines.hpp"
#include "treestore.hpp"

namespace gwtree {

class invalid_size : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class rejection_budget_exceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class sampling_method { rejection, cycle_lemma };

inline void require_odd_size(std::size_t n) {
    if (n == 0 || n % 2 == 0) throw invalid_size("tree size must be odd and positive, got " + std::to_string(n));
}

/// Start of the unique rotation of `word` that is a valid preorder word:
/// the position right after the first minimum of the +1/-1 prefix sums.
/// The word must contain exactly one more '0' than '1'.
inline std::size_t valid_rotation(std::string_view word) {
    long sum = 0;
    long best = std::numeric_limits<long>::max();
    std::size_t at = 0;
    for (std::size_t i = 0; i < word.size(); ++i) {
        sum += word[i] == '1' ? 1 : -1;
        if (sum < best) {
            best = sum;
            at = i + 1;
        }
    }
    return at % word.size();
}

/// Uniform preorder word of size n: Fisher-Yates shuffle of (n-1)/2 ones and
/// (n+1)/2 zeros, rotated into place. Theta(n) bits on average.
template <class Source>
std::string cycle_lemma_word(std::size_t n, Source& bits) {
    require_odd_size(n);
    const std::size_t ones = (n - 1) / 2;
    std::string w(n, '0');
    std::fill_n(w.begin(), ones, '1');
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(bits.next_below(i + 1));
        std::swap(w[i], w[j]);
    }
    const std::size_t start = valid_rotation(w);
    std::rotate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(start), w.end());
    return w;
}

/// Draws uniform trees of a fixed size.
///
/// cycle_lemma: shuffle and rotate, linear time. rejection: rerun the
/// configured engine with cap = n until a run completes with exactly n
/// nodes; attempt i uses the root stream split(i) of the sampler's stream.
/// Expected attempts grow like n^{3/2}, so keep rejection to small n.
class conditioned_sampler {
public:
    static constexpr std::uint64_t default_attempt_budget = std::uint64_t{1} << 32;

    conditioned_sampler(gen_params engine, std::size_t n, sampling_method method,
                        std::uint64_t attempt_budget = default_attempt_budget)
        : gen_((require_odd_size(n), with_cap(std::move(engine), n))), bits_(gen_.params().seed),
          n_(n), method_(method), budget_(attempt_budget) {}

    /// Next tree; lives in store() and is invalidated by the following call.
    tree next() {
        if (method_ == sampling_method::cycle_lemma) {
            node_store& store = gen_.store();
            store.reset();
            return decode_bits(store, cycle_lemma_word(n_, bits_));
        }
        for (std::uint64_t tries = 0; tries < budget_; ++tries) {
            gen_outcome out = gen_.run(bits_.split(attempts_++));
            if (out.complete() && out.nodes_generated == n_) return out.tree;
        }
        throw rejection_budget_exceeded("no tree of size " + std::to_string(n_) + " within " +
                                        std::to_string(budget_) + " attempts");
    }

    std::size_t size() const noexcept { return n_; }
    sampling_method method() const noexcept { return method_; }
    /// Engine runs so far (rejection only).
    std::uint64_t attempts() const noexcept { return attempts_; }
    std::uint64_t bits_consumed() const noexcept { return bits_.bits_consumed(); }
    node_store& store() noexcept { return gen_.store(); }

private:
    static gen_params with_cap(gen_params p, std::size_t n) {
        p.max_nodes = n;
        p.hybrid_switch = std::max(p.hybrid_switch, p.threshold);
        return p;
    }

    generator gen_;
    bit_source bits_;
    std::size_t n_;
    sampling_method method_;
    std::uint64_t budget_;
    std::uint64_t attempts_ = 0;
};

} // namespace gwtree

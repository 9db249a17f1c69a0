#pragma once

// Buffered, splittable streams of unbiased random bits.
//
// A source draws 64-bit words from a xoshiro256** engine and hands them out
// one bit at a time, lowest-order bit first. Every source carries a lineage
// (master seed plus the path of child indices used to split it); the whole
// bit stream is a pure function of that lineage, so a tree generated by many
// tasks does not depend on which worker ran which task.

#include <array>
#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>

namespace gwtree {

/// SplitMix64 finalizer. Used for seed expansion and lineage hashing only.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class splitmix64 {
public:
    constexpr explicit splitmix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman & Vigna). Period 2^256 - 1.
class xoshiro256ss {
public:
    using result_type = std::uint64_t;

    explicit xoshiro256ss(std::uint64_t seed) noexcept {
        splitmix64 sm(seed);
        for (auto& w : s_) w = sm();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

private:
    std::array<std::uint64_t, 4> s_;
};

/// Word generators usable behind a bit source: seeded from a 64-bit digest,
/// producing full 64-bit words.
template <class E>
concept word_engine = std::constructible_from<E, std::uint64_t> && requires(E e) {
    { e() } -> std::same_as<std::uint64_t>;
};

namespace detail {

inline constexpr std::uint64_t lineage_root_salt = 0x6a09e667f3bcc908ULL;
inline constexpr std::uint64_t lineage_step_salt = 0xbb67ae8584caa73bULL;

constexpr std::uint64_t lineage_root(std::uint64_t master_seed) noexcept {
    return mix64(master_seed ^ lineage_root_salt);
}

// Order-sensitive: (a, b) and (b, a) give different digests.
constexpr std::uint64_t lineage_step(std::uint64_t digest, std::uint64_t child) noexcept {
    return mix64(digest + lineage_step_salt + mix64(child + 1) * 0x9e3779b97f4a7c15ULL);
}

} // namespace detail

/// Bit stream over a word engine. Padded to 128 bytes so sources owned by
/// different workers never share a cache line.
///
/// The lineage is kept as (master seed, digest of the split path, depth); the
/// path itself is folded into the digest on every split so that deep spawn
/// chains stay O(1) to copy.
template <word_engine Engine>
class alignas(128) basic_bit_source {
public:
    using engine_type = Engine;
    static constexpr unsigned word_bits = 64;

    explicit basic_bit_source(std::uint64_t master_seed,
                              std::span<const std::uint64_t> split_path = {})
        : basic_bit_source(master_seed, fold(master_seed, split_path), split_path.size()) {}

    basic_bit_source(std::uint64_t master_seed, std::initializer_list<std::uint64_t> split_path)
        : basic_bit_source(master_seed,
                           std::span<const std::uint64_t>(split_path.begin(), split_path.size())) {}

    bool next_bit() noexcept {
        if (remaining_ == 0) refill();
        const bool bit = buffer_ & 1U;
        buffer_ >>= 1;
        --remaining_;
        ++consumed_;
        return bit;
    }

    /// Takes `count` bits (1..64); the first bit drawn lands in bit 0 of the
    /// result, so this equals `count` successive next_bit() calls.
    std::uint64_t next_bits(unsigned count) noexcept {
        if (count == 0) return 0;
        consumed_ += count;
        if (count <= remaining_) {
            const std::uint64_t v = count == word_bits ? buffer_ : buffer_ & low_mask(count);
            buffer_ = count == word_bits ? 0 : buffer_ >> count;
            remaining_ -= count;
            return v;
        }
        const unsigned have = remaining_;
        const std::uint64_t low = buffer_;
        refill();
        const unsigned need = count - have;
        const std::uint64_t high = need == word_bits ? buffer_ : buffer_ & low_mask(need);
        buffer_ = need == word_bits ? 0 : buffer_ >> need;
        remaining_ -= need;
        return have == 0 ? high : (low | (high << have));
    }

    /// Exactly uniform on [0, bound) by bit rejection: draw ceil(log2 bound)
    /// bits, retry while the value is >= bound. bound == 1 consumes nothing.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
        if (bound == 1) return 0;
        const auto width = static_cast<unsigned>(std::bit_width(bound - 1));
        for (;;) {
            const std::uint64_t v = next_bits(width);
            if (v < bound) return v;
        }
    }

    /// Child stream for `child_index`; the parent stream is not touched.
    /// Distinct indices of one parent give independent children; reusing an
    /// index gives the same child again.
    basic_bit_source split(std::uint64_t child_index) const {
        return basic_bit_source(master_seed_, detail::lineage_step(digest_, child_index), depth_ + 1);
    }

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t lineage_digest() const noexcept { return digest_; }
    std::size_t lineage_depth() const noexcept { return depth_; }

    unsigned bits_remaining() const noexcept { return remaining_; }
    std::uint64_t bits_consumed() const noexcept { return consumed_; }
    std::uint64_t words_drawn() const noexcept { return words_; }
    /// Bits drawn from the engine but not (yet) handed out; always < word_bits.
    std::uint64_t wasted_bits() const noexcept { return words_ * word_bits - consumed_; }

private:
    basic_bit_source(std::uint64_t master_seed, std::uint64_t digest, std::size_t depth)
        : engine_(digest), master_seed_(master_seed), digest_(digest), depth_(depth) {}

    static std::uint64_t fold(std::uint64_t master_seed, std::span<const std::uint64_t> path) noexcept {
        std::uint64_t d = detail::lineage_root(master_seed);
        for (auto child : path) d = detail::lineage_step(d, child);
        return d;
    }

    static constexpr std::uint64_t low_mask(unsigned n) noexcept { return (std::uint64_t{1} << n) - 1; }

    void refill() noexcept {
        buffer_ = engine_();
        remaining_ = word_bits;
        ++words_;
    }

    Engine engine_;
    std::uint64_t buffer_ = 0;
    unsigned remaining_ = 0;
    std::uint64_t consumed_ = 0;
    std::uint64_t words_ = 0;
    std::uint64_t master_seed_;
    std::uint64_t digest_;
    std::size_t depth_;
};

using bit_source = basic_bit_source<xoshiro256ss>;

/// Anything the engines can draw bits from.
template <class S>
concept random_bit_source = requires(S s, const S cs, std::uint64_t i) {
    { s.next_bit() } -> std::same_as<bool>;
    { cs.split(i) } -> std::same_as<S>;
    { cs.bits_consumed() } -> std::convertible_to<std::uint64_t>;
    { cs.wasted_bits() } -> std::convertible_to<std::uint64_t>;
};

static_assert(random_bit_source<bit_source>);
static_assert(alignof(bit_source) >= 128);

} // namespace gwtree

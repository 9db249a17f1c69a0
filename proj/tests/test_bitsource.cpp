#include <gwtree/bitsource.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

using gwtree::basic_bit_source;
using gwtree::bit_source;

namespace {

// Returns a fixed word sequence; lets tests see exactly what is drawn.
struct scripted_engine {
    static inline std::vector<std::uint64_t> words;
    static inline std::size_t calls = 0;
    std::size_t pos = 0;

    explicit scripted_engine(std::uint64_t) {}
    std::uint64_t operator()() {
        ++calls;
        const std::uint64_t w = words.empty() ? 0 : words[pos % words.size()];
        ++pos;
        return w;
    }
};

std::vector<bool> take_bits(bit_source& s, std::size_t n) {
    std::vector<bool> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = s.next_bit();
    return out;
}

std::size_t first_difference(bit_source a, bit_source b, std::size_t horizon) {
    for (std::size_t i = 0; i < horizon; ++i)
        if (a.next_bit() != b.next_bit()) return i;
    return horizon;
}

} // namespace

TEST(BitSource, SameLineageSameStream) {
    bit_source a(42);
    bit_source b(42);
    EXPECT_EQ(take_bits(a, 10000), take_bits(b, 10000));

    bit_source c(42, {3, 1, 4});
    bit_source d(42, {3, 1, 4});
    EXPECT_EQ(take_bits(c, 10000), take_bits(d, 10000));
}

TEST(BitSource, SplitPathChangesStream) {
    EXPECT_LT(first_difference(bit_source(42), bit_source(42, {0}), 256), 256U);
    EXPECT_LT(first_difference(bit_source(42, {1, 2}), bit_source(42, {2, 1}), 256), 256U);
}

TEST(BitSource, SplitMatchesExplicitPath) {
    bit_source root(42);
    EXPECT_EQ(first_difference(root.split(7).split(2), bit_source(42, {7, 2}), 4096), 4096U);
    EXPECT_EQ(root.split(7).lineage_depth(), 1U);
}

TEST(BitSource, SplitSiblingsDiffer) {
    const bit_source s(99, {5});
    EXPECT_LT(first_difference(s.split(0), s.split(1), 256), 256U);
    // Same index on equal lineages gives the same child.
    const bit_source twin(99, {5});
    EXPECT_EQ(first_difference(s.split(0), twin.split(0), 4096), 4096U);
}

TEST(BitSource, SplitDoesNotDisturbParent) {
    bit_source a(7);
    bit_source b(7);
    auto before_a = take_bits(a, 100);
    auto child = a.split(0);
    (void)child.next_bit();
    auto after_a = take_bits(a, 1000);
    auto ref = take_bits(b, 1100);
    before_a.insert(before_a.end(), after_a.begin(), after_a.end());
    EXPECT_EQ(before_a, ref);
}

TEST(BitSource, LowestOrderBitFirst) {
    scripted_engine::words = {0b0110};
    basic_bit_source<scripted_engine> s(0);
    EXPECT_FALSE(s.next_bit());
    EXPECT_TRUE(s.next_bit());
    EXPECT_TRUE(s.next_bit());
    EXPECT_FALSE(s.next_bit());
    EXPECT_EQ(s.bits_remaining(), 60U);
}

TEST(BitSource, OneWordPerSixtyFourBits) {
    scripted_engine::words = {0xdeadbeefcafef00dULL, 0x0123456789abcdefULL};
    scripted_engine::calls = 0;
    basic_bit_source<scripted_engine> s(0);
    for (int i = 0; i < 64; ++i) (void)s.next_bit();
    EXPECT_EQ(scripted_engine::calls, 1U);
    EXPECT_EQ(s.bits_remaining(), 0U);
    (void)s.next_bit();
    EXPECT_EQ(scripted_engine::calls, 2U);
    EXPECT_EQ(s.words_drawn(), 2U);
    EXPECT_EQ(s.bits_consumed(), 65U);
}

TEST(BitSource, NextBitsEqualsRepeatedNextBit) {
    // Property: for any chunking, next_bits(k) packs the same bits that k
    // calls to next_bit() would return, lowest first.
    bit_source chooser(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const auto seed = chooser.next_bits(64);
        bit_source a(seed);
        bit_source b(seed);
        for (int step = 0; step < 50; ++step) {
            const auto k = static_cast<unsigned>(chooser.next_below(64) + 1);
            const std::uint64_t packed = a.next_bits(k);
            std::uint64_t manual = 0;
            for (unsigned i = 0; i < k; ++i) manual |= std::uint64_t{b.next_bit()} << i;
            ASSERT_EQ(packed, manual) << "k=" << k;
            ASSERT_EQ(a.bits_consumed(), b.bits_consumed());
            ASSERT_EQ(a.words_drawn(), b.words_drawn());
        }
    }
}

TEST(BitSource, BitMeanWithinClt) {
    bit_source s(42);
    constexpr std::size_t n = 1'000'000;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) ones += s.next_bit();
    const double mean = static_cast<double>(ones) / n;
    EXPECT_GE(mean, 0.498);
    EXPECT_LE(mean, 0.502);
    // 4 sigma of a fair coin mean: 4 / sqrt(4N).
    EXPECT_LT(std::abs(mean - 0.5), 4.0 / std::sqrt(4.0 * n));
}

TEST(BitSource, LongestRunBounded) {
    bit_source s(42);
    std::size_t longest = 0;
    std::size_t run = 0;
    bool prev = s.next_bit();
    run = 1;
    for (std::size_t i = 1; i < 1'000'000; ++i) {
        const bool b = s.next_bit();
        run = b == prev ? run + 1 : 1;
        prev = b;
        longest = std::max(longest, run);
    }
    EXPECT_LE(longest, 60U);
    EXPECT_GE(longest, 10U);
}

TEST(BitSource, NextBelowDegenerateBounds) {
    bit_source s(5);
    EXPECT_EQ(s.next_below(1), 0U);
    EXPECT_EQ(s.bits_consumed(), 0U);
    EXPECT_THROW(s.next_below(0), std::invalid_argument);

    bit_source a(77);
    bit_source b(77);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_below(2), std::uint64_t{b.next_bit()});
}

TEST(BitSource, NextBelowThreeIsUniform) {
    bit_source s(2024);
    std::array<std::size_t, 3> counts{};
    constexpr std::size_t n = 300'000;
    for (std::size_t i = 0; i < n; ++i) ++counts[s.next_below(3)];
    for (auto c : counts) {
        const double f = static_cast<double>(c) / n;
        EXPECT_GE(f, 0.330);
        EXPECT_LE(f, 0.337);
    }
}

TEST(BitSource, WasteNeverExceedsOneWord) {
    bit_source s(3);
    bit_source chooser(4);
    for (int i = 0; i < 100000; ++i) {
        if (chooser.next_bit()) (void)s.next_bit();
        else (void)s.next_below(chooser.next_below(1000) + 1);
        ASSERT_LT(s.wasted_bits(), bit_source::word_bits);
        ASSERT_GE(s.bits_consumed(), (s.words_drawn() - 1) * bit_source::word_bits);
    }
}

TEST(BitSource, PaddedAgainstFalseSharing) {
    static_assert(alignof(bit_source) >= 128);
    static_assert(sizeof(bit_source) % 128 == 0);
    std::array<bit_source, 2> pair{bit_source(1), bit_source(2)};
    const auto gap = reinterpret_cast<const char*>(&pair[1]) - reinterpret_cast<const char*>(&pair[0]);
    EXPECT_GE(gap, 128);
}

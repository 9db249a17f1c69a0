#include <gwtree/sampling.hpp>
#include <gwtree/stats.hpp>

#include <gtest/gtest.h>

#include <map>
#include <string>
#include <vector>

#include "support.hpp"

using namespace gwtree;

namespace {

// Shape index over the brute-force word list of size n.
std::map<std::string, std::int64_t> shape_index(std::size_t n) {
    std::map<std::string, std::int64_t> idx;
    for (const auto& w : gwtest::brute_force_words(n)) idx.emplace(w, static_cast<std::int64_t>(idx.size()));
    return idx;
}

empirical_dist sample_shapes(conditioned_sampler& s, std::size_t count) {
    const auto idx = shape_index(s.size());
    empirical_dist d;
    for (std::size_t i = 0; i < count; ++i) {
        const std::string w = encode_bits(s.next());
        auto it = idx.find(w);
        EXPECT_NE(it, idx.end()) << w;
        if (it != idx.end()) d.add(it->second);
    }
    return d;
}

std::vector<std::uint64_t> cell_counts(const empirical_dist& d, std::size_t cells) {
    std::vector<std::uint64_t> c(cells, 0);
    for (const auto& [k, v] : d.counts) c[static_cast<std::size_t>(k)] = v;
    return c;
}

std::map<std::int64_t, double> uniform_over(std::size_t cells) {
    std::map<std::int64_t, double> m;
    for (std::size_t i = 0; i < cells; ++i) m[static_cast<std::int64_t>(i)] = 1.0 / static_cast<double>(cells);
    return m;
}

gen_params engine(algorithm a, std::size_t workers, std::size_t threshold, std::uint64_t seed) {
    gen_params p;
    p.algo = a;
    p.workers = workers;
    p.threshold = threshold;
    p.hybrid_switch = threshold;
    p.seed = seed;
    return p;
}

} // namespace

TEST(Rotation, ValidRotationIsTheUniqueOne) {
    bit_source src(8);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 2 * src.next_below(30) + 1;
        std::string w((n - 1) / 2, '1');
        w.append((n + 1) / 2, '0');
        for (std::size_t i = n - 1; i > 0; --i) std::swap(w[i], w[src.next_below(i + 1)]);
        std::size_t valid_count = 0;
        std::size_t valid_at = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const std::string rot = w.substr(r) + w.substr(0, r);
            bool ok = true;
            try {
                validate_bits(rot);
            } catch (const malformed_encoding&) {
                ok = false;
            }
            if (ok) {
                ++valid_count;
                valid_at = r;
            }
        }
        ASSERT_EQ(valid_count, 1U) << w;
        ASSERT_EQ(valid_rotation(w), valid_at) << w;
    }
}

TEST(CycleLemma, WordIsValidAndHasRightLength) {
    bit_source src(1);
    for (std::size_t n : {1, 3, 5, 101, 2001}) {
        const std::string w = cycle_lemma_word(n, src);
        EXPECT_EQ(w.size(), n);
        EXPECT_NO_THROW(validate_bits(w));
    }
}

TEST(Sampler, SizeOneIsAlwaysTheLeaf) {
    for (auto m : {sampling_method::cycle_lemma, sampling_method::rejection}) {
        conditioned_sampler s(gen_params{}, 1, m);
        for (int i = 0; i < 100; ++i) ASSERT_EQ(encode_bits(s.next()), "0");
    }
}

TEST(Sampler, EvenSizeRejected) {
    EXPECT_THROW(conditioned_sampler(gen_params{}, 8, sampling_method::cycle_lemma), invalid_size);
    EXPECT_THROW(conditioned_sampler(gen_params{}, 0, sampling_method::rejection), invalid_size);
}

TEST(Sampler, RejectionBudget) {
    conditioned_sampler s(gen_params{}, 1001, sampling_method::rejection, 3);
    EXPECT_THROW((void)s.next(), rejection_budget_exceeded);
    EXPECT_EQ(s.attempts(), 3U);
}

TEST(Sampler, ExactSizeForAllEngines) {
    for (auto a : {algorithm::naive, algorithm::iterative, algorithm::parallel, algorithm::hybrid}) {
        conditioned_sampler s(engine(a, 2, 2, 3), 21, sampling_method::rejection);
        for (int i = 0; i < 30; ++i) {
            const tree t = s.next();
            ASSERT_EQ(size(t), 21U);
            ASSERT_EQ(t.size(), 21U);
        }
    }
    conditioned_sampler c(gen_params{}, 2001, sampling_method::cycle_lemma);
    for (int i = 0; i < 30; ++i) ASSERT_EQ(size(c.next()), 2001U);
}

TEST(Sampler, CycleLemmaUniformOverFourteenShapes) {
    // Three seeds, at least two must pass p >= 0.001.
    int passes = 0;
    for (std::uint64_t seed : {101, 202, 303}) {
        gen_params p;
        p.seed = seed;
        conditioned_sampler s(p, 9, sampling_method::cycle_lemma);
        const empirical_dist d = sample_shapes(s, 200'000);
        ASSERT_EQ(d.counts.size(), 14U);
        const auto counts = cell_counts(d, 14);
        if (chi_square_uniform(counts).p_value >= 0.001) ++passes;
    }
    EXPECT_GE(passes, 2);
}

TEST(Sampler, RejectionMatchesCycleLemma) {
    gen_params p;
    p.seed = 404;
    conditioned_sampler cyc(p, 9, sampling_method::cycle_lemma);
    conditioned_sampler rej(p, 9, sampling_method::rejection);
    const empirical_dist a = sample_shapes(cyc, 100'000);
    const empirical_dist b = sample_shapes(rej, 100'000);
    EXPECT_LE(tvd(a, b), 0.01);
    EXPECT_LE(tvd(b, uniform_over(14)), 0.01);
}

TEST(Sampler, AllEnginesAgreeOnSmallSizes) {
    // n = 7: five shapes, 10^5 samples per engine.
    std::vector<empirical_dist> dists;
    const std::vector<gen_params> engines = {
        engine(algorithm::naive, 1, 1, 11), engine(algorithm::iterative, 1, 1, 12),
        engine(algorithm::parallel, 2, 1, 13), engine(algorithm::hybrid, 2, 2, 14)};
    for (const auto& e : engines) {
        conditioned_sampler s(e, 7, sampling_method::rejection);
        dists.push_back(sample_shapes(s, 100'000));
    }
    for (std::size_t i = 0; i < dists.size(); ++i) {
        EXPECT_LE(tvd(dists[i], uniform_over(5)), 0.01) << to_string(engines[i].algo);
        for (std::size_t j = i + 1; j < dists.size(); ++j)
            EXPECT_LE(tvd(dists[i], dists[j]), 0.01) << i << " vs " << j;
    }
}

TEST(Sampler, HybridAtSwitchOneMatchesParallel) {
    gen_params par = engine(algorithm::parallel, 1, 1, 21);
    gen_params hyb = engine(algorithm::hybrid, 1, 1, 22);
    hyb.hybrid_switch = 1;
    conditioned_sampler a(par, 9, sampling_method::rejection);
    conditioned_sampler b(hyb, 9, sampling_method::rejection);
    EXPECT_LE(tvd(sample_shapes(a, 100'000), sample_shapes(b, 100'000)), 0.01);
}

#pragma once

// Verification suites: each runs one family of checks and returns verdict
// rows (check, observed, reference, tolerance, verdict) that callers print
// as CSV or summarise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "engines.hpp"
#include "oracle.hpp"
#include "replay.hpp"
#include "sampling.hpp"
#include "stats.hpp"

namespace gwtree {

enum class verdict_kind { pass, fail, skip, info };

inline const char* to_string(verdict_kind v) noexcept {
    switch (v) {
    case verdict_kind::pass: return "pass";
    case verdict_kind::fail: return "fail";
    case verdict_kind::skip: return "skip";
    case verdict_kind::info: return "info";
    }
    return "?";
}

struct verdict {
    std::string check;
    std::string observed;
    std::string reference;
    std::string tolerance;
    verdict_kind kind = verdict_kind::info;
};

struct suite_report {
    std::vector<verdict> rows;

    void add(std::string check, std::string observed, std::string reference, std::string tolerance, bool ok) {
        rows.push_back({std::move(check), std::move(observed), std::move(reference), std::move(tolerance),
                        ok ? verdict_kind::pass : verdict_kind::fail});
    }
    void info(std::string check, std::string observed, std::string reference = "", std::string tolerance = "") {
        rows.push_back({std::move(check), std::move(observed), std::move(reference), std::move(tolerance),
                        verdict_kind::info});
    }
    void skip(std::string check, std::string reason) {
        rows.push_back({std::move(check), std::move(reason), "", "", verdict_kind::skip});
    }
    void append(const suite_report& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

    std::size_t count(verdict_kind k) const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [k](const verdict& v) { return v.kind == k; }));
    }
    bool passed() const { return count(verdict_kind::fail) == 0 && count(verdict_kind::skip) == 0; }
    bool failed() const { return count(verdict_kind::fail) != 0; }
};

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string fmt(double x, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << x;
    return os.str();
}

inline std::string fmt(const rational& r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

template <class T>
std::string fmt_int(T x) {
    return std::to_string(x);
}

class stopwatch {
public:
    stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail

inline void write_csv(std::ostream& os, const suite_report& r, bool header = true) {
    if (header) os << "check,observed,reference,tolerance,verdict\n";
    for (const auto& v : r.rows)
        os << detail::csv_field(v.check) << ',' << detail::csv_field(v.observed) << ','
           << detail::csv_field(v.reference) << ',' << detail::csv_field(v.tolerance) << ',' << to_string(v.kind)
           << '\n';
}

/// Exact finite-n lifetime checks for odd n <= max_n.
///
/// Threshold 1: brute-force pmf equals t_{n,k}/C_m for every k, and the mean
/// equals 4n/(n+3). Threshold 2: the mean equals
/// (17n^2-8n+15)/(n^2+8n+15); the closed-form t_{n,k} sum is compared per
/// (n, k) and reported as info rows only.
inline suite_report verify_lifetime_exact(std::size_t max_n, std::size_t threshold) {
    if (threshold != 1 && threshold != 2) throw unsupported_threshold(threshold);
    suite_report r;
    const std::string t = "t=" + std::to_string(threshold);
    for (std::size_t n = 1; n <= max_n; n += 2) {
        const exact_pmf pmf = exact_pmf_lifetime(n, threshold);
        const std::string at_n = t + " n=" + std::to_string(n);
        if (threshold == 1) {
            std::size_t equal = 0;
            for (std::size_t k = 1; k <= n; ++k) equal += finite_pmf_closed(n, k) == pmf.at(k);
            r.add("pmf closed form " + at_n, std::to_string(equal) + "/" + std::to_string(n) + " equal",
                  "all equal", "exact", equal == n);
        } else if (n >= 3) {
            const auto counts = lifetime_counts(n, 2);
            for (std::size_t k = 1; k <= n; ++k) {
                const auto it = counts.find(k);
                const rational brute = it == counts.end() ? rational(0) : rational(it->second);
                const rational closed = tnk_closed(n, k, 2);
                if (closed != brute || brute != 0)
                    r.info("tnk sum " + at_n + " k=" + std::to_string(k), detail::fmt(closed), detail::fmt(brute),
                           closed == brute ? "match" : "mismatch");
            }
        }
        const rational formula = mean_lifetime_exact(n, threshold);
        r.add("mean " + at_n, detail::fmt(pmf.mean()), detail::fmt(formula), "exact", pmf.mean() == formula);
        r.add("normalization " + at_n, detail::fmt(pmf.total()), "1", "exact", pmf.total() == 1);
    }
    return r;
}

/// Exact PGF means at u = 1: 4, 17 and 69.
inline suite_report verify_limit_means(const std::vector<std::size_t>& thresholds = {1, 2, 4}) {
    suite_report r;
    const std::map<std::size_t, long> expected{{1, 4}, {2, 17}, {4, 69}};
    for (std::size_t t : thresholds) {
        const rational_pgf pgf = rational_pgf::lifetime_limit(t);
        r.add("pgf value at 1 t=" + std::to_string(t), detail::fmt(pgf.value_at_one()), "1", "exact",
              pgf.value_at_one() == 1);
        const rational m = pgf.mean();
        r.add("limit mean t=" + std::to_string(t), detail::fmt(m), std::to_string(expected.at(t)), "exact",
              m == expected.at(t));
    }
    return r;
}

struct convergence_config {
    std::size_t n = 2001;
    std::size_t samples = 200'000;
    std::uint64_t seed = 1;
    double tolerance = 0.01;
};

/// Marking-model lifetimes of uniform size-n trees against the limit laws.
inline suite_report verify_limit_convergence(const convergence_config& cfg) {
    suite_report r;
    gen_params p;
    p.seed = cfg.seed;
    conditioned_sampler sampler(p, cfg.n, sampling_method::cycle_lemma);
    empirical_dist d1, d2;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
        const tree t = sampler.next();
        d1.add(static_cast<std::int64_t>(mark_lifetime(t, 1)));
        d2.add(static_cast<std::int64_t>(mark_lifetime(t, 2)));
    }
    const std::size_t horizon = std::min(cfg.n, max_limit_horizon);
    const std::string tag = " n=" + std::to_string(cfg.n) + " samples=" + std::to_string(cfg.samples);
    const double tvd1 = tvd(d1, to_double_pmf(limit_pmf(1, horizon)));
    const double tvd2 = tvd(d2, to_double_pmf(limit_pmf(2, horizon)));
    r.add("tvd to limit law t=1" + tag, detail::fmt(tvd1), "0", "<= " + detail::fmt(cfg.tolerance), tvd1 <= cfg.tolerance);
    r.add("tvd to limit law t=2" + tag, detail::fmt(tvd2), "0", "<= " + detail::fmt(cfg.tolerance), tvd2 <= cfg.tolerance);
    std::map<std::int64_t, double> finite;
    for (std::size_t k = 1; k <= cfg.n; ++k) {
        const double v = to_double(finite_pmf_closed(cfg.n, k));
        if (v > 0) finite[static_cast<std::int64_t>(k)] = v;
    }
    r.info("tvd to exact finite law t=1" + tag, detail::fmt(tvd(d1, finite)));
    double mean1 = 0, mean2 = 0;
    for (const auto& [k, c] : d1.counts) mean1 += static_cast<double>(k) * static_cast<double>(c);
    for (const auto& [k, c] : d2.counts) mean2 += static_cast<double>(k) * static_cast<double>(c);
    r.info("sample mean t=1" + tag, detail::fmt(mean1 / static_cast<double>(d1.total)),
           detail::fmt(to_double(mean_lifetime_exact(cfg.n, 1))));
    r.info("sample mean t=2" + tag, detail::fmt(mean2 / static_cast<double>(d2.total)),
           detail::fmt(to_double(mean_lifetime_exact(cfg.n, 2))));
    return r;
}

struct uniform_config {
    std::size_t n = 9;
    std::size_t samples = 200'000;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t workers = 4;
    std::size_t threshold = 2;
    algorithm engine = algorithm::parallel;
    double p_min = 0.001;
    double tvd_max = 0.01;
};

/// Size-conditioned samples are uniform over the C_m shapes: chi-square per
/// seed with majority vote, for the cycle-lemma sampler and for rejection on
/// the configured engine, plus the TVD between the two samplers.
inline suite_report verify_uniform(const uniform_config& cfg) {
    require_odd_size(cfg.n);
    if (cfg.n > max_enumeration_size) throw enumeration_budget_exceeded("uniform suite needs n <= 21");
    suite_report r;
    std::map<std::string, std::size_t> index;
    for_each_encoding(cfg.n, [&](std::string_view w) { index.emplace(std::string(w), index.size()); });
    const std::size_t cells = index.size();
    if (cells < 2) {
        r.skip("uniformity n=" + std::to_string(cfg.n), "only one shape");
        return r;
    }
    auto collect = [&](sampling_method method, std::uint64_t seed, empirical_dist& dist) {
        gen_params p;
        p.algo = cfg.engine;
        p.workers = cfg.workers;
        p.threshold = cfg.threshold;
        p.hybrid_switch = std::max<std::size_t>(cfg.threshold, 1);
        p.seed = seed;
        conditioned_sampler s(p, cfg.n, method);
        std::vector<std::uint64_t> counts(cells, 0);
        for (std::size_t i = 0; i < cfg.samples; ++i) {
            const std::size_t cell = index.at(encode_bits(s.next()));
            ++counts[cell];
            dist.add(static_cast<std::int64_t>(cell));
        }
        return chi_square_uniform(counts);
    };
    empirical_dist first_cycle, first_rejection;
    for (auto method : {sampling_method::cycle_lemma, sampling_method::rejection}) {
        const std::string name = method == sampling_method::cycle_lemma
                                     ? std::string("cycle lemma")
                                     : std::string("rejection ") + to_string(cfg.engine) + " W=" +
                                           std::to_string(cfg.workers) + " t=" + std::to_string(cfg.threshold);
        std::size_t passes = 0;
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
            empirical_dist scratch;
            empirical_dist& dist = i == 0 ? (method == sampling_method::cycle_lemma ? first_cycle : first_rejection)
                                          : scratch;
            const chi_square_result c = collect(method, cfg.seeds[i], dist);
            const bool ok = c.p_value >= cfg.p_min;
            passes += ok;
            r.info("chi-square p " + name + " seed=" + std::to_string(cfg.seeds[i]), detail::fmt(c.p_value),
                   "stat=" + detail::fmt(c.statistic) + " dof=" + std::to_string(c.dof),
                   ">= " + detail::fmt(cfg.p_min));
        }
        r.add("uniform over " + std::to_string(cells) + " shapes " + name,
              std::to_string(passes) + "/" + std::to_string(cfg.seeds.size()) + " seeds pass",
              "majority", "p >= " + detail::fmt(cfg.p_min), 2 * passes > cfg.seeds.size());
    }
    const double d = tvd(first_cycle, first_rejection);
    r.add("tvd cycle lemma vs rejection n=" + std::to_string(cfg.n), detail::fmt(d), "0",
          "<= " + detail::fmt(cfg.tvd_max), d <= cfg.tvd_max);
    return r;
}

struct scaling_config {
    std::vector<std::size_t> sizes{1001, 10001, 100001};
    std::size_t samples = 10'000;
    std::uint64_t seed = 1;
    double exponent = 0.5;
    double exponent_tolerance = 0.03;
};

/// Mean BFS peak load against sqrt(n): fitted exponent asserted, constant
/// reported next to sqrt(pi).
inline suite_report verify_peak(const scaling_config& cfg) {
    if (cfg.sizes.size() < 3) throw insufficient_samples("peak suite needs at least three sizes");
    suite_report r;
    std::vector<std::pair<double, double>> bfs_points, dfs_points;
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
        const std::size_t n = cfg.sizes[s];
        gen_params p;
        p.seed = cfg.seed + s;
        conditioned_sampler sampler(p, n, sampling_method::cycle_lemma);
        std::vector<double> bfs, dfs;
        bfs.reserve(cfg.samples);
        for (std::size_t i = 0; i < cfg.samples; ++i) {
            const tree t = sampler.next();
            bfs.push_back(static_cast<double>(peak_load(t, traversal::bfs)));
            dfs.push_back(static_cast<double>(peak_load(t, traversal::dfs)));
        }
        const mean_ci_result mb = mean_ci(bfs);
        const mean_ci_result md = mean_ci(dfs);
        bfs_points.emplace_back(static_cast<double>(n), mb.mean);
        dfs_points.emplace_back(static_cast<double>(n), md.mean);
        const double c = mb.mean / std::sqrt(static_cast<double>(n));
        const double sqrt_pi = std::sqrt(std::acos(-1.0));
        r.info("bfs peak mean n=" + std::to_string(n), detail::fmt(mb.mean) + " +- " + detail::fmt(mb.half_width, 3));
        r.info("bfs peak constant mean/sqrt(n) n=" + std::to_string(n), detail::fmt(c), detail::fmt(sqrt_pi),
               "deviation " + detail::fmt(c - sqrt_pi, 4));
        r.info("dfs peak mean n=" + std::to_string(n), detail::fmt(md.mean) + " +- " + detail::fmt(md.half_width, 3));
    }
    const double e = fit_exponent(bfs_points);
    r.add("bfs peak exponent", detail::fmt(e), detail::fmt(cfg.exponent), "+- " + detail::fmt(cfg.exponent_tolerance),
          std::fabs(e - cfg.exponent) <= cfg.exponent_tolerance);
    r.info("dfs peak exponent", detail::fmt(fit_exponent(dfs_points)), detail::fmt(cfg.exponent));
    return r;
}

struct time_config {
    std::size_t property_size = 1001;
    std::size_t property_samples = 1000;
    scaling_config scaling;
};

/// Fully parallel time: t=1 equals the height on every sampled tree, t=2 is
/// at most twice the height; the 2h-1/2h window is reported; mean times for
/// both thresholds scale like sqrt(n).
inline suite_report verify_time(const time_config& cfg) {
    if (cfg.scaling.sizes.size() < 3) throw insufficient_samples("time suite needs at least three sizes");
    suite_report r;
    {
        gen_params p;
        p.seed = cfg.scaling.seed;
        conditioned_sampler sampler(p, cfg.property_size, sampling_method::cycle_lemma);
        std::size_t t1_equal = 0, t2_within = 0;
        window_report window;
        window.max_excess = std::numeric_limits<long>::min();
        for (std::size_t i = 0; i < cfg.property_samples; ++i) {
            const tree t = sampler.next();
            const std::size_t h = height_nodes(t);
            t1_equal += parallel_time(t, 1) == h;
            t2_within += parallel_time(t, 2) <= 2 * h;
            const window_report w = threshold2_window(t);
            window.nodes_checked += w.nodes_checked;
            window.early += w.early;
            window.late += w.late;
            window.max_excess = std::max(window.max_excess, w.max_excess);
        }
        const std::string tag = " n=" + std::to_string(cfg.property_size) + " trees=" + std::to_string(cfg.property_samples);
        const std::string all = std::to_string(cfg.property_samples);
        r.add("t=1 time equals height" + tag, std::to_string(t1_equal) + "/" + all, all + "/" + all, "exact",
              t1_equal == cfg.property_samples);
        r.add("t=2 time at most 2*height" + tag, std::to_string(t2_within) + "/" + all, all + "/" + all, "exact",
              t2_within == cfg.property_samples);
        const double rate = window.nodes_checked == 0
                                ? 0.0
                                : static_cast<double>(window.violations()) / static_cast<double>(window.nodes_checked);
        r.info("t=2 window {2h,2h+1} violation rate" + tag, detail::fmt(rate),
               "early=" + std::to_string(window.early) + " late=" + std::to_string(window.late) +
                   " nodes=" + std::to_string(window.nodes_checked));
        r.info("t=2 fitted c in completion <= 2*level + c" + tag, std::to_string(window.max_excess));
    }
    std::vector<std::pair<double, double>> p1, p2;
    for (std::size_t s = 0; s < cfg.scaling.sizes.size(); ++s) {
        const std::size_t n = cfg.scaling.sizes[s];
        gen_params p;
        p.seed = cfg.scaling.seed + 1000 + s;
        conditioned_sampler sampler(p, n, sampling_method::cycle_lemma);
        double sum1 = 0, sum2 = 0;
        for (std::size_t i = 0; i < cfg.scaling.samples; ++i) {
            const tree t = sampler.next();
            sum1 += static_cast<double>(parallel_time(t, 1));
            sum2 += static_cast<double>(parallel_time(t, 2));
        }
        const double m1 = sum1 / static_cast<double>(cfg.scaling.samples);
        const double m2 = sum2 / static_cast<double>(cfg.scaling.samples);
        p1.emplace_back(static_cast<double>(n), m1);
        p2.emplace_back(static_cast<double>(n), m2);
        r.info("mean time t=1 n=" + std::to_string(n), detail::fmt(m1));
        r.info("mean time t=2 n=" + std::to_string(n), detail::fmt(m2));
    }
    const double tol = cfg.scaling.exponent_tolerance;
    const double e1 = fit_exponent(p1);
    const double e2 = fit_exponent(p2);
    r.add("time exponent t=1", detail::fmt(e1), detail::fmt(cfg.scaling.exponent), "+- " + detail::fmt(tol),
          std::fabs(e1 - cfg.scaling.exponent) <= tol);
    r.add("time exponent t=2", detail::fmt(e2), detail::fmt(cfg.scaling.exponent), "+- " + detail::fmt(tol),
          std::fabs(e2 - cfg.scaling.exponent) <= tol);
    return r;
}

struct determinism_config {
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<std::size_t> workers{1, 2, 8};
    std::size_t threshold = 4;
    std::uint64_t max_nodes = 1'000'000;
    /// For each seed, trees (seed, [0]), (seed, [1]), ... are generated up
    /// to and including the first of at least this many nodes.
    std::uint64_t min_nodes = 1000;
    std::size_t max_trees_per_seed = 10'000;
};

/// Split-deterministic output is byte-identical across worker counts. Also
/// collects the per-source waste of every run.
inline suite_report verify_determinism(const determinism_config& cfg, std::uint64_t* max_waste = nullptr) {
    if (cfg.workers.empty()) throw std::invalid_argument("determinism suite needs worker counts");
    suite_report r;
    std::uint64_t waste = 0;
    std::size_t identical = 0;
    for (std::uint64_t seed : cfg.seeds) {
        std::vector<std::vector<std::string>> outputs;
        std::size_t trees = 0;
        std::uint64_t largest = 0;
        for (std::size_t wi = 0; wi < cfg.workers.size(); ++wi) {
            gen_params p;
            p.algo = algorithm::parallel;
            p.threshold = cfg.threshold;
            p.workers = cfg.workers[wi];
            p.max_nodes = cfg.max_nodes;
            p.seed = seed;
            generator g(p);
            std::vector<std::string> out;
            for (std::uint64_t j = 0;; ++j) {
                const gen_outcome o = g.run(bit_source(seed, {j}));
                waste = std::max(waste, o.max_source_waste);
                out.push_back(o.complete() ? encode_bits(o.tree) : std::string("overflow"));
                if (wi == 0) {
                    if (o.complete()) largest = std::max(largest, o.nodes_generated);
                    if ((o.complete() && o.nodes_generated >= cfg.min_nodes) || j + 1 >= cfg.max_trees_per_seed) {
                        trees = static_cast<std::size_t>(j + 1);
                        break;
                    }
                } else if (j + 1 >= trees) {
                    break;
                }
            }
            outputs.push_back(std::move(out));
        }
        bool same = true;
        for (std::size_t wi = 1; wi < outputs.size(); ++wi) same = same && outputs[wi] == outputs[0];
        identical += same;
        std::string workers;
        for (auto w : cfg.workers) workers += (workers.empty() ? "" : "/") + std::to_string(w);
        r.info("seed=" + std::to_string(seed) + " W=" + workers,
               std::to_string(trees) + " trees, largest " + std::to_string(largest) + " nodes",
               same ? "identical" : "differs");
    }
    r.add("byte-identical encodings across worker counts t=" + std::to_string(cfg.threshold),
          std::to_string(identical) + "/" + std::to_string(cfg.seeds.size()) + " seeds",
          std::to_string(cfg.seeds.size()) + "/" + std::to_string(cfg.seeds.size()), "exact",
          identical == cfg.seeds.size());
    if (max_waste != nullptr) *max_waste = std::max(*max_waste, waste);
    return r;
}

/// At most one partially used word per bit source, over runs of every
/// engine, both rng modes and the cycle-lemma sampler.
inline suite_report verify_rng_economy(std::uint64_t seed, std::uint64_t prior_waste = 0) {
    suite_report r;
    std::uint64_t worst = prior_waste;
    auto track = [&](const std::string& name, std::uint64_t w) {
        worst = std::max(worst, w);
        r.info("max waste " + name, std::to_string(w), "<= " + std::to_string(bit_source::word_bits));
    };
    for (auto a : {algorithm::naive, algorithm::iterative, algorithm::parallel, algorithm::hybrid}) {
        for (auto mode : {rng_mode::split_deterministic, rng_mode::per_worker}) {
            if (mode == rng_mode::per_worker && (a == algorithm::naive || a == algorithm::iterative)) continue;
            gen_params p;
            p.algo = a;
            p.rng = mode;
            p.workers = 4;
            p.threshold = 4;
            p.hybrid_switch = 64;
            p.max_nodes = 200'000;
            p.seed = seed;
            generator g(p);
            std::uint64_t w = 0;
            for (std::uint64_t j = 0; j < 300; ++j) w = std::max(w, g.run(bit_source(seed, {j})).max_source_waste);
            track(std::string(to_string(a)) + (mode == rng_mode::per_worker ? " per-worker" : " split"), w);
        }
    }
    bit_source cycle(seed);
    std::uint64_t w = 0;
    for (int i = 0; i < 1000; ++i) {
        (void)cycle_lemma_word(1001, cycle);
        w = std::max(w, cycle.wasted_bits());
    }
    track("cycle lemma sampler", w);
    r.add("unused bits per source", std::to_string(worst), "<= " + std::to_string(bit_source::word_bits), "exact",
          worst <= bit_source::word_bits);
    return r;
}

} // namespace gwtree

#pragma once

// Command-line front end. Kept header-only so the tests can drive it with
// string streams.

#include <CLI11.hpp>

#include <gwtree/gwtree.hpp>

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gwtree::cli {

enum exit_code : int { ok = 0, failed = 1, usage = 2 };

/// Thrown for flag combinations that CLI11 cannot reject on its own.
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class tree_format { bits, dot, stats };

inline const std::map<std::string, algorithm> algorithm_names{
    {"naive", algorithm::naive},
    {"iterative", algorithm::iterative},
    {"parallel", algorithm::parallel},
    {"hybrid", algorithm::hybrid}};

inline const std::map<std::string, tree_format> format_names{
    {"bits", tree_format::bits}, {"dot", tree_format::dot}, {"stats", tree_format::stats}};

inline const std::map<std::string, rng_mode> rng_names{
    {"split", rng_mode::split_deterministic}, {"per-worker", rng_mode::per_worker}};

inline const std::map<std::string, sampling_method> method_names{
    {"rejection", sampling_method::rejection}, {"cycle", sampling_method::cycle_lemma}};

inline std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

inline const char* rng_name(rng_mode m) { return m == rng_mode::per_worker ? "per-worker" : "split"; }

/// Writes to --out when given, otherwise to the caller's stream.
class output {
public:
    output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw usage_error("cannot open output file " + path);
            os_ = file_.get();
        }
    }
    std::ostream& operator*() { return *os_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

/// Streams trees in one of the output formats.
class tree_writer {
public:
    tree_writer(std::ostream& os, tree_format f, const std::string& header) : os_(os), format_(f) {
        const char* comment = f == tree_format::dot ? "// " : "# ";
        os_ << comment << header << '\n';
        if (f == tree_format::stats) os_ << "status,size,height,left_spine,bits_consumed,tasks_spawned\n";
    }

    void write(const tree& t, std::uint64_t bits, std::uint64_t tasks) {
        switch (format_) {
        case tree_format::bits: os_ << encode_bits(t) << '\n'; break;
        case tree_format::dot: os_ << to_dot(t, "tree" + std::to_string(index_)); break;
        case tree_format::stats:
            os_ << "complete," << t.size() << ',' << height_nodes(t) << ',' << left_spine(t) << ',' << bits << ','
                << tasks << '\n';
            break;
        }
        ++index_;
    }

    void write_overflow(std::uint64_t nodes, std::uint64_t bits, std::uint64_t tasks) {
        switch (format_) {
        case tree_format::bits: os_ << "overflow\n"; break;
        case tree_format::dot: os_ << "// tree" << index_ << " overflow\n"; break;
        case tree_format::stats: os_ << "overflow," << nodes << ",,," << bits << ',' << tasks << '\n'; break;
        }
        ++index_;
    }

private:
    std::ostream& os_;
    tree_format format_;
    std::size_t index_ = 0;
};

struct engine_flags {
    algorithm algo = algorithm::iterative;
    std::size_t threshold = 64;
    std::size_t hybrid_switch = 4096;
    std::size_t workers = 1;
    std::uint64_t max_nodes = std::uint64_t{1} << 31;
    rng_mode rng = rng_mode::split_deterministic;

    void add_to(CLI::App& app) {
        app.add_option("--algo", algo, "naive, iterative, parallel or hybrid")
            ->transform(CLI::CheckedTransformer(algorithm_names, CLI::ignore_case));
        app.add_option("--threshold", threshold, "pending nodes per hand-off")->check(CLI::PositiveNumber);
        app.add_option("--hybrid-switch", hybrid_switch, "stack size at which hybrid goes parallel")
            ->check(CLI::PositiveNumber);
        app.add_option("--workers", workers, "worker threads (default: GW_WORKERS, else 1)")->check(CLI::Range(1, 64));
        app.add_option("--max-nodes", max_nodes, "node cap per tree")->check(CLI::PositiveNumber);
        app.add_option("--rng", rng, "split or per-worker")->transform(CLI::CheckedTransformer(rng_names));
    }

    gen_params params(std::uint64_t seed) const {
        gen_params p;
        p.algo = algo;
        p.threshold = threshold;
        // Only the hybrid engine reads the switch point.
        p.hybrid_switch = algo == algorithm::hybrid ? hybrid_switch : std::max(hybrid_switch, threshold);
        p.workers = workers;
        p.max_nodes = max_nodes;
        p.seed = seed;
        p.rng = rng;
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw usage_error(e.what());
        }
        return p;
    }

    /// Output header fields. The worker count is left out on purpose so that
    /// split-mode output is identical for every worker count.
    std::string describe() const {
        return "algo=" + std::string(to_string(algo)) + " threshold=" + std::to_string(threshold) +
               " hybrid_switch=" + std::to_string(hybrid_switch) + " max_nodes=" + std::to_string(max_nodes) +
               " rng=" + rng_name(rng);
    }
};

inline std::vector<std::size_t> odd_sizes(const std::vector<std::size_t>& sizes) {
    for (auto n : sizes)
        if (n == 0 || n % 2 == 0) throw usage_error("tree sizes must be odd, got " + std::to_string(n));
    return sizes;
}

struct generate_cmd {
    engine_flags engine;
    std::optional<std::uint64_t> seed;
    std::size_t count = 1;
    tree_format format = tree_format::bits;
    std::string out;

    void add_to(CLI::App& app) {
        engine.add_to(app);
        app.add_option("--seed", seed, "root seed (default: from OS entropy)");
        app.add_option("--count", count, "number of trees")->check(CLI::NonNegativeNumber);
        app.add_option("--format", format, "bits, dot or stats")->transform(CLI::CheckedTransformer(format_names));
        app.add_option("--out", out, "output file (default stdout)");
    }

    int run(std::ostream& stdout_stream) {
        const std::uint64_t s = seed ? *seed : entropy_seed();
        generator g(engine.params(s));
        output o(out, stdout_stream);
        tree_writer w(*o, format, "seed=" + std::to_string(s) + " " + engine.describe());
        // Tree i draws from the root stream (seed, [i]).
        for (std::uint64_t i = 0; i < count; ++i) {
            const gen_outcome r = g.run(bit_source(s, {i}));
            if (r.complete()) w.write(r.tree, r.bits_consumed, r.tasks_spawned);
            else w.write_overflow(r.nodes_generated, r.bits_consumed, r.tasks_spawned);
        }
        return ok;
    }
};

struct sample_cmd {
    engine_flags engine;
    std::size_t size = 1;
    std::size_t count = 1;
    sampling_method method = sampling_method::cycle_lemma;
    std::optional<std::uint64_t> seed;
    tree_format format = tree_format::bits;
    std::string out;

    void add_to(CLI::App& app) {
        engine.add_to(app);
        app.add_option("--size", size, "odd tree size")->required();
        app.add_option("--count", count, "number of trees")->check(CLI::NonNegativeNumber);
        app.add_option("--method", method, "rejection or cycle")->transform(CLI::CheckedTransformer(method_names));
        app.add_option("--seed", seed, "seed (default: from OS entropy)");
        app.add_option("--format", format, "bits, dot or stats")->transform(CLI::CheckedTransformer(format_names));
        app.add_option("--out", out, "output file (default stdout)");
    }

    int run(std::ostream& stdout_stream) {
        odd_sizes({size});
        const std::uint64_t s = seed ? *seed : entropy_seed();
        conditioned_sampler sampler(engine.params(s), size, method);
        output o(out, stdout_stream);
        std::string header = "seed=" + std::to_string(s) + " size=" + std::to_string(size) +
                             " method=" + (method == sampling_method::cycle_lemma ? "cycle" : "rejection");
        if (method == sampling_method::rejection) header += " " + engine.describe();
        tree_writer w(*o, format, header);
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t before = sampler.bits_consumed();
            const tree t = sampler.next();
            w.write(t, sampler.bits_consumed() - before, 0);
        }
        return ok;
    }
};

struct verify_cmd {
    std::string suite;
    std::optional<std::size_t> size;
    std::vector<std::size_t> sizes;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> threshold;
    std::optional<std::size_t> workers;
    std::uint64_t seed = 0;

    void add_to(CLI::App& app) {
        app.add_option("suite", suite, "uniform, lifetime, peak, time or determinism")
            ->required()
            ->check(CLI::IsMember({"uniform", "lifetime", "peak", "time", "determinism"}));
        app.add_option("--size", size, "tree size (lifetime: largest size)")->check(CLI::PositiveNumber);
        app.add_option("--sizes", sizes, "tree sizes for scaling fits")->delimiter(',');
        app.add_option("--samples", samples, "samples (determinism: number of seeds)")->check(CLI::PositiveNumber);
        app.add_option("--threshold", threshold, "threshold")->check(CLI::PositiveNumber);
        app.add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 64));
        app.add_option("--seed", seed, "seed")->required();
    }

    suite_report run_suite() const {
        if (suite == "uniform") {
            uniform_config c;
            c.n = size.value_or(c.n);
            c.samples = samples.value_or(c.samples);
            c.threshold = threshold.value_or(c.threshold);
            c.workers = workers.value_or(c.workers);
            c.seeds = {seed, seed + 1, seed + 2};
            return verify_uniform(c);
        }
        if (suite == "lifetime") {
            const std::size_t t = threshold.value_or(1);
            if (t != 1 && t != 2 && t != 4) throw usage_error("lifetime suite supports thresholds 1, 2 and 4");
            suite_report r;
            if (t != 4) r.append(verify_lifetime_exact(size.value_or(15), t));
            r.append(verify_limit_means({t}));
            if (samples && t != 4) {
                convergence_config c;
                c.samples = *samples;
                c.seed = seed;
                suite_report conv = verify_limit_convergence(c);
                // The convergence run covers both marking thresholds; keep the requested one.
                const std::string other = t == 1 ? "t=2" : "t=1";
                for (const auto& v : conv.rows)
                    if (v.check.find(other) == std::string::npos) r.rows.push_back(v);
            }
            return r;
        }
        if (suite == "peak" || suite == "time") {
            scaling_config sc;
            if (!sizes.empty()) sc.sizes = odd_sizes(sizes);
            if (sc.sizes.size() < 3) throw usage_error(suite + " suite needs at least three sizes");
            sc.seed = seed;
            if (suite == "peak") {
                sc.samples = samples.value_or(sc.samples);
                return verify_peak(sc);
            }
            time_config tc;
            tc.scaling = sc;
            tc.property_size = odd_sizes({size.value_or(tc.property_size)}).front();
            tc.property_samples = samples.value_or(tc.property_samples);
            tc.scaling.samples = tc.property_samples;
            return verify_time(tc);
        }
        determinism_config c;
        c.seeds.clear();
        for (std::size_t i = 0; i < samples.value_or(10); ++i) c.seeds.push_back(seed + i);
        c.threshold = threshold.value_or(c.threshold);
        if (workers) c.workers = {1, *workers};
        std::uint64_t waste = 0;
        suite_report r = verify_determinism(c, &waste);
        r.add("unused bits per source", std::to_string(waste), "<= " + std::to_string(bit_source::word_bits), "exact",
              waste <= bit_source::word_bits);
        return r;
    }

    int run(std::ostream& os) {
        const suite_report r = run_suite();
        write_csv(os, r);
        return r.passed() ? ok : failed;
    }
};

struct oracle_cmd {
    std::string what;
    std::size_t size = 7;
    std::size_t threshold = 1;
    std::size_t kmax = 50;

    void add_to(CLI::App& app) {
        app.add_option("what", what, "tnk, pmf or limit")->required()->check(CLI::IsMember({"tnk", "pmf", "limit"}));
        app.add_option("--size", size, "odd tree size");
        app.add_option("--threshold", threshold, "threshold");
        app.add_option("--kmax", kmax, "last limit coefficient")->check(CLI::Range(std::size_t{0}, max_limit_horizon));
    }

    int run(std::ostream& os) {
        if (what == "limit") {
            if (threshold != 1 && threshold != 2 && threshold != 4)
                throw usage_error("limit laws exist for thresholds 1, 2 and 4");
            const power_series s = limit_pmf(threshold, kmax);
            os << "k,probability\n";
            for (std::size_t k = 0; k <= kmax; ++k)
                if (s.coefficient(k) != 0) os << k << ',' << detail::fmt(s.coefficient_double(k), 17) << '\n';
            os << "# total=" << detail::fmt(to_double(s.partial_sum(kmax)), 17)
               << " mean=" << detail::fmt(to_double(limit_mean(threshold)), 17) << '\n';
            return ok;
        }
        odd_sizes({size});
        if (threshold != 1 && threshold != 2) throw usage_error("finite laws exist for thresholds 1 and 2");
        if (what == "tnk") {
            if (size < 3) throw usage_error("tnk needs size >= 3");
            if (size > max_enumeration_size) throw usage_error("tnk brute force needs size <= 21");
            const auto counts = lifetime_counts(size, threshold);
            os << "n,k,closed_form,brute_force,match\n";
            for (std::size_t k = 1; k <= size; ++k) {
                const auto it = counts.find(k);
                const rational brute = it == counts.end() ? rational(0) : rational(it->second);
                const rational closed = tnk_closed(size, k, threshold);
                if (brute == 0 && closed == 0) continue;
                os << size << ',' << k << ',' << closed << ',' << brute << ',' << (closed == brute ? "yes" : "no")
                   << '\n';
            }
            return ok;
        }
        exact_pmf pmf;
        if (size <= max_enumeration_size) {
            pmf = exact_pmf_lifetime(size, threshold);
        } else if (threshold == 1) {
            pmf = exact_pmf{size, 1, {}, pmf_source::closed_form};
            for (std::size_t k = 1; k <= size; ++k)
                if (auto p = finite_pmf_closed(size, k); p != 0) pmf.entries[k] = p;
        } else {
            throw usage_error("threshold 2 pmf needs size <= 21");
        }
        const char* source = pmf.source == pmf_source::brute_force ? "brute_force" : "closed_form";
        os << "k,probability,decimal,source\n";
        for (const auto& [k, p] : pmf.entries) os << k << ',' << p << ',' << detail::fmt(to_double(p), 17) << ',' << source << '\n';
        os << "# mean=" << pmf.mean() << '\n';
        return ok;
    }
};

struct bench_cmd {
    std::vector<algorithm> algos{algorithm::naive, algorithm::iterative};
    std::vector<std::uint64_t> sizes{1'000'000};
    std::vector<std::size_t> workers{1};
    std::vector<std::size_t> thresholds{64};
    std::size_t hybrid_switch = 4096;
    std::size_t repeats = 5;
    std::uint64_t seed = 1;
    std::string out;

    void add_to(CLI::App& app) {
        app.add_option("--algos", algos, "engines to time")
            ->delimiter(',')
            ->transform(CLI::CheckedTransformer(algorithm_names, CLI::ignore_case));
        app.add_option("--sizes", sizes, "node totals per workload")->delimiter(',')->check(CLI::PositiveNumber);
        app.add_option("--workers", workers, "worker counts")->delimiter(',')->check(CLI::Range(1, 64));
        app.add_option("--thresholds", thresholds, "thresholds")->delimiter(',')->check(CLI::PositiveNumber);
        app.add_option("--hybrid-switch", hybrid_switch, "hybrid switch point")->check(CLI::PositiveNumber);
        app.add_option("--repeats", repeats, "timed repeats per combination")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "seed");
        app.add_option("--out", out, "output file (default stdout)");
    }

    int run(std::ostream& stdout_stream) {
        bench_config c{algos, sizes, workers, thresholds, hybrid_switch, repeats, seed};
        output o(out, stdout_stream);
        write_bench_header(*o);
        run_bench(c, [&](const bench_row& r) { write_bench_row(*o, r); });
        return ok;
    }
};

/// Default worker count from GW_WORKERS. CLI11 would silently ignore a bad
/// value, so it is parsed here and rejected as a usage error.
inline std::size_t workers_from_environment() {
    const char* env = std::getenv("GW_WORKERS");
    if (env == nullptr || *env == '\0') return 1;
    const std::string_view v(env);
    std::size_t w = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), w);
    if (ec != std::errc{} || end != v.data() + v.size() || w < 1 || w > 64)
        throw usage_error("GW_WORKERS must be an integer in [1, 64], got '" + std::string(v) + "'");
    return w;
}

/// Runs one command line. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Random binary trees from critical Galton-Watson engines", "gwtree"};
    app.require_subcommand(1);
    generate_cmd generate;
    sample_cmd sample;
    verify_cmd verify;
    oracle_cmd oracle;
    bench_cmd bench;
    try {
        generate.engine.workers = sample.engine.workers = workers_from_environment();
    } catch (const usage_error& e) {
        err << "gwtree: " << e.what() << '\n';
        return usage;
    }
    generate.add_to(*app.add_subcommand("generate", "generate free Galton-Watson trees"));
    sample.add_to(*app.add_subcommand("sample", "sample uniform trees of a fixed size"));
    verify.add_to(*app.add_subcommand("verify", "run a verification suite, one CSV verdict row per check"));
    oracle.add_to(*app.add_subcommand("oracle", "print exact lifetime tables"));
    bench.add_to(*app.add_subcommand("bench", "time engines on a fixed workload"));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage;
    }
    try {
        if (app.got_subcommand("generate")) return generate.run(out);
        if (app.got_subcommand("sample")) return sample.run(out);
        if (app.got_subcommand("verify")) return verify.run(out);
        if (app.got_subcommand("oracle")) return oracle.run(out);
        return bench.run(out);
    } catch (const std::invalid_argument& e) {
        // Covers usage_error, invalid_size, insufficient_samples and
        // enumeration budget errors: all are bad parameters.
        err << "gwtree: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        err << "gwtree: " << e.what() << '\n';
        return failed;
    }
}

} // namespace gwtree::cli

#pragma once

// Exact combinatorics for first-thread lifetimes: brute-force enumeration,
// closed-form coefficients and means, and limit laws given as rational
// probability generating functions. Everything is exact rational arithmetic;
// floating point appears only in the *_double helpers.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "replay.hpp"
#include "sampling.hpp"
#include "treestore.hpp"

namespace gwtree {

using big_int = boost::multiprecision::cpp_int;
using rational = boost::multiprecision::cpp_rational;

class enumeration_budget_exceeded : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class improper_pgf : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline constexpr std::size_t max_enumeration_size = 21;

/// C_m by C_{m+1} = C_m * 2(2m+1) / (m+2).
inline big_int catalan(std::size_t m) {
    big_int c = 1;
    for (std::size_t i = 0; i < m; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
    return c;
}

/// Binomial coefficient; zero outside 0 <= k <= n.
inline big_int binomial(long n, long k) {
    if (n < 0 || k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    big_int r = 1;
    for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Calls f(std::string_view) for every preorder word of size n, in
/// lexicographic order ('0' < '1').
template <class F>
void for_each_encoding(std::size_t n, F&& f) {
    require_odd_size(n);
    if (n > max_enumeration_size)
        throw enumeration_budget_exceeded("enumeration is limited to n <= " + std::to_string(max_enumeration_size));
    std::string word(n, '0');
    // pending = subtrees still to be written after position i.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t pending) {
        if (i == n) {
            if (pending == 0) f(std::string_view(word));
            return;
        }
        const std::size_t left = n - i;
        if (pending == 0) return;
        // '0' closes one pending subtree; the rest must still fit.
        if (pending - 1 <= left - 1 && (pending - 1 > 0 || left - 1 == 0)) {
            word[i] = '0';
            rec(i + 1, pending - 1);
        }
        if (pending + 1 <= left - 1) {
            word[i] = '1';
            rec(i + 1, pending + 1);
        }
    };
    rec(0, 1);
}

inline std::vector<std::string> enumerate_encodings(std::size_t n) {
    std::vector<std::string> out;
    for_each_encoding(n, [&](std::string_view w) { out.emplace_back(w); });
    return out;
}

/// Calls f(const tree&) for every tree of size n. Trees are decoded into a
/// scratch store that is reset between calls.
template <class F>
void enumerate_trees(std::size_t n, F&& f) {
    node_store scratch(1, 1024);
    for_each_encoding(n, [&](std::string_view w) {
        scratch.reset();
        const tree t = decode_bits(scratch, w);
        f(t);
    });
}

enum class pmf_source { brute_force, closed_form };

struct exact_pmf {
    std::size_t n = 0;
    std::size_t threshold = 1;
    std::map<std::size_t, rational> entries;
    pmf_source source = pmf_source::brute_force;

    rational total() const {
        rational s = 0;
        for (const auto& [k, p] : entries) s += p;
        return s;
    }
    rational mean() const {
        rational s = 0;
        for (const auto& [k, p] : entries) s += p * k;
        return s;
    }
    rational at(std::size_t k) const {
        auto it = entries.find(k);
        return it == entries.end() ? rational(0) : it->second;
    }
};

/// Number of size-n trees per marking-model lifetime, by enumeration.
inline std::map<std::size_t, big_int> lifetime_counts(std::size_t n, std::size_t threshold) {
    if (threshold != 1 && threshold != 2) throw unsupported_threshold(threshold);
    std::map<std::size_t, big_int> counts;
    enumerate_trees(n, [&](const tree& t) { counts[mark_lifetime(t, threshold)] += 1; });
    return counts;
}

/// Brute-force lifetime distribution. The reference every closed form is
/// checked against.
inline exact_pmf exact_pmf_lifetime(std::size_t n, std::size_t threshold) {
    exact_pmf pmf{n, threshold, {}, pmf_source::brute_force};
    const big_int all = catalan((n - 1) / 2);
    for (const auto& [k, c] : lifetime_counts(n, threshold)) pmf.entries[k] = rational(c, all);
    return pmf;
}

/// Closed forms for the number of size-n trees with lifetime k.
///
/// Threshold 1: 2(k-1)/(n-1) * C(n-k-1, (n-3)/2) for odd n, which matches
/// enumeration everywhere. Threshold 2:
///   sum_{j=0}^{(k-3)/2} j * C((k-3)/2, j) * C(n-k+j, (n-k)/2) / (n-k+j),
/// zero when k is even; j = 0 terms are taken as zero. This one does not
/// match enumeration at k = n (it is one short); callers compare and report.
inline rational tnk_closed(std::size_t n, std::size_t k, std::size_t threshold) {
    if (n % 2 == 0 || n < 3) throw invalid_size("tnk_closed needs odd n >= 3");
    if (k < 1 || k > n) return 0;
    const long nl = static_cast<long>(n);
    const long kl = static_cast<long>(k);
    if (threshold == 1) {
        return rational(big_int(2 * (kl - 1)) * binomial(nl - kl - 1, (nl - 3) / 2), big_int(nl - 1));
    }
    if (threshold != 2) throw unsupported_threshold(threshold);
    if (k < 3 || k % 2 == 0) return 0;
    const long top = (kl - 3) / 2;
    const long gap = nl - kl;
    rational sum = 0;
    for (long j = 1; j <= top; ++j) {
        sum += rational(binomial(top, j) * j * binomial(gap + j, gap / 2), big_int(gap + j));
    }
    return sum;
}

/// Closed-form means: 4n/(n+3) and (17n^2 - 8n + 15)/(n^2 + 8n + 15).
inline rational mean_lifetime_exact(std::size_t n, std::size_t threshold) {
    require_odd_size(n);
    const big_int nn = n;
    if (threshold == 1) return rational(4 * nn, nn + 3);
    if (threshold == 2) return rational(17 * nn * nn - 8 * nn + 15, nn * nn + 8 * nn + 15);
    throw unsupported_threshold(threshold);
}

/// P(L_n = k) at threshold 1 from the binomial closed form, for any odd n.
inline rational finite_pmf_closed(std::size_t n, std::size_t k) {
    require_odd_size(n);
    if (n == 1) return k == 1 ? 1 : 0;
    return tnk_closed(n, k, 1) / rational(catalan((n - 1) / 2));
}

/// Polynomial with integer coefficients, lowest degree first.
class polynomial {
public:
    polynomial() = default;
    explicit polynomial(std::vector<big_int> coeffs) : c_(std::move(coeffs)) { trim(); }

    static polynomial monomial(std::size_t degree, big_int coeff = 1) {
        std::vector<big_int> c(degree + 1);
        c[degree] = std::move(coeff);
        return polynomial(std::move(c));
    }

    std::size_t degree() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }
    const big_int& operator[](std::size_t i) const {
        static const big_int zero = 0;
        return i < c_.size() ? c_[i] : zero;
    }
    const std::vector<big_int>& coefficients() const noexcept { return c_; }

    rational eval(const rational& x) const {
        rational acc = 0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + rational(*it);
        return acc;
    }

    polynomial derivative() const {
        if (c_.size() <= 1) return polynomial();
        std::vector<big_int> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * i;
        return polynomial(std::move(d));
    }

    friend polynomial operator*(const polynomial& a, const polynomial& b) {
        if (a.c_.empty() || b.c_.empty()) return polynomial();
        std::vector<big_int> r(a.c_.size() + b.c_.size() - 1);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
        return polynomial(std::move(r));
    }

    polynomial operator-() const {
        std::vector<big_int> r(c_);
        for (auto& x : r) x = -x;
        return polynomial(std::move(r));
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0) c_.pop_back();
    }

    std::vector<big_int> c_;
};

/// Power series whose k-th coefficient is scaled[k] / base^(k+1). Keeping a
/// common power-of-base denominator avoids gcd reductions on huge numbers.
class power_series {
public:
    power_series(std::vector<big_int> scaled, big_int base) : scaled_(std::move(scaled)), base_(std::move(base)) {}

    std::size_t horizon() const noexcept { return scaled_.size() - 1; }

    rational coefficient(std::size_t k) const {
        return rational(scaled_.at(k), boost::multiprecision::pow(base_, static_cast<unsigned>(k + 1)));
    }

    /// Coefficient as a double. Exact rounding while the denominator fits a
    /// double; beyond that, computed in the log domain so that tiny values
    /// underflow gracefully.
    double coefficient_double(std::size_t k) const {
        const big_int& a = scaled_.at(k);
        if (a == 0) return 0.0;
        if (static_cast<double>(k + 1) * log2_abs(base_) < 1000.0) return coefficient(k).convert_to<double>();
        const double log2a = log2_abs(a);
        const double value = std::exp2(log2a - static_cast<double>(k + 1) * log2_abs(base_));
        return a < 0 ? -value : value;
    }

    bool all_nonnegative() const {
        for (const auto& a : scaled_)
            if (a < 0) return false;
        return true;
    }

    /// sum_{k <= upto} w(k) * coefficient(k) for integer weights, exactly.
    template <class Weight>
    rational weighted_sum(std::size_t upto, Weight w) const {
        big_int acc = 0;
        for (std::size_t k = 0; k <= upto; ++k) acc = acc * base_ + big_int(w(k)) * scaled_[k];
        return rational(acc, boost::multiprecision::pow(base_, static_cast<unsigned>(upto + 1)));
    }

    rational partial_sum(std::size_t upto) const {
        return weighted_sum(upto, [](std::size_t) { return 1; });
    }
    rational partial_mean(std::size_t upto) const {
        return weighted_sum(upto, [](std::size_t k) { return k; });
    }

private:
    static double log2_abs(const big_int& x) {
        const big_int a = boost::multiprecision::abs(x);
        const std::size_t msb = boost::multiprecision::msb(a);
        if (msb < 60) return std::log2(a.convert_to<double>());
        const big_int top = a >> (msb - 52);
        return std::log2(top.convert_to<double>()) + static_cast<double>(msb - 52);
    }

    std::vector<big_int> scaled_;
    big_int base_;
};

/// numerator(u) / denominator(u) as a probability generating function.
class rational_pgf {
public:
    rational_pgf(polynomial num, polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_[0] == 0) throw improper_pgf("denominator vanishes at u = 0");
        if (den_[0] < 0) {
            num_ = -num_;
            den_ = -den_;
        }
    }

    /// Limit laws of the first-thread lifetime:
    ///   t = 1: u^2 / (u - 2)^2
    ///   t = 2: u^5 / (3u^2 - 4)^2
    ///   t = 4: -u^11 / ((u^4 - 16u^2 + 16)(u^6 - 18u^4 + 48u^2 - 32))
    static rational_pgf lifetime_limit(std::size_t threshold) {
        switch (threshold) {
        case 1: {
            const polynomial f({-2, 1});
            return {polynomial::monomial(2), f * f};
        }
        case 2: {
            const polynomial f({-4, 0, 3});
            return {polynomial::monomial(5), f * f};
        }
        case 4: {
            const polynomial a({16, 0, -16, 0, 1});
            const polynomial b({-32, 0, 48, 0, -18, 0, 1});
            return {-polynomial::monomial(11), a * b};
        }
        default: throw unsupported_threshold(threshold);
        }
    }

    const polynomial& numerator() const noexcept { return num_; }
    const polynomial& denominator() const noexcept { return den_; }

    rational value_at_one() const { return num_.eval(1) / den_.eval(1); }

    /// P'(1), by the quotient rule.
    rational mean() const {
        const rational n1 = num_.eval(1);
        const rational d1 = den_.eval(1);
        return (num_.derivative().eval(1) * d1 - n1 * den_.derivative().eval(1)) / (d1 * d1);
    }

    /// Taylor coefficients up to u^k_max by long division:
    /// c_k = (n_k - sum_{i>=1} d_i c_{k-i}) / d_0, carried as
    /// a_k = c_k * d_0^(k+1) so every step stays in the integers.
    power_series expand(std::size_t k_max) const {
        const big_int& d0 = den_[0];
        std::vector<big_int> a(k_max + 1);
        std::vector<big_int> d0_pow{1};
        const std::size_t deg = den_.degree();
        for (std::size_t i = 1; i <= std::max<std::size_t>(deg, 1); ++i) d0_pow.push_back(d0_pow.back() * d0);
        big_int d0_k = 1;  // d0^k
        for (std::size_t k = 0; k <= k_max; ++k) {
            big_int v = num_[k] * d0_k;
            for (std::size_t i = 1; i <= std::min(k, deg); ++i) {
                if (den_[i] != 0) v -= den_[i] * a[k - i] * d0_pow[i - 1];
            }
            a[k] = std::move(v);
            d0_k *= d0;
        }
        return power_series(std::move(a), d0);
    }

private:
    polynomial num_;
    polynomial den_;
};

/// Expansion of a PGF that must be a proper distribution: value 1 at u = 1
/// and no negative coefficient up to k_max.
inline power_series expand_distribution(const rational_pgf& pgf, std::size_t k_max) {
    if (pgf.value_at_one() != 1) throw improper_pgf("PGF does not evaluate to 1 at u = 1");
    power_series s = pgf.expand(k_max);
    if (!s.all_nonnegative()) throw improper_pgf("negative coefficient within the expansion horizon");
    return s;
}

inline constexpr std::size_t max_limit_horizon = 10000;

/// Limit lifetime law expanded to k_max.
inline power_series limit_pmf(std::size_t threshold, std::size_t k_max) {
    if (k_max > max_limit_horizon) throw std::invalid_argument("limit_pmf: k_max must be <= 10^4");
    return expand_distribution(rational_pgf::lifetime_limit(threshold), k_max);
}

inline rational limit_mean(std::size_t threshold) { return rational_pgf::lifetime_limit(threshold).mean(); }

/// Exact rational to double; fine for values of moderate size.
inline double to_double(const rational& r) { return r.convert_to<double>(); }

inline std::map<std::int64_t, double> to_double_pmf(const exact_pmf& pmf) {
    std::map<std::int64_t, double> out;
    for (const auto& [k, p] : pmf.entries) out[static_cast<std::int64_t>(k)] = to_double(p);
    return out;
}

inline std::map<std::int64_t, double> to_double_pmf(const power_series& s) {
    std::map<std::int64_t, double> out;
    for (std::size_t k = 0; k <= s.horizon(); ++k) {
        const double p = s.coefficient_double(k);
        if (p != 0.0) out[static_cast<std::int64_t>(k)] = p;
    }
    return out;
}

} // namespace gwtree

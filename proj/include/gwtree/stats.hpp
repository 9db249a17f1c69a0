#pragma once

// Floating-point statistics for comparing sampled distributions with exact
// references and for fitting scaling exponents.

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gwtree {

class insufficient_samples : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct empirical_dist {
    std::map<std::int64_t, std::uint64_t> counts;
    std::uint64_t total = 0;

    void add(std::int64_t value, std::uint64_t count = 1) {
        counts[value] += count;
        total += count;
    }

    double probability(std::int64_t value) const {
        if (total == 0) return 0.0;
        auto it = counts.find(value);
        return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
    }

    std::map<std::int64_t, double> normalized() const {
        std::map<std::int64_t, double> out;
        for (const auto& [k, c] : counts) out[k] = static_cast<double>(c) / static_cast<double>(total);
        return out;
    }
};

/// Half the L1 distance over the union of supports.
inline double tvd(const std::map<std::int64_t, double>& a, const std::map<std::int64_t, double>& b) {
    double sum = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            sum += std::abs(ia->second);
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            sum += std::abs(ib->second);
            ++ib;
        } else {
            sum += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * sum;
}

inline double tvd(const empirical_dist& emp, const std::map<std::int64_t, double>& ref) {
    if (emp.total == 0) throw insufficient_samples("tvd: empty sample");
    return tvd(emp.normalized(), ref);
}

inline double tvd(const empirical_dist& a, const empirical_dist& b) {
    if (a.total == 0 || b.total == 0) throw insufficient_samples("tvd: empty sample");
    return tvd(a.normalized(), b.normalized());
}

/// Upper tail of the chi-square distribution: Q(dof/2, x/2).
inline double chi_square_survival(double statistic, double dof) {
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

struct chi_square_result {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};

/// Pearson test of equiprobable cells. Needs >= 2 cells and >= 10 samples
/// per cell on average.
inline chi_square_result chi_square_uniform(std::span<const std::uint64_t> counts) {
    const std::size_t cells = counts.size();
    if (cells < 2) throw insufficient_samples("chi-square needs at least two cells");
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total < 10 * cells) throw insufficient_samples("chi-square needs at least 10 samples per cell");
    const double expected = static_cast<double>(total) / static_cast<double>(cells);
    double stat = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return {stat, chi_square_survival(stat, static_cast<double>(cells - 1)), cells - 1};
}

/// Least-squares slope of log(mean) against log(n).
inline double fit_exponent(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw insufficient_samples("exponent fit needs at least three points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [n, m] : points) {
        if (n <= 0 || m <= 0) throw std::domain_error("exponent fit needs positive values");
        const double x = std::log(n);
        const double y = std::log(m);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double k = static_cast<double>(points.size());
    const double denom = k * sxx - sx * sx;
    if (denom == 0.0) throw std::domain_error("exponent fit needs at least two distinct sizes");
    return (k * sxy - sx * sy) / denom;
}

struct mean_ci_result {
    double mean = 0.0;
    double half_width = 0.0;
    /// Fewer than two samples: no spread estimate, half_width is 0.
    bool degenerate = false;
};

/// mean +- 1.96 s / sqrt(N), with s the sample standard deviation.
inline mean_ci_result mean_ci(std::span<const double> samples) {
    if (samples.empty()) throw insufficient_samples("mean_ci: no samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    if (samples.size() == 1) return {mean, 0.0, true};
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * sd / std::sqrt(n), false};
}

} // namespace gwtree

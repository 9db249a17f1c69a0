#include <gwtree/bitsource.hpp>
#include <gwtree/stats.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace gwtree;

namespace {

// Regularized upper incomplete gamma Q(a, x): power series for x < a + 1,
// Lentz continued fraction otherwise.
double gamma_q_reference(double a, double x) {
    if (x <= 0) return 1.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1) {
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < 10000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return 1.0 - sum * std::exp(log_prefix);
    }
    const double tiny = 1e-300;
    double b = x + 1 - a;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1) < 1e-16) break;
    }
    return std::exp(log_prefix) * h;
}

std::map<std::int64_t, double> pmf(std::initializer_list<std::pair<const std::int64_t, double>> l) { return l; }

} // namespace

TEST(Tvd, Examples) {
    const auto a = pmf({{1, 0.5}, {2, 0.5}});
    EXPECT_DOUBLE_EQ(tvd(a, a), 0.0);
    EXPECT_DOUBLE_EQ(tvd(a, pmf({{3, 1.0}})), 1.0);
    empirical_dist e;
    e.add(2);
    e.add(3);
    EXPECT_DOUBLE_EQ(tvd(e, pmf({{2, 1.0}})), 0.5);
    EXPECT_THROW(tvd(empirical_dist{}, a), insufficient_samples);
}

TEST(Tvd, SymmetricAndBounded) {
    bit_source src(1);
    for (int trial = 0; trial < 200; ++trial) {
        empirical_dist x, y;
        const auto nx = src.next_below(50) + 1;
        const auto ny = src.next_below(50) + 1;
        for (std::uint64_t i = 0; i < nx; ++i) x.add(static_cast<std::int64_t>(src.next_below(8)));
        for (std::uint64_t i = 0; i < ny; ++i) y.add(static_cast<std::int64_t>(src.next_below(8)));
        const double d = tvd(x, y);
        ASSERT_DOUBLE_EQ(d, tvd(y, x));
        ASSERT_GE(d, 0.0);
        ASSERT_LE(d, 1.0 + 1e-15);
        ASSERT_DOUBLE_EQ(tvd(x, x), 0.0);
    }
}

TEST(EmpiricalDist, Counts) {
    empirical_dist e;
    e.add(4, 3);
    e.add(-1);
    EXPECT_EQ(e.total, 4U);
    EXPECT_DOUBLE_EQ(e.probability(4), 0.75);
    EXPECT_DOUBLE_EQ(e.probability(7), 0.0);
    EXPECT_DOUBLE_EQ(e.normalized().at(-1), 0.25);
}

TEST(ChiSquare, Examples) {
    const std::vector<std::uint64_t> equal(14, 100);
    const auto r0 = chi_square_uniform(equal);
    EXPECT_DOUBLE_EQ(r0.statistic, 0.0);
    EXPECT_DOUBLE_EQ(r0.p_value, 1.0);
    EXPECT_EQ(r0.dof, 13U);

    const std::vector<std::uint64_t> skew{30, 10};
    const auto r1 = chi_square_uniform(skew);
    EXPECT_DOUBLE_EQ(r1.statistic, 10.0);
    EXPECT_NEAR(r1.p_value, 0.001565402258, 1e-11);
    EXPECT_NEAR(r1.p_value, gamma_q_reference(0.5, 5.0), 1e-8 * r1.p_value);
}

TEST(ChiSquare, SurvivalMatchesReference) {
    for (double dof : {1.0, 2.0, 3.0, 5.0, 13.0, 40.0}) {
        for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 25.0, 60.0, 120.0}) {
            const double mine = chi_square_survival(x, dof);
            const double ref = gamma_q_reference(dof / 2, x / 2);
            ASSERT_NEAR(mine, ref, 1e-8 * std::max(ref, 1e-300) + 1e-300) << dof << " " << x;
        }
    }
}

TEST(ChiSquare, MonotoneInStatistic) {
    for (double dof : {1.0, 4.0, 13.0}) {
        double prev = 1.0;
        for (double x = 0.0; x < 100.0; x += 0.25) {
            const double p = chi_square_survival(x, dof);
            ASSERT_LE(p, prev);
            prev = p;
        }
    }
}

TEST(ChiSquare, Preconditions) {
    const std::vector<std::uint64_t> one{100};
    EXPECT_THROW(chi_square_uniform(one), insufficient_samples);
    const std::vector<std::uint64_t> few{5, 5, 5};
    EXPECT_THROW(chi_square_uniform(few), insufficient_samples);
}

TEST(FitExponent, Examples) {
    std::vector<std::pair<double, double>> sq, lin, scaled;
    for (double n : {10.0, 100.0, 1000.0, 10000.0}) {
        sq.emplace_back(n, std::sqrt(n));
        lin.emplace_back(n, n);
        scaled.emplace_back(n, 7.3 * std::sqrt(n));
    }
    EXPECT_NEAR(fit_exponent(sq), 0.5, 1e-9);
    EXPECT_NEAR(fit_exponent(lin), 1.0, 1e-9);
    EXPECT_NEAR(fit_exponent(scaled), 0.5, 1e-9);
    const std::vector<std::pair<double, double>> two{{1, 1}, {2, 2}};
    EXPECT_THROW(fit_exponent(two), insufficient_samples);
    const std::vector<std::pair<double, double>> bad{{1, 1}, {2, -2}, {3, 3}};
    EXPECT_THROW(fit_exponent(bad), std::domain_error);
}

TEST(MeanCi, Examples) {
    const std::vector<double> constant(50, 3.25);
    const auto c = mean_ci(constant);
    EXPECT_DOUBLE_EQ(c.mean, 3.25);
    EXPECT_DOUBLE_EQ(c.half_width, 0.0);
    EXPECT_FALSE(c.degenerate);

    std::vector<double> coin;
    for (int i = 0; i < 100000; ++i) coin.push_back(i % 2);
    const auto b = mean_ci(coin);
    EXPECT_NEAR(b.mean, 0.5, 1e-12);
    EXPECT_NEAR(b.half_width, 1.96 * 0.5 / std::sqrt(100000.0), 1e-5);

    const std::vector<double> single{9.0};
    const auto s = mean_ci(single);
    EXPECT_TRUE(s.degenerate);
    EXPECT_DOUBLE_EQ(s.half_width, 0.0);
    EXPECT_THROW(mean_ci(std::vector<double>{}), insufficient_samples);
}

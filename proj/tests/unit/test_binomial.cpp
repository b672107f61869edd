#include "oracles.hpp"

#include <gridstab/binomial.hpp>
#include <gridstab/error.hpp>
#include <gridstab/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace gridstab;

TEST(BernoulliSe, Examples)
{
    EXPECT_EQ(bernoulli_se(100, 0), 0.0);
    EXPECT_DOUBLE_EQ(bernoulli_se(10000, 5000), 0.005);
    EXPECT_NEAR(bernoulli_se(1000, 500), 0.0158, 1e-4);
    EXPECT_THROW(bernoulli_se(0, 0), ConfigError);
    EXPECT_THROW(bernoulli_se(3, 4), ConfigError);
}

TEST(IncompleteBeta, KnownValues)
{
    EXPECT_NEAR(regularized_incomplete_beta(1.0, 1.0, 0.3), 0.3, 1e-15);
    EXPECT_NEAR(regularized_incomplete_beta(2.0, 3.0, 0.4), 0.5248, 1e-12);
    EXPECT_NEAR(regularized_incomplete_beta(0.5, 0.5, 0.5), 0.5, 1e-12);
    EXPECT_EQ(regularized_incomplete_beta(3.0, 2.0, 0.0), 0.0);
    EXPECT_EQ(regularized_incomplete_beta(3.0, 2.0, 1.0), 1.0);
}

TEST(BinomialTail, AgreesWithDirectSums)
{
    for (std::size_t n : {1u, 5u, 20u, 50u, 200u}) {
        for (std::size_t s = 0; s <= n; s += std::max<std::size_t>(1, n / 7)) {
            for (double p : {0.01, 0.3, 0.5, 0.93}) {
                EXPECT_NEAR(binomial_upper_tail(n, s, p), oracle::binomial_tail(n, s, p), 1e-12);
            }
        }
    }
}

TEST(ClopperPearson, AllSuccessesClosedForm)
{
    EXPECT_NEAR(clopper_pearson_lower(1000, 1000, 0.001), std::pow(0.001, 1.0 / 1000.0), 1e-12);
    EXPECT_NEAR(clopper_pearson_lower(1000, 1000, 0.001), 0.9931, 5e-5);
}

TEST(ClopperPearson, NoSuccessesIsZero)
{
    EXPECT_EQ(clopper_pearson_lower(37, 0, 0.05), 0.0);
}

TEST(ClopperPearson, TwentyNineteenSolvesTailEquation)
{
    const double v = clopper_pearson_lower(20, 19, 0.001);
    EXPECT_NEAR(oracle::binomial_tail(20, 19, v), 0.001, 1e-9);
}

TEST(ClopperPearson, ExactInfimumForSmallN)
{
    const double alpha = 0.001;
    const double eps = 1e-9;
    for (std::size_t n = 1; n <= 50; ++n) {
        for (std::size_t s = 1; s <= n; ++s) {
            const double p = clopper_pearson_lower(n, s, alpha);
            ASSERT_LE(oracle::binomial_tail(n, s, p - eps), alpha) << n << "," << s;
            ASSERT_GT(oracle::binomial_tail(n, s, p + eps), alpha) << n << "," << s;
        }
    }
}

TEST(ClopperPearson, MonotoneInSuccesses)
{
    for (std::size_t n : {10u, 100u, 1000u}) {
        double last = -1.0;
        for (std::size_t s = 0; s <= n; ++s) {
            const double p = clopper_pearson_lower(n, s, 0.001);
            ASSERT_GE(p, last);
            ASSERT_LE(p, static_cast<double>(s) / static_cast<double>(n));
            last = p;
        }
    }
}

TEST(ClopperPearson, CoverageAtMostAlpha)
{
    const double alpha = 0.001;
    const double p = 0.9;
    const std::size_t n = 50;
    const int experiments = 10000;
    rng::CounterStream stream(2024);
    int violations = 0;
    for (int e = 0; e < experiments; ++e) {
        std::size_t s = 0;
        for (std::size_t k = 0; k < n; ++k) {
            s += stream.bernoulli(p) ? 1 : 0;
        }
        violations += clopper_pearson_lower(n, s, alpha) > p ? 1 : 0;
    }
    EXPECT_LE(static_cast<double>(violations) / experiments, alpha + 3.0 * std::sqrt(alpha / experiments));
}

TEST(ClopperPearson, InvalidInputs)
{
    EXPECT_THROW(clopper_pearson_lower(0, 0, 0.1), ConfigError);
    EXPECT_THROW(clopper_pearson_lower(5, 6, 0.1), ConfigError);
    EXPECT_THROW(clopper_pearson_lower(5, 3, 0.0), ConfigError);
    EXPECT_THROW(clopper_pearson_lower(5, 3, 1.0), ConfigError);
}

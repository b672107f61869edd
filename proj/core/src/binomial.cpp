#include "gridstab/binomial.hpp"

#include "gridstab/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gridstab {

double bernoulli_se(std::uint64_t n, std::uint64_t s)
{
    if (n == 0) {
        throw ConfigError("standard error undefined for zero trials");
    }
    if (s > n) {
        throw ConfigError("successes exceed trials");
    }
    const double p = static_cast<double>(s) / static_cast<double>(n);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz), valid for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) {
            return h;
        }
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw ConfigError("incomplete beta requires a, b > 0 and x in [0, 1]");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x == 1.0) {
        return 1.0;
    }
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double binomial_upper_tail(std::uint64_t n, std::uint64_t s, double p)
{
    if (s == 0) {
        return 1.0;
    }
    if (s > n) {
        return 0.0;
    }
    return regularized_incomplete_beta(static_cast<double>(s), static_cast<double>(n - s + 1), p);
}

double clopper_pearson_lower(std::uint64_t n, std::uint64_t s, double alpha)
{
    if (n == 0) {
        throw ConfigError("Clopper-Pearson bound needs at least one trial");
    }
    if (s > n) {
        throw ConfigError("successes (" + std::to_string(s) + ") exceed trials (" + std::to_string(n) + ")");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("confidence parameter alpha must lie in (0, 1)");
    }
    if (s == 0) {
        return 0.0;
    }
    if (s == n) {
        return std::pow(alpha, 1.0 / static_cast<double>(n));
    }
    // The tail is continuous and strictly increasing in p, so the infimum is
    // the root of tail(p) = alpha.
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > 0.0) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (binomial_upper_tail(n, s, mid) > alpha) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace gridstab

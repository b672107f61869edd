#pragma once

#include <cstdint>

namespace gridstab {

/// Standard error sqrt(p (1 - p) / n) of a Bernoulli proportion p = s / n.
/// Throws ConfigError for n == 0 or s > n.
double bernoulli_se(std::uint64_t n, std::uint64_t s);

/// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// P[Bin(n, p) >= s], evaluated as I_p(s, n - s + 1).
double binomial_upper_tail(std::uint64_t n, std::uint64_t s, double p);

/// One-sided Clopper-Pearson lower confidence bound
///   inf { p : P[Bin(n, p) >= s] > alpha },
/// found by bisection on the exact binomial tail. Returns 0 for s == 0 and
/// alpha^(1/n) for s == n. Throws ConfigError for s > n, n == 0 or alpha
/// outside (0, 1).
double clopper_pearson_lower(std::uint64_t n, std::uint64_t s, double alpha);

}  // namespace gridstab

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include "afmm/error.hpp"

namespace afmm {

namespace detail {

inline void require_positive_finite(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// Godfrey's g = 7, n = 9 Lanczos coefficients.
inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace detail

/// ln Gamma(x) for x > 0 (Lanczos approximation, shifted below 1/2).
inline double log_gamma(double x) {
  detail::require_positive_finite(x, "log_gamma");
  if (x < 0.5) {
    // Gamma(x) = Gamma(x + 1) / x keeps the Lanczos sum in its accurate range.
    return log_gamma(x + 1.0) - std::log(x);
  }
  const double z = x - 1.0;
  double series = detail::kLanczosCoef[0];
  for (std::size_t i = 1; i < detail::kLanczosCoef.size(); ++i) {
    series += detail::kLanczosCoef[i] / (z + static_cast<double>(i));
  }
  const double t = z + detail::kLanczosG + 0.5;
  constexpr double half_log_two_pi = 0.91893853320467274178;
  return half_log_two_pi + (z + 0.5) * std::log(t) - t + std::log(series);
}

/// Digamma psi(x) for x > 0: upward recurrence to x >= 10, then the
/// asymptotic expansion.
inline double digamma(double x) {
  detail::require_positive_finite(x, "digamma");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number tail: B_{2k} / (2k x^{2k}) for k = 1..7.
  const double tail =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 -
                                              inv2 * (691.0 / 32760 - inv2 / 12))))));
  return shift + std::log(x) - 0.5 * inv - tail;
}

/// log(sum(exp(v))) computed without overflow; -inf for an empty or
/// all -inf input.
inline double logsumexp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

}  // namespace afmm

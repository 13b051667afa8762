#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "afmm/rng.hpp"
#include "afmm/special.hpp"

namespace afmm {

/// Number of distinct components hit by n categorical draws from the given
/// log-weights. Weights whose exp() underflows can never be hit, which is the
/// exact behaviour up to probabilities below the double range.
inline int simulate_kplus(std::span<const double> log_w, int n, RngStream& rng) {
  const double norm = logsumexp(log_w);
  std::vector<double> cumulative(log_w.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    acc += std::exp(log_w[k] - norm);
    cumulative[k] = acc;
  }
  std::vector<char> hit(log_w.size(), 0);
  int kplus = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
    if (!hit[k]) {
      hit[k] = 1;
      ++kplus;
    }
  }
  return kplus;
}

}  // namespace afmm

#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/special.hpp"

namespace afmm {

/// Dirichlet on K weights whose first U shapes equal alpha1 and remaining
/// K - U shapes equal alpha2. U = 0 and U = K are the symmetric special cases.
struct AsymDirichletParams {
  int K = 2;
  int U = 1;
  double alpha1 = 1.0;
  double alpha2 = 1.0;

  void validate() const {
    if (K < 2) throw DomainError("AsymDirichletParams: K must be at least 2");
    if (U < 0 || U > K) throw DomainError("AsymDirichletParams: U must lie in [0, K]");
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !std::isfinite(alpha1) || !std::isfinite(alpha2)) {
      throw DomainError("AsymDirichletParams: alpha1 and alpha2 must be positive and finite");
    }
  }

  int block2_size() const noexcept { return K - U; }

  double total_concentration() const noexcept { return alpha1 * U + alpha2 * (K - U); }

  double shape(int k) const noexcept { return k < U ? alpha1 : alpha2; }

  std::vector<double> shapes() const {
    std::vector<double> s(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) s[static_cast<std::size_t>(k)] = shape(k);
    return s;
  }
};

namespace detail {

inline void check_simplex(std::span<const double> log_w, double tol, const char* fn) {
  const double lse = logsumexp(log_w);
  if (!(std::abs(lse) <= tol)) {
    throw DomainError(std::string(fn) + ": log-weights do not lie on the simplex (logsumexp = " +
                      std::to_string(lse) + ")");
  }
}

// (a - 1) * log_w with the 0 * (-inf) = 0 and boundary conventions.
inline double block_term(double exponent, double log_w) {
  if (log_w == -std::numeric_limits<double>::infinity()) {
    if (exponent == 0.0) return 0.0;
    return exponent < 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
  }
  return exponent * log_w;
}

}  // namespace detail

/// ln Dir(w; alpha1 j_U, alpha2 j_{K-U}) evaluated from log-weights.
///
/// Returns +inf when a weight on the boundary has block exponent below zero;
/// the caller decides how to treat that value.
inline double asym_dirichlet_log_density(const AsymDirichletParams& params,
                                         std::span<const double> log_w) {
  params.validate();
  if (log_w.size() != static_cast<std::size_t>(params.K)) {
    throw DomainError("asym_dirichlet_log_density: expected K log-weights");
  }
  detail::check_simplex(log_w, 1e-8, "asym_dirichlet_log_density");
  const int U = params.U;
  const int rest = params.block2_size();
  double value = log_gamma(params.total_concentration());
  if (U > 0) value -= U * log_gamma(params.alpha1);
  if (rest > 0) value -= rest * log_gamma(params.alpha2);
  for (int k = 0; k < params.K; ++k) {
    value += detail::block_term(params.shape(k) - 1.0, log_w[static_cast<std::size_t>(k)]);
  }
  return value;
}

/// The alpha1-dependent part of the log density with alpha2 held fixed:
/// lnGamma(alpha1 U + alpha2 (K-U)) - U lnGamma(alpha1) + (alpha1 - 1) sum_{k<U} log w_k.
/// Used by Metropolis updates on alpha1, where the block-2 terms cancel.
inline double asym_dirichlet_alpha1_terms(const AsymDirichletParams& params,
                                          std::span<const double> log_w) {
  double sum_block1 = 0.0;
  for (int k = 0; k < params.U; ++k) sum_block1 += log_w[static_cast<std::size_t>(k)];
  return log_gamma(params.total_concentration()) - params.U * log_gamma(params.alpha1) +
         (params.alpha1 - 1.0) * sum_block1;
}

/// Draw log-weights from the asymmetric Dirichlet.
inline std::vector<double> sample_asym_dirichlet(RngStream& rng, const AsymDirichletParams& params) {
  params.validate();
  const auto shapes = params.shapes();
  return sample_dirichlet_log(rng, shapes);
}

/// Closed-form E(w_k) for a block-1 and a block-2 component.
inline std::pair<double, double> asym_dirichlet_block_mean(const AsymDirichletParams& params) {
  params.validate();
  const double total = params.total_concentration();
  return {params.alpha1 / total, params.alpha2 / total};
}

}  // namespace afmm

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "afmm/error.hpp"
#include "afmm/rng.hpp"
#include "afmm/special.hpp"

namespace afmm {

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;

  void validate() const {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
      throw DomainError("GammaParams: shape and rate must be positive and finite");
    }
  }
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Elementary samplers. All consume only RngStream::uniform() so sequences are
// identical across standard libraries.

inline double sample_uniform(RngStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

inline double sample_exponential(RngStream& rng, double rate = 1.0) {
  return -std::log(rng.uniform()) / rate;
}

inline double sample_std_normal(RngStream& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double sample_normal(RngStream& rng, double mean, double sd) {
  return mean + sd * sample_std_normal(rng);
}

namespace detail {

// Marsaglia & Tsang (2000), valid for shape >= 1; returns log of a unit-rate
// draw.
inline double log_gamma_draw_shape_ge1(RngStream& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = sample_std_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double log_u = std::log(rng.uniform());
    const double log_v = std::log(v);
    if (log_u < 0.5 * x * x + d - d * v + d * log_v) return std::log(d) + log_v;
  }
}

}  // namespace detail

/// Gamma draw on the log scale. For shape < 1 uses G_a = G_{a+1} V^{1/a}
/// evaluated in log space, so the result stays finite even when exp() of it
/// underflows (shape 1e-5 routinely yields values near -1e5).
inline double sample_log_gamma(RngStream& rng, const GammaParams& p) {
  p.validate();
  double log_unit = 0.0;
  if (p.shape >= 1.0) {
    log_unit = detail::log_gamma_draw_shape_ge1(rng, p.shape);
  } else {
    const double boosted = detail::log_gamma_draw_shape_ge1(rng, p.shape + 1.0);
    log_unit = boosted + std::log(rng.uniform()) / p.shape;
  }
  return log_unit - std::log(p.rate);
}

inline double sample_gamma(RngStream& rng, const GammaParams& p) {
  return std::exp(sample_log_gamma(rng, p));
}

/// Inverse-Gamma(shape, scale): density proportional to x^{-shape-1} exp(-scale/x),
/// mean scale/(shape-1).
inline double sample_inverse_gamma(RngStream& rng, double shape, double scale) {
  return scale / sample_gamma(rng, {shape, 1.0});
}

/// Dirichlet draw returned as log-weights normalized so logsumexp == 0.
inline std::vector<double> sample_dirichlet_log(RngStream& rng, std::span<const double> shapes) {
  if (shapes.size() < 2) throw DomainError("sample_dirichlet_log: need at least two shapes");
  std::vector<double> out(shapes.size());
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    if (!(shapes[k] > 0.0)) throw DomainError("sample_dirichlet_log: shapes must be positive");
    out[k] = sample_log_gamma(rng, {shapes[k], 1.0});
  }
  const double norm = logsumexp(out);
  for (double& v : out) v -= norm;
  return out;
}

/// Index drawn with probability proportional to exp(log_probs[k]), using a
/// supplied uniform u in (0, 1) (normalized inverse CDF in log space).
inline std::size_t categorical_from_uniform(std::span<const double> log_probs, double u) {
  const double norm = logsumexp(log_probs);
  if (!std::isfinite(norm)) {
    throw DomainError("sample_categorical_log: all log-probabilities are -inf or invalid");
  }
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < log_probs.size(); ++k) {
    const double p = std::exp(log_probs[k] - norm);
    if (p > 0.0) last_positive = k;
    cumulative += p;
    if (u < cumulative) return k;
  }
  // Rounding left the total slightly below u.
  return last_positive;
}

inline std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_probs) {
  return categorical_from_uniform(log_probs, rng.uniform());
}

/// Multivariate normal with mean `mean` and precision matrix `precision`,
/// sampled as mean + L^{-T} z where precision = L L^T.
inline Eigen::VectorXd sample_mvn_precision(RngStream& rng, const Eigen::VectorXd& mean,
                                            const Eigen::MatrixXd& precision) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("sample_mvn_precision: precision matrix is not positive definite");
  }
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sample_std_normal(rng);
  return mean + llt.matrixU().solve(z);
}

// ---------------------------------------------------------------------------
// Log densities.

inline double normal_logpdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

inline double gamma_logpdf(double x, const GammaParams& p) {
  if (!(x > 0.0)) return kNegInf;
  return p.shape * std::log(p.rate) - log_gamma(p.shape) + (p.shape - 1.0) * std::log(x) -
         p.rate * x;
}

inline double inverse_gamma_logpdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - log_gamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

inline double exponential_logpdf(double x, double rate) {
  if (x < 0.0) return kNegInf;
  return std::log(rate) - rate * x;
}

}  // namespace afmm

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "afmm/asym_dirichlet.hpp"
#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/kplus.hpp"
#include "afmm/parallel.hpp"
#include "afmm/rng.hpp"
#include "afmm/special.hpp"

namespace afmm {

/// Tabulated distance d(alpha1) on a log-spaced alpha1 grid; alpha ascends,
/// distance strictly descends.
struct DistanceGrid {
  std::vector<double> alpha;
  std::vector<double> distance;
};

/// Penalized-complexity prior on alpha1 given a fixed alpha2.
///
/// The base model is the asymmetric Dirichlet with (alpha01, alpha02) =
/// (U, 1e-5). The prior places Exp(lambda) on d(alpha1) = sqrt(2 KLD) and is
/// supported on (alpha1_floor, U]. Construct with `make()`; the grid is shared
/// between copies that only differ in lambda.
struct PcPriorSpec {
  int U = 1;
  int K = 2;
  double alpha2_fixed = 1e-5;
  double alpha01 = 1.0;
  double alpha02 = 1e-5;
  double lambda = 1.0;
  double alpha1_floor = 1e-8;
  std::shared_ptr<const DistanceGrid> grid;
  /// ln of the quadrature normalizing constant for the current lambda.
  double log_normalizer = 0.0;

  static constexpr std::size_t kGridSize = 2048;

  static PcPriorSpec make(int U, int K, double lambda, double alpha2_fixed = 1e-5,
                          double alpha1_floor = 1e-8);

  /// Same distance table, new decay rate (recomputes the normalizer).
  PcPriorSpec with_lambda(double new_lambda) const;

  /// Distance at the evaluation floor, the largest reachable distance.
  double max_distance() const { return grid->distance.front(); }
  /// Distance at alpha1 = U (zero when alpha2_fixed == alpha02).
  double min_distance() const { return grid->distance.back(); }
};

// ---------------------------------------------------------------------------

namespace detail {

// Near the base model (alpha2 at its base value, alpha1 within 10% of
// alpha01) the closed form loses most of its digits to cancellation. There
// KLD = int_0^delta s I(alpha01 + s) ds, delta = alpha1 - alpha01, with the
// Fisher information I(t) = U psi'(t) - U^2 psi'(U t + alpha02 (K - U)) along
// alpha1. Integrating in the offset keeps s exact for tiny delta.
inline double kld_near_base(double alpha1, const PcPriorSpec& spec) {
  const double U = spec.U;
  const double c = spec.alpha02 * (spec.K - spec.U);
  const double a0 = spec.alpha01;
  const double delta = alpha1 - a0;
  const double sign = delta < 0.0 ? -1.0 : 1.0;
  auto integrand = [&](double u) {
    const double t = a0 + sign * u;
    return u * (U * boost::math::trigamma(t) - U * U * boost::math::trigamma(U * t + c));
  };
  return boost::math::quadrature::gauss<double, 10>::integrate(integrand, 0.0, std::abs(delta));
}

}  // namespace detail

/// KL divergence from Dir(alpha1 j_U, alpha2 j_{K-U}) to the base model
/// Dir(alpha01 j_U, alpha02 j_{K-U}). Like-signed terms are grouped so that
/// identical parameters cancel exactly. alpha1 below the floor is evaluated at
/// the floor. Results within round-off of zero are clamped to 0.
inline double kld(double alpha1, double alpha2, const PcPriorSpec& spec) {
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) throw DomainError("kld: alpha1, alpha2 must be positive");
  alpha1 = std::max(alpha1, spec.alpha1_floor);
  if (alpha2 == spec.alpha02 && std::abs(alpha1 - spec.alpha01) <= 0.1 * spec.alpha01) {
    return alpha1 == spec.alpha01 ? 0.0 : detail::kld_near_base(alpha1, spec);
  }
  const double U = spec.U;
  const double rest = spec.K - spec.U;
  const double total = alpha1 * U + alpha2 * rest;
  const double total0 = spec.alpha01 * U + spec.alpha02 * rest;
  const double psi_total = digamma(total);
  double value = log_gamma(total) - log_gamma(total0);
  if (alpha1 != spec.alpha01) {
    value += U * (log_gamma(spec.alpha01) - log_gamma(alpha1)) +
             U * (alpha1 - spec.alpha01) * (digamma(alpha1) - psi_total);
  }
  if (rest > 0 && alpha2 != spec.alpha02) {
    value += rest * (log_gamma(spec.alpha02) - log_gamma(alpha2)) +
             rest * (alpha2 - spec.alpha02) * (digamma(alpha2) - psi_total);
  }
  if (value < 0.0) {
    if (value < -1e-10) throw NumericalError("kld: negative divergence " + std::to_string(value));
    value = 0.0;
  }
  return value;
}

/// d(alpha1) = sqrt(2 KLD(alpha1, alpha2_fixed)); alpha1 must lie in [floor, U].
inline double pc_distance(double alpha1, const PcPriorSpec& spec) {
  if (!(alpha1 >= spec.alpha1_floor) || !(alpha1 <= spec.U)) {
    throw DomainError("pc_distance: alpha1 = " + std::to_string(alpha1) + " outside [floor, U]");
  }
  return std::sqrt(2.0 * kld(alpha1, spec.alpha2_fixed, spec));
}

/// Finite-difference d'(alpha1): central with h = max(cbrt(eps) alpha1, 1e-9),
/// clipped to the domain, one-sided at the endpoints.
inline double pc_distance_derivative(double alpha1, const PcPriorSpec& spec) {
  if (!(alpha1 >= spec.alpha1_floor) || !(alpha1 <= spec.U)) {
    throw DomainError("pc_distance_derivative: alpha1 outside [floor, U]");
  }
  const double h = std::max(std::cbrt(std::numeric_limits<double>::epsilon()) * alpha1, 1e-9);
  const double h_left = std::min(h, alpha1 - spec.alpha1_floor);
  const double h_right = std::min(h, spec.U - alpha1);
  if (h_left > 0.0 && h_right > 0.0) {
    return (pc_distance(alpha1 + h_right, spec) - pc_distance(alpha1 - h_left, spec)) /
           (h_left + h_right);
  }
  if (h_right > 0.0) {
    return (pc_distance(alpha1 + h, spec) - pc_distance(alpha1, spec)) / h;
  }
  return (pc_distance(alpha1, spec) - pc_distance(alpha1 - h, spec)) / h;
}

/// Unnormalized log density ln[lambda exp(-lambda d) |d'|].
inline double pc_log_density_unnormalized(double alpha1, const PcPriorSpec& spec) {
  const double d = pc_distance(alpha1, spec);
  const double slope = std::abs(pc_distance_derivative(alpha1, spec));
  return std::log(spec.lambda) - spec.lambda * d + std::log(slope);
}

/// Normalized log PC density on (floor, U]; -inf on (0, floor).
inline double log_pc_density(double alpha1, const PcPriorSpec& spec) {
  if (!(alpha1 > 0.0) || !(alpha1 <= spec.U)) {
    throw DomainError("log_pc_density: alpha1 = " + std::to_string(alpha1) + " outside (0, U]");
  }
  if (alpha1 < spec.alpha1_floor) return kNegInf;
  return pc_log_density_unnormalized(alpha1, spec) - spec.log_normalizer;
}

struct Alpha1Inverse {
  double alpha1;
  bool clamped;  ///< distance fell outside [d(U), d(floor)]
};

/// Solves d(alpha1) = target: grid bisection for a bracket, then TOMS 748.
inline Alpha1Inverse pc_alpha1_from_distance(double target, const PcPriorSpec& spec) {
  const auto& g = *spec.grid;
  if (target >= g.distance.front()) return {spec.alpha1_floor, true};
  if (target <= g.distance.back()) return {static_cast<double>(spec.U), target < g.distance.back()};
  // First index whose distance drops below the target.
  const auto it = std::partition_point(g.distance.begin(), g.distance.end(),
                                       [target](double d) { return d >= target; });
  const auto hi_idx = static_cast<std::size_t>(it - g.distance.begin());
  double lo = g.alpha[hi_idx - 1];
  double hi = g.alpha[hi_idx];
  auto f = [&](double a) { return pc_distance(a, spec) - target; };
  const double f_lo = g.distance[hi_idx - 1] - target;
  const double f_hi = g.distance[hi_idx] - target;
  if (f_lo == 0.0) return {lo, false};
  std::uintmax_t max_iter = 100;
  auto tol = [](double a, double b) {
    return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(a);
  };
  const auto root = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  return {0.5 * (root.first + root.second), false};
}

struct Alpha1Draw {
  double alpha1;
  bool clamped;
};

/// alpha1 = d^{-1}(d(U) + e / lambda) for a supplied unit-exponential e.
/// d(U) is zero unless alpha2 differs from the base value; the shift keeps
/// the draw consistent with the density, which lives on [d(U), d(floor)].
inline Alpha1Draw pc_alpha1_from_unit_exponential(double e1, const PcPriorSpec& spec) {
  const auto inv = pc_alpha1_from_distance(spec.min_distance() + e1 / spec.lambda, spec);
  return {inv.alpha1, inv.clamped && inv.alpha1 == spec.alpha1_floor};
}

/// Draw alpha1 from the PC prior via the exponential law on the distance.
/// Draws beyond d(floor) return the floor and are flagged as clamped.
inline Alpha1Draw sample_alpha1(RngStream& rng, const PcPriorSpec& spec) {
  return pc_alpha1_from_unit_exponential(sample_exponential(rng, 1.0), spec);
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::shared_ptr<const DistanceGrid> build_distance_grid(const PcPriorSpec& spec) {
  auto grid = std::make_shared<DistanceGrid>();
  const std::size_t n = PcPriorSpec::kGridSize;
  grid->alpha.resize(n);
  grid->distance.resize(n);
  const double log_lo = std::log(spec.alpha1_floor);
  const double log_hi = std::log(static_cast<double>(spec.U));
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i + 1 == n ? static_cast<double>(spec.U)
                                : std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
    grid->alpha[i] = i == 0 ? spec.alpha1_floor : a;
    grid->distance[i] = pc_distance(grid->alpha[i], spec);
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(grid->distance[i] < grid->distance[i - 1])) {
      throw NumericalError("PcPriorSpec: distance is not strictly decreasing in alpha1 near " +
                           std::to_string(grid->alpha[i]) + " (U=" + std::to_string(spec.U) +
                           ", K=" + std::to_string(spec.K) + ")");
    }
  }
  return grid;
}

// Integral of the unnormalized density over (floor, U], done piecewise in
// log(alpha1) with breakpoints where lambda * d crosses fixed levels so every
// piece is smooth at its own scale.
inline double pc_normalizer(const PcPriorSpec& spec) {
  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> cuts{std::log(spec.alpha1_floor), std::log(static_cast<double>(spec.U))};
  for (double level : {1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
    const double d = level / spec.lambda;
    if (d <= spec.min_distance() || d >= spec.max_distance()) continue;
    cuts.push_back(std::log(pc_alpha1_from_distance(d, spec).alpha1));
  }
  std::sort(cuts.begin(), cuts.end());
  auto integrand = [&](double log_a) {
    const double a = std::clamp(std::exp(log_a), spec.alpha1_floor, static_cast<double>(spec.U));
    return std::exp(pc_log_density_unnormalized(a, spec)) * a;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 8, 1e-9);
  }
  return total;
}

}  // namespace detail

inline PcPriorSpec PcPriorSpec::make(int U, int K, double lambda, double alpha2_fixed,
                                     double alpha1_floor) {
  if (U < 1) throw DomainError("PcPriorSpec: U must be at least 1");
  if (K <= U) throw DomainError("PcPriorSpec: K must exceed U");
  if (!(alpha2_fixed > 0.0)) throw DomainError("PcPriorSpec: alpha2 must be positive");
  if (!(alpha1_floor > 0.0) || !(alpha1_floor < U)) {
    throw DomainError("PcPriorSpec: alpha1 floor must lie in (0, U)");
  }
  PcPriorSpec spec;
  spec.U = U;
  spec.K = K;
  spec.alpha2_fixed = alpha2_fixed;
  spec.alpha01 = U;
  spec.alpha02 = 1e-5;
  spec.alpha1_floor = alpha1_floor;
  spec.grid = detail::build_distance_grid(spec);
  return spec.with_lambda(lambda);
}

inline PcPriorSpec PcPriorSpec::with_lambda(double new_lambda) const {
  if (!(new_lambda > 0.0) || !std::isfinite(new_lambda)) {
    throw DomainError("PcPriorSpec: lambda must be positive and finite");
  }
  PcPriorSpec out = *this;
  out.lambda = new_lambda;
  out.log_normalizer = 0.0;
  const double z = detail::pc_normalizer(out);
  // The exponential push-forward integrates to exp(-lambda d(U)) - exp(-lambda d(floor)).
  const double expected = std::exp(-new_lambda * out.min_distance()) -
                          std::exp(-new_lambda * out.max_distance());
  if (!(std::abs(z - expected) <= 1e-3)) {
    throw NumericalError("PcPriorSpec: quadrature normalizer " + std::to_string(z) +
                         " disagrees with the exponential push-forward mass " +
                         std::to_string(expected));
  }
  out.log_normalizer = std::log(z);
  return out;
}

// ---------------------------------------------------------------------------
// Calibration of lambda to a tail probability Pr(K+ < U) = tp.

struct CalibrationRequest {
  int U = 1;
  double tp = 0.1;
  int K = 25;
  int n = 100;
  double alpha2 = 1e-5;
  int mc_replicates = 20000;
  double tolerance = 0.02;
};

struct CalibrationResult {
  double lambda_star = 0.0;
  double achieved_tail = 0.0;
  double tp = 0.0;
  double tolerance = 0.0;
  int mc_replicates = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  std::size_t boundary_clamps = 0;
};

namespace detail {

// One replicate of the generative chain alpha1 -> w -> z -> K+. Each stage
// reads its own child stream so a change in alpha1 leaves the uniforms used by
// other stages untouched (common random numbers across lambda).
inline int replicate_kplus(const PcPriorSpec& spec, int n, const RngStream& replicate,
                           bool* clamped) {
  RngStream e_stream = replicate.substream(0);
  const auto draw = pc_alpha1_from_unit_exponential(sample_exponential(e_stream), spec);
  if (clamped != nullptr) *clamped = draw.clamped;
  const RngStream weight_root = replicate.substream(1);
  std::vector<double> log_w(static_cast<std::size_t>(spec.K));
  for (int k = 0; k < spec.K; ++k) {
    RngStream component = weight_root.substream(static_cast<std::uint64_t>(k));
    const double shape = k < spec.U ? draw.alpha1 : spec.alpha2_fixed;
    log_w[static_cast<std::size_t>(k)] = sample_log_gamma(component, {shape, 1.0});
  }
  RngStream alloc = replicate.substream(2);
  return simulate_kplus(log_w, n, alloc);
}

struct TailEstimate {
  double tail;
  std::size_t clamps;
};

inline TailEstimate estimate_left_tail(const PcPriorSpec& spec, int n, int replicates,
                                       const RngStream& rng) {
  const unsigned threads = default_thread_count();
  std::vector<std::size_t> below(threads, 0);
  std::vector<std::size_t> clamps(threads, 0);
  parallel_for(
      static_cast<std::size_t>(replicates),
      [&](std::size_t begin, std::size_t end, unsigned w) {
        for (std::size_t j = begin; j < end; ++j) {
          bool clamped = false;
          const int kplus = replicate_kplus(spec, n, rng.substream(j), &clamped);
          if (kplus < spec.U) ++below[w];
          if (clamped) ++clamps[w];
        }
      },
      threads);
  std::size_t total = 0;
  std::size_t total_clamps = 0;
  for (unsigned w = 0; w < threads; ++w) {
    total += below[w];
    total_clamps += clamps[w];
  }
  return {static_cast<double>(total) / replicates, total_clamps};
}

}  // namespace detail

/// Monte Carlo estimate of Pr(K+ < U) under the full generative chain with
/// alpha1 ~ PC(lambda); deterministic in (spec, n, replicates, rng).
inline double pc_left_tail(const PcPriorSpec& spec, int n, int replicates, const RngStream& rng) {
  return detail::estimate_left_tail(spec, n, replicates, rng).tail;
}

/// Finds lambda with Pr(K+ < U) = tp using a fixed common-random-number pool:
/// doubling/halving from lambda = 1 to a bracket, then bisection in log lambda.
inline CalibrationResult calibrate_lambda(const CalibrationRequest& req, const RngStream& rng) {
  if (req.U < 1 || req.U > req.K) throw DomainError("calibrate_lambda: need 1 <= U <= K");
  if (req.n < 1) throw DomainError("calibrate_lambda: n must be positive");
  if (!(req.tp > 0.0 && req.tp < 1.0)) throw DomainError("calibrate_lambda: tp must lie in (0, 1)");
  if (req.mc_replicates < 1) throw DomainError("calibrate_lambda: need at least one replicate");
  if (req.U == req.K) {
    throw DomainError("calibrate_lambda: U = K leaves no block-2 components (use a symmetric prior)");
  }

  constexpr double kLambdaMin = 1e-6;
  constexpr double kLambdaMax = 1e6;
  const PcPriorSpec base = PcPriorSpec::make(req.U, req.K, 1.0, req.alpha2);

  CalibrationResult result;
  result.tp = req.tp;
  result.tolerance = req.tolerance;
  result.mc_replicates = req.mc_replicates;
  result.seed = rng.seed();
  result.stream_id = rng.stream_id();

  int evaluations = 0;
  double best_lambda = 1.0;
  double best_gap = std::numeric_limits<double>::infinity();
  double best_tail = 0.0;
  std::size_t best_clamps = 0;
  auto tail_at = [&](double lambda) {
    PcPriorSpec spec = base;
    spec.lambda = lambda;  // sampling only needs the distance table
    const auto est = detail::estimate_left_tail(spec, req.n, req.mc_replicates, rng);
    ++evaluations;
    const double gap = std::abs(est.tail - req.tp);
    if (gap < best_gap || (gap == best_gap && lambda < best_lambda)) {
      best_gap = gap;
      best_lambda = lambda;
      best_tail = est.tail;
      best_clamps = est.clamps;
    }
    return est.tail;
  };

  // Pr(K+ < U) is nonincreasing in lambda.
  double lo = 1.0;
  double hi = 1.0;
  const double p1 = tail_at(1.0);
  if (p1 > req.tp) {
    hi = 2.0;
    while (tail_at(hi) > req.tp) {
      lo = hi;
      if (hi >= kLambdaMax) {
        throw CalibrationError("calibrate_lambda: tp=" + std::to_string(req.tp) +
                                   " unreachable; smallest achievable tail is " +
                                   std::to_string(best_tail),
                               p1, best_tail);
      }
      hi = std::min(2.0 * hi, kLambdaMax);
    }
  } else if (p1 < req.tp) {
    lo = 0.5;
    while (tail_at(lo) < req.tp) {
      hi = lo;
      if (lo <= kLambdaMin) {
        throw CalibrationError("calibrate_lambda: tp=" + std::to_string(req.tp) +
                                   " unreachable; largest achievable tail is " +
                                   std::to_string(best_tail),
                               best_tail, p1);
      }
      lo = std::max(0.5 * lo, kLambdaMin);
    }
  }

  const double granularity = 1.0 / req.mc_replicates;
  for (int iter = 0; iter < 60 && best_gap > 0.5 * granularity && hi / lo > 1.0 + 1e-9; ++iter) {
    const double mid = std::sqrt(lo * hi);
    const double p = tail_at(mid);
    if (p > req.tp) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  result.lambda_star = best_lambda;
  result.achieved_tail = best_tail;
  result.bracket_lo = lo;
  result.bracket_hi = hi;
  result.iterations = evaluations;
  result.boundary_clamps = best_clamps;
  if (best_gap > req.tolerance) {
    throw CalibrationError("calibrate_lambda: closest achievable tail " + std::to_string(best_tail) +
                               " misses tp=" + std::to_string(req.tp) + " by more than tolerance",
                           best_tail, best_tail);
  }
  return result;
}

}  // namespace afmm

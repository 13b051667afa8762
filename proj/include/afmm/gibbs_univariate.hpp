#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/parallel.hpp"
#include "afmm/posterior.hpp"
#include "afmm/rng.hpp"
#include "afmm/weights.hpp"

namespace afmm {

/// Univariate Gaussian mixture with an asymmetric Dirichlet weight prior:
///   y_i | z_i ~ N(mu_{z_i}, sigma2_{z_i}),  mu_k ~ N(mu0, sigma0_sq),
///   sigma2_k ~ Inverse-Gamma(a0, b0),      w ~ AsymDirichlet(U, alpha1, alpha2).
struct UnivariateModelConfig {
  WeightPriorConfig weights;
  std::optional<double> mu0;  ///< defaults to mean(y)
  double sigma0_sq = 100.0;
  double a0 = 3.0;
  double b0 = 2.0;
  bool block_swap = true;
  int adapt_window = 50;

  void validate() const {
    if (!(a0 > 1.0)) throw DomainError("univariate model: a0 must exceed 1");
    if (!(b0 > 0.0) || !(sigma0_sq > 0.0)) throw DomainError("univariate model: b0, sigma0_sq must be positive");
    if (weights.U > weights.K) throw DomainError("univariate model: need U <= K");
    if (adapt_window < 1) throw DomainError("univariate model: adapt_window must be positive");
  }
};

struct UnivariateChainState {
  std::vector<int> z;  ///< component index 0..K-1 per observation
  std::vector<double> log_w;
  std::vector<double> mu;
  std::vector<double> sigma_sq;
  double alpha1 = 1.0;
};

struct RunOptions {
  long iters = 15000;
  long burn = 10000;
  long thin = 10;
  std::uint64_t seed = 1;
  int chains = 1;

  void validate() const {
    if (iters <= burn || burn < 0) throw DomainError("run options: need iters > burn >= 0");
    if (thin < 1) throw DomainError("run options: thin must be >= 1");
    if (chains < 1) throw DomainError("run options: chains must be >= 1");
  }
  long retained() const { return (iters - burn) / thin; }
};

struct ChainDiagnostics {
  WeightUpdateStats weights;
  long variance_floors = 0;
  long ridge_retries = 0;
  long boundary_clamps = 0;
  double final_mh_step = 0.0;
  int retained = 0;
  std::vector<std::string> warnings;

  void absorb(const ChainDiagnostics& o) {
    weights.alpha1_proposals += o.weights.alpha1_proposals;
    weights.alpha1_accepts += o.weights.alpha1_accepts;
    weights.alpha1_proposals_after_burn += o.weights.alpha1_proposals_after_burn;
    weights.alpha1_accepts_after_burn += o.weights.alpha1_accepts_after_burn;
    weights.alpha1_below_floor += o.weights.alpha1_below_floor;
    weights.swap_proposals += o.weights.swap_proposals;
    weights.swap_accepts += o.weights.swap_accepts;
    variance_floors += o.variance_floors;
    ridge_retries += o.ridge_retries;
    boundary_clamps += o.boundary_clamps;
    final_mh_step = o.final_mh_step;
    retained += o.retained;
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
  }
};

inline constexpr double kVarianceFloor = 1e-12;

/// One chain of the univariate sampler. Holds the data, the resolved
/// hyperparameters, a private copy of the weight model and the state.
class UnivariateSampler {
 public:
  UnivariateSampler(std::span<const double> y, const UnivariateModelConfig& cfg, WeightModel weights)
      : y_(y.begin(), y.end()), cfg_(cfg), weights_(std::move(weights)) {
    cfg_.validate();
    if (y_.empty()) throw DataError("univariate sampler: no observations");
    for (double v : y_) {
      if (!std::isfinite(v)) throw DataError("univariate sampler: non-finite observation");
    }
    mu0_ = cfg_.mu0 ? *cfg_.mu0 : std::accumulate(y_.begin(), y_.end(), 0.0) / y_.size();
    initialize();
  }

  const UnivariateChainState& state() const { return state_; }
  UnivariateChainState& state() { return state_; }
  const WeightModel& weights() const { return weights_; }
  WeightModel& weights() { return weights_; }
  double mu0() const { return mu0_; }
  long variance_floors() const { return variance_floors_; }
  int K() const { return weights_.K(); }
  int n() const { return static_cast<int>(y_.size()); }

  /// Deterministic start: y split into min(U, K) quantile bins.
  void initialize() {
    const int K = weights_.K();
    const int n = static_cast<int>(y_.size());
    const int groups = std::max(1, std::min(cfg_.weights.U, K));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y_[a] < y_[b]; });
    state_.z.assign(static_cast<std::size_t>(n), 0);
    for (int r = 0; r < n; ++r) {
      state_.z[order[r]] = static_cast<int>(static_cast<long long>(r) * groups / n);
    }
    state_.mu.assign(static_cast<std::size_t>(K), mu0_);
    state_.sigma_sq.assign(static_cast<std::size_t>(K), cfg_.b0 / (cfg_.a0 - 1.0));
    std::vector<double> sums(static_cast<std::size_t>(K), 0.0);
    counts_ = count_labels();
    for (int i = 0; i < n; ++i) sums[state_.z[i]] += y_[i];
    for (int k = 0; k < K; ++k) {
      if (counts_[k] > 0) state_.mu[k] = sums[k] / counts_[k];
    }
    state_.alpha1 = weights_.initial_alpha1();
    state_.log_w = weights_.mean_log_weights(counts_, state_.alpha1);
  }

  /// One full sweep: z, w, mu, sigma2, alpha1.
  void gibbs_step(RngStream& rng, bool after_burn) {
    const int K = weights_.K();
    const int n = static_cast<int>(y_.size());
    auto& s = state_;

    // (a) allocations
    std::vector<double> base(static_cast<std::size_t>(K));
    std::vector<double> inv(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      inv[k] = 1.0 / s.sigma_sq[k];
      base[k] = s.log_w[k] - 0.5 * std::log(2.0 * std::numbers::pi * s.sigma_sq[k]);
    }
    std::vector<double> lp(static_cast<std::size_t>(K));
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < K; ++k) {
        const double r = y_[i] - s.mu[k];
        lp[k] = base[k] - 0.5 * r * r * inv[k];
      }
      s.z[i] = static_cast<int>(sample_categorical_log(rng, lp));
    }
    counts_ = count_labels();

    // (b) weights
    s.log_w = weights_.sample_weights(rng, counts_, s.alpha1);

    // (c) means, (d) variances
    std::vector<double> sums(static_cast<std::size_t>(K), 0.0);
    for (int i = 0; i < n; ++i) sums[s.z[i]] += y_[i];
    for (int k = 0; k < K; ++k) {
      const double prec = counts_[k] / s.sigma_sq[k] + 1.0 / cfg_.sigma0_sq;
      const double mean = (sums[k] / s.sigma_sq[k] + mu0_ / cfg_.sigma0_sq) / prec;
      s.mu[k] = sample_normal(rng, mean, std::sqrt(1.0 / prec));
    }
    std::vector<double> ss(static_cast<std::size_t>(K), 0.0);
    for (int i = 0; i < n; ++i) {
      const double r = y_[i] - s.mu[s.z[i]];
      ss[s.z[i]] += r * r;
    }
    for (int k = 0; k < K; ++k) {
      double v = sample_inverse_gamma(rng, cfg_.a0 + 0.5 * counts_[k], cfg_.b0 + 0.5 * ss[k]);
      if (!(v >= kVarianceFloor)) {
        v = kVarianceFloor;
        ++variance_floors_;
      }
      s.sigma_sq[k] = v;
    }

    // (e) concentration
    s.alpha1 = weights_.update_alpha1(rng, s.log_w, s.alpha1, after_burn);
  }

  /// Block-swap move; exchanges weights, parameters and members together.
  bool block_swap(RngStream& rng) {
    auto& s = state_;
    const auto pair = weights_.block_swap(rng, s.log_w, s.alpha1);
    if (!pair) return false;
    const auto [j, k] = *pair;
    std::swap(s.mu[j], s.mu[k]);
    std::swap(s.sigma_sq[j], s.sigma_sq[k]);
    for (int& zi : s.z) {
      if (zi == j) {
        zi = k;
      } else if (zi == k) {
        zi = j;
      }
    }
    std::swap(counts_[j], counts_[k]);
    return true;
  }

  std::vector<double> fitted() const {
    std::vector<double> out(y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i) out[i] = state_.mu[state_.z[i]];
    return out;
  }

 private:
  std::vector<int> count_labels() const {
    std::vector<int> c(static_cast<std::size_t>(weights_.K()), 0);
    for (int zi : state_.z) ++c[zi];
    return c;
  }

  std::vector<double> y_;
  UnivariateModelConfig cfg_;
  WeightModel weights_;
  double mu0_ = 0.0;
  UnivariateChainState state_;
  std::vector<int> counts_;
  long variance_floors_ = 0;
};

struct UnivariateFit {
  PosteriorSummary summary;
  std::vector<double> alpha1_trace;  ///< retained draws, chains concatenated
  ChainDiagnostics diagnostics;
  std::optional<CalibrationResult> calibration;
  double lambda = 0.0;  ///< PC decay rate used (0 for other priors)
  double mu0 = 0.0;
};

namespace detail {

struct ChainOutput {
  PosteriorAccumulator acc;
  std::vector<double> alpha1_trace;
  ChainDiagnostics diag;
};

template <class Sampler>
ChainOutput run_one_chain(Sampler& sampler, int n, int K, const RunOptions& opt, bool swap,
                          int adapt_window, RngStream rng) {
  ChainOutput out{PosteriorAccumulator(n, K), {}, {}};
  long window_prop = 0;
  long window_acc = 0;
  for (long s = 1; s <= opt.iters; ++s) {
    const bool after_burn = s > opt.burn;
    const auto before = sampler.weights().stats();
    sampler.gibbs_step(rng, after_burn);
    if (swap) sampler.block_swap(rng);
    if (!after_burn) {
      const auto& now = sampler.weights().stats();
      window_prop += now.alpha1_proposals - before.alpha1_proposals;
      window_acc += now.alpha1_accepts - before.alpha1_accepts;
      if (s % adapt_window == 0) {
        sampler.weights().adapt(window_prop, window_acc);
        window_prop = 0;
        window_acc = 0;
      }
    }
    if (is_retained(s, opt.burn, opt.thin)) {
      const auto f = sampler.fitted();
      out.acc.add_draw(sampler.state().z, f);
      out.alpha1_trace.push_back(sampler.state().alpha1);
      if constexpr (requires { sampler.record_retained(); }) sampler.record_retained();
    }
  }
  out.diag.weights = sampler.weights().stats();
  out.diag.final_mh_step = sampler.weights().mh_step();
  out.diag.retained = out.acc.draws();
  return out;
}

}  // namespace detail

/// Runs opt.chains chains (chain c uses RngStream(seed, 0).substream(c)) and
/// pools their retained draws. lambda calibration, if needed, uses
/// RngStream(seed, 1).
inline UnivariateFit run_chain(std::span<const double> y, const UnivariateModelConfig& cfg,
                               const RunOptions& opt) {
  opt.validate();
  cfg.validate();
  const WeightModel weights = WeightModel::make(cfg.weights, static_cast<int>(y.size()), RngStream(opt.seed, 1));
  const int n = static_cast<int>(y.size());
  const int K = cfg.weights.K;

  std::vector<std::optional<detail::ChainOutput>> outputs(static_cast<std::size_t>(opt.chains));
  std::vector<double> mu0s(static_cast<std::size_t>(opt.chains));
  std::vector<long> floors(static_cast<std::size_t>(opt.chains));
  parallel_for(static_cast<std::size_t>(opt.chains), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t c = begin; c < end; ++c) {
      UnivariateSampler sampler(y, cfg, weights);
      outputs[c] = detail::run_one_chain(sampler, n, K, opt, cfg.block_swap, cfg.adapt_window,
                                         RngStream(opt.seed, 0).substream(c));
      mu0s[c] = sampler.mu0();
      floors[c] = sampler.variance_floors();
    }
  });

  UnivariateFit fit;
  PosteriorAccumulator pooled(n, K);
  for (std::size_t c = 0; c < outputs.size(); ++c) {
    auto& o = *outputs[c];
    o.diag.variance_floors = floors[c];
    pooled.merge(o.acc);
    fit.alpha1_trace.insert(fit.alpha1_trace.end(), o.alpha1_trace.begin(), o.alpha1_trace.end());
    fit.diagnostics.absorb(o.diag);
  }
  if (fit.diagnostics.retained < 50) {
    fit.diagnostics.warnings.push_back("fewer than 50 retained draws");
  }
  if (fit.diagnostics.variance_floors > 0) {
    fit.diagnostics.warnings.push_back("component variances hit the 1e-12 floor");
  }
  fit.summary = pooled.finalize();
  fit.calibration = weights.calibration();
  fit.lambda = weights.pc_spec() ? weights.pc_spec()->lambda : 0.0;
  fit.mu0 = mu0s[0];
  return fit;
}

}  // namespace afmm

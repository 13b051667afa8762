#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "afmm/asym_dirichlet.hpp"
#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/pc_prior.hpp"
#include "afmm/rng.hpp"

namespace afmm {

/// Prior on the mixture weights used by the samplers.
///   Pc       asymmetric Dirichlet, alpha1 ~ PC(lambda) on (0, U], alpha2 fixed
///   Gamma    asymmetric Dirichlet, alpha1 ~ Gamma(a, rate 1/(aU)), alpha2 fixed
///   Fixed    asymmetric Dirichlet with both concentrations fixed
///   SymGamma symmetric Dirichlet(alpha), alpha ~ Gamma(a, rate aK)
enum class WeightPrior { Pc, Gamma, Fixed, SymGamma };

inline std::string to_string(WeightPrior p) {
  switch (p) {
    case WeightPrior::Pc: return "pc";
    case WeightPrior::Gamma: return "gamma";
    case WeightPrior::Fixed: return "fixed";
    case WeightPrior::SymGamma: return "sym-gamma";
  }
  return "?";
}

inline WeightPrior weight_prior_from_string(const std::string& s) {
  if (s == "pc") return WeightPrior::Pc;
  if (s == "gamma") return WeightPrior::Gamma;
  if (s == "fixed") return WeightPrior::Fixed;
  if (s == "sym-gamma") return WeightPrior::SymGamma;
  throw DomainError("unknown weight prior '" + s + "'");
}

struct WeightPriorConfig {
  WeightPrior prior = WeightPrior::Pc;
  int K = 25;
  int U = 2;
  double alpha2 = 1e-5;
  double alpha1_fixed = 0.0;  ///< Fixed prior only; 0 means alpha1 = U
  double gamma_shape = 10.0;  ///< shape a of the Gamma and SymGamma priors
  double tp = 0.1;
  double lambda = 0.0;        ///< PC decay rate; 0 means calibrate from tp
  int calibration_replicates = 20000;
  double calibration_tolerance = 0.02;
  double mh_step = 1.0;       ///< initial alpha1 proposal scale
};

struct WeightUpdateStats {
  long alpha1_proposals = 0;
  long alpha1_accepts = 0;
  long alpha1_proposals_after_burn = 0;
  long alpha1_accepts_after_burn = 0;
  long alpha1_below_floor = 0;  ///< PC proposals landing under the evaluation floor
  long swap_proposals = 0;
  long swap_accepts = 0;
};

/// Weight and concentration updates shared by the univariate and functional
/// samplers: w | z, alpha1 | w, and the block-swap move.
class WeightModel {
 public:
  /// n is the number of observations; it is only used to calibrate lambda.
  static WeightModel make(const WeightPriorConfig& cfg, int n, const RngStream& calibration_rng) {
    WeightModel m;
    m.cfg_ = cfg;
    if (cfg.K < 2) throw DomainError("weight prior: need K >= 2");
    switch (cfg.prior) {
      case WeightPrior::Pc: {
        if (cfg.U < 1 || cfg.U >= cfg.K) throw DomainError("pc weight prior: need 1 <= U < K");
        double lambda = cfg.lambda;
        if (!(lambda > 0.0)) {
          CalibrationRequest req;
          req.U = cfg.U;
          req.tp = cfg.tp;
          req.K = cfg.K;
          req.n = n;
          req.alpha2 = cfg.alpha2;
          req.mc_replicates = cfg.calibration_replicates;
          req.tolerance = cfg.calibration_tolerance;
          m.calibration_ = calibrate_lambda(req, calibration_rng);
          lambda = m.calibration_->lambda_star;
        }
        m.pc_ = PcPriorSpec::make(cfg.U, cfg.K, lambda, cfg.alpha2);
        m.u_eff_ = cfg.U;
        break;
      }
      case WeightPrior::Gamma:
        if (cfg.U < 1 || cfg.U >= cfg.K) throw DomainError("gamma weight prior: need 1 <= U < K");
        m.gamma_ = GammaParams{cfg.gamma_shape, 1.0 / (cfg.gamma_shape * cfg.U)};
        m.gamma_.validate();
        m.u_eff_ = cfg.U;
        break;
      case WeightPrior::Fixed:
        if (cfg.U < 0 || cfg.U > cfg.K) throw DomainError("fixed weight prior: need 0 <= U <= K");
        m.u_eff_ = cfg.U;
        break;
      case WeightPrior::SymGamma:
        m.gamma_ = GammaParams{cfg.gamma_shape, cfg.gamma_shape * cfg.K};
        m.gamma_.validate();
        m.u_eff_ = cfg.K;
        break;
    }
    if (!(cfg.alpha2 > 0.0)) throw DomainError("weight prior: alpha2 must be positive");
    m.step_ = cfg.mh_step;
    return m;
  }

  const WeightPriorConfig& config() const { return cfg_; }
  int K() const { return cfg_.K; }
  /// Size of block 1 as used internally (K for the symmetric prior).
  int block1_size() const { return u_eff_; }
  const std::optional<PcPriorSpec>& pc_spec() const { return pc_; }
  const std::optional<CalibrationResult>& calibration() const { return calibration_; }
  double mh_step() const { return step_; }
  WeightUpdateStats& stats() { return stats_; }
  const WeightUpdateStats& stats() const { return stats_; }

  double initial_alpha1() const {
    switch (cfg_.prior) {
      case WeightPrior::Pc:
      case WeightPrior::Gamma: return 0.5 * cfg_.U;
      case WeightPrior::Fixed: return fixed_alpha1();
      case WeightPrior::SymGamma: return 1.0 / cfg_.K;
    }
    return 1.0;
  }

  AsymDirichletParams params(double alpha1) const {
    return AsymDirichletParams{cfg_.K, u_eff_, alpha1, cfg_.alpha2};
  }

  double shape(int k, double alpha1) const { return k < u_eff_ ? alpha1 : cfg_.alpha2; }

  /// Posterior-mean log-weights given counts; used for initialization.
  std::vector<double> mean_log_weights(std::span<const int> counts, double alpha1) const {
    std::vector<double> out(counts.size());
    double total = 0.0;
    for (int k = 0; k < cfg_.K; ++k) total += counts[k] + shape(k, alpha1);
    for (int k = 0; k < cfg_.K; ++k) out[k] = std::log((counts[k] + shape(k, alpha1)) / total);
    return out;
  }

  /// w | z ~ Dirichlet(shape_k + n_k), in log space.
  std::vector<double> sample_weights(RngStream& rng, std::span<const int> counts, double alpha1) const {
    std::vector<double> shapes(static_cast<std::size_t>(cfg_.K));
    for (int k = 0; k < cfg_.K; ++k) shapes[k] = shape(k, alpha1) + counts[k];
    return sample_dirichlet_log(rng, shapes);
  }

  double log_prior_alpha1(double alpha1) const {
    switch (cfg_.prior) {
      case WeightPrior::Pc: return log_pc_density(alpha1, *pc_);
      case WeightPrior::Gamma:
      case WeightPrior::SymGamma: return gamma_logpdf(alpha1, gamma_);
      case WeightPrior::Fixed: return 0.0;
    }
    return 0.0;
  }

  /// Random-walk Metropolis update of alpha1 | w. The PC prior is updated on
  /// t = ln(alpha1 / (U - alpha1)), the Gamma priors on ln(alpha1).
  double update_alpha1(RngStream& rng, std::span<const double> log_w, double alpha1, bool after_burn) {
    if (cfg_.prior == WeightPrior::Fixed) return alpha1;
    const double step = step_ * sample_std_normal(rng);
    double proposal = 0.0;
    double log_jac_cur = 0.0;
    double log_jac_new = 0.0;
    if (cfg_.prior == WeightPrior::Pc) {
      const double U = cfg_.U;
      const double t = std::log(alpha1) - std::log(U - alpha1);
      const double t_new = t + step;
      proposal = U / (1.0 + std::exp(-t_new));
      if (!(proposal > 0.0) || !(proposal < U)) {
        record(false, after_burn);
        return alpha1;
      }
      log_jac_cur = std::log(alpha1) + std::log(U - alpha1);
      log_jac_new = std::log(proposal) + std::log(U - proposal);
      if (proposal < pc_->alpha1_floor) {
        ++stats_.alpha1_below_floor;
        record(false, after_burn);
        return alpha1;
      }
    } else {
      proposal = alpha1 * std::exp(step);
      if (!(proposal > 0.0) || !std::isfinite(proposal)) {
        record(false, after_burn);
        return alpha1;
      }
      log_jac_cur = std::log(alpha1);
      log_jac_new = std::log(proposal);
    }
    const double cur = asym_dirichlet_alpha1_terms(params(alpha1), log_w) + log_prior_alpha1(alpha1) +
                       log_jac_cur;
    const double next = asym_dirichlet_alpha1_terms(params(proposal), log_w) +
                        log_prior_alpha1(proposal) + log_jac_new;
    const bool accept = std::log(rng.uniform()) < next - cur;
    record(accept, after_burn);
    return accept ? proposal : alpha1;
  }

  /// Proposes exchanging a uniformly chosen block-1 component j with a
  /// block-2 component k (their weights, parameters and members). Returns the
  /// pair when accepted; the caller swaps its own component parameters and
  /// labels, this function swaps the weights.
  std::optional<std::pair<int, int>> block_swap(RngStream& rng, std::vector<double>& log_w, double alpha1) {
    if (u_eff_ < 1 || u_eff_ >= cfg_.K) return std::nullopt;
    const int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(u_eff_)));
    const int k = u_eff_ + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(cfg_.K - u_eff_)));
    ++stats_.swap_proposals;
    const double log_ratio = (alpha1 - cfg_.alpha2) * (log_w[k] - log_w[j]);
    if (!(std::log(rng.uniform()) < log_ratio)) return std::nullopt;
    std::swap(log_w[j], log_w[k]);
    ++stats_.swap_accepts;
    return std::make_pair(j, k);
  }

  /// Burn-in step-size adaptation from the acceptance rate of the last window.
  void adapt(long window_proposals, long window_accepts) {
    if (window_proposals <= 0) return;
    const double rate = static_cast<double>(window_accepts) / window_proposals;
    if (rate < 0.2) step_ *= 0.8;
    if (rate > 0.5) step_ *= 1.25;
  }

 private:
  double fixed_alpha1() const {
    if (cfg_.alpha1_fixed > 0.0) return cfg_.alpha1_fixed;
    return cfg_.U > 0 ? cfg_.U : cfg_.alpha2;
  }

  void record(bool accept, bool after_burn) {
    ++stats_.alpha1_proposals;
    if (accept) ++stats_.alpha1_accepts;
    if (after_burn) {
      ++stats_.alpha1_proposals_after_burn;
      if (accept) ++stats_.alpha1_accepts_after_burn;
    }
  }

  WeightPriorConfig cfg_;
  int u_eff_ = 0;
  std::optional<PcPriorSpec> pc_;
  std::optional<CalibrationResult> calibration_;
  GammaParams gamma_{1.0, 1.0};
  double step_ = 1.0;
  WeightUpdateStats stats_;
};

}  // namespace afmm

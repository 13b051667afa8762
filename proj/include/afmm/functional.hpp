#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "afmm/bspline.hpp"
#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/functional_data.hpp"
#include "afmm/gibbs_univariate.hpp"
#include "afmm/posterior.hpp"
#include "afmm/rng.hpp"
#include "afmm/weights.hpp"

namespace afmm {

/// Which scale carries the exponential smoothness prior.
///   Sd        tau_k ~ Exp(eta)
///   Precision 1/tau_k ~ Exp(eta)
enum class TauPrior { Sd, Precision };

struct FunctionalHyperparams {
  double A = 0.001;   ///< sigma_i ~ U(0, A)
  double A0 = 0.25;   ///< kappa_k ~ U(0, A0)
  double a_tau = 0.01;
  double U_tau = 3.22;
  double beta0_var = 100.0;
  TauPrior tau_prior = TauPrior::Sd;

  double eta_tau() const { return -std::log(a_tau) / U_tau; }

  void validate() const {
    if (!(A > 0.0) || !(A0 > 0.0)) throw DomainError("functional hyperparameters: A, A0 must be positive");
    if (!(a_tau > 0.0 && a_tau < 1.0)) throw DomainError("functional hyperparameters: a_tau must lie in (0, 1)");
    if (!(U_tau > 0.0) || !(beta0_var > 0.0)) throw DomainError("functional hyperparameters: U_tau, beta0_var must be positive");
  }
};

struct FunctionalModelConfig {
  WeightPriorConfig weights;
  FunctionalHyperparams hyper;
  int degree = 3;
  int interior_knots = 7;
  bool block_swap = true;
  int adapt_window = 50;
  int init_clusters = 0;  ///< k-means clusters used to start the chain; 0 means K
  double tau_step = 0.5;  ///< random-walk scale for log tau
};

struct FunctionalChainState {
  Eigen::MatrixXd beta;    ///< n x p
  std::vector<double> beta0;
  std::vector<double> sigma;
  Eigen::MatrixXd theta;   ///< K x p
  std::vector<double> kappa;
  std::vector<double> tau;
  std::vector<int> z;
  std::vector<double> log_w;
  double alpha1 = 1.0;
};

namespace detail {

/// Slice sampler (stepping-in from the whole support) for a log density on (0, upper).
template <class LogF>
double slice_bounded(RngStream& rng, double x, double upper, LogF&& log_f) {
  const double level = log_f(x) - sample_exponential(rng, 1.0);
  double lo = 0.0;
  double hi = upper;
  for (int it = 0; it < 200; ++it) {
    const double cand = lo + (hi - lo) * rng.uniform();
    if (log_f(cand) > level) return cand;
    if (cand < x) {
      lo = cand;
    } else {
      hi = cand;
    }
  }
  return x;
}

/// Precision and linear term of (beta0_i, beta_i) | rest, with design [1, B]:
///   Q = X'X / sigma^2 + diag(1 / beta0_var, I / kappa^2),  rhs = X'y / sigma^2 + (0, theta / kappa^2).
struct GaussianConditional {
  Eigen::MatrixXd precision;
  Eigen::VectorXd rhs;
};

inline GaussianConditional subject_conditional(const Eigen::MatrixXd& XtX, const Eigen::VectorXd& Xty,
                                               double sigma, double kappa, const Eigen::VectorXd& theta,
                                               double beta0_var) {
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double inv_k2 = 1.0 / (kappa * kappa);
  const Eigen::Index p = theta.size();
  GaussianConditional c{XtX * inv_s2, Xty * inv_s2};
  c.precision(0, 0) += 1.0 / beta0_var;
  c.precision.diagonal().tail(p).array() += inv_k2;
  c.rhs.tail(p) += theta * inv_k2;
  return c;
}

/// Q^{-1} rhs + U^{-1} e where Q = U'U; e ~ N(0, I) gives a draw from N(Q^{-1} rhs, Q^{-1}).
inline Eigen::VectorXd gaussian_from_noise(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& rhs,
                                           const Eigen::VectorXd& e) {
  return llt.solve(rhs) + llt.matrixU().solve(e);
}

/// Lloyd's k-means with k-means++ seeding; rows of X are points.
inline std::vector<int> kmeans(const Eigen::MatrixXd& X, int k, RngStream& rng, int iters = 100) {
  const auto n = static_cast<int>(X.rows());
  k = std::max(1, std::min(k, n));
  Eigen::MatrixXd centers(k, X.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  centers.row(0) = X.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (X.row(i) - centers.row(c - 1)).squaredNorm());
      total += d2[i];
    }
    int pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (int i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = X.row(pick);
  }
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums.row(label[i]) += X.row(i);
      ++counts[label[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
  }
  return label;
}

}  // namespace detail

/// One chain of the functional sampler:
///   y_i(t) = beta0_i + B(t) beta_i + e,  e ~ N(0, sigma_i^2),  sigma_i ~ U(0, A)
///   beta_i | z_i = k ~ N(theta_k, kappa_k^2 I),               kappa_k ~ U(0, A0)
///   theta_k ~ N(0, tau_k^2 (S + eps I)^{-1}),  tau_k (or 1/tau_k) ~ Exp(eta_tau)
///   beta0_i ~ N(0, beta0_var), w and alpha1 as in the univariate model.
class FunctionalSampler {
 public:
  FunctionalSampler(const FunctionalData& data, const FunctionalModelConfig& cfg, WeightModel weights,
                    RngStream init_rng)
      : cfg_(cfg), weights_(std::move(weights)), basis_(BsplineBasis::make(cfg.degree, cfg.interior_knots)) {
    cfg_.hyper.validate();
    if (data.curves.empty()) throw DataError("functional sampler: no curves");
    p_ = basis_.p();
    if (p_ < 3) throw DomainError("functional sampler: basis needs at least 3 retained columns");
    S_ = rw2_penalty(p_);
    ridge_ = 1e-6 * S_.trace() / p_;
    prior_prec_ = S_ + ridge_ * Eigen::MatrixXd::Identity(p_, p_);
    for (const auto& c : data.curves) {
      if (c.t.size() != c.y.size()) throw DataError("functional sampler: curve t/y lengths differ");
      Subject s;
      s.X.resize(static_cast<Eigen::Index>(c.t.size()), p_ + 1);
      s.X.col(0).setOnes();
      s.X.rightCols(p_) = basis_.design(c.t);
      s.y = Eigen::Map<const Eigen::VectorXd>(c.y.data(), static_cast<Eigen::Index>(c.y.size()));
      s.XtX = s.X.transpose() * s.X;
      s.Xty = s.X.transpose() * s.y;
      subjects_.push_back(std::move(s));
    }
    initialize(init_rng);
  }

  const FunctionalChainState& state() const { return state_; }
  FunctionalChainState& state() { return state_; }
  const WeightModel& weights() const { return weights_; }
  WeightModel& weights() { return weights_; }
  const BsplineBasis& basis() const { return basis_; }
  const Eigen::MatrixXd& penalty() const { return S_; }
  double ridge() const { return ridge_; }
  int p() const { return p_; }
  int n() const { return static_cast<int>(subjects_.size()); }
  long ridge_retries() const { return ridge_retries_; }
  long tau_accepts() const { return tau_accepts_; }
  long tau_proposals() const { return tau_proposals_; }
  const std::vector<double>& beta0_sum() const { return beta0_sum_; }
  const Eigen::MatrixXd& beta_sum() const { return beta_sum_; }
  long retained() const { return retained_; }

  /// Least-squares start, then k-means on the coefficients. The largest
  /// groups go to block 1.
  void initialize(RngStream& rng) {
    const int K = weights_.K();
    const int n = this->n();
    const auto& h = cfg_.hyper;
    auto& s = state_;
    s.beta.resize(n, p_);
    s.beta0.assign(static_cast<std::size_t>(n), 0.0);
    s.sigma.assign(static_cast<std::size_t>(n), 0.5 * h.A);
    for (int i = 0; i < n; ++i) {
      const auto& sub = subjects_[i];
      Eigen::MatrixXd Q = sub.XtX;
      Q.diagonal().array() += 1e-8 * (1.0 + Q.diagonal().maxCoeff());
      const Eigen::VectorXd b = Q.ldlt().solve(sub.Xty);
      s.beta0[i] = b[0];
      s.beta.row(i) = b.tail(p_).transpose();
      const double m = static_cast<double>(sub.y.size());
      const double rms = std::sqrt((sub.y - sub.X * b).squaredNorm() / m);
      s.sigma[i] = std::clamp(rms, 1e-3 * h.A, 0.99 * h.A);
    }
    const int k0 = cfg_.init_clusters > 0 ? std::min(cfg_.init_clusters, K) : K;
    const auto groups = detail::kmeans(s.beta, k0, rng);
    const int used = *std::max_element(groups.begin(), groups.end()) + 1;
    std::vector<int> size(static_cast<std::size_t>(used), 0);
    for (int g : groups) ++size[g];
    std::vector<int> order(static_cast<std::size_t>(used));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return size[a] > size[b]; });
    std::vector<int> component(static_cast<std::size_t>(used));
    for (int r = 0; r < used; ++r) component[order[r]] = r;
    s.z.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s.z[i] = component[groups[i]];

    s.theta = Eigen::MatrixXd::Zero(K, p_);
    s.kappa.assign(static_cast<std::size_t>(K), 0.5 * h.A0);
    s.tau.assign(static_cast<std::size_t>(K), 1.0);
    counts_ = count_labels();
    for (int i = 0; i < n; ++i) s.theta.row(s.z[i]) += s.beta.row(i);
    for (int k = 0; k < K; ++k) {
      if (counts_[k] > 0) s.theta.row(k) /= counts_[k];
    }
    std::vector<double> spread(static_cast<std::size_t>(K), 0.0);
    for (int i = 0; i < n; ++i) spread[s.z[i]] += (s.beta.row(i) - s.theta.row(s.z[i])).squaredNorm();
    for (int k = 0; k < K; ++k) {
      if (counts_[k] > 1) s.kappa[k] = std::clamp(std::sqrt(spread[k] / (counts_[k] * p_)), 1e-3 * h.A0, 0.99 * h.A0);
    }
    s.alpha1 = weights_.initial_alpha1();
    s.log_w = weights_.mean_log_weights(counts_, s.alpha1);
    beta_sum_ = Eigen::MatrixXd::Zero(n, p_);
    beta0_sum_.assign(static_cast<std::size_t>(n), 0.0);
    retained_ = 0;
  }

  void gibbs_step(RngStream& rng, bool after_burn) {
    const int K = weights_.K();
    const int n = this->n();
    const auto& h = cfg_.hyper;
    auto& s = state_;

    // (a) (beta0_i, beta_i) jointly
    for (int i = 0; i < n; ++i) {
      const auto& sub = subjects_[i];
      const int k = s.z[i];
      const auto cond = detail::subject_conditional(sub.XtX, sub.Xty, s.sigma[i], s.kappa[k],
                                                    s.theta.row(k).transpose(), h.beta0_var);
      const Eigen::VectorXd b = draw_gaussian(rng, cond.precision, cond.rhs);
      s.beta0[i] = b[0];
      s.beta.row(i) = b.tail(p_).transpose();
    }

    // (b) allocations
    std::vector<double> lp(static_cast<std::size_t>(K));
    std::vector<double> base(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) base[k] = s.log_w[k] - p_ * std::log(s.kappa[k]);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < K; ++k) {
        lp[k] = base[k] - 0.5 * (s.beta.row(i) - s.theta.row(k)).squaredNorm() / (s.kappa[k] * s.kappa[k]);
      }
      s.z[i] = static_cast<int>(sample_categorical_log(rng, lp));
    }
    counts_ = count_labels();

    // (c) cluster means
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, p_);
    for (int i = 0; i < n; ++i) sums.row(s.z[i]) += s.beta.row(i);
    for (int k = 0; k < K; ++k) {
      const double inv_k2 = 1.0 / (s.kappa[k] * s.kappa[k]);
      Eigen::MatrixXd Q = prior_prec_ / (s.tau[k] * s.tau[k]);
      Q.diagonal().array() += counts_[k] * inv_k2;
      const Eigen::VectorXd rhs = sums.row(k).transpose() * inv_k2;
      s.theta.row(k) = draw_gaussian(rng, Q, rhs).transpose();
    }

    // (d) smoothness scales
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd th = s.theta.row(k).transpose();
      const double quad = th.dot(prior_prec_ * th);
      auto log_target = [&](double tau) {
        const double lt = std::log(tau);
        double v = -p_ * lt - 0.5 * quad / (tau * tau) + lt;  // + log-Jacobian of the log scale
        if (h.tau_prior == TauPrior::Sd) {
          v += -h.eta_tau() * tau;
        } else {
          v += -h.eta_tau() / tau - 2.0 * lt;
        }
        return v;
      };
      const double cur = s.tau[k];
      const double prop = cur * std::exp(cfg_.tau_step * sample_std_normal(rng));
      ++tau_proposals_;
      if (prop > 0.0 && std::isfinite(prop) && std::log(rng.uniform()) < log_target(prop) - log_target(cur)) {
        s.tau[k] = prop;
        ++tau_accepts_;
      }
    }

    // (e) noise SDs
    for (int i = 0; i < n; ++i) {
      const auto& sub = subjects_[i];
      Eigen::VectorXd b(p_ + 1);
      b[0] = s.beta0[i];
      b.tail(p_) = s.beta.row(i).transpose();
      const double rss = (sub.y - sub.X * b).squaredNorm();
      const double m = static_cast<double>(sub.y.size());
      s.sigma[i] = detail::slice_bounded(rng, s.sigma[i], h.A, [&](double sd) {
        return -m * std::log(sd) - 0.5 * rss / (sd * sd);
      });
    }

    // (f) within-cluster SDs
    std::vector<double> dev(static_cast<std::size_t>(K), 0.0);
    for (int i = 0; i < n; ++i) dev[s.z[i]] += (s.beta.row(i) - s.theta.row(s.z[i])).squaredNorm();
    for (int k = 0; k < K; ++k) {
      if (counts_[k] == 0) {
        s.kappa[k] = sample_uniform(rng, 0.0, h.A0);
        continue;
      }
      const double np = static_cast<double>(counts_[k]) * p_;
      s.kappa[k] = detail::slice_bounded(rng, s.kappa[k], h.A0, [&](double kap) {
        return -np * std::log(kap) - 0.5 * dev[k] / (kap * kap);
      });
    }

    // (g) weights and concentration
    s.log_w = weights_.sample_weights(rng, counts_, s.alpha1);
    s.alpha1 = weights_.update_alpha1(rng, s.log_w, s.alpha1, after_burn);
  }

  bool block_swap(RngStream& rng) {
    auto& s = state_;
    const auto pair = weights_.block_swap(rng, s.log_w, s.alpha1);
    if (!pair) return false;
    const auto [j, k] = *pair;
    s.theta.row(j).swap(s.theta.row(k));
    std::swap(s.kappa[j], s.kappa[k]);
    std::swap(s.tau[j], s.tau[k]);
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

  /// Current fitted values, all curves concatenated.
  std::vector<double> fitted() const {
    std::vector<double> out;
    for (int i = 0; i < n(); ++i) {
      const Eigen::VectorXd f = subjects_[i].X.rightCols(p_) * state_.beta.row(i).transpose();
      for (Eigen::Index r = 0; r < f.size(); ++r) out.push_back(state_.beta0[i] + f[r]);
    }
    return out;
  }

  void record_retained() {
    beta_sum_ += state_.beta;
    for (int i = 0; i < n(); ++i) beta0_sum_[i] += state_.beta0[i];
    ++retained_;
  }

 private:
  struct Subject {
    Eigen::MatrixXd X;  ///< [1, B]
    Eigen::VectorXd y;
    Eigen::MatrixXd XtX;
    Eigen::VectorXd Xty;
  };

  // Draws N(Q^{-1} rhs, Q^{-1}); adds a growing ridge if Q is not positive definite.
  Eigen::VectorXd draw_gaussian(RngStream& rng, Eigen::MatrixXd Q, const Eigen::VectorXd& rhs) {
    double extra = ridge_;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::LLT<Eigen::MatrixXd> llt(Q);
      if (llt.info() == Eigen::Success) {
        Eigen::VectorXd e(rhs.size());
        for (Eigen::Index c = 0; c < e.size(); ++c) e[c] = sample_std_normal(rng);
        return detail::gaussian_from_noise(llt, rhs, e);
      }
      ++ridge_retries_;
      extra *= 10.0;
      Q.diagonal().array() += extra;
    }
    throw NumericalError("functional sampler: posterior precision is not positive definite");
  }

  std::vector<int> count_labels() const {
    std::vector<int> c(static_cast<std::size_t>(weights_.K()), 0);
    for (int zi : state_.z) ++c[zi];
    return c;
  }

  FunctionalModelConfig cfg_;
  WeightModel weights_;
  BsplineBasis basis_;
  int p_ = 0;
  Eigen::MatrixXd S_;
  double ridge_ = 0.0;
  Eigen::MatrixXd prior_prec_;
  std::vector<Subject> subjects_;
  FunctionalChainState state_;
  std::vector<int> counts_;
  long ridge_retries_ = 0;
  long tau_accepts_ = 0;
  long tau_proposals_ = 0;
  Eigen::MatrixXd beta_sum_;
  std::vector<double> beta0_sum_;
  long retained_ = 0;
};

struct FunctionalFit {
  PosteriorSummary summary;
  std::vector<double> alpha1_trace;
  ChainDiagnostics diagnostics;
  std::optional<CalibrationResult> calibration;
  double lambda = 0.0;
  double tau_acceptance = 0.0;
  Eigen::MatrixXd beta_mean;        ///< n x p posterior means
  std::vector<double> beta0_mean;
  std::vector<double> curve_grid;   ///< rescaled [0, 1] grid used for cluster means
  Eigen::MatrixXd cluster_means;    ///< clusters x grid, from the point partition
};

/// Cross-sectional mean of posterior-mean subject curves within each cluster
/// of `partition`, on `grid` (values in [0, 1]).
inline Eigen::MatrixXd cluster_mean_curves(const BsplineBasis& basis, const Eigen::MatrixXd& beta_mean,
                                           std::span<const double> beta0_mean, std::span<const int> partition,
                                           std::span<const double> grid) {
  const int clusters = cluster_count(partition);
  const Eigen::MatrixXd B = basis.design(grid);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(clusters, static_cast<Eigen::Index>(grid.size()));
  std::vector<int> size(static_cast<std::size_t>(clusters), 0);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    const int c = partition[i] - 1;
    const Eigen::VectorXd curve =
        (B * beta_mean.row(static_cast<Eigen::Index>(i)).transpose()).array() + beta0_mean[i];
    out.row(c) += curve.transpose();
    ++size[c];
  }
  for (int c = 0; c < clusters; ++c) out.row(c) /= size[c];
  return out;
}

/// Runs the functional sampler (chains as in run_chain; the k-means start of
/// chain c uses RngStream(seed, 2).substream(c)).
inline FunctionalFit fit_functional(const FunctionalData& data, const FunctionalModelConfig& cfg,
                                    const RunOptions& opt) {
  opt.validate();
  const int n = data.size();
  const int K = cfg.weights.K;
  const WeightModel weights = WeightModel::make(cfg.weights, n, RngStream(opt.seed, 1));

  std::vector<std::optional<detail::ChainOutput>> outputs(static_cast<std::size_t>(opt.chains));
  std::vector<std::optional<FunctionalSampler>> samplers(static_cast<std::size_t>(opt.chains));
  parallel_for(static_cast<std::size_t>(opt.chains), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t c = begin; c < end; ++c) {
      samplers[c].emplace(data, cfg, weights, RngStream(opt.seed, 2).substream(c));
      outputs[c] = detail::run_one_chain(*samplers[c], n, K, opt, cfg.block_swap, cfg.adapt_window,
                                         RngStream(opt.seed, 0).substream(c));
    }
  });

  FunctionalFit fit;
  PosteriorAccumulator pooled(n, K);
  const int p = samplers[0]->p();
  Eigen::MatrixXd beta_sum = Eigen::MatrixXd::Zero(n, p);
  std::vector<double> beta0_sum(static_cast<std::size_t>(n), 0.0);
  long retained = 0;
  long tau_acc = 0;
  long tau_prop = 0;
  for (std::size_t c = 0; c < outputs.size(); ++c) {
    auto& o = *outputs[c];
    const auto& smp = *samplers[c];
    o.diag.ridge_retries = smp.ridge_retries();
    pooled.merge(o.acc);
    fit.alpha1_trace.insert(fit.alpha1_trace.end(), o.alpha1_trace.begin(), o.alpha1_trace.end());
    fit.diagnostics.absorb(o.diag);
    beta_sum += smp.beta_sum();
    for (int i = 0; i < n; ++i) beta0_sum[i] += smp.beta0_sum()[i];
    retained += smp.retained();
    tau_acc += smp.tau_accepts();
    tau_prop += smp.tau_proposals();
  }
  if (fit.diagnostics.retained < 50) fit.diagnostics.warnings.push_back("fewer than 50 retained draws");
  if (fit.diagnostics.ridge_retries > 0) fit.diagnostics.warnings.push_back("posterior precision needed a ridge retry");
  fit.summary = pooled.finalize();
  fit.calibration = weights.calibration();
  fit.lambda = weights.pc_spec() ? weights.pc_spec()->lambda : 0.0;
  fit.tau_acceptance = tau_prop > 0 ? static_cast<double>(tau_acc) / tau_prop : 0.0;
  fit.beta_mean = beta_sum / static_cast<double>(retained);
  fit.beta0_mean.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) fit.beta0_mean[i] = beta0_sum[i] / retained;

  std::set<double> grid;
  for (const auto& c : data.curves) grid.insert(c.t.begin(), c.t.end());
  fit.curve_grid.assign(grid.begin(), grid.end());
  fit.cluster_means = cluster_mean_curves(samplers[0]->basis(), fit.beta_mean, fit.beta0_mean,
                                          fit.summary.point_partition, fit.curve_grid);
  return fit;
}

}  // namespace afmm

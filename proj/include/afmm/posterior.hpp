#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "afmm/error.hpp"
#include "afmm/metrics.hpp"

namespace afmm {

struct PosteriorSummary {
  std::vector<double> kplus_pmf;  ///< kplus_pmf[k - 1] = Pr(K+ = k | y), k = 1..K
  Eigen::MatrixXd coclustering;   ///< n x n, unit diagonal
  std::vector<Partition> partition_draws;
  Partition point_partition;      ///< Binder-loss minimizer among the draws
  std::size_t point_index = 0;
  std::vector<double> fitted_values;
  int draws = 0;

  int kplus_mode() const { return pmf_mode(kplus_pmf); }
};

/// Running sums over retained draws. Only counts and sums are kept, so the
/// summary does not depend on how the labels were numbered in each draw.
class PosteriorAccumulator {
 public:
  PosteriorAccumulator(int n, int K) : n_(n), K_(K), kplus_counts_(static_cast<std::size_t>(K), 0) {
    if (n < 1 || K < 1) throw DomainError("PosteriorAccumulator: n and K must be positive");
    pair_counts_ = Eigen::MatrixXi::Zero(n, n);
  }

  /// z holds component indices (any integer coding); fitted may have any
  /// fixed length.
  void add_draw(std::span<const int> z, std::span<const double> fitted) {
    if (z.size() != static_cast<std::size_t>(n_)) throw DomainError("add_draw: wrong label count");
    if (draws_ == 0) {
      fitted_sum_.assign(fitted.size(), 0.0);
    } else if (fitted.size() != fitted_sum_.size()) {
      throw DomainError("add_draw: fitted length changed between draws");
    }
    Partition p = canonicalize(z);
    const int kplus = cluster_count(p);
    if (kplus > K_) throw DomainError("add_draw: more clusters than components");
    ++kplus_counts_[static_cast<std::size_t>(kplus - 1)];

    std::vector<std::vector<int>> members(static_cast<std::size_t>(kplus));
    for (int i = 0; i < n_; ++i) members[static_cast<std::size_t>(p[i] - 1)].push_back(i);
    for (const auto& m : members) {
      for (int a : m) {
        for (int b : m) ++pair_counts_(a, b);
      }
    }
    for (std::size_t i = 0; i < fitted.size(); ++i) fitted_sum_[i] += fitted[i];
    draws_list_.push_back(std::move(p));
    ++draws_;
  }

  /// Pools the draws of another chain on the same data.
  void merge(const PosteriorAccumulator& other) {
    if (other.n_ != n_ || other.K_ != K_) throw DomainError("merge: incompatible accumulators");
    if (other.draws_ == 0) return;
    if (draws_ == 0) {
      *this = other;
      return;
    }
    if (other.fitted_sum_.size() != fitted_sum_.size()) throw DomainError("merge: fitted length mismatch");
    for (std::size_t k = 0; k < kplus_counts_.size(); ++k) kplus_counts_[k] += other.kplus_counts_[k];
    pair_counts_ += other.pair_counts_;
    for (std::size_t i = 0; i < fitted_sum_.size(); ++i) fitted_sum_[i] += other.fitted_sum_[i];
    draws_list_.insert(draws_list_.end(), other.draws_list_.begin(), other.draws_list_.end());
    draws_ += other.draws_;
  }

  int draws() const { return draws_; }

  PosteriorSummary finalize() const {
    if (draws_ == 0) throw NumericalError("posterior summary requested with no retained draws");
    PosteriorSummary s;
    const double d = draws_;
    s.draws = draws_;
    s.kplus_pmf.resize(kplus_counts_.size());
    for (std::size_t k = 0; k < kplus_counts_.size(); ++k) s.kplus_pmf[k] = kplus_counts_[k] / d;
    s.coclustering = pair_counts_.cast<double>() / d;
    s.fitted_values.resize(fitted_sum_.size());
    for (std::size_t i = 0; i < fitted_sum_.size(); ++i) s.fitted_values[i] = fitted_sum_[i] / d;
    s.partition_draws = draws_list_;
    s.point_index = binder_point_index(s.partition_draws, s.coclustering);
    s.point_partition = s.partition_draws[s.point_index];
    return s;
  }

 private:
  int n_;
  int K_;
  int draws_ = 0;
  std::vector<long long> kplus_counts_;
  Eigen::MatrixXi pair_counts_;
  std::vector<double> fitted_sum_;
  std::vector<Partition> draws_list_;
};

/// Whether sweep s (1-based) is retained.
inline bool is_retained(long s, long burn, long thin) { return s > burn && (s - burn) % thin == 0; }

}  // namespace afmm

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "afmm/error.hpp"

namespace afmm {

/// Cluster labels 1..K+ numbered by order of first appearance.
using Partition = std::vector<int>;

/// Relabels so the first observation is in cluster 1, the next new cluster
/// seen is 2, and so on.
template <class Int>
Partition canonicalize(std::span<const Int> labels) {
  Partition out(labels.size());
  std::unordered_map<long long, int> seen;
  int next = 1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = seen.try_emplace(static_cast<long long>(labels[i]), next);
    if (inserted) ++next;
    out[i] = it->second;
  }
  return out;
}

inline Partition canonicalize(const std::vector<int>& labels) {
  return canonicalize(std::span<const int>(labels));
}

inline int cluster_count(std::span<const int> canonical) {
  return canonical.empty() ? 0 : *std::max_element(canonical.begin(), canonical.end());
}

/// Pr(z_j = z_l) indicator matrix of a partition.
inline Eigen::MatrixXd coclustering_indicator(std::span<const int> labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = 0; l < n; ++l) m(j, l) = labels[j] == labels[l] ? 1.0 : 0.0;
  }
  return m;
}

// pmf[k - 1] = Pr(K+ = k | y).
inline double pwss(std::span<const double> kplus_pmf, int kplus_true) {
  if (kplus_true < 1 || kplus_true > static_cast<int>(kplus_pmf.size())) {
    throw DomainError("pwss: kplus_true outside 1..K");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < kplus_pmf.size(); ++k) {
    const double d = static_cast<double>(k + 1) - kplus_true;
    s += d * d * kplus_pmf[k];
  }
  return s;
}

inline int pmf_mode(std::span<const double> kplus_pmf) {
  return static_cast<int>(std::max_element(kplus_pmf.begin(), kplus_pmf.end()) - kplus_pmf.begin()) + 1;
}

/// Posterior mode of K+ minus the true value.
inline int mode_bias(std::span<const double> kplus_pmf, int kplus_true) {
  return pmf_mode(kplus_pmf) - kplus_true;
}

namespace detail {
inline void check_square(const Eigen::MatrixXd& m, std::size_t n, const char* fn) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != n) {
    throw DomainError(std::string(fn) + ": matrix size does not match partition length");
  }
}
}  // namespace detail

/// Sum over pairs j > l of (I[j~l] - Pr(z_j = z_l | y))^2.
inline double ccprob_error(const Eigen::MatrixXd& coclustering, std::span<const int> truth) {
  detail::check_square(coclustering, truth.size(), "ccprob_error");
  double s = 0.0;
  const auto n = static_cast<Eigen::Index>(truth.size());
  for (Eigen::Index j = 1; j < n; ++j) {
    for (Eigen::Index l = 0; l < j; ++l) {
      const double d = (truth[j] == truth[l] ? 1.0 : 0.0) - coclustering(j, l);
      s += d * d;
    }
  }
  return s;
}

/// Binder loss of a partition against a co-clustering matrix (same form as
/// ccprob_error, with the partition in the role of the truth).
inline double binder_loss(std::span<const int> labels, const Eigen::MatrixXd& coclustering) {
  return ccprob_error(coclustering, labels);
}

/// mse = sum (y_i - yhat_i)^2 / (n (K - U)).
inline double u_adjusted_mse(std::span<const double> y, std::span<const double> y_hat, int K, int U) {
  if (y.size() != y_hat.size() || y.empty()) throw DomainError("u_adjusted_mse: length mismatch");
  if (K <= U) throw DomainError("u_adjusted_mse: need K > U");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
  return s / (static_cast<double>(y.size()) * (K - U));
}

/// Average over units of the population SD of the off-diagonal row entries.
inline double sd_ccp(const Eigen::MatrixXd& coclustering) {
  if (coclustering.rows() != coclustering.cols()) throw DomainError("sd_ccp: matrix not square");
  const Eigen::Index n = coclustering.rows();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mean = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l != i) mean += coclustering(i, l);
    }
    mean /= static_cast<double>(n - 1);
    double var = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l != i) var += (coclustering(i, l) - mean) * (coclustering(i, l) - mean);
    }
    total += std::sqrt(var / static_cast<double>(n - 1));
  }
  return total / static_cast<double>(n);
}

/// Hubert-Arabie adjusted Rand index.
inline double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DomainError("ari: partitions differ in length");
  const auto n = static_cast<double>(a.size());
  auto choose2 = [](double x) { return 0.5 * x * (x - 1.0); };
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, c] : table) index += choose2(c);
  double sum_a = 0.0;
  for (const auto& [key, c] : rows) sum_a += choose2(c);
  double sum_b = 0.0;
  for (const auto& [key, c] : cols) sum_b += choose2(c);
  const double expected = sum_a * sum_b / choose2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both trivial partitions
  return (index - expected) / (max_index - expected);
}

/// Index of the draw minimizing the Binder loss; ties go to the earliest draw.
inline std::size_t binder_point_index(const std::vector<Partition>& draws,
                                      const Eigen::MatrixXd& coclustering) {
  if (draws.empty()) throw DomainError("binder_point_partition: no draws");
  std::size_t best = 0;
  double best_loss = binder_loss(draws[0], coclustering);
  for (std::size_t d = 1; d < draws.size(); ++d) {
    const double loss = binder_loss(draws[d], coclustering);
    if (loss < best_loss) {
      best_loss = loss;
      best = d;
    }
  }
  return best;
}

inline Partition binder_point_partition(const std::vector<Partition>& draws,
                                        const Eigen::MatrixXd& coclustering) {
  return canonicalize(draws[binder_point_index(draws, coclustering)]);
}

/// Metrics available for a fit; fields needing the truth (or y) are left
/// empty when it is not supplied.
struct MetricsReport {
  std::optional<double> pwss;
  std::optional<double> ccprob_error;
  std::optional<int> mode_bias;
  std::optional<double> mse;
  double sd_ccp = 0.0;
  std::optional<double> ari;
  int kplus_mode = 0;
  int point_clusters = 0;
};

}  // namespace afmm

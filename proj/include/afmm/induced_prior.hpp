#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "afmm/asym_dirichlet.hpp"
#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/kplus.hpp"
#include "afmm/parallel.hpp"
#include "afmm/pc_prior.hpp"
#include "afmm/rng.hpp"

namespace afmm {

// Weight-prior families whose implied prior on K+ can be simulated.
namespace family {

/// Asymmetric Dirichlet with fixed (alpha1, alpha2).
struct AsymFixed {
  AsymDirichletParams params;
};

/// Asymmetric Dirichlet with alpha1 ~ PC(lambda) and alpha2 fixed.
struct AsymPc {
  PcPriorSpec spec;
};

/// Symmetric Dirichlet(alpha) on K components.
struct SymStatic {
  int K = 2;
  double alpha = 1.0;
};

/// Symmetric Dirichlet(alpha) with alpha ~ Gamma(shape, rate).
struct SymGamma {
  int K = 2;
  double shape = 10.0;
  double rate = 10.0 * 2;
};

/// Dirichlet process with concentration alpha (Chinese restaurant seating).
struct Dpm {
  double alpha = 1.0;
};

/// Mixture of finite mixtures: K ~ Uniform{1..k_max}, w | K ~ Dirichlet(alpha j_K).
struct MfmmUniformK {
  int k_max = 20;
  double alpha = 1.0;
};

}  // namespace family

using WeightPriorFamily = std::variant<family::AsymFixed, family::AsymPc, family::SymStatic,
                                       family::SymGamma, family::Dpm, family::MfmmUniformK>;

struct InducedPriorResult {
  std::vector<double> pmf;    ///< pmf[k - 1] = Pr(K+ = k)
  std::vector<double> mc_se;  ///< binomial Monte Carlo standard error per bin
  int n = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::string family;

  int mode() const {
    return static_cast<int>(std::max_element(pmf.begin(), pmf.end()) - pmf.begin()) + 1;
  }
  double mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) m += (k + 1.0) * pmf[k];
    return m;
  }
  double prob(int kplus) const {
    return kplus >= 1 && kplus <= static_cast<int>(pmf.size()) ? pmf[kplus - 1] : 0.0;
  }
};

inline std::string family_name(const WeightPriorFamily& f) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, family::AsymFixed>) return "asym";
        if constexpr (std::is_same_v<T, family::AsymPc>) return "asym-pc";
        if constexpr (std::is_same_v<T, family::SymStatic>) return "sym";
        if constexpr (std::is_same_v<T, family::SymGamma>) return "sym-gamma";
        if constexpr (std::is_same_v<T, family::Dpm>) return "dpm";
        return "mfmm-unifK";
      },
      f);
}

namespace detail {

inline int symmetric_kplus(RngStream& rng, int K, double alpha, int n) {
  if (K == 1) return 1;
  const std::vector<double> shapes(static_cast<std::size_t>(K), alpha);
  const auto log_w = sample_dirichlet_log(rng, shapes);
  return simulate_kplus(log_w, n, rng);
}

// Largest K+ the family can produce with n observations.
inline int support_size(const WeightPriorFamily& f, int n) {
  return std::visit(
      [n](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, family::AsymFixed>) return std::min(v.params.K, n);
        else if constexpr (std::is_same_v<T, family::AsymPc>) return std::min(v.spec.K, n);
        else if constexpr (std::is_same_v<T, family::SymStatic>) return std::min(v.K, n);
        else if constexpr (std::is_same_v<T, family::SymGamma>) return std::min(v.K, n);
        else if constexpr (std::is_same_v<T, family::Dpm>) return n;
        else return std::min(v.k_max, n);
      },
      f);
}

inline int draw_kplus(const WeightPriorFamily& f, int n, RngStream& rng) {
  return std::visit(
      [n, &rng](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, family::AsymFixed>) {
          const auto log_w = sample_asym_dirichlet(rng, v.params);
          return simulate_kplus(log_w, n, rng);
        } else if constexpr (std::is_same_v<T, family::AsymPc>) {
          const auto draw = sample_alpha1(rng, v.spec);
          AsymDirichletParams p{v.spec.K, v.spec.U, draw.alpha1, v.spec.alpha2_fixed};
          const auto log_w = sample_asym_dirichlet(rng, p);
          return simulate_kplus(log_w, n, rng);
        } else if constexpr (std::is_same_v<T, family::SymStatic>) {
          return symmetric_kplus(rng, v.K, v.alpha, n);
        } else if constexpr (std::is_same_v<T, family::SymGamma>) {
          const double alpha = sample_gamma(rng, {v.shape, v.rate});
          return symmetric_kplus(rng, v.K, std::max(alpha, 1e-300), n);
        } else if constexpr (std::is_same_v<T, family::Dpm>) {
          int tables = 0;
          for (int i = 0; i < n; ++i) {
            if (rng.uniform() < v.alpha / (v.alpha + i)) ++tables;
          }
          return tables;
        } else {
          const int K = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(v.k_max)));
          return symmetric_kplus(rng, K, v.alpha, n);
        }
      },
      f);
}

inline void validate_family(const WeightPriorFamily& f) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, family::AsymFixed>) {
          v.params.validate();
        } else if constexpr (std::is_same_v<T, family::AsymPc>) {
          if (!v.spec.grid) throw DomainError("AsymPc: PcPriorSpec was not built with make()");
        } else if constexpr (std::is_same_v<T, family::SymStatic>) {
          if (v.K < 1 || !(v.alpha > 0.0)) throw DomainError("SymStatic: need K >= 1, alpha > 0");
        } else if constexpr (std::is_same_v<T, family::SymGamma>) {
          if (v.K < 1) throw DomainError("SymGamma: need K >= 1");
          GammaParams{v.shape, v.rate}.validate();
        } else if constexpr (std::is_same_v<T, family::Dpm>) {
          if (!(v.alpha > 0.0)) throw DomainError("Dpm: alpha must be positive");
        } else {
          if (v.k_max < 1 || !(v.alpha > 0.0)) throw DomainError("MfmmUniformK: need k_max >= 1, alpha > 0");
        }
      },
      f);
}

}  // namespace detail

/// Monte Carlo pmf of K+ (number of occupied components among n allocations)
/// under a weight-prior family. Replicate j draws from RngStream(seed, j), so
/// the result is independent of the thread count.
inline InducedPriorResult induced_kplus_prior(const WeightPriorFamily& family, int n, int replicates,
                                              std::uint64_t seed) {
  if (n < 1) throw DomainError("induced_kplus_prior: n must be positive");
  if (replicates < 1) throw DomainError("induced_kplus_prior: replicates must be positive");
  detail::validate_family(family);
  const int support = detail::support_size(family, n);
  const unsigned threads = default_thread_count();
  std::vector<std::vector<std::uint64_t>> counts(threads,
                                                 std::vector<std::uint64_t>(support, 0));
  parallel_for(
      static_cast<std::size_t>(replicates),
      [&](std::size_t begin, std::size_t end, unsigned w) {
        for (std::size_t j = begin; j < end; ++j) {
          RngStream rng(seed, j);
          const int kplus = detail::draw_kplus(family, n, rng);
          ++counts[w][static_cast<std::size_t>(kplus - 1)];
        }
      },
      threads);

  InducedPriorResult out;
  out.n = n;
  out.replicates = replicates;
  out.seed = seed;
  out.family = family_name(family);
  out.pmf.assign(support, 0.0);
  out.mc_se.assign(support, 0.0);
  for (int k = 0; k < support; ++k) {
    std::uint64_t c = 0;
    for (const auto& row : counts) c += row[static_cast<std::size_t>(k)];
    const double p = static_cast<double>(c) / replicates;
    out.pmf[k] = p;
    out.mc_se[k] = std::sqrt(p * (1.0 - p) / replicates);
  }
  return out;
}

}  // namespace afmm

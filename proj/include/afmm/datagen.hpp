#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "afmm/asym_dirichlet.hpp"
#include "afmm/bspline.hpp"
#include "afmm/distributions.hpp"
#include "afmm/error.hpp"
#include "afmm/functional_data.hpp"
#include "afmm/metrics.hpp"
#include "afmm/rng.hpp"

namespace afmm {

struct UnivariateDataset {
  std::vector<double> y;
  Partition truth;
};

/// Equal-weight mixture with means 3(k-1) and common SD sigma.
struct DataType1Spec {
  int kplus_true = 2;
  int n = 100;
  double sigma = 0.5;
};

/// Draws from the asymmetric-Dirichlet generative model; sigma_k ~ U(0, A).
struct DataType2Spec {
  int U = 5;
  int n = 100;
  int K = 25;
  double alpha1 = 0.0;  ///< 0 means alpha1 = U
  double alpha2 = 1e-3;
  double A = 1.0;
  double mu0 = 0.0;
  double sigma0_sq = 3.0;
};

inline UnivariateDataset gen_type1(const DataType1Spec& spec, RngStream& rng) {
  if (spec.kplus_true < 1 || spec.n < 1 || !(spec.sigma > 0.0)) {
    throw DomainError("gen_type1: need kplus_true >= 1, n >= 1, sigma > 0");
  }
  UnivariateDataset d;
  d.y.resize(static_cast<std::size_t>(spec.n));
  d.truth.resize(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(spec.kplus_true)));
    d.truth[i] = k + 1;
    d.y[i] = sample_normal(rng, 3.0 * k, spec.sigma);
  }
  return d;
}

/// Truth labels are the generating component indices, canonicalized.
inline UnivariateDataset gen_type2(const DataType2Spec& spec, RngStream& rng) {
  if (spec.n < 1 || !(spec.A > 0.0) || !(spec.sigma0_sq > 0.0)) {
    throw DomainError("gen_type2: need n >= 1, A > 0, sigma0_sq > 0");
  }
  const AsymDirichletParams params{spec.K, spec.U, spec.alpha1 > 0.0 ? spec.alpha1 : spec.U, spec.alpha2};
  const auto log_w = sample_asym_dirichlet(rng, params);
  std::vector<double> mu(static_cast<std::size_t>(spec.K));
  std::vector<double> sd(static_cast<std::size_t>(spec.K));
  for (int k = 0; k < spec.K; ++k) {
    mu[k] = sample_normal(rng, spec.mu0, std::sqrt(spec.sigma0_sq));
    sd[k] = sample_uniform(rng, 0.0, spec.A);
  }
  UnivariateDataset d;
  std::vector<int> z(static_cast<std::size_t>(spec.n));
  d.y.resize(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    z[i] = static_cast<int>(sample_categorical_log(rng, log_w));
    d.y[i] = sample_normal(rng, mu[z[i]], sd[z[i]]);
  }
  d.truth = canonicalize(z);
  return d;
}

struct FunctionalSpec {
  std::vector<Eigen::VectorXd> templates;
  int n = 60;
  double kappa = 0.05;
  double sigma = 0.0005;
  double beta0_sd = 0.1;
  std::vector<double> grid;  ///< shared time grid in [0, 1]
  int degree = 3;
  int interior_knots = 7;
};

struct FunctionalDataset {
  FunctionalData data;
  Partition truth;  ///< template index + 1 per subject
  std::vector<Eigen::VectorXd> beta;
  std::vector<double> beta0;
};

inline std::vector<double> even_grid(int m) {
  if (m < 2) throw DomainError("even_grid: need at least two points");
  std::vector<double> g(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) g[i] = static_cast<double>(i) / (m - 1);
  return g;
}

/// Coefficient templates built from smooth shapes evaluated at the Greville
/// abscissae. Up to eight are available.
inline std::vector<Eigen::VectorXd> default_templates(int count, const BsplineBasis& basis) {
  if (count < 1 || count > 8) throw DomainError("default_templates: count must be in 1..8");
  const auto g = basis.greville();
  const double two_pi = 2.0 * std::numbers::pi;
  auto shape = [&](int j, double t) {
    switch (j) {
      case 0: return std::sin(two_pi * t);
      case 1: return -std::sin(two_pi * t);
      case 2: return std::cos(two_pi * t);
      case 3: return -std::cos(two_pi * t);
      case 4: return std::sin(2.0 * two_pi * t);
      case 5: return 2.0 * t - 1.0;
      case 6: return -std::sin(2.0 * two_pi * t);
      default: return 1.0 - 2.0 * t;
    }
  };
  std::vector<Eigen::VectorXd> out;
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
    for (std::size_t c = 0; c < g.size(); ++c) v[static_cast<Eigen::Index>(c)] = shape(j, g[c]);
    out.push_back(v);
  }
  return out;
}

/// Default functional spec: `count` templates, 60 subjects, 50 grid points.
inline FunctionalSpec default_functional_spec(int count) {
  FunctionalSpec spec;
  const auto basis = BsplineBasis::make(spec.degree, spec.interior_knots);
  spec.templates = default_templates(count, basis);
  spec.grid = even_grid(50);
  return spec;
}

/// Subjects pick a template uniformly; beta_i ~ N(template, kappa^2 I),
/// beta0_i ~ N(0, beta0_sd^2), y = beta0_i + B beta_i + N(0, sigma^2).
inline FunctionalDataset gen_functional(const FunctionalSpec& spec, RngStream& rng) {
  if (spec.templates.empty() || spec.n < 1) throw DomainError("gen_functional: need templates and n >= 1");
  if (spec.kappa < 0.0 || spec.sigma < 0.0 || spec.beta0_sd < 0.0) {
    throw DomainError("gen_functional: scales must be nonnegative");
  }
  const auto basis = BsplineBasis::make(spec.degree, spec.interior_knots);
  const Eigen::MatrixXd B = basis.design(spec.grid);
  for (const auto& th : spec.templates) {
    if (th.size() != B.cols()) throw DomainError("gen_functional: template length does not match the basis");
  }
  FunctionalDataset out;
  for (int i = 0; i < spec.n; ++i) {
    const int j = static_cast<int>(rng.uniform_index(spec.templates.size()));
    Eigen::VectorXd beta = spec.templates[static_cast<std::size_t>(j)];
    for (Eigen::Index c = 0; c < beta.size(); ++c) beta[c] += spec.kappa * sample_std_normal(rng);
    const double beta0 = spec.beta0_sd * sample_std_normal(rng);
    const Eigen::VectorXd mean = B * beta;
    Curve curve{i + 1, spec.grid, {}};
    for (Eigen::Index r = 0; r < mean.size(); ++r) {
      curve.y.push_back(beta0 + mean[r] + spec.sigma * sample_std_normal(rng));
    }
    out.data.curves.push_back(std::move(curve));
    out.truth.push_back(j + 1);
    out.beta.push_back(beta);
    out.beta0.push_back(beta0);
  }
  return out;
}

}  // namespace afmm

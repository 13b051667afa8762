#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "afmm/datagen.hpp"
#include "afmm/gibbs_univariate.hpp"
#include "support/mixture_oracle.hpp"
#include "support/stats.hpp"

using namespace afmm;

namespace {

UnivariateSampler make_sampler(const std::vector<double>& y, const UnivariateModelConfig& cfg) {
  return UnivariateSampler(y, cfg, WeightModel::make(cfg.weights, static_cast<int>(y.size()), RngStream(99, 1)));
}

UnivariateModelConfig fixed_config(int K, int U, double alpha1, double alpha2) {
  UnivariateModelConfig cfg;
  cfg.weights.prior = WeightPrior::Fixed;
  cfg.weights.K = K;
  cfg.weights.U = U;
  cfg.weights.alpha1_fixed = alpha1;
  cfg.weights.alpha2 = alpha2;
  cfg.mu0 = 0.0;
  return cfg;
}

UnivariateModelConfig pc_config(int K, int U, double lambda) {
  UnivariateModelConfig cfg;
  cfg.weights.prior = WeightPrior::Pc;
  cfg.weights.K = K;
  cfg.weights.U = U;
  cfg.weights.lambda = lambda;
  return cfg;
}

std::vector<double> kplus_pmf_of_run(const std::vector<double>& y, const UnivariateModelConfig& cfg, long iters,
                                     std::uint64_t seed) {
  RunOptions opt;
  opt.iters = iters;
  opt.burn = iters / 5;
  opt.thin = 1;
  opt.seed = seed;
  return run_chain(y, cfg, opt).summary.kplus_pmf;
}

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

TEST(MixtureOracle, ComponentMarginalMatchesDoubleIntegral) {
  using boost::math::quadrature::gauss_kronrod;
  const std::vector<double> ys{0.3, 1.7};
  const double mu0 = 0.5, s0sq = 4.0, a0 = 3.0, b0 = 2.0;
  // Integrate N(y|mu, s2) N(mu|mu0, s0sq) IG(s2|a0, b0) over mu and log s2.
  const double direct = gauss_kronrod<double, 61>::integrate(
      [&](double ls) {
        const double s2 = std::exp(ls);
        const double inner = gauss_kronrod<double, 61>::integrate(
            [&](double mu) {
              double lp = -0.5 * (mu - mu0) * (mu - mu0) / s0sq - 0.5 * std::log(2.0 * M_PI * s0sq);
              for (double v : ys) lp += -0.5 * (v - mu) * (v - mu) / s2 - 0.5 * std::log(2.0 * M_PI * s2);
              return std::exp(lp);
            },
            -20.0, 20.0, 12, 1e-12);
        const double ig = std::exp(a0 * std::log(b0) - std::lgamma(a0) - (a0 + 1.0) * ls - b0 / s2);
        return inner * ig * s2;
      },
      -25.0, 10.0, 12, 1e-12);
  EXPECT_NEAR(test::log_component_marginal(ys, mu0, s0sq, a0, b0), std::log(direct), 1e-7);
}

TEST(GibbsUnivariate, SingleComponentMatchesSemiConjugatePosterior) {
  RngStream data_rng(11, 0);
  std::vector<double> y(20);
  for (double& v : y) v = sample_normal(data_rng, 1.0, 2.0);
  auto cfg = fixed_config(2, 1, 1.0, 1e-5);
  cfg.block_swap = false;
  const double n = static_cast<double>(y.size());

  // Oracle: p(mu | y) propto N(mu; mu0, s0sq) (b0 + S(mu)/2)^-(a0 + n/2).
  auto log_post = [&](double mu) {
    double S = 0.0;
    for (double v : y) S += (v - mu) * (v - mu);
    return -0.5 * mu * mu / cfg.sigma0_sq - (cfg.a0 + 0.5 * n) * std::log(cfg.b0 + 0.5 * S);
  };
  auto sigma_mean_given_mu = [&](double mu) {
    double S = 0.0;
    for (double v : y) S += (v - mu) * (v - mu);
    return (cfg.b0 + 0.5 * S) / (cfg.a0 + 0.5 * n - 1.0);
  };
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
  const double peak = log_post(ybar);
  auto integrate = [&](auto g) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double mu) { return g(mu) * std::exp(log_post(mu) - peak); }, ybar - 15.0, ybar + 15.0, 12, 1e-13);
  };
  const double Z = integrate([](double) { return 1.0; });
  const double e_mu = integrate([](double mu) { return mu; }) / Z;
  const double e_mu2 = integrate([](double mu) { return mu * mu; }) / Z;
  const double e_s2 = integrate(sigma_mean_given_mu) / Z;

  auto sampler = make_sampler(y, cfg);
  RngStream rng(12, 0);
  for (int s = 0; s < 500; ++s) sampler.gibbs_step(rng, false);
  std::vector<double> mu;
  std::vector<double> mu2;
  std::vector<double> s2;
  long stray = 0;
  for (int s = 0; s < 20000; ++s) {
    sampler.gibbs_step(rng, true);
    for (int z : sampler.state().z) stray += z != 0;
    mu.push_back(sampler.state().mu[0]);
    mu2.push_back(mu.back() * mu.back());
    s2.push_back(sampler.state().sigma_sq[0]);
  }
  EXPECT_EQ(stray, 0);
  EXPECT_NEAR(test::moments(mu).mean, e_mu, 4.0 * test::batch_means_se(mu));
  EXPECT_NEAR(test::moments(mu2).mean, e_mu2, 4.0 * test::batch_means_se(mu2));
  EXPECT_NEAR(test::moments(s2).mean, e_s2, 4.0 * test::batch_means_se(s2));
}

TEST(GibbsUnivariate, TwoDistantPointsSeparate) {
  const std::vector<double> y{-10.0, 10.0};
  const auto cfg = fixed_config(2, 2, 2.0, 1e-5);
  const auto exact = test::allocation_posterior(y, {2.0, 2.0}, 0.0, cfg.sigma0_sq, cfg.a0, cfg.b0);
  const double exact_together = exact[test::allocation_index({0, 0}, 2)] + exact[test::allocation_index({1, 1}, 2)];
  ASSERT_LT(exact_together, 0.05);

  auto sampler = make_sampler(y, cfg);
  RngStream rng(13, 0);
  std::vector<double> together;
  for (int s = 0; s < 40000; ++s) {
    sampler.gibbs_step(rng, true);
    together.push_back(sampler.state().z[0] == sampler.state().z[1] ? 1.0 : 0.0);
  }
  const double freq = test::moments(together).mean;
  EXPECT_LT(freq, 0.05);
  EXPECT_NEAR(freq, exact_together, 4.0 * test::batch_means_se(together) + 1e-3);
}

TEST(GibbsUnivariate, MatchesExactAllocationPosteriorWithSwap) {
  const std::vector<double> y{-1.0, 0.5, 3.0};
  const auto cfg = fixed_config(3, 1, 1.5, 0.3);
  const auto exact = test::allocation_posterior(y, {1.5, 0.3, 0.3}, 0.0, cfg.sigma0_sq, cfg.a0, cfg.b0);
  auto sampler = make_sampler(y, cfg);
  RngStream rng(14, 0);
  std::vector<double> freq(exact.size(), 0.0);
  const int sweeps = 100000;
  for (int s = 0; s < sweeps; ++s) {
    sampler.gibbs_step(rng, true);
    sampler.block_swap(rng);
    freq[test::allocation_index(sampler.state().z, 3)] += 1.0 / sweeps;
  }
  EXPECT_LT(test::total_variation(freq, exact), 0.02);
}

TEST(GibbsUnivariate, ConstantDataGivesOneCluster) {
  const std::vector<double> y(30, 2.0);
  for (int U : {1, 3, 5}) {
    const auto pmf = kplus_pmf_of_run(y, pc_config(25, U, 1.0), 5000, 15);
    EXPECT_EQ(pmf_mode(pmf), 1) << "U=" << U;
  }
}

TEST(GibbsUnivariate, DataTypeOneRecoversTwoClusters) {
  RngStream data_rng(16, 0);
  const auto d = gen_type1({2, 100, 0.5}, data_rng);
  UnivariateModelConfig cfg;
  cfg.weights.K = 25;
  cfg.weights.U = 2;
  cfg.weights.tp = 0.1;
  RunOptions opt;
  opt.iters = 6000;
  opt.burn = 3000;
  opt.thin = 5;
  opt.seed = 17;
  const auto fit = run_chain(d.y, cfg, opt);
  EXPECT_EQ(fit.summary.kplus_mode(), 2);
  ASSERT_TRUE(fit.calibration.has_value());
  EXPECT_GT(ari(fit.summary.point_partition, d.truth), 0.9);
}

TEST(GibbsUnivariate, StateInvariantsHoldAlongChain) {
  RngStream data_rng(18, 0);
  const auto d = gen_type1({3, 60, 0.5}, data_rng);
  auto sampler = make_sampler(d.y, pc_config(10, 3, 1.0));
  RngStream rng(19, 0);
  for (int s = 0; s < 500; ++s) {
    sampler.gibbs_step(rng, s > 100);
    sampler.block_swap(rng);
    const auto& st = sampler.state();
    ASSERT_NEAR(logsumexp(st.log_w), 0.0, 1e-8);
    for (int z : st.z) ASSERT_TRUE(z >= 0 && z < 10);
    ASSERT_GT(st.alpha1, 0.0);
    ASSERT_LE(st.alpha1, 3.0);
    for (double v : st.sigma_sq) ASSERT_GE(v, kVarianceFloor);
  }
}

TEST(GibbsUnivariate, CoclusteringIsSymmetricWithUnitDiagonal) {
  RngStream data_rng(20, 0);
  const auto d = gen_type1({2, 40, 0.5}, data_rng);
  RunOptions opt;
  opt.iters = 2000;
  opt.burn = 500;
  opt.thin = 3;
  opt.seed = 21;
  const auto fit = run_chain(d.y, pc_config(25, 3, 1.0), opt);
  const auto& m = fit.summary.coclustering;
  EXPECT_EQ(m, m.transpose());
  EXPECT_TRUE((m.diagonal().array() == 1.0).all());
  EXPECT_GE(m.minCoeff(), 0.0);
  EXPECT_LE(m.maxCoeff(), 1.0);
  EXPECT_EQ(fit.summary.draws, 500);
  EXPECT_EQ(static_cast<int>(fit.alpha1_trace.size()), 500);
}

TEST(BlockSwap, SymmetricCaseAlwaysAccepts) {
  auto cfg = fixed_config(4, 2, 0.5, 0.5);
  auto wm = WeightModel::make(cfg.weights, 10, RngStream(1, 1));
  RngStream rng(22, 0);
  for (int t = 0; t < 1000; ++t) {
    auto log_w = sample_dirichlet_log(rng, std::vector<double>(4, 1.0));
    const auto before = log_w;
    const auto pair = wm.block_swap(rng, log_w, 0.5);
    ASSERT_TRUE(pair.has_value());
    EXPECT_LT(pair->first, 2);
    EXPECT_GE(pair->second, 2);
    EXPECT_EQ(log_w[pair->first], before[pair->second]);
    EXPECT_EQ(log_w[pair->second], before[pair->first]);
  }
}

TEST(BlockSwap, AcceptanceMatchesDensityRatio) {
  auto cfg = fixed_config(5, 2, 3.0, 0.2);
  auto wm = WeightModel::make(cfg.weights, 10, RngStream(1, 1));
  const AsymDirichletParams p{5, 2, 3.0, 0.2};
  RngStream rng(23, 0);
  const auto log_w = sample_asym_dirichlet(rng, {5, 2, 1.0, 1.0});
  // Expected acceptance: average over the 2 x 3 pairs of min(1, p(w')/p(w)).
  double expected = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int k = 2; k < 5; ++k) {
      auto swapped = log_w;
      std::swap(swapped[j], swapped[k]);
      const double r = std::exp(asym_dirichlet_log_density(p, swapped) - asym_dirichlet_log_density(p, log_w));
      expected += std::min(1.0, r) / 6.0;
    }
  }
  const int trials = 100000;
  int accepted = 0;
  for (int t = 0; t < trials; ++t) {
    auto w = log_w;
    accepted += wm.block_swap(rng, w, 3.0).has_value();
  }
  const double rate = static_cast<double>(accepted) / trials;
  EXPECT_NEAR(rate, expected, 4.0 * std::sqrt(expected * (1.0 - expected) / trials));
}

TEST(BlockSwap, AcceptsWithPopulatedBlockTwoComponent) {
  RngStream data_rng(24, 0);
  const auto d = gen_type1({2, 100, 0.5}, data_rng);
  auto sampler = make_sampler(d.y, pc_config(25, 5, 1.0));
  // With U = 5 > K+ = 2 the chain never populates block 2 on its own, so
  // start with the upper group in component 10.
  auto& st = sampler.state();
  std::vector<int> counts(25, 0);
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    st.z[i] = d.y[i] > 1.5 ? 10 : 0;
    ++counts[st.z[i]];
  }
  st.mu[0] = 0.0;
  st.mu[10] = 3.0;
  st.sigma_sq[0] = st.sigma_sq[10] = 0.25;
  st.log_w = sampler.weights().mean_log_weights(counts, st.alpha1);
  RngStream rng(25, 0);
  for (int s = 0; s < 10000; ++s) {
    sampler.block_swap(rng);
    sampler.gibbs_step(rng, s >= 1000);
  }
  EXPECT_EQ(sampler.weights().stats().swap_proposals, 10000);
  EXPECT_GE(sampler.weights().stats().swap_accepts, 1);
}

TEST(BlockSwap, PosteriorUnchangedByMove) {
  RngStream data_rng(26, 0);
  const auto d = gen_type1({2, 50, 0.5}, data_rng);
  auto with = pc_config(25, 3, 1.0);
  auto without = with;
  without.block_swap = false;
  const auto a = kplus_pmf_of_run(d.y, with, 25000, 27);
  const auto b = kplus_pmf_of_run(d.y, without, 25000, 28);
  EXPECT_LT(test::total_variation(a, b), 0.05);
}

TEST(GibbsUnivariate, WithinBlockRelabelingOfInitialState) {
  RngStream data_rng(29, 0);
  const auto d = gen_type1({2, 100, 0.5}, data_rng);
  const auto cfg = pc_config(25, 5, 1.0);
  // K+ mixes slowly here (its posterior spreads over 2..5), so each arm pools
  // 16 independent chains to get the Monte Carlo error well below 0.02.
  auto run = [&](bool permute) {
    std::vector<double> pmf(25, 0.0);
    const int chains = 16;
    const int kept = 25000;
    for (int c = 0; c < chains; ++c) {
      auto sampler = make_sampler(d.y, cfg);
      if (permute) {
        // Rotate the labels of block 1 (components 0..4) in the initial state.
        auto& st = sampler.state();
        for (int& z : st.z) {
          if (z < 5) z = (z + 2) % 5;
        }
        std::rotate(st.mu.begin(), st.mu.begin() + 3, st.mu.begin() + 5);
        std::rotate(st.sigma_sq.begin(), st.sigma_sq.begin() + 3, st.sigma_sq.begin() + 5);
        std::rotate(st.log_w.begin(), st.log_w.begin() + 3, st.log_w.begin() + 5);
      }
      RngStream rng(30, static_cast<std::uint64_t>(c));
      for (int s = 0; s < 1000; ++s) {
        sampler.gibbs_step(rng, false);
        sampler.block_swap(rng);
      }
      for (int s = 0; s < kept; ++s) {
        sampler.gibbs_step(rng, true);
        sampler.block_swap(rng);
        pmf[cluster_count(canonicalize(sampler.state().z)) - 1] += 1.0 / (kept * chains);
      }
    }
    return pmf;
  };
  EXPECT_LT(test::total_variation(run(false), run(true)), 0.02);
}

// Successive-conditional simulation: alternate y ~ p(y | theta) and one
// sweep theta ~ K(theta, . | y). The theta marginal must stay at the prior.
class GewekeTest : public ::testing::TestWithParam<WeightPrior> {};

TEST_P(GewekeTest, ParameterMarginalsStayAtPrior) {
  const int K = 4;
  const int U = 2;
  const int n = 8;
  UnivariateModelConfig cfg;
  cfg.weights.prior = GetParam();
  cfg.weights.K = K;
  cfg.weights.U = U;
  cfg.weights.lambda = 1.0;
  cfg.weights.gamma_shape = 2.0;
  cfg.mu0 = 0.0;
  cfg.sigma0_sq = 100.0;
  const auto wm = WeightModel::make(cfg.weights, n, RngStream(1, 1));
  const double mu_sd = std::sqrt(cfg.sigma0_sq);

  RngStream rng(31, 0);
  UnivariateChainState st;
  if (GetParam() == WeightPrior::Pc) {
    st.alpha1 = sample_alpha1(rng, *wm.pc_spec()).alpha1;
  } else {
    st.alpha1 = sample_gamma(rng, GammaParams{2.0, 1.0 / (2.0 * U)});
  }
  st.log_w = sample_asym_dirichlet(rng, wm.params(st.alpha1));
  st.z.resize(n);
  for (int& z : st.z) z = static_cast<int>(sample_categorical_log(rng, st.log_w));
  for (int k = 0; k < K; ++k) {
    st.mu.push_back(sample_normal(rng, 0.0, mu_sd));
    st.sigma_sq.push_back(sample_inverse_gamma(rng, cfg.a0, cfg.b0));
  }

  std::vector<double> mu1;
  std::vector<double> alpha1;
  WeightModel carried = wm;
  for (int cycle = 0; cycle < 60000; ++cycle) {
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = sample_normal(rng, st.mu[st.z[i]], std::sqrt(st.sigma_sq[st.z[i]]));
    UnivariateSampler sampler(y, cfg, carried);
    sampler.state() = st;
    sampler.gibbs_step(rng, true);
    sampler.block_swap(rng);
    st = sampler.state();
    carried = sampler.weights();
    if (cycle % 30 == 0) {
      mu1.push_back(st.mu[0]);
      alpha1.push_back(st.alpha1);
    }
  }
  const boost::math::normal_distribution<double> mu_prior(0.0, mu_sd);
  EXPECT_LT(test::ks_statistic(mu1, [&](double x) { return boost::math::cdf(mu_prior, x); }), 0.05);
  if (GetParam() == WeightPrior::Pc) {
    const auto& spec = *wm.pc_spec();
    const double lo = std::exp(-spec.lambda * spec.max_distance());
    const double hi = std::exp(-spec.lambda * spec.min_distance());
    auto cdf = [&](double a) { return (std::exp(-spec.lambda * pc_distance(a, spec)) - lo) / (hi - lo); };
    EXPECT_LT(test::ks_statistic(alpha1, cdf), 0.05);
  } else {
    const boost::math::gamma_distribution<double> prior(2.0, 2.0 * U);
    EXPECT_LT(test::ks_statistic(alpha1, [&](double a) { return boost::math::cdf(prior, a); }), 0.05);
  }
}

INSTANTIATE_TEST_SUITE_P(Priors, GewekeTest, ::testing::Values(WeightPrior::Pc, WeightPrior::Gamma));

TEST(RunChain, DeterministicUnderSeed) {
  RngStream data_rng(32, 0);
  const auto d = gen_type1({2, 40, 0.5}, data_rng);
  RunOptions opt;
  opt.iters = 1500;
  opt.burn = 500;
  opt.thin = 2;
  opt.seed = 33;
  opt.chains = 2;
  const auto a = run_chain(d.y, pc_config(25, 3, 1.0), opt);
  const auto b = run_chain(d.y, pc_config(25, 3, 1.0), opt);
  EXPECT_EQ(a.summary.coclustering, b.summary.coclustering);
  EXPECT_EQ(a.alpha1_trace, b.alpha1_trace);
  EXPECT_EQ(a.summary.fitted_values, b.summary.fitted_values);
  EXPECT_EQ(a.summary.draws, 1000);
}

TEST(RunChain, RejectsBadInput) {
  RunOptions opt;
  opt.iters = 100;
  opt.burn = 10;
  const std::vector<double> empty;
  EXPECT_THROW(run_chain(empty, pc_config(25, 3, 1.0), opt), DataError);
  EXPECT_THROW(run_chain(std::vector<double>{1.0, NAN}, pc_config(25, 3, 1.0), opt), DataError);
  auto bad = pc_config(25, 3, 1.0);
  bad.a0 = 1.0;
  EXPECT_THROW(run_chain(std::vector<double>{1.0, 2.0}, bad, opt), DomainError);
  opt.burn = 100;
  EXPECT_THROW(run_chain(std::vector<double>{1.0, 2.0}, pc_config(25, 3, 1.0), opt), DomainError);
}

TEST(RunChain, WarnsOnFewDraws) {
  RunOptions opt;
  opt.iters = 60;
  opt.burn = 30;
  opt.thin = 1;
  const auto fit = run_chain(std::vector<double>{1.0, 2.0, 8.0}, pc_config(5, 2, 1.0), opt);
  ASSERT_FALSE(fit.diagnostics.warnings.empty());
  EXPECT_NE(fit.diagnostics.warnings[0].find("fewer than 50"), std::string::npos);
}

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "afmm/datagen.hpp"
#include "afmm/induced_prior.hpp"

using namespace afmm;

TEST(GenType1, GroupMeansAndEnvelope) {
  RngStream rng(1, 0);
  const auto d = gen_type1({2, 4000, 0.5}, rng);
  ASSERT_EQ(d.y.size(), 4000u);
  double sum[2] = {0.0, 0.0};
  int cnt[2] = {0, 0};
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    ASSERT_GE(d.truth[i], 1);
    ASSERT_LE(d.truth[i], 2);
    sum[d.truth[i] - 1] += d.y[i];
    ++cnt[d.truth[i] - 1];
  }
  for (int k = 0; k < 2; ++k) {
    ASSERT_GT(cnt[k], 0);
    EXPECT_NEAR(sum[k] / cnt[k], 3.0 * k, 4.0 * 0.5 / std::sqrt(cnt[k]));
  }
  // Roughly equal weights.
  EXPECT_NEAR(cnt[0] / 4000.0, 0.5, 4.0 * std::sqrt(0.25 / 4000));
}

TEST(GenType1, SixSigmaEnvelope) {
  RngStream rng(2, 0);
  for (int kp : {2, 5, 10}) {
    const auto d = gen_type1({kp, 1000, 0.5}, rng);
    for (double v : d.y) {
      EXPECT_GE(v, -3.0);
      EXPECT_LE(v, 3.0 * (kp - 1) + 3.0);
    }
  }
}

TEST(GenType1, TruthMatchesReplayedAllocations) {
  RngStream a(3, 0);
  RngStream b(3, 0);
  const auto d = gen_type1({5, 200, 0.5}, a);
  for (int i = 0; i < 200; ++i) {
    const int k = static_cast<int>(b.uniform_index(5));
    EXPECT_EQ(d.truth[i], k + 1);
    EXPECT_EQ(d.y[i], sample_normal(b, 3.0 * k, 0.5));
  }
}

TEST(GenType1, DeterministicAndValidated) {
  RngStream a(4, 0), b(4, 0);
  const auto x = gen_type1({5, 100, 0.5}, a);
  const auto y = gen_type1({5, 100, 0.5}, b);
  EXPECT_EQ(x.y, y.y);
  EXPECT_EQ(x.truth, y.truth);
  EXPECT_THROW(gen_type1({0, 100, 0.5}, a), DomainError);
  EXPECT_THROW(gen_type1({2, 100, 0.0}, a), DomainError);
}

TEST(GenType2, RealizedKplusConcentratesAtU) {
  std::map<int, int> freq;
  const int R = 1000;
  double ratio = 0.0;
  for (int r = 0; r < R; ++r) {
    RngStream rng(5, 0);
    auto sub = rng.substream(static_cast<std::uint64_t>(r));
    DataType2Spec spec;
    spec.U = 5;
    spec.n = 100;
    const auto d = gen_type2(spec, sub);
    const int kp = cluster_count(d.truth);
    ++freq[kp];
    std::vector<int> sizes(static_cast<std::size_t>(kp), 0);
    for (int v : d.truth) ++sizes[v - 1];
    const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
    ratio += static_cast<double>(*mn) / *mx;
  }
  const auto mode = std::max_element(freq.begin(), freq.end(), [](auto& a, auto& b) { return a.second < b.second; });
  EXPECT_EQ(mode->first, 5);
  EXPECT_LT(ratio / R, 0.5);
}

TEST(GenType2, AgreesWithInducedPrior) {
  // Same weight law and n, so realized K+ follows the induced prior.
  const int R = 4000;
  std::vector<double> emp(25, 0.0);
  for (int r = 0; r < R; ++r) {
    auto sub = RngStream(6, 0).substream(static_cast<std::uint64_t>(r));
    DataType2Spec spec;
    spec.U = 2;
    spec.n = 100;
    emp[cluster_count(gen_type2(spec, sub).truth) - 1] += 1.0 / R;
  }
  const auto prior = induced_kplus_prior(family::AsymFixed{{25, 2, 2.0, 1e-3}}, 100, 100000, 7);
  for (std::size_t k = 0; k < prior.pmf.size(); ++k) {
    const double se = std::sqrt(prior.pmf[k] * (1.0 - prior.pmf[k]) / R);
    EXPECT_NEAR(emp[k], prior.pmf[k], 4.0 * se + 4.0 * prior.mc_se[k] + 1e-9) << "K+=" << k + 1;
  }
}

TEST(GenType2, TruthIsCanonicalAndDeterministic) {
  RngStream a(8, 0), b(8, 0);
  DataType2Spec spec;
  const auto x = gen_type2(spec, a);
  const auto y = gen_type2(spec, b);
  EXPECT_EQ(x.y, y.y);
  EXPECT_EQ(x.truth, y.truth);
  EXPECT_EQ(x.truth, canonicalize(x.truth));
  spec.A = 0.0;
  EXPECT_THROW(gen_type2(spec, a), DomainError);
}

TEST(GenFunctional, NoiselessSingletonReproducesTemplate) {
  auto spec = default_functional_spec(3);
  spec.n = 1;
  spec.kappa = 0.0;
  spec.sigma = 0.0;
  spec.beta0_sd = 0.0;
  RngStream rng(9, 0);
  const auto d = gen_functional(spec, rng);
  const auto basis = BsplineBasis::make(spec.degree, spec.interior_knots);
  const Eigen::VectorXd expect = basis.design(spec.grid) * spec.templates[d.truth[0] - 1];
  ASSERT_EQ(d.data.curves[0].y.size(), spec.grid.size());
  for (std::size_t r = 0; r < spec.grid.size(); ++r) EXPECT_NEAR(d.data.curves[0].y[r], expect[r], 1e-14);
  EXPECT_EQ(d.data.curves[0].t, spec.grid);
}

TEST(GenFunctional, TemplatesAreDistinctAndDeterministic) {
  const auto spec = default_functional_spec(6);
  ASSERT_EQ(spec.templates.size(), 6u);
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) EXPECT_GT((spec.templates[a] - spec.templates[b]).norm(), 1.0);
  }
  RngStream r1(10, 0), r2(10, 0);
  const auto x = gen_functional(spec, r1);
  const auto y = gen_functional(spec, r2);
  EXPECT_EQ(x.truth, y.truth);
  EXPECT_EQ(x.data.curves[5].y, y.data.curves[5].y);
  EXPECT_THROW(default_functional_spec(9), DomainError);
}

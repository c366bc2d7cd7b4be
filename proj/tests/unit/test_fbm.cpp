#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "roughdelay/fbm.hpp"
#include "roughdelay/increment.hpp"

using namespace roughdelay;

namespace {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
Moments product_moment(const FbmSampler& sampler, std::size_t trials, F f) {
  double m = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    const double v = f(sampler.sample(k));
    m += v;
    m2 += v * v;
  }
  const double n = static_cast<double>(trials);
  m /= n;
  return {m, std::sqrt(std::max(m2 / n - m * m, 0.0) / n)};
}

}  // namespace

TEST(Covariance, ClosedForms) {
  EXPECT_NEAR(fbm_covariance(0.5, 0.3, 0.7), 0.3, 1e-15);
  for (double h : {0.35, 0.5, 0.8}) EXPECT_NEAR(fbm_covariance(h, 1.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(fbm_covariance(0.4, -0.5, 0.5), std::pow(0.5, 0.8) - 0.5, 1e-15);
  EXPECT_NEAR(fbm_covariance(0.5, -0.5, 0.5), 0.0, 1e-15);
}

TEST(FbmSpec, RejectsHurstOutsideRange) {
  const Grid g(1.0 / 16, 0, 16);
  EXPECT_THROW(FbmSampler(FbmSpec{1.0 / 3.0, 1, g, 0, FbmMethod::cholesky}), DomainError);
  EXPECT_THROW(FbmSampler(FbmSpec{1.0, 1, g, 0, FbmMethod::cholesky}), DomainError);
  EXPECT_THROW(FbmSampler(FbmSpec{0.5, 0, g, 0, FbmMethod::cholesky}), DomainError);
  EXPECT_THROW(parse_fbm_method("spectral"), DomainError);
  EXPECT_EQ(parse_fbm_method("circulant"), FbmMethod::circulant);
}

TEST(FbmSampler, CholeskyFactorReproducesCovariance) {
  for (double h : {0.35, 0.45, 0.5, 0.75}) {
    const FbmSampler s(FbmSpec{h, 1, Grid::uniform(1.0 / 128, 1.0, 0.25), 3, FbmMethod::cholesky});
    EXPECT_LE(s.factor_residual(), 1e-9) << h;
    EXPECT_LE(s.anchored_covariance_residual(), 1e-9) << h;
    EXPECT_FALSE(s.jitter_applied());
  }
}

TEST(FbmSampler, AnchoredAtZeroAndDeterministic) {
  for (auto method : {FbmMethod::cholesky, FbmMethod::circulant}) {
    const FbmSpec spec{0.4, 3, Grid::uniform(1.0 / 64, 1.0, 0.5), 77, method};
    const FbmSampler s(spec);
    const GridPath a = s.sample(5);
    EXPECT_EQ(a.first(), 0);
    EXPECT_EQ(a.last(), spec.grid.last());
    for (Index c = 0; c < 3; ++c) EXPECT_EQ(a.column(spec.grid.origin())(c), 0.0);
    const GridPath b = FbmSampler(spec).sample(5);
    EXPECT_EQ((a.data() - b.data()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT((a.data() - s.sample(6).data()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT((a.data().row(0) - a.data().row(1)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(FbmSampler, BrownianVarianceAtOne) {
  const Grid g = Grid::uniform(1.0 / 64, 1.0);
  const FbmSampler s(FbmSpec{0.5, 1, g, 11, FbmMethod::cholesky});
  const Index one = g.index_of(1.0);
  const auto r = product_moment(s, 4096, [one](const GridPath& p) { return p.column(one)(0) * p.column(one)(0); });
  EXPECT_NEAR(r.mean, 1.0, 4.0 / std::sqrt(4096.0));
}

TEST(FbmSampler, MonteCarloCovarianceMatchesFormula) {
  const Grid g = Grid::uniform(1.0 / 64, 1.0, 0.25);
  for (auto method : {FbmMethod::cholesky, FbmMethod::circulant}) {
    const FbmSampler s(FbmSpec{0.4, 1, g, 2024, method});
    for (auto [ts, tt] : {std::pair{0.25, 0.75}, std::pair{-0.25, 0.5}, std::pair{-0.125, -0.25}}) {
      const Index i = g.index_of(ts), j = g.index_of(tt);
      const auto r = product_moment(s, 4096, [i, j](const GridPath& p) { return p.column(i)(0) * p.column(j)(0); });
      EXPECT_LE(std::abs(r.mean - fbm_covariance(0.4, ts, tt)), 3.0 * r.se) << to_string(method) << " " << ts << "," << tt;
    }
  }
}

TEST(FbmSampler, CirculantAgreesWithCholeskyInDistribution) {
  const Grid g = Grid::uniform(1.0 / 32, 1.0, 0.25);
  const FbmSampler chol(FbmSpec{0.7, 1, g, 1, FbmMethod::cholesky});
  const FbmSampler circ(FbmSpec{0.7, 1, g, 2, FbmMethod::circulant});
  for (Index j = 0; j <= g.last(); j += 5) {
    if (j == g.origin()) continue;
    auto sq = [j](const GridPath& p) { return p.column(j)(0) * p.column(j)(0); };
    const auto a = product_moment(chol, 2048, sq);
    const auto b = product_moment(circ, 2048, sq);
    EXPECT_LE(std::abs(a.mean - b.mean), 4.0 * std::hypot(a.se, b.se)) << j;
  }
}

TEST(Rescale, IdentityHasZeroDiscrepancy) {
  const FbmSampler s(FbmSpec{0.45, 1, Grid::uniform(1.0 / 32, 1.0), 4, FbmMethod::cholesky});
  std::vector<GridPath> e;
  for (std::uint64_t k = 0; k < 300; ++k) e.push_back(s.sample(k));
  EXPECT_EQ(rescale_check(e, e, 1.0, 0.45).max_discrepancy, 0.0);
  EXPECT_THROW(rescale_check(e, e, 3.0, 0.45), DomainError);
  EXPECT_THROW(rescale_check({}, e, 1.0, 0.45), DomainError);
}

TEST(Rescale, SelfSimilarity) {
  for (auto [h, c] : {std::pair{0.5, 4.0}, std::pair{0.45, 2.0}}) {
    const Grid g = Grid::uniform(1.0 / 64, 1.0);
    const FbmSampler a(FbmSpec{h, 1, g, 100, FbmMethod::cholesky});
    const FbmSampler b(FbmSpec{h, 1, g, 200, FbmMethod::cholesky});
    std::vector<GridPath> ea, eb;
    for (std::uint64_t k = 0; k < 2048; ++k) {
      ea.push_back(a.sample(k));
      eb.push_back(b.sample(k));
    }
    const auto rep = rescale_check(ea, eb, c, h);
    EXPECT_FALSE(rep.times.empty());
    EXPECT_LT(rep.max_discrepancy, 4.0) << h;
    EXPECT_LT(rescale_check(eb, ea, 1.0 / c, h).max_discrepancy, 4.0) << h;
  }
}

TEST(Rescale, WrongExponentIsDetected) {
  const Grid g = Grid::uniform(1.0 / 64, 1.0);
  const FbmSampler a(FbmSpec{0.45, 1, g, 100, FbmMethod::cholesky});
  const FbmSampler b(FbmSpec{0.45, 1, g, 200, FbmMethod::cholesky});
  std::vector<GridPath> ea, eb;
  for (std::uint64_t k = 0; k < 2048; ++k) {
    ea.push_back(a.sample(k));
    eb.push_back(b.sample(k));
  }
  EXPECT_GT(rescale_check(ea, eb, 4.0, 0.7).max_discrepancy, 4.0);
}

TEST(FbmSampler, HolderScreenAcrossSeeds) {
  const double h = 0.4;
  const Grid g = Grid::uniform(1.0 / 128, 1.0);
  std::vector<double> values;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const GridPath b = sample_fbm(FbmSpec{h, 1, g, seed, FbmMethod::circulant});
    values.push_back(path_holder(b, h - 0.05));
    ASSERT_TRUE(std::isfinite(values.back()));
  }
  std::vector<double> sorted = values;
  std::nth_element(sorted.begin(), sorted.begin() + 32, sorted.end());
  const double median = sorted[32];
  for (double v : values) EXPECT_LE(v, 10.0 * median);
}

#include <gtest/gtest.h>

#include <cmath>

#include "roughdelay/fbm.hpp"
#include "roughdelay/increment.hpp"

using namespace roughdelay;

namespace {

Grid unit_grid(Index cells) { return Grid(1.0 / static_cast<double>(cells), 0, cells); }

GridPath random_path(const Grid& grid, Index rows, Index cols, std::uint64_t seed) {
  const UniformStream u(seed, 3);
  Matrix data(rows * cols, grid.n_points());
  for (Index e = 0; e < data.size(); ++e) data.data()[e] = 4.0 * u(static_cast<std::uint64_t>(e)) - 2.0;
  return GridPath(grid, 0, rows, cols, data);
}

Increment2 pair_rule(const Grid& grid, double (*f)(double, double)) {
  return Increment2(grid, 0, grid.last(), 1, 1, [grid, f](const Increment2::Times& st) -> Matrix {
    return Matrix::Constant(1, 1, f(grid.time(st[0]), grid.time(st[1])));
  });
}

}  // namespace

TEST(Rational, ParsesFractionsIntegersAndDecimals) {
  auto r = parse_rational("1/256");
  EXPECT_EQ(r.num, 1);
  EXPECT_EQ(r.den, 256);
  r = parse_rational("6/8");
  EXPECT_EQ(r.num, 3);
  EXPECT_EQ(r.den, 4);
  EXPECT_DOUBLE_EQ(parse_rational("0.25").value(), 0.25);
  EXPECT_DOUBLE_EQ(parse_rational("3").value(), 3.0);
  EXPECT_THROW(parse_rational("1/0"), DomainError);
  EXPECT_THROW(parse_rational("abc"), DomainError);
}

TEST(Grid, IndexTimeRoundTripAndAlignment) {
  const Grid g = Grid::uniform(1.0 / 8.0, 1.0, 0.25);
  EXPECT_EQ(g.n_points(), 11);
  EXPECT_EQ(g.origin(), 2);
  EXPECT_DOUBLE_EQ(g.t_min(), -0.25);
  EXPECT_DOUBLE_EQ(g.time(g.index_of(0.625)), 0.625);
  EXPECT_THROW(g.index_of(0.1), DomainError);
  EXPECT_THROW(g.index_of(1.5), DomainError);
  EXPECT_THROW(Grid::uniform(0.125, 1.0, 0.3), DomainError);
  EXPECT_THROW(Grid(0.0, 0, 4), DomainError);
}

TEST(GridPath, RejectsNonFiniteValues) {
  Matrix m = Matrix::Zero(1, 3);
  m(0, 1) = std::nan("");
  EXPECT_THROW(GridPath(unit_grid(2), 0, 1, 1, m), DomainError);
}

TEST(Delta, ConstantPathHasZeroIncrements) {
  const Grid g = unit_grid(4);
  const auto c = GridPath::from_function(g, 0, g.last(), 2, 1, [](double) { return Matrix::Constant(2, 1, 3.0); });
  const auto d = delta1(c);
  for (Index s = 0; s <= 4; ++s)
    for (Index t = s; t <= 4; ++t) EXPECT_EQ(max_abs(d(s, t)), 0.0);
}

TEST(Delta, LinearPath) {
  const Grid g = unit_grid(2);
  const auto p = GridPath::from_function(g, 0, 2, 1, 1, [](double t) { return Matrix::Constant(1, 1, t); });
  EXPECT_DOUBLE_EQ(delta1(p)(0, 2)(0, 0), 1.0);
}

TEST(Delta, CoboundaryOfCoboundaryVanishes) {
  const Grid g = unit_grid(40);
  const GridPath p = random_path(g, 2, 3, 11);
  const auto dd = delta2(delta1(p));
  double worst = 0.0;
  for (Index s = 0; s <= 40; ++s)
    for (Index u = s; u <= 40; ++u)
      for (Index t = u; t <= 40; ++t) worst = std::max(worst, max_abs(dd(s, u, t)));
  EXPECT_LE(worst, 1e-12 * (1.0 + p.sup_norm()));
}

TEST(Delta, SquareIncrement) {
  const Grid g = unit_grid(16);
  const auto h = pair_rule(g, [](double s, double t) { return (t - s) * (t - s); });
  const auto dh = delta2(h);
  for (Index s = 0; s <= 16; s += 3)
    for (Index u = s; u <= 16; u += 2)
      for (Index t = u; t <= 16; ++t) {
        const double expect = 2.0 * (g.time(u) - g.time(s)) * (g.time(t) - g.time(u));
        EXPECT_NEAR(dh(s, u, t)(0, 0), expect, 1e-14);
      }
}

TEST(Delta, PathTimesIncrement) {
  const Grid g = unit_grid(20);
  const GridPath f = random_path(g, 1, 1, 5);
  const GridPath x = random_path(g, 1, 1, 6);
  const auto h = product(as_increment(f), delta1(x));
  const auto dh = delta2(h);
  for (Index s = 0; s <= 20; s += 4)
    for (Index u = s; u <= 20; u += 3)
      for (Index t = u; t <= 20; t += 2) {
        const double expect = -(f.column(u)(0) - f.column(s)(0)) * (x.column(t)(0) - x.column(u)(0));
        EXPECT_NEAR(dh(s, u, t)(0, 0), expect, 1e-13);
      }
}

TEST(Delta, HigherArityIsAlsoNilpotent) {
  const Grid g = unit_grid(12);
  const GridPath p = random_path(g, 1, 1, 8);
  const auto h = product(delta1(p), delta1(p));
  const auto ddh = delta(delta(h));
  EXPECT_NEAR(ddh(1, 3, 4, 9, 11)(0, 0), 0.0, 1e-13);
  EXPECT_NEAR(ddh(0, 0, 5, 12, 12)(0, 0), 0.0, 1e-13);
}

TEST(Holder, ClosedFormSeminorms) {
  const Grid g = unit_grid(32);
  EXPECT_NEAR(holder_seminorm2(pair_rule(g, [](double s, double t) { return t - s; }), 1.0), 1.0, 1e-12);
  EXPECT_NEAR(holder_seminorm2(pair_rule(g, [](double s, double t) { return std::sqrt(t - s); }), 0.5), 1.0, 1e-12);
  EXPECT_THROW(holder_seminorm2(pair_rule(g, [](double s, double t) { return t - s; }), 0.0), DomainError);
}

TEST(Holder, HomogeneityAndEmbedding) {
  const Grid g = unit_grid(64);
  const GridPath p = random_path(g, 2, 1, 21);
  const auto h = delta1(p);
  const double base = holder_seminorm2(h, 0.7);
  EXPECT_NEAR(holder_seminorm2(-3.5 * h, 0.7), 3.5 * base, 1e-12 * base);
  const double coarse = holder_seminorm2(h, 0.4);
  EXPECT_LE(coarse, base * std::pow(g.t_max() - g.t_min(), 0.3) * (1.0 + 1e-12));
}

TEST(Holder, FbmSeminormMatchesBruteForce) {
  const Grid g = unit_grid(256);
  const double hurst = 0.45;
  const GridPath b = sample_fbm(FbmSpec{hurst, 1, g, 17, FbmMethod::cholesky});
  const double mu = 0.9 * hurst;
  double brute = 0.0;
  for (Index s = 0; s <= 256; ++s)
    for (Index t = s + 1; t <= 256; ++t)
      brute = std::max(brute, std::abs(b.column(t)(0) - b.column(s)(0)) / std::pow((t - s) / 256.0, mu));
  const auto scan = holder_scan2(delta1(b), mu);
  EXPECT_TRUE(scan.exact);
  EXPECT_TRUE(std::isfinite(scan.value));
  EXPECT_NEAR(scan.value, brute, 1e-12 * brute);
}

TEST(Holder, SubsampledScanIsFlaggedApproximate) {
  const Grid g = unit_grid(300);
  const GridPath p = random_path(g, 1, 1, 2);
  ScanPolicy small;
  small.pair_cap = 1000;
  const auto approx = path_holder_scan(p, 0.5, 0, 300, small);
  const auto exact = path_holder_scan(p, 0.5, 0, 300);
  EXPECT_FALSE(approx.exact);
  EXPECT_TRUE(exact.exact);
  EXPECT_LE(approx.value, exact.value);
  EXPECT_LT(approx.evaluated, exact.evaluated);
}

TEST(SplitNorm, ClosedForms) {
  const Grid g = unit_grid(24);
  const Increment3 zero(g, 0, 24, 1, 1, [](const Increment3::Times&) -> Matrix { return Matrix::Zero(1, 1); });
  EXPECT_EQ(holder_norm3_split(zero, 1.0, 1.0), 0.0);
  const Increment3 prod(g, 0, 24, 1, 1, [g](const Increment3::Times& t) -> Matrix {
    return Matrix::Constant(1, 1, (g.time(t[1]) - g.time(t[0])) * (g.time(t[2]) - g.time(t[1])));
  });
  EXPECT_NEAR(holder_norm3_split(prod, 1.0, 1.0), 1.0, 1e-12);
  const auto sq = pair_rule(g, [](double s, double t) { return (t - s) * (t - s); });
  EXPECT_NEAR(holder_norm3_split(delta2(sq), 1.0, 1.0), 2.0, 1e-12);
}

TEST(Product, IdentityPathIsNeutral) {
  const Grid g = unit_grid(10);
  const auto id = GridPath::from_function(g, 0, 10, 2, 2, [](double) { return Matrix(Matrix::Identity(2, 2)); });
  const GridPath p = random_path(g, 2, 1, 3);
  const auto h = delta1(p);
  const auto gh = product(as_increment(id), h);
  for (Index s = 0; s <= 10; ++s)
    for (Index t = s; t <= 10; ++t) EXPECT_EQ(max_abs(gh(s, t) - h(s, t)), 0.0);
}

TEST(Product, ShapeMismatchThrows) {
  const Grid g = unit_grid(4);
  EXPECT_THROW(product(delta1(random_path(g, 2, 3, 1)), delta1(random_path(g, 2, 1, 2))), DomainError);
}

TEST(Product, FourLeibnizRules) {
  const Grid g = unit_grid(64);
  const auto gp = as_increment(random_path(g, 2, 3, 31));
  const auto hp = as_increment(random_path(g, 3, 2, 32));
  const auto g2 = product(delta1(random_path(g, 2, 3, 33)), as_increment(random_path(g, 3, 3, 34)));
  const auto h2 = product(as_increment(random_path(g, 3, 3, 35)), delta1(random_path(g, 3, 2, 36)));

  const auto lhs1 = delta(product(gp, hp));
  const auto rhs1 = product(delta(gp), hp) + product(gp, delta(hp));
  const auto lhs2 = delta(product(gp, h2));
  const auto rhs2 = -product(delta(gp), h2) + product(gp, delta(h2));
  const auto lhs3 = delta(product(g2, hp));
  const auto rhs3 = product(delta(g2), hp) + product(g2, delta(hp));
  const auto lhs4 = delta(product(g2, h2));
  const auto rhs4 = -product(delta(g2), h2) + product(g2, delta(h2));

  const UniformStream u(77, 1);
  auto close = [](const Matrix& a, const Matrix& b) { return max_abs(a - b) <= 1e-10 * (1.0 + max_abs(a)); };
  for (std::uint64_t j = 0; j < 400; j += 4) {
    std::array<Index, 4> t{};
    for (std::uint64_t i = 0; i < 4; ++i) t[i] = static_cast<Index>(u.integer(j + i, 0, 64));
    std::sort(t.begin(), t.end());
    EXPECT_TRUE(close(lhs1(t[0], t[1]), rhs1(t[0], t[1])));
    EXPECT_TRUE(close(lhs2(t[0], t[1], t[2]), rhs2(t[0], t[1], t[2])));
    EXPECT_TRUE(close(lhs3(t[0], t[1], t[2]), rhs3(t[0], t[1], t[2])));
    EXPECT_TRUE(close(lhs4(t), rhs4(t)));
  }
}

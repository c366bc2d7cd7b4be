#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "roughdelay/controlled.hpp"
#include "roughdelay/fbm.hpp"
#include "roughdelay/increment.hpp"
#include "roughdelay/levy.hpp"
#include "roughdelay/sewing.hpp"
#include "roughdelay/sigma.hpp"
#include "roughdelay/smooth.hpp"

namespace roughdelay {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double value = 0.0;
  double limit = 0.0;
};

struct VerifyConfig {
  double hurst = 0.45;
  double mesh = 1.0 / 256.0;
  double horizon = 1.0;
  double max_delay = 0.25;
  std::uint64_t seed = 42;
  std::size_t trials = 1024;
};

inline std::vector<std::string> verify_suites() { return {"chen", "sewing", "covariance", "chainrule", "all"}; }

namespace detail {

inline CheckResult at_most(std::string suite, std::string name, double value, double limit) {
  return {std::move(suite), std::move(name), value <= limit, value, limit};
}

}  // namespace detail

/// Chen relation at every lag and the diagonal identity at lag 0 for a
/// sampled two-dimensional fBm path.
inline std::vector<CheckResult> verify_chen(const VerifyConfig& cfg) {
  const Grid grid = Grid::uniform(cfg.mesh, cfg.horizon, cfg.max_delay);
  const FbmSpec spec{cfg.hurst, 2, grid, cfg.seed, FbmMethod::cholesky};
  const GridPath x = sample_fbm(spec);
  const Index max_lag = grid.origin();
  const DelayedArea area(x, {0, std::max<Index>(1, max_lag / 2), max_lag});
  const UniformStream u(cfg.seed, 0xc4e2u);
  std::uint64_t j = 0;
  double chen = 0.0, diag = 0.0;
  for (std::size_t slot = 0; slot < area.slots(); ++slot) {
    const Index lag = area.lags()[slot];
    for (int rep = 0; rep < 1000; ++rep) {
      std::array<Index, 3> t{};
      for (auto& v : t) v = static_cast<Index>(u.integer(j++, area.lo(slot), area.hi()));
      std::sort(t.begin(), t.end());
      const Vector dv = x.increment(t[0] - lag, t[1] - lag);
      const Vector dx = x.increment(t[1], t[2]);
      const Matrix res = area.over(slot, t[0], t[2]) - area.over(slot, t[0], t[1]) - area.over(slot, t[1], t[2]) -
                         dv * dx.transpose();
      chen = std::max(chen, max_abs(res) / (1.0 + max_abs(dv) * max_abs(dx)));
    }
  }
  for (int rep = 0; rep < 1000; ++rep) {
    Index s = static_cast<Index>(u.integer(j++, 0, grid.last()));
    Index t = static_cast<Index>(u.integer(j++, 0, grid.last()));
    if (s > t) std::swap(s, t);
    const Matrix a = area.over(0, s, t);
    const Vector dx = x.increment(s, t);
    double osc = 0.0;
    for (Index k = s; k <= t; ++k) osc = std::max(osc, max_abs(x.column(k) - x.column(s)));
    for (Index c = 0; c < 2; ++c) {
      const double target = 0.5 * dx(c) * dx(c);
      diag = std::max(diag, std::abs(a(c, c) - target) / (std::abs(target) + osc * osc + 1e-300));
    }
  }
  return {detail::at_most("chen", "chen residual (relative)", chen, 1e-12),
          detail::at_most("chen", "diagonal identity at lag 0 (relative)", diag, 1e-12)};
}

/// Coboundary identities and the sewing map on closed-form families.
inline std::vector<CheckResult> verify_sewing(const VerifyConfig& cfg) {
  const Grid grid(1.0 / 128.0, 0, 128);
  const GridPath f = GridPath::from_function(grid, 0, grid.last(), 1, 1,
                                             [](double t) { return Matrix::Constant(1, 1, std::sin(3.0 * t) + t * t); });
  const auto ddf = delta2(delta1(f));
  double dd = 0.0;
  for (Index s = 0; s <= grid.last(); s += 3)
    for (Index u = s; u <= grid.last(); u += 5)
      for (Index t = u; t <= grid.last(); t += 7) dd = std::max(dd, max_abs(ddf(s, u, t)));

  const Increment2 square(grid, 0, grid.last(), 1, 1, [grid](const Increment2::Times& st) -> Matrix {
    const double d = grid.time(st[1]) - grid.time(st[0]);
    return Matrix::Constant(1, 1, d * d);
  });
  const Increment2 lam = lambda_op(delta(square));
  double inv = 0.0;
  const auto check = delta(lam);
  const auto target = delta(square);
  const UniformStream u(cfg.seed, 0x5e3u);
  for (std::uint64_t j = 0; j < 300; j += 3) {
    std::array<Index, 3> t{static_cast<Index>(u.integer(j, 0, 128)), static_cast<Index>(u.integer(j + 1, 0, 128)),
                           static_cast<Index>(u.integer(j + 2, 0, 128))};
    std::sort(t.begin(), t.end());
    inv = std::max(inv, max_abs(check(t[0], t[1], t[2]) - target(t[0], t[1], t[2])));
  }

  const Increment2 left(grid, 0, grid.last(), 1, 1, [grid](const Increment2::Times& st) -> Matrix {
    return Matrix::Constant(1, 1, grid.time(st[0]) * (grid.time(st[1]) - grid.time(st[0])));
  });
  const auto sewn = sew_pair(left, 0, grid.last());
  return {detail::at_most("sewing", "dd g = 0", dd, 1e-12 * (1.0 + f.sup_norm())),
          detail::at_most("sewing", "d Lambda h = h", inv, 1e-8),
          detail::at_most("sewing", "int_0^1 t dt via extrapolated sums", std::abs(sewn.extrapolated(0, 0) - 0.5),
                          1e-10)};
}

/// Cholesky factor residual and the Monte-Carlo covariance at (0.25, 0.75).
inline std::vector<CheckResult> verify_covariance(const VerifyConfig& cfg) {
  const Grid grid = Grid::uniform(cfg.mesh, cfg.horizon, cfg.max_delay);
  const FbmSampler sampler(FbmSpec{cfg.hurst, 1, grid, cfg.seed, FbmMethod::cholesky});
  const Index s = grid.index_of(0.25), t = grid.index_of(0.75);
  double m = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    const auto p = sampler.sample(k);
    const double v = p.column(s)(0) * p.column(t)(0);
    m += v;
    m2 += v * v;
  }
  const double n = static_cast<double>(cfg.trials);
  m /= n;
  const double se = std::sqrt(std::max(m2 / n - m * m, 0.0) / n);
  const double exact = fbm_covariance(cfg.hurst, 0.25, 0.75);
  return {detail::at_most("covariance", "cholesky residual", sampler.factor_residual(), 1e-9),
          detail::at_most("covariance", "anchored covariance residual", sampler.anchored_covariance_residual(), 1e-9),
          detail::at_most("covariance", "Monte-Carlo covariance (standard errors)", std::abs(m - exact) / se, 3.0)};
}

/// Jacobians of every registered model against central differences, and
/// the composition's densities against the chain rule along a smooth path.
inline std::vector<CheckResult> verify_chainrule(const VerifyConfig&) {
  std::vector<CheckResult> out;
  for (const auto& name : sigma_models()) {
    const auto f = make_sigma(name, 2, 1, 2);
    out.push_back(detail::at_most("chainrule", "jacobian of " + name, jacobian_fd_error(f), 1e-6));
  }
  // First-order prediction error of the composition over one cell must be
  // second order in the mesh: halving the mesh divides it by about 4.
  auto prediction_error = [](Index cells) {
    const Grid grid(1.0 / static_cast<double>(cells), cells / 4, cells);
    const GridPath x = GridPath::from_function(grid, 0, grid.last(), 2, 1, [](double t) { return Matrix(sin_cos(t)); });
    const auto z = smooth_ccp(
        x, 0, grid.last(), 2, [](const Vector& v) { return Vector{{std::sin(v(0) + v(1)), v(0) * v(1)}}; },
        [](const Vector& v) {
          Matrix g(2, 2);
          g << std::cos(v(0) + v(1)), std::cos(v(0) + v(1)), v(1), v(0);
          return g;
        });
    const auto sigma = sine_sigma(2, 1, 2);
    const std::vector<Index> lags{0, cells / 4};
    const auto zo = z.restricted(grid.origin(), grid.last());
    const auto m = t_sigma(zo, z, sigma, lags);
    double worst = 0.0;
    for (Index s = m.a(); s < m.b(); ++s) worst = std::max(worst, max_abs(m.remainder(s, s + 1)));
    return worst;
  };
  const double ratio = prediction_error(128) / prediction_error(256);
  out.push_back({"chainrule", "composition density order (error ratio under halving)", ratio > 3.0 && ratio < 5.0,
                 ratio, 4.0});
  return out;
}

/// Runs a named suite; throws DomainError for unknown names.
inline std::vector<CheckResult> run_suite(const std::string& suite, const VerifyConfig& cfg) {
  if (suite == "chen") return verify_chen(cfg);
  if (suite == "sewing") return verify_sewing(cfg);
  if (suite == "covariance") return verify_covariance(cfg);
  if (suite == "chainrule") return verify_chainrule(cfg);
  if (suite == "all") {
    std::vector<CheckResult> out;
    for (const auto& name : {"chen", "sewing", "covariance", "chainrule"}) {
      auto r = run_suite(name, cfg);
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }
  throw DomainError("unknown suite '" + suite + "'");
}

}  // namespace roughdelay

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "roughdelay/controlled.hpp"
#include "roughdelay/integral.hpp"
#include "roughdelay/levy.hpp"
#include "roughdelay/sigma.hpp"

namespace roughdelay {

/// dy_t = sigma(y_t, y_{t - r_1}, ..., y_{t - r_k}) dx_t on [0, T], y = xi on [-r_k, 0].
struct DelayRDEProblem {
  SigmaField sigma;
  std::vector<double> delays;  // r_1 < ... < r_k, may be empty
  GridPath xi;                 // n x 1 on [-r_k, 0]
  DriverBundle driver;
  double horizon = 1.0;
  double kappa = 0.4;

  const Grid& grid() const { return driver.path.grid(); }
  Index n() const { return sigma.n(); }
  Index origin() const { return grid().origin(); }
  Index end() const { return origin() + steps_for(horizon, grid().mesh(), "horizon"); }

  std::vector<Index> lags() const {
    std::vector<Index> out{0};
    for (double r : delays) out.push_back(steps_for(r, grid().mesh(), "delay"));
    return out;
  }

  Index first() const { return origin() - lags().back(); }

  void validate() const {
    if (static_cast<Index>(delays.size()) != sigma.k()) throw DomainError("sigma expects " + std::to_string(sigma.k()) + " delays");
    double prev = 0.0;
    for (double r : delays) {
      if (!(r > prev)) throw DomainError("delays must be positive and strictly increasing");
      prev = r;
    }
    const auto l = lags();
    if (driver.path.rows() != sigma.d()) throw DomainError("driver dimension differs from sigma's");
    if (xi.rows() != sigma.n() || xi.cols() != 1) throw DomainError("initial path has wrong dimension");
    if (!xi.covers(first(), origin())) throw DomainError("initial path must cover [-r_k, 0]");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (!driver.path.covers(first(), end())) throw DomainError("driver does not cover [-r_k, T]");
    for (Index lag : l) {
      if (!driver.areas.slot_of(lag)) throw DomainError("driver has no area for lag " + std::to_string(lag));
    }
    check_kappa(kappa);
  }
};

struct WindowDiagnostics {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double tau = 0.0;
  int iterations = 0;
  int retries = 0;
  double final_ratio = 0.0;
  double max_ratio = 0.0;
  std::vector<double> differences;
};

struct Solution {
  GridPath path;         // y on [-r_k, T]
  ControlledPath state;  // y on [0, T] with density sigma(y, s(y))
  std::vector<WindowDiagnostics> windows;
  CPNorm norms;
};

/// Constants of the contraction lemma for the growth bound c (1 + tau^alpha u^2) <= u.
struct StepPolicy {
  double c = 0.0;
  double alpha = 0.0;
  double tau_raw = 0.0;   // (8 c^2)^{-1/alpha}
  double tau_star = 0.0;  // min(tau_raw, r_1), rounded down to the mesh if one is given
  double radius = 0.0;    // smallest positive root of c tau^alpha u^2 - u + c at tau_star
};

inline double growth_root(double c, double alpha, double tau) {
  const double q = c * std::pow(tau, alpha);
  const double disc = 1.0 - 4.0 * q * c;
  if (disc < 0.0) throw DomainError("growth bound has no fixed radius at this tau");
  return 2.0 * c / (1.0 + std::sqrt(disc));
}

/// mesh <= 0 skips grid rounding.
inline StepPolicy contraction_policy(double c, double alpha, double r1, double mesh = 0.0) {
  if (!(c > 0.0) || !(alpha > 0.0)) throw DomainError("step policy needs c > 0 and alpha > 0");
  StepPolicy p;
  p.c = c;
  p.alpha = alpha;
  p.tau_raw = std::pow(8.0 * c * c, -1.0 / alpha);
  p.tau_star = std::min(p.tau_raw, r1);
  if (mesh > 0.0) {
    p.tau_star = std::floor(p.tau_star / mesh * (1.0 + 1e-12)) * mesh;
    if (p.tau_star < mesh) throw DomainError("grid too coarse for contraction window");
  }
  p.radius = growth_root(c, alpha, p.tau_star);
  return p;
}

namespace detail {

inline void check_finite(const Vector& y, const Grid& grid, Index k) {
  if (!y.allFinite()) throw std::runtime_error("non-finite state at t = " + std::to_string(grid.time(k)));
}

inline Matrix argument_at(const Matrix& value, Index first, const std::vector<Index>& lags, Index k) {
  Matrix u(value.rows(), static_cast<Index>(lags.size()));
  for (std::size_t i = 0; i < lags.size(); ++i) u.col(static_cast<Index>(i)) = value.col(k - lags[i] - first);
  return u;
}

inline Solution finish(const DelayRDEProblem& p, Matrix value, const Matrix& density,
                       std::vector<WindowDiagnostics> windows) {
  const Index first = p.first(), o = p.origin(), end = p.end();
  const Index n = p.n(), d = p.sigma.d();
  GridPath path(p.grid(), first, n, 1, value.leftCols(end - first + 1));
  GridPath dens(p.grid(), o, n, d, density.middleCols(o - first, end - o + 1));
  Solution s{path, ControlledPath(path.segment(o, end), dens, p.driver.path), std::move(windows), {}};
  if (end > o) s.norms = ccp_norm(s.state, p.kappa);
  return s;
}

}  // namespace detail

/// One-step scheme continued from a history y on [-r_k, t_j] (t_j >= 0):
/// y_{k+1} = y_k + sigma(Y_k) dx_k + sum_j [J_j(Y_k) o zeta_{k - lag_j}] . A_j[k],
/// Y_k = (y_k, y_{k - lag_1}, ...), zeta = sigma(Y) from the origin on and 0
/// before it.
inline Solution solve_onestep_from(const DelayRDEProblem& p, const GridPath& history) {
  p.validate();
  const Index first = p.first(), o = p.origin(), end = p.end();
  const Index n = p.n(), d = p.sigma.d();
  if (history.first() > first || history.last() < o || history.last() > end) {
    throw DomainError("history must cover [-r_k, t] for some 0 <= t <= T");
  }
  const auto lags = p.lags();
  std::vector<std::size_t> slots;
  for (Index lag : lags) slots.push_back(*p.driver.areas.slot_of(lag));

  Matrix value(n, end - first + 1);
  Matrix density = Matrix::Zero(n * d, end - first + 1);
  for (Index k = first; k <= history.last(); ++k) value.col(k - first) = history.column(k);

  auto sigma_at = [&](Index k) {
    const Matrix s = p.sigma(detail::argument_at(value, first, lags, k));
    density.col(k - first) = Eigen::Map<const Vector>(s.data(), n * d);
  };
  for (Index k = o; k <= history.last(); ++k) sigma_at(k);

  for (Index k = history.last(); k < end; ++k) {
    const Matrix u = detail::argument_at(value, first, lags, k);
    const Eigen::Map<const Matrix> s(density.col(k - first).data(), n, d);
    Vector next = value.col(k - first) + s * p.driver.path.increment(k, k + 1);
    for (std::size_t j = 0; j < lags.size(); ++j) {
      const Index src = k - lags[j];
      if (src < o) continue;
      const Eigen::Map<const Matrix> inner(density.col(src - first).data(), n, d);
      const Matrix c = contract_density(p.sigma.jacobian(u, static_cast<Index>(j)), inner);
      next += detail::pair_with_area(c, p.driver.areas.cell(slots[j], k), n);
    }
    detail::check_finite(next, p.grid(), k + 1);
    value.col(k + 1 - first) = next;
    sigma_at(k + 1);
  }
  return detail::finish(p, std::move(value), density, {});
}

inline Solution solve_onestep(const DelayRDEProblem& p) {
  p.validate();
  return solve_onestep_from(p, p.xi.segment(p.first(), p.origin()));
}

enum class PicardGuess { constant, zero, euler };

struct PicardOptions {
  double tol = -1.0;  // < 0: 1e-9 (1 + ||xi||_inf)
  int max_retries = 6;
  int max_iterations = 200;
  double accept_ratio = 0.9;
  double growth_constant = -1.0;  // < 0: 1 + sup|sigma| + sup|sigma'|
  double gamma = -1.0;            // driver regularity; < 0: the fBm Hurst index, else 1
  PicardGuess guess = PicardGuess::constant;
};

/// Windowed Picard iteration z <- y_u + J(T_sigma(z, past) dx).
///
/// Outer windows have length r_1 (the whole horizon without delays). In
/// each, c = 2 c_growth (1 + N[past]^2) feeds the contraction lemma and the
/// initial subwindow length is its tau clamped to [8 mesh, window]. A
/// subwindow is accepted once the iterates settle within tol and no measured
/// contraction ratio N[z_{i+1} - z_i] / N[z_i - z_{i-1}] between images of
/// the map exceeds accept_ratio; otherwise its length is halved, at most
/// max_retries times.
inline Solution solve_picard(const DelayRDEProblem& p, const PicardOptions& opt = {}) {
  p.validate();
  const Index first = p.first(), o = p.origin(), end = p.end();
  const Index n = p.n(), d = p.sigma.d();
  const double mesh = p.grid().mesh();
  const auto lags = p.lags();
  const double tol = opt.tol > 0.0 ? opt.tol : 1e-9 * (1.0 + p.xi.sup_norm());
  const double c_growth =
      opt.growth_constant > 0.0 ? opt.growth_constant : 1.0 + p.sigma.bounds().sup + p.sigma.bounds().d1;
  const double gamma = opt.gamma > 0.0 ? opt.gamma : (p.driver.spec ? p.driver.spec->hurst : 1.0);
  const double alpha = std::max(0.01, gamma - p.kappa);
  const Index outer = lags.size() > 1 ? lags[1] : end - o;

  Matrix value(n, end - first + 1);
  Matrix density = Matrix::Zero(n * d, end - first + 1);
  for (Index k = first; k <= o; ++k) value.col(k - first) = p.xi.column(k);

  auto past_ccp = [&](Index hi) {
    return ControlledPath(GridPath(p.grid(), first, n, 1, value.leftCols(hi - first + 1)),
                          GridPath(p.grid(), first, n, d, density.leftCols(hi - first + 1)), p.driver.path);
  };
  auto sigma_dens = [&](const Matrix& u) {
    const Matrix s = p.sigma(u);
    return Vector(Eigen::Map<const Vector>(s.data(), n * d));
  };
  {
    const Matrix s = p.sigma(detail::argument_at(value, first, lags, o));
    density.col(o - first) = Eigen::Map<const Vector>(s.data(), n * d);
  }

  std::vector<WindowDiagnostics> windows;
  for (Index w_lo = o; w_lo < end; w_lo += outer) {
    const Index w_hi = std::min(end, w_lo + outer);
    double past_norm = 0.0;
    if (w_lo - first >= 1) past_norm = ccp_norm(past_ccp(w_lo), p.kappa).total;
    const double c = 2.0 * c_growth * (1.0 + past_norm * past_norm);
    const double r1 = static_cast<double>(w_hi - w_lo) * mesh;
    const auto policy = contraction_policy(c, alpha, r1);
    Index tau_cells = std::clamp<Index>(static_cast<Index>(std::floor(policy.tau_star / mesh)), 8, w_hi - w_lo);

    for (Index u = w_lo; u < w_hi;) {
      int retries = 0;
      while (true) {
        const Index v = std::min(w_hi, u + tau_cells);
        const Index len = v - u + 1;
        WindowDiagnostics diag;
        diag.t_lo = p.grid().time(u);
        diag.t_hi = p.grid().time(v);
        diag.tau = static_cast<double>(v - u) * mesh;
        diag.retries = retries;

        // Initial guess on [u, v].
        Matrix zv(n, len), zd(n * d, len);
        const Vector yu = value.col(u - first);
        const Vector su = density.col(u - first);
        if (opt.guess == PicardGuess::zero) {
          zv.setZero();
          zd.setZero();
        } else {
          zv.col(0) = yu;
          zd.col(0) = su;
          for (Index k = 1; k < len; ++k) {
            if (opt.guess == PicardGuess::constant) {
              zv.col(k) = yu;
              zd.col(k) = su;
            } else {
              const Eigen::Map<const Matrix> s(zd.col(k - 1).data(), n, d);
              zv.col(k) = zv.col(k - 1) + s * p.driver.path.increment(u + k - 1, u + k);
              Matrix arg = detail::argument_at(value, first, lags, u + k);
              arg.col(0) = zv.col(k);
              zd.col(k) = sigma_dens(arg);
            }
          }
        }

        const auto past = past_ccp(u);
        bool accepted = false;
        double prev_diff = -1.0;
        for (int it = 1; it <= opt.max_iterations; ++it) {
          const ControlledPath z(GridPath(p.grid(), u, n, 1, zv), GridPath(p.grid(), u, n, d, zd), p.driver.path);
          // The slot-0 argument is z itself; delayed slots read the solved past.
          Matrix full_v = value.leftCols(v - first + 1);
          Matrix full_d = density.leftCols(v - first + 1);
          full_v.rightCols(len) = zv;
          full_d.rightCols(len) = zd;
          const ControlledPath joined(GridPath(p.grid(), first, n, 1, std::move(full_v)),
                                      GridPath(p.grid(), first, n, d, std::move(full_d)), p.driver.path);
          const auto m = t_sigma(z, joined, p.sigma, lags);
          const auto next = rough_integral(m, p.driver.areas, yu);
          const double diff = ccp_norm(next - z, p.kappa).total;
          diag.differences.push_back(diff);
          const double floor = 1e-12 * (1.0 + next.value().sup_norm());
          if (it > 2 && prev_diff > floor) {
            const double ratio = diff / prev_diff;
            diag.final_ratio = ratio;
            diag.max_ratio = std::max(diag.max_ratio, ratio);
          }
          prev_diff = diff;
          zv = next.value().data();
          zd = next.density().data();
          diag.iterations = it;
          if (diff <= tol) {
            accepted = diag.max_ratio <= opt.accept_ratio;
            break;
          }
          if (diag.max_ratio > opt.accept_ratio) break;
        }

        if (accepted) {
          for (Index k = 1; k < len; ++k) {
            value.col(u + k - first) = zv.col(k);
            detail::check_finite(zv.col(k), p.grid(), u + k);
          }
          for (Index k = 1; k < len; ++k) {
            density.col(u + k - first) = sigma_dens(detail::argument_at(value, first, lags, u + k));
          }
          windows.push_back(std::move(diag));
          u = v;
          break;
        }
        if (retries >= opt.max_retries || tau_cells == 1) {
          throw std::runtime_error("picard iteration did not contract on [" + std::to_string(diag.t_lo) + ", " +
                                   std::to_string(diag.t_hi) + "] after " + std::to_string(retries) +
                                   " halvings (max ratio " + std::to_string(diag.max_ratio) + ", iterations " +
                                   std::to_string(diag.iterations) + ")");
        }
        ++retries;
        tau_cells = std::max<Index>(1, tau_cells / 2);
      }
    }
  }
  return detail::finish(p, std::move(value), density, std::move(windows));
}

struct ItoRow {
  double eps = 0.0;
  double response = 0.0;  // ||y - y~||_inf + ||y - y~||_kappa on [0, T]
  double rhs = 0.0;       // input distance
  double ratio = 0.0;
  bool skipped = false;
};

enum class Perturb { both, driver_only, xi_only };

namespace detail {

inline double sup_plus_holder(const GridPath& g, double mu, Index lo, Index hi) {
  double out = 0.0;
  for (Index i = lo; i <= hi; ++i) out = std::max(out, max_abs(g.column(i)));
  if (hi > lo) out += path_holder_scan(g, mu, lo, hi).value;
  return out;
}

}  // namespace detail

/// Perturbs the initial path and/or the driver by eps times smooth bumps,
/// rebuilds the areas, re-solves with the one-step scheme and compares the
/// output distance with the input distance
/// ||x - x~||_{gamma, inf} + sum_j ||A_j - A~_j||_{2 gamma} + ||xi - xi~||_{2 gamma, inf}.
inline std::vector<ItoRow> ito_map_experiment(const DelayRDEProblem& p, const std::vector<double>& eps,
                                              double gamma, Perturb mode = Perturb::both) {
  p.validate();
  const Index first = p.first(), o = p.origin(), end = p.end();
  const Grid& grid = p.grid();
  const auto base = solve_onestep(p);
  const double span = grid.time(end) - grid.time(first);

  std::vector<ItoRow> rows;
  for (double e : eps) {
    DelayRDEProblem q = p;
    if (mode != Perturb::driver_only) {
      q.xi = p.xi + GridPath::from_function(grid, p.xi.first(), p.xi.last(), p.n(), 1, [&](double t) {
               Vector v(p.n());
               for (Index l = 0; l < p.n(); ++l) v(l) = e * std::cos(1.5 * t + static_cast<double>(l));
               return Matrix(v);
             });
    }
    if (mode != Perturb::xi_only) {
      const Index d = p.sigma.d();
      const auto bump = GridPath::from_function(grid, p.driver.path.first(), p.driver.path.last(), d, 1, [&](double t) {
        Vector v(d);
        const double phase = std::numbers::pi * (t - grid.time(first)) / span;
        for (Index a = 0; a < d; ++a) v(a) = e * std::sin(phase * static_cast<double>(a + 1));
        return Matrix(v);
      });
      q.driver = make_driver(p.driver.path + bump, p.delays, p.driver.spec);
    }
    ItoRow row;
    row.eps = e;
    const auto sol = solve_onestep(q);
    row.response = detail::sup_plus_holder(base.path - sol.path, p.kappa, o, end);
    row.rhs = detail::sup_plus_holder(p.driver.path - q.driver.path, gamma, o, end) +
              detail::sup_plus_holder(p.xi - q.xi, 2.0 * gamma, first, o);
    for (std::size_t j = 0; j < p.driver.areas.slots(); ++j) {
      const Index lo = std::max(o, p.driver.areas.lo(j));
      if (lo >= end) continue;
      row.rhs += holder_scan_fn(lo, end, grid.mesh(), 2.0 * gamma, [&](Index s, Index t) {
                   return max_abs(p.driver.areas.over(j, s, t) - q.driver.areas.over(j, s, t));
                 }).value;
    }
    if (row.rhs == 0.0) {
      row.skipped = true;
    } else {
      row.ratio = row.response / row.rhs;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace roughdelay

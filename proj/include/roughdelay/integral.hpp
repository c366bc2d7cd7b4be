#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "roughdelay/controlled.hpp"
#include "roughdelay/levy.hpp"
#include "roughdelay/sewing.hpp"

namespace roughdelay {

enum class IntegralMode { riemann, lambda };

namespace detail {

inline std::vector<std::size_t> area_slots(const DelayedControlledPath& m, const DelayedArea& area) {
  std::vector<std::size_t> slots;
  for (Index lag : m.lags()) {
    const auto slot = area.slot_of(lag);
    if (!slot) throw DomainError("no area for lag " + std::to_string(lag));
    slots.push_back(*slot);
  }
  if (m.driver().rows() != area.dim()) throw DomainError("area and driver dimensions differ");
  return slots;
}

/// Row l of the pairing: sum_{a, b} zeta((l, b), a) A(a, b), where zeta is
/// the (n d) x d density and A the d x d area (inner index first).
inline Vector pair_with_area(const Eigen::Ref<const Matrix>& zeta, const Matrix& area, Index n) {
  const Index d = area.rows();
  Vector out = Vector::Zero(n);
  for (Index b = 0; b < d; ++b)
    for (Index a = 0; a < d; ++a) {
      const double w = area(a, b);
      if (w != 0.0) out += w * zeta.block(n * b, a, n, 1);
    }
  return out;
}

}  // namespace detail

/// First-order term plus area corrections of the integral of m over [s, t]:
/// Xi_st = m_s dx_st + sum_j zeta^(j)_s . area_st(-r_j).
inline Vector germ(const DelayedControlledPath& m, const DelayedArea& area, const std::vector<std::size_t>& slots,
                   Index s, Index t) {
  const Index n = m.value().rows();
  Vector out = m.value().at(s) * m.driver().increment(s, t);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    out += detail::pair_with_area(m.density(j).at(s), area.over(slots[j], s, t), n);
  }
  return out;
}

/// The rough integral z = alpha + int m dx on [a, b] of an (n x d)-valued
/// delayed controlled path m, returned as a classical controlled path with
/// density m.
///
/// riemann: z accumulates Xi over every grid cell (corrected Riemann sums).
/// lambda:  z_t - z_a = Xi_{at} - Lambda(d Xi)_{at} with the sewing map.
inline ControlledPath rough_integral(const DelayedControlledPath& m, const DelayedArea& area, const Vector& alpha,
                                     IntegralMode mode = IntegralMode::riemann, const SewOptions& sew_opts = {}) {
  const Index n = m.value().rows();
  if (alpha.size() != n) throw DomainError("initial value has wrong dimension");
  const auto slots = detail::area_slots(m, area);
  const Index a = m.a(), b = m.b();
  Matrix z(n, b - a + 1);
  z.col(0) = alpha;
  if (mode == IntegralMode::riemann) {
    for (Index k = a; k < b; ++k) z.col(k - a + 1) = z.col(k - a) + germ(m, area, slots, k, k + 1);
  } else if (b > a) {
    const Increment2 xi(m.value().grid(), a, b, n, 1, [m, area, slots](const Increment2::Times& st) -> Matrix {
      return germ(m, area, slots, st[0], st[1]);
    });
    const Increment2 lam = lambda_op(delta(xi), sew_opts, a);
    for (Index t = a + 1; t <= b; ++t) z.col(t - a) = alpha + xi(a, t) - lam(a, t);
  }
  return {GridPath(m.value().grid(), a, n, 1, std::move(z)), m.value(), m.driver()};
}

/// sum over consecutive partition points p_i of Xi_{p_i p_{i+1}}.
inline Vector corrected_riemann_sum(const DelayedControlledPath& m, const DelayedArea& area,
                                    const std::vector<Index>& partition) {
  const auto slots = detail::area_slots(m, area);
  Vector acc = Vector::Zero(m.value().rows());
  for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
    if (partition[i] > partition[i + 1]) throw DomainError("partition must be non-decreasing");
    if (partition[i] < partition[i + 1]) acc += germ(m, area, slots, partition[i], partition[i + 1]);
  }
  return acc;
}

struct ConvergenceRow {
  int level = 0;
  Index pieces = 1;
  double difference = 0.0;  // uniform distance to the previous level
  double ratio = 0.0;       // previous difference / this difference
  double order = 0.0;       // log2(ratio)
};

/// Corrected Riemann sums of m over [lo, hi] on the dyadic partitions
/// lo + floor(j (hi - lo) / 2^l), l = 0..levels. The difference of level l
/// is the largest gap between the running sums of levels l and l - 1 at the
/// partition points of level l - 1.
inline std::vector<ConvergenceRow> riemann_convergence_study(const DelayedControlledPath& m, const DelayedArea& area,
                                                             Index lo, Index hi, int levels = -1) {
  if (hi - lo < 64) throw DomainError("convergence study needs at least 64 cells");
  const auto slots = detail::area_slots(m, area);
  const int top = levels < 0 ? detail::ceil_log2(hi - lo) : levels;
  if ((Index{1} << top) > hi - lo) throw DomainError("more levels than grid cells");

  auto running = [&](int level) {
    const Index parts = Index{1} << level;
    std::vector<Vector> out{Vector::Zero(m.value().rows())};
    Index prev = lo;
    for (Index j = 1; j <= parts; ++j) {
      const Index p = lo + (j * (hi - lo)) / parts;
      out.push_back(out.back() + germ(m, area, slots, prev, p));
      prev = p;
    }
    return out;
  };

  std::vector<ConvergenceRow> rows;
  auto coarse = running(0);
  rows.push_back({0, 1, 0.0, 0.0, 0.0});
  for (int l = 1; l <= top; ++l) {
    auto fine = running(l);
    double diff = 0.0;
    for (std::size_t j = 0; j < coarse.size(); ++j) diff = std::max(diff, max_abs(fine[2 * j] - coarse[j]));
    ConvergenceRow row{l, Index{1} << l, diff, 0.0, 0.0};
    if (l >= 2 && diff > 0.0) {
      row.ratio = rows.back().difference / diff;
      row.order = std::log2(row.ratio);
    }
    rows.push_back(row);
    coarse = std::move(fine);
  }
  return rows;
}

/// Driver part of the integration constant: ||x||_gamma + sum_j ||area_j||_{2 gamma}
/// over [lo, hi].
inline double driver_norm(const DelayedArea& area, double gamma, Index lo, Index hi, const ScanPolicy& policy = {}) {
  const double mesh = area.grid().mesh();
  double total = path_holder_scan(area.path(), gamma, lo, hi, policy).value;
  for (std::size_t j = 0; j < area.slots(); ++j) {
    const Index start = std::max(lo, area.lo(j));
    if (start >= hi) continue;
    total += holder_scan_fn(start, hi, mesh, 2.0 * gamma,
                            [&](Index s, Index t) { return max_abs(area.over(j, s, t)); }, policy)
                 .value;
  }
  return total;
}

struct StabilityReport {
  double integral_norm = 0.0;  // N[J(m dx)]
  double sup_m = 0.0;          // ||m||_inf
  double norm_m = 0.0;         // N[m]
  double c_int = 0.0;          // driver_norm on [a, b]
  double length_factor = 0.0;  // (b - a)^{gamma - kappa}
  double shape = 0.0;          // ||m||_inf + c_int (b - a)^{gamma - kappa} N[m]
  double ratio = 0.0;          // integral_norm / shape
};

/// Both sides of the integral's norm bound for one integrand.
inline StabilityReport stability_probe(const DelayedControlledPath& m, const DelayedArea& area, const Vector& alpha,
                                       double kappa, double gamma, const ScanPolicy& policy = {}) {
  StabilityReport r;
  const auto z = rough_integral(m, area, alpha);
  r.integral_norm = ccp_norm(z, kappa, policy).total;
  r.sup_m = m.value().sup_norm();
  r.norm_m = dcp_norm(m, kappa, policy).total;
  r.c_int = driver_norm(area, gamma, m.a(), m.b(), policy);
  r.length_factor = std::pow(static_cast<double>(m.b() - m.a()) * area.grid().mesh(), gamma - kappa);
  r.shape = r.sup_m + r.c_int * r.length_factor * r.norm_m;
  r.ratio = r.shape > 0.0 ? r.integral_norm / r.shape : 0.0;
  return r;
}

struct DifferenceStability {
  double difference_norm = 0.0;  // N[J(m1 dx) - J(m2 dx)]
  double shape = 0.0;            // c_int (b - a)^{gamma - kappa} N[m1 - m2]
  double ratio = 0.0;
  bool skipped = false;
};

/// Both sides of the Lipschitz bound of the integral for integrands with
/// the same initial value.
inline DifferenceStability difference_stability_probe(const DelayedControlledPath& m1,
                                                      const DelayedControlledPath& m2, const DelayedArea& area,
                                                      double kappa, double gamma, const ScanPolicy& policy = {}) {
  DifferenceStability r;
  const Vector zero = Vector::Zero(m1.value().rows());
  const auto dz = rough_integral(m1, area, zero) - rough_integral(m2, area, zero);
  r.difference_norm = ccp_norm(dz, kappa, policy).total;
  const double len = std::pow(static_cast<double>(m1.b() - m1.a()) * area.grid().mesh(), gamma - kappa);
  r.shape = driver_norm(area, gamma, m1.a(), m1.b(), policy) * len * dcp_norm(m1 - m2, kappa, policy).total;
  if (r.shape == 0.0) {
    r.skipped = true;
    return r;
  }
  r.ratio = r.difference_norm / r.shape;
  return r;
}

}  // namespace roughdelay

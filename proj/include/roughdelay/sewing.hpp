#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roughdelay/increment.hpp"
#include "roughdelay/philox.hpp"

namespace roughdelay {

/// The dyadic Riemann sums of an increment did not settle.
class SewingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SewOptions {
  double tol = 1e-10;
  int max_levels = -1;  // < 0: refine down to the grid mesh
  bool require_convergence = true;
};

struct SewPairResult {
  Matrix value;
  int levels = 0;
  double last_delta = 0.0;
  bool converged = true;
  /// Geometric (Aitken) extrapolation of the level sums; equals `value`
  /// when the level differences do not shrink.
  Matrix extrapolated;
  std::vector<double> level_deltas;  // |S_l - S_{l-1}|, l = 1..levels
};

struct SewResult {
  Increment2 value;
  int refinement_levels = 0;
  double last_delta = 0.0;
  bool converged = true;
};

namespace detail {

inline int ceil_log2(Index n) {
  int l = 0;
  while ((Index{1} << l) < n) ++l;
  return l;
}

inline Matrix level_sum(const Increment2& g, Index s, Index t, int level) {
  const Index n = t - s;
  const Index parts = Index{1} << level;
  Matrix acc = Matrix::Zero(g.rows(), g.cols());
  Index prev = s;
  for (Index j = 1; j <= parts; ++j) {
    const Index p = s + (j * n) / parts;
    if (p != prev) acc += g(prev, p);
    prev = p;
  }
  return acc;
}

}  // namespace detail

/// Riemann sums of g over the dyadic partitions s + floor(j (t-s) / 2^l) of
/// [s, t], refined until two successive levels agree within tol or the grid
/// mesh is reached. The levels are nested, so the finest level is the sum
/// over every grid cell.
inline SewPairResult sew_pair(const Increment2& g, Index s, Index t, const SewOptions& opts = {}) {
  if (s < g.lo() || t > g.hi() || s > t) throw DomainError("sew: pair outside the increment's domain");
  SewPairResult out;
  if (s == t) {
    out.value = out.extrapolated = Matrix::Zero(g.rows(), g.cols());
    return out;
  }
  const int full = detail::ceil_log2(t - s);
  const int top = opts.max_levels < 0 ? full : std::min(opts.max_levels, full);

  Matrix prev = detail::level_sum(g, s, t, 0);
  Matrix before_prev = prev;
  int level = 0;
  for (int l = 1; l <= top; ++l) {
    Matrix cur = detail::level_sum(g, s, t, l);
    out.level_deltas.push_back(max_abs(cur - prev));
    before_prev = std::move(prev);
    prev = std::move(cur);
    level = l;
    const std::size_t m = out.level_deltas.size();
    const double scale = opts.tol * (1.0 + max_abs(prev));
    if (m >= 2 && out.level_deltas[m - 1] <= scale && out.level_deltas[m - 2] <= scale) break;
  }
  out.value = prev;
  out.levels = level;
  out.last_delta = out.level_deltas.empty() ? 0.0 : out.level_deltas.back();

  const std::size_t m = out.level_deltas.size();
  const bool small = out.last_delta <= opts.tol * (1.0 + max_abs(out.value));
  const bool shrinking = m >= 2 && out.level_deltas[m - 1] < out.level_deltas[m - 2];
  out.converged = small || shrinking || m < 2;

  out.extrapolated = out.value;
  if (m >= 2 && out.level_deltas[m - 2] > 0.0) {
    const double q = out.level_deltas[m - 1] / out.level_deltas[m - 2];
    if (q > 0.0 && q < 1.0) out.extrapolated = out.value + (out.value - before_prev) * (q / (1.0 - q));
  }
  return out;
}

/// Indefinite integral of the 1-increment g over its domain, realized as
/// the finest-grid Riemann sum: value(s, t) = F_t - F_s with
/// F_j = sum_{k < j} g_{k, k+1}. Convergence diagnostics come from the
/// dyadic ladders of the full domain and its halves and quarters.
inline SewResult sew(const Increment2& g, const SewOptions& opts = {}) {
  const Index lo = g.lo();
  const Index hi = g.hi();
  Matrix cumulative(g.rows() * g.cols(), hi - lo + 1);
  cumulative.col(0).setZero();
  for (Index k = lo; k < hi; ++k) {
    Matrix cell = g(k, k + 1);
    cumulative.col(k - lo + 1) = cumulative.col(k - lo) + Eigen::Map<const Vector>(cell.data(), cell.size());
  }

  SewResult out;
  const Index rows = g.rows();
  const Index cols = g.cols();
  out.value = Increment2(g.grid(), lo, hi, rows, cols,
                         [cumulative, lo, rows, cols](const Increment2::Times& st) -> Matrix {
                           Vector d = cumulative.col(st[1] - lo) - cumulative.col(st[0] - lo);
                           return Eigen::Map<const Matrix>(d.data(), rows, cols);
                         });

  std::vector<std::pair<Index, Index>> probes{{lo, hi}};
  for (int parts : {2, 4}) {
    for (int j = 0; j < parts; ++j) {
      const Index a = lo + (j * (hi - lo)) / parts;
      const Index b = lo + ((j + 1) * (hi - lo)) / parts;
      if (b - a >= 4) probes.emplace_back(a, b);
    }
  }
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto r = sew_pair(g, probes[i].first, probes[i].second, opts);
    if (i == 0) out.refinement_levels = r.levels;
    out.last_delta = std::max(out.last_delta, r.last_delta);
    out.converged = out.converged && r.converged;
  }
  return out;
}

namespace detail {

inline std::vector<std::array<Index, 4>> sample_sorted_tuples(Index lo, Index hi, std::size_t count,
                                                              std::uint64_t seed) {
  UniformStream u(seed, 0x4c41u);
  std::vector<std::array<Index, 4>> out;
  std::uint64_t j = 0;
  for (std::size_t c = 0; c < count; ++c) {
    std::array<Index, 4> t{};
    for (auto& x : t) x = static_cast<Index>(u.integer(j++, lo, hi));
    std::sort(t.begin(), t.end());
    out.push_back(t);
  }
  return out;
}

}  // namespace detail

struct LambdaResult {
  Increment2 value;
  SewResult sewing;
};

/// The sewing map: the unique g with dg = h and g in C_2^{1+}.
///
/// Built from the primitive g0_st = -h_{a s t} (a = base point), which
/// satisfies dg0 = h for any cocycle h, and then Lambda h = g0 - sew(g0).
/// Precondition checked on 200 sampled 4-tuples: |dh| <= 1e-10 (1 + |h|).
inline LambdaResult lambda_op_with_diagnostics(const Increment3& h, const SewOptions& opts = {},
                                               std::optional<Index> base_point = std::nullopt) {
  const Index a = base_point.value_or(h.lo());
  if (a < h.lo() || a > h.hi()) throw DomainError("lambda: base point outside the increment's domain");

  const auto dh = delta(h);
  for (const auto& q : detail::sample_sorted_tuples(h.lo(), h.hi(), 200, 0x1a3bda)) {
    const double scale = 1.0 + std::max({max_abs(h(q[1], q[2], q[3])), max_abs(h(q[0], q[2], q[3])),
                                         max_abs(h(q[0], q[1], q[3])), max_abs(h(q[0], q[1], q[2]))});
    if (max_abs(dh(q)) > 1e-10 * scale) {
      throw DomainError("lambda: h is not a cocycle (|dh| = " + std::to_string(max_abs(dh(q))) + ")");
    }
  }

  Increment2 primitive(h.grid(), a, h.hi(), h.rows(), h.cols(),
                       [h, a](const Increment2::Times& st) -> Matrix { return -h(a, st[0], st[1]); });
  LambdaResult out;
  out.sewing = sew(primitive, opts);
  if (!out.sewing.converged && opts.require_convergence) {
    throw SewingError("lambda: Riemann sums of the primitive do not converge (last level delta " +
                      std::to_string(out.sewing.last_delta) + ")");
  }
  out.value = primitive - out.sewing.value;

  const auto check = delta(out.value);
  for (const auto& q : detail::sample_sorted_tuples(a, h.hi(), 100, 0x7e57)) {
    const Matrix target = h(q[0], q[1], q[2]);
    if (max_abs(check(q[0], q[1], q[2]) - target) > 1e-8 * (1.0 + max_abs(target))) {
      throw std::logic_error("lambda: d(Lambda h) != h on a sampled triple");
    }
  }
  return out;
}

inline Increment2 lambda_op(const Increment3& h, const SewOptions& opts = {},
                            std::optional<Index> base_point = std::nullopt) {
  return lambda_op_with_diagnostics(h, opts, base_point).value;
}

}  // namespace roughdelay

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "roughdelay/grid.hpp"

namespace roughdelay {

/// A k-increment on grid indices [lo, hi]: a matrix-valued function of
/// `Arity` grid times. Increments are evaluation rules over stored data,
/// never materialized tables.
template <std::size_t Arity>
class Increment {
  static_assert(Arity >= 1);

 public:
  using Times = std::array<Index, Arity>;
  using Rule = std::function<Matrix(const Times&)>;

  Increment() = default;

  Increment(Grid grid, Index lo, Index hi, Index rows, Index cols, Rule rule)
      : grid_(grid), lo_(lo), hi_(hi), rows_(rows), cols_(cols), rule_(std::move(rule)) {
    if (lo > hi) throw DomainError("increment domain is empty");
    if (rows < 1 || cols < 1) throw DomainError("increment values need a positive shape");
  }

  Matrix operator()(const Times& t) const { return rule_(t); }

  template <class... I>
    requires(sizeof...(I) == Arity)
  Matrix operator()(I... t) const {
    return rule_(Times{static_cast<Index>(t)...});
  }

  const Grid& grid() const { return grid_; }
  Index lo() const { return lo_; }
  Index hi() const { return hi_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const Rule& rule() const { return rule_; }

 private:
  Grid grid_;
  Index lo_ = 0;
  Index hi_ = 0;
  Index rows_ = 1;
  Index cols_ = 1;
  Rule rule_;
};

using Increment1 = Increment<1>;
using Increment2 = Increment<2>;
using Increment3 = Increment<3>;
using Increment4 = Increment<4>;

/// Views a path as a 0-increment (a function of one time).
inline Increment1 as_increment(const GridPath& path) {
  return Increment1(path.grid(), path.first(), path.last(), path.rows(), path.cols(),
                    [path](const Increment1::Times& t) -> Matrix { return path.at(t[0]); });
}

/// Coboundary: (dg)_{t_1..t_{k+1}} = sum_i (-1)^{k-i} g_{t_1..^t_i..t_{k+1}}.
template <std::size_t K>
Increment<K + 1> delta(const Increment<K>& g) {
  return Increment<K + 1>(g.grid(), g.lo(), g.hi(), g.rows(), g.cols(),
                          [g](const typename Increment<K + 1>::Times& t) -> Matrix {
                            Matrix acc = Matrix::Zero(g.rows(), g.cols());
                            typename Increment<K>::Times sub;
                            for (std::size_t i = 0; i <= K; ++i) {
                              for (std::size_t j = 0, p = 0; j <= K; ++j) {
                                if (j != i) sub[p++] = t[j];
                              }
                              // (-1)^{k-i} with 1-based i is (-1)^{K-1-i} for 0-based i.
                              const bool negative = ((K + 1 - i) % 2) == 1;
                              if (negative) {
                                acc -= g(sub);
                              } else {
                                acc += g(sub);
                              }
                            }
                            return acc;
                          });
}

inline Increment2 delta1(const GridPath& g) { return delta(as_increment(g)); }
inline Increment3 delta2(const Increment2& h) { return delta(h); }

/// Product of increments with shared middle time:
/// (gh)_{t_1..t_{n+m-1}} = g_{t_1..t_n} h_{t_n..t_{n+m-1}}.
template <std::size_t N, std::size_t M>
Increment<N + M - 1> product(const Increment<N>& g, const Increment<M>& h) {
  if (g.cols() != h.rows()) {
    throw DomainError("increment product: shapes " + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                      " and " + std::to_string(h.rows()) + "x" + std::to_string(h.cols()) + " do not compose");
  }
  const Index lo = std::max(g.lo(), h.lo());
  const Index hi = std::min(g.hi(), h.hi());
  return Increment<N + M - 1>(g.grid(), lo, hi, g.rows(), h.cols(),
                              [g, h](const typename Increment<N + M - 1>::Times& t) -> Matrix {
                                typename Increment<N>::Times tg;
                                typename Increment<M>::Times th;
                                std::copy_n(t.begin(), N, tg.begin());
                                std::copy_n(t.begin() + (N - 1), M, th.begin());
                                return g(tg) * h(th);
                              });
}

template <std::size_t K>
Increment<K> operator+(const Increment<K>& a, const Increment<K>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("increment sum: shape mismatch");
  return Increment<K>(a.grid(), std::max(a.lo(), b.lo()), std::min(a.hi(), b.hi()), a.rows(), a.cols(),
                      [a, b](const typename Increment<K>::Times& t) -> Matrix { return a(t) + b(t); });
}

template <std::size_t K>
Increment<K> operator-(const Increment<K>& a, const Increment<K>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("increment difference: shape mismatch");
  return Increment<K>(a.grid(), std::max(a.lo(), b.lo()), std::min(a.hi(), b.hi()), a.rows(), a.cols(),
                      [a, b](const typename Increment<K>::Times& t) -> Matrix { return a(t) - b(t); });
}

template <std::size_t K>
Increment<K> operator*(double c, const Increment<K>& a) {
  return Increment<K>(a.grid(), a.lo(), a.hi(), a.rows(), a.cols(),
                      [a, c](const typename Increment<K>::Times& t) -> Matrix { return c * a(t); });
}

template <std::size_t K>
Increment<K> operator-(const Increment<K>& a) {
  return -1.0 * a;
}

// ---------------------------------------------------------------------------
// Hölder-type scans.
//
// Pairs (s < t) are enumerated exactly while their count stays within
// `pair_cap`. Beyond that the scan covers every pair with t - s <= near_cells
// plus all pairs of a strided coarse index set (stride chosen so that the
// coarse set holds about pair_cap / 2 pairs, always including hi), and the
// result is flagged as approximate. Triples use the same policy with
// near_cells_triple.

struct ScanPolicy {
  std::size_t pair_cap = 2'000'000;
  Index near_cells = 64;
  Index near_cells_triple = 16;
};

struct NormScan {
  double value = 0.0;
  bool exact = true;
  std::size_t evaluated = 0;
};

namespace detail {

inline std::vector<Index> coarse_indices(Index lo, Index hi, Index stride) {
  std::vector<Index> idx;
  for (Index i = lo; i <= hi; i += stride) idx.push_back(i);
  if (idx.back() != hi) idx.push_back(hi);
  return idx;
}

}  // namespace detail

/// Calls f(s, t) for the pairs lo <= s < t <= hi selected by `policy`.
/// Returns whether the enumeration was exhaustive.
template <class F>
bool for_each_pair(Index lo, Index hi, const ScanPolicy& policy, F&& f) {
  const Index n = hi - lo + 1;
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  if (pairs <= static_cast<double>(policy.pair_cap)) {
    for (Index s = lo; s < hi; ++s) {
      for (Index t = s + 1; t <= hi; ++t) f(s, t);
    }
    return true;
  }
  for (Index s = lo; s < hi; ++s) {
    const Index top = std::min(hi, s + policy.near_cells);
    for (Index t = s + 1; t <= top; ++t) f(s, t);
  }
  const double coarse_points = std::sqrt(static_cast<double>(policy.pair_cap));
  const Index stride = std::max<Index>(1, static_cast<Index>(std::ceil(static_cast<double>(n) / coarse_points)));
  const auto idx = detail::coarse_indices(lo, hi, stride);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      if (idx[b] - idx[a] > policy.near_cells) f(idx[a], idx[b]);
    }
  }
  return false;
}

/// Calls f(s, u, t) for triples lo <= s < u < t <= hi selected by `policy`.
template <class F>
bool for_each_triple(Index lo, Index hi, const ScanPolicy& policy, F&& f) {
  const double n = static_cast<double>(hi - lo + 1);
  const double triples = n * (n - 1) * (n - 2) / 6.0;
  if (triples <= static_cast<double>(policy.pair_cap)) {
    for (Index s = lo; s < hi; ++s)
      for (Index u = s + 1; u < hi; ++u)
        for (Index t = u + 1; t <= hi; ++t) f(s, u, t);
    return true;
  }
  const Index near = policy.near_cells_triple;
  for (Index s = lo; s < hi; ++s) {
    const Index top = std::min(hi, s + near);
    for (Index u = s + 1; u < top; ++u)
      for (Index t = u + 1; t <= top; ++t) f(s, u, t);
  }
  const double coarse_points = std::cbrt(3.0 * static_cast<double>(policy.pair_cap));
  const Index stride = std::max<Index>(1, static_cast<Index>(std::ceil(n / coarse_points)));
  const auto idx = detail::coarse_indices(lo, hi, stride);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      for (std::size_t c = b + 1; c < idx.size(); ++c)
        if (idx[c] - idx[a] > near) f(idx[a], idx[b], idx[c]);
  return false;
}

/// sup over selected pairs of |f(s,t)| / |t - s|^mu where f returns the
/// (already max-normed) magnitude of the increment.
template <class F>
NormScan holder_scan_fn(Index lo, Index hi, double mesh, double mu, F&& magnitude, const ScanPolicy& policy = {}) {
  if (!(mu > 0.0)) throw DomainError("Hölder exponent must be positive");
  NormScan scan;
  scan.exact = for_each_pair(lo, hi, policy, [&](Index s, Index t) {
    const double dt = static_cast<double>(t - s) * mesh;
    scan.value = std::max(scan.value, magnitude(s, t) / std::pow(dt, mu));
    ++scan.evaluated;
  });
  return scan;
}

inline NormScan holder_scan2(const Increment2& h, double mu, const ScanPolicy& policy = {}) {
  return holder_scan_fn(h.lo(), h.hi(), h.grid().mesh(), mu, [&](Index s, Index t) { return max_abs(h(s, t)); },
                        policy);
}

/// max over pairs s != t of |h_st| / |t - s|^mu (entrywise max norm).
inline double holder_seminorm2(const Increment2& h, double mu, const ScanPolicy& policy = {}) {
  return holder_scan2(h, mu, policy).value;
}

/// Hölder seminorm of a path, i.e. of its increment dg, without going
/// through the type-erased increment machinery.
inline NormScan path_holder_scan(const GridPath& g, double mu, Index lo, Index hi, const ScanPolicy& policy = {}) {
  return holder_scan_fn(lo, hi, g.grid().mesh(), mu,
                        [&](Index s, Index t) { return max_abs(g.column(t) - g.column(s)); }, policy);
}

inline double path_holder(const GridPath& g, double mu, const ScanPolicy& policy = {}) {
  if (g.size() < 2) return 0.0;
  return path_holder_scan(g, mu, g.first(), g.last(), policy).value;
}

/// Split norm sup |h_sut| / (|u - s|^gamma |t - u|^rho) over selected
/// triples. Upper-bounds the infimum-over-decompositions norm at
/// mu = gamma + rho.
inline NormScan split_scan3(const Increment3& h, double gamma, double rho, const ScanPolicy& policy = {}) {
  if (!(gamma > 0.0) || !(rho > 0.0)) throw DomainError("split-norm exponents must be positive");
  const double mesh = h.grid().mesh();
  NormScan scan;
  scan.exact = for_each_triple(h.lo(), h.hi(), policy, [&](Index s, Index u, Index t) {
    const double den = std::pow(static_cast<double>(u - s) * mesh, gamma) *
                       std::pow(static_cast<double>(t - u) * mesh, rho);
    scan.value = std::max(scan.value, max_abs(h(s, u, t)) / den);
    ++scan.evaluated;
  });
  return scan;
}

inline double holder_norm3_split(const Increment3& h, double gamma, double rho, const ScanPolicy& policy = {}) {
  return split_scan3(h, gamma, rho, policy).value;
}

}  // namespace roughdelay

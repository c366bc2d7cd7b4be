#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "roughdelay/fbm.hpp"
#include "roughdelay/grid.hpp"
#include "roughdelay/increment.hpp"

namespace roughdelay {

/// Delayed Lévy areas A(v) of a d-dimensional grid path x, one per lag
/// v = -lag * mesh.
///
/// Entry (a, b) of area(s, t) approximates the iterated integral
/// int_s^t (x^a_{u+v} - x^a_{s+v}) dx^b_u: the first index is the delayed
/// inner component, the second the outer integrator. On a single cell the
/// trapezoid rule gives A[k](a, b) = 1/2 dx^a_{k-lag, k+1-lag} dx^b_{k, k+1};
/// longer intervals are assembled from cells by the Chen relation
///   area(s, t) = area(s, u) + area(u, t) + dx^v_{su} (x) dx_{ut},
/// which therefore holds exactly.
class DelayedArea {
 public:
  DelayedArea() = default;

  DelayedArea(GridPath path, std::vector<Index> lags) : path_(std::move(path)), lags_(std::move(lags)) {
    if (path_.cols() != 1) throw DomainError("area base path must be vector-valued");
    d_ = path_.rows();
    for (Index lag : lags_) {
      if (lag < 0) throw DomainError("area lags must be non-negative");
      if (path_.first() + lag >= path_.last()) throw DomainError("path too short for lag " + std::to_string(lag));
      build_prefix(lag);
    }
  }

  const GridPath& path() const { return path_; }
  const Grid& grid() const { return path_.grid(); }
  Index dim() const { return d_; }
  const std::vector<Index>& lags() const { return lags_; }
  std::size_t slots() const { return lags_.size(); }
  bool flipped() const { return flipped_; }

  /// Slot holding `lag`, or nullopt.
  std::optional<std::size_t> slot_of(Index lag) const {
    for (std::size_t i = 0; i < lags_.size(); ++i)
      if (lags_[i] == lag) return i;
    return std::nullopt;
  }

  /// First grid index s for which area(s, .) of the slot is defined.
  Index lo(std::size_t slot) const { return path_.first() + lags_.at(slot); }
  Index hi() const { return path_.last(); }

  /// Stored one-cell matrix for cell [k, k+1].
  Matrix cell(std::size_t slot, Index k) const {
    check(slot, k, k + 1);
    const Index lag = lags_[slot];
    Matrix m = 0.5 * path_.increment(k - lag, k + 1 - lag) * path_.increment(k, k + 1).transpose();
    return flipped_ ? Matrix(m.transpose()) : m;
  }

  /// Chen-assembled area over [s, t].
  Matrix over(std::size_t slot, Index s, Index t) const {
    check(slot, s, t);
    Matrix m = flipped_ ? Matrix(raw(slot, s, t).transpose()) : raw(slot, s, t);
    return m;
  }

  /// The same areas read with the two indices exchanged. Breaks the Chen
  /// relation; exists to demonstrate that the convention matters.
  DelayedArea transposed() const {
    DelayedArea out = *this;
    out.flipped_ = !flipped_;
    return out;
  }

  Increment2 as_increment(std::size_t slot) const {
    DelayedArea self = *this;
    return Increment2(grid(), lo(slot), hi(), d_, d_,
                      [self, slot](const Increment2::Times& st) -> Matrix { return self.over(slot, st[0], st[1]); });
  }

 private:
  static constexpr Index direct_cells = 32;

  void check(std::size_t slot, Index s, Index t) const {
    if (slot >= lags_.size()) throw DomainError("area slot out of range");
    if (s > t || s < lo(slot) || t > hi()) {
      throw DomainError("area over [" + std::to_string(s) + ", " + std::to_string(t) + "] outside [" +
                        std::to_string(lo(slot)) + ", " + std::to_string(hi()) + "] for lag " +
                        std::to_string(lags_[slot]));
    }
  }

  // P_j = sum_{lo <= k < j} (A[k] + x_{k-lag} (x) dx_k), stored flattened.
  void build_prefix(Index lag) {
    const Index lo = path_.first() + lag;
    const Index n = path_.last() - lo + 1;
    Matrix prefix(d_ * d_, n);
    prefix.col(0).setZero();
    Matrix acc = Matrix::Zero(d_, d_);
    for (Index k = lo; k < path_.last(); ++k) {
      const Vector dv = path_.increment(k - lag, k + 1 - lag);
      const Vector dx = path_.increment(k, k + 1);
      acc += (0.5 * dv + path_.column(k - lag)) * dx.transpose();
      prefix.col(k - lo + 1) = Eigen::Map<const Vector>(acc.data(), d_ * d_);
    }
    prefix_.push_back(std::move(prefix));
  }

  Matrix raw(std::size_t slot, Index s, Index t) const {
    const Index lag = lags_[slot];
    if (t - s <= direct_cells) {
      Matrix acc = Matrix::Zero(d_, d_);
      const Vector base = path_.column(s - lag);
      for (Index k = s; k < t; ++k) {
        const Vector dv = path_.increment(k - lag, k + 1 - lag);
        acc += (0.5 * dv + (path_.column(k - lag) - base)) * path_.increment(k, k + 1).transpose();
      }
      return acc;
    }
    const Index lo = this->lo(slot);
    const Vector diff = prefix_[slot].col(t - lo) - prefix_[slot].col(s - lo);
    Matrix m = Eigen::Map<const Matrix>(diff.data(), d_, d_);
    m -= path_.column(s - lag) * path_.increment(s, t).transpose();
    return m;
  }

  GridPath path_;
  Index d_ = 1;
  std::vector<Index> lags_;
  std::vector<Matrix> prefix_;
  bool flipped_ = false;
};

/// Areas for the delays {0, r_1, ..., r_k} given in time units.
inline DelayedArea build_area(const GridPath& path, const std::vector<double>& delays) {
  std::vector<Index> lags{0};
  for (double r : delays) {
    const Index lag = steps_for(r, path.grid().mesh(), "delay");
    if (lag <= 0) throw DomainError("delays must be positive");
    lags.push_back(lag);
  }
  return DelayedArea(path, std::move(lags));
}

/// A driver path with its delayed areas and, for sampled drivers, the law
/// it was drawn from.
struct DriverBundle {
  GridPath path;
  DelayedArea areas;
  std::optional<FbmSpec> spec;
};

inline DriverBundle make_driver(const GridPath& path, const std::vector<double>& delays,
                                std::optional<FbmSpec> spec = std::nullopt) {
  return DriverBundle{path, build_area(path, delays), std::move(spec)};
}

inline DriverBundle make_fbm_driver(const FbmSampler& sampler, const std::vector<double>& delays,
                                    std::uint64_t trial = 0) {
  return make_driver(sampler.sample(trial), delays, sampler.spec());
}

struct AreaMomentReport {
  std::vector<double> lengths;        // |t - s|
  std::vector<double> second_moment;  // E |A_st(v)(i, j)|^2
  std::vector<double> standard_error;
  std::vector<double> diagonal_constant;  // second_moment / |t - s|^{4H}
  double exponent = 0.0;                  // least-squares slope on log-log data
};

/// Monte-Carlo estimate of E |A_st(v)(i, j)|^2 over a ladder of interval
/// lengths (in cells). Each trial contributes every non-overlapping window
/// of the given length inside [0, t_max].
inline AreaMomentReport area_moment_check(const FbmSpec& spec, Index lag, const std::vector<Index>& cells,
                                          std::size_t trials, Index i, Index j) {
  if (trials < 256) throw DomainError("area moment check needs at least 256 trials");
  if (i < 0 || j < 0 || i >= spec.dim || j >= spec.dim) throw DomainError("area component out of range");
  const FbmSampler sampler(spec);
  const Grid& grid = spec.grid;
  const Index origin = grid.origin();
  if (origin < lag) throw DomainError("grid does not extend back over the lag");

  std::vector<double> sum(cells.size(), 0.0), sum_sq(cells.size(), 0.0), count(cells.size(), 0.0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const DelayedArea area(sampler.sample(trial), {lag});
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Index len = cells[c];
      for (Index s = origin; s + len <= grid.last(); s += len) {
        const double a = area.over(0, s, s + len)(i, j);
        sum[c] += a * a;
        sum_sq[c] += a * a * a * a;
        count[c] += 1.0;
      }
    }
  }

  AreaMomentReport rep;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (count[c] == 0.0) throw DomainError("interval length exceeds the horizon");
    const double len = static_cast<double>(cells[c]) * grid.mesh();
    const double m = sum[c] / count[c];
    const double var = std::max(sum_sq[c] / count[c] - m * m, 0.0);
    rep.lengths.push_back(len);
    rep.second_moment.push_back(m);
    rep.standard_error.push_back(std::sqrt(var / count[c]));
    rep.diagonal_constant.push_back(m / std::pow(len, 4.0 * spec.hurst));
    const double lx = std::log(len), ly = std::log(m);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(cells.size());
  rep.exponent = n > 1 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
  return rep;
}

}  // namespace roughdelay

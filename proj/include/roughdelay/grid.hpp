#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace roughdelay {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when an argument lies outside the domain of an operation
/// (off-grid times, shape mismatches, exponents out of range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Exact rational number, used for meshes like "1/256" so that grid
/// alignment checks do not suffer from binary-decimal drift.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Parses "p/q", an integer, or a finite decimal ("0.25") into a reduced
/// rational.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] { return DomainError("cannot parse rational: '" + std::string(text) + "'"); };
  auto parse_int = [&](std::string_view s) -> std::int64_t {
    if (s.empty()) throw fail();
    std::int64_t sign = 1;
    std::size_t pos = 0;
    if (s[0] == '-' || s[0] == '+') {
      sign = s[0] == '-' ? -1 : 1;
      pos = 1;
    }
    if (pos == s.size()) throw fail();
    std::int64_t v = 0;
    for (; pos < s.size(); ++pos) {
      if (s[pos] < '0' || s[pos] > '9') throw fail();
      v = v * 10 + (s[pos] - '0');
      if (v > (std::int64_t{1} << 52)) throw fail();
    }
    return sign * v;
  };

  Rational r;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    r.num = parse_int(text.substr(0, slash));
    r.den = parse_int(text.substr(slash + 1));
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string digits(text.substr(0, dot));
    std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 15) throw fail();
    digits += frac;
    if (digits.empty() || digits == "-" || digits == "+") throw fail();
    r.num = parse_int(digits);
    r.den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
  } else {
    r.num = parse_int(text);
  }
  if (r.den == 0) throw DomainError("zero denominator in '" + std::string(text) + "'");
  if (r.den < 0) {
    r.den = -r.den;
    r.num = -r.num;
  }
  const std::int64_t g = std::gcd(r.num < 0 ? -r.num : r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

/// Number of mesh steps in `duration`; throws unless `duration` is an
/// integer multiple of `mesh`.
inline Index steps_for(double duration, double mesh, std::string_view what = "duration") {
  if (!(mesh > 0.0)) throw DomainError("mesh must be positive");
  const double q = duration / mesh;
  const double n = std::round(q);
  if (!std::isfinite(q) || std::abs(q - n) > 1e-9 * std::max(1.0, std::abs(q))) {
    throw DomainError(std::string(what) + " " + std::to_string(duration) +
                      " is not an integer multiple of the mesh " + std::to_string(mesh));
  }
  return static_cast<Index>(n);
}

/// Uniform grid over [t_min, t_max] with t_min = -steps_before * mesh <= 0
/// and t_max = steps_after * mesh >= 0. Grid point 0 is t_min; the point
/// `origin()` is t = 0.
class Grid {
 public:
  Grid() = default;

  Grid(double mesh, Index steps_before, Index steps_after)
      : mesh_(mesh), before_(steps_before), after_(steps_after) {
    if (!(mesh > 0.0) || !std::isfinite(mesh)) throw DomainError("mesh must be positive and finite");
    if (steps_before < 0 || steps_after < 0) throw DomainError("grid step counts must be non-negative");
    if (steps_before + steps_after < 1) throw DomainError("grid needs at least two points");
  }

  /// Grid over [-max_lag, t_max]; both must be multiples of the mesh.
  static Grid uniform(double mesh, double t_max, double max_lag = 0.0) {
    return Grid(mesh, steps_for(max_lag, mesh, "delay"), steps_for(t_max, mesh, "horizon"));
  }

  double mesh() const { return mesh_; }
  Index n_points() const { return before_ + after_ + 1; }
  Index origin() const { return before_; }
  Index last() const { return before_ + after_; }
  double t_min() const { return -static_cast<double>(before_) * mesh_; }
  double t_max() const { return static_cast<double>(after_) * mesh_; }
  double time(Index i) const { return static_cast<double>(i - before_) * mesh_; }

  /// Grid index of time t; throws if t is off-grid or outside [t_min, t_max].
  Index index_of(double t) const {
    const Index k = steps_for(t, mesh_, "time");
    if (k < -before_ || k > after_) {
      throw DomainError("time " + std::to_string(t) + " outside grid [" + std::to_string(t_min()) + ", " +
                        std::to_string(t_max()) + "]");
    }
    return k + before_;
  }

  Index steps(double duration) const { return steps_for(duration, mesh_); }

  bool operator==(const Grid& o) const {
    return mesh_ == o.mesh_ && before_ == o.before_ && after_ == o.after_;
  }

 private:
  double mesh_ = 1.0;
  Index before_ = 0;
  Index after_ = 1;
};

/// A (rows x cols)-valued function sampled on the contiguous grid indices
/// [first, last]. Values are stored column-per-grid-point, each column being
/// the column-major flattening of the rows x cols value.
class GridPath {
 public:
  GridPath() = default;

  GridPath(Grid grid, Index first, Index rows, Index cols, Matrix data)
      : grid_(grid), first_(first), rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 1 || cols < 1) throw DomainError("path values need a positive shape");
    if (data_.rows() != rows * cols) throw DomainError("path data has wrong value dimension");
    if (data_.cols() < 1) throw DomainError("path needs at least one point");
    if (first < 0 || first + data_.cols() - 1 > grid.last()) throw DomainError("path exceeds its grid");
    if (!data_.allFinite()) throw DomainError("path values must be finite");
  }

  static GridPath zeros(Grid grid, Index first, Index last, Index rows, Index cols = 1) {
    return GridPath(grid, first, rows, cols, Matrix::Zero(rows * cols, last - first + 1));
  }

  /// Samples f(t) (returning something convertible to a rows x cols matrix)
  /// at every grid index in [first, last].
  template <class F>
  static GridPath from_function(Grid grid, Index first, Index last, Index rows, Index cols, F&& f) {
    Matrix data(rows * cols, last - first + 1);
    for (Index i = first; i <= last; ++i) {
      Matrix v = f(grid.time(i));
      if (v.rows() != rows || v.cols() != cols) throw DomainError("sampled value has wrong shape");
      data.col(i - first) = Eigen::Map<const Vector>(v.data(), rows * cols);
    }
    return GridPath(grid, first, rows, cols, std::move(data));
  }

  const Grid& grid() const { return grid_; }
  Index first() const { return first_; }
  Index last() const { return first_ + data_.cols() - 1; }
  Index size() const { return data_.cols(); }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index dim() const { return rows_ * cols_; }
  bool covers(Index i) const { return i >= first_ && i <= last(); }
  bool covers(Index lo, Index hi) const { return lo >= first_ && hi <= last(); }

  /// Flattened value at grid index i.
  auto column(Index i) const { return data_.col(i - first_); }
  auto column(Index i) { return data_.col(i - first_); }

  /// Value at grid index i viewed with its rows x cols shape.
  Eigen::Map<const Matrix> at(Index i) const { return {data_.col(i - first_).data(), rows_, cols_}; }

  Vector increment(Index s, Index t) const { return column(t) - column(s); }

  GridPath segment(Index lo, Index hi) const {
    if (!covers(lo, hi) || lo > hi) throw DomainError("segment outside path range");
    return GridPath(grid_, lo, rows_, cols_, data_.middleCols(lo - first_, hi - lo + 1));
  }

  const Matrix& data() const { return data_; }
  double sup_norm() const { return data_.cwiseAbs().maxCoeff(); }

  GridPath reshaped(Index rows, Index cols) const { return GridPath(grid_, first_, rows, cols, data_); }

  friend GridPath operator-(const GridPath& a, const GridPath& b) {
    check_same(a, b);
    return GridPath(a.grid_, a.first_, a.rows_, a.cols_, a.data_ - b.data_);
  }
  friend GridPath operator+(const GridPath& a, const GridPath& b) {
    check_same(a, b);
    return GridPath(a.grid_, a.first_, a.rows_, a.cols_, a.data_ + b.data_);
  }
  friend GridPath operator*(double c, const GridPath& a) {
    return GridPath(a.grid_, a.first_, a.rows_, a.cols_, c * a.data_);
  }

 private:
  static void check_same(const GridPath& a, const GridPath& b) {
    if (a.first_ != b.first_ || a.size() != b.size() || a.rows_ != b.rows_ || a.cols_ != b.cols_) {
      throw DomainError("paths differ in range or shape");
    }
  }

  Grid grid_;
  Index first_ = 0;
  Index rows_ = 1;
  Index cols_ = 1;
  Matrix data_;
};

/// Entrywise max norm, the norm used for every vector and matrix value.
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace roughdelay

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "roughdelay/grid.hpp"
#include "roughdelay/philox.hpp"

namespace roughdelay {

/// Partial derivatives of an n x d matrix field with respect to the n
/// state coordinates of one slot: entry m holds the n x d matrix
/// d sigma / d x_{m, slot}.
using Tensor3 = std::vector<Matrix>;

struct SigmaBounds {
  double sup = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// A coefficient field sigma : R^{n x (k+1)} -> R^{n x d}. Column i of the
/// argument is the state at time t - r_i (r_0 = 0).
class SigmaField {
 public:
  using Eval = std::function<Matrix(const Matrix&)>;
  using Jac = std::function<Tensor3(const Matrix&, Index)>;

  SigmaField() = default;
  SigmaField(std::string name, Index n, Index k, Index d, Eval eval, Jac jac, SigmaBounds bounds)
      : name_(std::move(name)), n_(n), k_(k), d_(d), eval_(std::move(eval)), jac_(std::move(jac)), bounds_(bounds) {
    if (n < 1 || k < 0 || d < 1) throw DomainError("sigma field needs n, d >= 1 and k >= 0");
  }

  const std::string& name() const { return name_; }
  Index n() const { return n_; }
  Index k() const { return k_; }
  Index d() const { return d_; }
  const SigmaBounds& bounds() const { return bounds_; }

  Matrix operator()(const Matrix& u) const {
    check(u);
    return eval_(u);
  }

  Tensor3 jacobian(const Matrix& u, Index slot) const {
    check(u);
    if (slot < 0 || slot > k_) throw DomainError("sigma slot out of range");
    return jac_(u, slot);
  }

 private:
  void check(const Matrix& u) const {
    if (u.rows() != n_ || u.cols() != k_ + 1) {
      throw DomainError("sigma argument must be " + std::to_string(n_) + "x" + std::to_string(k_ + 1));
    }
  }

  std::string name_;
  Index n_ = 1, k_ = 0, d_ = 1;
  Eval eval_;
  Jac jac_;
  SigmaBounds bounds_;
};

inline Tensor3 zero_tensor(Index n, Index d) { return Tensor3(static_cast<std::size_t>(n), Matrix::Zero(n, d)); }

inline SigmaField constant_sigma(const Matrix& value, Index k) {
  const Index n = value.rows(), d = value.cols();
  return SigmaField(
      "constant", n, k, d, [value](const Matrix&) { return value; },
      [n, d](const Matrix&, Index) { return zero_tensor(n, d); }, {max_abs(value), 0.0, 0.0});
}

/// sigma(u) = offset + sum_i sum_m u(m, i) slopes[i][m].
inline SigmaField linear_sigma(const Matrix& offset, const std::vector<Tensor3>& slopes) {
  const Index n = offset.rows(), d = offset.cols();
  const Index k = static_cast<Index>(slopes.size()) - 1;
  if (k < 0) throw DomainError("linear sigma needs slopes for slot 0");
  double d1 = 0.0;
  for (const auto& t : slopes) {
    if (static_cast<Index>(t.size()) != n) throw DomainError("linear sigma slope has wrong size");
    for (const auto& m : t) {
      if (m.rows() != n || m.cols() != d) throw DomainError("linear sigma slope has wrong shape");
      d1 = std::max(d1, max_abs(m));
    }
  }
  return SigmaField(
      "linear", n, k, d,
      [offset, slopes](const Matrix& u) {
        Matrix out = offset;
        for (std::size_t i = 0; i < slopes.size(); ++i)
          for (std::size_t m = 0; m < slopes[i].size(); ++m) out += u(m, i) * slopes[i][m];
        return out;
      },
      [slopes](const Matrix&, Index slot) { return slopes[slot]; }, {0.0, d1, 0.0});
}

/// Linear field with seeded coefficients uniform in (-scale, scale).
inline SigmaField random_linear_sigma(Index n, Index k, Index d, std::uint64_t seed, double scale = 0.5) {
  const UniformStream u(seed, 0x11u);
  std::uint64_t j = 0;
  auto draw = [&] { return scale * (2.0 * u(j++) - 1.0); };
  Matrix offset(n, d);
  for (Index e = 0; e < n * d; ++e) offset.data()[e] = draw();
  std::vector<Tensor3> slopes(k + 1, zero_tensor(n, d));
  for (auto& t : slopes)
    for (auto& m : t)
      for (Index e = 0; e < n * d; ++e) m.data()[e] = draw();
  return linear_sigma(offset, slopes);
}

/// sigma_{lb}(u) = sin(u(l, 0) + 0.5 sum_{i >= 1} u((l + b + i) mod n, i) + theta_{lb})
/// with theta_{lb} = 0.5 + 0.3 l + 0.7 b.
inline SigmaField sine_sigma(Index n, Index k, Index d) {
  auto arg = [n, k](const Matrix& u, Index l, Index b) {
    double a = u(l, 0) + 0.5 + 0.3 * static_cast<double>(l) + 0.7 * static_cast<double>(b);
    for (Index i = 1; i <= k; ++i) a += 0.5 * u((l + b + i) % n, i);
    return a;
  };
  const double w = 1.0 + 0.5 * static_cast<double>(k);
  return SigmaField(
      "sine", n, k, d,
      [n, d, arg](const Matrix& u) {
        Matrix out(n, d);
        for (Index l = 0; l < n; ++l)
          for (Index b = 0; b < d; ++b) out(l, b) = std::sin(arg(u, l, b));
        return out;
      },
      [n, d, arg](const Matrix& u, Index slot) {
        Tensor3 t = zero_tensor(n, d);
        for (Index l = 0; l < n; ++l)
          for (Index b = 0; b < d; ++b) {
            const double c = std::cos(arg(u, l, b));
            if (slot == 0) {
              t[l](l, b) += c;
            } else {
              t[(l + b + slot) % n](l, b) += 0.5 * c;
            }
          }
        return t;
      },
      {1.0, 1.0, w * w});
}

/// n = d = 2. Column b of sigma(u) is P_b u_0 + sum_{i >= 1} P_{1-b} u_i with
/// P_0 = [[0, 1], [-1, 0]] and P_1 = [[1, 0], [0, -1]]; P_0 and P_1 do not
/// commute, so the area pairing is sensitive to its index order.
inline SigmaField bilinear_noncommuting_sigma(Index k) {
  Matrix p0(2, 2), p1(2, 2);
  p0 << 0, 1, -1, 0;
  p1 << 1, 0, 0, -1;
  const std::array<Matrix, 2> p{p0, p1};
  std::vector<Tensor3> slopes(k + 1, zero_tensor(2, 2));
  for (Index i = 0; i <= k; ++i)
    for (Index b = 0; b < 2; ++b) {
      const Matrix& pb = i == 0 ? p[b] : p[1 - b];
      for (Index m = 0; m < 2; ++m) slopes[i][m].col(b) = pb.col(m);
    }
  auto field = linear_sigma(Matrix::Zero(2, 2), slopes);
  return SigmaField("bilinear-noncommuting", 2, k, 2, [field](const Matrix& u) { return field(u); },
                    [field](const Matrix& u, Index s) { return field.jacobian(u, s); }, {0.0, 1.0, 0.0});
}

inline std::vector<std::string> sigma_models() { return {"constant", "linear", "sine", "bilinear-noncommuting"}; }

/// Builds a registered model. The constant model uses the n x d matrix with
/// entries 0.5 + 0.1 (l + 2b); the linear model draws its coefficients from
/// `seed`.
inline SigmaField make_sigma(const std::string& name, Index n, Index k, Index d, std::uint64_t seed = 7) {
  if (name == "constant") {
    Matrix c(n, d);
    for (Index l = 0; l < n; ++l)
      for (Index b = 0; b < d; ++b) c(l, b) = 0.5 + 0.1 * static_cast<double>(l + 2 * b);
    return constant_sigma(c, k);
  }
  if (name == "linear") return random_linear_sigma(n, k, d, seed);
  if (name == "sine") return sine_sigma(n, k, d);
  if (name == "bilinear-noncommuting") {
    if (n != 2 || d != 2) throw DomainError("bilinear-noncommuting model needs n = d = 2");
    return bilinear_noncommuting_sigma(k);
  }
  throw DomainError("unknown sigma model '" + name + "'");
}

/// Largest |jac - central difference| / (1 + |jac|) over `points` seeded
/// arguments with entries in (-2, 2).
inline double jacobian_fd_error(const SigmaField& f, std::size_t points = 50, std::uint64_t seed = 99,
                                double step = 1e-5) {
  const UniformStream u(seed, 0x7ac0u);
  std::uint64_t j = 0;
  double worst = 0.0;
  for (std::size_t p = 0; p < points; ++p) {
    Matrix x(f.n(), f.k() + 1);
    for (Index e = 0; e < x.size(); ++e) x.data()[e] = 4.0 * u(j++) - 2.0;
    for (Index slot = 0; slot <= f.k(); ++slot) {
      const Tensor3 jac = f.jacobian(x, slot);
      double scale = 0.0;
      for (const auto& m : jac) scale = std::max(scale, max_abs(m));
      for (Index m = 0; m < f.n(); ++m) {
        Matrix hi = x, lo = x;
        hi(m, slot) += step;
        lo(m, slot) -= step;
        const Matrix fd = (f(hi) - f(lo)) / (2.0 * step);
        worst = std::max(worst, max_abs(fd - jac[m]) / (1.0 + scale));
      }
    }
  }
  return worst;
}

}  // namespace roughdelay

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "roughdelay/grid.hpp"
#include "roughdelay/increment.hpp"
#include "roughdelay/sigma.hpp"

namespace roughdelay {

/// Norm parts of a controlled path over its interval:
/// value_seminorm = ||dz||_kappa, remainder_seminorm = ||rho||_{2 kappa},
/// density_sup = sum_i sup |zeta^(i)|, density_seminorm = sum_i ||d zeta^(i)||_kappa.
struct CPNorm {
  double kappa = 0.0;
  double value_seminorm = 0.0;
  double remainder_seminorm = 0.0;
  double density_sup = 0.0;
  double density_seminorm = 0.0;
  double total = 0.0;
  bool exact = true;
};

inline void check_kappa(double kappa) {
  if (!(kappa > 1.0 / 3.0 && kappa <= 1.0)) {
    throw DomainError("kappa must lie in (1/3, 1], got " + std::to_string(kappa));
  }
}

/// Path z on [a, b] with dz_st = sum_i zeta^(i)_s dx_{s - r_i, t - r_i} + rho_st.
///
/// Values may be matrix-shaped; densities act on the flattened
/// (column-major) value, so density(i) is (value dim) x d. The remainder is
/// never stored; it is derived from the value, the densities and the driver.
/// A classical controlled path is the case of a single lag 0.
class DelayedControlledPath {
 public:
  DelayedControlledPath() = default;

  DelayedControlledPath(GridPath value, std::vector<GridPath> densities, std::vector<Index> lags, GridPath driver)
      : value_(std::move(value)), densities_(std::move(densities)), lags_(std::move(lags)), driver_(std::move(driver)) {
    if (densities_.size() != lags_.size() || lags_.empty()) throw DomainError("one density per lag required");
    if (lags_.front() != 0) throw DomainError("the first lag must be 0");
    if (driver_.cols() != 1) throw DomainError("driver must be vector-valued");
    for (std::size_t i = 0; i < densities_.size(); ++i) {
      const auto& z = densities_[i];
      if (z.first() != value_.first() || z.size() != value_.size()) {
        throw DomainError("density interval differs from the value interval");
      }
      if (z.rows() != value_.dim() || z.cols() != driver_.rows()) throw DomainError("density has wrong shape");
      if (lags_[i] < 0) throw DomainError("lags must be non-negative");
      if (!driver_.covers(a() - lags_[i], b())) throw DomainError("driver does not cover the delayed interval");
    }
  }

  Index a() const { return value_.first(); }
  Index b() const { return value_.last(); }
  const GridPath& value() const { return value_; }
  const GridPath& density(std::size_t i = 0) const { return densities_.at(i); }
  const std::vector<GridPath>& densities() const { return densities_; }
  const std::vector<Index>& lags() const { return lags_; }
  const GridPath& driver() const { return driver_; }
  std::size_t slots() const { return lags_.size(); }

  Vector remainder(Index s, Index t) const {
    Vector r = value_.increment(s, t);
    for (std::size_t i = 0; i < lags_.size(); ++i) {
      r -= densities_[i].at(s) * driver_.increment(s - lags_[i], t - lags_[i]);
    }
    return r;
  }

  DelayedControlledPath restricted(Index lo, Index hi) const {
    std::vector<GridPath> dens;
    for (const auto& z : densities_) dens.push_back(z.segment(lo, hi));
    return {value_.segment(lo, hi), std::move(dens), lags_, driver_};
  }

  friend DelayedControlledPath operator-(const DelayedControlledPath& p, const DelayedControlledPath& q) {
    if (p.lags_ != q.lags_) throw DomainError("controlled paths have different lags");
    std::vector<GridPath> dens;
    for (std::size_t i = 0; i < p.densities_.size(); ++i) dens.push_back(p.densities_[i] - q.densities_[i]);
    return {p.value_ - q.value_, std::move(dens), p.lags_, p.driver_};
  }

  friend DelayedControlledPath operator+(const DelayedControlledPath& p, const DelayedControlledPath& q) {
    if (p.lags_ != q.lags_) throw DomainError("controlled paths have different lags");
    std::vector<GridPath> dens;
    for (std::size_t i = 0; i < p.densities_.size(); ++i) dens.push_back(p.densities_[i] + q.densities_[i]);
    return {p.value_ + q.value_, std::move(dens), p.lags_, p.driver_};
  }

  friend DelayedControlledPath operator*(double c, const DelayedControlledPath& p) {
    std::vector<GridPath> dens;
    for (const auto& z : p.densities_) dens.push_back(c * z);
    return {c * p.value_, std::move(dens), p.lags_, p.driver_};
  }

 private:
  GridPath value_;
  std::vector<GridPath> densities_;
  std::vector<Index> lags_;
  GridPath driver_;
};

using DCP = DelayedControlledPath;

/// Classical controlled path: dz_st = zeta_s dx_st + rho_st.
class ControlledPath {
 public:
  ControlledPath() = default;
  ControlledPath(GridPath value, GridPath density, GridPath driver)
      : inner_(std::move(value), {std::move(density)}, {0}, std::move(driver)) {}

  Index a() const { return inner_.a(); }
  Index b() const { return inner_.b(); }
  const GridPath& value() const { return inner_.value(); }
  const GridPath& density() const { return inner_.density(0); }
  const GridPath& driver() const { return inner_.driver(); }
  Vector remainder(Index s, Index t) const { return inner_.remainder(s, t); }

  /// The same path viewed as a delayed controlled path with zero densities
  /// at the extra lags.
  DelayedControlledPath as_delayed(const std::vector<Index>& lags) const {
    if (lags.empty() || lags.front() != 0) throw DomainError("the first lag must be 0");
    std::vector<GridPath> dens{density()};
    for (std::size_t i = 1; i < lags.size(); ++i) {
      dens.push_back(GridPath::zeros(value().grid(), a(), b(), density().rows(), density().cols()));
    }
    return {value(), std::move(dens), lags, driver()};
  }

  const DelayedControlledPath& delayed() const { return inner_; }

  ControlledPath restricted(Index lo, Index hi) const {
    return {value().segment(lo, hi), density().segment(lo, hi), driver()};
  }

  friend ControlledPath operator-(const ControlledPath& p, const ControlledPath& q) {
    return {p.value() - q.value(), p.density() - q.density(), p.driver()};
  }

 private:
  DelayedControlledPath inner_;
};

using CCP = ControlledPath;

/// Controlled path of x itself: value x on [lo, hi], density the identity.
inline ControlledPath driver_as_ccp(const GridPath& x, Index lo, Index hi) {
  const Index d = x.rows();
  Matrix dens(d * d, hi - lo + 1);
  const Matrix id = Matrix::Identity(d, d);
  for (Index i = 0; i < dens.cols(); ++i) dens.col(i) = Eigen::Map<const Vector>(id.data(), d * d);
  return {x.segment(lo, hi), GridPath(x.grid(), lo, d, d, std::move(dens)), x};
}

/// Controlled path z = f(x) with density grad f(x) (an n x d matrix).
template <class F, class G>
ControlledPath smooth_ccp(const GridPath& x, Index lo, Index hi, Index n, F&& f, G&& grad) {
  const Index d = x.rows();
  Matrix val(n, hi - lo + 1), dens(n * d, hi - lo + 1);
  for (Index i = lo; i <= hi; ++i) {
    const Vector xi = x.column(i);
    val.col(i - lo) = f(xi);
    const Matrix g = grad(xi);
    if (g.rows() != n || g.cols() != d) throw DomainError("gradient has wrong shape");
    dens.col(i - lo) = Eigen::Map<const Vector>(g.data(), n * d);
  }
  return {GridPath(x.grid(), lo, n, 1, std::move(val)), GridPath(x.grid(), lo, n, d, std::move(dens)), x};
}

/// The four parts of the controlled-path norm, scanned over the pairs
/// selected by `policy`.
inline CPNorm dcp_norm(const DelayedControlledPath& z, double kappa, const ScanPolicy& policy = {}) {
  check_kappa(kappa);
  CPNorm out;
  out.kappa = kappa;
  const double mesh = z.value().grid().mesh();
  const std::size_t k = z.slots();
  std::vector<double> dens_sup(k, 0.0), dens_semi(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) dens_sup[i] = z.density(i).sup_norm();
  out.exact = for_each_pair(z.a(), z.b(), policy, [&](Index s, Index t) {
    const double dt = static_cast<double>(t - s) * mesh;
    const double w1 = std::pow(dt, kappa);
    out.value_seminorm = std::max(out.value_seminorm, max_abs(z.value().increment(s, t)) / w1);
    out.remainder_seminorm = std::max(out.remainder_seminorm, max_abs(z.remainder(s, t)) / (w1 * w1));
    for (std::size_t i = 0; i < k; ++i)
      dens_semi[i] = std::max(dens_semi[i], max_abs(z.density(i).increment(s, t)) / w1);
  });
  for (std::size_t i = 0; i < k; ++i) {
    out.density_sup += dens_sup[i];
    out.density_seminorm += dens_semi[i];
  }
  out.total = out.value_seminorm + out.remainder_seminorm + out.density_sup + out.density_seminorm;
  return out;
}

inline CPNorm ccp_norm(const ControlledPath& z, double kappa, const ScanPolicy& policy = {}) {
  return dcp_norm(z.delayed(), kappa, policy);
}

/// Argument of sigma at grid index s: column 0 is z_s, column i >= 1 is
/// past_{s - lag_i}.
inline Matrix sigma_argument(const GridPath& z, const GridPath& past, const std::vector<Index>& lags, Index s) {
  Matrix u(z.dim(), static_cast<Index>(lags.size()));
  u.col(0) = z.column(s);
  for (std::size_t i = 1; i < lags.size(); ++i) u.col(static_cast<Index>(i)) = past.column(s - lags[i]);
  return u;
}

/// Density of sigma(z, past) with respect to x^{(slot)}: entry ((l, b), a)
/// equals sum_m d sigma_{lb} / d x_{m, slot} * inner(m, a), where inner is
/// the n x d density of the argument in that slot.
inline Matrix contract_density(const Tensor3& jac, const Eigen::Ref<const Matrix>& inner) {
  const Index n = jac.front().rows();
  const Index d = jac.front().cols();
  const Index da = inner.cols();
  Matrix out = Matrix::Zero(n * d, da);
  for (std::size_t m = 0; m < jac.size(); ++m) {
    const Eigen::Map<const Vector> flat(jac[m].data(), n * d);
    out += flat * inner.row(static_cast<Index>(m));
  }
  return out;
}

/// Composition T_sigma(z, past): value sigma(z_t, past_{t - r_1}, ...,
/// past_{t - r_k}) on [a, b] as an (n x d)-valued delayed controlled path
/// whose slot-i density is the chain-rule contraction of sigma's slot-i
/// Jacobian with the density of the slot-i argument.
inline DelayedControlledPath t_sigma(const ControlledPath& z, const ControlledPath& past, const SigmaField& sigma,
                                     const std::vector<Index>& lags) {
  if (static_cast<Index>(lags.size()) != sigma.k() + 1) throw DomainError("lag count does not match sigma");
  if (z.value().dim() != sigma.n() || past.value().dim() != sigma.n()) throw DomainError("state dimension mismatch");
  if (z.driver().rows() != sigma.d()) throw DomainError("driver dimension mismatch");
  const Index a = z.a(), b = z.b();
  for (std::size_t i = 1; i < lags.size(); ++i) {
    if (!past.value().covers(a - lags[i], b - lags[i])) {
      throw DomainError("past path does not cover the delayed times for lag " + std::to_string(lags[i]));
    }
  }
  const Index n = sigma.n(), d = sigma.d();
  const Index len = b - a + 1;
  Matrix val(n * d, len);
  std::vector<Matrix> dens(lags.size(), Matrix(n * d * d, len));
  for (Index s = a; s <= b; ++s) {
    const Matrix u = sigma_argument(z.value(), past.value(), lags, s);
    const Matrix v = sigma(u);
    val.col(s - a) = Eigen::Map<const Vector>(v.data(), n * d);
    for (std::size_t i = 0; i < lags.size(); ++i) {
      const Matrix inner = i == 0 ? Matrix(z.density().at(s)) : Matrix(past.density().at(s - lags[i]));
      const Matrix c = contract_density(sigma.jacobian(u, static_cast<Index>(i)), inner);
      dens[i].col(s - a) = Eigen::Map<const Vector>(c.data(), c.size());
    }
  }
  std::vector<GridPath> dp;
  for (auto& m : dens) dp.emplace_back(z.value().grid(), a, n * d, d, std::move(m));
  return {GridPath(z.value().grid(), a, n, d, std::move(val)), std::move(dp), lags, z.driver()};
}

/// T_sigma with the path supplying its own past.
inline DelayedControlledPath t_sigma(const ControlledPath& z, const SigmaField& sigma, const std::vector<Index>& lags) {
  return t_sigma(z, z, sigma, lags);
}

struct LipschitzProbe {
  double ratio = 0.0;            // N[T(z1) - T(z2)] / N[z1 - z2]
  double envelope_constant = 0;  // C = N[past] + N[z1] + N[z2]
  double envelope_shape = 0.0;   // (1 + C)^2
  bool skipped = false;          // z1 == z2
};

inline LipschitzProbe t_sigma_lipschitz_probe(const ControlledPath& z1, const ControlledPath& z2,
                                              const ControlledPath& past, const SigmaField& sigma,
                                              const std::vector<Index>& lags, double kappa,
                                              const ScanPolicy& policy = {}) {
  if (z1.a() != z2.a() || z1.b() != z2.b()) throw DomainError("paths must share their interval");
  LipschitzProbe out;
  const double den = ccp_norm(z1 - z2, kappa, policy).total;
  out.envelope_constant =
      ccp_norm(past, kappa, policy).total + ccp_norm(z1, kappa, policy).total + ccp_norm(z2, kappa, policy).total;
  out.envelope_shape = (1.0 + out.envelope_constant) * (1.0 + out.envelope_constant);
  if (den == 0.0) {
    out.skipped = true;
    return out;
  }
  const auto diff = t_sigma(z1, past, sigma, lags) - t_sigma(z2, past, sigma, lags);
  out.ratio = dcp_norm(diff, kappa, policy).total / den;
  return out;
}

/// Taylor remainder of sigma along (z, past) between s and t:
/// sigma(U_t) - sigma(U_s) - sum_i J_i(U_s) . (U_t - U_s)_i.
inline Matrix sigma_taylor_remainder(const GridPath& z, const GridPath& past, const SigmaField& sigma,
                                     const std::vector<Index>& lags, Index s, Index t) {
  const Matrix us = sigma_argument(z, past, lags, s);
  const Matrix ut = sigma_argument(z, past, lags, t);
  Matrix r = sigma(ut) - sigma(us);
  for (Index i = 0; i <= sigma.k(); ++i) {
    const Tensor3 jac = sigma.jacobian(us, i);
    for (Index m = 0; m < sigma.n(); ++m) r -= (ut(m, i) - us(m, i)) * jac[m];
  }
  return r;
}

}  // namespace roughdelay

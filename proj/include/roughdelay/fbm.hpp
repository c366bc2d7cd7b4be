#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/FFT>

#include "roughdelay/grid.hpp"
#include "roughdelay/philox.hpp"

namespace roughdelay {

/// Covariance of fractional Brownian motion:
/// R_H(s, t) = (|s|^{2H} + |t|^{2H} - |t - s|^{2H}) / 2.
inline double fbm_covariance(double hurst, double s, double t) {
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(s), e) + std::pow(std::abs(t), e) - std::pow(std::abs(t - s), e));
}

enum class FbmMethod { cholesky, circulant };

inline const char* to_string(FbmMethod m) { return m == FbmMethod::cholesky ? "cholesky" : "circulant"; }

inline FbmMethod parse_fbm_method(const std::string& s) {
  if (s == "cholesky") return FbmMethod::cholesky;
  if (s == "circulant") return FbmMethod::circulant;
  throw DomainError("unknown fBm method '" + s + "'");
}

struct FbmSpec {
  double hurst = 0.5;
  Index dim = 1;
  Grid grid;
  std::uint64_t seed = 0;
  FbmMethod method = FbmMethod::cholesky;

  void validate() const {
    if (!(hurst > 1.0 / 3.0 && hurst < 1.0)) {
      throw DomainError("Hurst parameter must lie in (1/3, 1), got " + std::to_string(hurst));
    }
    if (dim < 1) throw DomainError("fBm dimension must be at least 1");
  }
};

/// Samples d independent fBm components on the grid [t_min, t_max], pinned
/// to zero at t = 0.
///
/// An fBm W is drawn on the shifted grid tau_j = j * mesh, j = 0..N, over
/// [0, t_max - t_min] and re-anchored as B_{t_i} = W_{tau_i} - W_{tau_o}
/// (o = grid index of t = 0). By stationarity of increments B has the
/// two-sided covariance R_H on all grid times.
///
/// The factorization (Cholesky) or the embedding spectrum (circulant) is
/// computed once; sample(trial) is then a pure function of (seed, trial).
class FbmSampler {
 public:
  explicit FbmSampler(FbmSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    n_ = spec_.grid.n_points() - 1;
    if (spec_.method == FbmMethod::cholesky) {
      factor_cholesky();
    } else {
      factor_circulant();
    }
  }

  const FbmSpec& spec() const { return spec_; }
  bool jitter_applied() const { return jitter_; }

  /// Covariance matrix of W at tau_1..tau_N.
  Matrix shifted_covariance() const {
    Matrix r(n_, n_);
    const double h = spec_.grid.mesh();
    for (Index i = 0; i < n_; ++i)
      for (Index j = 0; j <= i; ++j) r(i, j) = r(j, i) = fbm_covariance(spec_.hurst, (i + 1) * h, (j + 1) * h);
    return r;
  }

  /// max |L L^T - R| of the Cholesky factor (cholesky method only).
  double factor_residual() const {
    if (spec_.method != FbmMethod::cholesky) throw DomainError("factor residual needs the cholesky method");
    const Matrix l = factor_.triangularView<Eigen::Lower>();
    return max_abs(Matrix(l * l.transpose()) - shifted_covariance());
  }

  /// max |C - R| where C is the covariance of the anchored process implied
  /// by the factor and R the two-sided covariance over all grid times.
  double anchored_covariance_residual() const {
    if (spec_.method != FbmMethod::cholesky) throw DomainError("covariance residual needs the cholesky method");
    const Index np = n_ + 1;
    const Index o = spec_.grid.origin();
    Matrix a = Matrix::Zero(np, n_);
    for (Index i = 1; i < np; ++i) a(i, i - 1) += 1.0;
    if (o > 0) a.col(o - 1).array() -= 1.0;
    const Matrix l = factor_.triangularView<Eigen::Lower>();
    const Matrix al = a * l;
    const Matrix c = al * al.transpose();
    double worst = 0.0;
    for (Index i = 0; i < np; ++i)
      for (Index j = 0; j < np; ++j)
        worst = std::max(worst, std::abs(c(i, j) - fbm_covariance(spec_.hurst, spec_.grid.time(i), spec_.grid.time(j))));
    return worst;
  }

  GridPath sample(std::uint64_t trial) const {
    const Index d = spec_.dim;
    const Index np = n_ + 1;
    const Index o = spec_.grid.origin();
    Matrix data(d, np);
    for (Index c = 0; c < d; ++c) {
      const GaussianStream stream(spec_.seed, trial, static_cast<std::uint32_t>(c));
      const Vector w = spec_.method == FbmMethod::cholesky ? draw_cholesky(stream) : draw_circulant(stream);
      const double anchor = o > 0 ? w(o - 1) : 0.0;
      data(c, 0) = -anchor;
      for (Index i = 1; i < np; ++i) data(c, i) = w(i - 1) - anchor;
      data(c, o) = 0.0;
    }
    return GridPath(spec_.grid, 0, d, 1, std::move(data));
  }

 private:
  void factor_cholesky() {
    Matrix r = shifted_covariance();
    Eigen::LLT<Matrix> llt(r);
    if (llt.info() != Eigen::Success) {
      jitter_ = true;
      r.diagonal().array() += 1e-12 * r.diagonal().maxCoeff();
      llt.compute(r);
      if (llt.info() != Eigen::Success) {
        throw DomainError("fBm covariance is not positive definite after jitter; first failing leading minor " +
                          std::to_string(failing_minor(r)));
      }
    }
    factor_ = llt.matrixL();
  }

  static Index failing_minor(const Matrix& r) {
    const Index n = r.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
      double diag = r(j, j) - l.row(j).head(j).squaredNorm();
      if (!(diag > 0.0)) return j + 1;
      l(j, j) = std::sqrt(diag);
      for (Index i = j + 1; i < n; ++i) l(i, j) = (r(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return n;
  }

  void factor_circulant() {
    const double h = spec_.grid.mesh();
    const double e = 2.0 * spec_.hurst;
    const Index m = 2 * n_;
    auto autocov = [&](Index k) {
      const double kk = static_cast<double>(k);
      return 0.5 * std::pow(h, e) * (std::pow(kk + 1.0, e) - 2.0 * std::pow(kk, e) + std::pow(std::abs(kk - 1.0), e));
    };
    std::vector<std::complex<double>> row(m);
    for (Index k = 0; k <= n_; ++k) row[k] = autocov(k);
    for (Index k = n_ + 1; k < m; ++k) row[k] = autocov(m - k);
    std::vector<std::complex<double>> spectrum;
    Eigen::FFT<double> fft;
    fft.fwd(spectrum, row);
    sqrt_eigen_.resize(m);
    double top = 0.0;
    for (const auto& z : spectrum) top = std::max(top, std::abs(z.real()));
    for (Index k = 0; k < m; ++k) {
      const double lambda = spectrum[k].real();
      if (lambda < -1e-10 * top) {
        throw DomainError("circulant embedding has a negative eigenvalue at index " + std::to_string(k));
      }
      sqrt_eigen_(k) = std::sqrt(std::max(lambda, 0.0) / static_cast<double>(m));
    }
  }

  Vector draw_cholesky(const GaussianStream& stream) const {
    Vector z(n_);
    stream.fill(std::span<double>(z.data(), static_cast<std::size_t>(n_)));
    return factor_.triangularView<Eigen::Lower>() * z;
  }

  Vector draw_circulant(const GaussianStream& stream) const {
    const Index m = 2 * n_;
    std::vector<double> g(static_cast<std::size_t>(2 * m));
    stream.fill(g);
    std::vector<std::complex<double>> in(m);
    for (Index k = 0; k < m; ++k) in[k] = sqrt_eigen_(k) * std::complex<double>(g[2 * k], g[2 * k + 1]);
    std::vector<std::complex<double>> out;
    Eigen::FFT<double> fft;
    fft.fwd(out, in);
    Vector w(n_);
    double acc = 0.0;
    for (Index j = 0; j < n_; ++j) {
      acc += out[j].real();
      w(j) = acc;
    }
    return w;
  }

  FbmSpec spec_;
  Index n_ = 0;
  Matrix factor_;
  Vector sqrt_eigen_;
  bool jitter_ = false;
};

inline GridPath sample_fbm(const FbmSpec& spec, std::uint64_t trial = 0) { return FbmSampler(spec).sample(trial); }

struct RescaleReport {
  double max_discrepancy = 0.0;
  std::vector<double> times;
  std::vector<double> discrepancy;
};

/// Compares the variance profile of c^H B_{t/c} (from `ensemble`) with that
/// of `fresh` on every grid time t >= 0 for which t/c is also a grid time.
/// Discrepancies are standardized by the Monte-Carlo standard errors of the
/// two sample variances. c must be a power of two.
inline RescaleReport rescale_check(const std::vector<GridPath>& ensemble, const std::vector<GridPath>& fresh,
                                   double c, double hurst, Index component = 0) {
  if (ensemble.empty() || fresh.empty()) throw DomainError("rescale check needs non-empty ensembles");
  const double lg = std::log2(c);
  if (!(c > 0.0) || std::abs(lg - std::round(lg)) > 1e-12) throw DomainError("rescale factor must be a power of two");
  const Grid& grid = ensemble.front().grid();
  const Index o = grid.origin();
  const Index last = grid.last() - o;
  const int p = static_cast<int>(std::round(lg));

  auto moments = [](const std::vector<double>& xs) {
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
      m2 += x * x;
      m4 += x * x * x * x;
    }
    const double n = static_cast<double>(xs.size());
    m2 /= n;
    m4 /= n;
    return std::pair{m2, std::max(m4 - m2 * m2, 0.0) / n};
  };

  RescaleReport rep;
  const double scale = std::pow(c, hurst);
  for (Index j = 1; j <= last; ++j) {
    Index src = 0;
    if (p >= 0) {
      if (j % (Index{1} << p) != 0) continue;
      src = j >> p;
    } else {
      src = j << (-p);
      if (src > last) break;
    }
    std::vector<double> a, b;
    for (const auto& path : ensemble) a.push_back(scale * path.column(o + src)(component));
    for (const auto& path : fresh) b.push_back(path.column(o + j)(component));
    const auto [va, sa] = moments(a);
    const auto [vb, sb] = moments(b);
    const double se = std::sqrt(sa + sb);
    const double z = va == vb ? 0.0 : std::abs(va - vb) / se;
    rep.times.push_back(grid.time(o + j));
    rep.discrepancy.push_back(z);
    rep.max_discrepancy = std::max(rep.max_discrepancy, z);
  }
  return rep;
}

}  // namespace roughdelay

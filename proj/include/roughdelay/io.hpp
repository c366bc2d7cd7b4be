#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "roughdelay/fbm.hpp"
#include "roughdelay/levy.hpp"
#include "roughdelay/solver.hpp"

namespace roughdelay {

/// Shortest round-trippable text: 17 significant digits.
inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// `t,comp_1..comp_d`, one row per grid point of the path.
inline void write_path_csv(std::ostream& os, const GridPath& path, const std::string& prefix = "comp_") {
  os << "t";
  for (Index c = 0; c < path.dim(); ++c) os << ',' << prefix << c + 1;
  os << '\n';
  for (Index i = path.first(); i <= path.last(); ++i) {
    os << fmt17(path.grid().time(i));
    for (Index c = 0; c < path.dim(); ++c) os << ',' << fmt17(path.column(i)(c));
    os << '\n';
  }
}

/// `k,v,a,b,value`: one row per one-cell matrix entry, k the cell's grid
/// index relative to t = 0, a the delayed inner component, b the outer one
/// (both 1-based).
inline void write_area_csv(std::ostream& os, const DelayedArea& area) {
  os << "k,v,a,b,value\n";
  const Index o = area.grid().origin();
  for (std::size_t slot = 0; slot < area.slots(); ++slot) {
    const double v = -static_cast<double>(area.lags()[slot]) * area.grid().mesh();
    for (Index k = area.lo(slot); k < area.hi(); ++k) {
      const Matrix m = area.cell(slot, k);
      for (Index a = 0; a < m.rows(); ++a)
        for (Index b = 0; b < m.cols(); ++b)
          os << k - o << ',' << fmt17(v) << ',' << a + 1 << ',' << b + 1 << ',' << fmt17(m(a, b)) << '\n';
    }
  }
}

inline nlohmann::json fbm_sidecar(const FbmSpec& spec) {
  return {{"H", spec.hurst},
          {"d", spec.dim},
          {"mesh", spec.grid.mesh()},
          {"t_min", spec.grid.t_min()},
          {"t_max", spec.grid.t_max()},
          {"seed", spec.seed},
          {"method", to_string(spec.method)}};
}

inline nlohmann::json area_sidecar(const DelayedArea& area) {
  nlohmann::json delays = nlohmann::json::array();
  for (Index lag : area.lags()) delays.push_back(-static_cast<double>(lag) * area.grid().mesh());
  return {{"delays", delays},
          {"index_convention", area.flipped() ? "outer-first" : "inner-first"},
          {"meaning", "value(a,b) over [s,t] approximates int_s^t (x^a_{u+v} - x^a_{s+v}) dx^b_u; "
                      "a = delayed inner component, b = outer integrator"},
          {"cell_rule", "A_v[k](a,b) = 1/2 (x^a_{k+1+v} - x^a_{k+v}) (x^b_{k+1} - x^b_k)"}};
}

/// `t, y_1..y_n, zeta_11..zeta_nd` on [0, T].
inline void write_solution_csv(std::ostream& os, const Solution& sol) {
  const auto& y = sol.state.value();
  const auto& z = sol.state.density();
  os << "t";
  for (Index l = 0; l < y.dim(); ++l) os << ",y_" << l + 1;
  for (Index l = 0; l < z.rows(); ++l)
    for (Index b = 0; b < z.cols(); ++b) os << ",zeta_" << l + 1 << b + 1;
  os << '\n';
  for (Index i = y.first(); i <= y.last(); ++i) {
    os << fmt17(y.grid().time(i));
    for (Index l = 0; l < y.dim(); ++l) os << ',' << fmt17(y.column(i)(l));
    const auto m = z.at(i);
    for (Index l = 0; l < m.rows(); ++l)
      for (Index b = 0; b < m.cols(); ++b) os << ',' << fmt17(m(l, b));
    os << '\n';
  }
}

inline nlohmann::json windows_json(const Solution& sol) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& w : sol.windows) {
    out.push_back({{"t_lo", w.t_lo},
                   {"t_hi", w.t_hi},
                   {"tau", w.tau},
                   {"iterations", w.iterations},
                   {"retries", w.retries},
                   {"final_ratio", w.final_ratio},
                   {"max_ratio", w.max_ratio},
                   {"differences", w.differences}});
  }
  return out;
}

inline nlohmann::json norm_json(const CPNorm& n) {
  return {{"kappa", n.kappa},
          {"value_seminorm", n.value_seminorm},
          {"remainder_seminorm", n.remainder_seminorm},
          {"density_sup", n.density_sup},
          {"density_seminorm", n.density_seminorm},
          {"total", n.total},
          {"exact", n.exact}};
}

template <class Writer>
void write_file(const std::string& path, Writer&& write) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(os);
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

}  // namespace roughdelay

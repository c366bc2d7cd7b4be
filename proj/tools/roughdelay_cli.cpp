#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "roughdelay/roughdelay.hpp"

namespace fs = std::filesystem;
using namespace roughdelay;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;
constexpr int kBreach = 1;
constexpr int kFailure = 3;

struct RunConfig {
  std::string command;
  double hurst = 0.45;
  Index n = 2, d = 2;
  std::string delays = "1/4";
  std::string mesh = "1/256";
  std::string horizon = "1";
  std::optional<double> kappa;
  std::string sigma = "sine";
  std::uint64_t seed = 42;
  std::size_t trials = 1;
  std::string method = "cholesky";
  std::string driver = "fbm";
  std::string out;
  // command specific
  std::string suite = "all";
  std::string mode = "onestep";
  std::string xi = "0.5";
  int levels = -1;
  std::string eps = "1e-1,1e-2,1e-3";
  std::string perturb = "both";
  double max_spread = 20.0;
  double min_order = -1.0;
};

struct Resolved {
  Rational mesh, horizon;
  std::vector<Rational> delays;
  double kappa = 0.4;
  double gamma = 1.0;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(v)) throw DomainError(std::string("bad number in ") + what + ": '" + item + "'");
    out.push_back(v);
  }
  return out;
}

Resolved resolve(const RunConfig& c) {
  Resolved r;
  r.mesh = parse_rational(c.mesh);
  r.horizon = parse_rational(c.horizon);
  if (r.mesh.num <= 0) throw DomainError("mesh must be positive");
  if (r.horizon.num <= 0) throw DomainError("horizon must be positive");
  for (const auto& s : split(c.delays)) r.delays.push_back(parse_rational(s));
  for (const auto& q : r.delays) steps_for(q.value(), r.mesh.value(), "delay");
  steps_for(r.horizon.value(), r.mesh.value(), "horizon");
  if (c.driver != "fbm" && c.driver != "smooth") throw DomainError("driver must be fbm or smooth");
  if (c.driver == "smooth" && c.d != 2) throw DomainError("the smooth driver is two-dimensional, use --d 2");
  r.gamma = c.driver == "fbm" ? c.hurst : 1.0;
  r.kappa = c.kappa ? *c.kappa : (1.0 / 3.0 + std::min(r.gamma, 0.5)) / 2.0;
  check_kappa(r.kappa);
  if (!(r.kappa < r.gamma)) throw DomainError("kappa must be below the driver regularity");
  parse_fbm_method(c.method);
  make_sigma(c.sigma, c.n, static_cast<Index>(r.delays.size()), c.d, c.seed);
  return r;
}

std::string rational_text(const Rational& q) {
  return q.den == 1 ? std::to_string(q.num) : std::to_string(q.num) + "/" + std::to_string(q.den);
}

json echo(const RunConfig& c, const Resolved& r) {
  json delays = json::array();
  for (const auto& q : r.delays) delays.push_back(rational_text(q));
  json j{{"command", c.command}, {"H", c.hurst},       {"n", c.n},           {"d", c.d},
         {"delays", delays},     {"mesh", rational_text(r.mesh)},           {"T", rational_text(r.horizon)},
         {"kappa", r.kappa},     {"sigma", c.sigma},     {"seed", c.seed},     {"trials", c.trials},
         {"method", c.method},   {"driver", c.driver}};
  if (c.command == "verify") j["suite"] = c.suite;
  if (c.command == "solve") {
    j["mode"] = c.mode;
    j["xi"] = parse_doubles(c.xi, "xi");
  }
  if (c.command == "convergence") {
    j["levels"] = c.levels;
    j["min_order"] = c.min_order;
  }
  if (c.command == "itomap") {
    j["eps"] = parse_doubles(c.eps, "eps");
    j["perturb"] = c.perturb;
    j["max_spread"] = c.max_spread;
    j["mode"] = "onestep";
    j["xi"] = parse_doubles(c.xi, "xi");
  }
  return j;
}

fs::path output_dir(const RunConfig& c) {
  const char* root = std::getenv("DELAYRP_OUT");
  fs::path dir = fs::path(root && *root ? root : ".") / (c.out.empty() ? c.command : c.out);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> delay_values(const Resolved& r) {
  std::vector<double> out;
  for (const auto& q : r.delays) out.push_back(q.value());
  return out;
}

Grid make_grid(const Resolved& r) {
  return Grid::uniform(r.mesh.value(), r.horizon.value(), r.delays.empty() ? 0.0 : r.delays.back().value());
}

DriverBundle build_driver(const RunConfig& c, const Resolved& r, std::uint64_t trial = 0) {
  const Grid grid = make_grid(r);
  if (c.driver == "smooth") return make_driver(sin_cos_path(grid), delay_values(r));
  const FbmSampler sampler(FbmSpec{c.hurst, c.d, grid, c.seed, parse_fbm_method(c.method)});
  return make_fbm_driver(sampler, delay_values(r), trial);
}

DelayRDEProblem build_problem(const RunConfig& c, const Resolved& r) {
  const auto delays = delay_values(r);
  const SigmaField sigma = make_sigma(c.sigma, c.n, static_cast<Index>(delays.size()), c.d, c.seed);
  auto xi0 = parse_doubles(c.xi, "xi");
  if (xi0.size() == 1) xi0.assign(static_cast<std::size_t>(c.n), xi0[0]);
  if (static_cast<Index>(xi0.size()) != c.n) throw DomainError("--xi needs 1 or n values");
  DriverBundle driver = build_driver(c, r);
  const Grid& grid = driver.path.grid();
  const Vector v = Eigen::Map<const Vector>(xi0.data(), c.n);
  GridPath xi = GridPath::from_function(grid, 0, grid.origin(), c.n, 1, [&](double) { return Matrix(v); });
  DelayRDEProblem p{sigma, delays, std::move(xi), std::move(driver), r.horizon.value(), r.kappa};
  p.validate();
  return p;
}

int cmd_verify(const RunConfig& c, const Resolved& r) {
  VerifyConfig vc;
  vc.hurst = c.hurst;
  vc.mesh = r.mesh.value();
  vc.horizon = r.horizon.value();
  vc.max_delay = r.delays.empty() ? 0.25 : r.delays.back().value();
  vc.seed = c.seed;
  vc.trials = c.trials > 1 ? c.trials : vc.trials;
  const auto results = run_suite(c.suite, vc);
  const fs::path dir = output_dir(c);
  write_json((dir / "config.json").string(), echo(c, r));
  bool ok = true;
  write_file((dir / "verify.csv").string(), [&](std::ostream& os) {
    os << "suite,check,value,limit,passed\n";
    for (const auto& x : results)
      os << x.suite << ",\"" << x.name << "\"," << fmt17(x.value) << ',' << fmt17(x.limit) << ',' << x.passed << '\n';
  });
  for (const auto& x : results) {
    std::cout << (x.passed ? "PASS " : "FAIL ") << x.suite << ": " << x.name << " = " << x.value << " (limit "
              << x.limit << ")\n";
    ok = ok && x.passed;
  }
  return ok ? 0 : kBreach;
}

int cmd_simulate(const RunConfig& c, const Resolved& r) {
  const fs::path dir = output_dir(c);
  write_json((dir / "config.json").string(), echo(c, r));
  const std::size_t trials = std::max<std::size_t>(1, c.trials);
  for (std::size_t k = 0; k < trials; ++k) {
    const DriverBundle b = build_driver(c, r, k);
    char tag[32];
    std::snprintf(tag, sizeof tag, "%04zu", k);
    write_file((dir / ("path_" + std::string(tag) + ".csv")).string(),
               [&](std::ostream& os) { write_path_csv(os, b.path); });
    write_file((dir / ("area_" + std::string(tag) + ".csv")).string(),
               [&](std::ostream& os) { write_area_csv(os, b.areas); });
  }
  const DriverBundle b = build_driver(c, r, 0);
  json meta{{"area", area_sidecar(b.areas)}};
  if (b.spec) meta["fbm"] = fbm_sidecar(*b.spec);
  write_json((dir / "driver.json").string(), meta);
  std::cout << "wrote " << trials << " driver sample(s) to " << dir.string() << '\n';
  return 0;
}

int cmd_solve(const RunConfig& c, const Resolved& r) {
  if (c.mode != "onestep" && c.mode != "picard") throw DomainError("mode must be onestep or picard");
  const DelayRDEProblem p = build_problem(c, r);
  const Solution sol = c.mode == "picard" ? solve_picard(p) : solve_onestep(p);
  const fs::path dir = output_dir(c);
  write_json((dir / "config.json").string(), echo(c, r));
  write_file((dir / "solution.csv").string(), [&](std::ostream& os) { write_solution_csv(os, sol); });
  write_json((dir / "diagnostics.json").string(), {{"windows", windows_json(sol)}, {"norm", norm_json(sol.norms)}});
  std::cout << "solved " << c.sigma << " (" << c.mode << ") on " << p.end() - p.origin() << " cells, "
            << sol.windows.size() << " windows, norm " << sol.norms.total << '\n';
  return 0;
}

int cmd_convergence(const RunConfig& c, const Resolved& r) {
  if (c.n != c.d) throw DomainError("convergence integrates sigma(x) dx and needs n == d");
  const auto lags_r = delay_values(r);
  const SigmaField sigma = make_sigma(c.sigma, c.n, static_cast<Index>(lags_r.size()), c.d, c.seed);
  const DriverBundle b = build_driver(c, r);
  const Index first = b.path.first(), o = b.path.grid().origin(), end = b.path.last();
  std::vector<Index> all_lags{0};
  for (double q : lags_r) all_lags.push_back(steps_for(q, r.mesh.value(), "delay"));
  const ControlledPath z = driver_as_ccp(b.path, o, end);
  const ControlledPath past = driver_as_ccp(b.path, first, end);
  const auto m = t_sigma(z, past, sigma, all_lags);
  const auto rows = riemann_convergence_study(m, b.areas, o, end, c.levels);

  const double min_order = c.min_order >= 0.0 ? c.min_order : (c.driver == "smooth" ? 1.0 : 0.0);
  std::vector<std::pair<double, double>> fit;
  for (const auto& row : rows)
    if (row.level >= 2 && row.difference > 0.0) fit.emplace_back(row.level, std::log2(row.difference));
  const bool with_order = fit.size() >= 2;
  double order = 0.0;
  if (with_order) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : fit) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double k = static_cast<double>(fit.size());
    order = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
  }

  const fs::path dir = output_dir(c);
  json cfg = echo(c, r);
  cfg["min_order"] = min_order;
  write_json((dir / "config.json").string(), cfg);
  write_file((dir / "convergence.csv").string(), [&](std::ostream& os) {
    os << "level,pieces,difference" << (with_order ? ",ratio,order" : "") << '\n';
    for (const auto& row : rows) {
      if (row.level == 0) continue;
      os << row.level << ',' << row.pieces << ',' << fmt17(row.difference);
      if (with_order) os << ',' << (row.level >= 2 ? fmt17(row.ratio) + ',' + fmt17(row.order) : std::string(","));
      os << '\n';
    }
  });
  for (const auto& row : rows)
    if (row.level > 0) std::cout << "level " << row.level << "  difference " << row.difference << '\n';
  if (!with_order) return 0;
  std::cout << "fitted order " << order << " (threshold " << min_order << ")\n";
  if (order < min_order) {
    std::cerr << "threshold breach: fitted order " << order << " < " << min_order << " over levels >= 2, last row level "
              << rows.back().level << " difference " << rows.back().difference << '\n';
    return kBreach;
  }
  return 0;
}

int cmd_itomap(const RunConfig& c, const Resolved& r) {
  Perturb mode = Perturb::both;
  if (c.perturb == "driver") {
    mode = Perturb::driver_only;
  } else if (c.perturb == "xi") {
    mode = Perturb::xi_only;
  } else if (c.perturb != "both") {
    throw DomainError("perturb must be both, driver or xi");
  }
  const DelayRDEProblem p = build_problem(c, r);
  const auto eps = parse_doubles(c.eps, "eps");
  const auto rows = ito_map_experiment(p, eps, r.gamma, mode);
  const fs::path dir = output_dir(c);
  write_json((dir / "config.json").string(), echo(c, r));
  write_file((dir / "itomap.csv").string(), [&](std::ostream& os) {
    os << "eps,response,input_distance,ratio\n";
    for (const auto& row : rows) {
      os << fmt17(row.eps) << ',' << fmt17(row.response) << ',' << fmt17(row.rhs) << ','
         << (row.skipped ? std::string("nan") : fmt17(row.ratio)) << '\n';
    }
  });
  const ItoRow* lo = nullptr;
  const ItoRow* hi = nullptr;
  for (const auto& row : rows) {
    std::cout << "eps " << row.eps << "  response " << row.response << "  ratio "
              << (row.skipped ? std::string("skipped") : std::to_string(row.ratio)) << '\n';
    if (row.skipped) continue;
    if (!lo || row.ratio < lo->ratio) lo = &row;
    if (!hi || row.ratio > hi->ratio) hi = &row;
  }
  if (lo && hi && hi->ratio > c.max_spread * lo->ratio) {
    std::cerr << "threshold breach: ratio spread " << hi->ratio / lo->ratio << " > " << c.max_spread << " (eps "
              << hi->eps << " ratio " << hi->ratio << " vs eps " << lo->eps << " ratio " << lo->ratio << ")\n";
    return kBreach;
  }
  return 0;
}

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--H", c.hurst, "Hurst index of the fBm driver")->capture_default_str();
  sub->add_option("--n", c.n, "state dimension")->capture_default_str();
  sub->add_option("--d", c.d, "driver dimension")->capture_default_str();
  sub->add_option("--delays", c.delays, "comma-separated delays, e.g. 1/4,1/2 (empty for none)")->capture_default_str();
  sub->add_option("--mesh", c.mesh, "grid mesh as a rational, e.g. 1/256")->capture_default_str();
  sub->add_option("--T", c.horizon, "horizon")->capture_default_str();
  sub->add_option("--kappa", c.kappa, "working exponent in (1/3, regularity)");
  sub->add_option("--sigma", c.sigma, "coefficient model")
      ->check(CLI::IsMember(sigma_models()))
      ->capture_default_str();
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_option("--trials", c.trials, "number of trials")->capture_default_str();
  sub->add_option("--method", c.method, "fBm sampler")
      ->check(CLI::IsMember({"cholesky", "circulant"}))
      ->capture_default_str();
  sub->add_option("--driver", c.driver, "fbm or smooth (sin t, cos 2t)")
      ->check(CLI::IsMember({"fbm", "smooth"}))
      ->capture_default_str();
  sub->add_option("--out", c.out, "output directory below $DELAYRP_OUT (default: the command name)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rough delay equations driven by fractional Brownian motion"};
  app.set_config("--config", "", "INI/TOML file with option = value lines, optionally in [command] sections");
  app.require_subcommand(1);
  RunConfig c;

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  add_common(verify, c);
  verify->add_option("--suite", c.suite, "chen, sewing, covariance, chainrule or all")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "sample drivers and their delayed areas");
  add_common(simulate, c);

  auto* solve = app.add_subcommand("solve", "solve the delay equation");
  add_common(solve, c);
  solve->add_option("--mode", c.mode, "onestep or picard")
      ->check(CLI::IsMember({"onestep", "picard"}))
      ->capture_default_str();
  solve->add_option("--xi", c.xi, "constant initial path: one value or n comma-separated values")->capture_default_str();

  auto* convergence = app.add_subcommand("convergence", "dyadic ladder of corrected Riemann sums");
  add_common(convergence, c);
  convergence->add_option("--levels", c.levels, "number of dyadic levels (default: all)");
  convergence->add_option("--min-order", c.min_order, "order threshold (default 1 for smooth, 0 for fbm)");

  auto* itomap = app.add_subcommand("itomap", "Lipschitz sweep of the solution map");
  add_common(itomap, c);
  itomap->add_option("--eps", c.eps, "comma-separated perturbation sizes")->capture_default_str();
  itomap->add_option("--perturb", c.perturb, "both, driver or xi")
      ->check(CLI::IsMember({"both", "driver", "xi"}))
      ->capture_default_str();
  itomap->add_option("--xi", c.xi, "constant initial path")->capture_default_str();
  itomap->add_option("--max-spread", c.max_spread, "largest allowed max/min ratio")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  c.command = sub->get_name();
  Resolved r;
  try {
    r = resolve(c);
    if (c.command == "verify") {
      const auto names = verify_suites();
      if (std::find(names.begin(), names.end(), c.suite) == names.end()) throw DomainError("unknown suite '" + c.suite + "'");
    }
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n' << sub->help();
    return kUsage;
  }

  try {
    if (c.command == "verify") return cmd_verify(c, r);
    if (c.command == "simulate") return cmd_simulate(c, r);
    if (c.command == "solve") return cmd_solve(c, r);
    if (c.command == "convergence") return cmd_convergence(c, r);
    return cmd_itomap(c, r);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

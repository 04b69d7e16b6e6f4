// Command-line front end: model loading, experiment configuration, and
// CSV/JSON artifact emission for the forward reduced entropy toolkit.
//
// Exit codes: 0 all checks pass, 1 property failure, 2 configuration error,
// 3 numerical nonconvergence.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfent/rfent.hpp"

namespace fs = std::filesystem;
using namespace rfent;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string command;
  json model_spec = {{"family", "flat"}, {"dim", 2}};
  std::vector<double> t_values;
  std::string quad = "radial";
  int order = 32;
  std::uint64_t seed = 0;
  int jobs = 1;
  double lambda = 2.0;
  std::vector<double> v_init;
  int cells = 16;
  double tol_scale = 1.0;
  std::string out_dir;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::stod(cur));
  return out;
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  static const std::vector<std::string> known = {"command", "model",  "t_values", "scheme",
                                                 "jobs",    "lambda", "v",        "cells",
                                                 "out_dir", "seed",   "tol_scale"};
  std::string unknown;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      unknown += (unknown.empty() ? "" : ", ") + it.key();
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
  if (j.contains("command")) cfg.command = j.at("command").get<std::string>();
  if (j.contains("model")) cfg.model_spec = j.at("model");
  if (j.contains("t_values")) cfg.t_values = j.at("t_values").get<std::vector<double>>();
  if (j.contains("scheme")) {
    const json& s = j.at("scheme");
    if (s.contains("kind")) cfg.quad = s.at("kind").get<std::string>();
    if (s.contains("order")) cfg.order = s.at("order").get<int>();
    if (s.contains("seed")) cfg.seed = s.at("seed").get<std::uint64_t>();
  }
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  if (j.contains("v")) cfg.v_init = j.at("v").get<std::vector<double>>();
  if (j.contains("cells")) cfg.cells = j.at("cells").get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tol_scale")) cfg.tol_scale = j.at("tol_scale").get<double>();
}

void validate(const ExperimentConfig& cfg, const ManifoldModel& model) {
  for (double t : cfg.t_values)
    if (!(t > 0) || t >= model.t_max())
      throw ConfigError("t value " + std::to_string(t) + " outside (0, T_max)");
  if (cfg.order < 2) throw ConfigError("quadrature order must be >= 2");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (cfg.lambda <= 0) throw ConfigError("lambda must be positive");
}

Vec vec_from(const std::vector<double>& xs, int n) {
  Vec v(n);
  for (int i = 0; i < n && i < static_cast<int>(xs.size()); ++i) v[i] = xs[static_cast<size_t>(i)];
  return v;
}

std::vector<double> default_grid(const ManifoldModel& model) {
  double tm = model.t_max();
  if (std::isinf(tm)) return {0.1, 0.5, 1.0, 2.0};
  return {0.1 * tm, 0.3 * tm, 0.6 * tm};
}

struct SuiteRow {
  std::string check;
  bool pass;
  double value;
};

// ---------------------------------------------------------------------------
// command implementations
// ---------------------------------------------------------------------------

int cmd_volume(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out,
               bool with_theta, std::vector<SuiteRow>* suite) {
  std::vector<double> grid = cfg.t_values.empty() ? default_grid(model) : cfg.t_values;
  QuadratureScheme scheme = make_scheme(scheme_kind_from_string(cfg.quad), model.dim(), cfg.order,
                                        cfg.seed);
  EntropyReport rep = monotonicity_report(model, grid, scheme, cfg.jobs);
  std::vector<double> theta(grid.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<int> theta_div(grid.size(), 0);
  if (with_theta) {
    for (size_t i = 0; i < grid.size(); ++i) {
      ThetaResult th = theta_volume(model, grid[i], cfg.cells, cfg.jobs);
      theta[i] = th.value;
      theta_div[i] = th.diverged ? 1 : 0;
    }
  }
  CsvWriter csv(out / "volume.csv");
  csv.header({"t", "Vtilde", "Vtilde_err", "theta", "omega_fraction", "bound_gap",
              "monotone_pass"});
  for (size_t i = 0; i < grid.size(); ++i) {
    csv.row({cell(grid[i]), cell(rep.Vtilde[i]), cell(rep.Vtilde_err[i]),
             with_theta ? cell(theta[i]) : std::string(""), cell(rep.omega_fraction[i]),
             cell(rep.bound_gap[i]), cell(rep.monotone_pass)});
  }
  bool ok = rep.monotone_pass && rep.node_monotone_pass && rep.bound_pass;
  if (suite) {
    suite->push_back({"volume_monotone", rep.monotone_pass, rep.Vtilde.back()});
    suite->push_back({"volume_node_monotone", rep.node_monotone_pass, 0.0});
    suite->push_back({"volume_bound", rep.bound_pass, rep.bound_gap.back()});
    if (model.family() == Family::Flat) {
      double capv = std::pow(4.0 * M_PI, 0.5 * model.dim());
      bool flat_const = true;
      for (double v : rep.Vtilde)
        if (std::abs(v - capv) > 1e-6 * capv) flat_const = false;
      suite->push_back({"volume_flat_constant", flat_const, rep.Vtilde.front()});
      ok = ok && flat_const;
    }
  }
  return ok ? 0 : 1;
}

int cmd_theta(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out,
              std::vector<SuiteRow>* suite) {
  std::vector<double> grid = cfg.t_values.empty() ? default_grid(model) : cfg.t_values;
  CsvWriter csv(out / "theta.csv");
  csv.header({"t", "theta", "diverged", "tail_ratio"});
  bool mono = true;
  double prev = std::numeric_limits<double>::infinity();
  bool any_diverged = false;
  for (double t : grid) {
    ThetaResult th = theta_volume(model, t, cfg.cells, cfg.jobs);
    csv.row({cell(t), cell(th.value), cell(th.diverged), cell(th.tail_ratio)});
    any_diverged = any_diverged || th.diverged;
    if (!th.diverged) {
      if (th.value > prev * (1.0 + 1e-6)) mono = false;
      prev = th.value;
    }
  }
  bool compact = std::isfinite(model.chart_r_max());
  bool ok = compact ? (mono && !any_diverged) : any_diverged;
  if (suite)
    suite->push_back({compact ? "theta_non_increasing" : "theta_divergence_reported", ok,
                      0.0});
  return ok ? 0 : 1;
}

int cmd_geodesic(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out,
                 std::vector<SuiteRow>* suite) {
  int n = model.dim();
  Vec V = cfg.v_init.empty() ? 0.5 * Vec::basis(n, 0) : vec_from(cfg.v_init, n);
  double t = cfg.t_values.empty() ? std::min(1.0, 0.5 * model.t_max()) : cfg.t_values.front();
  ShootOptions so;
  auto g = shoot(model, V, t, so);
  auto d = k_integral(g, model, true);
  CsvWriter csv(out / "geodesic.csv");
  std::vector<std::string> cols = {"s"};
  for (int i = 0; i < n; ++i) cols.push_back("x" + std::to_string(i));
  cols.push_back("beta_prime_norm");
  cols.push_back("R");
  cols.push_back("HX");
  csv.header(cols);
  for (const auto& gs : g.samples) {
    std::vector<std::string> row = {cell(gs.s)};
    for (int i = 0; i < n; ++i) row.push_back(cell(gs.beta[i]));
    GeoPoint p = model.point(gs.beta, std::min(gs.s * gs.s, model.t_max() * (1 - 1e-12)));
    row.push_back(cell(std::sqrt(p.norm2(gs.beta_prime))));
    row.push_back(cell(p.rd.R));
    row.push_back(cell(gs.s > 0 ? trace_harnack(model, gs.beta, gs.beta_prime, gs.s) : 0.0));
    csv.row(row);
  }
  json diag;
  diag["t"] = t;
  diag["length"] = g.length;
  diag["K"] = d.K;
  diag["kr_residual"] = d.kr_residual;
  diag["grad_identity_residual"] = d.grad_identity_residual;
  std::vector<double> vv;
  for (int i = 0; i < n; ++i) vv.push_back(V[i]);
  diag["V"] = vv;
  write_json(out / "geodesic_diagnostics.json", diag);
  double kr_tol = 1e-6 * (1.0 + std::abs(g.length)) * cfg.tol_scale;
  bool ok = d.kr_residual <= kr_tol && d.grad_identity_residual <= 1e-4 * cfg.tol_scale;
  if (suite) {
    suite->push_back({"geodesic_k_relation", d.kr_residual <= kr_tol, d.kr_residual});
    suite->push_back(
        {"geodesic_grad_identity", d.grad_identity_residual <= 1e-4 * cfg.tol_scale,
         d.grad_identity_residual});
  }
  return ok ? 0 : 1;
}

int cmd_identities(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out,
                   std::vector<SuiteRow>* suite) {
  int n = model.dim();
  double tm = model.t_max();
  std::vector<std::pair<Vec, double>> points;
  std::vector<double> ts =
      cfg.t_values.empty()
          ? (std::isinf(tm) ? std::vector<double>{0.5, 1.0} : std::vector<double>{0.3 * tm, 0.6 * tm})
          : cfg.t_values;
  for (double t : ts) {
    Vec y1(n);
    y1[0] = 0.5;
    points.push_back({y1, t});
    Vec y2(n);
    y2[0] = 0.35;
    y2[1] = 0.45;
    points.push_back({y2, t});
  }
  json rows = json::array();
  bool all_pass = true;
  for (const auto& [y, t] : points) {
    IdentityTable tab = identity_suite(model, y, t, 1e-4 * cfg.tol_scale);
    json jy;
    for (int i = 0; i < n; ++i) jy.push_back(y[i]);
    if (tab.skipped) {
      rows.push_back({{"y", jy}, {"t", t}, {"skipped", tab.skip_reason}});
      continue;
    }
    for (const auto& row : tab.rows) {
      rows.push_back({{"check", row.check},
                      {"y", jy},
                      {"t", t},
                      {"lhs", row.lhs},
                      {"rhs", row.rhs},
                      {"residual", row.residual},
                      {"pass", row.pass}});
      all_pass = all_pass && row.pass;
    }
  }
  write_json(out / "identities.json", rows);
  if (suite) suite->push_back({"identity_suite", all_pass, 0.0});
  return all_pass ? 0 : 1;
}

int cmd_jacobi(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out,
               std::vector<SuiteRow>* suite) {
  int n = model.dim();
  Vec V = cfg.v_init.empty() ? 0.4 * Vec::basis(n, 0) + 0.2 * Vec::basis(n, 1)
                             : vec_from(cfg.v_init, n);
  double t = cfg.t_values.empty() ? std::min(1.0, 0.5 * model.t_max()) : cfg.t_values.front();
  JacobiOptions jo;
  auto jf = jacobi_propagate(model, V, t, jo);
  CsvWriter csv(out / "jacobi.csv");
  csv.header({"t", "detL"});
  for (size_t i = 0; i < jf.trace_t.size(); ++i)
    csv.row({cell(jf.trace_t[i]), cell(jf.trace_detL[i])});

  Mat fd = jacobi_fd_oracle(model, V, t);
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      num = std::max(num, std::abs(jf.J_end(i, j) - fd(i, j)));
      den = std::max(den, std::abs(fd(i, j)));
    }
  double rel = (den > 0) ? num / den : 0.0;
  bool fd_pass = rel <= 1e-3 * cfg.tol_scale;

  Vec vchart = (1.0 / std::sqrt(model.metric0_scale())) * V;
  auto g = shoot(model, vchart, t);
  auto tf = transported_frame(model, g, 33);
  bool gram_pass = tf.max_gram_residual <= 1e-6 * cfg.tol_scale;

  json diag = json::array();
  diag.push_back({{"check", "jacobi_vs_fd_oracle"},
                  {"lhs", num},
                  {"rhs", den},
                  {"residual", rel},
                  {"pass", fd_pass}});
  diag.push_back({{"check", "transported_gram_law"},
                  {"lhs", tf.max_gram_residual},
                  {"rhs", 0.0},
                  {"residual", tf.max_gram_residual},
                  {"pass", gram_pass}});
  diag.push_back({{"check", "tau_V"},
                  {"lhs", std::isfinite(jf.tau_V) ? jf.tau_V : -1.0},
                  {"rhs", 0.0},
                  {"residual", 0.0},
                  {"pass", true}});
  write_json(out / "jacobi_diagnostics.json", diag);
  if (suite) {
    suite->push_back({"jacobi_vs_fd", fd_pass, rel});
    suite->push_back({"transported_gram_law", gram_pass, tf.max_gram_residual});
  }
  return (fd_pass && gram_pass) ? 0 : 1;
}

int cmd_rescale(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out,
                std::vector<SuiteRow>* suite) {
  double t = cfg.t_values.empty() ? std::min(1.0, 0.4 * model.t_max()) : cfg.t_values.front();
  QuadratureScheme scheme = make_scheme(scheme_kind_from_string(cfg.quad), model.dim(), cfg.order,
                                        cfg.seed);
  RescaleCheck rc = rescale_check(model, cfg.lambda, t, scheme, cfg.jobs);
  CsvWriter csv(out / "rescale.csv");
  csv.header({"lambda", "t", "v_rescaled", "v_base", "difference", "error_estimate"});
  csv.row({cell(rc.lambda), cell(t), cell(rc.v_rescaled), cell(rc.v_base), cell(rc.difference),
           cell(rc.error_estimate)});
  bool ok = std::abs(rc.difference) <= std::max(1e-5, 2.0 * rc.error_estimate) * cfg.tol_scale;
  if (suite) suite->push_back({"rescale_identity", ok, std::abs(rc.difference)});
  return ok ? 0 : 1;
}

int cmd_flow(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out,
             std::vector<SuiteRow>* suite) {
  double tm = model.t_max();
  double t = std::isinf(tm) ? 1.0 : 0.5 * tm;
  CsvWriter csv(out / "flow_residual.csv");
  csv.header({"r", "t", "residual"});
  double tol = (model.family() == Family::Warped) ? 1e-3 : 1e-6;
  if (model.family() == Family::Flat) tol = 1e-12;
  double rmax = std::isfinite(model.chart_safe_radius()) ? 0.6 * model.chart_safe_radius() : 1.6;
  bool ok = true;
  for (int k = 1; k <= 4; ++k) {
    double r = rmax * k / 4.0;
    Vec p = Vec::zero(model.dim());
    p[0] = r;
    double res = model.flow_residual(p, t, 1e-4);
    csv.row({cell(r), cell(t), cell(res)});
    if (res > tol * cfg.tol_scale) ok = false;
  }
  if (suite) suite->push_back({"flow_residual", ok, 0.0});
  (void)cfg;
  return ok ? 0 : 1;
}

int cmd_suite(const ExperimentConfig& cfg, const ManifoldModel& model, const fs::path& out) {
  std::vector<SuiteRow> rows;
  int rc = 0;
  rc |= cmd_flow(cfg, model, out, &rows);
  rc |= cmd_volume(cfg, model, out, false, &rows);
  rc |= cmd_identities(cfg, model, out, &rows);
  rc |= cmd_jacobi(cfg, model, out, &rows);
  if (model.t_max() > 1e-3) rc |= cmd_rescale(cfg, model, out, &rows);
  rc |= cmd_theta(cfg, model, out, &rows);
  CsvWriter csv(out / "suite_summary.csv");
  csv.header({"check", "pass", "value"});
  for (const auto& row : rows) csv.row({row.check, cell(row.pass), cell(row.value)});
  return rc ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forward reduced entropy toolkit for model Ricci flows"};
  app.set_version_flag("--version", kVersion);

  ExperimentConfig cfg;
  std::string config_path, model_name = "flat", t_list, v_list, profile = "sin";
  int dim = 2, mesh = 256, modes = 0;
  double kappa = -1.0, smax = M_PI, horizon = 0.1;
  bool have_model_flag = false;

  app.add_option("--config", config_path, "JSON config file (flags override)");
  auto* om = app.add_option("--model", model_name, "flat|hyperbolic|sphere|einstein|warped");
  app.add_option("--dim", dim, "manifold dimension");
  app.add_option("--kappa", kappa, "Einstein constant (family einstein)");
  app.add_option("--profile", profile, "warped initial profile: sin|sinh|line|csv:<path>");
  app.add_option("--mesh", mesh, "warped collocation points");
  app.add_option("--modes", modes, "warped spectral modes (0 = auto)");
  app.add_option("--smax", smax, "warped domain radius");
  app.add_option("--horizon", horizon, "warped evolution horizon");
  app.add_option("--t", t_list, "comma-separated times");
  app.add_option("--quad", cfg.quad, "hermite|radial|mc");
  app.add_option("--order", cfg.order, "quadrature order / sample count");
  app.add_option("--seed", cfg.seed, "random seed (mc scheme)");
  app.add_option("--jobs", cfg.jobs, "worker threads");
  app.add_option("--lambda", cfg.lambda, "rescaling factor");
  app.add_option("--v", v_list, "initial vector components, comma separated");
  app.add_option("--cells", cfg.cells, "radial cells for theta integration");
  app.add_option("--tol-scale", cfg.tol_scale, "scale factor on check tolerances");
  app.add_option("--out", cfg.out_dir, "output directory (default $RFENT_OUT_DIR or ./out)");

  app.require_subcommand(0, 1);
  std::vector<std::string> commands = {"volume",       "theta",   "geodesic", "identities",
                                       "monotonicity", "rescale", "jacobi",   "suite"};
  for (const auto& c : commands) app.add_subcommand(c, c + " pipeline")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return (code == 0) ? 0 : 2;
  }

  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& c : commands)
      if (app.got_subcommand(c)) cfg.command = c;
    if (cfg.command.empty()) throw ConfigError("no command given");
    if (!t_list.empty()) cfg.t_values = parse_list(t_list);
    if (!v_list.empty()) {
      cfg.v_init = parse_list(v_list);
    }
    have_model_flag = om->count() > 0;

    if (have_model_flag || !cfg.model_spec.contains("family") || cfg.model_spec.empty()) {
      json m;
      if (model_name == "flat") {
        m = {{"family", "flat"}, {"dim", dim}};
      } else if (model_name == "hyperbolic") {
        m = {{"family", "einstein"}, {"dim", dim}, {"kappa", -1.0}};
      } else if (model_name == "sphere") {
        m = {{"family", "einstein"}, {"dim", dim}, {"kappa", 1.0}};
      } else if (model_name == "einstein") {
        m = {{"family", "einstein"}, {"dim", dim}, {"kappa", kappa}};
      } else if (model_name == "warped") {
        m = {{"family", "warped"}, {"dim", dim},     {"profile", profile}, {"mesh", mesh},
             {"s_max", smax},      {"closed", profile == "sin"}, {"horizon", horizon}};
        if (modes > 0) m["modes"] = modes;
      } else {
        throw ConfigError("unknown model name: " + model_name);
      }
      cfg.model_spec = m;
    } else if (app.count("--dim") > 0) {
      cfg.model_spec["dim"] = dim;
    }

    ModelSpecJson ms = model_from_json(cfg.model_spec);
    validate(cfg, ms.model);

    fs::path out = cfg.out_dir.empty()
                       ? (std::getenv("RFENT_OUT_DIR") ? fs::path(std::getenv("RFENT_OUT_DIR"))
                                                       : fs::path("out"))
                       : fs::path(cfg.out_dir);
    fs::create_directories(out);

    json manifest;
    manifest["command"] = cfg.command;
    manifest["version"] = kVersion;
    manifest["model"] = ms.echo;
    manifest["t_values"] = cfg.t_values;
    manifest["scheme"] = {{"kind", cfg.quad}, {"order", cfg.order}, {"seed", cfg.seed}};
    manifest["jobs"] = cfg.jobs;
    manifest["tol_scale"] = cfg.tol_scale;
    write_json(out / "run_manifest.json", manifest);

    auto t0 = std::chrono::steady_clock::now();
    int rc = 0;
    if (cfg.command == "volume" || cfg.command == "monotonicity") {
      rc = cmd_volume(cfg, ms.model, out, false, nullptr);
    } else if (cfg.command == "theta") {
      rc = cmd_theta(cfg, ms.model, out, nullptr);
    } else if (cfg.command == "geodesic") {
      rc = cmd_geodesic(cfg, ms.model, out, nullptr);
    } else if (cfg.command == "identities") {
      rc = cmd_identities(cfg, ms.model, out, nullptr);
    } else if (cfg.command == "rescale") {
      rc = cmd_rescale(cfg, ms.model, out, nullptr);
    } else if (cfg.command == "jacobi") {
      rc = cmd_jacobi(cfg, ms.model, out, nullptr);
    } else if (cfg.command == "suite") {
      rc = cmd_suite(cfg, ms.model, out);
    } else {
      throw ConfigError("unknown command: " + cfg.command);
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << cfg.command << " finished in " << wall << " s, exit " << rc << "\n";
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NonconvergenceError& e) {
    std::cerr << "nonconvergence: " << e.what() << "\n";
    return 3;
  } catch (const IntegrationError& e) {
    std::cerr << "integration failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

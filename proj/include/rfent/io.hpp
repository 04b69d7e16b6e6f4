#pragma once

// Model construction from JSON specs, CSV/JSON artifact writers.
// Numbers are always printed with "%.17g" so that identical runs produce
// byte-identical artifacts.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfent/entropy.hpp"
#include "rfent/geometry.hpp"

namespace rfent {

using json = nlohmann::json;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
  }
  void header(const std::vector<std::string>& cols) {
    for (size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline std::string cell(double v) { return fmt_double(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }

// two-column CSV (s, phi) -> monotone cubic interpolation callable
inline std::function<double(double)> load_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile table " + path);
  std::vector<double> xs, fs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, f;
    if (!(ss >> x >> f)) continue;
    xs.push_back(x);
    fs.push_back(f);
  }
  if (xs.size() < 4) throw ConfigError("profile table needs at least 4 rows");
  for (size_t i = 1; i < xs.size(); ++i)
    if (xs[i] <= xs[i - 1]) throw ConfigError("profile table abscissae must increase");
  return [xs, fs](double s) {
    if (s <= xs.front()) return fs.front() * (xs.front() > 0 ? s / xs.front() : 1.0);
    if (s >= xs.back()) return fs.back();
    size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      (xs[mid] <= s ? lo : hi) = mid;
    }
    double u = (s - xs[lo]) / (xs[lo + 1] - xs[lo]);
    return fs[lo] * (1.0 - u) + fs[lo + 1] * u;
  };
}

struct ModelSpecJson {
  ManifoldModel model;
  json echo;
};

// {"family":"flat"|"einstein"|"warped", "dim":n, "kappa":x,
//  "profile":"sin"|"sinh"|"line"|"csv:<path>", "mesh":m, "s_max":x,
//  "closed":bool, "horizon":x, "modes":k}
inline ModelSpecJson model_from_json(const json& j) {
  static const std::vector<std::string> known = {"family", "dim",     "kappa", "profile",
                                                 "mesh",   "s_max",   "closed", "horizon",
                                                 "modes",  "sponge"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown model key: " + it.key());
  }
  if (!j.contains("family")) throw ConfigError("model needs a family");
  std::string fam = j.at("family").get<std::string>();
  int dim = j.value("dim", 3);
  if (dim < 2) throw ConfigError("model dimension must be >= 2");
  ModelSpecJson out;
  out.echo = j;
  if (fam == "flat") {
    out.model = ManifoldModel::flat(dim);
  } else if (fam == "einstein") {
    out.model = ManifoldModel::einstein(dim, j.value("kappa", -1.0));
  } else if (fam == "warped") {
    WarpedSpec spec;
    spec.dim = dim;
    spec.mesh = j.value("mesh", 256);
    spec.s_max = j.value("s_max", M_PI);
    spec.closed = j.value("closed", true);
    spec.horizon = j.value("horizon", 0.1);
    spec.sponge = j.value("sponge", 0.8);
    if (j.contains("modes")) spec.modes = j.at("modes").get<int>();
    std::string prof = j.value("profile", "sin");
    if (prof == "sin") {
      spec.phi0 = [](double s) { return std::sin(s); };
    } else if (prof == "sinh") {
      spec.phi0 = [](double s) { return std::sinh(s); };
    } else if (prof == "line") {
      spec.phi0 = [](double s) { return s; };
      spec.closed = false;
    } else if (prof.rfind("csv:", 0) == 0) {
      spec.phi0 = load_profile_csv(prof.substr(4));
    } else {
      throw ConfigError("unknown warped profile: " + prof);
    }
    out.model = ManifoldModel::warped(spec);
  } else {
    throw ConfigError("unknown model family: " + fam);
  }
  return out;
}

inline SchemeKind scheme_kind_from_string(const std::string& s) {
  if (s == "hermite") return SchemeKind::TensorHermite;
  if (s == "radial") return SchemeKind::RadialSpherical;
  if (s == "mc") return SchemeKind::MonteCarlo;
  throw ConfigError("unknown quadrature kind: " + s);
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

}  // namespace rfent

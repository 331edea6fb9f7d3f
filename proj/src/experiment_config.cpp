#include "sphconv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <variant>

namespace sphconv {

namespace {

using Member = std::variant<int ExperimentConfig::*, std::uint64_t ExperimentConfig::*, double ExperimentConfig::*,
                            std::string ExperimentConfig::*, std::vector<int> ExperimentConfig::*, std::vector<double> ExperimentConfig::*>;

struct Field {
  FieldInfo info;
  Member member;
};

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {{"seed", "uint", "base seed for every random draw"}, &C::seed},
      {{"n", "int", "sphere or ball dimension, 2..8"}, &C::n},
      {{"c", "double", "family width, (0, 1/3]"}, &C::c},
      {{"N", "int", "mesh resolution per side, 4..4096"}, &C::N},
      {{"L", "double", "domain side length, > 0"}, &C::L},
      {{"eps", "double", "inner radius of the punctured ball, (0, 0.5)"}, &C::eps},
      {{"eps_list", "doubles", "inner radii for the planar log fit"}, &C::eps_list},
      {{"dims", "ints", "sphere dimensions for the Hessian check"}, &C::dims},
      {{"refinements", "ints", "ascending mesh resolutions"}, &C::refinements},
      {{"radii", "doubles", "ball radii"}, &C::radii},
      {{"samples", "uint", "sample count"}, &C::samples},
      {{"directions", "uint", "random directions per sample"}, &C::directions},
      {{"h", "double", "finite-difference step, (0, 0.1]"}, &C::h},
      {{"v_min", "double", "lower bound of v for sampled points, (0, 1)"}, &C::v_min},
      {{"phi_count", "uint", "number of phi0 values in the family parameter set"}, &C::phi_count},
      {{"points_per_phi", "uint", "sample points per phi0"}, &C::points_per_phi},
      {{"runs", "int", "repetitions: seeds, geodesics, balls or cases"}, &C::runs},
      {{"interval_N", "int", "cells of the interval for the Poincare check"}, &C::interval_N},
      {{"lambda0", "double", "family exponent where no calibration is run"}, &C::lambda0},
      {{"tolerance", "double", "solver tolerance"}, &C::tolerance},
      {{"max_iterations", "int", "solver iteration cap"}, &C::max_iterations},
      {{"scheme", "string", "gauss_seidel or jacobi"}, &C::scheme},
      {{"damping", "double", "relaxation factor, (0, 1]"}, &C::damping},
      {{"out_dir", "string", "output directory (SPHCONV_OUT_DIR overrides)"}, &C::out_dir},
  };
  return table;
}

void fail(const std::string& what) { throw ConfigError(what); }

void require(bool ok, const std::string& key, const std::string& range) {
  if (!ok) fail("config field '" + key + "' must be " + range);
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"hessians", "certify",  "family",   "maximality", "dvp",
                                                 "green",    "dirichlet", "liouville", "singular",  "telescope",
                                                 "holder",   "gauss",    "bernstein"};
  return names;
}

const std::vector<FieldInfo>& config_fields() {
  static const std::vector<FieldInfo> infos = [] {
    std::vector<FieldInfo> out;
    for (const Field& f : fields()) out.push_back(f.info);
    return out;
  }();
  return infos;
}

ExperimentConfig ExperimentConfig::defaults(const std::string& subcommand) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end()) fail("unknown subcommand '" + subcommand + "'");
  ExperimentConfig cfg;
  cfg.subcommand = subcommand;
  if (subcommand == "hessians") {
    cfg.dims = {2, 3, 5};
    cfg.samples = 100;
  } else if (subcommand == "certify") {
    cfg.samples = 10000;
  } else if (subcommand == "family") {
    cfg.samples = 1000;
  } else if (subcommand == "maximality") {
    cfg.samples = 4096;
  } else if (subcommand == "dvp") {
    cfg.N = 128;
    cfg.radii = {1.0 / 32, 1.0 / 16, 1.0 / 8};
    cfg.runs = 50;
  } else if (subcommand == "green") {
    cfg.N = 128;
    cfg.radii = {1.0 / 16, 1.0 / 8, 1.0 / 4};
    cfg.runs = 20;
  } else if (subcommand == "dirichlet") {
    cfg.refinements = {16, 32, 64};
  } else if (subcommand == "liouville") {
    cfg.N = 16;
  } else if (subcommand == "singular") {
    cfg.N = 64;
    cfg.eps_list = {0.1, 0.05, 0.025};
    cfg.refinements = {16, 32, 64};
  } else if (subcommand == "telescope") {
    cfg.refinements = {32, 64};
    cfg.radii = {0.1, 0.2, 0.4};
    cfg.runs = 20;
  } else if (subcommand == "holder") {
    cfg.N = 64;
    cfg.radii = {0.05, 0.1, 0.2, 0.4};
  } else if (subcommand == "gauss") {
    cfg.refinements = {16, 32, 64};
    cfg.samples = 20000;
    cfg.runs = 1000;
  } else if (subcommand == "bernstein") {
    cfg.N = 16;
    cfg.refinements = {16, 32, 64};
    cfg.radii = {0.1, 1.0, 10.0, 50.0, 200.0};
    cfg.tolerance = 1e-11;
    cfg.max_iterations = 500;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  const auto& names = subcommands();
  require(std::find(names.begin(), names.end(), subcommand) != names.end(), "subcommand", "a known subcommand");
  require(n >= 2 && n <= 8, "n", "in [2, 8]");
  require(c > 0 && c <= 1.0 / 3, "c", "in (0, 1/3]");
  require(N >= 4 && N <= 4096, "N", "in [4, 4096]");
  require(std::isfinite(L) && L > 0, "L", "positive");
  require(eps > 0 && eps < 0.5, "eps", "in (0, 0.5)");
  for (double e : eps_list) require(e > 0 && e < 0.5, "eps_list", "entries in (0, 0.5)");
  for (int d : dims) require(d >= 2 && d <= 8, "dims", "entries in [2, 8]");
  for (std::size_t k = 0; k < refinements.size(); ++k) {
    require(refinements[k] >= 4 && refinements[k] <= 4096, "refinements", "entries in [4, 4096]");
    require(k == 0 || refinements[k] > refinements[k - 1], "refinements", "strictly ascending");
  }
  for (double r : radii) require(std::isfinite(r) && r > 0, "radii", "positive");
  require(samples >= 1 && samples <= 10000000, "samples", "in [1, 1e7]");
  require(directions >= 1 && directions <= 4096, "directions", "in [1, 4096]");
  require(h > 0 && h <= 0.1, "h", "in (0, 0.1]");
  require(v_min > 0 && v_min < 1, "v_min", "in (0, 1)");
  require(phi_count >= 2 && phi_count <= 4096, "phi_count", "in [2, 4096]");
  require(points_per_phi >= 1 && points_per_phi <= 100000, "points_per_phi", "in [1, 1e5]");
  require(runs >= 1 && runs <= 100000, "runs", "in [1, 1e5]");
  require(interval_N >= 4 && interval_N <= 1000000, "interval_N", "in [4, 1e6]");
  require(std::isfinite(lambda0) && lambda0 > 0, "lambda0", "positive");
  require(tolerance > 0 && tolerance < 1, "tolerance", "in (0, 1)");
  require(max_iterations >= 1, "max_iterations", "at least 1");
  require(scheme == "gauss_seidel" || scheme == "jacobi", "scheme", "gauss_seidel or jacobi");
  require(damping > 0 && damping <= 1, "damping", "in (0, 1]");
  require(!out_dir.empty(), "out_dir", "nonempty");
}

void ExperimentConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "subcommand") {
      if (!value.is_string() || value.get<std::string>() != subcommand)
        fail("config subcommand " + value.dump() + " does not match '" + subcommand + "'");
      continue;
    }
    const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return f.info.key == key; });
    if (it == fields().end()) fail("unknown config key '" + key + "'");
    try {
      std::visit(
          [&](auto member) {
            using T = std::remove_reference_t<decltype(this->*member)>;
            if constexpr (std::is_integral_v<T>) {
              if (!value.is_number_integer()) fail("config field '" + key + "' must be an integer");
              if (value.is_number_unsigned()) {
                this->*member = static_cast<T>(value.get<std::uint64_t>());
              } else {
                const auto v = value.get<std::int64_t>();
                if (v < 0 && std::is_unsigned_v<T>) fail("config field '" + key + "' must be nonnegative");
                this->*member = static_cast<T>(v);
              }
            } else if constexpr (std::is_same_v<T, double>) {
              if (!value.is_number()) fail("config field '" + key + "' must be a number");
              this->*member = value.get<double>();
            } else if constexpr (std::is_same_v<T, std::string>) {
              if (!value.is_string()) fail("config field '" + key + "' must be a string");
              this->*member = value.get<std::string>();
            } else if constexpr (std::is_same_v<T, std::vector<int>>) {
              if (!value.is_array()) fail("config field '" + key + "' must be an array of integers");
              for (const auto& e : value)
                if (!e.is_number_integer()) fail("config field '" + key + "' must be an array of integers");
              this->*member = value.get<std::vector<int>>();
            } else {
              if (!value.is_array()) fail("config field '" + key + "' must be an array of numbers");
              for (const auto& e : value)
                if (!e.is_number()) fail("config field '" + key + "' must be an array of numbers");
              this->*member = value.get<std::vector<double>>();
            }
          },
          it->member);
    } catch (const nlohmann::json::exception& e) {
      fail("config field '" + key + "': " + e.what());
    }
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  j["subcommand"] = subcommand;
  for (const Field& f : fields()) {
    if (f.info.key == "out_dir") continue;
    std::visit([&](auto member) { j[f.info.key] = this->*member; }, f.member);
  }
  return j;
}

bool ExperimentResult::passed(const std::vector<std::string>& prefixes) const {
  bool any = false;
  for (const auto& check : summary.at("checks")) {
    const std::string name = check.at("name");
    const bool selected = std::any_of(prefixes.begin(), prefixes.end(),
                                      [&](const std::string& p) { return name.rfind(p, 0) == 0; });
    if (!selected) continue;
    any = true;
    if (!check.at("pass").get<bool>()) return false;
  }
  return any;
}

void ExperimentResult::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "summary.json");
    out << summary.dump(2) << '\n';
    if (!out) throw Error("cannot write " + (dir / "summary.json").string());
  }
  for (const auto& [name, text] : files) {
    std::ofstream out(dir / name);
    out << text;
    if (!out) throw Error("cannot write " + (dir / name).string());
  }
}

}  // namespace sphconv

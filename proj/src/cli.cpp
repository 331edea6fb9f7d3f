#include "sphconv/cli.hpp"

#include "sphconv/experiments.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

namespace sphconv::cli {

namespace {

using json = nlohmann::json;

json parse_scalar(const std::string& key, const std::string& kind, const std::string& text) {
  std::size_t used = 0;
  try {
    if (kind == "int" || kind == "ints") {
      const long long v = std::stoll(text, &used);
      if (used == text.size()) return v;
    } else if (kind == "uint") {
      if (!text.empty() && text[0] != '-') {
        const unsigned long long v = std::stoull(text, &used);
        if (used == text.size()) return v;
      }
    } else if (kind == "double" || kind == "doubles") {
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } else {
      return text;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("--" + key + ": cannot parse '" + text + "' as " + kind);
}

json flags_to_json(const std::map<std::string, std::vector<std::string>>& given) {
  json j = json::object();
  for (const FieldInfo& f : config_fields()) {
    const auto it = given.find(f.key);
    if (it == given.end()) continue;
    if (f.kind == "ints" || f.kind == "doubles") {
      json arr = json::array();
      for (const std::string& s : it->second) arr.push_back(parse_scalar(f.key, f.kind, s));
      j[f.key] = arr;
    } else {
      j[f.key] = parse_scalar(f.key, f.kind, it->second.back());
    }
  }
  return j;
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Experiments on convex functions and harmonic maps into spheres", "sphconv"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1, 1);

  // Raw flag values per subcommand; parsed against the field kinds afterwards.
  std::map<std::string, std::map<std::string, std::vector<std::string>>> raw;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> options;
  for (const std::string& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_paths[name], "JSON config applied over the flags");
    for (const FieldInfo& f : config_fields()) {
      auto& slot = raw[name][f.key];
      CLI::Option* opt = sub->add_option("--" + f.key, slot, f.help);
      if (f.kind == "ints" || f.kind == "doubles") {
        opt->expected(1, CLI::detail::expected_max_vector_size);
      } else {
        opt->expected(1);
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
      options[name].emplace_back(f.key, opt);
    }
  }

  if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), args[0]) == names.end()) {
      err << "sphconv: unknown subcommand '" << args[0] << "'\nRun with --help for more information.\n";
      return 2;
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::defaults(name);
    std::map<std::string, std::vector<std::string>> given;
    for (const auto& [key, opt] : options[name])
      if (opt->count() > 0) given[key] = raw[name][key];
    cfg.merge_json(flags_to_json(given));
    if (!config_paths[name].empty()) cfg.merge_json(read_config(config_paths[name]));
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') cfg.out_dir = env;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "sphconv " << name << ": " << e.what() << '\n';
    return 2;
  }

  ExperimentResult result;
  try {
    result = run_experiment(cfg);
  } catch (const ConfigError& e) {
    err << "sphconv " << name << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "sphconv " << name << ": failed: " << e.what() << '\n';
    return 1;
  }

  const std::filesystem::path dir = std::filesystem::path(cfg.out_dir) / name;
  try {
    result.write(dir);
  } catch (const std::exception& e) {
    err << "sphconv " << name << ": " << e.what() << '\n';
    return 1;
  }
  for (const auto& check : result.summary.at("checks")) {
    out << (check.at("pass").get<bool>() ? "PASS " : "FAIL ") << check.at("name").get<std::string>();
    if (check.contains("value")) out << "  value=" << check.at("value").dump();
    if (check.contains("bound")) out << ' ' << check.at("op").get<std::string>() << ' ' << check.at("bound").dump();
    if (check.contains("lower")) out << " in [" << check.at("lower").dump() << ", " << check.at("upper").dump() << ']';
    out << '\n';
  }
  out << name << ": " << (result.pass ? "PASS" : "FAIL") << " (" << (dir / "summary.json").string() << ")\n";
  return result.pass ? 0 : 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace sphconv::cli

// Command-line front end: one subcommand per experiment, see `briques --help`.

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "briques/experiments.hpp"

namespace {

const char* type_name(briques::cli::KeyType t) {
  using briques::cli::KeyType;
  switch (t) {
    case KeyType::Int: return "INT";
    case KeyType::Real: return "REAL";
    case KeyType::Rational: return "P/Q";
    case KeyType::Slope: return "P/Q|vertical";
    case KeyType::String: return "TEXT";
    case KeyType::Bool: return "BOOL";
    case KeyType::RationalList: return "P/Q,P/Q,...";
    case KeyType::CellList: return "[[Z1,Z2],...]";
    case KeyType::Backend: return "rational|float";
  }
  return "";
}

const std::map<std::string, std::string> kAbout{
    {"simulate-strip", "trace one trajectory in the strip and report its returns to the base"},
    {"simulate-plane", "trace one trajectory in the plane and log the destroyed bricks"},
    {"escape", "height and return-time series over many returns, with escape rates"},
    {"sweep-h", "escape rates over a grid of base depths"},
    {"limit-set", "frontier-map orbits after a burn-in, binned on the circles"},
    {"detect-periodic", "search initial conditions for periodic plane orbits"},
    {"render", "draw a plane trajectory or a hit log as SVG or PGM"},
    {"verify", "randomized consistency checks between the models"},
};

struct Sub {
  CLI::App* app = nullptr;
  std::string config;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

}  // namespace

int main(int argc, char** argv) {
  namespace cli = briques::cli;
  CLI::App app{"Exact simulator of the brick-breaking billiard"};
  app.require_subcommand(1);
  std::map<std::string, Sub> subs;
  for (const auto& name : cli::command_names()) {
    Sub& sub = subs[name];
    sub.app = app.add_subcommand(name, kAbout.at(name));
    sub.app->set_help_flag("--help", "Print this help message and exit");
    sub.app->add_option("--config", sub.config, "JSON file of keys; flags override it")->check(CLI::ExistingFile);
    for (const auto& key : cli::command_keys(name)) {
      sub.options[key.name] = sub.app->add_option("--" + key.name, sub.values[key.name],
                                                  key.help + " (default " + key.fallback.dump() + ")")
                                  ->type_name(type_name(key.type));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsage;
  }
  for (auto& [name, sub] : subs) {
    if (!sub.app->parsed()) continue;
    std::vector<std::pair<std::string, std::string>> flags;
    for (const auto& [key, opt] : sub.options) {
      if (opt->count() > 0) flags.emplace_back(key, sub.values[key]);
    }
    cli::Config cfg;
    try {
      cfg = cli::load_config_file(name, sub.config, flags);
    } catch (const cli::ConfigError& e) {
      std::cout << cli::Summary(name).add("status", "usage_error").add("message", e.what()).line() << '\n';
      return cli::kUsage;
    }
    return cli::run_command(cfg, std::cout, std::cerr);
  }
  return cli::kUsage;
}

// qkdmon: SD-error recognition and countermeasure simulator.
#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <string>

#include "commands.hpp"
#include "run_config.hpp"

namespace {

using qkdmon::cli::Settings;

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
};

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

void add_settings_options(Subcommand& sub) {
  sub.app->add_option("--config", sub.config_path, "Flat key = value config file; flags override it");
  for (const auto& key : qkdmon::cli::known_keys()) {
    if (key == "plot" || key == "dump_stream") {
      sub.app->add_flag(flag_name(key), sub.switches[key]);
    } else {
      sub.app->add_option(flag_name(key), sub.values[key]);
    }
  }
}

Settings collect(const Subcommand& sub) {
  Settings settings;
  if (!sub.config_path.empty()) settings = qkdmon::cli::load_config_file(sub.config_path);
  Settings flags;
  for (const auto& [key, value] : sub.values) {
    if (sub.app->count(flag_name(key)) > 0) flags[key] = {value, flag_name(key)};
  }
  for (const auto& [key, on] : sub.switches) {
    if (sub.app->count(flag_name(key)) > 0) flags[key] = {on ? "true" : "false", flag_name(key)};
  }
  return qkdmon::cli::merge(std::move(settings), flags);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recognize state-detection errors in a BB84 raw key and apply the countermeasure"};
  app.require_subcommand(1);

  std::map<std::string, Subcommand> subs;
  const std::pair<const char*, const char*> commands[] = {
      {"size-window", "Chernoff-Hoeffding window width for --delta and --epsilon"},
      {"simulate", "Generate a raw key and trace the sliding-window estimate"},
      {"session", "Run recognition, discard and the switch to 3-state BB84"},
      {"sweep", "Monte Carlo recognition delay over window sizes"},
      {"fit", "Fit the linear and square-root delay models to a sweep CSV"},
      {"coverage", "Fraction of simulated errors whose discard covers the insecure region"},
  };
  std::string fit_csv;
  for (const auto& [name, help] : commands) {
    auto& sub = subs[name];
    sub.app = app.add_subcommand(name, help);
    add_settings_options(sub);
  }
  subs["fit"].app->add_option("csv", fit_csv, "Sweep CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      const auto cfg = qkdmon::cli::build_run_config(collect(sub));
      if (name == "size-window") return qkdmon::cli::cmd_size_window(cfg, std::cout);
      if (name == "simulate") return qkdmon::cli::cmd_simulate(cfg, std::cout);
      if (name == "session") return qkdmon::cli::cmd_session(cfg, std::cout);
      if (name == "sweep") return qkdmon::cli::cmd_sweep(cfg, std::cout);
      if (name == "fit") return qkdmon::cli::cmd_fit(fit_csv, cfg, std::cout);
      if (name == "coverage") return qkdmon::cli::cmd_coverage(cfg, std::cout);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ERROR: " << msg << '\n';
    return 1;
  }
  return 1;
}

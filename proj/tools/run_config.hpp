// Flat `key = value` configuration merged with command-line flags.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkdmon/countermeasure.hpp"
#include "qkdmon/keystream.hpp"
#include "qkdmon/montecarlo.hpp"
#include "qkdmon/recognizer.hpp"

namespace qkdmon::cli {

/// Error raised while reading or validating configuration; the message names its source.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Setting {
  std::string value;
  std::string origin;  // "file.cfg:12" or "--flag"
};

using Settings = std::map<std::string, Setting>;

/// Keys accepted in config files; flags use the same names with '-' for '_'.
const std::vector<std::string>& known_keys();

Settings parse_config_text(const std::string& text, const std::string& source_name);
Settings load_config_file(const std::string& path);
/// Entries of `overrides` replace those of `base`.
Settings merge(Settings base, const Settings& overrides);

struct RunConfig {
  double delta_mu = 0.05;
  double epsilon = 0.001;
  std::optional<double> threshold;
  double mu_nominal = 0.5;
  std::optional<std::uint64_t> window;

  enum class Mode { bernoulli, detector } mode = Mode::bernoulli;
  double mean = 0.5;
  std::optional<double> mean_after;
  std::array<double, 4> efficiencies{1.0, 1.0, 1.0, 1.0};
  std::optional<DetectorId> fault_detector;
  double fault_efficiency = 0.0;
  std::optional<std::uint64_t> onset;

  std::uint64_t length = 1'000'000;
  std::uint64_t post_length = 100'000;
  double k_sigma = 3.0;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::optional<std::uint64_t> stride;
  bool plot = false;
  bool dump_stream = false;
  std::optional<std::string> replay;

  std::uint64_t trials = 2500;
  std::vector<std::uint64_t> sizes = default_window_sizes();
  std::uint64_t horizon = 10;
  unsigned threads = 0;
  std::optional<std::string> models_path;

  std::uint64_t window_n() const;
  RecognizerConfig recognizer() const;
  StreamConfig stream() const;
  SweepConfig sweep() const;
  /// Published coefficients unless a models file from `fit` was given.
  DiscardModels models() const;
};

/// Converts and validates every setting; errors carry the setting's origin.
RunConfig build_run_config(const Settings& settings);

}  // namespace qkdmon::cli

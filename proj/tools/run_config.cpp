#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace qkdmon::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

class Reader {
 public:
  explicit Reader(const Settings& s) : settings_(s) {}

  const Setting* find(const std::string& key) const {
    const auto it = settings_.find(key);
    return it == settings_.end() ? nullptr : &it->second;
  }

  std::string origin(const std::string& key) const {
    const auto* s = find(key);
    return s ? s->origin : "default";
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(origin(key) + ": " + key + ": " + why);
  }

  template <typename T>
  void number(const std::string& key, T& out) const {
    if (const auto* s = find(key)) out = parse<T>(key, s->value);
  }

  template <typename T>
  void number(const std::string& key, std::optional<T>& out) const {
    if (const auto* s = find(key)) out = parse<T>(key, s->value);
  }

  void flag(const std::string& key, bool& out) const {
    const auto* s = find(key);
    if (!s) return;
    if (s->value == "true" || s->value == "1" || s->value == "yes" || s->value.empty()) {
      out = true;
    } else if (s->value == "false" || s->value == "0" || s->value == "no") {
      out = false;
    } else {
      fail(key, "expected a boolean, got '" + s->value + "'");
    }
  }

  template <typename T>
  std::vector<T> list(const std::string& key) const {
    std::vector<T> out;
    std::stringstream ss(find(key)->value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse<T>(key, trim(item)));
    return out;
  }

  template <typename T>
  T parse(const std::string& key, const std::string& text) const {
    T value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
      fail(key, "cannot parse '" + text + "' as a number");
    }
    return value;
  }

 private:
  const Settings& settings_;
};

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "delta",  "epsilon", "threshold", "mu_nominal",  "window", "mode",       "mean",   "mean_after",
      "efficiencies", "fault_detector", "fault_efficiency", "onset", "length", "post_length", "k_sigma",
      "seed",   "out",     "stride",    "plot",        "dump_stream", "replay", "trials", "sizes",
      "horizon", "threads", "models"};
  return keys;
}

Settings parse_config_text(const std::string& text, const std::string& source_name) {
  Settings settings;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  const auto& keys = known_keys();
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = source_name + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = normalize_key(trim(line.substr(0, eq)));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    settings[key] = {trim(line.substr(eq + 1)), where};
  }
  return settings;
}

Settings load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

Settings merge(Settings base, const Settings& overrides) {
  for (const auto& [k, v] : overrides) base[k] = v;
  return base;
}

RunConfig build_run_config(const Settings& settings) {
  const Reader r(settings);
  RunConfig c;

  r.number("delta", c.delta_mu);
  r.number("epsilon", c.epsilon);
  r.number("threshold", c.threshold);
  r.number("mu_nominal", c.mu_nominal);
  r.number("window", c.window);
  if (const auto* s = r.find("mode")) {
    if (s->value == "bernoulli") {
      c.mode = RunConfig::Mode::bernoulli;
    } else if (s->value == "detector") {
      c.mode = RunConfig::Mode::detector;
    } else {
      r.fail("mode", "expected 'bernoulli' or 'detector', got '" + s->value + "'");
    }
  }
  r.number("mean", c.mean);
  r.number("mean_after", c.mean_after);
  if (r.find("efficiencies")) {
    const auto eff = r.list<double>("efficiencies");
    if (eff.size() != 4) r.fail("efficiencies", "expected 4 values in the order Z0,Z1,X0,X1");
    std::copy(eff.begin(), eff.end(), c.efficiencies.begin());
  }
  if (const auto* s = r.find("fault_detector")) {
    try {
      c.fault_detector = parse_detector(s->value);
    } catch (const std::exception& e) {
      r.fail("fault_detector", e.what());
    }
  }
  r.number("fault_efficiency", c.fault_efficiency);
  r.number("onset", c.onset);
  r.number("length", c.length);
  r.number("post_length", c.post_length);
  r.number("k_sigma", c.k_sigma);
  r.number("seed", c.seed);
  if (const auto* s = r.find("out")) c.out = s->value;
  r.number("stride", c.stride);
  r.flag("plot", c.plot);
  r.flag("dump_stream", c.dump_stream);
  if (const auto* s = r.find("replay")) c.replay = s->value;
  r.number("trials", c.trials);
  if (r.find("sizes")) c.sizes = r.list<std::uint64_t>("sizes");
  r.number("horizon", c.horizon);
  r.number("threads", c.threads);
  if (const auto* s = r.find("models")) c.models_path = s->value;

  // Field-level checks, attributed to the setting that introduced the value.
  if (!(c.delta_mu > 0.0)) r.fail("delta", "must be positive");
  if (!(c.epsilon > 0.0 && c.epsilon <= 1.0)) r.fail("epsilon", "must lie in (0,1]");
  if (c.threshold && !(*c.threshold >= c.delta_mu)) r.fail("threshold", "must be >= delta (t >= delta_mu)");
  if (!(c.mu_nominal > 0.0 && c.mu_nominal < 1.0)) r.fail("mu_nominal", "must lie strictly between 0 and 1");
  if (c.window && *c.window < window_size(c.delta_mu, c.epsilon)) {
    r.fail("window", "narrower than the " + std::to_string(window_size(c.delta_mu, c.epsilon)) +
                         " bits required by delta and epsilon");
  }
  if (!(c.mean >= 0.0 && c.mean <= 1.0)) r.fail("mean", "must lie in [0,1]");
  if (c.mean_after && !(*c.mean_after >= 0.0 && *c.mean_after <= 1.0)) r.fail("mean_after", "must lie in [0,1]");
  for (double e : c.efficiencies) {
    if (!(e >= 0.0 && e <= 1.0)) r.fail("efficiencies", "each efficiency must lie in [0,1]");
  }
  if (c.mode == RunConfig::Mode::detector && c.fault_detector) {
    const double nominal = c.efficiencies[static_cast<std::size_t>(*c.fault_detector)];
    if (!(c.fault_efficiency >= 0.0 && c.fault_efficiency < nominal)) {
      r.fail("fault_efficiency", "must be >= 0 and below the detector's nominal efficiency");
    }
  }
  if (c.fault_detector && !c.onset) r.fail("fault_detector", "a fault needs an onset index");
  if (c.mean_after && !c.onset) r.fail("mean_after", "a mean shift needs an onset index");
  if (!(c.k_sigma >= 0.0)) r.fail("k_sigma", "must be non-negative");
  if (c.stride && *c.stride == 0) r.fail("stride", "must be positive");
  if (c.trials < 2) r.fail("trials", "need at least 2 trials");
  if (c.sizes.empty()) r.fail("sizes", "need at least one window size");
  for (auto n : c.sizes) {
    if (n < window_size(c.delta_mu, c.epsilon)) r.fail("sizes", "window size " + std::to_string(n) + " is too narrow");
  }
  if (c.horizon == 0) r.fail("horizon", "must be positive");
  try {
    c.stream().validate();
  } catch (const std::exception& e) {
    r.fail(c.mode == RunConfig::Mode::detector ? "efficiencies" : "mean", e.what());
  }
  return c;
}

std::uint64_t RunConfig::window_n() const { return window ? *window : window_size(delta_mu, epsilon); }

RecognizerConfig RunConfig::recognizer() const {
  RecognizerConfig r;
  r.mu_nominal = mu_nominal;
  r.threshold_t = threshold.value_or(delta_mu);
  r.params = {delta_mu, epsilon, window_n()};
  return r;
}

StreamConfig RunConfig::stream() const {
  StreamConfig s;
  s.seed = seed;
  if (mode == Mode::bernoulli) {
    BernoulliMode b{mean, std::nullopt};
    if (onset) b.shift = MeanShift{*onset, mean_after.value_or(1.0 / 3.0)};
    s.mode = b;
  } else {
    DetectorMode d{DetectorBank(efficiencies), std::nullopt};
    if (onset && fault_detector) d.fault = ErrorSchedule{*onset, *fault_detector, fault_efficiency};
    s.mode = d;
  }
  return s;
}

SweepConfig RunConfig::sweep() const {
  SweepConfig s;
  s.window_sizes = sizes;
  s.trials_per_size = trials;
  s.recognizer = recognizer();
  s.mu0 = mean;
  s.mu1 = mean_after.value_or(1.0 / 3.0);
  s.master_seed = seed;
  s.horizon_factor = horizon;
  s.threads = threads;
  return s;
}

DiscardModels RunConfig::models() const {
  DiscardModels m;
  if (!models_path) return m;
  std::ifstream in(*models_path);
  if (!in) throw ConfigError("cannot open models file '" + *models_path + "'");
  bool have_linear = false;
  bool have_sqrt = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    FitResult fit;
    try {
      fit = parse_fit_line(line);
    } catch (const std::exception& e) {
      throw ConfigError(*models_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (fit.model.kind == ModelKind::linear) {
      m.mean = fit.model;
      have_linear = true;
    } else {
      m.spread = fit.model;
      have_sqrt = true;
    }
  }
  if (!have_linear || !have_sqrt) throw ConfigError(*models_path + ": needs both a linear and a sqrt line");
  m.provenance = "fitted";
  return m;
}

}  // namespace qkdmon::cli

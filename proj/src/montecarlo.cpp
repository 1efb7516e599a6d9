#include "qkdmon/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qkdmon/keystream.hpp"

namespace qkdmon {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && end == s.data() + s.size() && !s.empty();
}

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc{} ? end : buf);
}

void require_distinct_abscissae(const std::vector<std::pair<double, double>>& points) {
  std::set<double> xs;
  for (const auto& p : points) xs.insert(p.first);
  if (xs.size() < 2) throw std::invalid_argument("regression needs at least 2 distinct window sizes");
}

// Returns (slope, intercept).
std::pair<double, double> least_squares(const std::vector<std::pair<double, double>>& points) {
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace

std::vector<std::uint64_t> default_window_sizes() {
  return {5'000, 10'000, 20'000, 30'000, 40'000, 50'000, 75'000, 100'000};
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t window_n, std::uint64_t trial) {
  return splitmix64(splitmix64(splitmix64(master) ^ window_n) ^ trial);
}

void SweepConfig::validate() const {
  if (window_sizes.empty()) throw std::invalid_argument("sweep needs at least one window size");
  if (trials_per_size < 2) throw std::invalid_argument("sweep needs at least 2 trials per window size");
  if (horizon_factor == 0) throw std::invalid_argument("horizon factor must be positive");
  for (auto n : window_sizes) recognizer_for(n).validate();
  if (!(mu0 >= 0.0 && mu0 <= 1.0 && mu1 >= 0.0 && mu1 <= 1.0)) {
    throw std::invalid_argument("shift means must lie in [0,1]");
  }
}

RecognizerConfig SweepConfig::recognizer_for(std::uint64_t window_n) const {
  RecognizerConfig r = recognizer;
  r.params.window_n = window_n;
  return r;
}

TrialOutcome run_trial(const SweepConfig& cfg, std::uint64_t window_n, std::uint64_t seed) {
  StreamConfig stream_cfg;
  stream_cfg.seed = seed;
  stream_cfg.mode = BernoulliMode{cfg.mu0, MeanShift{window_n, cfg.mu1}};
  KeyStream stream(stream_cfg);
  Recognizer rec(cfg.recognizer_for(window_n));

  const std::uint64_t onset = window_n;
  const std::uint64_t horizon = onset + cfg.horizon_factor * window_n;
  while (stream.index() < horizon) {
    if (const auto event = rec.push(stream.next())) {
      // A crossing before onset is a false alarm, not a measurement of the delay.
      if (event->trigger_index < onset) return {};
      return {true, event->trigger_index - onset};
    }
  }
  return {};
}

std::vector<TrialOutcome> run_trials(const SweepConfig& cfg, std::uint64_t window_n, std::uint64_t trials) {
  std::vector<TrialOutcome> outcomes(trials);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, trials));

  std::atomic<std::uint64_t> next{0};
  const auto work = [&] {
    for (std::uint64_t i = next++; i < trials; i = next++) {
      outcomes[i] = run_trial(cfg, window_n, derive_seed(cfg.master_seed, window_n, i));
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return outcomes;
}

SweepPoint summarize(std::uint64_t window_n, const std::vector<TrialOutcome>& outcomes) {
  SweepPoint p;
  p.window_n = window_n;
  p.trials = outcomes.size();
  double sum = 0.0;
  std::uint64_t ok = 0;
  for (const auto& o : outcomes) {
    if (!o.recognized) {
      ++p.failures;
      continue;
    }
    sum += static_cast<double>(o.delay);
    ++ok;
  }
  if (ok == 0) return p;
  p.mean_nr_bits = sum / static_cast<double>(ok);
  if (ok > 1) {
    double ss = 0.0;
    for (const auto& o : outcomes) {
      if (!o.recognized) continue;
      const double d = static_cast<double>(o.delay) - p.mean_nr_bits;
      ss += d * d;
    }
    p.std_bits = std::sqrt(ss / static_cast<double>(ok - 1));
  }
  return p;
}

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult result;
  for (auto n : cfg.window_sizes) {
    result.points.push_back(summarize(n, run_trials(cfg, n, cfg.trials_per_size)));
  }
  return result;
}

FitResult fit_linear(const std::vector<std::pair<double, double>>& points) {
  require_distinct_abscissae(points);
  const auto [slope, intercept] = least_squares(points);
  FitResult fit;
  fit.model = {ModelKind::linear, slope, -intercept, 0.0};
  double ss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - fit.model.evaluate(x);
    ss += r * r;
  }
  fit.rmse = std::sqrt(ss / static_cast<double>(points.size()));
  fit.model.rmse = fit.rmse;
  return fit;
}

FitResult fit_sqrt(const std::vector<std::pair<double, double>>& points) {
  require_distinct_abscissae(points);
  std::vector<std::pair<double, double>> squared;
  squared.reserve(points.size());
  for (const auto& [x, y] : points) {
    if (!(y >= 0.0)) throw std::invalid_argument("standard deviations must be non-negative");
    squared.emplace_back(x, y * y);
  }
  const auto [slope, intercept] = least_squares(squared);
  FitResult fit;
  fit.model = {ModelKind::sqrt, slope, -intercept, 0.0};
  double ss = 0.0;
  for (const auto& [x, y] : points) {
    // Outside the model's domain the prediction is zero spread.
    const double radicand = slope * x + intercept;
    const double r = y - (radicand > 0.0 ? std::sqrt(radicand) : 0.0);
    ss += r * r;
  }
  fit.rmse = std::sqrt(ss / static_cast<double>(points.size()));
  fit.model.rmse = fit.rmse;
  return fit;
}

CoverageResult coverage_check(const SweepConfig& cfg, std::uint64_t window_n, double k_sigma, std::uint64_t trials,
                              const DiscardModels& models) {
  if (trials < 100) throw std::invalid_argument("coverage check needs at least 100 trials");
  cfg.recognizer_for(window_n).validate();
  CoverageResult res;
  res.window_n = window_n;
  res.k_sigma = k_sigma;
  res.trials = trials;
  res.discard_count = discard_count(window_n, k_sigma, models);
  for (const auto& o : run_trials(cfg, window_n, trials)) {
    if (!o.recognized) {
      ++res.failures;
      continue;
    }
    if (res.discard_count >= o.delay + 1) ++res.covered;
  }
  return res;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "window_n,trials,mean_nr_bits,std_bits,failures\n";
  for (const auto& p : result.points) {
    os << p.window_n << ',' << p.trials << ',' << format_double(p.mean_nr_bits) << ','
       << format_double(p.std_bits) << ',' << p.failures << '\n';
  }
}

SweepResult read_sweep_csv(std::istream& is) {
  SweepResult result;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  const auto fail = [&](const std::string& why) {
    return std::runtime_error("sweep CSV line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "window_n,trials,mean_nr_bits,std_bits,failures") throw fail("unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 5) throw fail("expected 5 fields, got " + std::to_string(fields.size()));
    SweepPoint p;
    if (!parse_number(fields[0], p.window_n) || !parse_number(fields[1], p.trials) ||
        !parse_number(fields[2], p.mean_nr_bits) || !parse_number(fields[3], p.std_bits) ||
        !parse_number(fields[4], p.failures)) {
      throw fail("malformed field in '" + line + "'");
    }
    if (p.std_bits < 0.0) throw fail("negative standard deviation");
    result.points.push_back(p);
  }
  if (!header_seen) throw std::runtime_error("sweep CSV is empty");
  return result;
}

std::string format_fit_line(const FitResult& fit) {
  return std::string(to_string(fit.model.kind)) + ',' + format_double(fit.model.alpha) + ',' +
         format_double(fit.model.beta) + ',' + format_double(fit.rmse);
}

FitResult parse_fit_line(const std::string& line) {
  const auto fields = split(line, ',');
  const auto fail = [&] { return std::invalid_argument("malformed fit line '" + line + "'"); };
  if (fields.size() != 4) throw fail();
  FitResult fit;
  if (fields[0] == "linear") {
    fit.model.kind = ModelKind::linear;
  } else if (fields[0] == "sqrt") {
    fit.model.kind = ModelKind::sqrt;
  } else {
    throw fail();
  }
  if (!parse_number(fields[1], fit.model.alpha) || !parse_number(fields[2], fit.model.beta) ||
      !parse_number(fields[3], fit.rmse)) {
    throw fail();
  }
  fit.model.rmse = fit.rmse;
  return fit;
}

}  // namespace qkdmon

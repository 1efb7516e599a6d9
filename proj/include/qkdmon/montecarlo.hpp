// Monte Carlo sweeps of recognition delay, regression fits and discard coverage.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qkdmon/countermeasure.hpp"
#include "qkdmon/recognizer.hpp"

namespace qkdmon {

std::vector<std::uint64_t> default_window_sizes();

/// splitmix64 finalizer over (master, window, trial); stable across releases.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t window_n, std::uint64_t trial);

struct SweepConfig {
  std::vector<std::uint64_t> window_sizes = default_window_sizes();
  std::uint64_t trials_per_size = 2500;
  /// Only mu_nominal, threshold_t, delta_mu and epsilon are used; the window is swept.
  RecognizerConfig recognizer;
  double mu0 = 0.5;
  double mu1 = 1.0 / 3.0;
  std::uint64_t master_seed = 1;
  /// Post-onset bits allowed per window width before a trial counts as a failure.
  std::uint64_t horizon_factor = 10;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;

  void validate() const;
  RecognizerConfig recognizer_for(std::uint64_t window_n) const;
};

/// Result of one simulated SD error: onset at index window_n, after a full warm-up.
struct TrialOutcome {
  bool recognized = false;
  /// trigger_index - onset; meaningful only when recognized.
  std::uint64_t delay = 0;
};

TrialOutcome run_trial(const SweepConfig& cfg, std::uint64_t window_n, std::uint64_t seed);

/// All trials for one window size, in trial order regardless of thread count.
std::vector<TrialOutcome> run_trials(const SweepConfig& cfg, std::uint64_t window_n, std::uint64_t trials);

struct SweepPoint {
  std::uint64_t window_n = 0;
  std::uint64_t trials = 0;
  double mean_nr_bits = 0.0;
  double std_bits = 0.0;
  std::uint64_t failures = 0;

  bool operator==(const SweepPoint&) const = default;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  bool operator==(const SweepResult&) const = default;
};

/// Mean and sample standard deviation over recognized trials; failures only counted.
SweepPoint summarize(std::uint64_t window_n, const std::vector<TrialOutcome>& outcomes);

SweepResult run_sweep(const SweepConfig& cfg);

struct FitResult {
  RegressionModel model;
  double rmse = 0.0;
};

/// OLS for y = alpha*n - beta.
FitResult fit_linear(const std::vector<std::pair<double, double>>& points);
/// OLS of sigma^2 = alpha*n - beta; rmse measured on sigma.
FitResult fit_sqrt(const std::vector<std::pair<double, double>>& points);

struct CoverageResult {
  std::uint64_t window_n = 0;
  double k_sigma = 0.0;
  std::uint64_t discard_count = 0;
  std::uint64_t trials = 0;
  std::uint64_t covered = 0;
  std::uint64_t failures = 0;
  double fraction() const { return trials ? static_cast<double>(covered) / static_cast<double>(trials) : 0.0; }
};

/// Fraction of trials whose discard reaches back to the onset. The insecure region
/// is onset..trigger inclusive, i.e. delay + 1 bits. Unrecognized trials count as uncovered.
CoverageResult coverage_check(const SweepConfig& cfg, std::uint64_t window_n, double k_sigma, std::uint64_t trials,
                              const DiscardModels& models = {});

void write_sweep_csv(std::ostream& os, const SweepResult& result);
/// Throws std::runtime_error naming the offending line.
SweepResult read_sweep_csv(std::istream& is);

/// `kind,alpha,beta,rmse`
std::string format_fit_line(const FitResult& fit);
FitResult parse_fit_line(const std::string& line);

}  // namespace qkdmon

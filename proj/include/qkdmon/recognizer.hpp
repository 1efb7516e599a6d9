// Threshold recognition of a shifted raw-key mean, and its analytic timing model.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "qkdmon/stats.hpp"

namespace qkdmon {

enum class Direction : std::uint8_t { below, above };

std::string_view to_string(Direction d);

struct RecognizerConfig {
  double mu_nominal = 0.5;
  double threshold_t = 0.05;
  EstimatorParams params = EstimatorParams::derive(0.05, 0.001);

  /// t = delta_mu, window from the bound.
  static RecognizerConfig with_defaults(double mu_nominal, double delta_mu, double epsilon);

  /// Throws std::invalid_argument unless 0 < mu_nominal < 1 and t >= delta_mu.
  void validate() const;
};

struct RecognitionEvent {
  std::uint64_t trigger_index = 0;
  double estimate_at_trigger = 0.0;
  Direction direction = Direction::below;
};

/// nullopt while mu_hat stays inside the closed band [mu_N - t, mu_N + t].
std::optional<Direction> check(double mu_hat, const RecognizerConfig& cfg);

/// Expected share of the window held by post-onset bits when the estimate first
/// reaches the threshold on the side mu1 moves toward.
double expected_recognition_fraction(double mu_nominal, double threshold_t, double mu0, double mu1);

/// Estimator value for a window holding n0 bits of mean mu0 and n1 bits of mean mu1.
double weighted_mean_prediction(double mu0, double mu1, double n0, double n1);

/// Streaming recognizer. Latches on the first crossing until rearm().
class Recognizer {
 public:
  explicit Recognizer(const RecognizerConfig& cfg);

  /// Feeds the bit at the next raw-key index; returns the event on first crossing.
  std::optional<RecognitionEvent> push(std::uint8_t bit) {
    estimator_.push(bit);
    const std::uint64_t index = index_++;
    if (latched_ || !estimator_.ready()) return std::nullopt;
    const double mu_hat = *estimator_.mean();
    const auto dir = check(mu_hat, cfg_);
    if (!dir) return std::nullopt;
    latched_ = true;
    return RecognitionEvent{index, mu_hat, *dir};
  }

  /// Clears the latch and the window; the next event needs a fresh full window.
  void rearm();

  bool latched() const { return latched_; }
  std::uint64_t index() const { return index_; }
  const SlidingEstimator& estimator() const { return estimator_; }
  const RecognizerConfig& config() const { return cfg_; }

 private:
  RecognizerConfig cfg_;
  SlidingEstimator estimator_;
  std::uint64_t index_ = 0;
  bool latched_ = false;
};

std::optional<RecognitionEvent> run_recognition(std::span<const std::uint8_t> stream, const RecognizerConfig& cfg);

}  // namespace qkdmon

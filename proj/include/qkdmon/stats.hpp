// Entropy measures, Chernoff-Hoeffding window sizing and the sliding-window mean.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace qkdmon {

/// H2(p) in bits, with 0*log2(0) taken as 0. Throws std::domain_error outside [0,1].
double binary_entropy(double p);

/// Non-smooth per-bit min-entropy, -log2 max(p, 1-p).
double min_entropy_per_bit(double p);

/// Best-case secret-key-rate ceiling per raw-key bit for a ones-fraction p; equals H2(p).
double skr_cap(double p);

/// Smallest n with n >= ln(2/epsilon) / (2 delta_mu^2).
std::uint64_t window_size(double delta_mu, double epsilon);

struct EstimatorParams {
  double delta_mu = 0.05;
  double epsilon = 0.001;
  std::uint64_t window_n = 0;

  /// Window width taken from the Chernoff-Hoeffding bound.
  static EstimatorParams derive(double delta_mu, double epsilon);
  /// Throws std::invalid_argument if the window is narrower than the bound requires.
  void validate() const;
};

/// Mean of the most recent `window_n` bits. Reports nothing until the window is full.
class SlidingEstimator {
 public:
  explicit SlidingEstimator(std::uint64_t window_n);

  void push(std::uint8_t bit) {
    const std::uint8_t b = bit ? 1 : 0;
    if (filled_ == buffer_.size()) {
      running_sum_ -= buffer_[head_];
    } else {
      ++filled_;
    }
    buffer_[head_] = b;
    running_sum_ += b;
    if (++head_ == buffer_.size()) head_ = 0;
  }

  bool ready() const { return filled_ == buffer_.size(); }
  std::optional<double> mean() const {
    if (!ready()) return std::nullopt;
    return static_cast<double>(running_sum_) / static_cast<double>(buffer_.size());
  }

  std::uint64_t window() const { return buffer_.size(); }
  std::uint64_t filled() const { return filled_; }
  std::uint64_t running_sum() const { return running_sum_; }

  /// Window contents, oldest first.
  std::vector<std::uint8_t> contents() const;

  void reset();

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t head_ = 0;
  std::uint64_t filled_ = 0;
  std::uint64_t running_sum_ = 0;
};

}  // namespace qkdmon

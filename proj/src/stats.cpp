#include "qkdmon/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qkdmon {

namespace {

void require_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << "probability out of [0,1]: " << p;
    throw std::domain_error(msg.str());
  }
}

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace

double binary_entropy(double p) {
  require_probability(p);
  return -plogp(p) - plogp(1.0 - p);
}

double min_entropy_per_bit(double p) {
  require_probability(p);
  return -std::log2(std::max(p, 1.0 - p));
}

double skr_cap(double p) { return binary_entropy(p); }

std::uint64_t window_size(double delta_mu, double epsilon) {
  if (!(delta_mu > 0.0) || !std::isfinite(delta_mu)) {
    throw std::domain_error("delta_mu must be positive");
  }
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw std::domain_error("epsilon must lie in (0,1]");
  }
  const double bound = std::log(2.0 / epsilon) / (2.0 * delta_mu * delta_mu);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(bound)));
}

EstimatorParams EstimatorParams::derive(double delta_mu, double epsilon) {
  return {delta_mu, epsilon, window_size(delta_mu, epsilon)};
}

void EstimatorParams::validate() const {
  const auto minimum = window_size(delta_mu, epsilon);
  if (window_n < minimum) {
    throw std::invalid_argument("window of " + std::to_string(window_n) + " bits is below the " +
                                std::to_string(minimum) + " required for this delta_mu and epsilon");
  }
}

SlidingEstimator::SlidingEstimator(std::uint64_t window_n) : buffer_(window_n, 0) {
  if (window_n == 0) throw std::invalid_argument("window must hold at least one bit");
}

std::vector<std::uint8_t> SlidingEstimator::contents() const {
  std::vector<std::uint8_t> out;
  out.reserve(filled_);
  const std::size_t start = ready() ? head_ : 0;
  for (std::size_t i = 0; i < filled_; ++i) out.push_back(buffer_[(start + i) % buffer_.size()]);
  return out;
}

void SlidingEstimator::reset() {
  std::fill(buffer_.begin(), buffer_.end(), 0);
  head_ = 0;
  filled_ = 0;
  running_sum_ = 0;
}

}  // namespace qkdmon

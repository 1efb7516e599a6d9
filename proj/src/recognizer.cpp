#include "qkdmon/recognizer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qkdmon {

std::string_view to_string(Direction d) { return d == Direction::below ? "below" : "above"; }

RecognizerConfig RecognizerConfig::with_defaults(double mu_nominal, double delta_mu, double epsilon) {
  RecognizerConfig cfg;
  cfg.mu_nominal = mu_nominal;
  cfg.threshold_t = delta_mu;
  cfg.params = EstimatorParams::derive(delta_mu, epsilon);
  return cfg;
}

void RecognizerConfig::validate() const {
  if (!(mu_nominal > 0.0 && mu_nominal < 1.0)) {
    throw std::invalid_argument("nominal mean must lie strictly between 0 and 1");
  }
  params.validate();
  if (!(threshold_t >= params.delta_mu)) {
    std::ostringstream msg;
    msg << "recognition threshold " << threshold_t << " is below delta_mu " << params.delta_mu;
    throw std::invalid_argument(msg.str());
  }
}

std::optional<Direction> check(double mu_hat, const RecognizerConfig& cfg) {
  if (mu_hat < cfg.mu_nominal - cfg.threshold_t) return Direction::below;
  if (mu_hat > cfg.mu_nominal + cfg.threshold_t) return Direction::above;
  return std::nullopt;
}

double expected_recognition_fraction(double mu_nominal, double threshold_t, double mu0, double mu1) {
  if (mu1 == mu0) throw std::domain_error("degenerate shift: post-onset mean equals pre-onset mean");
  if (mu1 >= mu_nominal - threshold_t && mu1 <= mu_nominal + threshold_t) {
    throw std::domain_error("unrecognizable shift: post-onset mean lies inside the nominal band");
  }
  const double sign = mu1 > mu0 ? 1.0 : -1.0;
  return (mu_nominal + sign * threshold_t - mu0) / (mu1 - mu0);
}

double weighted_mean_prediction(double mu0, double mu1, double n0, double n1) {
  if (!(n0 >= 0.0 && n1 >= 0.0) || n0 + n1 <= 0.0) throw std::domain_error("empty window");
  return (mu0 * n0 + mu1 * n1) / (n0 + n1);
}

Recognizer::Recognizer(const RecognizerConfig& cfg) : cfg_(cfg), estimator_(cfg.params.window_n) {
  cfg_.validate();
}

void Recognizer::rearm() {
  latched_ = false;
  estimator_.reset();
}

std::optional<RecognitionEvent> run_recognition(std::span<const std::uint8_t> stream, const RecognizerConfig& cfg) {
  Recognizer rec(cfg);
  for (std::uint8_t bit : stream) {
    if (auto event = rec.push(bit)) return event;
  }
  return std::nullopt;
}

}  // namespace qkdmon

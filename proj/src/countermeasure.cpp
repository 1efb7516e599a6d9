#include "qkdmon/countermeasure.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qkdmon {

std::string_view to_string(ModelKind k) { return k == ModelKind::linear ? "linear" : "sqrt"; }

double RegressionModel::evaluate(double n) const {
  const double affine = alpha * n - beta;
  if (kind == ModelKind::linear) return affine;
  if (!(affine > 0.0)) {
    std::ostringstream msg;
    msg << "window too small for sigma model: " << alpha << "*" << n << " - " << beta << " <= 0";
    throw std::domain_error(msg.str());
  }
  return std::sqrt(affine);
}

RegressionModel paper_linear_model() { return {ModelKind::linear, 0.300, 5.058, 9.156}; }
RegressionModel paper_sqrt_model() { return {ModelKind::sqrt, 8.770, 2332.743, 11.068}; }

std::uint64_t mean_recognition_bits(const RegressionModel& linear, std::uint64_t n) {
  if (linear.kind != ModelKind::linear) throw std::invalid_argument("mean model must be linear");
  const double bits = linear.evaluate(static_cast<double>(n));
  if (!(bits > 0.0)) {
    throw std::domain_error("window of " + std::to_string(n) + " bits is below the linear model's domain");
  }
  return static_cast<std::uint64_t>(std::ceil(bits));
}

std::uint64_t std_recognition_bits(const RegressionModel& sqrt_model, std::uint64_t n) {
  if (sqrt_model.kind != ModelKind::sqrt) throw std::invalid_argument("spread model must be sqrt");
  return static_cast<std::uint64_t>(std::ceil(sqrt_model.evaluate(static_cast<double>(n))));
}

std::uint64_t discard_count_from_components(std::uint64_t mean_bits, std::uint64_t std_bits, double k_sigma) {
  if (!(k_sigma >= 0.0) || !std::isfinite(k_sigma)) throw std::domain_error("k_sigma must be non-negative");
  return mean_bits + static_cast<std::uint64_t>(std::ceil(k_sigma * static_cast<double>(std_bits)));
}

std::uint64_t discard_count(std::uint64_t n, double k_sigma, const DiscardModels& models) {
  return discard_count_from_components(mean_recognition_bits(models.mean, n), std_recognition_bits(models.spread, n),
                                       k_sigma);
}

double adjusted_rate(std::uint64_t raw_len, std::uint64_t n_d, double base_rate) {
  if (raw_len == 0) throw std::domain_error("raw key length must be positive");
  if (n_d > raw_len) throw std::domain_error("cannot discard more bits than the raw key holds");
  return static_cast<double>(raw_len - n_d) / static_cast<double>(raw_len) * base_rate;
}

std::optional<DetectorId> SessionState::parameter_estimation_state() const {
  if (!missing) return std::nullopt;
  return detector_for(basis_of(*missing), static_cast<std::uint8_t>(1U - bit_of(*missing)));
}

std::string ClassicalMessage::to_line() const {
  return "SWITCH3S state=" + std::string(to_string(missing_state)) + " effective=" + std::to_string(effective_index);
}

ClassicalMessage ClassicalMessage::parse(std::string_view line) {
  constexpr std::string_view kPrefix = "SWITCH3S state=";
  constexpr std::string_view kEffective = " effective=";
  const auto fail = [&] { return std::invalid_argument("malformed switch message: '" + std::string(line) + "'"); };
  if (!line.starts_with(kPrefix)) throw fail();
  line.remove_prefix(kPrefix.size());
  const auto pos = line.find(kEffective);
  if (pos == std::string_view::npos) throw fail();
  ClassicalMessage msg;
  msg.missing_state = parse_detector(line.substr(0, pos));
  const auto digits = line.substr(pos + kEffective.size());
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), msg.effective_index);
  if (ec != std::errc{} || end != digits.data() + digits.size() || digits.empty()) throw fail();
  return msg;
}

CountermeasurePlan make_plan(std::uint64_t n, double k_sigma, DetectorId missing, std::uint64_t raw_len,
                             const DiscardModels& models) {
  CountermeasurePlan plan;
  plan.k_sigma = k_sigma;
  plan.missing_state = missing;
  plan.discard_count = discard_count(n, k_sigma, models);
  plan.adjusted_rate_factor = adjusted_rate(raw_len, plan.discard_count, 1.0);
  return plan;
}

TransitionResult apply_countermeasure(const SessionState& session, const RecognitionEvent& event,
                                      const CountermeasurePlan& plan) {
  if (session.protocol != Protocol::BB84) throw std::logic_error("session already switched to 3-state BB84");
  if (event.trigger_index >= session.raw_key_length) {
    throw std::invalid_argument("recognition event lies beyond the raw key held by the session");
  }
  const std::uint64_t end = event.trigger_index + 1;
  if (plan.discard_count > end) {
    throw std::domain_error("discard of " + std::to_string(plan.discard_count) + " bits exceeds the " +
                            std::to_string(end) + " raw-key bits up to the trigger");
  }
  // A below-nominal shift can only come from losing a bit-1 state, above from a bit-0 state.
  const auto lost_bit = bit_of(plan.missing_state);
  if ((event.direction == Direction::below) != (lost_bit == 1)) {
    throw std::invalid_argument("missing state " + std::string(to_string(plan.missing_state)) +
                                " is inconsistent with a shift " + std::string(to_string(event.direction)) +
                                " nominal");
  }

  TransitionResult out;
  out.discarded = {end - plan.discard_count, end};
  out.session = session;
  out.session.protocol = Protocol::ThreeStateBB84;
  out.session.missing = plan.missing_state;
  out.session.key_basis = other_basis(basis_of(plan.missing_state));
  out.session.raw_key_length -= plan.discard_count;
  out.session.discarded += plan.discard_count;
  out.message = {plan.missing_state, end};
  return out;
}

double post_transition_mean(const DetectorBank& bank, const SessionState& session) {
  if (session.protocol != Protocol::ThreeStateBB84 || !session.key_basis) {
    throw std::logic_error("post-transition mean requires a 3-state session");
  }
  return key_basis_bit_mean(bank, *session.key_basis);
}

}  // namespace qkdmon

// Discard sizing after recognition, key-rate adjustment, and the switch to 3-state BB84.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "qkdmon/keystream.hpp"
#include "qkdmon/recognizer.hpp"

namespace qkdmon {

enum class ModelKind : std::uint8_t { linear, sqrt };

std::string_view to_string(ModelKind k);

/// linear: alpha*n - beta.  sqrt: sqrt(alpha*n - beta).
struct RegressionModel {
  ModelKind kind = ModelKind::linear;
  double alpha = 0.0;
  double beta = 0.0;
  double rmse = 0.0;

  /// Throws std::domain_error outside the model's domain.
  double evaluate(double n) const;
};

/// Published fit of mean recognition delay against window size.
RegressionModel paper_linear_model();
/// Published fit of recognition-delay standard deviation against window size.
RegressionModel paper_sqrt_model();

struct DiscardModels {
  RegressionModel mean = paper_linear_model();
  RegressionModel spread = paper_sqrt_model();
  /// "paper" for the published coefficients, "fitted" when re-estimated.
  std::string provenance = "paper";
};

/// ceil(alpha*n - beta); requires n > beta/alpha.
std::uint64_t mean_recognition_bits(const RegressionModel& linear, std::uint64_t n);
/// ceil(sqrt(alpha*n - beta)); requires a positive radicand.
std::uint64_t std_recognition_bits(const RegressionModel& sqrt_model, std::uint64_t n);

/// mean_bits + ceil(k_sigma * std_bits). Components are already whole bits.
std::uint64_t discard_count_from_components(std::uint64_t mean_bits, std::uint64_t std_bits, double k_sigma);
std::uint64_t discard_count(std::uint64_t n, double k_sigma, const DiscardModels& models = {});

/// R' = (l_r - n_d) / l_r * R.
double adjusted_rate(std::uint64_t raw_len, std::uint64_t n_d, double base_rate);

struct CountermeasurePlan {
  std::uint64_t discard_count = 0;
  double k_sigma = 3.0;
  DetectorId missing_state = DetectorId::X1;
  double adjusted_rate_factor = 1.0;
};

enum class Protocol : std::uint8_t { BB84, ThreeStateBB84 };

struct SessionState {
  Protocol protocol = Protocol::BB84;
  std::optional<DetectorId> missing;  // set in ThreeStateBB84
  std::optional<Basis> key_basis;     // set in ThreeStateBB84
  std::uint64_t raw_key_length = 0;
  std::uint64_t discarded = 0;

  /// The surviving state of the broken basis, used only for parameter estimation.
  std::optional<DetectorId> parameter_estimation_state() const;
};

/// Sent to Alice in the clear; carries no key material.
struct ClassicalMessage {
  DetectorId missing_state = DetectorId::X1;
  std::uint64_t effective_index = 0;

  /// `SWITCH3S state=<Z0|Z1|X0|X1> effective=<u64>`
  std::string to_line() const;
  /// Throws std::invalid_argument on malformed input.
  static ClassicalMessage parse(std::string_view line);

  bool operator==(const ClassicalMessage&) const = default;
};

/// Raw-key indices [begin, end).
struct DiscardRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t length() const { return end - begin; }
};

struct TransitionResult {
  SessionState session;
  ClassicalMessage message;
  DiscardRange discarded;
};

/// Builds the plan for a window of n bits and a raw key of raw_len bits so far.
CountermeasurePlan make_plan(std::uint64_t n, double k_sigma, DetectorId missing, std::uint64_t raw_len,
                             const DiscardModels& models = {});

/// Discards the plan's bits ending at the trigger, tells Alice which state to drop,
/// and moves the session to 3-state BB84 keyed on the intact basis.
/// Throws std::logic_error if the session already left BB84.
TransitionResult apply_countermeasure(const SessionState& session, const RecognitionEvent& event,
                                      const CountermeasurePlan& plan);

/// Ones-fraction of key-basis sifted bits after the transition.
double post_transition_mean(const DetectorBank& bank, const SessionState& session);

}  // namespace qkdmon

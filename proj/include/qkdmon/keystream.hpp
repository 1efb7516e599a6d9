// Raw-key bit stream generation for a passive four-detector BB84 receiver.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qkdmon {

enum class Basis : std::uint8_t { Z, X };

/// Detector for |0>, |1>, |+>, |-> respectively. Z0/X0 yield bit 0, Z1/X1 yield bit 1.
enum class DetectorId : std::uint8_t { Z0 = 0, Z1 = 1, X0 = 2, X1 = 3 };

inline constexpr std::array<DetectorId, 4> kAllDetectors{DetectorId::Z0, DetectorId::Z1,
                                                         DetectorId::X0, DetectorId::X1};

constexpr Basis basis_of(DetectorId d) { return static_cast<std::uint8_t>(d) < 2 ? Basis::Z : Basis::X; }
constexpr std::uint8_t bit_of(DetectorId d) { return static_cast<std::uint8_t>(d) & 1U; }
constexpr DetectorId detector_for(Basis b, std::uint8_t bit) {
  return static_cast<DetectorId>((b == Basis::Z ? 0U : 2U) + (bit & 1U));
}
constexpr Basis other_basis(Basis b) { return b == Basis::Z ? Basis::X : Basis::Z; }

std::string_view to_string(DetectorId d);
std::string_view to_string(Basis b);
/// Accepts "Z0", "Z1", "X0", "X1" (case-insensitive).
DetectorId parse_detector(std::string_view text);

class DetectorBank {
 public:
  /// All four detectors at efficiency 1.
  DetectorBank() : eff_{1.0, 1.0, 1.0, 1.0} {}
  explicit DetectorBank(std::array<double, 4> efficiencies);

  double operator[](DetectorId d) const { return eff_[static_cast<std::size_t>(d)]; }
  const std::array<double, 4>& efficiencies() const { return eff_; }

  DetectorBank with(DetectorId d, double efficiency) const;

  bool operator==(const DetectorBank&) const = default;

 private:
  std::array<double, 4> eff_;
};

/// P(raw-key bit = 1) after sifting, for uniform state choice and a 50/50 passive
/// basis split. Throws std::domain_error if no detector can click.
double sifted_bit_mean(const DetectorBank& bank);

/// Ones-fraction when Alice only sends key-basis states (3-state operation).
double key_basis_bit_mean(const DetectorBank& bank, Basis key_basis);

/// A detector degrades to `new_efficiency` from raw-key index `onset` onward.
struct ErrorSchedule {
  std::uint64_t onset = 0;
  DetectorId detector = DetectorId::X1;
  double new_efficiency = 0.0;
};

/// Bare probability-distribution change at a raw-key index.
struct MeanShift {
  std::uint64_t onset = 0;
  double mean_after = 0.5;
};

struct BernoulliMode {
  double mean = 0.5;
  std::optional<MeanShift> shift;
};

struct DetectorMode {
  DetectorBank bank;
  std::optional<ErrorSchedule> fault;
};

struct StreamConfig {
  std::variant<BernoulliMode, DetectorMode> mode = BernoulliMode{};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range means or efficiencies.
  void validate() const;
  std::optional<std::uint64_t> onset() const;
  /// Compact description used in stream file headers, e.g. "bernoulli:0.5->0.333333".
  std::string mode_string() const;
};

inline constexpr std::string_view kPrngName = "mt19937_64";

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Identical on every
/// conforming platform, unlike the std:: distributions.
inline double unit_interval(std::uint64_t word) { return static_cast<double>(word >> 11) * 0x1.0p-53; }

/// Sequential raw-key source. Indices count sifted key bits; rounds with no click or a
/// basis mismatch never appear.
class KeyStream {
 public:
  explicit KeyStream(const StreamConfig& config);

  std::uint8_t next();
  std::uint64_t index() const { return index_; }

  /// Alice switches to 3-state operation: only `key_basis` rounds contribute key bits.
  /// Detector mode only.
  void restrict_to_basis(Basis key_basis);
  std::optional<Basis> key_basis() const { return key_basis_; }

  const DetectorBank& current_bank() const { return bank_; }

 private:
  std::uint8_t next_bernoulli();
  std::uint8_t next_detector();
  void maybe_apply_fault();

  StreamConfig config_;
  std::mt19937_64 rng_;
  std::uint64_t index_ = 0;
  double mean_ = 0.5;
  DetectorBank bank_;
  std::optional<std::uint64_t> onset_;
  bool fault_applied_ = false;
  bool bernoulli_ = true;
  std::optional<Basis> key_basis_;
};

std::vector<std::uint8_t> generate(const StreamConfig& config, std::size_t count);

/// ASCII stream file: header `# seed=<u64> mode=<...> onset=<...> prng=<name>`,
/// then '0'/'1' characters, 64 per line.
struct StreamFile {
  std::string header;
  std::vector<std::uint8_t> bits;
};

void write_stream(std::ostream& os, const StreamConfig& config, std::span<const std::uint8_t> bits);
/// Throws std::runtime_error naming the offending line.
StreamFile read_stream(std::istream& is);

}  // namespace qkdmon

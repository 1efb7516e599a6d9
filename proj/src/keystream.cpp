#include "qkdmon/keystream.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qkdmon {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << what << " must lie in [0,1], got " << p;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

std::string_view to_string(DetectorId d) {
  switch (d) {
    case DetectorId::Z0: return "Z0";
    case DetectorId::Z1: return "Z1";
    case DetectorId::X0: return "X0";
    case DetectorId::X1: return "X1";
  }
  return "?";
}

std::string_view to_string(Basis b) { return b == Basis::Z ? "Z" : "X"; }

DetectorId parse_detector(std::string_view text) {
  if (text.size() == 2) {
    const char basis = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    const char bit = text[1];
    if ((basis == 'Z' || basis == 'X') && (bit == '0' || bit == '1')) {
      return detector_for(basis == 'Z' ? Basis::Z : Basis::X, static_cast<std::uint8_t>(bit - '0'));
    }
  }
  throw std::invalid_argument("unknown detector '" + std::string(text) + "' (expected Z0, Z1, X0 or X1)");
}

DetectorBank::DetectorBank(std::array<double, 4> efficiencies) : eff_(efficiencies) {
  for (double e : eff_) check_probability(e, "detector efficiency");
}

DetectorBank DetectorBank::with(DetectorId d, double efficiency) const {
  auto eff = eff_;
  eff[static_cast<std::size_t>(d)] = efficiency;
  return DetectorBank(eff);
}

double sifted_bit_mean(const DetectorBank& bank) {
  // Every (state, matched basis) pair has the same weight, so the ones-fraction is
  // the efficiency-weighted share of the bit-1 detectors.
  const double ones = bank[DetectorId::Z1] + bank[DetectorId::X1];
  const double total = ones + bank[DetectorId::Z0] + bank[DetectorId::X0];
  if (total <= 0.0) throw std::domain_error("no detectable states: all detector efficiencies are zero");
  return ones / total;
}

double key_basis_bit_mean(const DetectorBank& bank, Basis key_basis) {
  const double zero = bank[detector_for(key_basis, 0)];
  const double one = bank[detector_for(key_basis, 1)];
  if (zero + one <= 0.0) {
    throw std::domain_error("both key-basis detectors are dead in basis " + std::string(to_string(key_basis)));
  }
  return one / (zero + one);
}

void StreamConfig::validate() const {
  if (const auto* b = std::get_if<BernoulliMode>(&mode)) {
    check_probability(b->mean, "stream mean");
    if (b->shift) check_probability(b->shift->mean_after, "post-onset mean");
    return;
  }
  const auto& d = std::get<DetectorMode>(mode);
  for (double e : d.bank.efficiencies()) check_probability(e, "detector efficiency");
  (void)sifted_bit_mean(d.bank);
  if (d.fault) {
    const auto& f = *d.fault;
    if (!(f.new_efficiency >= 0.0 && f.new_efficiency < d.bank[f.detector])) {
      std::ostringstream msg;
      msg << "fault efficiency " << f.new_efficiency << " for " << to_string(f.detector)
          << " must be >= 0 and below the nominal " << d.bank[f.detector];
      throw std::invalid_argument(msg.str());
    }
  }
}

std::optional<std::uint64_t> StreamConfig::onset() const {
  if (const auto* b = std::get_if<BernoulliMode>(&mode)) {
    if (b->shift) return b->shift->onset;
    return std::nullopt;
  }
  const auto& d = std::get<DetectorMode>(mode);
  if (d.fault) return d.fault->onset;
  return std::nullopt;
}

std::string StreamConfig::mode_string() const {
  std::ostringstream os;
  os.precision(6);
  if (const auto* b = std::get_if<BernoulliMode>(&mode)) {
    os << "bernoulli:" << b->mean;
    if (b->shift) os << "->" << b->shift->mean_after;
    return os.str();
  }
  const auto& d = std::get<DetectorMode>(mode);
  os << "detector:";
  for (std::size_t i = 0; i < 4; ++i) os << (i ? "," : "") << d.bank.efficiencies()[i];
  if (d.fault) os << ":" << to_string(d.fault->detector) << "->" << d.fault->new_efficiency;
  return os.str();
}

KeyStream::KeyStream(const StreamConfig& config) : config_(config), rng_(config.seed) {
  config_.validate();
  onset_ = config_.onset();
  bernoulli_ = std::holds_alternative<BernoulliMode>(config_.mode);
  if (const auto* b = std::get_if<BernoulliMode>(&config_.mode)) {
    mean_ = b->mean;
  } else {
    bank_ = std::get<DetectorMode>(config_.mode).bank;
  }
}

void KeyStream::restrict_to_basis(Basis key_basis) {
  if (!std::holds_alternative<DetectorMode>(config_.mode)) {
    throw std::logic_error("basis restriction requires the detector model");
  }
  key_basis_ = key_basis;
}

void KeyStream::maybe_apply_fault() {
  if (fault_applied_ || !onset_ || index_ < *onset_) return;
  fault_applied_ = true;
  if (auto* b = std::get_if<BernoulliMode>(&config_.mode)) {
    mean_ = b->shift->mean_after;
  } else {
    const auto& f = *std::get<DetectorMode>(config_.mode).fault;
    bank_ = bank_.with(f.detector, f.new_efficiency);
  }
}

std::uint8_t KeyStream::next() {
  maybe_apply_fault();
  const std::uint8_t bit = bernoulli_ ? next_bernoulli() : next_detector();
  ++index_;
  return bit;
}

std::uint8_t KeyStream::next_bernoulli() { return unit_interval(rng_()) < mean_ ? 1 : 0; }

std::uint8_t KeyStream::next_detector() {
  if (key_basis_) {
    (void)key_basis_bit_mean(bank_, *key_basis_);
  } else {
    (void)sifted_bit_mean(bank_);
  }
  // One draw per round: bit 0 is Alice's value, bit 1 her basis, bit 2 the basis the
  // passive beamsplitter routes to, the top 53 bits the click trial.
  for (;;) {
    const std::uint64_t w = rng_();
    const auto value = static_cast<std::uint8_t>(w & 1U);
    const Basis alice = (w & 2U) ? Basis::X : Basis::Z;
    const Basis bob = (w & 4U) ? Basis::X : Basis::Z;
    if (alice != bob) continue;
    if (key_basis_ && alice != *key_basis_) continue;
    if (unit_interval(w) < bank_[detector_for(alice, value)]) return value;
  }
}

std::vector<std::uint8_t> generate(const StreamConfig& config, std::size_t count) {
  KeyStream stream(config);
  std::vector<std::uint8_t> bits(count);
  for (auto& b : bits) b = stream.next();
  return bits;
}

void write_stream(std::ostream& os, const StreamConfig& config, std::span<const std::uint8_t> bits) {
  os << "# seed=" << config.seed << " mode=" << config.mode_string() << " onset=";
  if (const auto onset = config.onset()) {
    os << *onset;
  } else {
    os << "none";
  }
  os << " prng=" << kPrngName << '\n';
  std::string line;
  line.reserve(64);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    line.push_back(bits[i] ? '1' : '0');
    if (line.size() == 64 || i + 1 == bits.size()) {
      os << line << '\n';
      line.clear();
    }
  }
}

StreamFile read_stream(std::istream& is) {
  StreamFile file;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (file.header.empty() && file.bits.empty()) file.header = line;
      continue;
    }
    if (line.size() > 64) {
      throw std::runtime_error("stream line " + std::to_string(lineno) + ": more than 64 bits");
    }
    for (char c : line) {
      if (c != '0' && c != '1') {
        throw std::runtime_error("stream line " + std::to_string(lineno) + ": invalid character '" +
                                 std::string(1, c) + "'");
      }
      file.bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
  }
  return file;
}

}  // namespace qkdmon

#include "qkdmon/countermeasure.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "qkdmon/stats.hpp"

namespace qkdmon {
namespace {

RecognitionEvent below_at(std::uint64_t index) { return {index, 0.449, Direction::below}; }

SessionState bb84_with(std::uint64_t raw_len) {
  SessionState s;
  s.raw_key_length = raw_len;
  return s;
}

TEST(PublishedModels, Coefficients) {
  const auto lin = paper_linear_model();
  const auto sq = paper_sqrt_model();
  EXPECT_EQ(lin.alpha, 0.300);
  EXPECT_EQ(lin.beta, 5.058);
  EXPECT_EQ(lin.rmse, 9.156);
  EXPECT_EQ(sq.alpha, 8.770);
  EXPECT_EQ(sq.beta, 2332.743);
  EXPECT_EQ(sq.rmse, 11.068);
}

TEST(MeanRecognitionBits, FormulaPath) {
  EXPECT_EQ(mean_recognition_bits(paper_linear_model(), 50'000), 14'995U);
  EXPECT_EQ(mean_recognition_bits({ModelKind::linear, 0.3, 0.0, 0.0}, 10), 3U);
  EXPECT_THROW(mean_recognition_bits(paper_linear_model(), 16), std::domain_error);
  EXPECT_EQ(mean_recognition_bits(paper_linear_model(), 17), 1U);
  EXPECT_THROW(mean_recognition_bits(paper_sqrt_model(), 50'000), std::invalid_argument);
}

TEST(StdRecognitionBits, FormulaPathAndDomainBoundary) {
  EXPECT_EQ(std_recognition_bits(paper_sqrt_model(), 50'000), 661U);
  EXPECT_EQ(std_recognition_bits({ModelKind::sqrt, 1.0, 0.0, 0.0}, 100), 10U);
  // 8.770*266 - 2332.743 = 0.077 > 0, while n = 265 leaves a negative radicand.
  EXPECT_EQ(std_recognition_bits(paper_sqrt_model(), 266), 1U);
  EXPECT_THROW(std_recognition_bits(paper_sqrt_model(), 265), std::domain_error);
}

TEST(DiscardCount, RoundedComponentsAndFormulaPaths) {
  EXPECT_EQ(discard_count_from_components(14'993, 661, 3.0), 16'976U);
  EXPECT_EQ(discard_count(50'000, 3.0), 16'978U);
  EXPECT_EQ(discard_count(50'000, 0.0), mean_recognition_bits(paper_linear_model(), 50'000));
  EXPECT_THROW(discard_count(100, 3.0), std::domain_error);
  EXPECT_THROW(discard_count_from_components(1, 1, -1.0), std::domain_error);
}

TEST(DiscardCount, MonotoneInWindowAndMargin) {
  std::uint64_t prev = 0;
  for (std::uint64_t n = 300; n <= 200'000; n += 997) {
    const auto d = discard_count(n, 3.0);
    EXPECT_GE(d, prev) << n;
    prev = d;
  }
  prev = 0;
  for (double k = 0.0; k <= 6.0; k += 0.25) {
    const auto d = discard_count(50'000, k);
    EXPECT_GE(d, prev) << k;
    prev = d;
  }
}

TEST(AdjustedRate, Examples) {
  EXPECT_EQ(adjusted_rate(50'000, 0, 0.7), 0.7);
  EXPECT_NEAR(adjusted_rate(50'000, 16'976, 1.0), 0.66048, 1e-12);
  EXPECT_EQ(adjusted_rate(50'000, 50'000, 1.0), 0.0);
  EXPECT_THROW(adjusted_rate(10, 11, 1.0), std::domain_error);
  EXPECT_THROW(adjusted_rate(0, 0, 1.0), std::domain_error);
}

TEST(AdjustedRate, LinearInRateDecreasingInDiscard) {
  for (std::uint64_t nd = 0; nd < 1000; nd += 37) {
    EXPECT_NEAR(adjusted_rate(1000, nd, 2.5), 2.5 * adjusted_rate(1000, nd, 1.0), 1e-15);
    EXPECT_GT(adjusted_rate(1000, nd, 1.0), adjusted_rate(1000, nd + 1, 1.0));
  }
}

TEST(ClassicalMessage, LineFormat) {
  const ClassicalMessage msg{DetectorId::X1, 116'000};
  EXPECT_EQ(msg.to_line(), "SWITCH3S state=X1 effective=116000");
  for (auto d : kAllDetectors) {
    const ClassicalMessage m{d, 12345678901234ULL};
    EXPECT_EQ(ClassicalMessage::parse(m.to_line()), m);
  }
  EXPECT_THROW(ClassicalMessage::parse("SWITCH3S state=Q1 effective=3"), std::invalid_argument);
  EXPECT_THROW(ClassicalMessage::parse("SWITCH3S state=X1 effective="), std::invalid_argument);
  EXPECT_THROW(ClassicalMessage::parse("SWITCH state=X1 effective=3"), std::invalid_argument);
  EXPECT_THROW(ClassicalMessage::parse("SWITCH3S state=X1 effective=3x"), std::invalid_argument);
}

TEST(ApplyCountermeasure, MissingMinusStateKeepsZBasis) {
  const auto plan = make_plan(50'000, 3.0, DetectorId::X1, 116'000);
  EXPECT_EQ(plan.discard_count, 16'978U);
  EXPECT_NEAR(plan.adjusted_rate_factor, (116'000.0 - 16'978.0) / 116'000.0, 1e-15);
  const auto out = apply_countermeasure(bb84_with(116'000), below_at(115'999), plan);
  EXPECT_EQ(out.session.protocol, Protocol::ThreeStateBB84);
  EXPECT_EQ(out.session.key_basis, Basis::Z);
  EXPECT_EQ(out.session.missing, DetectorId::X1);
  EXPECT_EQ(out.session.parameter_estimation_state(), DetectorId::X0);
  EXPECT_EQ(out.discarded.length(), 16'978U);
  EXPECT_EQ(out.discarded.end, 116'000U);
  EXPECT_EQ(out.session.raw_key_length + out.discarded.length(), 116'000U);
  EXPECT_EQ(out.session.discarded, 16'978U);
  EXPECT_EQ(out.message.to_line(), "SWITCH3S state=X1 effective=116000");
}

TEST(ApplyCountermeasure, MissingOneStateKeepsXBasis) {
  const auto plan = make_plan(50'000, 3.0, DetectorId::Z1, 90'000);
  const auto out = apply_countermeasure(bb84_with(90'000), below_at(80'000), plan);
  EXPECT_EQ(out.session.key_basis, Basis::X);
  EXPECT_EQ(out.session.parameter_estimation_state(), DetectorId::Z0);
  EXPECT_EQ(out.discarded.begin, 80'001U - 16'978U);
  EXPECT_EQ(out.message.effective_index, 80'001U);
}

TEST(ApplyCountermeasure, StateErrors) {
  const auto plan = make_plan(50'000, 3.0, DetectorId::X1, 116'000);
  const auto once = apply_countermeasure(bb84_with(116'000), below_at(115'999), plan);
  EXPECT_THROW(apply_countermeasure(once.session, below_at(115'999), plan), std::logic_error);
  // Losing a bit-0 state pushes the mean up, never down.
  const auto wrong = make_plan(50'000, 3.0, DetectorId::Z0, 116'000);
  EXPECT_THROW(apply_countermeasure(bb84_with(116'000), below_at(115'999), wrong), std::invalid_argument);
  EXPECT_THROW(apply_countermeasure(bb84_with(10'000), below_at(9'999), plan), std::domain_error);
  EXPECT_THROW(apply_countermeasure(bb84_with(100), below_at(200), plan), std::invalid_argument);
}

TEST(PostTransitionMean, Examples) {
  SessionState z;
  z.protocol = Protocol::ThreeStateBB84;
  z.missing = DetectorId::X1;
  z.key_basis = Basis::Z;
  EXPECT_EQ(post_transition_mean(DetectorBank({1, 1, 1, 0}), z), 0.5);
  EXPECT_NEAR(post_transition_mean(DetectorBank({1, 0.8, 1, 0}), z), 4.0 / 9.0, 1e-15);
  EXPECT_EQ(post_transition_mean(DetectorBank{}, z), 0.5);
  EXPECT_THROW(post_transition_mean(DetectorBank({0, 0, 1, 0}), z), std::domain_error);
  EXPECT_THROW(post_transition_mean(DetectorBank{}, SessionState{}), std::logic_error);
}

TEST(PostTransitionStream, DeadDetectorRestoresEntropy) {
  StreamConfig sc;
  sc.seed = 12;
  sc.mode = DetectorMode{DetectorBank{}, ErrorSchedule{0, DetectorId::X1, 0.0}};
  KeyStream ks(sc);
  ks.next();
  ks.restrict_to_basis(Basis::Z);
  std::uint64_t ones = 0;
  constexpr int kBits = 100'000;
  for (int i = 0; i < kBits; ++i) ones += ks.next();
  const double mean = static_cast<double>(ones) / kBits;
  EXPECT_NEAR(mean, 0.5, 0.05);
  EXPECT_GE(binary_entropy(mean), 0.99);
}

}  // namespace
}  // namespace qkdmon

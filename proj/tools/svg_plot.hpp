#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace qkdmon::cli {

struct EstimatePlot {
  std::vector<std::pair<std::uint64_t, double>> series;  // (raw-key index, mu_hat)
  std::uint64_t length = 0;
  double mu_nominal = 0.5;
  double threshold_t = 0.05;
  std::optional<std::uint64_t> onset;
  std::optional<std::uint64_t> recognition;
};

/// Standalone SVG: estimate trace, nominal line, both thresholds, onset/recognition markers.
void write_svg(std::ostream& os, const EstimatePlot& plot);

}  // namespace qkdmon::cli

#include "svg_plot.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <ostream>

namespace qkdmon::cli {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

}  // namespace

void write_svg(std::ostream& os, const EstimatePlot& plot) {
  double lo = plot.mu_nominal - 2.0 * plot.threshold_t;
  double hi = plot.mu_nominal + 2.0 * plot.threshold_t;
  for (const auto& [i, m] : plot.series) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  const double span_x = static_cast<double>(std::max<std::uint64_t>(plot.length, 1));
  const auto px = [&](double index) { return kMargin + index / span_x * (kWidth - 2 * kMargin); };
  const auto py = [&](double mu) { return kHeight - kMargin - (mu - lo) / (hi - lo) * (kHeight - 2 * kMargin); };

  fmt::print(os, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
             kWidth, kHeight, kWidth, kHeight);
  fmt::print(os, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  fmt::print(os, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kMargin,
             kHeight - kMargin, kWidth - kMargin);
  fmt::print(os, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kMargin, kMargin,
             kHeight - kMargin);

  const auto hline = [&](double mu, const char* colour) {
    fmt::print(os,
               "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
               "stroke-dasharray=\"6,4\"/>\n",
               kMargin, py(mu), kWidth - kMargin, py(mu), colour);
  };
  const auto vline = [&](std::uint64_t index) {
    const double x = px(static_cast<double>(index));
    fmt::print(os,
               "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"orange\" "
               "stroke-dasharray=\"6,4\"/>\n",
               x, kMargin, x, kHeight - kMargin);
  };
  hline(plot.mu_nominal, "blue");
  hline(plot.mu_nominal - plot.threshold_t, "red");
  hline(plot.mu_nominal + plot.threshold_t, "red");
  if (plot.onset) vline(*plot.onset);
  if (plot.recognition) vline(*plot.recognition);

  if (!plot.series.empty()) {
    fmt::print(os, "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"");
    for (const auto& [i, m] : plot.series) fmt::print(os, "{:.2f},{:.2f} ", px(static_cast<double>(i)), py(m));
    fmt::print(os, "\"/>\n");
  }
  fmt::print(os, "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">raw-key bit index</text>\n",
             kWidth / 2, kHeight - 15);
  fmt::print(os,
             "<text x=\"15\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 15 {})\">estimated mean</text>\n",
             kHeight / 2, kHeight / 2);
  fmt::print(os, "<text x=\"{}\" y=\"{:.2f}\" font-size=\"10\">{:.3f}</text>\n", 5, py(hi) + 4, hi);
  fmt::print(os, "<text x=\"{}\" y=\"{:.2f}\" font-size=\"10\">{:.3f}</text>\n", 5, py(lo) + 4, lo);
  fmt::print(os, "</svg>\n");
}

}  // namespace qkdmon::cli

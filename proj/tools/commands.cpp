#include "commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qkdmon/stats.hpp"
#include "svg_plot.hpp"

namespace qkdmon::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write output file '" + path.string() + "'");
  return f;
}

void check_written(std::ofstream& f, const std::string& name) {
  f.flush();
  if (!f) throw std::runtime_error("failed writing '" + name + "'");
}

struct SegmentStats {
  std::uint64_t bits = 0;
  std::uint64_t ones = 0;
  double mean() const { return bits ? static_cast<double>(ones) / static_cast<double>(bits) : 0.0; }
};

SegmentStats count(std::span<const std::uint8_t> bits) {
  SegmentStats s;
  s.bits = bits.size();
  for (auto b : bits) s.ones += b;
  return s;
}

std::string describe_segment(const char* label, const SegmentStats& s) {
  if (s.bits == 0) return fmt::format("{}_bits=0", label);
  const double m = s.mean();
  return fmt::format("{0}_bits={1} {0}_mean={2:.6f} {0}_entropy={3:.6f} {0}_skr_cap={4:.6f} {0}_min_entropy={5:.6f}",
                     label, s.bits, m, binary_entropy(m), skr_cap(m), min_entropy_per_bit(m));
}

std::optional<std::uint64_t> onset_from_header(const std::string& header) {
  const auto pos = header.find("onset=");
  if (pos == std::string::npos) return std::nullopt;
  std::istringstream is(header.substr(pos + 6));
  std::uint64_t v = 0;
  if (is >> v) return v;
  return std::nullopt;
}

}  // namespace

int cmd_size_window(const RunConfig& cfg, std::ostream& out) {
  const auto n = window_size(cfg.delta_mu, cfg.epsilon);
  fmt::print(out, "# delta_mu={} epsilon={}\n{}\n", cfg.delta_mu, cfg.epsilon, n);
  return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto rec_cfg = cfg.recognizer();
  const StreamConfig stream_cfg = cfg.stream();

  std::vector<std::uint8_t> bits;
  std::optional<std::uint64_t> onset;
  std::string source;
  if (cfg.replay) {
    std::ifstream in(*cfg.replay);
    if (!in) throw std::runtime_error("cannot open replay file '" + *cfg.replay + "'");
    auto file = read_stream(in);
    bits = std::move(file.bits);
    onset = onset_from_header(file.header);
    source = fmt::format("replay={}", *cfg.replay);
  } else {
    bits = generate(stream_cfg, cfg.length);
    onset = stream_cfg.onset();
    source = fmt::format("seed={} prng={} mode={}", stream_cfg.seed, kPrngName, stream_cfg.mode_string());
  }
  const std::uint64_t length = bits.size();
  const std::uint64_t stride = cfg.stride.value_or(std::max<std::uint64_t>(1, length / 10'000));

  Recognizer rec(rec_cfg);
  std::optional<RecognitionEvent> event;
  EstimatePlot plot{{}, length, rec_cfg.mu_nominal, rec_cfg.threshold_t, onset, std::nullopt};

  auto csv = open_output(cfg, "timeseries.csv");
  fmt::print(csv, "index,mu_hat\n");
  for (std::uint64_t i = 0; i < length; ++i) {
    if (auto ev = rec.push(bits[i]); ev && !event) event = ev;
    if ((i + 1) % stride != 0) continue;
    // Warm-up rows are kept with an empty estimate so the row count depends only on length.
    if (const auto m = rec.estimator().mean()) {
      fmt::print(csv, "{},{:.6f}\n", i, *m);
      plot.series.emplace_back(i, *m);
    } else {
      fmt::print(csv, "{},\n", i);
    }
  }
  check_written(csv, "timeseries.csv");

  auto events = open_output(cfg, "events.txt");
  if (onset) fmt::print(events, "onset {}\n", *onset);
  if (event) {
    fmt::print(events, "recognition {} direction={} mu_hat={:.6f}", event->trigger_index, to_string(event->direction),
               event->estimate_at_trigger);
    if (onset && event->trigger_index >= *onset) fmt::print(events, " delay={}", event->trigger_index - *onset);
    fmt::print(events, "\n");
    plot.recognition = event->trigger_index;
  }
  check_written(events, "events.txt");

  const std::uint64_t split = onset ? std::min(*onset, length) : length;
  const std::span<const std::uint8_t> all(bits);
  std::string summary =
      fmt::format("simulate {} bits={} window_n={} delta_mu={} epsilon={} t={} mu_nominal={} stride={} onset={} "
                  "recognition={} {} {}",
                  source, length, rec_cfg.params.window_n, rec_cfg.params.delta_mu, rec_cfg.params.epsilon,
                  rec_cfg.threshold_t, rec_cfg.mu_nominal, stride, onset ? std::to_string(*onset) : "none",
                  event ? std::to_string(event->trigger_index) : "none",
                  describe_segment("before", count(all.first(split))), describe_segment("after", count(all.subspan(split))));
  fmt::print(out, "{}\n", summary);
  auto sf = open_output(cfg, "summary.txt");
  fmt::print(sf, "{}\n", summary);
  check_written(sf, "summary.txt");

  if (cfg.dump_stream && !cfg.replay) {
    auto f = open_output(cfg, "stream.txt");
    write_stream(f, stream_cfg, bits);
    check_written(f, "stream.txt");
  }
  if (cfg.plot) {
    auto f = open_output(cfg, "estimate.svg");
    write_svg(f, plot);
    check_written(f, "estimate.svg");
  }
  return 0;
}

int cmd_session(const RunConfig& cfg, std::ostream& out) {
  if (cfg.mode != RunConfig::Mode::detector) throw std::invalid_argument("session requires mode = detector");
  const auto rec_cfg = cfg.recognizer();
  const StreamConfig stream_cfg = cfg.stream();
  const auto models = cfg.models();
  const auto onset = stream_cfg.onset();
  const auto& fault = std::get<DetectorMode>(stream_cfg.mode).fault;

  std::ostringstream log;
  fmt::print(log, "session seed={} prng={} mode={} window_n={} t={} k_sigma={} models={}\n", stream_cfg.seed,
             kPrngName, stream_cfg.mode_string(), rec_cfg.params.window_n, rec_cfg.threshold_t, cfg.k_sigma,
             models.provenance);

  KeyStream stream(stream_cfg);
  Recognizer rec(rec_cfg);
  SessionState state;
  std::vector<std::uint8_t> bb84_bits;
  std::vector<std::uint8_t> post_bits;
  std::optional<TransitionResult> transition;

  while (!transition && stream.index() < cfg.length) {
    const auto bit = stream.next();
    bb84_bits.push_back(bit);
    ++state.raw_key_length;
    const auto event = rec.push(bit);
    if (!event) continue;
    if (!fault || event->trigger_index < fault->onset) {
      fmt::print(log, "false_alarm index={} direction={} mu_hat={:.6f}\n", event->trigger_index,
                 to_string(event->direction), event->estimate_at_trigger);
      rec.rearm();
      continue;
    }
    fmt::print(log, "recognition index={} direction={} mu_hat={:.6f} delay={}\n", event->trigger_index,
               to_string(event->direction), event->estimate_at_trigger, event->trigger_index - fault->onset);
    const auto plan = make_plan(rec_cfg.params.window_n, cfg.k_sigma, fault->detector, state.raw_key_length, models);
    transition = apply_countermeasure(state, *event, plan);
    state = transition->session;
    stream.restrict_to_basis(*state.key_basis);
    rec.rearm();

    fmt::print(log, "message {}\n", transition->message.to_line());
    fmt::print(log, "discard begin={} end={} count={} covers_onset={}\n", transition->discarded.begin,
               transition->discarded.end, transition->discarded.length(),
               transition->discarded.begin <= fault->onset ? "yes" : "no");
    fmt::print(log, "adjusted_rate_factor={:.6f} raw_len_at_trigger={}\n", plan.adjusted_rate_factor,
               event->trigger_index + 1);
    fmt::print(log, "protocol=3-state-BB84 missing={} key_basis={} pe_state={} expected_mean={:.6f}\n",
               to_string(*state.missing), to_string(*state.key_basis), to_string(*state.parameter_estimation_state()),
               post_transition_mean(stream.current_bank(), state));
  }

  if (transition) {
    for (std::uint64_t i = 0; i < cfg.post_length; ++i) {
      const auto bit = stream.next();
      post_bits.push_back(bit);
      ++state.raw_key_length;
      if (const auto event = rec.push(bit)) {
        fmt::print(log, "recognition_after_switch index={} direction={} mu_hat={:.6f}\n", event->trigger_index,
                   to_string(event->direction), event->estimate_at_trigger);
        break;
      }
    }
  }

  const std::span<const std::uint8_t> bb84(bb84_bits);
  const std::uint64_t split = onset ? std::min<std::uint64_t>(*onset, bb84.size()) : bb84.size();
  fmt::print(log, "{}\n", describe_segment("pre_fault", count(bb84.first(split))));
  if (split < bb84.size()) fmt::print(log, "{}\n", describe_segment("post_fault_bb84", count(bb84.subspan(split))));
  if (transition) fmt::print(log, "{}\n", describe_segment("post_switch", count(post_bits)));
  fmt::print(log, "final protocol={} raw_key_length={} discarded={}\n",
             state.protocol == Protocol::BB84 ? "BB84" : "3-state-BB84", state.raw_key_length, state.discarded);

  fmt::print(out, "{}", log.str());
  auto f = open_output(cfg, "session.log");
  fmt::print(f, "{}", log.str());
  check_written(f, "session.log");
  if (transition) {
    auto m = open_output(cfg, "messages.txt");
    fmt::print(m, "{}\n", transition->message.to_line());
    check_written(m, "messages.txt");
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const auto result = run_sweep(cfg.sweep());
  std::ostringstream csv;
  write_sweep_csv(csv, result);
  fmt::print(out, "{}", csv.str());
  auto f = open_output(cfg, "sweep.csv");
  fmt::print(f, "{}", csv.str());
  check_written(f, "sweep.csv");
  return 0;
}

int cmd_fit(const std::string& csv_path, const RunConfig& cfg, std::ostream& out) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open sweep CSV '" + csv_path + "'");
  const auto sweep = read_sweep_csv(in);
  std::vector<std::pair<double, double>> means;
  std::vector<std::pair<double, double>> spreads;
  for (const auto& p : sweep.points) {
    if (p.failures == p.trials) {
      throw std::runtime_error(fmt::format("window {} has no recognized trials to fit", p.window_n));
    }
    means.emplace_back(static_cast<double>(p.window_n), p.mean_nr_bits);
    spreads.emplace_back(static_cast<double>(p.window_n), p.std_bits);
  }
  const std::string text = format_fit_line(fit_linear(means)) + "\n" + format_fit_line(fit_sqrt(spreads)) + "\n";
  fmt::print(out, "{}", text);
  auto f = open_output(cfg, "fit.txt");
  fmt::print(f, "{}", text);
  check_written(f, "fit.txt");
  return 0;
}

int cmd_coverage(const RunConfig& cfg, std::ostream& out) {
  const auto models = cfg.models();
  auto sweep = cfg.sweep();
  const auto n = cfg.window_n();
  const auto res = coverage_check(sweep, n, cfg.k_sigma, cfg.trials, models);
  const std::string line = fmt::format(
      "coverage window_n={} k_sigma={} discard={} covered={} trials={} failures={} fraction={:.6f} models={} seed={}",
      res.window_n, res.k_sigma, res.discard_count, res.covered, res.trials, res.failures, res.fraction(),
      models.provenance, cfg.seed);
  fmt::print(out, "{}\n", line);
  auto f = open_output(cfg, "coverage.txt");
  fmt::print(f, "{}\n", line);
  check_written(f, "coverage.txt");
  return 0;
}

}  // namespace qkdmon::cli

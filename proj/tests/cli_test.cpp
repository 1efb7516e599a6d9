#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "run_config.hpp"

namespace qkdmon::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qkdmon_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig config_of(const std::string& text) { return build_run_config(parse_config_text(text, "test.cfg")); }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

TEST(ConfigText, ParsesKeyValueAndComments) {
  const auto s = parse_config_text("# header\ndelta = 0.1   # trailing\n\nepsilon=0.01\nk-sigma = 2\n", "a.cfg");
  EXPECT_EQ(s.at("delta").value, "0.1");
  EXPECT_EQ(s.at("delta").origin, "a.cfg:2");
  EXPECT_EQ(s.at("epsilon").value, "0.01");
  EXPECT_EQ(s.at("k_sigma").value, "2");
}

TEST(ConfigText, ErrorsNameTheLine) {
  try {
    parse_config_text("delta = 0.1\nbogus = 3\n", "b.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("b.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config_text("no equals sign\n", "c.cfg"), ConfigError);
}

TEST(RunConfigBuild, FlagsOverrideFile) {
  const auto file = parse_config_text("delta = 0.1\nepsilon = 0.01\n", "f.cfg");
  const Settings flags{{"delta", {"0.05", "--delta"}}};
  const auto cfg = build_run_config(merge(file, flags));
  EXPECT_EQ(cfg.delta_mu, 0.05);
  EXPECT_EQ(cfg.epsilon, 0.01);
}

TEST(RunConfigBuild, ValidationIsAttributed) {
  try {
    config_of("delta = 0.05\nthreshold = 0.01\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("test.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(config_of("delta = 0\n"), ConfigError);
  EXPECT_THROW(config_of("window = 100\n"), ConfigError);
  EXPECT_THROW(config_of("mode = quantum\n"), ConfigError);
  EXPECT_THROW(config_of("efficiencies = 1,1,1\n"), ConfigError);
  EXPECT_THROW(config_of("mode = detector\nfault_detector = X1\n"), ConfigError);
  EXPECT_THROW(config_of("mode = detector\nonset = 5\nfault_detector = X1\nfault_efficiency = 1\n"), ConfigError);
  EXPECT_THROW(config_of("mode = detector\nefficiencies = 0,0,0,0\n"), ConfigError);
  EXPECT_THROW(config_of("seed = -3\n"), ConfigError);
  const Settings flag{{"epsilon", {"2", "--epsilon"}}};
  try {
    build_run_config(flag);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("--epsilon", 0), 0U) << e.what();
  }
}

TEST(RunConfigBuild, DerivedObjects) {
  const auto cfg = config_of(
      "mode = detector\nefficiencies = 1, 1, 1, 0.9\nfault_detector = X1\nonset = 7\nthreshold = 0.06\nseed = 9\n");
  EXPECT_EQ(cfg.window_n(), 1521U);
  EXPECT_EQ(cfg.recognizer().threshold_t, 0.06);
  const auto stream = cfg.stream();
  EXPECT_EQ(stream.seed, 9U);
  EXPECT_EQ(stream.onset(), 7U);
  EXPECT_EQ(cfg.models().provenance, "paper");
}

TEST(SizeWindow, PrintsBound) {
  std::ostringstream out;
  EXPECT_EQ(cmd_size_window(config_of("delta = 0.05\nepsilon = 0.001\n"), out), 0);
  EXPECT_EQ(out.str(), "# delta_mu=0.05 epsilon=0.001\n1521\n");
  std::ostringstream out2;
  cmd_size_window(config_of("delta = 0.1\nepsilon = 0.01\n"), out2);
  EXPECT_NE(out2.str().find("\n265\n"), std::string::npos);
}

TEST(Simulate, StrideRowsIncludeWarmUpPadding) {
  const auto dir = scratch("stride");
  auto cfg = config_of("length = 1000000\nstride = 1000\n");
  cfg.out = dir.string();
  std::ostringstream out;
  cmd_simulate(cfg, out);
  const auto csv = slurp(dir / "timeseries.csv");
  EXPECT_EQ(count_lines(csv), 1001U);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,mu_hat");
  EXPECT_NE(csv.find("\n999,\n"), std::string::npos);
  EXPECT_NE(csv.find("\n1999,0."), std::string::npos);
}

TEST(Simulate, NoScheduleNoEvents) {
  const auto dir = scratch("nominal");
  auto cfg = config_of("length = 300000\nwindow = 50000\n");
  cfg.out = dir.string();
  std::ostringstream out;
  cmd_simulate(cfg, out);
  EXPECT_EQ(slurp(dir / "events.txt"), "");
  EXPECT_NE(out.str().find("onset=none recognition=none"), std::string::npos) << out.str();
}

TEST(Simulate, ThirdShiftRecognizesNearPredictedDelay) {
  const auto dir = scratch("third_shift");
  auto cfg = config_of("window = 50000\nonset = 100000\nmean_after = 0.3333333333333333\nlength = 250000\nplot = true\n");
  cfg.out = dir.string();
  std::ostringstream out;
  cmd_simulate(cfg, out);
  const auto events = slurp(dir / "events.txt");
  ASSERT_EQ(events.rfind("onset 100000\nrecognition ", 0), 0U) << events;
  const auto pos = events.find("delay=");
  ASSERT_NE(pos, std::string::npos);
  const double delay = std::stod(events.substr(pos + 6));
  EXPECT_NEAR(delay / 50'000.0, 0.3, 0.05);
  const auto svg = slurp(dir / "estimate.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0U);
  EXPECT_NE(svg.find("stroke=\"red\""), std::string::npos);
  EXPECT_NE(out.str().find("prng=mt19937_64"), std::string::npos);
}

TEST(Simulate, DumpAndReplayAgree) {
  const auto dir = scratch("replay");
  auto cfg = config_of("length = 20000\nonset = 8000\nmean_after = 0.2\ndump_stream = true\nstride = 100\n");
  cfg.out = dir.string();
  std::ostringstream out;
  cmd_simulate(cfg, out);
  const auto original = slurp(dir / "timeseries.csv");
  const auto original_events = slurp(dir / "events.txt");

  auto replay = cfg;
  replay.replay = (dir / "stream.txt").string();
  replay.out = (dir / "replayed").string();
  std::ostringstream out2;
  cmd_simulate(replay, out2);
  EXPECT_EQ(slurp(dir / "replayed" / "timeseries.csv"), original);
  EXPECT_EQ(slurp(dir / "replayed" / "events.txt"), original_events);
}

TEST(Simulate, DeterministicOutputs) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  auto cfg = config_of("length = 50000\nonset = 20000\nmean_after = 0.3\nseed = 77\n");
  std::ostringstream sink;
  cfg.out = a.string();
  cmd_simulate(cfg, sink);
  cfg.out = b.string();
  cmd_simulate(cfg, sink);
  for (const char* f : {"timeseries.csv", "events.txt", "summary.txt"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Simulate, UnwritableOutputFails) {
  const auto dir = scratch("unwritable");
  fs::create_directories(dir);
  std::ofstream(dir / "blocker") << "x";
  auto cfg = config_of("length = 100\n");
  cfg.out = (dir / "blocker" / "sub").string();
  std::ostringstream out;
  EXPECT_THROW(cmd_simulate(cfg, out), std::runtime_error);
}

TEST(Session, DeadDetectorSwitchesToThreeState) {
  const auto dir = scratch("session");
  auto cfg = config_of(
      "mode = detector\nfault_detector = X1\nfault_efficiency = 0\nonset = 100000\nwindow = 50000\n"
      "k_sigma = 3\nlength = 400000\npost_length = 100000\n");
  cfg.out = dir.string();
  std::ostringstream out;
  EXPECT_EQ(cmd_session(cfg, out), 0);
  const auto log = out.str();
  EXPECT_EQ(slurp(dir / "session.log"), log);
  EXPECT_NE(log.find("protocol=3-state-BB84 missing=X1 key_basis=Z pe_state=X0"), std::string::npos) << log;
  EXPECT_NE(log.find("message SWITCH3S state=X1 effective="), std::string::npos);
  EXPECT_NE(log.find("covers_onset=yes"), std::string::npos);
  EXPECT_NE(log.find("count=16978"), std::string::npos);
  const auto pos = log.find("post_switch_mean=");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_NEAR(std::stod(log.substr(pos + 17)), 0.5, 0.05);
  EXPECT_EQ(slurp(dir / "messages.txt").rfind("SWITCH3S state=X1 effective=", 0), 0U);
}

TEST(Session, NoScheduleStaysInBb84) {
  const auto dir = scratch("session_nominal");
  auto cfg = config_of("mode = detector\nlength = 20000\n");
  cfg.out = dir.string();
  std::ostringstream out;
  cmd_session(cfg, out);
  EXPECT_NE(out.str().find("final protocol=BB84 raw_key_length=20000 discarded=0"), std::string::npos) << out.str();
  EXPECT_FALSE(fs::exists(dir / "messages.txt"));
}

TEST(Session, RequiresDetectorMode) {
  std::ostringstream out;
  EXPECT_THROW(cmd_session(config_of("length = 10\n"), out), std::invalid_argument);
}

TEST(Fit, ExactLineCsvHasZeroRmse) {
  const auto dir = scratch("fit");
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "sweep.csv");
    csv << "window_n,trials,mean_nr_bits,std_bits,failures\n";
    csv.precision(17);
    for (int n : {10000, 20000, 40000}) {
      csv << n << ",100," << 0.3 * n - 5 << ',' << std::sqrt(9.0 * n - 2000) << ",0\n";
    }
  }
  auto cfg = config_of("");
  cfg.out = dir.string();
  std::ostringstream out;
  cmd_fit((dir / "sweep.csv").string(), cfg, out);
  std::istringstream lines(out.str());
  std::string linear, sqrt_line;
  std::getline(lines, linear);
  std::getline(lines, sqrt_line);
  const auto lf = parse_fit_line(linear);
  const auto sf = parse_fit_line(sqrt_line);
  EXPECT_NEAR(lf.model.alpha, 0.3, 1e-9);
  EXPECT_NEAR(lf.rmse, 0.0, 1e-6);
  EXPECT_NEAR(sf.model.alpha, 9.0, 1e-6);
  EXPECT_NEAR(sf.rmse, 0.0, 1e-6);

  // The written fit file feeds back in as discard models.
  auto with_models = config_of("models = " + (dir / "fit.txt").string() + "\n");
  const auto models = with_models.models();
  EXPECT_EQ(models.provenance, "fitted");
  EXPECT_NEAR(models.mean.alpha, 0.3, 1e-9);
}

TEST(Fit, MalformedCsvNamesLine) {
  const auto dir = scratch("fit_bad");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.csv") << "window_n,trials,mean_nr_bits,std_bits,failures\n10000,100,2995\n";
  auto cfg = config_of("");
  cfg.out = dir.string();
  std::ostringstream out;
  try {
    cmd_fit((dir / "bad.csv").string(), cfg, out);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(SweepAndCoverage, SmallRunsAreDeterministic) {
  const auto dir = scratch("sweep");
  auto cfg = config_of("sizes = 2000, 4000\ntrials = 20\nseed = 5\nthreads = 2\nwindow = 4000\n");
  cfg.out = dir.string();
  std::ostringstream a, b;
  cmd_sweep(cfg, a);
  cfg.threads = 1;
  cmd_sweep(cfg, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(slurp(dir / "sweep.csv"), a.str());

  cfg.trials = 150;
  std::ostringstream c;
  cmd_coverage(cfg, c);
  EXPECT_EQ(c.str().rfind("coverage window_n=4000 k_sigma=3 discard=", 0), 0U) << c.str();
  EXPECT_NE(c.str().find("models=paper seed=5"), std::string::npos);
}

}  // namespace
}  // namespace qkdmon::cli

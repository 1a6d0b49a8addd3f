#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "idt/benchmark_runner.hpp"
#include "idt/errors.hpp"
#include "idt/files.hpp"
#include "idt/monitor.hpp"
#include "idt/oracle.hpp"
#include "idt/records.hpp"

namespace idt::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogLevel { Off = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("IDT_LOG");
  if (env == nullptr) {
    return LogLevel::Off;
  }
  const std::string v = env;
  if (v.empty() || v == "0" || v == "off") {
    return LogLevel::Off;
  }
  if (v == "2" || v == "debug") {
    return LogLevel::Debug;
  }
  return LogLevel::Info;
}

class Logger {
public:
  explicit Logger(std::ostream& err) : err_(&err), level_(log_level()) {}

  void info(const std::string& msg) const { write(LogLevel::Info, "info", msg); }
  void debug(const std::string& msg) const { write(LogLevel::Debug, "debug", msg); }

private:
  void write(LogLevel at, const char* tag, const std::string& msg) const {
    if (level_ >= at) {
      *err_ << "idt [" << tag << "] " << msg << '\n';
    }
  }

  std::ostream* err_;
  LogLevel level_;
};

/// `-` selects the fallback stream, anything else is opened as a file.
class OutputTarget {
public:
  OutputTarget(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) {
      throw IoError("cannot write '" + path + "'");
    }
    stream_ = file_.get();
  }

  void line(const std::string& text) {
    *stream_ << text << '\n';
    stream_->flush();
    if (!*stream_) {
      throw IoError("write failed");
    }
  }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

struct CalibrateArgs {
  std::string input;
  std::size_t window = 300;
  std::size_t stride = 50;
  int bins = 3;
  double clip = 3.0;
  std::string groups;
  std::optional<std::size_t> calib_steps;
  std::string out;
  double threshold = 3.0;
  std::string joint_mode = "per_group_mean";
};

struct MonitorArgs {
  std::string input;
  std::string baseline;
  std::optional<double> threshold;
  std::size_t min_consecutive = 1;
  std::optional<std::int64_t> onset_step;
  std::string metrics_out = "-";
  std::string events_out = "-";
};

struct BenchArgs {
  std::string suite;
  bool control = false;
  std::size_t seeds = 5;
  std::string out;
  std::size_t threads = 1;
};

struct OracleArgs {
  std::size_t loops = 20;
  double samples = 1e6;
  std::uint64_t seed = 0;
  double tolerance = 0.01;
};

WindowSpec window_from_args(const CalibrateArgs& a) {
  WindowSpec spec;
  spec.length = a.window;
  spec.stride = a.stride;
  try {
    spec.joint_mode = joint_mode_from_string(a.joint_mode);
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

int do_calibrate(const CalibrateArgs& a, std::ostream& out, const Logger& log) {
  const WindowSpec spec = window_from_args(a);
  if (a.bins < 1) {
    throw UsageError("--bins must be >= 1");
  }
  if (!(a.clip > 0.0)) {
    throw UsageError("--clip must be > 0");
  }
  if (!(a.threshold > 0.0)) {
    throw UsageError("--threshold must be > 0");
  }

  auto source = open_source(a.input);
  TransitionReader reader(*source);
  std::vector<Transition> calibration;
  while (!a.calib_steps || calibration.size() < *a.calib_steps) {
    auto x = reader.next();
    if (!x) {
      break;
    }
    calibration.push_back(std::move(*x));
  }
  log.info("read " + std::to_string(calibration.size()) + " calibration steps");
  if (calibration.empty()) {
    throw CalibrationError("calibration input is empty");
  }
  const GroupingConfig grouping =
      a.groups.empty() ? GroupingConfig::whole(calibration.front().s.size(),
                                               calibration.front().a.size())
                       : load_grouping(a.groups);
  const BaselineBundle bundle =
      calibrate_bundle(calibration, spec, a.bins, a.clip, grouping, a.threshold);
  save_bundle(a.out, bundle);

  for (Channel c : kAllChannels) {
    const auto& b = bundle.baseline[c];
    std::ostringstream line;
    line << to_string(c) << ": ";
    if (b.calibrated) {
      line << "mu=" << format_double(b.mu) << " sigma=" << format_double(b.sigma);
    } else {
      line << "uncalibrated";
    }
    line << " (" << b.n_windows << " windows)";
    out << line.str() << '\n';
  }
  return kExitOk;
}

int do_monitor(const MonitorArgs& a, std::ostream& out, std::ostream& err,
               const Logger& log) {
  if (a.min_consecutive < 1) {
    throw UsageError("--min-consecutive must be >= 1");
  }
  if (a.threshold && !(*a.threshold > 0.0)) {
    throw UsageError("--threshold must be > 0");
  }
  const BaselineBundle bundle = load_bundle(a.baseline);
  MonitorOptions options;
  options.threshold = a.threshold.value_or(bundle.baseline.threshold);
  options.min_consecutive = a.min_consecutive;
  options.onset_step = a.onset_step;

  OutputTarget metrics(a.metrics_out, out);
  OutputTarget events(a.events_out, err);
  auto source = open_source(a.input);
  MonitorSinks sinks;
  sinks.metrics = [&](const WindowMetrics& m) {
    metrics.line(serialize_metrics(m));
    log.debug("window " + std::to_string(m.window_index) + " P=" + format_double(m.p));
  };
  sinks.events = [&](const DetectionEvent& e) { events.line(serialize_event(e)); };
  const MonitorStats stats = run_monitor(*source, bundle, options, sinks);
  log.info(std::to_string(stats.transitions) + " transitions, " +
           std::to_string(stats.windows) + " windows, " +
           std::to_string(stats.events) + " events");
  return kExitOk;
}

int do_bench(const BenchArgs& a, std::ostream& out, const Logger& log) {
  if (a.seeds < 1) {
    throw UsageError("--seeds must be >= 1");
  }
  const BenchmarkSuite suite = !a.suite.empty() ? load_suite(a.suite)
                               : a.control      ? BenchmarkSuite::control()
                                                : BenchmarkSuite::desk_default();
  std::vector<std::uint64_t> seeds(a.seeds);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
  log.info("running " + std::to_string(suite.conditions.size() * seeds.size()) + " trials");
  const BenchmarkResult result = run_benchmark(suite, seeds, a.threads);
  write_benchmark(a.out, result);
  for (const auto& t : result.trials) {
    if (t.failed) {
      log.info("trial " + t.condition + " seed " + std::to_string(t.seed) +
               " failed: " + t.error);
    }
  }
  out << summary_table_text(result.summary);
  if (result.failed_trials > 0) {
    out << result.failed_trials << " trial(s) failed and were left out\n";
  }
  return kExitOk;
}

int do_oracle_check(const OracleArgs& a, std::ostream& out, const Logger& log) {
  if (a.loops < 1 || !(a.samples >= 1.0) || !(a.tolerance > 0.0)) {
    throw UsageError("--loops, --samples and --tolerance must be positive");
  }
  const auto samples = static_cast<std::size_t>(a.samples);
  const OracleCheckResult result = run_oracle_check(a.loops, samples, a.seed);
  for (std::size_t i = 0; i < result.loops.size(); ++i) {
    const auto& loop = result.loops[i];
    log.info("loop " + std::to_string(i) + " max error " +
             format_double(loop.max_abs_error) + " (" + loop.worst_quantity + ")");
  }
  const bool ok = result.max_abs_error <= a.tolerance;
  out << "loops: " << result.loops.size() << '\n'
      << "samples: " << samples << '\n'
      << "max_abs_error: " << format_double(result.max_abs_error) << " bits ("
      << result.worst_quantity << ")\n"
      << "tolerance: " << format_double(a.tolerance) << '\n'
      << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interaction-loop monitor: bi-predictability estimation and drift detection",
               "idt"};
  app.require_subcommand(1);

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Fit discretizer and baseline from a calibration prefix");
  calibrate->add_option("--input", ca.input, "File, '-' for stdin, or tcp://host:port")->required();
  calibrate->add_option("--window", ca.window, "Window length W")->capture_default_str();
  calibrate->add_option("--stride", ca.stride, "Window stride")->capture_default_str();
  calibrate->add_option("--bins", ca.bins, "Bins per variable")->capture_default_str();
  calibrate->add_option("--clip", ca.clip, "z-score clip")->capture_default_str();
  calibrate->add_option("--groups", ca.groups, "Variable grouping file");
  calibrate->add_option("--calib-steps", ca.calib_steps, "Steps used for calibration (default: all)");
  calibrate->add_option("--out", ca.out, "Baseline file to write")->required();
  calibrate->add_option("--threshold", ca.threshold, "Band width in sigmas")->capture_default_str();
  calibrate->add_option("--joint-mode", ca.joint_mode, "per_group_mean or full_joint")
      ->check(CLI::IsMember({"per_group_mean", "full_joint"}))
      ->capture_default_str();

  MonitorArgs ma;
  auto* monitor = app.add_subcommand("monitor", "Stream metrics and detection events");
  monitor->add_option("--input", ma.input, "File, '-' for stdin, or tcp://host:port")->required();
  monitor->add_option("--baseline", ma.baseline, "Baseline file from calibrate")->required();
  monitor->add_option("--threshold", ma.threshold, "Band width in sigmas (default: from baseline)");
  monitor->add_option("--min-consecutive", ma.min_consecutive, "Windows required to flag")->capture_default_str();
  monitor->add_option("--onset-step", ma.onset_step, "Known perturbation onset step");
  monitor->add_option("--metrics-out", ma.metrics_out, "Metrics destination ('-' is stdout)")->capture_default_str();
  monitor->add_option("--events-out", ma.events_out, "Event destination ('-' is stderr)")->capture_default_str();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run the synthetic perturbation benchmark");
  auto* suite_opt = bench->add_option("--suite", ba.suite, "Suite file (default: built-in desk suite)");
  bench->add_flag("--control", ba.control, "Use the built-in all-NONE control suite")->excludes(suite_opt);
  bench->add_option("--seeds", ba.seeds, "Seeds 0..K-1")->capture_default_str();
  bench->add_option("--out", ba.out, "Output directory")->required();
  bench->add_option("--threads", ba.threads, "Worker threads")->capture_default_str();

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle-check", "Compare plug-in estimates with exact values");
  oracle->add_option("--loops", oa.loops, "Random 3x3x3 loops")->capture_default_str();
  oracle->add_option("--samples", oa.samples, "Samples per loop")->capture_default_str();
  oracle->add_option("--seed", oa.seed, "Base seed")->capture_default_str();
  oracle->add_option("--tolerance", oa.tolerance, "Allowed absolute error in bits")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) {
      sub = s;
    }
    err << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  const Logger log(err);
  try {
    if (calibrate->parsed()) {
      return do_calibrate(ca, out, log);
    }
    if (monitor->parsed()) {
      return do_monitor(ma, out, err, log);
    }
    if (bench->parsed()) {
      return do_bench(ba, out, log);
    }
    return do_oracle_check(oa, out, log);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace idt::cli

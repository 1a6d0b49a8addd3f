#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "idt/detector.hpp"
#include "idt/discretizer.hpp"
#include "idt/infometrics.hpp"
#include "idt/synthloop.hpp"

namespace idt {

using LoopConfig = std::variant<LinearLoopConfig, DiscreteLoopConfig>;

struct Condition {
  std::string name;
  LoopConfig loop;
  Perturbation perturbation;
};

/// Conditions plus the shared estimation and detection protocol.
struct BenchmarkSuite {
  std::vector<Condition> conditions;
  std::size_t episodes = 20;
  WindowSpec window{};
  double threshold = 3.0;
  std::size_t min_consecutive = 1;
  int bins = 3;
  double clip = 3.0;
  /// Empty means one group per variable class.
  std::optional<GroupingConfig> grouping;

  void validate() const;

  /// Eight perturbation conditions on the linear desk loop: action noise at
  /// three levels, observation noise at two, two force levels and one
  /// dynamics scale.
  static BenchmarkSuite desk_default();

  /// The desk suite with every perturbation replaced by NONE.
  static BenchmarkSuite control();
};

struct TrialRecord {
  std::string condition;
  std::size_t condition_index = 0;
  std::uint64_t seed = 0;
  std::uint64_t trial_seed = 0;
  std::string fingerprint;
  bool failed = false;
  std::string error;
  bool diverged = false;
  std::size_t stream_length = 0;
  std::int64_t onset_step = 0;
  std::vector<WindowMetrics> metrics;
  std::vector<double> rewards;
  std::optional<BaselineModel> baseline;
  TrialOutcome outcome;
};

struct ConditionSummary {
  std::string name;
  SummaryTable table;
};

struct BenchmarkResult {
  SummaryTable summary;
  std::vector<ConditionSummary> per_condition;
  std::vector<TrialRecord> trials;  // seed-major, then condition order
  std::size_t failed_trials = 0;
};

/// First step of the perturbed segment for a condition.
std::int64_t onset_step(const Condition& condition);

/// Generates, symbolizes, windows, calibrates on pre-onset windows and
/// detects one (condition, seed) trial. Errors are captured in the record.
TrialRecord run_trial(const BenchmarkSuite& suite, std::size_t condition_index,
                      std::uint64_t seed);

/// Runs every (seed, condition) trial and aggregates with `summarize`.
/// Failed trials are kept in the result and left out of the summary.
BenchmarkResult run_benchmark(const BenchmarkSuite& suite,
                              std::span<const std::uint64_t> seeds,
                              std::size_t threads = 1);

}  // namespace idt

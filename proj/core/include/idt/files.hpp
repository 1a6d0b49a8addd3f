#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "idt/benchmark_runner.hpp"
#include "idt/detector.hpp"
#include "idt/discretizer.hpp"
#include "idt/infometrics.hpp"

namespace idt {

/// Everything `monitor` needs, produced by `calibrate`.
struct BaselineBundle {
  WindowSpec window;
  DiscretizerParams discretizer;
  GroupingConfig grouping;
  BaselineModel baseline;

  bool operator==(const BaselineBundle&) const = default;
};

/// Fits the discretizer on `calibration`, windows it and calibrates every
/// channel. Throws CalibrationError when fewer than two windows fit.
BaselineBundle calibrate_bundle(std::span<const Transition> calibration,
                                const WindowSpec& window, int bins, double clip,
                                const GroupingConfig& grouping,
                                double threshold);

/// `{"state_groups": [[...], ...], "action_groups": [[...], ...]}`.
/// Throws IoError if unreadable, FormatError if malformed.
GroupingConfig load_grouping(const std::filesystem::path& path);
std::string grouping_to_text(const GroupingConfig& grouping);
GroupingConfig grouping_from_text(const std::string& text);

std::string bundle_to_text(const BaselineBundle& bundle);
BaselineBundle bundle_from_text(const std::string& text);
void save_bundle(const std::filesystem::path& path, const BaselineBundle& bundle);
BaselineBundle load_bundle(const std::filesystem::path& path);

std::string suite_to_text(const BenchmarkSuite& suite);
BenchmarkSuite suite_from_text(const std::string& text);
BenchmarkSuite load_suite(const std::filesystem::path& path);

/// Machine-readable summary (JSON).
std::string summary_to_text(const BenchmarkResult& result);
/// Aligned table: one row per channel, detection rate and median latency.
std::string summary_table_text(const SummaryTable& table);
/// One JSON line per trial: identity, failure state and channel outcomes.
std::string trial_to_line(const TrialRecord& trial);

/// Writes summary.json, summary.txt, trials.jsonl and
/// series/<condition>_seed<k>.jsonl under `dir`.
void write_benchmark(const std::filesystem::path& dir,
                     const BenchmarkResult& result);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace idt

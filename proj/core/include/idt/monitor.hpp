#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "idt/detector.hpp"
#include "idt/files.hpp"
#include "idt/infometrics.hpp"
#include "idt/line_source.hpp"

namespace idt {

struct MonitorOptions {
  double threshold = 3.0;
  std::size_t min_consecutive = 1;
  /// Known perturbation onset; events carry latencies only when set.
  std::optional<std::int64_t> onset_step;
};

struct MonitorSinks {
  std::function<void(const WindowMetrics&)> metrics;
  std::function<void(const DetectionEvent&)> events;
};

struct MonitorStats {
  std::size_t transitions = 0;
  std::size_t windows = 0;
  std::size_t events = 0;
};

/// Streams `source` through discretization, windowed estimation and online
/// detection. A reader thread parses lines while the calling thread
/// estimates and writes; the reader never runs more than `stride` records
/// ahead of the last record whose window output has been delivered.
///
/// Errors from either side (FormatError, IoError, ...) are rethrown here.
MonitorStats run_monitor(LineSource& source, const BaselineBundle& bundle,
                         const MonitorOptions& options, const MonitorSinks& sinks);

}  // namespace idt

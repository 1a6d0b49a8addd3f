#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idt/infometrics.hpp"

namespace idt {

/// Monitored series. The first four form the union detection signal; the
/// reward channel is the comparison baseline and never enters the union.
enum class Channel { P, Hf, Hb, dH, Reward };

inline constexpr std::array<Channel, 5> kAllChannels = {
    Channel::P, Channel::Hf, Channel::Hb, Channel::dH, Channel::Reward};
inline constexpr std::array<Channel, 4> kUnionChannels = {
    Channel::P, Channel::Hf, Channel::Hb, Channel::dH};

const char* to_string(Channel channel);
Channel channel_from_string(const std::string& name);

/// Value of `channel` in a window, or nothing when the window has no reward.
std::optional<double> channel_value(const WindowMetrics& m, Channel channel);

struct ChannelBaseline {
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n_windows = 0;
  bool calibrated = false;

  bool operator==(const ChannelBaseline&) const = default;
};

/// Per-channel baseline statistics, immutable after calibration.
struct BaselineModel {
  std::array<ChannelBaseline, kAllChannels.size()> channels{};
  double threshold = 3.0;

  const ChannelBaseline& operator[](Channel c) const {
    return channels[static_cast<std::size_t>(c)];
  }
  ChannelBaseline& operator[](Channel c) {
    return channels[static_cast<std::size_t>(c)];
  }

  /// [mu - threshold*sigma, mu + threshold*sigma] for `channel`.
  std::array<double, 2> band(Channel channel) const;

  bool operator==(const BaselineModel&) const = default;
};

enum class Direction { Above, Below };

const char* to_string(Direction direction);

/// First window of a confirmed threshold excursion on one channel.
struct DetectionEvent {
  Channel channel = Channel::P;
  std::size_t window_index = 0;
  double z = 0.0;
  Direction direction = Direction::Above;
  std::optional<std::size_t> latency_windows;

  bool operator==(const DetectionEvent&) const = default;
};

struct ChannelOutcome {
  bool detected = false;
  std::optional<std::size_t> latency_windows;
  std::optional<DetectionEvent> event;
  bool uncalibrated = false;

  bool operator==(const ChannelOutcome&) const = default;
};

struct TrialOutcome {
  std::size_t onset_window = 0;
  std::array<ChannelOutcome, kAllChannels.size()> channels{};
  ChannelOutcome union_outcome;

  const ChannelOutcome& operator[](Channel c) const {
    return channels[static_cast<std::size_t>(c)];
  }
  ChannelOutcome& operator[](Channel c) {
    return channels[static_cast<std::size_t>(c)];
  }

  bool operator==(const TrialOutcome&) const = default;
};

/// Sample mean and (n-1) standard deviation per channel, sigma floored at
/// 1e-9. Channels with fewer than two data points stay uncalibrated.
/// Throws CalibrationError on fewer than two windows.
BaselineModel calibrate(std::span<const WindowMetrics> baseline_windows,
                        double threshold = 3.0);

/// Signed deviation of `value` from the channel baseline, in sigma units.
double z_score(const ChannelBaseline& baseline, double value);

/// Strict two-sided threshold test.
bool exceeds(const ChannelBaseline& baseline, double value, double threshold);

/// Per-channel first post-onset run of `min_consecutive` out-of-band windows
/// and the union over {P, Hf, Hb, dH}. Latency is counted from `onset_window`
/// to the first window of the run.
TrialOutcome detect(std::span<const WindowMetrics> series,
                    const BaselineModel& model, std::size_t onset_window,
                    double threshold = 3.0, std::size_t min_consecutive = 1);

/// Index of the first window whose span reaches `onset_step`, i.e. the first
/// window not entirely before the perturbation. Returns series.size() when
/// every window ends before the onset.
std::size_t onset_window_for_step(std::span<const WindowMetrics> series,
                                  std::int64_t onset_step);

/// Incremental form of `detect` for live monitoring. Emits one event each time
/// a channel enters an excursion (after `min_consecutive` windows) and re-arms
/// once the channel returns inside its band. With an onset step, the first
/// window reaching it becomes the onset window: runs restart there and
/// post-onset events carry their latency.
class OnlineDetector {
public:
  OnlineDetector(BaselineModel model, double threshold,
                 std::size_t min_consecutive,
                 std::optional<std::int64_t> onset_step = std::nullopt);

  std::vector<DetectionEvent> observe(const WindowMetrics& m);

  std::optional<std::size_t> onset_window() const { return onset_window_; }

private:
  struct RunState {
    std::size_t length = 0;
    std::size_t start = 0;
    double z = 0.0;
    bool reported = false;
  };

  BaselineModel model_;
  double threshold_;
  std::size_t min_consecutive_;
  std::optional<std::int64_t> onset_step_;
  std::optional<std::size_t> onset_window_;
  std::array<RunState, kAllChannels.size()> runs_{};
};

/// One table row: seed-averaged detection rate and pooled median latency.
struct SummaryRow {
  std::string name;
  double detection_rate = 0.0;  // percent
  std::optional<double> median_latency;
  std::size_t detected = 0;
  std::size_t trials = 0;
  std::vector<double> per_seed_rates;  // fractions, one per seed

  bool operator==(const SummaryRow&) const = default;
};

struct SummaryTable {
  /// union, P, Hf, Hb, dH, reward
  std::vector<SummaryRow> rows;

  const SummaryRow& row(const std::string& name) const;

  bool operator==(const SummaryTable&) const = default;
};

struct SeedTrials {
  std::uint64_t seed = 0;
  std::vector<TrialOutcome> trials;
};

/// Throws ReportError when there are no seeds or a seed has no trials.
SummaryTable summarize(std::span<const SeedTrials> seeds);

/// Median of `values`; the mean of the two middle values for even counts.
std::optional<double> median(std::vector<double> values);

}  // namespace idt

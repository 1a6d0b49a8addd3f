#include "idt/detector.hpp"

#include <algorithm>
#include <cmath>

#include "idt/discretizer.hpp"
#include "idt/errors.hpp"

namespace idt {

const char* to_string(Channel channel) {
  switch (channel) {
    case Channel::P:
      return "P";
    case Channel::Hf:
      return "Hf";
    case Channel::Hb:
      return "Hb";
    case Channel::dH:
      return "dH";
    case Channel::Reward:
      return "reward";
  }
  return "unknown";
}

Channel channel_from_string(const std::string& name) {
  for (Channel c : kAllChannels) {
    if (name == to_string(c)) {
      return c;
    }
  }
  throw FormatError("unknown channel '" + name + "'");
}

const char* to_string(Direction direction) {
  return direction == Direction::Above ? "above" : "below";
}

std::optional<double> channel_value(const WindowMetrics& m, Channel channel) {
  switch (channel) {
    case Channel::P:
      return m.p;
    case Channel::Hf:
      return m.hf;
    case Channel::Hb:
      return m.hb;
    case Channel::dH:
      return m.dh;
    case Channel::Reward:
      return m.reward_mean;
  }
  return std::nullopt;
}

std::array<double, 2> BaselineModel::band(Channel channel) const {
  const auto& b = (*this)[channel];
  return {b.mu - threshold * b.sigma, b.mu + threshold * b.sigma};
}

BaselineModel calibrate(std::span<const WindowMetrics> baseline_windows,
                        double threshold) {
  if (baseline_windows.size() < 2) {
    throw CalibrationError("calibration needs at least 2 windows, got " +
                           std::to_string(baseline_windows.size()));
  }
  if (!(threshold > 0.0)) {
    throw ConfigError("threshold must be > 0");
  }
  BaselineModel model;
  model.threshold = threshold;
  for (Channel c : kAllChannels) {
    std::vector<double> xs;
    xs.reserve(baseline_windows.size());
    for (const auto& m : baseline_windows) {
      if (auto v = channel_value(m, c)) {
        xs.push_back(*v);
      }
    }
    auto& b = model[c];
    b.n_windows = xs.size();
    if (xs.size() < 2) {
      continue;
    }
    double sum = 0.0;
    for (double x : xs) {
      sum += x;
    }
    const auto n = static_cast<double>(xs.size());
    b.mu = sum / n;
    double ss = 0.0;
    for (double x : xs) {
      ss += (x - b.mu) * (x - b.mu);
    }
    b.sigma = std::max(std::sqrt(ss / (n - 1.0)), kSigmaFloor);
    b.calibrated = true;
  }
  return model;
}

double z_score(const ChannelBaseline& baseline, double value) {
  return (value - baseline.mu) / std::max(baseline.sigma, kSigmaFloor);
}

bool exceeds(const ChannelBaseline& baseline, double value, double threshold) {
  return std::abs(value - baseline.mu) >
         threshold * std::max(baseline.sigma, kSigmaFloor);
}

std::size_t onset_window_for_step(std::span<const WindowMetrics> series,
                                  std::int64_t onset_step) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].t_end >= onset_step) {
      return i;
    }
  }
  return series.size();
}

TrialOutcome detect(std::span<const WindowMetrics> series,
                    const BaselineModel& model, std::size_t onset_window,
                    double threshold, std::size_t min_consecutive) {
  if (onset_window >= series.size()) {
    throw ConfigError("onset window " + std::to_string(onset_window) +
                      " lies outside a series of " +
                      std::to_string(series.size()) + " windows");
  }
  if (!(threshold > 0.0)) {
    throw ConfigError("threshold must be > 0");
  }
  if (min_consecutive < 1) {
    throw ConfigError("min_consecutive must be >= 1");
  }

  TrialOutcome outcome;
  outcome.onset_window = onset_window;
  for (Channel c : kAllChannels) {
    const auto& baseline = model[c];
    auto& result = outcome[c];
    if (!baseline.calibrated) {
      result.uncalibrated = true;
      continue;
    }
    std::size_t run = 0;
    for (std::size_t i = onset_window; i < series.size(); ++i) {
      const auto v = channel_value(series[i], c);
      run = (v && exceeds(baseline, *v, threshold)) ? run + 1 : 0;
      if (run == min_consecutive) {
        const std::size_t start = i + 1 - min_consecutive;
        const double z = z_score(baseline, *channel_value(series[start], c));
        result.detected = true;
        result.latency_windows = start - onset_window;
        result.event = DetectionEvent{c, start, z,
                                      z > 0 ? Direction::Above : Direction::Below,
                                      start - onset_window};
        break;
      }
    }
  }

  for (Channel c : kUnionChannels) {
    const auto& r = outcome[c];
    if (!r.detected) {
      continue;
    }
    auto& u = outcome.union_outcome;
    if (!u.detected || *r.latency_windows < *u.latency_windows) {
      u.detected = true;
      u.latency_windows = r.latency_windows;
      u.event = r.event;
    }
  }
  return outcome;
}

OnlineDetector::OnlineDetector(BaselineModel model, double threshold,
                               std::size_t min_consecutive,
                               std::optional<std::int64_t> onset_step)
    : model_(std::move(model)),
      threshold_(threshold),
      min_consecutive_(min_consecutive),
      onset_step_(onset_step) {
  if (!(threshold_ > 0.0)) {
    throw ConfigError("threshold must be > 0");
  }
  if (min_consecutive_ < 1) {
    throw ConfigError("min_consecutive must be >= 1");
  }
}

std::vector<DetectionEvent> OnlineDetector::observe(const WindowMetrics& m) {
  // Post-onset excursions are judged afresh, matching detect().
  if (onset_step_ && !onset_window_ && m.t_end >= *onset_step_) {
    onset_window_ = m.window_index;
    runs_ = {};
  }
  std::vector<DetectionEvent> events;
  for (Channel c : kAllChannels) {
    const auto& baseline = model_[c];
    auto& run = runs_[static_cast<std::size_t>(c)];
    if (!baseline.calibrated) {
      continue;
    }
    const auto v = channel_value(m, c);
    if (!v || !exceeds(baseline, *v, threshold_)) {
      run = RunState{};
      continue;
    }
    if (run.length == 0) {
      run.start = m.window_index;
      run.z = z_score(baseline, *v);
    }
    ++run.length;
    if (run.length >= min_consecutive_ && !run.reported) {
      run.reported = true;
      DetectionEvent e{c, run.start, run.z,
                       run.z > 0 ? Direction::Above : Direction::Below,
                       std::nullopt};
      if (onset_window_ && run.start >= *onset_window_) {
        e.latency_windows = run.start - *onset_window_;
      }
      events.push_back(e);
    }
  }
  return events;
}

const SummaryRow& SummaryTable::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) {
      return r;
    }
  }
  throw ReportError("summary has no row '" + name + "'");
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) {
    return std::nullopt;
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) {
    return values[n / 2];
  }
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SummaryTable summarize(std::span<const SeedTrials> seeds) {
  if (seeds.empty()) {
    throw ReportError("cannot summarize an empty set of seeds");
  }
  for (const auto& s : seeds) {
    if (s.trials.empty()) {
      throw ReportError("seed " + std::to_string(s.seed) + " has no trials");
    }
  }

  auto build = [&](const std::string& name, auto&& pick) {
    SummaryRow row;
    row.name = name;
    std::vector<double> latencies;
    double rate_sum = 0.0;
    for (const auto& s : seeds) {
      std::size_t hits = 0;
      for (const auto& trial : s.trials) {
        const ChannelOutcome& o = pick(trial);
        if (o.detected) {
          ++hits;
          latencies.push_back(static_cast<double>(*o.latency_windows));
        }
      }
      const double rate =
          static_cast<double>(hits) / static_cast<double>(s.trials.size());
      row.per_seed_rates.push_back(rate);
      rate_sum += rate;
      row.detected += hits;
      row.trials += s.trials.size();
    }
    row.detection_rate = 100.0 * rate_sum / static_cast<double>(seeds.size());
    row.median_latency = median(std::move(latencies));
    return row;
  };

  SummaryTable table;
  table.rows.push_back(build(
      "union", [](const TrialOutcome& t) -> const ChannelOutcome& {
        return t.union_outcome;
      }));
  for (Channel c : kAllChannels) {
    table.rows.push_back(
        build(to_string(c), [c](const TrialOutcome& t) -> const ChannelOutcome& {
          return t[c];
        }));
  }
  return table;
}

}  // namespace idt

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "detection_cases.hpp"
#include "idt/detector.hpp"
#include "idt/discretizer.hpp"
#include "idt/errors.hpp"

namespace {

using idt::BaselineModel;
using idt::Channel;
using idt::WindowMetrics;

std::vector<WindowMetrics> p_series(const std::vector<double>& ps) {
  std::vector<WindowMetrics> out(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out[i].window_index = i;
    out[i].t_start = static_cast<std::int64_t>(i * 50);
    out[i].t_end = static_cast<std::int64_t>(i * 50 + 299);
    out[i].p = ps[i];
  }
  return out;
}

BaselineModel p_model(double mu, double sigma) {
  BaselineModel m;
  m[Channel::P] = {mu, sigma, 10, true};
  return m;
}

TEST(Calibrate, ConstantSeriesUsesFloor) {
  const auto model = idt::calibrate(p_series({0.33, 0.33, 0.33}));
  EXPECT_DOUBLE_EQ(model[Channel::P].mu, 0.33);
  EXPECT_EQ(model[Channel::P].sigma, idt::kSigmaFloor);
  EXPECT_TRUE(model[Channel::P].calibrated);
  EXPECT_EQ(model[Channel::P].n_windows, 3u);
}

TEST(Calibrate, SampleStandardDeviation) {
  const auto model = idt::calibrate(p_series({1.0, 2.0, 3.0, 4.0}), 2.5);
  EXPECT_DOUBLE_EQ(model[Channel::P].mu, 2.5);
  EXPECT_DOUBLE_EQ(model[Channel::P].sigma, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(model.threshold, 2.5);
}

TEST(Calibrate, TooFewWindows) {
  EXPECT_THROW(idt::calibrate(p_series({0.3})), idt::CalibrationError);
  EXPECT_THROW(idt::calibrate(p_series({})), idt::CalibrationError);
}

TEST(Calibrate, RewardWithoutDataStaysUncalibrated) {
  const auto model = idt::calibrate(p_series({0.1, 0.2}));
  EXPECT_FALSE(model[Channel::Reward].calibrated);
  EXPECT_EQ(model[Channel::Reward].n_windows, 0u);
}

TEST(Band, ThreeSigmaAroundBaseline) {
  const auto band = p_model(0.33, 0.02).band(Channel::P);
  EXPECT_NEAR(band[0], 0.27, 1e-12);
  EXPECT_NEAR(band[1], 0.39, 1e-12);
}

TEST(Detect, DropBelowBandAtOnset) {
  const auto series = p_series({0.33, 0.33, 0.26, 0.33});
  const auto out = idt::detect(series, p_model(0.33, 0.02), 2);
  ASSERT_TRUE(out[Channel::P].detected);
  EXPECT_EQ(out[Channel::P].latency_windows, 0u);
  EXPECT_NEAR(out[Channel::P].event->z, -3.5, 1e-9);
  EXPECT_EQ(out[Channel::P].event->direction, idt::Direction::Below);
  EXPECT_TRUE(out.union_outcome.detected);
}

TEST(Detect, BoundaryIsNotFlagged) {
  // Exactly representable band edges.
  const auto model = p_model(0.5, 0.25);
  for (double edge : {1.25, -0.25}) {
    const auto out = idt::detect(p_series({0.5, edge}), model, 1);
    EXPECT_FALSE(out[Channel::P].detected) << edge;
  }
  const auto out = idt::detect(p_series({0.5, std::nextafter(1.25, 2.0)}), model, 1);
  EXPECT_TRUE(out[Channel::P].detected);
}

TEST(Detect, TwoSided) {
  const auto model = p_model(0.0, 1.0);
  const auto up = idt::detect(p_series({0.0, 4.0}), model, 1);
  const auto down = idt::detect(p_series({0.0, -4.0}), model, 1);
  ASSERT_TRUE(up[Channel::P].detected);
  ASSERT_TRUE(down[Channel::P].detected);
  EXPECT_EQ(up[Channel::P].event->direction, idt::Direction::Above);
  EXPECT_EQ(down[Channel::P].event->direction, idt::Direction::Below);
}

TEST(Detect, PreOnsetExcursionsIgnored) {
  const auto out = idt::detect(p_series({9.0, 9.0, 0.0, 0.0}), p_model(0.0, 1.0), 2);
  EXPECT_FALSE(out[Channel::P].detected);
  EXPECT_FALSE(out.union_outcome.detected);
}

TEST(Detect, MinConsecutive) {
  const auto model = p_model(0.0, 1.0);
  const auto series = p_series({0.0, 5.0, 0.0, 5.0, 5.0, 5.0});
  auto out = idt::detect(series, model, 0, 3.0, 2);
  EXPECT_EQ(out[Channel::P].latency_windows, 3u);
  out = idt::detect(series, model, 0, 3.0, 3);
  EXPECT_EQ(out[Channel::P].latency_windows, 3u);
  out = idt::detect(series, model, 0, 3.0, 4);
  EXPECT_FALSE(out[Channel::P].detected);
}

TEST(Detect, UnionTakesEarliestChannel) {
  BaselineModel model = cases::unit_model();
  std::vector<WindowMetrics> series(100);
  for (std::size_t i = 0; i < series.size(); ++i) series[i].window_index = i;
  series[74].p = 5.0;
  series[69].hf = 5.0;
  series[67].dh = -5.0;
  series[10].reward_mean = 5.0;
  for (auto& m : series) {
    if (!m.reward_mean) m.reward_mean = 0.0;
  }
  const auto out = idt::detect(series, model, 0);
  EXPECT_EQ(out[Channel::P].latency_windows, 74u);
  EXPECT_EQ(out[Channel::Hf].latency_windows, 69u);
  EXPECT_FALSE(out[Channel::Hb].detected);
  EXPECT_EQ(out[Channel::dH].latency_windows, 67u);
  EXPECT_EQ(out[Channel::Reward].latency_windows, 10u);
  EXPECT_EQ(out.union_outcome.latency_windows, 67u);
  EXPECT_EQ(out.union_outcome.event->channel, Channel::dH);
}

TEST(Detect, UncalibratedChannelReportedNotThrown) {
  const auto out = idt::detect(p_series({0.0, 0.0}), p_model(0.0, 1.0), 0);
  EXPECT_TRUE(out[Channel::Reward].uncalibrated);
  EXPECT_FALSE(out[Channel::Reward].detected);
}

TEST(Detect, BadArguments) {
  const auto s = p_series({0.0, 0.0});
  const auto m = p_model(0.0, 1.0);
  EXPECT_THROW(idt::detect(s, m, 2), idt::ConfigError);
  EXPECT_THROW(idt::detect(s, m, 0, 0.0), idt::ConfigError);
  EXPECT_THROW(idt::detect(s, m, 0, 3.0, 0), idt::ConfigError);
}

TEST(Detect, ExhaustiveSmallCases) {
  for (std::size_t k : {1u, 2u}) {
    const auto r = cases::sweep(3, 2, k);
    EXPECT_EQ(r.trials, 32768u);
    for (const auto& f : r.failures) ADD_FAILURE() << f;
  }
}

TEST(Detect, ScaleEquivariance) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(40);
    for (auto& x : xs) x = n(rng) * (trial % 5 + 1);
    const auto base = idt::calibrate(p_series({xs.begin(), xs.begin() + 20}));
    const auto out = idt::detect(p_series(xs), base, 20, 1.5);
    for (double a : {-3.0, 0.5, 8.0}) {
      const double b = 0.25;
      std::vector<double> ys;
      for (double x : xs) ys.push_back(a * x + b);
      BaselineModel moved = base;
      moved[Channel::P].mu = a * base[Channel::P].mu + b;
      moved[Channel::P].sigma = std::abs(a) * base[Channel::P].sigma;
      const auto out2 = idt::detect(p_series(ys), moved, 20, 1.5);
      EXPECT_EQ(out2[Channel::P].detected, out[Channel::P].detected);
      EXPECT_EQ(out2[Channel::P].latency_windows, out[Channel::P].latency_windows);
    }
  }
}

TEST(Detect, RewardNeverChangesUnion) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 2.0);
  const auto model = cases::unit_model();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<WindowMetrics> series(12);
    for (auto& m : series) {
      m.p = n(rng);
      m.hf = n(rng);
      m.hb = n(rng);
      m.dh = n(rng);
      m.reward_mean = n(rng);
    }
    const auto a = idt::detect(series, model, 3);
    for (auto& m : series) m.reward_mean = 100.0;
    const auto b = idt::detect(series, model, 3);
    EXPECT_EQ(a.union_outcome, b.union_outcome);
    EXPECT_TRUE(b[Channel::Reward].detected);
  }
}

TEST(OnsetWindow, FirstWindowReachingStep) {
  const auto s = p_series({0, 0, 0, 0});  // t_end 299, 349, 399, 449
  EXPECT_EQ(idt::onset_window_for_step(s, 0), 0u);
  EXPECT_EQ(idt::onset_window_for_step(s, 299), 0u);
  EXPECT_EQ(idt::onset_window_for_step(s, 300), 1u);
  EXPECT_EQ(idt::onset_window_for_step(s, 449), 3u);
  EXPECT_EQ(idt::onset_window_for_step(s, 450), 4u);
}

TEST(Summarize, SeedAveragedRate) {
  auto hit = [](std::size_t latency) {
    idt::TrialOutcome t;
    t.union_outcome.detected = true;
    t.union_outcome.latency_windows = latency;
    t[Channel::P] = t.union_outcome;
    return t;
  };
  idt::TrialOutcome miss;
  std::vector<idt::SeedTrials> seeds = {{0, {hit(40), hit(42), hit(100), miss}},
                                        {1, {hit(42), miss}}};
  const auto table = idt::summarize(seeds);
  const auto& u = table.row("union");
  EXPECT_DOUBLE_EQ(u.detection_rate, 62.5);
  EXPECT_EQ(u.median_latency, 42.0);
  EXPECT_EQ(u.detected, 4u);
  EXPECT_EQ(u.trials, 6u);
  const auto& r = table.row("reward");
  EXPECT_EQ(r.detection_rate, 0.0);
  EXPECT_FALSE(r.median_latency.has_value());
  ASSERT_EQ(table.rows.size(), 6u);
  EXPECT_EQ(table.rows[0].name, "union");
  EXPECT_EQ(table.rows[5].name, "reward");
}

TEST(Summarize, MedianOfDetectedOnly) {
  EXPECT_EQ(idt::median({40, 42, 100}), 42.0);
  EXPECT_EQ(idt::median({1, 2, 3, 10}), 2.5);
  EXPECT_FALSE(idt::median({}).has_value());
}

TEST(Summarize, EmptyInputs) {
  EXPECT_THROW(idt::summarize({}), idt::ReportError);
  std::vector<idt::SeedTrials> seeds = {{0, {}}};
  EXPECT_THROW(idt::summarize(seeds), idt::ReportError);
}

TEST(OnlineDetector, MatchesBatchFirstEvent) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto series = p_series(std::vector<double>(30, 0.0));
    for (auto& m : series) {
      m.p = n(rng);
      m.hf = n(rng);
      m.hb = n(rng);
      m.dh = n(rng);
      m.reward_mean = n(rng);
    }
    const std::size_t onset = 10;
    const std::size_t k = 1 + trial % 3;
    const auto batch = idt::detect(series, cases::unit_model(), onset, 2.0, k);
    idt::OnlineDetector online(cases::unit_model(), 2.0, k, series[onset].t_end);
    std::array<std::optional<idt::DetectionEvent>, 5> first;
    for (const auto& m : series) {
      for (const auto& e : online.observe(m)) {
        auto& slot = first[static_cast<std::size_t>(e.channel)];
        if (!slot && e.latency_windows) slot = e;
      }
    }
    EXPECT_EQ(online.onset_window(), onset);
    for (auto c : idt::kAllChannels) {
      EXPECT_EQ(first[static_cast<std::size_t>(c)], batch[c].event) << trial;
    }
  }
}

TEST(OnlineDetector, RearmsAfterReturningInBand) {
  idt::OnlineDetector online(p_model(0.0, 1.0), 3.0, 1);
  std::size_t events = 0;
  for (double v : {0.0, 5.0, 5.0, 0.0, -5.0, 0.0}) {
    events += online.observe(p_series({v})[0]).size();
  }
  EXPECT_EQ(events, 2u);
}

TEST(ChannelNames, RoundTrip) {
  for (auto c : idt::kAllChannels) EXPECT_EQ(idt::channel_from_string(idt::to_string(c)), c);
  EXPECT_THROW(idt::channel_from_string("Q"), idt::FormatError);
}

}  // namespace

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "checks.hpp"
#include "idt/errors.hpp"
#include "idt/infometrics.hpp"
#include "reference.hpp"

namespace {

using idt::JointMode;
using idt::SymbolizedTransition;
using idt::WindowSpec;

SymbolizedTransition sym(std::int64_t t, std::vector<idt::Symbol> s,
                         std::vector<idt::Symbol> a, std::vector<idt::Symbol> sn) {
  SymbolizedTransition x;
  x.t = t;
  x.s_sym = std::move(s);
  x.a_sym = std::move(a);
  x.s_next_sym = std::move(sn);
  return x;
}

std::vector<SymbolizedTransition> copy_loop(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<idt::Symbol> d(0, 3);
  std::vector<SymbolizedTransition> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = d(rng);
    out.push_back(sym(static_cast<std::int64_t>(i), {s}, {0}, {s}));
  }
  return out;
}

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(idt::entropy({{0, 1}, {1, 1}, {2, 1}, {3, 1}}), 2.0);
  EXPECT_NEAR(idt::entropy({{0, 3}, {1, 1}}), 0.8112781244591328, 1e-15);
  EXPECT_EQ(idt::entropy({{5, 7}}), 0.0);
}

TEST(Entropy, RejectsEmptyAndZeroCounts) {
  EXPECT_THROW(idt::entropy({}), idt::EstimationError);
  EXPECT_THROW(idt::entropy({{0, 0}, {1, 2}}), idt::EstimationError);
}

TEST(Entropy, OrderOfCountsIrrelevant) {
  EXPECT_EQ(idt::entropy_of_counts({5, 1, 9, 2, 2}), idt::entropy_of_counts({2, 9, 2, 1, 5}));
}

TEST(WindowCount, Arithmetic) {
  WindowSpec spec{300, 50};
  EXPECT_EQ(idt::window_count(50000, spec), 995u);
  EXPECT_EQ(idt::window_count(300, spec), 1u);
  EXPECT_EQ(idt::window_count(349, spec), 1u);
  EXPECT_EQ(idt::window_count(350, spec), 2u);
  EXPECT_EQ(idt::window_count(299, spec), 0u);
}

TEST(StreamMetrics, WindowBoundaries) {
  WindowSpec spec{300, 50};
  std::mt19937_64 rng(3);
  auto stream = ref::random_stream(rng, 50000, 1, 1, 3);
  const auto ms = idt::stream_metrics(stream, spec);
  ASSERT_EQ(ms.size(), 995u);
  EXPECT_EQ(ms.front().t_start, 0);
  EXPECT_EQ(ms.front().t_end, 299);
  EXPECT_EQ(ms.back().t_start, 994 * 50);
  EXPECT_EQ(ms.back().t_end, 994 * 50 + 299);
  for (std::size_t i = 0; i < ms.size(); ++i) EXPECT_EQ(ms[i].window_index, i);
  EXPECT_EQ(check::all_invariants(ms), "");

  stream.resize(300);
  EXPECT_EQ(idt::stream_metrics(stream, spec).size(), 1u);
  stream.resize(299);
  EXPECT_THROW(idt::stream_metrics(stream, spec), idt::EstimationError);
}

TEST(WindowMetrics, WrongLengthThrows) {
  std::mt19937_64 rng(1);
  const auto w = ref::random_stream(rng, 10, 1, 1, 3);
  EXPECT_THROW(idt::window_metrics(w, WindowSpec{11, 1}), idt::EstimationError);
}

TEST(WindowMetrics, CopyLoopSaturates) {
  const auto stream = copy_loop(3000, 9);
  for (auto mode : {JointMode::PerGroupMean, JointMode::FullJoint}) {
    const auto ms = idt::stream_metrics(stream, WindowSpec{300, 50, mode});
    for (const auto& m : ms) {
      EXPECT_NEAR(m.p, 0.5, 1e-9);
      EXPECT_NEAR(m.mi, m.h_s, 1e-12);
      EXPECT_NEAR(m.c, 2 * m.h_s, 1e-12);
      EXPECT_NEAR(m.hf, 0.0, 1e-12);
      EXPECT_NEAR(m.hb, 0.0, 1e-12);
      EXPECT_NEAR(m.dh, 0.0, 1e-12);
    }
  }
}

TEST(WindowMetrics, ConstantWindowIsDegenerate) {
  std::vector<SymbolizedTransition> w;
  for (int i = 0; i < 50; ++i) w.push_back(sym(i, {1}, {2}, {1}));
  const auto m = idt::window_metrics(w, WindowSpec{50, 50});
  EXPECT_EQ(m.c, 0.0);
  EXPECT_EQ(m.p, 0.0);
  EXPECT_TRUE(m.has_flag(idt::kFlagDegenerateDenominator));
  EXPECT_EQ(check::window_invariants(m), "");
}

TEST(WindowMetrics, PartlyDegenerateChannelFlagged) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<idt::Symbol> d(0, 2);
  std::vector<SymbolizedTransition> w;
  for (int i = 0; i < 100; ++i) {
    const auto s = d(rng);
    // The action is shared by both channels, so it must be constant too.
    w.push_back(sym(i, {s, 0}, {0}, {d(rng), 0}));
  }
  const auto m = idt::window_metrics(w, WindowSpec{100, 100});
  EXPECT_TRUE(m.has_flag(idt::kFlagDegenerateChannel));
  const auto r = ref::window(w, JointMode::PerGroupMean);
  EXPECT_NEAR(m.p, static_cast<double>(r.p), 1e-12);
}

TEST(WindowMetrics, RewardMeanAndSampleCount) {
  std::vector<SymbolizedTransition> w;
  for (int i = 0; i < 4; ++i) {
    w.push_back(sym(i, {0}, {0}, {0}));
    if (i != 2) w.back().reward = i;
  }
  auto m = idt::window_metrics(w, WindowSpec{4, 4});
  ASSERT_TRUE(m.reward_mean.has_value());
  EXPECT_DOUBLE_EQ(*m.reward_mean, (0.0 + 1.0 + 3.0) / 3.0);
  for (auto& x : w) x.reward.reset();
  m = idt::window_metrics(w, WindowSpec{4, 4});
  EXPECT_FALSE(m.reward_mean.has_value());
}

struct RefCase {
  std::size_t groups;
  std::size_t actions;
  std::uint64_t support;
  double sticky;
  JointMode mode;
};

class MatchesReference : public ::testing::TestWithParam<RefCase> {};

TEST_P(MatchesReference, EveryQuantity) {
  const auto c = GetParam();
  std::mt19937_64 rng(c.groups * 131 + c.support * 7 + (c.mode == JointMode::FullJoint));
  const auto stream = ref::random_stream(rng, 2000, c.groups, c.actions, c.support, c.sticky);
  WindowSpec spec{200, 37, c.mode};
  const auto ms = idt::stream_metrics(stream, spec);
  ASSERT_EQ(ms.size(), idt::window_count(stream.size(), spec));
  for (const auto& m : ms) {
    std::span<const SymbolizedTransition> w(stream.data() + m.window_index * spec.stride,
                                            spec.length);
    const auto r = ref::window(w, c.mode);
    EXPECT_NEAR(m.h_s, static_cast<double>(r.h_s), 1e-12);
    EXPECT_NEAR(m.h_a, static_cast<double>(r.h_a), 1e-12);
    EXPECT_NEAR(m.h_snext, static_cast<double>(r.h_snext), 1e-12);
    EXPECT_NEAR(m.h_sa, static_cast<double>(r.h_sa), 1e-12);
    EXPECT_NEAR(m.h_joint, static_cast<double>(r.h_joint), 1e-12);
    EXPECT_NEAR(m.mi, static_cast<double>(r.mi), 1e-12);
    EXPECT_NEAR(m.hf, static_cast<double>(r.hf), 1e-12);
    EXPECT_NEAR(m.hb, static_cast<double>(r.hb), 1e-12);
    EXPECT_NEAR(m.c, static_cast<double>(r.c), 1e-12);
    EXPECT_NEAR(m.p, static_cast<double>(r.p), 1e-12);
    EXPECT_EQ(check::window_invariants(m), "");
  }
}

INSTANTIATE_TEST_SUITE_P(
    Streams, MatchesReference,
    ::testing::Values(RefCase{1, 1, 3, 0.0, JointMode::PerGroupMean},
                      RefCase{1, 1, 3, 0.0, JointMode::FullJoint},
                      RefCase{2, 2, 3, 0.5, JointMode::PerGroupMean},
                      RefCase{2, 2, 3, 0.5, JointMode::FullJoint},
                      RefCase{3, 1, 9, 0.8, JointMode::PerGroupMean},
                      RefCase{3, 1, 9, 0.8, JointMode::FullJoint},
                      RefCase{2, 3, 27, 0.2, JointMode::PerGroupMean},
                      RefCase{1, 2, 2, 0.95, JointMode::FullJoint}));

TEST(StreamMetrics, IncrementalMatchesFreshWindows) {
  std::mt19937_64 rng(17);
  const auto stream = ref::random_stream(rng, 5000, 2, 2, 3, 0.6);
  for (auto mode : {JointMode::PerGroupMean, JointMode::FullJoint}) {
    WindowSpec spec{300, 50, mode};
    const auto ms = idt::stream_metrics(stream, spec);
    for (const auto& m : ms) {
      std::span<const SymbolizedTransition> w(stream.data() + m.window_index * 50, 300);
      auto fresh = idt::window_metrics(w, spec);
      fresh.window_index = m.window_index;
      EXPECT_EQ(fresh, m);
    }
    EXPECT_EQ(idt::stream_metrics(stream, spec), ms);
  }
}

TEST(StreamMetrics, AccumulatorMatchesBatch) {
  std::mt19937_64 rng(23);
  const auto stream = ref::random_stream(rng, 4000, 2, 1, 4, 0.3);
  WindowSpec spec{250, 40};
  idt::WindowAccumulator acc(spec);
  std::vector<idt::WindowMetrics> online;
  for (const auto& x : stream) {
    if (auto m = acc.push(x)) online.push_back(*m);
  }
  EXPECT_EQ(online, idt::stream_metrics(stream, spec));
}

TEST(StreamMetrics, StrideEqualsLengthGivesDisjointWindows) {
  std::mt19937_64 rng(2);
  const auto stream = ref::random_stream(rng, 1000, 1, 1, 3);
  const auto ms = idt::stream_metrics(stream, WindowSpec{100, 100});
  ASSERT_EQ(ms.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(ms[i].t_start, static_cast<std::int64_t>(i * 100));
}

TEST(WindowSpec, Validation) {
  EXPECT_THROW((WindowSpec{10, 0}.validate()), idt::ConfigError);
  EXPECT_THROW((WindowSpec{10, 11}.validate()), idt::ConfigError);
  EXPECT_NO_THROW((WindowSpec{10, 10}.validate()));
}

TEST(JointModeNames, RoundTrip) {
  for (auto mode : {JointMode::PerGroupMean, JointMode::FullJoint}) {
    EXPECT_EQ(idt::joint_mode_from_string(idt::to_string(mode)), mode);
  }
  EXPECT_THROW(idt::joint_mode_from_string("neither"), idt::ConfigError);
}

TEST(IndependenceDecay, BiasShrinksWithWindow) {
  std::mt19937_64 rng(99);
  const auto stream = ref::random_stream(rng, 200000, 1, 1, 3);
  double previous = 1.0;
  for (std::size_t w : {100u, 300u, 1000u, 3000u, 10000u}) {
    const auto ms = idt::stream_metrics(stream, WindowSpec{w, w});
    double mean = 0;
    for (const auto& m : ms) mean += m.p;
    mean /= static_cast<double>(ms.size());
    EXPECT_LT(mean, previous) << "W=" << w;
    previous = mean;
  }
  EXPECT_LT(previous, 0.05);
}

class BoundFuzz : public ::testing::TestWithParam<int> {};

TEST_P(BoundFuzz, PNeverExceedsHalf) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()) * 7919);
  std::uniform_int_distribution<int> pick(1, 4);
  const std::size_t groups = static_cast<std::size_t>(pick(rng));
  const std::uint64_t support = static_cast<std::uint64_t>(pick(rng)) * 3 - 1;
  const auto stream = ref::random_stream(rng, 3000, groups, pick(rng), support, 0.25 * (pick(rng) - 1));
  for (auto mode : {JointMode::PerGroupMean, JointMode::FullJoint}) {
    const auto ms = idt::stream_metrics(stream, WindowSpec{60, 7, mode});
    EXPECT_EQ(check::all_invariants(ms), "");
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, BoundFuzz, ::testing::Range(0, 12));

}  // namespace

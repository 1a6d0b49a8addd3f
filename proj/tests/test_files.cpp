#include <gtest/gtest.h>

#include <filesystem>

#include "idt/errors.hpp"
#include "idt/files.hpp"
#include "idt/synthloop.hpp"

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("idt_files_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

idt::BaselineBundle sample_bundle() {
  auto config = idt::LinearLoopConfig::desk_default(2);
  const auto run = idt::run_linear_loop(config, idt::Perturbation::none(1), 4);
  return idt::calibrate_bundle(run.transitions, idt::WindowSpec{300, 50, idt::JointMode::FullJoint},
                               3, 2.5, idt::GroupingConfig{{{0, 1}, {2, 3}}, {{0, 1}}}, 2.0);
}

TEST(Bundle, RoundTripIsExact) {
  const auto bundle = sample_bundle();
  EXPECT_EQ(bundle.baseline.threshold, 2.0);
  EXPECT_EQ(bundle.discretizer.clip, 2.5);
  const auto text = idt::bundle_to_text(bundle);
  EXPECT_EQ(idt::bundle_from_text(text), bundle);
  EXPECT_EQ(idt::bundle_to_text(idt::bundle_from_text(text)), text);

  const auto path = scratch("bundle") / "baseline.json";
  idt::save_bundle(path, bundle);
  EXPECT_EQ(idt::load_bundle(path), bundle);
}

TEST(Bundle, MalformedInput) {
  EXPECT_THROW(idt::bundle_from_text("{"), idt::FormatError);
  EXPECT_THROW(idt::bundle_from_text("{}"), idt::FormatError);
  auto text = idt::bundle_to_text(sample_bundle());
  text.replace(text.find("idt-baseline/1"), 14, "something-else");
  EXPECT_THROW(idt::bundle_from_text(text), idt::FormatError);
  EXPECT_THROW(idt::load_bundle("/nonexistent/idt/baseline.json"), idt::IoError);
}

TEST(Bundle, ShortCalibrationFails) {
  auto config = idt::LinearLoopConfig::desk_default(2);
  config.episode_length = 320;
  const auto run = idt::run_linear_loop(config, idt::Perturbation::none(1), 1);
  EXPECT_THROW(idt::calibrate_bundle(std::span(run.transitions).first(299), idt::WindowSpec{}, 3,
                                     3.0, idt::GroupingConfig::whole(4, 2), 3.0),
               idt::CalibrationError);
  EXPECT_THROW(idt::calibrate_bundle(run.transitions, idt::WindowSpec{}, 3, 3.0,
                                     idt::GroupingConfig::whole(4, 2), 3.0),
               idt::CalibrationError);
}

TEST(Grouping, TextRoundTrip) {
  idt::GroupingConfig g{{{0, 2}, {1}}, {{0}}};
  EXPECT_EQ(idt::grouping_from_text(idt::grouping_to_text(g)), g);
  EXPECT_THROW(idt::grouping_from_text(R"({"state_groups": [[0]]})"), idt::FormatError);
  EXPECT_THROW(idt::grouping_from_text(R"({"state_groups": [["x"]], "action_groups": [[0]]})"),
               idt::FormatError);
}

TEST(Suite, RoundTrip) {
  for (const auto& suite : {idt::BenchmarkSuite::desk_default(), idt::BenchmarkSuite::control()}) {
    const auto text = idt::suite_to_text(suite);
    const auto back = idt::suite_from_text(text);
    EXPECT_EQ(idt::suite_to_text(back), text);
    ASSERT_EQ(back.conditions.size(), suite.conditions.size());
    const std::vector<std::uint64_t> seeds = {3};
    auto one = suite;
    one.conditions.resize(1);
    auto one_back = back;
    one_back.conditions.resize(1);
    EXPECT_EQ(idt::run_benchmark(one, seeds).summary, idt::run_benchmark(one_back, seeds).summary);
  }
}

TEST(Suite, DiscreteLoopRoundTrip) {
  idt::BenchmarkSuite suite;
  auto loop = idt::DiscreteLoopConfig::random(3, 2, 4);
  loop.reward = {1, 0, 0, 1, 0.5, 0.5};
  loop.episode_length = 400;
  suite.conditions = {{"mixing", loop, idt::Perturbation::make(idt::PerturbationKind::ExternalForce, 0.3, 9)}};
  const auto text = idt::suite_to_text(suite);
  const auto back = idt::suite_from_text(text);
  const auto& got = std::get<idt::DiscreteLoopConfig>(back.conditions[0].loop);
  EXPECT_EQ(got.kernel, loop.kernel);
  EXPECT_EQ(got.policy, loop.policy);
  EXPECT_EQ(got.reward, loop.reward);
  EXPECT_EQ(got.episode_length, 400u);
  EXPECT_EQ(back.conditions[0].perturbation, suite.conditions[0].perturbation);
}

TEST(Suite, PresetLoopName) {
  const auto suite = idt::suite_from_text(R"({
    "episodes": 20,
    "conditions": [{"name": "x", "loop": "linear_desk_default",
                    "perturbation": {"kind": "action_noise", "magnitude": 0.01, "onset_episode": 6}}]
  })");
  ASSERT_EQ(suite.conditions.size(), 1u);
  EXPECT_EQ(std::get<idt::LinearLoopConfig>(suite.conditions[0].loop).dynamics,
            idt::LinearLoopConfig::desk_default().dynamics);
}

TEST(Suite, Malformed) {
  EXPECT_THROW(idt::suite_from_text("[]"), idt::FormatError);
  EXPECT_THROW(idt::suite_from_text(R"({"conditions": [{"name": "x", "loop": "nope",
      "perturbation": {"kind": "none"}}]})"),
               idt::Error);
  EXPECT_THROW(idt::load_suite("/nonexistent/idt/suite.json"), idt::IoError);
}

TEST(Benchmark, WrittenFiles) {
  auto suite = idt::BenchmarkSuite::desk_default();
  suite.conditions.resize(2);
  const std::vector<std::uint64_t> seeds = {0, 1};
  const auto result = idt::run_benchmark(suite, seeds);
  const auto dir = scratch("bench");
  idt::write_benchmark(dir, result);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "trials.jsonl"));
  const auto table = idt::read_text_file(dir / "summary.txt");
  EXPECT_EQ(table.rfind("All conditions\nMetric", 0), 0u);
  for (const char* row : {"union", "P", "Hf", "Hb", "dH", "reward"}) {
    EXPECT_NE(table.find(std::string("\n") + row + " "), std::string::npos) << row;
  }
  std::size_t series = 0;
  for (const auto& e : fs::directory_iterator(dir / "series")) {
    (void)e;
    ++series;
  }
  EXPECT_EQ(series, 4u);
  const auto trials = idt::read_text_file(dir / "trials.jsonl");
  EXPECT_EQ(std::count(trials.begin(), trials.end(), '\n'), 4);
}

TEST(SummaryTable, AbsentLatencyShownAsDash) {
  idt::SummaryTable t;
  t.rows.push_back({"union", 50.0, 3.0, 1, 2, {0.5}});
  t.rows.push_back({"reward", 0.0, std::nullopt, 0, 2, {0.0}});
  const auto text = idt::summary_table_text(t);
  EXPECT_NE(text.find("Detection Rate (%)"), std::string::npos);
  EXPECT_NE(text.find("Median Latency (windows)"), std::string::npos);
  EXPECT_NE(text.find("50.0"), std::string::npos);
  EXPECT_NE(text.find("3.0"), std::string::npos);
  const auto last = text.substr(text.rfind("reward"));
  EXPECT_EQ(last.back(), '\n');
  EXPECT_NE(last.find('-'), std::string::npos);
}

}  // namespace

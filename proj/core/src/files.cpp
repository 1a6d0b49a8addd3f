#include "idt/files.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "idt/errors.hpp"
#include "idt/records.hpp"

namespace idt {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kBundleFormat = "idt-baseline/1";

json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed ") + what + ": " + e.what());
  }
}

// Runs `fn`, turning nlohmann type/lookup errors into FormatError.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid ") + what + ": " + e.what());
  }
}

json groups_to_json(const std::vector<std::vector<std::size_t>>& groups) {
  json out = json::array();
  for (const auto& g : groups) {
    out.push_back(g);
  }
  return out;
}

json grouping_to_json(const GroupingConfig& g) {
  return json{{"state_groups", groups_to_json(g.state_groups)},
              {"action_groups", groups_to_json(g.action_groups)}};
}

GroupingConfig grouping_from_json(const json& j) {
  GroupingConfig g;
  g.state_groups = j.at("state_groups").get<std::vector<std::vector<std::size_t>>>();
  g.action_groups = j.at("action_groups").get<std::vector<std::vector<std::size_t>>>();
  return g;
}

json window_to_json(const WindowSpec& w) {
  return json{{"length", w.length},
              {"stride", w.stride},
              {"joint_mode", to_string(w.joint_mode)}};
}

WindowSpec window_from_json(const json& j) {
  WindowSpec w;
  w.length = j.value("length", w.length);
  w.stride = j.value("stride", w.stride);
  if (j.contains("joint_mode")) {
    w.joint_mode = joint_mode_from_string(j.at("joint_mode").get<std::string>());
  }
  w.validate();
  return w;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) {
    return {};
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw FormatError("ragged matrix");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

json loop_to_json(const LoopConfig& loop) {
  if (const auto* lin = std::get_if<LinearLoopConfig>(&loop)) {
    return json{
        {"type", "linear"},
        {"dynamics", matrix_to_json(lin->dynamics)},
        {"input", matrix_to_json(lin->input)},
        {"feedback", matrix_to_json(lin->feedback)},
        {"force_direction",
         std::vector<double>(lin->force_direction.data(),
                             lin->force_direction.data() + lin->force_direction.size())},
        {"process_noise", lin->process_noise},
        {"exploration_noise", lin->exploration_noise},
        {"initial_scale", lin->initial_scale},
        {"action_range", lin->action_range},
        {"observation_range", lin->observation_range},
        {"state_cost", lin->state_cost},
        {"action_cost", lin->action_cost},
        {"episode_length", lin->episode_length}};
  }
  const auto& d = std::get<DiscreteLoopConfig>(loop);
  json kernel = json::array();
  for (std::size_t s = 0; s < d.states; ++s) {
    json per_action = json::array();
    for (std::size_t a = 0; a < d.actions; ++a) {
      json row = json::array();
      for (std::size_t sn = 0; sn < d.states; ++sn) {
        row.push_back(d.k(s, a, sn));
      }
      per_action.push_back(std::move(row));
    }
    kernel.push_back(std::move(per_action));
  }
  auto table = [&](const std::vector<double>& flat) {
    json rows = json::array();
    for (std::size_t s = 0; s < d.states; ++s) {
      rows.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(s * d.actions),
                                         flat.begin() + static_cast<std::ptrdiff_t>((s + 1) * d.actions)));
    }
    return rows;
  };
  json out{{"type", "discrete"},
           {"states", d.states},
           {"actions", d.actions},
           {"kernel", kernel},
           {"policy", table(d.policy)},
           {"episode_length", d.episode_length},
           {"initial_state", d.initial_state}};
  if (!d.reward.empty()) {
    out["reward"] = table(d.reward);
  }
  return out;
}

LoopConfig loop_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "linear_desk_default") {
      return LinearLoopConfig::desk_default();
    }
    throw FormatError("unknown loop preset '" + j.get<std::string>() + "'");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "linear") {
    LinearLoopConfig c = LinearLoopConfig::desk_default();
    c.dynamics = matrix_from_json(j.at("dynamics"));
    c.input = matrix_from_json(j.at("input"));
    c.feedback = matrix_from_json(j.at("feedback"));
    const auto force = j.at("force_direction").get<std::vector<double>>();
    c.force_direction = Eigen::Map<const Eigen::VectorXd>(
        force.data(), static_cast<Eigen::Index>(force.size()));
    c.process_noise = j.value("process_noise", c.process_noise);
    c.exploration_noise = j.value("exploration_noise", c.exploration_noise);
    c.initial_scale = j.value("initial_scale", c.initial_scale);
    c.action_range = j.value("action_range", c.action_range);
    c.observation_range = j.value("observation_range", c.observation_range);
    c.state_cost = j.value("state_cost", c.state_cost);
    c.action_cost = j.value("action_cost", c.action_cost);
    c.episode_length = j.value("episode_length", c.episode_length);
    return c;
  }
  if (type == "discrete") {
    DiscreteLoopConfig c;
    c.states = j.at("states").get<std::size_t>();
    c.actions = j.at("actions").get<std::size_t>();
    for (const auto& per_action :
         j.at("kernel").get<std::vector<std::vector<std::vector<double>>>>()) {
      for (const auto& row : per_action) {
        c.kernel.insert(c.kernel.end(), row.begin(), row.end());
      }
    }
    for (const auto& row : j.at("policy").get<std::vector<std::vector<double>>>()) {
      c.policy.insert(c.policy.end(), row.begin(), row.end());
    }
    if (j.contains("reward")) {
      for (const auto& row : j.at("reward").get<std::vector<std::vector<double>>>()) {
        c.reward.insert(c.reward.end(), row.begin(), row.end());
      }
    }
    c.episode_length = j.value("episode_length", c.episode_length);
    c.initial_state = j.value("initial_state", c.initial_state);
    return c;
  }
  throw FormatError("unknown loop type '" + type + "'");
}

json perturbation_to_json(const Perturbation& p) {
  return json{{"kind", to_string(p.kind)},
              {"magnitude", p.magnitude},
              {"onset_episode", p.onset_episode},
              {"side", to_string(p.side)}};
}

Perturbation perturbation_from_json(const json& j) {
  const PerturbationKind kind =
      perturbation_kind_from_string(j.at("kind").get<std::string>());
  Perturbation p = Perturbation::make(kind, j.value("magnitude", 0.0),
                                      j.value("onset_episode", std::size_t{15}));
  if (j.contains("side")) {
    p.side = perturbation_side_from_string(j.at("side").get<std::string>());
  }
  return p;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json rows_to_json(const SummaryTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back(json{{"name", r.name},
                        {"detection_rate", r.detection_rate},
                        {"median_latency", optional_number(r.median_latency)},
                        {"detected", r.detected},
                        {"trials", r.trials},
                        {"per_seed_rates", r.per_seed_rates}});
  }
  return rows;
}

json channel_outcome_to_json(const ChannelOutcome& o) {
  json out{{"detected", o.detected}};
  out["latency_windows"] =
      o.latency_windows ? json(*o.latency_windows) : json(nullptr);
  if (o.event) {
    out["window_index"] = o.event->window_index;
    out["z"] = o.event->z;
    out["direction"] = to_string(o.event->direction);
  }
  if (o.uncalibrated) {
    out["uncalibrated"] = true;
  }
  return out;
}

}  // namespace

BaselineBundle calibrate_bundle(std::span<const Transition> calibration,
                                const WindowSpec& window, int bins, double clip,
                                const GroupingConfig& grouping,
                                double threshold) {
  window.validate();
  BaselineBundle bundle;
  bundle.window = window;
  bundle.discretizer = fit_discretizer(calibration, bins, clip);
  grouping.validate(bundle.discretizer.state_dim, bundle.discretizer.action_dim);
  bundle.grouping = grouping;
  const auto symbols = discretize_all(calibration, bundle.discretizer, grouping);
  if (symbols.size() < window.length) {
    throw CalibrationError("calibration segment of " +
                           std::to_string(symbols.size()) +
                           " steps is shorter than one window");
  }
  const auto windows = stream_metrics(symbols, window);
  bundle.baseline = calibrate(windows, threshold);
  return bundle;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

std::string grouping_to_text(const GroupingConfig& grouping) {
  return grouping_to_json(grouping).dump(2) + "\n";
}

GroupingConfig grouping_from_text(const std::string& text) {
  const json j = parse_document(text, "grouping config");
  return guarded("grouping config", [&] { return grouping_from_json(j); });
}

GroupingConfig load_grouping(const std::filesystem::path& path) {
  return grouping_from_text(read_text_file(path));
}

std::string bundle_to_text(const BaselineBundle& bundle) {
  const auto& d = bundle.discretizer;
  json channels = json::object();
  for (Channel c : kAllChannels) {
    const auto& b = bundle.baseline[c];
    channels[to_string(c)] = json{{"mu", b.mu},
                                  {"sigma", b.sigma},
                                  {"n_windows", b.n_windows},
                                  {"calibrated", b.calibrated}};
  }
  const json j{
      {"format", kBundleFormat},
      {"window", window_to_json(bundle.window)},
      {"discretizer",
       json{{"bins", d.bins},
            {"clip", d.clip},
            {"state_dim", d.state_dim},
            {"action_dim", d.action_dim},
            {"mu", d.mu},
            {"sigma", d.sigma}}},
      {"grouping", grouping_to_json(bundle.grouping)},
      {"baseline",
       json{{"threshold", bundle.baseline.threshold}, {"channels", channels}}}};
  return j.dump(2) + "\n";
}

BaselineBundle bundle_from_text(const std::string& text) {
  const json j = parse_document(text, "baseline file");
  return guarded("baseline file", [&] {
    if (j.value("format", std::string{}) != kBundleFormat) {
      throw FormatError(std::string("baseline file format must be ") + kBundleFormat);
    }
    BaselineBundle bundle;
    bundle.window = window_from_json(j.at("window"));
    const json& d = j.at("discretizer");
    bundle.discretizer.bins = d.at("bins").get<int>();
    bundle.discretizer.clip = d.at("clip").get<double>();
    bundle.discretizer.state_dim = d.at("state_dim").get<std::size_t>();
    bundle.discretizer.action_dim = d.at("action_dim").get<std::size_t>();
    bundle.discretizer.mu = d.at("mu").get<std::vector<double>>();
    bundle.discretizer.sigma = d.at("sigma").get<std::vector<double>>();
    bundle.discretizer.validate();
    bundle.grouping = grouping_from_json(j.at("grouping"));
    bundle.grouping.validate(bundle.discretizer.state_dim,
                             bundle.discretizer.action_dim);
    const json& base = j.at("baseline");
    bundle.baseline.threshold = base.value("threshold", 3.0);
    const json& channels = base.at("channels");
    for (Channel c : kAllChannels) {
      if (!channels.contains(to_string(c))) {
        continue;
      }
      const json& ch = channels.at(to_string(c));
      auto& b = bundle.baseline[c];
      b.mu = ch.value("mu", 0.0);
      b.sigma = ch.value("sigma", 0.0);
      b.n_windows = ch.value("n_windows", std::size_t{0});
      b.calibrated = ch.value("calibrated", true);
    }
    return bundle;
  });
}

void save_bundle(const std::filesystem::path& path, const BaselineBundle& bundle) {
  write_text_file(path, bundle_to_text(bundle));
}

BaselineBundle load_bundle(const std::filesystem::path& path) {
  return bundle_from_text(read_text_file(path));
}

std::string suite_to_text(const BenchmarkSuite& suite) {
  json conditions = json::array();
  for (const auto& c : suite.conditions) {
    conditions.push_back(json{{"name", c.name},
                              {"loop", loop_to_json(c.loop)},
                              {"perturbation", perturbation_to_json(c.perturbation)}});
  }
  json j{{"episodes", suite.episodes},
         {"window", window_to_json(suite.window)},
         {"threshold", suite.threshold},
         {"min_consecutive", suite.min_consecutive},
         {"bins", suite.bins},
         {"clip", suite.clip}};
  if (suite.grouping) {
    j["grouping"] = grouping_to_json(*suite.grouping);
  }
  j["conditions"] = std::move(conditions);
  return j.dump(2) + "\n";
}

BenchmarkSuite suite_from_text(const std::string& text) {
  const json j = parse_document(text, "suite file");
  return guarded("suite file", [&] {
    BenchmarkSuite suite;
    suite.episodes = j.value("episodes", suite.episodes);
    if (j.contains("window")) {
      suite.window = window_from_json(j.at("window"));
    }
    suite.threshold = j.value("threshold", suite.threshold);
    suite.min_consecutive = j.value("min_consecutive", suite.min_consecutive);
    suite.bins = j.value("bins", suite.bins);
    suite.clip = j.value("clip", suite.clip);
    if (j.contains("grouping")) {
      suite.grouping = grouping_from_json(j.at("grouping"));
    }
    for (const json& c : j.at("conditions")) {
      suite.conditions.push_back(Condition{c.at("name").get<std::string>(),
                                           loop_from_json(c.at("loop")),
                                           perturbation_from_json(c.at("perturbation"))});
    }
    suite.validate();
    return suite;
  });
}

BenchmarkSuite load_suite(const std::filesystem::path& path) {
  return suite_from_text(read_text_file(path));
}

std::string summary_to_text(const BenchmarkResult& result) {
  json per_condition = json::array();
  for (const auto& c : result.per_condition) {
    per_condition.push_back(json{{"name", c.name}, {"rows", rows_to_json(c.table)}});
  }
  const json j{{"trials", result.trials.size()},
               {"failed_trials", result.failed_trials},
               {"rows", rows_to_json(result.summary)},
               {"per_condition", per_condition}};
  return j.dump(2) + "\n";
}

std::string summary_table_text(const SummaryTable& table) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %18s %26s\n", "Metric",
                "Detection Rate (%)", "Median Latency (windows)");
  out << line;
  for (const auto& r : table.rows) {
    char latency[32];
    if (r.median_latency) {
      std::snprintf(latency, sizeof latency, "%.1f", *r.median_latency);
    } else {
      std::snprintf(latency, sizeof latency, "-");
    }
    std::snprintf(line, sizeof line, "%-10s %18.1f %26s\n", r.name.c_str(),
                  r.detection_rate, latency);
    out << line;
  }
  return out.str();
}

std::string trial_to_line(const TrialRecord& trial) {
  json channels = json::object();
  channels["union"] = channel_outcome_to_json(trial.outcome.union_outcome);
  for (Channel c : kAllChannels) {
    channels[to_string(c)] = channel_outcome_to_json(trial.outcome[c]);
  }
  json j{{"condition", trial.condition},
         {"condition_index", trial.condition_index},
         {"seed", trial.seed},
         {"trial_seed", trial.trial_seed},
         {"fingerprint", trial.fingerprint},
         {"failed", trial.failed}};
  if (trial.failed) {
    j["error"] = trial.error;
  }
  j["diverged"] = trial.diverged;
  j["stream_length"] = trial.stream_length;
  j["onset_step"] = trial.onset_step;
  j["windows"] = trial.metrics.size();
  if (!trial.failed) {
    j["onset_window"] = trial.outcome.onset_window;
    j["channels"] = std::move(channels);
  }
  return j.dump();
}

void write_benchmark(const std::filesystem::path& dir,
                     const BenchmarkResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "series", ec);
  if (ec) {
    throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  }
  write_text_file(dir / "summary.json", summary_to_text(result));

  std::string table = "All conditions\n" + summary_table_text(result.summary);
  for (const auto& c : result.per_condition) {
    table += "\n" + c.name + "\n" + summary_table_text(c.table);
  }
  write_text_file(dir / "summary.txt", table);

  std::string trials;
  for (const auto& t : result.trials) {
    trials += trial_to_line(t) + "\n";
    std::string series;
    for (const auto& m : t.metrics) {
      series += serialize_metrics(m) + "\n";
    }
    write_text_file(dir / "series" /
                        (t.condition + "_seed" + std::to_string(t.seed) + ".jsonl"),
                    series);
  }
  write_text_file(dir / "trials.jsonl", trials);
}

}  // namespace idt

#include "idt/benchmark_runner.hpp"

#include <atomic>
#include <cstdio>
#include <thread>

#include "idt/errors.hpp"

namespace idt {

namespace {

std::size_t episode_length(const LoopConfig& loop) {
  return std::visit([](const auto& c) { return c.episode_length; }, loop);
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a(std::uint64_t h, const T& value) {
  return fnv1a(h, &value, sizeof(T));
}

std::uint64_t hash_doubles(std::uint64_t h, const double* data, std::size_t n) {
  return fnv1a(h, data, n * sizeof(double));
}

std::string fingerprint(const Condition& condition, std::uint64_t trial_seed,
                        std::size_t episodes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, condition.name.data(), condition.name.size());
  h = fnv1a(h, condition.perturbation.kind);
  h = fnv1a(h, condition.perturbation.magnitude);
  h = fnv1a(h, condition.perturbation.onset_episode);
  h = fnv1a(h, condition.perturbation.side);
  h = fnv1a(h, trial_seed);
  h = fnv1a(h, episodes);
  if (const auto* lin = std::get_if<LinearLoopConfig>(&condition.loop)) {
    h = hash_doubles(h, lin->dynamics.data(), static_cast<std::size_t>(lin->dynamics.size()));
    h = hash_doubles(h, lin->input.data(), static_cast<std::size_t>(lin->input.size()));
    h = hash_doubles(h, lin->feedback.data(), static_cast<std::size_t>(lin->feedback.size()));
    h = hash_doubles(h, lin->force_direction.data(),
                     static_cast<std::size_t>(lin->force_direction.size()));
    for (double v : {lin->process_noise, lin->exploration_noise, lin->initial_scale,
                     lin->action_range, lin->observation_range, lin->state_cost,
                     lin->action_cost}) {
      h = fnv1a(h, v);
    }
    h = fnv1a(h, lin->episode_length);
  } else {
    const auto& d = std::get<DiscreteLoopConfig>(condition.loop);
    h = hash_doubles(h, d.kernel.data(), d.kernel.size());
    h = hash_doubles(h, d.policy.data(), d.policy.size());
    h = hash_doubles(h, d.reward.data(), d.reward.size());
    h = fnv1a(h, d.episode_length);
    h = fnv1a(h, d.initial_state);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void BenchmarkSuite::validate() const {
  if (conditions.empty()) {
    throw ConfigError("benchmark suite has no conditions");
  }
  window.validate();
  if (!(threshold > 0.0)) {
    throw ConfigError("threshold must be > 0");
  }
  if (min_consecutive < 1) {
    throw ConfigError("min_consecutive must be >= 1");
  }
  for (const auto& c : conditions) {
    c.perturbation.validate();
    if (episodes < c.perturbation.onset_episode) {
      throw ConfigError("condition '" + c.name +
                        "' starts its perturbation after the last episode");
    }
    std::visit([](const auto& loop) { loop.validate(); }, c.loop);
  }
}

BenchmarkSuite BenchmarkSuite::desk_default() {
  BenchmarkSuite suite;
  // Long calibration and a short perturbed tail: the false-alarm rate of a
  // 3-sigma band grows with every post-onset window.
  suite.episodes = 62;
  constexpr std::size_t onset = 61;
  suite.grouping = GroupingConfig{{{0, 1}, {2, 3}}, {{0}, {1}}};
  const LinearLoopConfig loop = LinearLoopConfig::desk_default();
  auto add = [&](std::string name, PerturbationKind kind, double magnitude) {
    suite.conditions.push_back(
        Condition{std::move(name), loop, Perturbation::make(kind, magnitude, onset)});
  };
  add("action_noise_1", PerturbationKind::ActionNoise, 0.01);
  add("action_noise_3", PerturbationKind::ActionNoise, 0.03);
  add("action_noise_4", PerturbationKind::ActionNoise, 0.04);
  add("force_low", PerturbationKind::ExternalForce, 0.05);
  add("force_high", PerturbationKind::ExternalForce, 0.10);
  add("dynamics_110", PerturbationKind::DynamicsScale, 0.10);
  add("observation_noise_1", PerturbationKind::ObservationNoise, 0.01);
  add("observation_noise_3", PerturbationKind::ObservationNoise, 0.03);
  return suite;
}

BenchmarkSuite BenchmarkSuite::control() {
  BenchmarkSuite suite = desk_default();
  for (auto& c : suite.conditions) {
    c.name = "none_" + c.name;
    c.perturbation = Perturbation::none(c.perturbation.onset_episode);
  }
  return suite;
}

std::int64_t onset_step(const Condition& condition) {
  return static_cast<std::int64_t>((condition.perturbation.onset_episode - 1) *
                                   episode_length(condition.loop));
}

TrialRecord run_trial(const BenchmarkSuite& suite, std::size_t condition_index,
                      std::uint64_t seed) {
  const Condition& condition = suite.conditions.at(condition_index);
  TrialRecord record;
  record.condition = condition.name;
  record.condition_index = condition_index;
  record.seed = seed;
  record.trial_seed = derive_seed(seed, condition_index);
  record.fingerprint = fingerprint(condition, record.trial_seed, suite.episodes);
  record.onset_step = onset_step(condition);

  try {
    std::vector<SymbolizedTransition> symbols;
    if (const auto* lin = std::get_if<LinearLoopConfig>(&condition.loop)) {
      LinearLoopConfig config = *lin;
      config.seed = record.trial_seed;
      LinearRun run = run_linear_loop(config, condition.perturbation, suite.episodes);
      record.diverged = run.diverged;
      std::size_t calibration_end = 0;
      while (calibration_end < run.transitions.size() &&
             run.transitions[calibration_end].t < record.onset_step) {
        ++calibration_end;
      }
      const auto all = std::span<const Transition>(run.transitions);
      const DiscretizerParams params =
          fit_discretizer(all.first(calibration_end), suite.bins, suite.clip);
      const GroupingConfig grouping = suite.grouping.value_or(
          GroupingConfig::whole(config.state_dim(), config.action_dim()));
      grouping.validate(config.state_dim(), config.action_dim());
      symbols = discretize_all(all, params, grouping);
      record.rewards.reserve(run.transitions.size());
      for (const auto& x : run.transitions) {
        record.rewards.push_back(x.reward.value_or(0.0));
      }
    } else {
      DiscreteLoopConfig config = std::get<DiscreteLoopConfig>(condition.loop);
      config.seed = record.trial_seed;
      symbols = run_discrete_loop(config, condition.perturbation,
                                  suite.episodes * config.episode_length);
      for (const auto& x : symbols) {
        if (x.reward) {
          record.rewards.push_back(*x.reward);
        }
      }
    }
    record.stream_length = symbols.size();
    record.metrics = stream_metrics(symbols, suite.window);

    const std::size_t onset_window =
        onset_window_for_step(record.metrics, record.onset_step);
    if (onset_window == record.metrics.size()) {
      throw EstimationError("no window reaches the perturbation onset");
    }
    record.baseline = calibrate(
        std::span<const WindowMetrics>(record.metrics).first(onset_window),
        suite.threshold);
    record.outcome = detect(record.metrics, *record.baseline, onset_window,
                            suite.threshold, suite.min_consecutive);
  } catch (const Error& e) {
    record.failed = true;
    record.error = e.what();
  }
  return record;
}

BenchmarkResult run_benchmark(const BenchmarkSuite& suite,
                              std::span<const std::uint64_t> seeds,
                              std::size_t threads) {
  suite.validate();
  if (seeds.empty()) {
    throw ConfigError("benchmark needs at least one seed");
  }

  const std::size_t n_conditions = suite.conditions.size();
  BenchmarkResult result;
  result.trials.resize(seeds.size() * n_conditions);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.trials.size(); i = next++) {
      result.trials[i] = run_trial(suite, i % n_conditions, seeds[i / n_conditions]);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, result.trials.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
  }

  std::vector<SeedTrials> by_seed;
  std::vector<std::vector<SeedTrials>> by_condition(n_conditions);
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    SeedTrials group{seeds[si], {}};
    for (std::size_t ci = 0; ci < n_conditions; ++ci) {
      const TrialRecord& trial = result.trials[si * n_conditions + ci];
      if (trial.failed) {
        ++result.failed_trials;
        continue;
      }
      group.trials.push_back(trial.outcome);
      by_condition[ci].push_back(SeedTrials{seeds[si], {trial.outcome}});
    }
    if (!group.trials.empty()) {
      by_seed.push_back(std::move(group));
    }
  }
  if (by_seed.empty()) {
    throw ReportError("every benchmark trial failed");
  }
  result.summary = summarize(by_seed);
  for (std::size_t ci = 0; ci < n_conditions; ++ci) {
    if (!by_condition[ci].empty()) {
      result.per_condition.push_back(
          ConditionSummary{suite.conditions[ci].name, summarize(by_condition[ci])});
    }
  }
  return result;
}

}  // namespace idt

#include "idt/synthloop.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "idt/errors.hpp"

namespace idt {

namespace {

constexpr double kRowTolerance = 1e-12;

std::size_t sample(std::mt19937_64& rng, const double* probs, std::size_t n) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cumulative += probs[i];
    if (u < cumulative) {
      return i;
    }
  }
  // Rounding left u above the last partial sum; take the last supported cell.
  for (std::size_t i = n; i-- > 0;) {
    if (probs[i] > 0.0) {
      return i;
    }
  }
  return n - 1;
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = normal(rng);
  }
  return v;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

void check_rows(const std::vector<double>& table, std::size_t rows,
                std::size_t width, const char* what) {
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      const double p = table[r * width + i];
      if (!(p >= 0.0)) {
        throw ConfigError(std::string(what) + " has a negative entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw ConfigError(std::string(what) + " row " + std::to_string(r) +
                        " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

const char* to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::None:
      return "none";
    case PerturbationKind::ActionNoise:
      return "action_noise";
    case PerturbationKind::ObservationNoise:
      return "observation_noise";
    case PerturbationKind::ExternalForce:
      return "external_force";
    case PerturbationKind::DynamicsScale:
      return "dynamics_scale";
  }
  return "unknown";
}

PerturbationKind perturbation_kind_from_string(const std::string& name) {
  for (auto kind : {PerturbationKind::None, PerturbationKind::ActionNoise,
                    PerturbationKind::ObservationNoise,
                    PerturbationKind::ExternalForce,
                    PerturbationKind::DynamicsScale}) {
    if (name == to_string(kind)) {
      return kind;
    }
  }
  throw ConfigError("unknown perturbation kind '" + name + "'");
}

const char* to_string(PerturbationSide side) {
  return side == PerturbationSide::Agent ? "agent" : "environment";
}

PerturbationSide perturbation_side_from_string(const std::string& name) {
  if (name == "agent") {
    return PerturbationSide::Agent;
  }
  if (name == "environment") {
    return PerturbationSide::Environment;
  }
  throw ConfigError("unknown perturbation side '" + name + "'");
}

Perturbation Perturbation::none(std::size_t onset_episode) {
  return Perturbation{PerturbationKind::None, 0.0, onset_episode,
                      PerturbationSide::Agent};
}

Perturbation Perturbation::make(PerturbationKind kind, double magnitude,
                                std::size_t onset_episode) {
  const bool environment = kind == PerturbationKind::ExternalForce ||
                           kind == PerturbationKind::DynamicsScale;
  return Perturbation{kind, magnitude, onset_episode,
                      environment ? PerturbationSide::Environment
                                  : PerturbationSide::Agent};
}

void Perturbation::validate() const {
  if (!(magnitude >= 0.0)) {
    throw ConfigError("perturbation magnitude must be >= 0");
  }
  if (onset_episode < 1) {
    throw ConfigError("perturbation onset_episode must be >= 1");
  }
}

double LinearLoopConfig::closed_loop_spectral_radius() const {
  const Eigen::MatrixXd closed = dynamics + input * feedback;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(closed, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void LinearLoopConfig::validate() const {
  const auto n = dynamics.rows();
  if (n == 0 || dynamics.cols() != n) {
    throw ConfigError("dynamics matrix must be square and non-empty");
  }
  if (input.rows() != n || input.cols() == 0) {
    throw ConfigError("input matrix must have state_dim rows");
  }
  if (feedback.rows() != input.cols() || feedback.cols() != n) {
    throw ConfigError("feedback gain must be action_dim x state_dim");
  }
  if (force_direction.size() != n) {
    throw ConfigError("force direction must have state_dim entries");
  }
  if (!(process_noise > 0.0) || !(exploration_noise > 0.0)) {
    throw ConfigError("noise scales must be > 0");
  }
  if (episode_length == 0) {
    throw ConfigError("episode_length must be > 0");
  }
  const double radius = closed_loop_spectral_radius();
  if (!(radius < 1.0)) {
    throw ConfigError("nominal closed loop is unstable (spectral radius " +
                      std::to_string(radius) + ")");
  }
}

LinearLoopConfig LinearLoopConfig::desk_default(std::uint64_t seed) {
  LinearLoopConfig c;
  // Two damped rotations ("body parts") coupled through their second
  // coordinates; one actuator drives each part. Near-deterministic, like a
  // frozen policy evaluated without exploration.
  c.dynamics.resize(4, 4);
  c.dynamics << 0.93, 0.27, 0.0, 0.0,
                -0.27, 0.93, 0.0, 0.07,
                0.0, 0.0, 0.93, 0.27,
                0.0, 0.07, -0.27, 0.93;
  c.input.resize(4, 2);
  c.input << 0.0, 0.0,
             0.42, 0.0,
             0.0, 0.0,
             0.0, 0.42;
  c.feedback.resize(2, 4);
  c.feedback << -0.59, -1.15, 0.0, 0.0,
                0.0, 0.0, -0.59, -1.15;
  c.force_direction = Eigen::VectorXd::Zero(4);
  c.force_direction[1] = 0.1;
  c.process_noise = 0.01;
  c.exploration_noise = 0.01;
  c.seed = seed;
  return c;
}

Eigen::MatrixXd LinearLoopConfig::stationary_covariance() const {
  const Eigen::MatrixXd a = dynamics + input * feedback;
  const auto n = a.rows();
  const Eigen::MatrixXd q =
      process_noise * process_noise * Eigen::MatrixXd::Identity(n, n) +
      exploration_noise * exploration_noise * input * input.transpose();
  // Doubling iteration for sigma = a sigma a' + q; converges since rho(a) < 1.
  Eigen::MatrixXd sigma = q;
  Eigen::MatrixXd power = a;
  for (int i = 0; i < 64; ++i) {
    const Eigen::MatrixXd next = sigma + power * sigma * power.transpose();
    power = power * power;
    const double change = (next - sigma).cwiseAbs().maxCoeff();
    sigma = next;
    if (change <= 1e-15 * sigma.cwiseAbs().maxCoeff()) {
      break;
    }
  }
  return sigma;
}

LinearRun run_linear_loop(const LinearLoopConfig& config,
                          const Perturbation& perturbation,
                          std::size_t episodes) {
  config.validate();
  perturbation.validate();
  if (episodes < perturbation.onset_episode) {
    throw ConfigError("episodes must be >= the perturbation onset episode");
  }

  const auto n = static_cast<Eigen::Index>(config.state_dim());
  const auto m = static_cast<Eigen::Index>(config.action_dim());
  std::mt19937_64 nominal(derive_seed(config.seed, 0));
  std::mt19937_64 injected(derive_seed(config.seed, 1));

  const Eigen::MatrixXd scaled_dynamics =
      (1.0 + perturbation.magnitude) * config.dynamics;
  const Eigen::VectorXd force = perturbation.magnitude * config.force_direction;
  const double obs_noise = perturbation.magnitude * config.observation_range;
  const double act_noise = perturbation.magnitude * config.action_range;

  // Episodes start from the nominal loop's stationary law, so resets leave no
  // transient for the window statistics to pick up.
  const Eigen::MatrixXd start_factor =
      Eigen::LLT<Eigen::MatrixXd>(config.stationary_covariance()).matrixL();

  LinearRun run;
  run.transitions.reserve(episodes * config.episode_length);
  for (std::size_t episode = 0; episode < episodes; ++episode) {
    const bool active = perturbation.active_in_episode(episode);
    const auto kind = active ? perturbation.kind : PerturbationKind::None;
    const Eigen::MatrixXd& d =
        kind == PerturbationKind::DynamicsScale ? scaled_dynamics : config.dynamics;

    auto observe = [&](const Eigen::VectorXd& state) -> Eigen::VectorXd {
      if (kind == PerturbationKind::ObservationNoise) {
        return state + obs_noise * gaussian(injected, n);
      }
      return state;
    };

    Eigen::VectorXd state = config.initial_scale * (start_factor * gaussian(nominal, n));
    Eigen::VectorXd obs = observe(state);
    for (std::size_t k = 0; k < config.episode_length; ++k) {
      Eigen::VectorXd action =
          config.feedback * obs + config.exploration_noise * gaussian(nominal, m);
      if (kind == PerturbationKind::ActionNoise) {
        action += act_noise * gaussian(injected, m);
      }
      Eigen::VectorXd next = d * state + config.input * action +
                             config.process_noise * gaussian(nominal, n);
      if (kind == PerturbationKind::ExternalForce) {
        next += force;
      }
      const auto t =
          static_cast<std::int64_t>(episode * config.episode_length + k);
      if (!next.allFinite() || next.norm() > kDivergenceBound) {
        run.diverged = true;
        run.divergence_step = t;
        return run;
      }
      Eigen::VectorXd next_obs = observe(next);

      Transition x;
      x.t = t;
      x.s = to_std(obs);
      x.a = to_std(action);
      x.s_next = to_std(next_obs);
      x.reward = -(config.state_cost * next.squaredNorm() +
                   config.action_cost * action.squaredNorm());
      x.episode = static_cast<std::int64_t>(episode);
      run.transitions.push_back(std::move(x));

      state = std::move(next);
      obs = std::move(next_obs);
    }
  }
  return run;
}

void DiscreteLoopConfig::validate() const {
  if (states == 0 || actions == 0) {
    throw ConfigError("discrete loop needs at least one state and one action");
  }
  if (kernel.size() != states * actions * states) {
    throw ConfigError("kernel must have states * actions * states entries");
  }
  if (policy.size() != states * actions) {
    throw ConfigError("policy must have states * actions entries");
  }
  if (!reward.empty() && reward.size() != states * actions) {
    throw ConfigError("reward table must be empty or states * actions");
  }
  if (initial_state >= states) {
    throw ConfigError("initial state out of range");
  }
  if (episode_length == 0) {
    throw ConfigError("episode_length must be > 0");
  }
  check_rows(kernel, states * actions, states, "kernel");
  check_rows(policy, states, actions, "policy");
}

DiscreteLoopConfig DiscreteLoopConfig::random(std::size_t states,
                                              std::size_t actions,
                                              std::uint64_t seed) {
  DiscreteLoopConfig c;
  c.states = states;
  c.actions = actions;
  c.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, 7));
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  auto fill_rows = [&](std::vector<double>& table, std::size_t rows,
                       std::size_t width) {
    table.resize(rows * width);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t i = 0; i < width; ++i) {
        // Cubing spreads the weights so rows are far from uniform.
        const double w = std::pow(weight(rng), 3.0);
        table[r * width + i] = w;
        sum += w;
      }
      for (std::size_t i = 0; i < width; ++i) {
        table[r * width + i] /= sum;
      }
    }
  };
  fill_rows(c.kernel, states * actions, states);
  fill_rows(c.policy, states, actions);
  return c;
}

DiscreteLoopConfig perturbed(const DiscreteLoopConfig& config,
                             const Perturbation& perturbation) {
  DiscreteLoopConfig out = config;
  if (perturbation.kind == PerturbationKind::None) {
    return out;
  }
  const double w = std::min(perturbation.magnitude, 1.0);
  if (perturbation.side == PerturbationSide::Agent) {
    const double uniform = 1.0 / static_cast<double>(config.actions);
    for (double& p : out.policy) {
      p = (1.0 - w) * p + w * uniform;
    }
  } else {
    const double uniform = 1.0 / static_cast<double>(config.states);
    for (double& p : out.kernel) {
      p = (1.0 - w) * p + w * uniform;
    }
  }
  return out;
}

std::vector<SymbolizedTransition> run_discrete_loop(
    const DiscreteLoopConfig& config, const Perturbation& perturbation,
    std::size_t steps) {
  config.validate();
  perturbation.validate();
  const DiscreteLoopConfig after = perturbed(config, perturbation);

  std::mt19937_64 rng(derive_seed(config.seed, 0));
  std::vector<SymbolizedTransition> out;
  out.reserve(steps);
  std::size_t s = config.initial_state;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t episode = t / config.episode_length;
    const DiscreteLoopConfig& c =
        perturbation.active_in_episode(episode) ? after : config;
    const std::size_t a = sample(rng, &c.policy[s * c.actions], c.actions);
    const std::size_t sn =
        sample(rng, &c.kernel[(s * c.actions + a) * c.states], c.states);

    SymbolizedTransition x;
    x.t = static_cast<std::int64_t>(t);
    x.s_sym = {s};
    x.a_sym = {a};
    x.s_next_sym = {sn};
    if (!c.reward.empty()) {
      x.reward = c.reward[s * c.actions + a];
    }
    x.episode = static_cast<std::int64_t>(episode);
    out.push_back(std::move(x));
    s = sn;
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair
  std::uint64_t z = seed * 0x9e3779b97f4a7c15ULL + stream + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  z += stream * 0xd1b54a32d192ed03ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace idt

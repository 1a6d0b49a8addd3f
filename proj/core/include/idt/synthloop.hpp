#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "idt/types.hpp"

namespace idt {

enum class PerturbationKind {
  None,
  ActionNoise,
  ObservationNoise,
  ExternalForce,
  DynamicsScale,
};

enum class PerturbationSide { Agent, Environment };

const char* to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& name);
const char* to_string(PerturbationSide side);
PerturbationSide perturbation_side_from_string(const std::string& name);

/// A change injected into the loop from `onset_episode` (1-based) onward.
struct Perturbation {
  PerturbationKind kind = PerturbationKind::None;
  double magnitude = 0.0;
  std::size_t onset_episode = 15;
  PerturbationSide side = PerturbationSide::Agent;

  static Perturbation none(std::size_t onset_episode = 15);
  /// Noise kinds act on the agent side, force and dynamics on the environment.
  static Perturbation make(PerturbationKind kind, double magnitude,
                           std::size_t onset_episode = 15);

  bool active_in_episode(std::size_t episode) const {
    return kind != PerturbationKind::None && episode + 1 >= onset_episode;
  }

  void validate() const;

  bool operator==(const Perturbation&) const = default;
};

/// Linear-Gaussian plant under a frozen linear feedback policy:
///   s' = D s + B a + bias + w,   a = K s_obs + e.
/// Noise magnitudes of perturbations are fractions of `action_range` and
/// `observation_range`.
struct LinearLoopConfig {
  Eigen::MatrixXd dynamics;  // D, state_dim x state_dim
  Eigen::MatrixXd input;     // B, state_dim x action_dim
  Eigen::MatrixXd feedback;  // K, action_dim x state_dim
  Eigen::VectorXd force_direction;
  double process_noise = 0.05;
  double exploration_noise = 0.05;
  double initial_scale = 1.0;
  double action_range = 1.0;
  double observation_range = 1.0;
  double state_cost = 1.0;
  double action_cost = 0.1;
  std::size_t episode_length = 500;
  std::uint64_t seed = 0;

  std::size_t state_dim() const { return static_cast<std::size_t>(dynamics.rows()); }
  std::size_t action_dim() const { return static_cast<std::size_t>(input.cols()); }

  /// Spectral radius of D + B K.
  double closed_loop_spectral_radius() const;

  /// Stationary state covariance of the unperturbed loop. Episode start
  /// states are drawn from it, scaled by `initial_scale`.
  Eigen::MatrixXd stationary_covariance() const;

  /// Throws ConfigError on shape mismatches, non-positive noise scales or an
  /// unstable nominal loop.
  void validate() const;

  /// Four-dimensional plant made of two coupled oscillators ("body parts")
  /// with one actuator each.
  static LinearLoopConfig desk_default(std::uint64_t seed = 0);
};

inline constexpr double kDivergenceBound = 1e6;

struct LinearRun {
  std::vector<Transition> transitions;
  bool diverged = false;
  std::optional<std::int64_t> divergence_step;
};

/// Simulates `episodes` episodes. The nominal noise and the perturbation noise
/// come from separate generators so the pre-onset prefix does not depend on
/// the perturbation. Truncates at the first state whose norm exceeds 1e6.
LinearRun run_linear_loop(const LinearLoopConfig& config,
                          const Perturbation& perturbation,
                          std::size_t episodes);

/// Finite controlled Markov chain with a scripted stochastic policy.
struct DiscreteLoopConfig {
  std::size_t states = 0;
  std::size_t actions = 0;
  std::vector<double> kernel;  // k(s'|s,a) at (s * actions + a) * states + s'
  std::vector<double> policy;  // pi(a|s) at s * actions + a
  std::vector<double> reward;  // optional r(s,a), same layout as policy
  std::size_t episode_length = 1000;
  std::size_t initial_state = 0;
  std::uint64_t seed = 0;

  double k(std::size_t s, std::size_t a, std::size_t sn) const {
    return kernel[(s * actions + a) * states + sn];
  }
  double pi(std::size_t s, std::size_t a) const { return policy[s * actions + a]; }

  /// Throws ConfigError on bad shapes, negative entries or rows that do not
  /// sum to 1 within 1e-12.
  void validate() const;

  /// Random kernel and policy rows with full support.
  static DiscreteLoopConfig random(std::size_t states, std::size_t actions,
                                   std::uint64_t seed);
};

/// Applies the perturbation as a mixture with the uniform law: the policy for
/// agent-side perturbations, the kernel for environment-side ones.
DiscreteLoopConfig perturbed(const DiscreteLoopConfig& config,
                             const Perturbation& perturbation);

/// Samples `steps` transitions as single-group symbols.
std::vector<SymbolizedTransition> run_discrete_loop(
    const DiscreteLoopConfig& config, const Perturbation& perturbation,
    std::size_t steps);

/// Deterministic 64-bit seed derived from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace idt

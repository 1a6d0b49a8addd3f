#include <cmath>

#include "idt/errors.hpp"
#include "idt/oracle.hpp"
#include "idt/synthloop.hpp"

namespace idt {

std::vector<double> metric_errors(const WindowMetrics& a, const WindowMetrics& b) {
  return {std::abs(a.h_s - b.h_s),         std::abs(a.h_a - b.h_a),
          std::abs(a.h_snext - b.h_snext), std::abs(a.mi - b.mi),
          std::abs(a.c - b.c),             std::abs(a.p - b.p),
          std::abs(a.hf - b.hf),           std::abs(a.hb - b.hb),
          std::abs(a.dh - b.dh)};
}

OracleCheckResult run_oracle_check(std::size_t loops, std::size_t samples,
                                   std::uint64_t seed, std::size_t states,
                                   std::size_t actions) {
  if (loops == 0 || samples == 0) {
    throw ConfigError("oracle check needs at least one loop and one sample");
  }
  OracleCheckResult result;
  for (std::size_t i = 0; i < loops; ++i) {
    OracleLoopResult loop;
    loop.seed = derive_seed(seed, i);
    DiscreteLoopConfig config = DiscreteLoopConfig::random(states, actions, loop.seed);
    config.episode_length = samples;
    loop.exact = exact_metrics(stationary_joint(config));

    // Start from the stationary law's mode to keep the transient short.
    const auto pi = stationary_states(config);
    std::size_t mode = 0;
    for (std::size_t s = 1; s < pi.size(); ++s) {
      if (pi[s] > pi[mode]) {
        mode = s;
      }
    }
    config.initial_state = mode;
    const auto stream = run_discrete_loop(config, Perturbation::none(), samples);
    const WindowSpec spec{samples, samples, JointMode::PerGroupMean};
    loop.estimate = window_metrics(stream, spec);

    const auto errors = metric_errors(loop.exact, loop.estimate);
    for (std::size_t q = 0; q < errors.size(); ++q) {
      if (errors[q] > loop.max_abs_error || loop.worst_quantity.empty()) {
        loop.max_abs_error = errors[q];
        loop.worst_quantity = kOracleQuantities[q];
      }
    }
    if (loop.max_abs_error > result.max_abs_error || result.worst_quantity.empty()) {
      result.max_abs_error = loop.max_abs_error;
      result.worst_quantity = loop.worst_quantity;
    }
    result.loops.push_back(std::move(loop));
  }
  return result;
}

}  // namespace idt

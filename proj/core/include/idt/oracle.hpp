#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "idt/infometrics.hpp"

namespace idt {

struct DiscreteLoopConfig;

/// Exact probability table p(s, a, s') in extended precision, laid out
/// row-major over (s, a, s').
class JointDistribution {
public:
  /// Throws DistributionError on negative entries, total mass off by more
  /// than 1e-15, or more than 10^4 cells.
  JointDistribution(std::size_t states, std::size_t actions,
                    std::size_t outcomes, std::vector<long double> table);

  std::size_t states() const { return states_; }
  std::size_t actions() const { return actions_; }
  std::size_t outcomes() const { return outcomes_; }

  long double operator()(std::size_t s, std::size_t a, std::size_t sn) const {
    return table_[(s * actions_ + a) * outcomes_ + sn];
  }
  const std::vector<long double>& table() const { return table_; }

  /// Distribution with outcome symbols `i` and `j` merged into `i`.
  JointDistribution merge_outcomes(std::size_t i, std::size_t j) const;

private:
  std::size_t states_;
  std::size_t actions_;
  std::size_t outcomes_;
  std::vector<long double> table_;
};

inline constexpr std::size_t kOracleMaxCells = 10000;

/// All information quantities by direct summation over the table.
/// MI, H(S'|S,A) and H(S,A|S') are each summed from their own definitions
/// rather than derived from joint entropies.
WindowMetrics exact_metrics(const JointDistribution& d);

/// Stationary state law of the chain induced by kernel and policy, by direct
/// linear solve. Throws OracleError on a reducible chain or a failed solve.
std::vector<long double> stationary_states(const DiscreteLoopConfig& config);

/// p(s) * pi(a|s) * k(s'|s,a) under the stationary state law.
JointDistribution stationary_joint(const DiscreteLoopConfig& config);

/// Quantities compared by the estimator-versus-oracle check, in report order.
inline constexpr const char* kOracleQuantities[] = {
    "H_S", "H_A", "H_Snext", "MI", "C", "P", "Hf", "Hb", "dH"};

struct OracleLoopResult {
  std::uint64_t seed = 0;
  WindowMetrics exact;
  WindowMetrics estimate;
  double max_abs_error = 0.0;
  std::string worst_quantity;
};

struct OracleCheckResult {
  std::vector<OracleLoopResult> loops;
  double max_abs_error = 0.0;
  std::string worst_quantity;
};

/// Absolute differences between two metric sets, in kOracleQuantities order.
std::vector<double> metric_errors(const WindowMetrics& a, const WindowMetrics& b);

/// Draws `loops` random states x actions chains, samples `samples` steps of
/// each and compares the plug-in estimate over the whole sample against the
/// exact stationary metrics.
OracleCheckResult run_oracle_check(std::size_t loops, std::size_t samples,
                                   std::uint64_t seed, std::size_t states = 3,
                                   std::size_t actions = 3);

}  // namespace idt

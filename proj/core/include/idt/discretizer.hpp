#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "idt/types.hpp"

namespace idt {

/// Disjoint variable groups for the state and action vectors. Each group's
/// per-variable bins are concatenated into one composite symbol.
struct GroupingConfig {
  std::vector<std::vector<std::size_t>> state_groups;
  std::vector<std::vector<std::size_t>> action_groups;

  /// One group per variable class holding every index.
  static GroupingConfig whole(std::size_t state_dim, std::size_t action_dim);

  /// Throws ConfigError unless both group lists partition [0, dim).
  void validate(std::size_t state_dim, std::size_t action_dim) const;

  bool operator==(const GroupingConfig&) const = default;
};

inline constexpr double kSigmaFloor = 1e-9;

/// Frozen z-score statistics and bin layout. `mu`/`sigma` hold the state
/// variables first, then the action variables. State statistics are shared
/// by `s` and `s_next`.
struct DiscretizerParams {
  int bins = 3;
  double clip = 3.0;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> mu;
  std::vector<double> sigma;

  void validate() const;

  bool operator==(const DiscretizerParams&) const = default;
};

/// Per-variable sample mean and (n-1) standard deviation over the
/// calibration segment. Throws CalibrationError on empty input.
DiscretizerParams fit_discretizer(std::span<const Transition> calibration,
                                  int bins = 3, double clip = 3.0);

/// Bin index of one value: z-score, clamp to [-clip, clip], then one of
/// `bins` equal-width half-open intervals (the top one closed).
int bin_index(double value, double mu, double sigma, int bins, double clip);

/// Throws FormatError when the transition's dimensions do not match `params`.
SymbolizedTransition discretize(const Transition& x,
                                const DiscretizerParams& params,
                                const GroupingConfig& grouping);

std::vector<SymbolizedTransition> discretize_all(
    std::span<const Transition> xs, const DiscretizerParams& params,
    const GroupingConfig& grouping);

}  // namespace idt

#include "idt/discretizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "idt/errors.hpp"

namespace idt {

namespace {

void validate_partition(const std::vector<std::vector<std::size_t>>& groups,
                        std::size_t dim, const char* what) {
  if (groups.empty()) {
    throw ConfigError(std::string(what) + " grouping needs at least one group");
  }
  std::vector<bool> seen(dim, false);
  std::size_t covered = 0;
  for (const auto& group : groups) {
    if (group.empty()) {
      throw ConfigError(std::string(what) + " grouping contains an empty group");
    }
    for (std::size_t index : group) {
      if (index >= dim) {
        throw ConfigError(std::string(what) + " index " + std::to_string(index) +
                          " out of range for dimension " + std::to_string(dim));
      }
      if (seen[index]) {
        throw ConfigError(std::string(what) + " index " + std::to_string(index) +
                          " appears in more than one group");
      }
      seen[index] = true;
      ++covered;
    }
  }
  if (covered != dim) {
    throw ConfigError(std::string(what) + " grouping leaves indices uncovered");
  }
}

// Largest group size whose composite symbol still fits in a Symbol.
std::size_t max_group_size(int bins) {
  std::size_t size = 0;
  Symbol capacity = 1;
  const auto b = static_cast<Symbol>(bins);
  while (capacity <= std::numeric_limits<Symbol>::max() / b) {
    capacity *= b;
    ++size;
  }
  return size;
}

Symbol encode_group(std::span<const double> values, std::size_t offset,
                    const std::vector<std::size_t>& group,
                    const DiscretizerParams& params) {
  Symbol code = 0;
  for (std::size_t index : group) {
    if (index >= values.size()) {
      throw ConfigError("group index " + std::to_string(index) +
                        " out of range");
    }
    if (std::isnan(values[index])) {
      throw FormatError("NaN value cannot be discretized");
    }
    const std::size_t var = offset + index;
    const int bin = bin_index(values[index], params.mu[var], params.sigma[var],
                              params.bins, params.clip);
    code = code * static_cast<Symbol>(params.bins) + static_cast<Symbol>(bin);
  }
  return code;
}

}  // namespace

GroupingConfig GroupingConfig::whole(std::size_t state_dim,
                                     std::size_t action_dim) {
  GroupingConfig config;
  config.state_groups.emplace_back(state_dim);
  std::iota(config.state_groups.back().begin(),
            config.state_groups.back().end(), std::size_t{0});
  config.action_groups.emplace_back(action_dim);
  std::iota(config.action_groups.back().begin(),
            config.action_groups.back().end(), std::size_t{0});
  return config;
}

void GroupingConfig::validate(std::size_t state_dim,
                              std::size_t action_dim) const {
  validate_partition(state_groups, state_dim, "state");
  validate_partition(action_groups, action_dim, "action");
}

void DiscretizerParams::validate() const {
  if (bins < 2) {
    throw ConfigError("bins must be >= 2");
  }
  if (!(clip > 0.0)) {
    throw ConfigError("clip must be > 0");
  }
  if (mu.size() != state_dim + action_dim ||
      sigma.size() != state_dim + action_dim) {
    throw ConfigError("mu/sigma length must equal state_dim + action_dim");
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) {
      throw ConfigError("sigma entries must be >= 0");
    }
  }
}

DiscretizerParams fit_discretizer(std::span<const Transition> calibration,
                                  int bins, double clip) {
  if (calibration.empty()) {
    throw CalibrationError("cannot fit discretizer on an empty calibration segment");
  }
  if (bins < 2) {
    throw ConfigError("bins must be >= 2");
  }
  if (!(clip > 0.0)) {
    throw ConfigError("clip must be > 0");
  }

  DiscretizerParams params;
  params.bins = bins;
  params.clip = clip;
  params.state_dim = calibration.front().s.size();
  params.action_dim = calibration.front().a.size();
  const std::size_t dim = params.state_dim + params.action_dim;

  auto value = [&](const Transition& x, std::size_t var) {
    return var < params.state_dim ? x.s[var] : x.a[var - params.state_dim];
  };

  for (const auto& x : calibration) {
    if (x.s.size() != params.state_dim || x.a.size() != params.action_dim) {
      throw FormatError("calibration transitions have inconsistent dimensions");
    }
  }

  const auto n = static_cast<double>(calibration.size());
  params.mu.assign(dim, 0.0);
  params.sigma.assign(dim, kSigmaFloor);
  for (std::size_t var = 0; var < dim; ++var) {
    double sum = 0.0;
    for (const auto& x : calibration) {
      sum += value(x, var);
    }
    const double mean = sum / n;
    params.mu[var] = mean;
    if (calibration.size() > 1) {
      double ss = 0.0;
      for (const auto& x : calibration) {
        const double d = value(x, var) - mean;
        ss += d * d;
      }
      params.sigma[var] = std::max(std::sqrt(ss / (n - 1.0)), kSigmaFloor);
    }
  }
  return params;
}

int bin_index(double value, double mu, double sigma, int bins, double clip) {
  const double z = std::clamp((value - mu) / std::max(sigma, kSigmaFloor),
                              -clip, clip);
  const double width = 2.0 * clip / bins;
  const int bin = static_cast<int>(std::floor((z + clip) / width));
  return std::clamp(bin, 0, bins - 1);
}

SymbolizedTransition discretize(const Transition& x,
                                const DiscretizerParams& params,
                                const GroupingConfig& grouping) {
  if (x.s.size() != params.state_dim || x.s_next.size() != params.state_dim ||
      x.a.size() != params.action_dim) {
    throw FormatError("transition dimensions (" + std::to_string(x.s.size()) +
                      ", " + std::to_string(x.a.size()) + ", " +
                      std::to_string(x.s_next.size()) +
                      ") do not match discretizer (" +
                      std::to_string(params.state_dim) + ", " +
                      std::to_string(params.action_dim) + ")");
  }
  const std::size_t limit = max_group_size(params.bins);
  auto check = [&](const auto& groups) {
    for (const auto& g : groups) {
      if (g.size() > limit) {
        throw ConfigError("group of " + std::to_string(g.size()) +
                          " variables overflows the symbol range");
      }
    }
  };
  check(grouping.state_groups);
  check(grouping.action_groups);

  SymbolizedTransition out;
  out.t = x.t;
  out.reward = x.reward;
  out.episode = x.episode;
  out.s_sym.reserve(grouping.state_groups.size());
  out.s_next_sym.reserve(grouping.state_groups.size());
  out.a_sym.reserve(grouping.action_groups.size());
  for (const auto& group : grouping.state_groups) {
    out.s_sym.push_back(encode_group(x.s, 0, group, params));
    out.s_next_sym.push_back(encode_group(x.s_next, 0, group, params));
  }
  for (const auto& group : grouping.action_groups) {
    out.a_sym.push_back(encode_group(x.a, params.state_dim, group, params));
  }
  return out;
}

std::vector<SymbolizedTransition> discretize_all(
    std::span<const Transition> xs, const DiscretizerParams& params,
    const GroupingConfig& grouping) {
  std::vector<SymbolizedTransition> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    out.push_back(discretize(x, params, grouping));
  }
  return out;
}

}  // namespace idt

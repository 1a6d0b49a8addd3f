#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "idt/types.hpp"

namespace idt {

/// How composite group symbols combine into S, A and S'.
enum class JointMode {
  /// One channel per state group, paired with the union of action groups;
  /// per-channel metrics are arithmetic-averaged.
  PerGroupMean,
  /// S, A and S' are the tuples of all their group symbols.
  FullJoint,
};

const char* to_string(JointMode mode);
JointMode joint_mode_from_string(const std::string& name);

struct WindowSpec {
  std::size_t length = 300;
  std::size_t stride = 50;
  JointMode joint_mode = JointMode::PerGroupMean;

  /// Throws ConfigError unless 1 <= stride <= length.
  void validate() const;

  bool operator==(const WindowSpec&) const = default;
};

inline constexpr const char* kFlagDegenerateDenominator = "degenerate-denominator";
inline constexpr const char* kFlagDegenerateChannel = "degenerate-channel";

/// Information quantities of one window, all entropies in bits.
struct WindowMetrics {
  std::size_t window_index = 0;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  double h_s = 0.0;
  double h_a = 0.0;
  double h_snext = 0.0;
  double h_sa = 0.0;
  double h_joint = 0.0;
  double mi = 0.0;
  double c = 0.0;
  double p = 0.0;
  double hf = 0.0;
  double hb = 0.0;
  double dh = 0.0;
  std::optional<double> reward_mean;
  std::optional<std::size_t> sample_count;
  std::vector<std::string> flags;

  bool has_flag(const std::string& flag) const;

  bool operator==(const WindowMetrics&) const = default;
};

/// Plug-in Shannon entropy in bits of a histogram. Throws EstimationError on
/// an empty histogram or a zero count.
double entropy(const std::map<Symbol, std::uint64_t>& counts);

/// Same, over bare counts. The result depends only on the multiset of counts.
double entropy_of_counts(std::vector<std::uint64_t> counts);

/// Number of windows `stream_metrics` emits for a stream of `n` samples.
std::size_t window_count(std::size_t n, const WindowSpec& spec);

/// Sliding-window histogram accumulator. Keeps the last `spec.length`
/// samples and incremental counts of S, A, S', (S, A) and (S, A, S') per
/// channel. Single writer.
class WindowAccumulator {
public:
  explicit WindowAccumulator(WindowSpec spec);

  /// Adds a sample, evicting the oldest one once the window is full.
  /// Returns metrics when a window boundary is reached.
  std::optional<WindowMetrics> push(const SymbolizedTransition& x);

  /// Metrics of the samples currently held; does not require a full window.
  WindowMetrics compute(std::size_t window_index) const;

  std::size_t size() const { return buffer_.size(); }
  std::size_t pushed() const { return pushed_; }
  const WindowSpec& spec() const { return spec_; }

private:
  struct Entry {
    std::int64_t t;
    std::optional<double> reward;
    std::vector<std::array<std::uint64_t, 3>> keys;  // (s, a, s') per channel
  };

  struct PairHash {
    std::size_t operator()(const std::array<std::uint64_t, 2>& k) const noexcept;
  };
  struct TripleHash {
    std::size_t operator()(const std::array<std::uint64_t, 3>& k) const noexcept;
  };
  struct TupleHash {
    std::size_t operator()(const std::vector<Symbol>& k) const noexcept;
  };

  struct ChannelCounts {
    std::unordered_map<std::uint64_t, std::uint64_t> s, a, s_next;
    std::unordered_map<std::array<std::uint64_t, 2>, std::uint64_t, PairHash> sa;
    std::unordered_map<std::array<std::uint64_t, 3>, std::uint64_t, TripleHash> joint;

    void add(const std::array<std::uint64_t, 3>& key);
    void remove(const std::array<std::uint64_t, 3>& key);
  };

  std::uint64_t intern(std::unordered_map<std::vector<Symbol>, std::uint64_t,
                                          TupleHash>& table,
                       std::vector<Symbol> tuple);
  Entry make_entry(const SymbolizedTransition& x);

  WindowSpec spec_;
  std::deque<Entry> buffer_;
  std::vector<ChannelCounts> channels_;
  std::unordered_map<std::vector<Symbol>, std::uint64_t, TupleHash> state_ids_;
  std::unordered_map<std::vector<Symbol>, std::uint64_t, TupleHash> action_ids_;
  std::size_t state_groups_ = 0;
  std::size_t action_groups_ = 0;
  std::size_t pushed_ = 0;
  std::size_t emitted_ = 0;
};

/// Metrics of exactly one window. Throws EstimationError if the window length
/// differs from `spec.length`.
WindowMetrics window_metrics(std::span<const SymbolizedTransition> window,
                             const WindowSpec& spec);

/// One WindowMetrics per start position 0, stride, 2*stride, ...; throws
/// EstimationError if the stream is shorter than one window.
std::vector<WindowMetrics> stream_metrics(
    std::span<const SymbolizedTransition> stream, const WindowSpec& spec);

}  // namespace idt

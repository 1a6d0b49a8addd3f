#include "idt/infometrics.hpp"

#include <algorithm>
#include <cmath>

#include "idt/errors.hpp"

namespace idt {

namespace {

constexpr double kClampTolerance = 1e-12;

std::size_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::size_t>(x ^ (x >> 31));
}

template <typename Map>
std::vector<std::uint64_t> values_of(const Map& map) {
  std::vector<std::uint64_t> out;
  out.reserve(map.size());
  for (const auto& [key, count] : map) {
    out.push_back(count);
  }
  return out;
}

template <typename Map, typename Key>
void decrement(Map& map, const Key& key) {
  auto it = map.find(key);
  if (--it->second == 0) {
    map.erase(it);
  }
}

double clamp_artifact(double x) {
  return (x < 0.0 && x > -kClampTolerance) ? 0.0 : x;
}

struct ChannelEntropies {
  double h_s, h_a, h_snext, h_sa, h_joint, mi, c, p, hf, hb;
};

ChannelEntropies derive(double h_s, double h_a, double h_snext, double h_sa,
                        double h_joint) {
  ChannelEntropies e{};
  e.h_s = h_s;
  e.h_a = h_a;
  e.h_snext = h_snext;
  e.h_sa = h_sa;
  e.h_joint = h_joint;
  e.mi = clamp_artifact(h_sa + h_snext - h_joint);
  e.hf = clamp_artifact(h_joint - h_sa);
  e.hb = clamp_artifact(h_joint - h_snext);
  e.c = h_s + h_a + h_snext;
  e.p = e.c > 0.0 ? e.mi / e.c : 0.0;
  return e;
}

}  // namespace

const char* to_string(JointMode mode) {
  switch (mode) {
    case JointMode::PerGroupMean:
      return "per_group_mean";
    case JointMode::FullJoint:
      return "full_joint";
  }
  return "unknown";
}

JointMode joint_mode_from_string(const std::string& name) {
  if (name == "per_group_mean" || name == "PER_GROUP_MEAN") {
    return JointMode::PerGroupMean;
  }
  if (name == "full_joint" || name == "FULL_JOINT") {
    return JointMode::FullJoint;
  }
  throw ConfigError("unknown joint mode '" + name + "'");
}

void WindowSpec::validate() const {
  if (length < 1 || stride < 1 || stride > length) {
    throw ConfigError("window spec requires 1 <= stride <= length (got length " +
                      std::to_string(length) + ", stride " +
                      std::to_string(stride) + ")");
  }
}

bool WindowMetrics::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

double entropy_of_counts(std::vector<std::uint64_t> counts) {
  if (counts.empty()) {
    throw EstimationError("entropy of an empty histogram");
  }
  // Summing in sorted order makes the result a function of the multiset
  // alone, independent of how the histogram was keyed or built.
  std::sort(counts.begin(), counts.end());
  std::uint64_t total = 0;
  for (auto c : counts) {
    if (c == 0) {
      throw EstimationError("histogram contains a zero count");
    }
    total += c;
  }
  const auto n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h <= 0.0 ? 0.0 : h;
}

double entropy(const std::map<Symbol, std::uint64_t>& counts) {
  return entropy_of_counts(values_of(counts));
}

std::size_t window_count(std::size_t n, const WindowSpec& spec) {
  spec.validate();
  if (n < spec.length) {
    return 0;
  }
  return (n - spec.length) / spec.stride + 1;
}

std::size_t WindowAccumulator::PairHash::operator()(
    const std::array<std::uint64_t, 2>& k) const noexcept {
  return mix(k[0] ^ mix(k[1]));
}

std::size_t WindowAccumulator::TripleHash::operator()(
    const std::array<std::uint64_t, 3>& k) const noexcept {
  return mix(k[0] ^ mix(k[1] ^ mix(k[2])));
}

std::size_t WindowAccumulator::TupleHash::operator()(
    const std::vector<Symbol>& k) const noexcept {
  std::uint64_t h = k.size();
  for (auto v : k) {
    h = mix(h ^ v);
  }
  return static_cast<std::size_t>(h);
}

void WindowAccumulator::ChannelCounts::add(
    const std::array<std::uint64_t, 3>& key) {
  ++s[key[0]];
  ++a[key[1]];
  ++s_next[key[2]];
  ++sa[{key[0], key[1]}];
  ++joint[key];
}

void WindowAccumulator::ChannelCounts::remove(
    const std::array<std::uint64_t, 3>& key) {
  decrement(s, key[0]);
  decrement(a, key[1]);
  decrement(s_next, key[2]);
  decrement(sa, std::array<std::uint64_t, 2>{key[0], key[1]});
  decrement(joint, key);
}

WindowAccumulator::WindowAccumulator(WindowSpec spec) : spec_(spec) {
  spec_.validate();
}

std::uint64_t WindowAccumulator::intern(
    std::unordered_map<std::vector<Symbol>, std::uint64_t, TupleHash>& table,
    std::vector<Symbol> tuple) {
  if (tuple.size() == 1) {
    return tuple.front();
  }
  const auto next = static_cast<std::uint64_t>(table.size());
  return table.try_emplace(std::move(tuple), next).first->second;
}

WindowAccumulator::Entry WindowAccumulator::make_entry(
    const SymbolizedTransition& x) {
  if (pushed_ == 0) {
    state_groups_ = x.s_sym.size();
    action_groups_ = x.a_sym.size();
    if (state_groups_ == 0 || action_groups_ == 0) {
      throw EstimationError("symbolized transition has no groups");
    }
    channels_.assign(
        spec_.joint_mode == JointMode::FullJoint ? 1 : state_groups_,
        ChannelCounts{});
  }
  if (x.s_sym.size() != state_groups_ || x.s_next_sym.size() != state_groups_ ||
      x.a_sym.size() != action_groups_) {
    throw EstimationError("group structure changed mid-stream at t=" +
                          std::to_string(x.t));
  }

  Entry entry{x.t, x.reward, {}};
  const std::uint64_t action = intern(action_ids_, x.a_sym);
  if (spec_.joint_mode == JointMode::FullJoint) {
    entry.keys.push_back({intern(state_ids_, x.s_sym), action,
                          intern(state_ids_, x.s_next_sym)});
  } else {
    entry.keys.reserve(state_groups_);
    for (std::size_t g = 0; g < state_groups_; ++g) {
      entry.keys.push_back({x.s_sym[g], action, x.s_next_sym[g]});
    }
  }
  return entry;
}

std::optional<WindowMetrics> WindowAccumulator::push(
    const SymbolizedTransition& x) {
  Entry entry = make_entry(x);
  for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
    channels_[ch].add(entry.keys[ch]);
  }
  buffer_.push_back(std::move(entry));
  ++pushed_;
  if (buffer_.size() > spec_.length) {
    const Entry& oldest = buffer_.front();
    for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
      channels_[ch].remove(oldest.keys[ch]);
    }
    buffer_.pop_front();
  }
  if (pushed_ >= spec_.length && (pushed_ - spec_.length) % spec_.stride == 0) {
    return compute(emitted_++);
  }
  return std::nullopt;
}

WindowMetrics WindowAccumulator::compute(std::size_t window_index) const {
  if (buffer_.empty()) {
    throw EstimationError("no samples in window");
  }
  WindowMetrics m;
  m.window_index = window_index;
  m.t_start = buffer_.front().t;
  m.t_end = buffer_.back().t;
  m.sample_count = buffer_.size();

  double reward_sum = 0.0;
  std::size_t reward_n = 0;
  for (const auto& e : buffer_) {
    if (e.reward) {
      reward_sum += *e.reward;
      ++reward_n;
    }
  }
  if (reward_n > 0) {
    m.reward_mean = reward_sum / static_cast<double>(reward_n);
  }

  std::size_t live = 0;
  double p_sum = 0.0;
  for (const auto& counts : channels_) {
    const ChannelEntropies e = derive(
        entropy_of_counts(values_of(counts.s)),
        entropy_of_counts(values_of(counts.a)),
        entropy_of_counts(values_of(counts.s_next)),
        entropy_of_counts(values_of(counts.sa)),
        entropy_of_counts(values_of(counts.joint)));
    m.h_s += e.h_s;
    m.h_a += e.h_a;
    m.h_snext += e.h_snext;
    m.h_sa += e.h_sa;
    m.h_joint += e.h_joint;
    m.mi += e.mi;
    m.c += e.c;
    m.hf += e.hf;
    m.hb += e.hb;
    if (e.c > 0.0) {
      p_sum += e.p;
      ++live;
    }
  }
  const auto k = static_cast<double>(channels_.size());
  m.h_s /= k;
  m.h_a /= k;
  m.h_snext /= k;
  m.h_sa /= k;
  m.h_joint /= k;
  m.mi /= k;
  m.c /= k;
  m.hf /= k;
  m.hb /= k;
  m.dh = m.hf - m.hb;
  if (live > 0) {
    m.p = p_sum / static_cast<double>(live);
  }
  if (live == 0) {
    m.flags.emplace_back(kFlagDegenerateDenominator);
  } else if (live < channels_.size()) {
    m.flags.emplace_back(kFlagDegenerateChannel);
  }
  return m;
}

WindowMetrics window_metrics(std::span<const SymbolizedTransition> window,
                             const WindowSpec& spec) {
  if (window.size() != spec.length) {
    throw EstimationError("window holds " + std::to_string(window.size()) +
                          " samples, expected " + std::to_string(spec.length));
  }
  WindowAccumulator acc(spec);
  std::optional<WindowMetrics> out;
  for (const auto& x : window) {
    out = acc.push(x);
  }
  return *out;
}

std::vector<WindowMetrics> stream_metrics(
    std::span<const SymbolizedTransition> stream, const WindowSpec& spec) {
  spec.validate();
  if (stream.size() < spec.length) {
    throw EstimationError("stream of " + std::to_string(stream.size()) +
                          " samples is shorter than the window length " +
                          std::to_string(spec.length));
  }
  WindowAccumulator acc(spec);
  std::vector<WindowMetrics> out;
  out.reserve(window_count(stream.size(), spec));
  for (const auto& x : stream) {
    if (auto m = acc.push(x)) {
      out.push_back(std::move(*m));
    }
  }
  return out;
}

}  // namespace idt

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace idt {

/// Composite symbol of one variable group (base-`bins` positional code).
using Symbol = std::uint64_t;

/// One (S, A, S') sample from the agent-environment interaction stream.
struct Transition {
  std::int64_t t = 0;
  std::vector<double> s;
  std::vector<double> a;
  std::vector<double> s_next;
  std::optional<double> reward;
  std::optional<std::int64_t> episode;

  bool operator==(const Transition&) const = default;
};

/// A transition after discretization: one symbol per variable group.
/// `s_sym` and `s_next_sym` share the state grouping.
struct SymbolizedTransition {
  std::int64_t t = 0;
  std::vector<Symbol> s_sym;
  std::vector<Symbol> a_sym;
  std::vector<Symbol> s_next_sym;
  std::optional<double> reward;
  std::optional<std::int64_t> episode;

  bool operator==(const SymbolizedTransition&) const = default;
};

}  // namespace idt

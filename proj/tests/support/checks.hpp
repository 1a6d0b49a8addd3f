#pragma once

#include <cmath>
#include <span>
#include <string>

#include "idt/infometrics.hpp"

namespace check {

inline constexpr double kIdentityTol = 1e-9;

/// Empty string when the window satisfies the chain identities and the bound,
/// otherwise a description of the first violation.
inline std::string window_invariants(const idt::WindowMetrics& m) {
  if (!(std::abs(m.h_snext - (m.mi + m.hf)) < kIdentityTol)) return "H_Snext != MI + Hf";
  if (!(std::abs(m.h_sa - (m.mi + m.hb)) < kIdentityTol)) return "H_SA != MI + Hb";
  if (m.dh != m.hf - m.hb) return "dH != Hf - Hb";
  if (!(m.p >= 0.0 && m.p <= 0.5 + 1e-12)) return "P out of [0, 0.5]";
  if (m.mi < 0.0 || m.hf < 0.0 || m.hb < 0.0) return "negative information";
  return {};
}

inline std::string all_invariants(std::span<const idt::WindowMetrics> ms) {
  for (const auto& m : ms) {
    auto e = window_invariants(m);
    if (!e.empty()) return "window " + std::to_string(m.window_index) + ": " + e;
  }
  return {};
}

}  // namespace check

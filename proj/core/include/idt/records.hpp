#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idt/detector.hpp"
#include "idt/infometrics.hpp"
#include "idt/line_source.hpp"
#include "idt/types.hpp"

namespace idt {

/// Builds one flat JSON object on a single line. Doubles are written in the
/// shortest form that parses back to the same bits.
class JsonLine {
public:
  JsonLine& field(std::string_view key, double value);
  JsonLine& field(std::string_view key, std::int64_t value);
  JsonLine& field(std::string_view key, std::uint64_t value);
  JsonLine& field(std::string_view key, std::string_view value);
  JsonLine& field(std::string_view key, bool value);
  JsonLine& field(std::string_view key, std::span<const double> values);
  JsonLine& field(std::string_view key, std::span<const std::string> values);

  std::string str() const { return buffer_ + "}"; }

private:
  void key(std::string_view k);

  std::string buffer_ = "{";
  bool first_ = true;
};

/// Shortest round-trip decimal form of `x`; "null" for non-finite values.
std::string format_double(double x);

/// Parses one TransitionRecord line. Throws FormatError naming `line_number`.
Transition parse_transition(std::string_view line, std::size_t line_number = 0);

std::string serialize_transition(const Transition& x);

std::string serialize_metrics(const WindowMetrics& m);

/// Inverse of serialize_metrics for the serialized fields.
WindowMetrics parse_metrics(std::string_view line, std::size_t line_number = 0);

std::string serialize_event(const DetectionEvent& e);

/// Pulls Transitions off a LineSource in arrival order. Blank lines are
/// skipped; the first record fixes the dimensions for the rest of the stream.
class TransitionReader {
public:
  explicit TransitionReader(LineSource& source) : source_(&source) {}

  /// Throws FormatError on malformed lines or dimension drift.
  std::optional<Transition> next();

  std::size_t line_number() const { return line_number_; }

private:
  LineSource* source_;
  std::size_t line_number_ = 0;
  std::optional<std::array<std::size_t, 2>> dims_;
  std::string line_;
};

/// Reads a whole source: a file path, "-" (standard input) or tcp://host:port.
std::vector<Transition> read_stream(const std::string& source);

std::vector<Transition> read_all(LineSource& source);

}  // namespace idt

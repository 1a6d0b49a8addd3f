#include "idt/records.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <cmath>

#include <nlohmann/json.hpp>

#include "idt/errors.hpp"

namespace idt {

namespace {

using nlohmann::json;

void append_escaped(std::string& out, std::string_view s) {
  out.push_back('"');
  for (char ch : s) {
    switch (ch) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          std::array<char, 8> buf{};
          std::snprintf(buf.data(), buf.size(), "\\u%04x", ch);
          out += buf.data();
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
}

template <typename Int>
std::string format_int(Int v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

json parse_object(std::string_view line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed record: ") + e.what(), line_number);
  }
  if (!j.is_object()) {
    throw FormatError("record is not an object", line_number);
  }
  return j;
}

const json& require(const json& j, const char* key, std::size_t line_number) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw FormatError(std::string("missing required key '") + key + "'",
                      line_number);
  }
  return *it;
}

std::int64_t as_integer(const json& v, const char* key, std::size_t line_number) {
  if (v.is_number_integer()) {
    return v.get<std::int64_t>();
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::trunc(d) == d && std::abs(d) < 9.0e15) {
      return static_cast<std::int64_t>(d);
    }
  }
  throw FormatError(std::string("key '") + key + "' must be an integer",
                    line_number);
}

double as_number(const json& v, const char* key, std::size_t line_number) {
  if (!v.is_number()) {
    throw FormatError(std::string("key '") + key + "' must be a number",
                      line_number);
  }
  return v.get<double>();
}

std::vector<double> as_numbers(const json& v, const char* key,
                               std::size_t line_number) {
  if (!v.is_array()) {
    throw FormatError(std::string("key '") + key + "' must be an array",
                      line_number);
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    out.push_back(as_number(e, key, line_number));
  }
  return out;
}

std::optional<double> optional_number(const json& j, const char* key,
                                      std::size_t line_number) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  return as_number(*it, key, line_number);
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) {
    return "null";
  }
  if (x == 0.0 && std::signbit(x)) {
    return "-0.0";  // "-0" would read back as the integer 0
  }
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

void JsonLine::key(std::string_view k) {
  if (!first_) {
    buffer_.push_back(',');
  }
  first_ = false;
  append_escaped(buffer_, k);
  buffer_.push_back(':');
}

JsonLine& JsonLine::field(std::string_view k, double value) {
  key(k);
  buffer_ += format_double(value);
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, std::int64_t value) {
  key(k);
  buffer_ += format_int(value);
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, std::uint64_t value) {
  key(k);
  buffer_ += format_int(value);
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, std::string_view value) {
  key(k);
  append_escaped(buffer_, value);
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, bool value) {
  key(k);
  buffer_ += value ? "true" : "false";
  return *this;
}

JsonLine& JsonLine::field(std::string_view k, std::span<const double> values) {
  key(k);
  buffer_.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) {
      buffer_.push_back(',');
    }
    buffer_ += format_double(values[i]);
  }
  buffer_.push_back(']');
  return *this;
}

JsonLine& JsonLine::field(std::string_view k,
                          std::span<const std::string> values) {
  key(k);
  buffer_.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) {
      buffer_.push_back(',');
    }
    append_escaped(buffer_, values[i]);
  }
  buffer_.push_back(']');
  return *this;
}

Transition parse_transition(std::string_view line, std::size_t line_number) {
  const json j = parse_object(line, line_number);
  Transition x;
  x.t = as_integer(require(j, "t", line_number), "t", line_number);
  if (x.t < 0) {
    throw FormatError("key 't' must be >= 0", line_number);
  }
  x.s = as_numbers(require(j, "s", line_number), "s", line_number);
  x.a = as_numbers(require(j, "a", line_number), "a", line_number);
  x.s_next = as_numbers(require(j, "s_next", line_number), "s_next", line_number);
  if (x.s.size() != x.s_next.size()) {
    throw FormatError("'s' and 's_next' differ in length", line_number);
  }
  x.reward = optional_number(j, "r", line_number);
  if (auto it = j.find("episode"); it != j.end() && !it->is_null()) {
    x.episode = as_integer(*it, "episode", line_number);
    if (*x.episode < 0) {
      throw FormatError("key 'episode' must be >= 0", line_number);
    }
  }
  return x;
}

std::string serialize_transition(const Transition& x) {
  JsonLine line;
  line.field("t", x.t).field("s", x.s).field("a", x.a).field("s_next", x.s_next);
  if (x.reward) {
    line.field("r", *x.reward);
  }
  if (x.episode) {
    line.field("episode", *x.episode);
  }
  return line.str();
}

std::string serialize_metrics(const WindowMetrics& m) {
  JsonLine line;
  line.field("window_index", static_cast<std::uint64_t>(m.window_index))
      .field("t_start", m.t_start)
      .field("t_end", m.t_end)
      .field("P", m.p)
      .field("Hf", m.hf)
      .field("Hb", m.hb)
      .field("dH", m.dh)
      .field("H_S", m.h_s)
      .field("H_A", m.h_a)
      .field("H_Snext", m.h_snext)
      .field("MI", m.mi)
      .field("C", m.c);
  if (m.reward_mean) {
    line.field("reward_mean", *m.reward_mean);
  }
  line.field("flags", std::span<const std::string>(m.flags));
  return line.str();
}

WindowMetrics parse_metrics(std::string_view line, std::size_t line_number) {
  const json j = parse_object(line, line_number);
  WindowMetrics m;
  m.window_index = static_cast<std::size_t>(
      as_integer(require(j, "window_index", line_number), "window_index",
                 line_number));
  m.t_start = as_integer(require(j, "t_start", line_number), "t_start", line_number);
  m.t_end = as_integer(require(j, "t_end", line_number), "t_end", line_number);
  auto number = [&](const char* key) {
    return as_number(require(j, key, line_number), key, line_number);
  };
  m.p = number("P");
  m.hf = number("Hf");
  m.hb = number("Hb");
  m.dh = number("dH");
  m.h_s = number("H_S");
  m.h_a = number("H_A");
  m.h_snext = number("H_Snext");
  m.mi = number("MI");
  m.c = number("C");
  m.reward_mean = optional_number(j, "reward_mean", line_number);
  // Joint entropies are implied by the chain identities.
  m.h_sa = m.mi + m.hb;
  m.h_joint = m.h_sa + m.hf;
  const json& flags = require(j, "flags", line_number);
  if (!flags.is_array()) {
    throw FormatError("key 'flags' must be an array", line_number);
  }
  for (const auto& f : flags) {
    if (!f.is_string()) {
      throw FormatError("flags must be strings", line_number);
    }
    m.flags.push_back(f.get<std::string>());
  }
  return m;
}

std::string serialize_event(const DetectionEvent& e) {
  JsonLine line;
  line.field("channel", std::string_view(to_string(e.channel)))
      .field("window_index", static_cast<std::uint64_t>(e.window_index))
      .field("z", e.z)
      .field("direction", std::string_view(to_string(e.direction)));
  if (e.latency_windows) {
    line.field("latency_windows", static_cast<std::uint64_t>(*e.latency_windows));
  }
  return line.str();
}

std::optional<Transition> TransitionReader::next() {
  while (source_->next_line(line_)) {
    ++line_number_;
    if (line_.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    Transition x = parse_transition(line_, line_number_);
    const std::array<std::size_t, 2> dims{x.s.size(), x.a.size()};
    if (!dims_) {
      dims_ = dims;
    } else if (*dims_ != dims) {
      throw FormatError("dimensions changed mid-stream from (" +
                            std::to_string((*dims_)[0]) + ", " +
                            std::to_string((*dims_)[1]) + ") to (" +
                            std::to_string(dims[0]) + ", " +
                            std::to_string(dims[1]) + ")",
                        line_number_);
    }
    return x;
  }
  return std::nullopt;
}

std::vector<Transition> read_all(LineSource& source) {
  TransitionReader reader(source);
  std::vector<Transition> out;
  while (auto x = reader.next()) {
    out.push_back(std::move(*x));
  }
  return out;
}

std::vector<Transition> read_stream(const std::string& source) {
  auto lines = open_source(source);
  return read_all(*lines);
}

}  // namespace idt

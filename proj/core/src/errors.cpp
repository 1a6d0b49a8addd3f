#include "idt/errors.hpp"

namespace idt {

namespace {

std::string with_line(const std::string& what, std::size_t line) {
  if (line == 0) {
    return what;
  }
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

FormatError::FormatError(const std::string& what, std::size_t line)
    : Error(with_line(what, line)), line_(line) {}

}  // namespace idt

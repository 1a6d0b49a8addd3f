#pragma once

#include <istream>
#include <memory>
#include <string>

namespace idt {

/// Newline-delimited text input.
class LineSource {
public:
  virtual ~LineSource() = default;

  /// Reads the next line without its terminator. Returns false at end of input.
  virtual bool next_line(std::string& line) = 0;
};

/// Lines from a std::istream (a file or standard input).
class IstreamLineSource : public LineSource {
public:
  explicit IstreamLineSource(std::istream& in) : in_(&in) {}
  explicit IstreamLineSource(std::unique_ptr<std::istream> owned);

  bool next_line(std::string& line) override;

private:
  std::unique_ptr<std::istream> owned_;
  std::istream* in_;
};

/// Client connection to tcp://host:port; reads until the peer closes.
class TcpLineSource : public LineSource {
public:
  TcpLineSource(const std::string& host, const std::string& port);
  ~TcpLineSource() override;

  TcpLineSource(const TcpLineSource&) = delete;
  TcpLineSource& operator=(const TcpLineSource&) = delete;

  bool next_line(std::string& line) override;

private:
  int fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

/// Opens a file path, "-" for standard input, or tcp://host:port.
/// Throws IoError when the source cannot be opened or reached.
std::unique_ptr<LineSource> open_source(const std::string& source);

}  // namespace idt

#include "idt/line_source.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iostream>

#include "idt/errors.hpp"

namespace idt {

IstreamLineSource::IstreamLineSource(std::unique_ptr<std::istream> owned)
    : owned_(std::move(owned)), in_(owned_.get()) {}

bool IstreamLineSource::next_line(std::string& line) {
  if (!std::getline(*in_, line)) {
    if (in_->bad()) {
      throw IoError("read error on input stream");
    }
    return false;
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  return true;
}

TcpLineSource::TcpLineSource(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw IoError("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(found);
  if (fd_ < 0) {
    throw IoError("cannot connect to " + host + ":" + port + ": " + last_error);
  }
}

TcpLineSource::~TcpLineSource() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

bool TcpLineSource::next_line(std::string& line) {
  for (;;) {
    if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
      line.assign(buffer_, 0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      return true;
    }
    if (eof_) {
      if (buffer_.empty()) {
        return false;
      }
      line = std::move(buffer_);
      buffer_.clear();
      return true;
    }
    std::array<char, 4096> chunk{};
    const ssize_t got = ::recv(fd_, chunk.data(), chunk.size(), 0);
    if (got < 0) {
      if (errno == EINTR) {
        continue;
      }
      throw IoError(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (got == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk.data(), static_cast<std::size_t>(got));
    }
  }
}

std::unique_ptr<LineSource> open_source(const std::string& source) {
  if (source == "-") {
    return std::make_unique<IstreamLineSource>(std::cin);
  }
  constexpr std::string_view kTcp = "tcp://";
  if (source.rfind(kTcp, 0) == 0) {
    const std::string rest = source.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
      throw IoError("malformed socket address '" + source +
                    "', expected tcp://host:port");
    }
    std::string host = rest.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') {
      host = host.substr(1, host.size() - 2);
    }
    return std::make_unique<TcpLineSource>(host, rest.substr(colon + 1));
  }
  auto file = std::make_unique<std::ifstream>(source);
  if (!*file) {
    throw IoError("cannot open input '" + source + "'");
  }
  return std::make_unique<IstreamLineSource>(std::move(file));
}

}  // namespace idt

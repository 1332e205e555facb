#include "phpguard/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "phpguard/http.hpp"
#include "phpguard/strings.hpp"

namespace phpguard::net {

namespace {

constexpr std::size_t kMaxHead = 64 * 1024;
constexpr std::size_t kMaxBody = 16 * 1024 * 1024;

std::string errno_text(std::string_view what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in make_addr(const std::string& host, unsigned short port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  std::string h = host == "localhost" || host.empty() ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res) throw Error("cannot resolve host " + host);
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
  }
  return addr;
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  Endpoint e;
  auto colon = text.rfind(':');
  std::string_view port = text;
  if (colon != std::string_view::npos) {
    if (colon > 0) e.host = std::string(text.substr(0, colon));
    port = text.substr(colon + 1);
  }
  unsigned value = 0;
  auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || p != port.data() + port.size() || value > 65535) {
    throw Error("bad address '" + std::string(text) + "', expected host:port");
  }
  e.port = static_cast<unsigned short>(value);
  return e;
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

Socket::~Socket() { close(); }

int Socket::release() {
  int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void Socket::send_all(std::string_view data) {
  while (!data.empty()) {
    auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(errno_text("send"));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string Socket::receive_some(std::size_t max) {
  std::string buf(max, '\0');
  for (;;) {
    auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(errno_text("recv"));
    }
    buf.resize(static_cast<std::size_t>(n));
    return buf;
  }
}

void Socket::set_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

std::string Socket::peer_ip() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getpeername(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return "";
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof buf);
  return buf;
}

Socket connect_to(const Endpoint& to, const std::optional<std::string>& bind_ip, std::chrono::milliseconds timeout) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw Error(errno_text("socket"));
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  s.set_timeout(timeout);
  if (bind_ip) {
    auto local = make_addr(*bind_ip, 0);
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&local), sizeof local) != 0) {
      throw Error(errno_text("bind " + *bind_ip));
    }
  }
  auto addr = make_addr(to.host, to.port);
  if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error(errno_text("connect " + to.to_string()));
  }
  return s;
}

Listener::Listener(const Endpoint& at) : host_(at.host.empty() ? "127.0.0.1" : at.host) {
  sock_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!sock_.valid()) throw Error(errno_text("socket"));
  int one = 1;
  ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = make_addr(host_, at.port);
  if (::bind(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error(errno_text("bind " + at.to_string()));
  }
  if (::listen(sock_.fd(), 128) != 0) throw Error(errno_text("listen"));
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Socket Listener::accept() {
  for (;;) {
    int fd = sock_.fd();
    if (fd < 0) return Socket();
    int c = ::accept(fd, nullptr, nullptr);
    if (c >= 0) {
      int one = 1;
      ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(c);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
}

void Listener::close() {
  if (sock_.valid()) ::shutdown(sock_.fd(), SHUT_RDWR);
  sock_.close();
}

std::optional<std::string> read_request(Socket& s, std::string& buffer) {
  std::optional<std::size_t> end;
  while (!(end = http::head_end(buffer))) {
    if (buffer.size() > kMaxHead) throw Error("request head too large");
    auto chunk = s.receive_some();
    if (chunk.empty()) {
      if (buffer.empty()) return std::nullopt;
      // A head without its terminating blank line is still handed on so the
      // caller can reject it.
      std::string partial = std::move(buffer);
      buffer.clear();
      return partial;
    }
    buffer += chunk;
  }
  // A malformed length is left for parse_request to report.
  auto len = http::declared_length(std::string_view(buffer).substr(0, *end)).value_or(0);
  if (len > kMaxBody) throw Error("request body too large");
  while (buffer.size() < *end + len) {
    auto chunk = s.receive_some();
    if (chunk.empty()) break;
    buffer += chunk;
  }
  auto take = std::min(buffer.size(), *end + len);
  std::string message = buffer.substr(0, take);
  buffer.erase(0, take);
  return message;
}

std::string read_response(Socket& s, bool head_request) {
  std::string buf;
  std::optional<std::size_t> end;
  while (!(end = http::head_end(buf))) {
    if (buf.size() > kMaxHead) throw Error("response head too large");
    auto chunk = s.receive_some();
    if (chunk.empty()) {
      if (buf.empty()) throw Error("upstream closed without a response");
      return buf;
    }
    buf += chunk;
  }
  auto head = http::parse_response(std::string_view(buf).substr(0, *end));
  if (head_request || head.status == 204 || head.status == 304 || head.status / 100 == 1) return buf.substr(0, *end);
  auto te = head.header("Transfer-Encoding");
  if (te && iequals(trim(*te), "chunked")) {
    for (;;) {
      auto body = std::string_view(buf).substr(*end);
      if (body.find("\r\n0\r\n\r\n") != std::string_view::npos || body.rfind("0\r\n\r\n", 0) == 0) break;
      auto chunk = s.receive_some();
      if (chunk.empty()) break;
      buf += chunk;
    }
    return buf;
  }
  if (head.header("Content-Length")) {
    auto len = http::content_length(head.headers);
    if (len > kMaxBody) throw Error("response body too large");
    while (buf.size() < *end + len) {
      auto chunk = s.receive_some();
      if (chunk.empty()) break;
      buf += chunk;
    }
    return buf.substr(0, std::min(buf.size(), *end + len));
  }
  for (;;) {
    auto chunk = s.receive_some();
    if (chunk.empty()) break;
    buf += chunk;
  }
  return buf;
}

std::string exchange(const Endpoint& to, std::string_view raw_request, const std::optional<std::string>& bind_ip) {
  auto s = connect_to(to, bind_ip);
  s.send_all(raw_request);
  auto method = raw_request.substr(0, raw_request.find(' '));
  return read_response(s, method == "HEAD");
}

}  // namespace phpguard::net

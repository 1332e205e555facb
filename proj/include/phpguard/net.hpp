#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace phpguard::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  unsigned short port = 0;
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port" (or ":port" / "port" for 127.0.0.1).
Endpoint parse_endpoint(std::string_view text);

/// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release();
  void close();
  void shutdown_write();

  /// Sends every byte; throws phpguard::Error on failure.
  void send_all(std::string_view data);
  /// Reads up to `max` bytes; returns empty on orderly close. Throws on error
  /// or timeout.
  std::string receive_some(std::size_t max = 16384);
  void set_timeout(std::chrono::milliseconds timeout);

  /// Address of the connected peer.
  std::string peer_ip() const;

 private:
  int fd_ = -1;
};

/// Connects to `to`, optionally binding the local end to `bind_ip` first
/// (any 127.0.0.0/8 address works on Linux loopback). Throws on failure.
Socket connect_to(const Endpoint& to, const std::optional<std::string>& bind_ip = std::nullopt,
                  std::chrono::milliseconds timeout = std::chrono::seconds(10));

class Listener {
 public:
  /// Binds and listens; port 0 picks a free port. Throws when the address is busy.
  explicit Listener(const Endpoint& at);
  unsigned short port() const { return port_; }
  const std::string& host() const { return host_; }
  /// Blocks until a connection arrives; returns an invalid socket once closed.
  Socket accept();
  void close();

 private:
  Socket sock_;
  std::string host_;
  unsigned short port_ = 0;
};

/// Reads one HTTP request (head plus Content-Length body) from `s`, using and
/// refilling `buffer` (bytes past the message stay in it). Returns nullopt
/// when the peer closes before sending anything. Throws phpguard::Error on a
/// truncated or oversized message.
std::optional<std::string> read_request(Socket& s, std::string& buffer);

/// Reads one HTTP response: by Content-Length, chunked encoding, or until the
/// peer closes. `head_request` suppresses the body.
std::string read_response(Socket& s, bool head_request = false);

/// One request on a fresh connection; returns the raw response bytes.
std::string exchange(const Endpoint& to, std::string_view raw_request,
                     const std::optional<std::string>& bind_ip = std::nullopt);

}  // namespace phpguard::net

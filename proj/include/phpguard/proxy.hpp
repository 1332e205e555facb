#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <vector>
#include <thread>

#include "phpguard/enforcer.hpp"
#include "phpguard/net.hpp"

namespace phpguard {

/// Reverse proxy in front of one upstream: one thread per client
/// connection, keep-alive towards the client, a fresh upstream connection
/// per forwarded request.
class ProxyServer {
 public:
  ProxyServer(Enforcer& enforcer, const net::Endpoint& listen, const net::Endpoint& upstream);
  ~ProxyServer();
  ProxyServer(const ProxyServer&) = delete;
  ProxyServer& operator=(const ProxyServer&) = delete;

  unsigned short port() const { return listener_.port(); }
  net::Endpoint endpoint() const { return {listener_.host(), listener_.port()}; }
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

 private:
  void accept_loop();
  void serve(net::Socket client, std::uint64_t id);

  Enforcer& enforcer_;
  net::Endpoint upstream_;
  net::Listener listener_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::map<std::uint64_t, std::thread> workers_;
  std::vector<std::uint64_t> finished_;
  std::uint64_t next_worker_ = 0;
  std::set<int> open_fds_;
};

/// Upstream function for `to`, one connection per call.
Upstream tcp_upstream(const net::Endpoint& to);

}  // namespace phpguard

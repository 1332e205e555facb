#include "phpguard/proxy.hpp"

#include <sys/socket.h>

#include "phpguard/http.hpp"
#include "phpguard/strings.hpp"

namespace phpguard {

Upstream tcp_upstream(const net::Endpoint& to) {
  return [to](const std::string& raw) -> std::optional<std::string> {
    try {
      return net::exchange(to, raw);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
}

ProxyServer::ProxyServer(Enforcer& enforcer, const net::Endpoint& listen, const net::Endpoint& upstream)
    : enforcer_(enforcer), upstream_(upstream), listener_(listen) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

ProxyServer::~ProxyServer() { stop(); }

void ProxyServer::accept_loop() {
  while (!stopping_) {
    auto client = listener_.accept();
    if (!client.valid()) break;
    std::lock_guard lock(mu_);
    if (stopping_) break;
    for (auto id : finished_) {
      workers_.at(id).join();
      workers_.erase(id);
    }
    finished_.clear();
    const auto id = next_worker_++;
    open_fds_.insert(client.fd());
    workers_.emplace(id, std::thread([this, id, c = std::move(client)]() mutable { serve(std::move(c), id); }));
  }
}

namespace {

bool wants_close(std::string_view raw_message) {
  auto end = http::head_end(raw_message);
  auto head = raw_message.substr(0, end.value_or(raw_message.size()));
  auto first = head.substr(0, head.find("\r\n"));
  bool http10 = first.find("HTTP/1.0") != std::string_view::npos;
  for (auto line : split_lines(head)) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos || !iequals(trim(line.substr(0, colon)), "Connection")) continue;
    auto value = trim(line.substr(colon + 1));
    if (iequals(value, "close")) return true;
    if (iequals(value, "keep-alive")) http10 = false;
  }
  return http10;
}

}  // namespace

void ProxyServer::serve(net::Socket client, std::uint64_t id) {
  const int fd = client.fd();
  try {
    client.set_timeout(std::chrono::seconds(30));
    const auto ip = client.peer_ip();
    const auto upstream = tcp_upstream(upstream_);
    std::string buffer;
    while (!stopping_) {
      auto raw = net::read_request(client, buffer);
      if (!raw) break;
      auto response = enforcer_.handle(*raw, ip, upstream);
      client.send_all(response);
      if (wants_close(*raw) || wants_close(response) || !http::head_end(*raw)) break;
    }
  } catch (const Error&) {
    // Client went away or timed out; nothing to report.
  }
  std::lock_guard lock(mu_);
  open_fds_.erase(fd);
  finished_.push_back(id);
}

void ProxyServer::stop() {
  if (stopping_.exchange(true)) {
    if (acceptor_.joinable()) acceptor_.join();
    return;
  }
  listener_.close();
  if (acceptor_.joinable()) acceptor_.join();
  std::map<std::uint64_t, std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& [id, t] : workers) t.join();
}

void ProxyServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

}  // namespace phpguard

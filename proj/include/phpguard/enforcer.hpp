#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "phpguard/report.hpp"
#include "phpguard/verifier.hpp"

namespace phpguard {

struct ClientIdentity {
  std::string ip;
  std::string user_agent;
  auto operator<=>(const ClientIdentity&) const = default;
  std::string text() const { return ip + "|" + user_agent; }
};

struct ClientState {
  ClientIdentity identity;
  std::optional<std::string> session_cookie;
  std::string role = "0";
  std::optional<std::string> last_page;
  std::chrono::system_clock::time_point first_seen{};
  std::chrono::system_clock::time_point last_seen{};
};

/// username -> role, from lines "username,role". Blank lines and '#'
/// comments are skipped. Throws phpguard::Error naming the line.
using Bindings = std::map<std::string, std::string>;
Bindings parse_bindings(std::string_view text);
Bindings load_bindings(const std::string& path);

/// Role after a login attempt by `username`; nullopt when the user is not
/// bound (the caller keeps role 0 and reports it).
std::optional<std::string> resolve_role(const std::optional<std::string>& username, const Bindings& bindings);

struct DeviationRecord {
  Timestamp time{};
  ClientIdentity identity;
  std::string request_id;
  Level level = Level::One;
  Reason reason = Reason::Ok;
  std::string detail;
  bool operator==(const DeviationRecord&) const = default;
};

/// One tab-separated line: timestamp, ip|user-agent, request id, level,
/// reason, detail. Tabs and line breaks inside fields become spaces.
std::string format_record(const DeviationRecord& r);
DeviationRecord parse_record(std::string_view line);

/// Append-only block log, kept in memory and optionally mirrored to a file.
class DeviationLog {
 public:
  explicit DeviationLog(std::optional<std::string> path = std::nullopt);
  void append(const DeviationRecord& r);
  std::size_t size() const;
  std::vector<DeviationRecord> records() const;

 private:
  mutable std::mutex mu_;
  std::optional<std::string> path_;
  std::vector<DeviationRecord> records_;
};

struct EnforcerOptions {
  std::string session_cookie = "PHPSESSID";
  std::chrono::seconds idle_timeout{1800};
  std::string login_page = "Login.php";
  std::string user_field = "username";
  std::string root_page = "index.php";
  Clock clock = std::chrono::system_clock::now;
};

/// Sends raw request bytes upstream; nullopt when the upstream cannot be reached.
using Upstream = std::function<std::optional<std::string>(const std::string& raw_request)>;

/// Per-request enforcement: identity pinning, both verifier levels, client
/// state and role binding. Thread-safe; upstream calls run unlocked.
class Enforcer {
 public:
  Enforcer(Verifier verifier, Bindings bindings, EnforcerOptions options, DeviationLog& log);

  /// Returns the bytes to send back to the client: the upstream response
  /// verbatim, a 403 block page carrying an X-Guard-Block header, or a 502.
  std::string handle(const std::string& raw_request, const std::string& client_ip, const Upstream& upstream);

  /// Verdict for a request without forwarding it; updates state the same way.
  Verdict check(const std::string& raw_request, const std::string& client_ip);

  std::size_t blocked() const;
  std::size_t forwarded() const;
  /// Logins by users missing from the bindings, and similar non-deviations.
  std::vector<std::string> notices() const;
  std::optional<ClientState> state_of(const ClientIdentity& who, const std::optional<std::string>& cookie) const;

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  struct Decision {
    Verdict verdict;
    std::string request_id = "-";
    ClientIdentity who;
    std::optional<std::string> cookie;
    std::optional<std::string> login_user;
  };

  Decision decide(const std::string& raw_request, const std::string& client_ip);
  void after_response(const Decision& d, const std::string& raw_response);
  void expire(std::chrono::system_clock::time_point now);
  static Key key_of(const ClientIdentity& who, const std::optional<std::string>& cookie);

  const Verifier verifier_;
  const Bindings bindings_;
  const EnforcerOptions options_;
  DeviationLog& log_;

  mutable std::mutex mu_;
  std::map<Key, ClientState> states_;
  std::map<std::string, ClientIdentity> pins_;
  std::vector<std::string> notices_;
  std::size_t blocked_ = 0;
  std::size_t forwarded_ = 0;
  std::chrono::system_clock::time_point last_sweep_{};
};

std::string block_response(Reason reason);
std::string bad_gateway_response();

}  // namespace phpguard

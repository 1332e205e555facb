#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "phpguard/net.hpp"

namespace phpguard {

struct DemoRoute {
  std::string page;
  bool requires_session = false;
  std::vector<std::string> links;   // in the order they appear on the page
  std::set<std::string> roles;      // roles allowed when requires_session
};

struct DemoUser {
  std::string password;
  std::string role;
};

/// Two-role sample application: five public pages sharing a navigation bar,
/// a login form, and the manager/employer page trees.
struct DemoSite {
  std::vector<DemoRoute> routes;
  std::map<std::string, DemoUser> users;
  std::string login_page = "Login.php";
  std::string logout_page = "Logout.php";
  std::string landing_page = "About.php";
  std::string home_page = "Home.php";
  std::string session_cookie = "PHPSESSID";

  const DemoRoute* find(const std::string& page) const;
};

const DemoSite& default_demo_site();

/// Serves a DemoSite over HTTP on its own threads. Session cookies come from
/// a generator seeded with `seed`, so two apps started with the same seed
/// issue the same cookie sequence.
class DemoApp {
 public:
  DemoApp(const DemoSite& site, const net::Endpoint& listen, std::uint64_t seed = 1);
  ~DemoApp();
  DemoApp(const DemoApp&) = delete;
  DemoApp& operator=(const DemoApp&) = delete;

  unsigned short port() const;
  net::Endpoint endpoint() const;
  std::string base_url() const;
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace phpguard

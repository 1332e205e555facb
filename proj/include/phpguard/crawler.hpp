#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "phpguard/profile_store.hpp"

namespace phpguard {

struct CrawlOptions {
  std::string base_url;        // start page for role 0; site location for login roles
  std::string role = "0";      // "0" crawls without logging in
  std::optional<std::string> username;
  std::optional<std::string> password;
  std::string session_cookie = "PHPSESSID";
  std::string login_page = "Login.php";
  std::string logout_page = "Logout.php";
  std::string user_field = "username";
  std::string pass_field = "password";
  std::string user_agent = "phpguard-crawler/1.0";
  std::optional<std::string> bind_ip;
  std::size_t max_requests = 5000;
};

struct CrawlResult {
  std::vector<std::string> pages;   // page paths in first-visit order
  std::vector<std::string> assets;  // asset paths in first-fetch order
  std::size_t requests = 0;         // recorded requests
  std::size_t sessions = 0;         // logins performed
};

/// Spiders the site through href links and records every request in `store`.
///
/// Every link edge (page -> linked page) is walked at least once as a
/// consecutive pair of requests, so the recorded walks describe real
/// navigation. Pending edges are taken depth-first in link order. When the
/// crawler is not on an edge's source page it follows known links there;
/// if none lead there it logs in again (login roles) and walks from the
/// entry page. Requests without a session cookie are recorded under role "0",
/// the rest under `options.role`. Logout requests are sent but not recorded.
///
/// Throws phpguard::Error when the site is unreachable, the login fails,
/// or `max_requests` is exceeded.
CrawlResult crawl(const CrawlOptions& options, ProfileStore& store);

/// href targets of an HTML body, resolved against `page_path`, restricted to
/// the same host; query and fragment are dropped. Order of first appearance.
std::vector<std::string> extract_links(const std::string& body, const std::string& page_path,
                                       const std::string& host, unsigned short port);

}  // namespace phpguard

#include "phpguard/crawler.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <regex>
#include <set>

#include "phpguard/http.hpp"
#include "phpguard/net.hpp"
#include "phpguard/strings.hpp"

namespace phpguard {

std::vector<std::string> extract_links(const std::string& body, const std::string& page_path, const std::string& host,
                                       unsigned short port) {
  static const std::regex href_re(R"re(href\s*=\s*(?:"([^"]*)"|'([^']*)'))re", std::regex::icase);
  std::vector<std::string> out;
  auto dir = page_path.substr(0, page_path.rfind('/') + 1);
  for (auto it = std::sregex_iterator(body.begin(), body.end(), href_re); it != std::sregex_iterator(); ++it) {
    std::string link = (*it)[1].matched ? (*it)[1].str() : (*it)[2].str();
    link = std::string(trim(link));
    link = link.substr(0, link.find_first_of("?#"));
    if (link.empty() || starts_with_icase(link, "mailto:") || starts_with_icase(link, "javascript:")) continue;
    if (starts_with_icase(link, "http://") || starts_with_icase(link, "https://")) {
      if (!starts_with_icase(link, "http://")) continue;
      try {
        auto u = http::parse_url(link);
        if (u.port != port || (u.host != host && !(u.host == "localhost" && host == "127.0.0.1"))) continue;
        link = u.target;
      } catch (const Error&) {
        continue;
      }
    } else if (link.front() != '/') {
      link = dir + link;
    }
    auto normal = std::filesystem::path(link).lexically_normal().generic_string();
    if (normal.empty() || normal.front() != '/') continue;
    if (std::find(out.begin(), out.end(), normal) == out.end()) out.push_back(normal);
  }
  return out;
}

namespace {

std::string basename_of(const std::string& path) { return path.substr(path.rfind('/') + 1); }

class Crawler {
 public:
  Crawler(const CrawlOptions& o, ProfileStore& store) : o_(o), store_(store), url_(http::parse_url(o.base_url)) {
    if (!valid_role_name(o_.role)) throw Error("invalid role name '" + o_.role + "'");
    if (o_.role != "0" && (!o_.username || !o_.password)) {
      throw Error("role " + o_.role + " needs --login-user and --login-pass");
    }
    endpoint_ = {url_.host, url_.port};
    auto target = url_.target.substr(0, url_.target.find_first_of("?#"));
    dir_ = target.substr(0, target.rfind('/') + 1);
    start_ = target.back() == '/' ? target : target;
  }

  CrawlResult run() {
    start_session();
    while (!pending_.empty()) {
      auto [from, to] = pending_.back();
      pending_.pop_back();
      if (walked_.count({from, to})) continue;
      if (!navigate_to(from)) continue;
      fetch_page(to, from);
    }
    if (o_.role != "0") logout();
    return result_;
  }

 private:
  std::string authenticated_role() const { return o_.role; }

  std::string request_bytes(const std::string& method, const std::string& path, const std::string& body = {}) {
    http::Headers h = {{"Host", url_.host + ":" + std::to_string(url_.port)},
                       {"User-Agent", o_.user_agent},
                       {"Accept", "text/html,*/*"}};
    if (!jar_.empty()) {
      std::string cookie;
      for (const auto& [k, v] : jar_) cookie += (cookie.empty() ? "" : "; ") + k + "=" + v;
      h.emplace_back("Cookie", cookie);
    }
    if (method == "POST") h.emplace_back("Content-Type", "application/x-www-form-urlencoded");
    h.emplace_back("Connection", "close");
    return http::build_request(method, path, h, body);
  }

  http::Response send(const std::string& raw, bool record) {
    if (record) {
      if (result_.requests >= o_.max_requests) throw Error("crawl exceeded " + std::to_string(o_.max_requests) + " requests");
      auto req = http::parse_request(raw);
      auto flag = http::extract_session_flag(req.headers, o_.session_cookie);
      store_.record_exchange(raw, flag ? o_.role : "0");
      ++result_.requests;
    }
    std::string response;
    try {
      response = net::exchange(endpoint_, raw, o_.bind_ip);
    } catch (const Error& e) {
      throw Error("cannot reach " + o_.base_url + ": " + e.what());
    }
    auto r = http::parse_response(response);
    for (const auto& sc : r.headers) {
      if (!iequals(sc.first, "Set-Cookie")) continue;
      auto c = http::parse_set_cookie(sc.second);
      if (!c) continue;
      if (c->cleared) {
        jar_.erase(c->name);
      } else {
        jar_[c->name] = c->value;
      }
    }
    return r;
  }

  // Fetches a page as the next step of the current walk.
  void fetch_page(const std::string& path, const std::optional<std::string>& from) {
    auto r = send(request_bytes("GET", path), true);
    if (from) walked_.insert({*from, path});
    const bool first = !visited_.count(path);
    visited_.insert(path);
    position_ = r.status / 100 == 2 ? std::optional<std::string>(path) : std::nullopt;
    if (!first || r.status / 100 != 2) return;
    result_.pages.push_back(path);
    std::vector<std::string> pages;
    for (const auto& link : extract_links(r.body, path, url_.host, url_.port)) {
      if (iequals(basename_of(link), o_.logout_page)) continue;
      if (is_asset(link)) {
        if (!assets_.count(link)) {
          assets_.insert(link);
          result_.assets.push_back(link);
          send(request_bytes("GET", link), true);
        }
        continue;
      }
      pages.push_back(link);
    }
    links_[path] = pages;
    for (auto it = pages.rbegin(); it != pages.rend(); ++it) pending_.emplace_back(path, *it);
  }

  // Shortest path over links of visited pages from the current position.
  std::optional<std::vector<std::string>> path_from(const std::string& start, const std::string& goal) const {
    std::map<std::string, std::string> parent;
    std::deque<std::string> queue{start};
    parent[start] = start;
    while (!queue.empty()) {
      auto cur = queue.front();
      queue.pop_front();
      if (cur == goal) {
        std::vector<std::string> path;
        for (auto p = goal; p != start; p = parent.at(p)) path.push_back(p);
        std::reverse(path.begin(), path.end());
        return path;
      }
      auto it = links_.find(cur);
      if (it == links_.end()) continue;
      for (const auto& n : it->second) {
        if (!visited_.count(n) || parent.count(n)) continue;
        parent[n] = cur;
        queue.push_back(n);
      }
    }
    return std::nullopt;
  }

  bool walk(const std::vector<std::string>& steps) {
    for (const auto& step : steps) {
      auto from = position_;
      fetch_page(step, from);
      if (position_ != step) return false;
    }
    return true;
  }

  bool navigate_to(const std::string& page) {
    if (position_ == page) return true;
    if (position_) {
      if (auto path = path_from(*position_, page); path && walk(*path)) return true;
    }
    start_session();
    if (position_ == page) return true;
    if (!position_) return false;
    auto path = path_from(*position_, page);
    return path && walk(*path);
  }

  void logout() {
    if (jar_.count(o_.session_cookie)) send(request_bytes("GET", dir_ + o_.logout_page), false);
    jar_.erase(o_.session_cookie);
  }

  void start_session() {
    store_.end_walk("0");
    store_.end_walk(o_.role);
    if (o_.role == "0") {
      fetch_page(start_, std::nullopt);
      if (!position_) throw Error("start page " + o_.base_url + " did not return a page");
      entry_ = start_;
      return;
    }
    logout();
    const auto login = dir_ + o_.login_page;
    send(request_bytes("GET", login), true);
    auto body = o_.user_field + "=" + http::url_encode(*o_.username) + "&" + o_.pass_field + "=" +
                http::url_encode(*o_.password);
    auto r = send(request_bytes("POST", login, body), true);
    if (!jar_.count(o_.session_cookie)) throw Error("login failed for role " + o_.role);
    ++result_.sessions;
    std::string entry = start_;
    if (auto loc = r.header("Location"); loc && r.status / 100 == 3) {
      auto links = extract_links("href=\"" + *loc + "\"", login, url_.host, url_.port);
      if (!links.empty()) entry = links.front();
    }
    store_.end_walk("0");
    fetch_page(entry, std::nullopt);
    if (!position_) throw Error("entry page " + entry + " failed after login for role " + o_.role);
    entry_ = entry;
  }

  const CrawlOptions& o_;
  ProfileStore& store_;
  http::Url url_;
  net::Endpoint endpoint_;
  std::string dir_;
  std::string start_;
  std::string entry_;
  std::map<std::string, std::string> jar_;
  std::optional<std::string> position_;
  std::set<std::string> visited_;
  std::set<std::string> assets_;
  std::map<std::string, std::vector<std::string>> links_;
  std::set<std::pair<std::string, std::string>> walked_;
  std::vector<std::pair<std::string, std::string>> pending_;
  CrawlResult result_;
};

}  // namespace

CrawlResult crawl(const CrawlOptions& options, ProfileStore& store) { return Crawler(options, store).run(); }

}  // namespace phpguard

#include "phpguard/demo_app.hpp"

#include <httplib.h>

#include <cstdio>
#include <mutex>
#include <random>
#include <thread>

#include "phpguard/http.hpp"
#include "phpguard/strings.hpp"

namespace phpguard {

const DemoRoute* DemoSite::find(const std::string& page) const {
  for (const auto& r : routes) {
    if (r.page == page) return &r;
  }
  return nullptr;
}

const DemoSite& default_demo_site() {
  static const DemoSite kSite = [] {
    DemoSite s;
    const std::vector<std::string> nav = {"About.php", "Help.php", "Login.php", "Services.php", "Products.php"};
    for (const auto& page : nav) {
      DemoRoute r{page, false, {}, {}};
      for (const auto& other : nav) {
        if (other != page) r.links.push_back(other);
      }
      s.routes.push_back(r);
    }
    const std::set<std::string> both = {"manager", "employer"};
    const std::set<std::string> mgr = {"manager"};
    const std::set<std::string> emp = {"employer"};
    s.routes.push_back({"Home.php", true, {"Assign_works.php", "User_mgmt.php", "Work_report.php", "View.php"}, both});
    s.routes.push_back({"Assign_works.php", true, {}, mgr});
    s.routes.push_back({"User_mgmt.php", true, {"Update_users.php", "Update_roles.php"}, mgr});
    s.routes.push_back({"Update_users.php", true, {}, mgr});
    s.routes.push_back({"Update_roles.php", true, {}, mgr});
    s.routes.push_back({"Work_report.php", true, {}, emp});
    s.routes.push_back({"View.php", true, {"Viewusers.php", "Viewroles.php"}, both});
    s.routes.push_back({"Viewusers.php", true, {}, both});
    s.routes.push_back({"Viewroles.php", true, {}, both});
    s.users = {{"manager1", {"manager-pass", "manager"}}, {"employer1", {"employer-pass", "employer"}}};
    return s;
  }();
  return kSite;
}

struct DemoApp::Impl {
  const DemoSite& site;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string host;
  std::mutex mu;
  std::mt19937_64 rng;
  std::map<std::string, std::string> sessions;  // cookie -> username

  Impl(const DemoSite& s, std::uint64_t seed) : site(s), rng(seed) {}

  std::string new_cookie() {
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
  }

  std::optional<std::string> user_of(const httplib::Request& req) {
    if (!req.has_header("Cookie")) return std::nullopt;
    auto cookies = http::parse_cookie_header(req.get_header_value("Cookie"));
    auto it = cookies.find(site.session_cookie);
    if (it == cookies.end()) return std::nullopt;
    std::lock_guard lock(mu);
    auto s = sessions.find(it->second);
    if (s == sessions.end()) return std::nullopt;
    return s->second;
  }

  std::string page_html(const std::string& title, const std::vector<std::string>& links, const std::string& extra) {
    std::string body = "<html><head><title>" + title + "</title></head><body>\n<h1>" + title + "</h1>\n<ul>\n";
    for (const auto& l : links) body += "<li><a href=\"" + l + "\">" + l.substr(0, l.rfind('.')) + "</a></li>\n";
    return body + "</ul>\n" + extra + "</body></html>\n";
  }

  std::string login_form(const std::vector<std::string>& links, const std::string& message) {
    std::string form = "<form method=\"post\" action=\"" + site.login_page +
                       "\">\n<input name=\"username\"><input name=\"password\" type=\"password\">\n"
                       "<input type=\"submit\" value=\"Login\">\n</form>\n";
    if (!message.empty()) form = "<p>" + message + "</p>\n" + form;
    return page_html("Login", links, form);
  }

  void handle(const DemoRoute& route, const httplib::Request& req, httplib::Response& res) {
    if (!route.requires_session) {
      if (route.page == site.login_page && req.method == "POST") {
        auto form = http::parse_form(req.body);
        auto user = site.users.find(form["username"]);
        if (user == site.users.end() || user->second.password != form["password"]) {
          res.set_content(login_form(route.links, "Invalid credentials."), "text/html");
          return;
        }
        std::string cookie;
        {
          std::lock_guard lock(mu);
          cookie = new_cookie();
          sessions[cookie] = user->first;
        }
        res.status = 302;
        res.set_header("Location", site.home_page);
        res.set_header("Set-Cookie", site.session_cookie + "=" + cookie + "; Path=/; HttpOnly");
        return;
      }
      if (route.page == site.login_page) {
        res.set_content(login_form(route.links, ""), "text/html");
      } else {
        res.set_content(page_html(route.page.substr(0, route.page.rfind('.')), route.links, ""), "text/html");
      }
      return;
    }
    auto user = user_of(req);
    if (!user) {
      res.status = 302;
      res.set_header("Location", site.login_page);
      return;
    }
    const auto& role = site.users.at(*user).role;
    if (!route.roles.count(role)) {
      res.status = 403;
      res.set_content("<html><body><h1>Forbidden</h1></body></html>\n", "text/html");
      return;
    }
    std::vector<std::string> links;
    for (const auto& l : route.links) {
      const auto* target = site.find(l);
      if (target && (!target->requires_session || target->roles.count(role))) links.push_back(l);
    }
    res.set_content(page_html(route.page.substr(0, route.page.rfind('.')), links, "<p>Signed in as " + *user + ".</p>\n"),
                    "text/html");
  }

  void logout(const httplib::Request& req, httplib::Response& res) {
    if (req.has_header("Cookie")) {
      auto cookies = http::parse_cookie_header(req.get_header_value("Cookie"));
      if (auto it = cookies.find(site.session_cookie); it != cookies.end()) {
        std::lock_guard lock(mu);
        sessions.erase(it->second);
      }
    }
    res.status = 302;
    res.set_header("Location", site.landing_page);
    res.set_header("Set-Cookie", site.session_cookie + "=deleted; Path=/; Max-Age=0");
  }
};

DemoApp::DemoApp(const DemoSite& site, const net::Endpoint& listen, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(site, seed)) {
  auto& s = impl_->server;
  for (const auto& route : site.routes) {
    auto handler = [this, &route](const httplib::Request& req, httplib::Response& res) { impl_->handle(route, req, res); };
    s.Get("/" + route.page, handler);
    s.Post("/" + route.page, handler);
  }
  s.Get("/" + site.logout_page,
        [this](const httplib::Request& req, httplib::Response& res) { impl_->logout(req, res); });
  s.Get("/", [&site](const httplib::Request&, httplib::Response& res) {
    res.status = 302;
    res.set_header("Location", site.landing_page);
  });
  impl_->host = listen.host;
  if (listen.port == 0) {
    impl_->port = s.bind_to_any_port(listen.host);
  } else {
    impl_->port = s.bind_to_port(listen.host, listen.port) ? listen.port : -1;
  }
  if (impl_->port <= 0) throw Error("cannot listen on " + listen.to_string());
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  s.wait_until_ready();
}

DemoApp::~DemoApp() { stop(); }

unsigned short DemoApp::port() const { return static_cast<unsigned short>(impl_->port); }

net::Endpoint DemoApp::endpoint() const { return {impl_->host, port()}; }

std::string DemoApp::base_url() const { return "http://" + endpoint().to_string() + "/"; }

void DemoApp::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void DemoApp::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace phpguard

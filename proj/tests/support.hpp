#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "phpguard/crawler.hpp"
#include "phpguard/demo_app.hpp"
#include "phpguard/model.hpp"
#include "phpguard/strings.hpp"
#include "phpguard/verifier.hpp"

namespace testsupport {

inline std::string fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("phpguard-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Expected training triples, page-name case as in the reference listing.
inline std::set<phpguard::Triple> golden_triples() {
  return {
      {"GET_About.php", 0, "0"},          {"GET_Help.php", 0, "0"},           {"GET_Login.php", 0, "0"},
      {"POST_Login.php", 0, "0"},         {"GET_Services.php", 0, "0"},       {"GET_Products.php", 0, "0"},
      {"GET_home.php", 1, "manager"},     {"GET_Assign_works.php", 1, "manager"},
      {"GET_User_mgmt.php", 1, "manager"}, {"GET_Update_users.php", 1, "manager"},
      {"GET_Update_roles.php", 1, "manager"}, {"GET_View.php", 1, "manager"},
      {"GET_Viewusers.php", 1, "manager"}, {"GET_Viewroles.php", 1, "manager"},
      {"GET_Home.php", 1, "employer"},    {"GET_work_report.php", 1, "employer"},
      {"GET_View.php", 1, "employer"},    {"GET_Viewusers.php", 1, "employer"},
      {"GET_Viewroles.php", 1, "employer"},
  };
}

inline std::set<phpguard::Triple> folded(const std::set<phpguard::Triple>& in) {
  std::set<phpguard::Triple> out;
  for (const auto& [id, flag, role] : in) out.insert({phpguard::to_lower(id), flag, role});
  return out;
}

using EdgeSet = std::set<std::pair<std::string, std::string>>;

inline EdgeSet golden_manager_edges() {
  return {{"Home.php", "Assign_works.php"},   {"Home.php", "User_mgmt.php"},       {"Home.php", "View.php"},
          {"User_mgmt.php", "Update_users.php"}, {"User_mgmt.php", "Update_roles.php"},
          {"View.php", "Viewusers.php"},       {"View.php", "Viewroles.php"}};
}

inline EdgeSet golden_employer_edges() {
  return {{"Home.php", "Work_report.php"}, {"Home.php", "View.php"}, {"View.php", "Viewusers.php"},
          {"View.php", "Viewroles.php"}};
}

inline std::string landing_url(const phpguard::DemoApp& app) { return app.base_url() + "About.php"; }

// Runs the three training crawls (anonymous, manager, employer) into one store.
inline void train_demo(const phpguard::DemoApp& app, phpguard::ProfileStore& store) {
  phpguard::CrawlOptions anon;
  anon.base_url = landing_url(app);
  phpguard::crawl(anon, store);
  for (auto [role, user, pass] : {std::tuple{"manager", "manager1", "manager-pass"},
                                  std::tuple{"employer", "employer1", "employer-pass"}}) {
    phpguard::CrawlOptions o;
    o.base_url = app.base_url();
    o.role = role;
    o.username = user;
    o.password = pass;
    phpguard::crawl(o, store);
  }
}

}  // namespace testsupport

namespace testsupport {

// The expected models, with the demo app's page spelling.
inline phpguard::Models golden_models() {
  phpguard::Models m;
  std::size_t n = 0;
  auto canon = [](std::string id) {
    if (id == "GET_home.php") return std::string("GET_Home.php");
    if (id == "GET_work_report.php") return std::string("GET_Work_report.php");
    return id;
  };
  for (const auto& [id, flag, role] : golden_triples()) {
    m.set1.rows.push_back({n, n + 1, canon(id), flag, role});
    ++n;
  }
  const std::vector<std::string> nav = {"About.php", "Help.php", "Login.php", "Services.php", "Products.php"};
  auto& anon = m.set2["0"];
  anon.add_entry("About.php");
  anon.add_entry("Login.php");
  for (const auto& a : nav) {
    for (const auto& b : nav) {
      if (a != b) anon.add_edge(a, b);
    }
  }
  anon.add_edge("Login.php", "Login.php");
  for (auto [role, edges] : {std::pair{std::string("manager"), golden_manager_edges()},
                             std::pair{std::string("employer"), golden_employer_edges()}}) {
    auto& g = m.set2[role];
    g.add_entry("Home.php");
    for (const auto& [a, b] : edges) g.add_edge(a, b);
  }
  return m;
}

}  // namespace testsupport

namespace testsupport {

// Naive membership oracle over the raw rows and edge lists.
inline phpguard::Reason oracle(const phpguard::Models& m, const phpguard::RequestFacts& f) {
  bool exact = false, any_id = false, id_flag = false;
  for (const auto& row : m.set1.rows) {
    if (row.reqresid != f.reqresid) continue;
    any_id = true;
    if (row.session_flag == f.session_flag) {
      id_flag = true;
      if (row.role == f.role) exact = true;
    }
  }
  if (!exact) {
    if (!any_id) return phpguard::Reason::UnknownRequest;
    if (!id_flag) return phpguard::Reason::SessionFlagMismatch;
    return phpguard::Reason::RoleMismatch;
  }
  for (const char* ext : {".js", ".css", ".png"}) {
    if (f.page.size() >= std::string(ext).size() && f.page.compare(f.page.size() - std::string(ext).size(), std::string::npos, ext) == 0) {
      return phpguard::Reason::Ok;
    }
  }
  bool has_graph = false;
  for (const auto& [role, g] : m.set2) has_graph = has_graph || role == f.role;
  if (!has_graph) return phpguard::Reason::UnknownPageForRole;
  const auto& g = m.set2.at(f.role);
  bool node = false;
  for (const auto& n : g.nodes) node = node || n == f.page;
  if (!node) return phpguard::Reason::UnknownPageForRole;
  if (!f.last_page) {
    for (const auto& e : g.entries) {
      if (e == f.page) return phpguard::Reason::Ok;
    }
    return phpguard::Reason::SequenceViolation;
  }
  for (const auto& [from, tos] : g.next) {
    for (const auto& to : tos) {
      if (from == *f.last_page && to == f.page) return phpguard::Reason::Ok;
    }
  }
  return phpguard::Reason::SequenceViolation;
}


inline const std::vector<std::string>& toy_pages() {
  static const std::vector<std::string> kPages = {"p0.php", "p1.php", "p2.php", "p3.php", "p4.php",
                                                  "p5.php", "p6.php", "p7.php", "s.css",  "x.js"};
  return kPages;
}

// Random model over ten pages (two of them assets) and roles r1, r2. Some
// seeds leave r2 without a graph.
inline phpguard::Models toy_models(unsigned seed) {
  std::mt19937 rng(seed);
  const auto& pages = toy_pages();
  phpguard::Models m;
  std::size_t n = 0;
  for (const auto& p : pages) {
    for (const char* method : {"GET", "POST"}) {
      for (int flag : {0, 1}) {
        for (const char* r : {"r1", "r2"}) {
          if (rng() % 4 == 0) {
            m.set1.rows.push_back({n, n + 1, std::string(method) + "_" + p, flag, r});
            ++n;
          }
        }
      }
    }
  }
  for (const char* r : {"r1", "r2"}) {
    if (seed % 7 == 3 && std::string(r) == "r2") continue;
    auto& g = m.set2[r];
    for (std::size_t i = 0; i < 8; ++i) {
      if (rng() % 3 == 0) g.add_node(pages[i]);
      if (rng() % 5 == 0) g.add_entry(pages[i]);
    }
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        if (rng() % 6 == 0) g.add_edge(pages[i], pages[j]);
      }
    }
  }
  return m;
}

// Every (request, flag, role, last page) combination over the toy pages.
inline std::vector<phpguard::RequestFacts> all_facts() {
  const auto& pages = toy_pages();
  std::vector<std::optional<std::string>> lasts = {std::nullopt};
  for (std::size_t i = 0; i < 8; ++i) lasts.emplace_back(pages[i]);
  std::vector<phpguard::RequestFacts> out;
  for (const auto& p : pages) {
    for (const char* method : {"GET", "POST"}) {
      for (int flag : {0, 1}) {
        for (const char* r : {"r1", "r2", "0"}) {
          for (const auto& last : lasts) out.push_back({std::string(method) + "_" + p, p, flag, r, last});
        }
      }
    }
  }
  return out;
}

}  // namespace testsupport

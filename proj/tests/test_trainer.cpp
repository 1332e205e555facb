#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "phpguard/http.hpp"
#include "phpguard/profile_store.hpp"
#include "phpguard/xml.hpp"
#include "support.hpp"

using namespace phpguard;
namespace fs = std::filesystem;

namespace {

// Independent path splitter: last '/'-separated segment of the part before '?' or '#'.
std::string last_segment(const std::string& target) {
  std::string path;
  for (char c : target) {
    if (c == '?' || c == '#') break;
    path += c;
  }
  std::vector<std::string> segs{""};
  for (char c : path) {
    if (c == '/') {
      segs.emplace_back();
    } else {
      segs.back() += c;
    }
  }
  return segs.back();
}

// Independent cookie grammar check: split on ';', trim spaces, compare name.
int cookie_oracle(const std::vector<std::string>& cookie_headers, const std::string& name) {
  for (const auto& h : cookie_headers) {
    std::size_t start = 0;
    while (start <= h.size()) {
      auto end = h.find(';', start);
      if (end == std::string::npos) end = h.size();
      auto pair = h.substr(start, end - start);
      while (!pair.empty() && pair.front() == ' ') pair.erase(pair.begin());
      while (!pair.empty() && pair.back() == ' ') pair.pop_back();
      auto eq = pair.find('=');
      if (eq != std::string::npos && pair.substr(0, eq) == name && eq + 1 < pair.size()) return 1;
      start = end + 1;
    }
  }
  return 0;
}

std::string get(const std::string& path, const std::string& cookie = "") {
  http::Headers h = {{"Host", "app"}};
  if (!cookie.empty()) h.emplace_back("Cookie", cookie);
  return http::build_request("GET", path, h);
}

std::string read(const fs::path& p) { return phpguard::read_file(p.string()); }

std::map<std::string, std::string> dir_snapshot(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read(e.path());
  return out;
}

}  // namespace

TEST_CASE("request ids from method and path") {
  CHECK(derive_request_id("GET", "/login.php").text() == "GET_login.php");
  CHECK(derive_request_id("POST", "/login.php").text() == "POST_login.php");
  CHECK(derive_request_id("GET", "/a/b/view.php?x=1").text() == "GET_view.php");
  CHECK(derive_request_id("get", "/x.php#frag").text() == "GET_x.php");
  CHECK(derive_request_id("GET", "/").text() == "GET_index.php");
  CHECK(derive_request_id("GET", "/dir/", "default.php").text() == "GET_default.php");
  CHECK_THROWS_AS(derive_request_id("", "/a.php"), Error);

  std::mt19937 rng(7);
  const std::string alpha = "ab_.-/?#=x";
  for (int i = 0; i < 2000; ++i) {
    std::string target = "/";
    for (int n = rng() % 20; n > 0; --n) target += alpha[rng() % alpha.size()];
    auto expect = last_segment(target);
    if (expect.empty()) expect = "index.php";
    CAPTURE(target);
    CHECK(derive_request_id("GET", target).page == expect);
  }
}

TEST_CASE("session flag from cookie headers") {
  CHECK(http::extract_session_flag({{"Cookie", "PHPSESSID=ab12"}}, "PHPSESSID") == 1);
  CHECK(http::extract_session_flag({}, "PHPSESSID") == 0);
  CHECK(http::extract_session_flag({{"Cookie", "theme=dark"}}, "PHPSESSID") == 0);
  CHECK(http::extract_session_flag({{"Cookie", "PHPSESSID="}}, "PHPSESSID") == 0);

  std::mt19937 rng(11);
  const std::vector<std::string> parts = {"PHPSESSID=ab", "PHPSESSID=", "theme=dark", "XPHPSESSID=1", " ", ";", "a=b"};
  for (int i = 0; i < 2000; ++i) {
    http::Headers h;
    std::vector<std::string> values;
    for (int n = rng() % 3; n > 0; --n) {
      std::string v;
      for (int k = rng() % 4; k > 0; --k) v += parts[rng() % parts.size()] + (rng() % 2 ? "; " : "");
      h.emplace_back(rng() % 2 ? "Cookie" : "cookie", v);
      values.push_back(v);
    }
    CAPTURE(values.size());
    CHECK(http::extract_session_flag(h, "PHPSESSID") == cookie_oracle(values, "PHPSESSID"));
  }
}

TEST_CASE("http message parsing") {
  auto r = http::parse_request("POST /a/Login.php?x=1 HTTP/1.1\r\nHost: h\r\nContent-Length: 3\r\n\r\nabc");
  CHECK(r.method == "POST");
  CHECK(r.path() == "/a/Login.php");
  CHECK(r.body == "abc");
  CHECK_THROWS_AS(http::parse_request("BREW /pot HTTP/1.1\r\n\r\n"), Error);
  CHECK_THROWS_AS(http::parse_request("GET nopath HTTP/1.1\r\n\r\n"), Error);
  CHECK_THROWS_AS(http::parse_request("GET / HTTP/1.1\r\nContent-Length: x\r\n\r\n"), Error);

  auto resp = http::parse_response("HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n3\r\nabc\r\n2\r\nde\r\n0\r\n\r\n");
  CHECK(resp.status == 200);
  CHECK(resp.body == "abcde");

  auto sc = http::parse_set_cookie("PHPSESSID=deleted; Max-Age=0");
  REQUIRE(sc);
  CHECK(sc->cleared);
  sc = http::parse_set_cookie("PHPSESSID=abc; Path=/");
  REQUIRE(sc);
  CHECK_FALSE(sc->cleared);
  CHECK(sc->value == "abc");
  CHECK(http::parse_form("username=a%20b&password=x+y") ==
        std::map<std::string, std::string>{{"username", "a b"}, {"password", "x y"}});
}

TEST_CASE("xml names survive encoding") {
  CHECK(xml::encode_name("home.php") == "home.php");
  CHECK(xml::is_valid_name(xml::encode_name("1st page.php")));
  std::mt19937 rng(3);
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (int n = 1 + rng() % 12; n > 0; --n) s += static_cast<char>(rng() % 2 ? "_x41a.9-"[rng() % 8] : rng() % 256);
    auto enc = xml::encode_name(s);
    CHECK(xml::is_valid_name(enc));
    CHECK(xml::decode_name(enc) == s);
  }
  auto doc = xml::parse("<?xml version=\"1.0\"?>\n<!-- c -->\n<a k=\"v&amp;\"><b>t &lt; u</b><c/></a>");
  CHECK(doc.attr("k") == "v&");
  REQUIRE(doc.children.size() == 2);
  CHECK(doc.children[0].text == "t < u");
  CHECK(xml::parse(xml::write(doc)).children[0].text == "t < u");
  CHECK_THROWS_WITH_AS(xml::parse("<a>\n<b></a>", "f.xml"), doctest::Contains("f.xml:2"), Error);
}

TEST_CASE("profile store writes paired files with increasing ids") {
  auto dir = testsupport::fresh_dir("store-basic");
  ProfileStore store(dir);
  CHECK(store.record_exchange(get("/About.php"), "0") == 1);
  CHECK(fs::exists(fs::path(dir) / "1_request"));
  CHECK(read(fs::path(dir) / "1_Srequest") == "0");
  CHECK(read(fs::path(dir) / "1_request") == get("/About.php"));
  CHECK(store.record_exchange(get("/Home.php", "PHPSESSID=ab12"), "manager") == 2);
  CHECK(read(fs::path(dir) / "2_Srequest") == "1");
  for (std::size_t i = 3; i <= 50; ++i) CHECK(store.record_exchange(get("/p" + std::to_string(i) + ".php"), "0") == i);
  auto ids = ProfileStore::list_ids(dir);
  REQUIRE(ids.size() == 50);
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(ids.front() == 1);
  CHECK(ids.back() == 50);
  for (auto id : ids) CHECK(fs::exists(fs::path(dir) / (std::to_string(id) + "_Srequest")));

  ProfileStore reopened(dir);
  CHECK(reopened.record_exchange(get("/x.php"), "0") == 51);
  CHECK(ProfileStore::load_walks(dir).at("manager").size() == 1);
  CHECK_THROWS_AS(reopened.record_exchange(get("/x.php"), "../etc"), Error);
  CHECK_THROWS_AS(reopened.record_exchange("garbage", "0"), Error);
}

TEST_CASE("model building from a hand-made store") {
  auto dir = testsupport::fresh_dir("store-hand");
  {
    ProfileStore store(dir);
    store.record_exchange(get("/Home.php", "PHPSESSID=1"), "manager");
    store.record_exchange(get("/View.php", "PHPSESSID=1"), "manager");
    store.record_exchange(get("/calendar.js", "PHPSESSID=1"), "manager");
    store.record_exchange(get("/Viewusers.php", "PHPSESSID=1"), "manager");
    store.end_walk("manager");
    store.record_exchange(get("/Home.php", "PHPSESSID=2"), "manager");
    store.record_exchange(get("/Home.php", "PHPSESSID=2"), "manager");
  }
  auto m = build_model(dir);
  REQUIRE(m.set1.rows.size() == 6);
  CHECK(m.set1.rows[0] == ModelRow{0, 1, "GET_Home.php", 1, "manager"});
  CHECK(m.set1.rows[2].reqresid == "GET_calendar.js");
  CHECK(m.set1.relation().size() == 4);
  const auto& g = m.set2.at("manager");
  CHECK(g.edges() == testsupport::EdgeSet{{"Home.php", "View.php"}, {"View.php", "Viewusers.php"}, {"Home.php", "Home.php"}});
  CHECK(g.entries == std::vector<std::string>{"Home.php"});
  CHECK_FALSE(g.has_node("calendar.js"));

  auto out = testsupport::fresh_dir("model-hand");
  persist_model(m, out);
  CHECK(load_model(out) == m);
  CHECK(read(fs::path(out) / "model1.csv").rfind("sno,convid,reqresid,sessionFlag,role\n0,1,GET_Home.php,1,manager\n", 0) == 0);
}

TEST_CASE("role file lists next pages as element text; empty graph has no children") {
  Models m;
  m.set1.rows.push_back({0, 1, "GET_home.php", 1, "role1"});
  RoleGraph g;
  g.add_entry("home.php");
  for (const char* p : {"analysis.php", "report.php", "view.php", "search.php"}) g.add_edge("home.php", p);
  m.set2["role1"] = g;
  m.set2["role2"] = RoleGraph{};
  auto out = testsupport::fresh_dir("model-fig7");
  persist_model(m, out);
  auto role1 = read(fs::path(out) / "role1.xml");
  CHECK(role1.find("<home.php>analysis.php, report.php, view.php, search.php</home.php>") != std::string::npos);
  auto role2 = xml::parse(read(fs::path(out) / "role2.xml"));
  CHECK(role2.name == "Pages");
  CHECK(role2.children.empty());
  CHECK(load_model(out) == m);
}

TEST_CASE("model errors") {
  auto empty = testsupport::fresh_dir("store-empty");
  CHECK_THROWS_AS(build_model(empty), Error);

  auto orphan = testsupport::fresh_dir("store-orphan");
  {
    ProfileStore store(orphan);
    store.record_exchange(get("/a.php"), "0");
    store.record_exchange(get("/b.php"), "0");
  }
  fs::remove(fs::path(orphan) / "2_Srequest");
  CHECK_THROWS_WITH_AS(build_model(orphan), doctest::Contains("2"), Error);

  auto bad = testsupport::fresh_dir("model-bad");
  write_file((fs::path(bad) / "model1.csv").string(), "sno,convid,reqresid,sessionFlag,role\n0,1,GET_a.php,7,0\n");
  CHECK_THROWS_WITH_AS(load_model(bad), doctest::Contains("model1.csv:2"), Error);
  write_file((fs::path(bad) / "model1.csv").string(), "sno,convid,reqresid,sessionFlag,role\n0,1,GET_a.php,0,0\n");
  write_file((fs::path(bad) / "0.xml").string(), "<Pages role=\"0\">\n<a.php>\n</Pages>");
  CHECK_THROWS_WITH_AS(load_model(bad), doctest::Contains("0.xml:"), Error);
}

TEST_CASE("property: random stores give deterministic, sound, monotone models") {
  std::mt19937 rng(99);
  const std::vector<std::string> pages = {"/a.php", "/b.php", "/c.php", "/d.php", "/s.css", "/x/e.php"};
  const std::vector<std::string> roles = {"0", "r1", "r2"};
  for (int iter = 0; iter < 25; ++iter) {
    auto dir = testsupport::fresh_dir("store-rand");
    ProfileStore store(dir);
    Models previous;
    bool have_previous = false;
    for (int step = 0; step < 40; ++step) {
      auto role = roles[rng() % roles.size()];
      if (rng() % 6 == 0) store.end_walk(role);
      store.record_exchange(get(pages[rng() % pages.size()], rng() % 2 ? "PHPSESSID=z" : ""), role);
      if (step % 8 != 7) continue;
      auto m = build_model(dir);
      // Soundness: every edge is an adjacent non-asset pair of some walk.
      for (const auto& [r, g] : m.set2) {
        std::set<std::pair<std::string, std::string>> adjacent;
        for (const auto& walk : store.walks().at(r)) {
          std::vector<std::string> seq;
          for (const auto& v : walk) {
            if (!is_asset(v.page)) seq.push_back(v.page);
          }
          for (std::size_t i = 1; i < seq.size(); ++i) adjacent.insert({seq[i - 1], seq[i]});
        }
        for (const auto& e : g.edges()) CHECK(adjacent.count(e));
      }
      // Monotonicity: rows extend, relations and edges only grow.
      if (have_previous) {
        REQUIRE(m.set1.rows.size() >= previous.set1.rows.size());
        CHECK(std::equal(previous.set1.rows.begin(), previous.set1.rows.end(), m.set1.rows.begin()));
        auto before = previous.set1.relation();
        auto after = m.set1.relation();
        CHECK(std::includes(after.begin(), after.end(), before.begin(), before.end()));
        for (const auto& [r, g] : previous.set2) {
          auto old_edges = g.edges();
          auto new_edges = m.set2.at(r).edges();
          CHECK(std::includes(new_edges.begin(), new_edges.end(), old_edges.begin(), old_edges.end()));
        }
      }
      // Determinism and round trip.
      auto out1 = testsupport::fresh_dir("model-rand1");
      auto out2 = testsupport::fresh_dir("model-rand2");
      persist_model(m, out1);
      persist_model(build_model(dir), out2);
      CHECK(dir_snapshot(out1) == dir_snapshot(out2));
      CHECK(load_model(out1) == m);
      previous = m;
      have_previous = true;
    }
  }
}

TEST_CASE("demo app routes") {
  DemoApp app(default_demo_site(), {"127.0.0.1", 0}, 5);
  auto ep = app.endpoint();
  auto about = http::parse_response(net::exchange(ep, get("/About.php")));
  CHECK(about.status == 200);
  CHECK(extract_links(about.body, "/About.php", ep.host, ep.port) ==
        std::vector<std::string>{"/Help.php", "/Login.php", "/Services.php", "/Products.php"});
  auto home = http::parse_response(net::exchange(ep, get("/Home.php")));
  CHECK(home.status == 302);
  CHECK(home.header("Location") == "Login.php");

  auto login = http::parse_response(net::exchange(
      ep, http::build_request("POST", "/Login.php", {{"Host", "h"}}, "username=manager1&password=manager-pass")));
  REQUIRE(login.status == 302);
  auto cookie = http::parse_set_cookie(*login.header("Set-Cookie"));
  REQUIRE(cookie);
  auto view = http::parse_response(net::exchange(ep, get("/View.php", "PHPSESSID=" + cookie->value)));
  CHECK(extract_links(view.body, "/View.php", ep.host, ep.port) ==
        std::vector<std::string>{"/Viewusers.php", "/Viewroles.php"});
  auto report = http::parse_response(net::exchange(ep, get("/Work_report.php", "PHPSESSID=" + cookie->value)));
  CHECK(report.status == 403);

  auto failed = http::parse_response(net::exchange(
      ep, http::build_request("POST", "/Login.php", {{"Host", "h"}}, "username=manager1&password=nope")));
  CHECK(failed.status == 200);
  CHECK_FALSE(failed.header("Set-Cookie"));
}

TEST_CASE("link extraction") {
  auto links = extract_links("<a href='x.php?q=1'>x</a><a HREF=\"../up.php\"></a><a href=\"http://other:1/o.php\"></a>"
                             "<a href=\"http://127.0.0.1:80/same.php#f\"></a><a href=\"x.php\"></a><a href=\"mailto:a@b\"></a>",
                             "/dir/page.php", "127.0.0.1", 80);
  CHECK(links == std::vector<std::string>{"/dir/x.php", "/up.php", "/same.php"});
  CHECK(extract_links("<p>no links</p>", "/a.php", "h", 80).empty());
}

TEST_CASE("crawls of the demo app yield the expected models") {
  DemoApp app(default_demo_site(), {"127.0.0.1", 0}, 42);
  auto dir = testsupport::fresh_dir("store-demo");
  ProfileStore store(dir);

  CrawlOptions anon;
  anon.base_url = testsupport::landing_url(app);
  auto r0 = crawl(anon, store);
  CHECK(r0.pages == std::vector<std::string>{"/About.php", "/Help.php", "/Login.php", "/Services.php", "/Products.php"});

  CrawlOptions mgr;
  mgr.base_url = app.base_url();
  mgr.role = "manager";
  mgr.username = "manager1";
  mgr.password = "manager-pass";
  auto rm = crawl(mgr, store);
  CHECK(rm.pages == std::vector<std::string>{"/Home.php", "/Assign_works.php", "/User_mgmt.php", "/Update_users.php",
                                             "/Update_roles.php", "/View.php", "/Viewusers.php", "/Viewroles.php"});

  CrawlOptions emp = mgr;
  emp.role = "employer";
  emp.username = "employer1";
  emp.password = "employer-pass";
  auto re = crawl(emp, store);
  CHECK(re.pages == std::vector<std::string>{"/Home.php", "/Work_report.php", "/View.php", "/Viewusers.php", "/Viewroles.php"});

  auto ids = ProfileStore::list_ids(dir);
  CHECK(ids.size() == r0.requests + rm.requests + re.requests);
  for (std::size_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == i + 1);

  auto m = build_model(dir);
  CHECK(testsupport::folded(m.set1.relation()) == testsupport::folded(testsupport::golden_triples()));
  CHECK(m.set2.at("manager").edges() == testsupport::golden_manager_edges());
  CHECK(m.set2.at("employer").edges() == testsupport::golden_employer_edges());
  CHECK(m.set2.at("manager").entries == std::vector<std::string>{"Home.php"});
  CHECK(m.set2.at("employer").entries == std::vector<std::string>{"Home.php"});
  // Rows flagged 0 are all reachable without credentials.
  for (const auto& row : m.set1.rows) {
    if (row.session_flag == 0) CHECK(row.role == "0");
  }

  auto out = testsupport::fresh_dir("model-demo");
  persist_model(m, out);
  CHECK(load_model(out) == m);
}

TEST_CASE("crawl errors") {
  auto dir = testsupport::fresh_dir("store-err");
  ProfileStore store(dir);
  CrawlOptions o;
  o.base_url = "http://127.0.0.1:1/About.php";
  CHECK_THROWS_AS(crawl(o, store), Error);

  DemoApp app(default_demo_site(), {"127.0.0.1", 0}, 1);
  CrawlOptions bad;
  bad.base_url = app.base_url();
  bad.role = "manager";
  bad.username = "manager1";
  bad.password = "wrong";
  CHECK_THROWS_WITH_AS(crawl(bad, store), doctest::Contains("manager"), Error);

  DemoSite single;
  single.routes.push_back({"Lone.php", false, {}, {}});
  DemoApp lone(single, {"127.0.0.1", 0}, 1);
  auto dir2 = testsupport::fresh_dir("store-lone");
  ProfileStore store2(dir2);
  CrawlOptions l;
  l.base_url = lone.base_url() + "Lone.php";
  auto res = crawl(l, store2);
  CHECK(res.pages == std::vector<std::string>{"/Lone.php"});
  auto m = build_model(dir2);
  CHECK(m.set2.at("0").nodes == std::vector<std::string>{"Lone.php"});
  CHECK(m.set2.at("0").edges().empty());
}

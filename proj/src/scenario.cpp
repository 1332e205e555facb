#include "phpguard/scenario.hpp"

#include <filesystem>
#include <map>

#include "phpguard/http.hpp"
#include "phpguard/strings.hpp"

namespace phpguard {

namespace {

using Kind = ScenarioStep::Kind;

struct Syntax {
  std::string_view word;
  Kind kind;
  std::size_t min_args;
  std::size_t max_args;
};

constexpr Syntax kSyntax[] = {
    {"client", Kind::Client, 1, 3},  {"use", Kind::Use, 1, 1},
    {"get", Kind::Get, 1, 1},        {"post", Kind::Post, 1, 2},
    {"login", Kind::Login, 2, 2},    {"steal", Kind::Steal, 1, 1},
    {"clear-cookie", Kind::ClearCookie, 0, 0},
};

std::vector<std::string> words(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    auto start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

struct Client {
  std::string ip = "127.0.0.1";
  std::string user_agent = "phpguard-scenario/1.0";
  std::optional<std::string> cookie;
};

std::size_t count_lines(const std::optional<std::string>& path) {
  if (!path || !std::filesystem::exists(*path)) return 0;
  std::size_t n = 0;
  for (auto line : split_lines(read_file(*path))) n += !trim(line).empty();
  return n;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto w = words(line);
    const auto where = "scenario line " + std::to_string(i + 1) + ": ";
    if (w[0] == "name") {
      s.name = std::string(trim(line.substr(4)));
      continue;
    }
    ScenarioStep step{Kind::Get, {w.begin() + 1, w.end()}, i + 1};
    if (w[0] == "expect") {
      if (w.size() < 2) throw Error(where + "expect needs a condition");
      step.args.erase(step.args.begin());
      const auto& what = w[1];
      std::size_t want = 1;
      if (what == "allow") {
        step.kind = Kind::ExpectAllow;
        want = 0;
      } else if (what == "block") {
        step.kind = Kind::ExpectBlock;
      } else if (what == "status") {
        step.kind = Kind::ExpectStatus;
      } else if (what == "log-delta") {
        step.kind = Kind::ExpectLogDelta;
      } else {
        throw Error(where + "unknown expectation '" + what + "'");
      }
      if (step.args.size() != want) throw Error(where + "expect " + what + " takes " + std::to_string(want) + " argument(s)");
      if ((step.kind == Kind::ExpectStatus || step.kind == Kind::ExpectLogDelta) &&
          step.args[0].find_first_not_of("0123456789") != std::string::npos) {
        throw Error(where + "expected a number, got '" + step.args[0] + "'");
      }
      s.steps.push_back(step);
      continue;
    }
    const Syntax* syn = nullptr;
    for (const auto& candidate : kSyntax) {
      if (candidate.word == w[0]) syn = &candidate;
    }
    if (!syn) throw Error(where + "unknown step '" + w[0] + "'");
    if (step.args.size() < syn->min_args || step.args.size() > syn->max_args) {
      throw Error(where + "wrong number of arguments for '" + w[0] + "'");
    }
    step.kind = syn->kind;
    if (step.kind == Kind::Client) {
      for (std::size_t a = 1; a < step.args.size(); ++a) {
        if (step.args[a].rfind("ip=", 0) != 0 && step.args[a].rfind("ua=", 0) != 0) {
          throw Error(where + "client options are ip=... and ua=...");
        }
      }
    }
    if ((step.kind == Kind::Get || step.kind == Kind::Post) && step.args[0].front() != '/') {
      throw Error(where + "path must start with '/'");
    }
    s.steps.push_back(step);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  auto s = parse_scenario(read_file(path));
  if (s.name.empty()) s.name = std::filesystem::path(path).stem().string();
  return s;
}

ScenarioResult run_scenario(const Scenario& scenario, const net::Endpoint& target,
                            const std::optional<std::string>& log_path) {
  ScenarioResult result;
  std::map<std::string, Client> clients{{"default", {}}};
  std::string current = "default";
  std::optional<http::Response> last;
  const auto log_start = count_lines(log_path);
  auto fail = [&](const ScenarioStep& step, const std::string& why) {
    result.passed = false;
    result.transcript.push_back("FAIL line " + std::to_string(step.line) + ": " + why);
  };

  auto send = [&](const std::string& method, const std::string& path, const std::string& body) {
    auto& c = clients.at(current);
    http::Headers h = {{"Host", target.to_string()}, {"User-Agent", c.user_agent}};
    if (c.cookie) h.emplace_back("Cookie", "PHPSESSID=" + *c.cookie);
    if (method == "POST") h.emplace_back("Content-Type", "application/x-www-form-urlencoded");
    h.emplace_back("Connection", "close");
    auto raw = net::exchange(target, http::build_request(method, path, h, body), c.ip);
    auto r = http::parse_response(raw);
    for (const auto& v : http::find_headers(r.headers, "Set-Cookie")) {
      auto sc = http::parse_set_cookie(v);
      if (!sc || sc->name != "PHPSESSID") continue;
      if (sc->cleared) {
        c.cookie.reset();
      } else {
        c.cookie = sc->value;
      }
    }
    auto block = r.header("X-Guard-Block");
    if (r.status == 403 && block) ++result.blocks;
    result.transcript.push_back("[" + current + "] " + method + " " + path + " -> " + std::to_string(r.status) +
                                (block ? " blocked " + *block : ""));
    last = r;
  };

  for (const auto& step : scenario.steps) {
    try {
      switch (step.kind) {
        case Kind::Client: {
          Client c;
          for (std::size_t a = 1; a < step.args.size(); ++a) {
            (step.args[a][0] == 'i' ? c.ip : c.user_agent) = step.args[a].substr(3);
          }
          clients[step.args[0]] = c;
          current = step.args[0];
          break;
        }
        case Kind::Use:
          if (!clients.count(step.args[0])) {
            fail(step, "unknown client '" + step.args[0] + "'");
            break;
          }
          current = step.args[0];
          break;
        case Kind::Get: send("GET", step.args[0], ""); break;
        case Kind::Post: send("POST", step.args[0], step.args.size() > 1 ? step.args[1] : ""); break;
        case Kind::Login:
          clients.at(current).cookie.reset();
          send("GET", "/Login.php", "");
          send("POST", "/Login.php",
               "username=" + http::url_encode(step.args[0]) + "&password=" + http::url_encode(step.args[1]));
          if (!clients.at(current).cookie) fail(step, "login as " + step.args[0] + " did not yield a session cookie");
          break;
        case Kind::Steal: {
          auto it = clients.find(step.args[0]);
          if (it == clients.end() || !it->second.cookie) {
            fail(step, "client '" + step.args[0] + "' has no cookie to steal");
            break;
          }
          clients.at(current).cookie = it->second.cookie;
          result.transcript.push_back("[" + current + "] took the session cookie of " + step.args[0]);
          break;
        }
        case Kind::ClearCookie: clients.at(current).cookie.reset(); break;
        case Kind::ExpectAllow:
          if (!last) {
            fail(step, "no response yet");
          } else if (auto b = last->header("X-Guard-Block")) {
            fail(step, "expected the request to pass, it was blocked: " + *b);
          }
          break;
        case Kind::ExpectBlock: {
          auto b = last ? last->header("X-Guard-Block") : std::nullopt;
          if (!b) {
            fail(step, "expected block " + step.args[0] + ", request passed");
          } else if (*b != step.args[0]) {
            fail(step, "expected block " + step.args[0] + ", got " + *b);
          }
          break;
        }
        case Kind::ExpectStatus:
          if (!last || std::to_string(last->status) != step.args[0]) {
            fail(step, "expected status " + step.args[0] + ", got " + (last ? std::to_string(last->status) : "none"));
          }
          break;
        case Kind::ExpectLogDelta: {
          if (!log_path) {
            fail(step, "expect log-delta needs the enforcer log path");
            break;
          }
          auto delta = count_lines(log_path) - log_start;
          if (std::to_string(delta) != step.args[0]) {
            fail(step, "expected " + step.args[0] + " new log records, found " + std::to_string(delta));
          }
          break;
        }
      }
    } catch (const Error& e) {
      fail(step, std::string("transport: ") + e.what());
    }
    if (!result.passed) break;
  }
  result.transcript.push_back(std::string(result.passed ? "PASS " : "FAIL ") + scenario.name);
  return result;
}

}  // namespace phpguard

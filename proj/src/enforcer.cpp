#include "phpguard/enforcer.hpp"

#include <fstream>

#include "phpguard/http.hpp"
#include "phpguard/profile_store.hpp"
#include "phpguard/strings.hpp"

namespace phpguard {

Bindings parse_bindings(std::string_view text) {
  Bindings out;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto comma = line.find(',');
    const auto where = "bindings line " + std::to_string(i + 1) + ": ";
    if (comma == std::string_view::npos) throw Error(where + "expected 'username,role'");
    auto user = std::string(trim(line.substr(0, comma)));
    auto role = std::string(trim(line.substr(comma + 1)));
    if (user.empty() || !valid_role_name(role)) throw Error(where + "expected 'username,role'");
    if (!out.emplace(user, role).second) throw Error(where + "duplicate user '" + user + "'");
  }
  return out;
}

Bindings load_bindings(const std::string& path) { return parse_bindings(read_file(path)); }

std::optional<std::string> resolve_role(const std::optional<std::string>& username, const Bindings& bindings) {
  if (!username) return std::nullopt;
  auto it = bindings.find(*username);
  if (it == bindings.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string flatten(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

std::string format_record(const DeviationRecord& r) {
  return format_timestamp(r.time) + "\t" + flatten(r.identity.ip) + "|" + flatten(r.identity.user_agent) + "\t" +
         flatten(r.request_id) + "\t" + std::string(level_name(r.level)) + "\t" + std::string(reason_name(r.reason)) +
         "\t" + flatten(r.detail);
}

DeviationRecord parse_record(std::string_view line) {
  std::vector<std::string> f;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    f.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (f.size() != 6) throw Error("deviation record: expected 6 fields, got " + std::to_string(f.size()));
  DeviationRecord r;
  r.time = parse_timestamp(f[0]);
  auto bar = f[1].find('|');
  if (bar == std::string::npos) throw Error("deviation record: identity lacks '|'");
  r.identity = {f[1].substr(0, bar), f[1].substr(bar + 1)};
  r.request_id = f[2];
  if (f[3] == "1") {
    r.level = Level::One;
  } else if (f[3] == "2") {
    r.level = Level::Two;
  } else if (f[3] == "identity") {
    r.level = Level::Identity;
  } else {
    throw Error("deviation record: bad level '" + f[3] + "'");
  }
  auto reason = parse_reason(f[4]);
  if (!reason || *reason == Reason::Ok) throw Error("deviation record: bad reason '" + f[4] + "'");
  r.reason = *reason;
  r.detail = f[5];
  return r;
}

DeviationLog::DeviationLog(std::optional<std::string> path) : path_(std::move(path)) {}

void DeviationLog::append(const DeviationRecord& r) {
  std::lock_guard lock(mu_);
  if (path_) {
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    out << format_record(r) << '\n';
    if (!out) throw Error("cannot append to deviation log " + *path_);
  }
  records_.push_back(r);
}

std::size_t DeviationLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<DeviationRecord> DeviationLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::string block_response(Reason reason) {
  const auto name = std::string(reason_name(reason));
  auto body = "<html><head><title>Request blocked</title></head><body>\n<h1>Request blocked</h1>\n<p>Reason: " +
              name + "</p>\n</body></html>\n";
  return http::build_response(403, "Forbidden", {{"Content-Type", "text/html"}, {"X-Guard-Block", name}}, body);
}

std::string bad_gateway_response() {
  return http::build_response(502, "Bad Gateway", {{"Content-Type", "text/plain"}}, "upstream unreachable\n");
}

Enforcer::Enforcer(Verifier verifier, Bindings bindings, EnforcerOptions options, DeviationLog& log)
    : verifier_(std::move(verifier)), bindings_(std::move(bindings)), options_(std::move(options)), log_(log) {}

Enforcer::Key Enforcer::key_of(const ClientIdentity& who, const std::optional<std::string>& cookie) {
  return {who.ip, who.user_agent, cookie.value_or("")};
}

void Enforcer::expire(std::chrono::system_clock::time_point now) {
  if (now - last_sweep_ < std::chrono::seconds(1)) return;
  last_sweep_ = now;
  for (auto it = states_.begin(); it != states_.end();) {
    if (now - it->second.last_seen <= options_.idle_timeout) {
      ++it;
      continue;
    }
    if (it->second.session_cookie) pins_.erase(*it->second.session_cookie);
    it = states_.erase(it);
  }
}

Enforcer::Decision Enforcer::decide(const std::string& raw_request, const std::string& client_ip) {
  Decision d;
  d.who.ip = client_ip;
  const auto now = options_.clock();
  http::Request req;
  try {
    req = http::parse_request(raw_request);
  } catch (const Error& e) {
    d.verdict = Verdict::block(Reason::UnknownRequest, Level::One, std::string("unparseable request: ") + e.what());
    return d;
  }
  d.who.user_agent = req.header("User-Agent").value_or("");
  auto rid = derive_request_id(req.method, req.path(), options_.root_page);
  d.request_id = rid.text();
  d.cookie = http::session_cookie(req.headers, options_.session_cookie);
  if (req.method == "POST" && rid.page == options_.login_page) {
    auto form = http::parse_form(req.body);
    if (auto it = form.find(options_.user_field); it != form.end()) d.login_user = it->second;
  }

  std::lock_guard lock(mu_);
  expire(now);
  if (d.cookie) {
    auto pin = pins_.find(*d.cookie);
    if (pin != pins_.end() && pin->second != d.who) {
      d.verdict = Verdict::block(Reason::IdentityMismatch, Level::Identity,
                                 "session cookie belongs to another client");
      return d;
    }
    if (pin == pins_.end()) pins_.emplace(*d.cookie, d.who);
  }
  auto [it, fresh] = states_.try_emplace(key_of(d.who, d.cookie));
  auto& state = it->second;
  if (fresh) {
    state.identity = d.who;
    state.session_cookie = d.cookie;
    state.first_seen = now;
  }
  state.last_seen = now;

  RequestFacts facts{d.request_id, rid.page, d.cookie ? 1 : 0, state.role, state.last_page};
  d.verdict = verify_request(facts, verifier_);
  if (!d.verdict.blocked() && !is_asset(rid.page)) state.last_page = rid.page;
  return d;
}

void Enforcer::after_response(const Decision& d, const std::string& raw_response) {
  http::Response resp;
  try {
    resp = http::parse_response(raw_response);
  } catch (const Error&) {
    return;
  }
  std::optional<http::SetCookie> session;
  for (const auto& value : http::find_headers(resp.headers, "Set-Cookie")) {
    auto c = http::parse_set_cookie(value);
    if (c && c->name == options_.session_cookie) session = c;
  }
  const auto now = options_.clock();
  std::lock_guard lock(mu_);
  if (session && session->cleared) {
    if (auto it = states_.find(key_of(d.who, d.cookie)); it != states_.end()) {
      it->second.role = "0";
      it->second.last_page.reset();
    }
    return;
  }
  if (!d.login_user) return;
  std::optional<std::string> bound_cookie;
  if (session) {
    bound_cookie = session->value;
  } else if (d.cookie && resp.status / 100 == 3) {
    bound_cookie = d.cookie;
  }
  if (!bound_cookie) return;
  auto role = resolve_role(d.login_user, bindings_);
  if (!role) notices_.push_back("login by unbound user '" + *d.login_user + "' from " + d.who.text() + "; role stays 0");
  auto& state = states_[key_of(d.who, bound_cookie)];
  state.identity = d.who;
  state.session_cookie = bound_cookie;
  state.role = role.value_or("0");
  state.last_page.reset();
  if (state.first_seen == std::chrono::system_clock::time_point{}) state.first_seen = now;
  state.last_seen = now;
  pins_.try_emplace(*bound_cookie, d.who);
}

Verdict Enforcer::check(const std::string& raw_request, const std::string& client_ip) {
  auto d = decide(raw_request, client_ip);
  if (d.verdict.blocked()) {
    log_.append({std::chrono::floor<std::chrono::seconds>(options_.clock()), d.who, d.request_id, d.verdict.level,
                 d.verdict.reason, d.verdict.detail});
    std::lock_guard lock(mu_);
    ++blocked_;
  }
  return d.verdict;
}

std::string Enforcer::handle(const std::string& raw_request, const std::string& client_ip, const Upstream& upstream) {
  auto d = decide(raw_request, client_ip);
  if (d.verdict.blocked()) {
    log_.append({std::chrono::floor<std::chrono::seconds>(options_.clock()), d.who, d.request_id, d.verdict.level,
                 d.verdict.reason, d.verdict.detail});
    std::lock_guard lock(mu_);
    ++blocked_;
    return block_response(d.verdict.reason);
  }
  auto response = upstream(raw_request);
  if (!response) return bad_gateway_response();
  after_response(d, *response);
  std::lock_guard lock(mu_);
  ++forwarded_;
  return *response;
}

std::size_t Enforcer::blocked() const {
  std::lock_guard lock(mu_);
  return blocked_;
}

std::size_t Enforcer::forwarded() const {
  std::lock_guard lock(mu_);
  return forwarded_;
}

std::vector<std::string> Enforcer::notices() const {
  std::lock_guard lock(mu_);
  return notices_;
}

std::optional<ClientState> Enforcer::state_of(const ClientIdentity& who, const std::optional<std::string>& cookie) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(key_of(who, cookie));
  if (it == states_.end()) return std::nullopt;
  return it->second;
}

}  // namespace phpguard

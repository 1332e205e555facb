#include "phpguard/config_audit.hpp"

#include "phpguard/strings.hpp"

namespace phpguard {

const Setting* SettingsMap::find(std::string_view name) const {
  auto it = entries.find(to_lower(name));
  return it == entries.end() ? nullptr : &it->second;
}

namespace {

// Drops a trailing `; comment` that is not inside quotes.
std::string_view strip_comment(std::string_view v) {
  char quote = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    char c = v[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == ';') {
      return v.substr(0, i);
    }
  }
  return v;
}

// Value text of an ini line after `=`: comment dropped, quotes removed.
std::string_view ini_value(std::string_view raw) {
  auto v = trim(strip_comment(trim(raw)));
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    v = v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace

std::string normalize_value(std::string_view raw) {
  auto v = trim(raw);
  auto lower = to_lower(v);
  if (lower == "on" || lower == "yes" || lower == "true" || lower == "1") return "On";
  if (lower == "off" || lower == "no" || lower == "false" || lower == "0" || lower == "none" || lower.empty()) {
    return "Off";
  }
  return std::string(v);
}

SettingsMap parse_ini(std::string_view text) {
  SettingsMap map;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == ';' || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') map.diagnostics.push_back({i + 1, "unterminated section header"});
      continue;
    }
    auto eq = line.find('=');
    auto key = eq == std::string_view::npos ? std::string_view{} : trim(line.substr(0, eq));
    if (key.empty()) {
      map.diagnostics.push_back({i + 1, "expected 'key = value'"});
      continue;
    }
    map.entries[to_lower(key)] = Setting{std::string(key), normalize_value(ini_value(line.substr(eq + 1))), i + 1};
  }
  return map;
}

Policy load_policy(std::string_view text) {
  Policy policy;
  std::string rationale;
  std::string php_default;
  bool have_default = false;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto lineno = std::to_string(i + 1);
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '[') continue;
    if (line.front() == ';') {
      auto body = trim(line.substr(1));
      if (starts_with_icase(body, "rationale:")) {
        rationale = std::string(trim(body.substr(10)));
      } else if (starts_with_icase(body, "default:")) {
        php_default = normalize_value(ini_value(body.substr(8)));
        have_default = true;
      }
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty()) {
      throw Error("policy line " + lineno + ": expected 'key = value'");
    }
    auto key = std::string(trim(line.substr(0, eq)));
    if (rationale.empty()) throw Error("policy line " + lineno + ": missing '; rationale:' for " + key);
    if (!have_default) throw Error("policy line " + lineno + ": missing '; default:' for " + key);
    for (const auto& e : policy.entries) {
      if (iequals(e.name, key)) throw Error("policy line " + lineno + ": duplicate key " + key);
    }
    policy.entries.push_back({key, normalize_value(ini_value(line.substr(eq + 1))), php_default, rationale});
    rationale.clear();
    have_default = false;
  }
  return policy;
}

std::string_view default_policy_text() {
  static constexpr std::string_view kText = R"(; php.ini hardening policy.
; Each key carries the reason it matters and the value PHP assumes when the
; key is missing from php.ini.

[PHP]
; rationale: request parameters become global variables and can overwrite script state
; default: Off
register_globals = Off

; rationale: error messages disclose paths, queries and code structure to clients
; default: On
display_errors = Off

; rationale: file functions can fetch attacker-controlled remote URLs
; default: On
allow_url_fopen = Off

; rationale: include/require can load and execute remote code
; default: Off
allow_url_include = Off

; rationale: the X-Powered-By header advertises the PHP version
; default: On
expose_php = Off

; rationale: session ids accepted from the URL enable session fixation
; default: On
session.use_only_cookies = On

; rationale: automatic escaping gives a false sense of safety and corrupts data
; default: Off
magic_quotes_gpc = Off
)";
  return kText;
}

const Policy& default_policy() {
  static const Policy kPolicy = load_policy(default_policy_text());
  return kPolicy;
}

std::vector<Misconfiguration> audit(const SettingsMap& settings, const Policy& policy) {
  std::vector<Misconfiguration> out;
  for (const auto& e : policy.entries) {
    const auto* s = settings.find(e.name);
    const auto& current = s ? s->value : e.php_default;
    if (current != e.recommended) out.push_back({e.name, current, e.recommended, e.rationale, s == nullptr});
  }
  return out;
}

SettingsMap apply_recommendations(SettingsMap settings, const std::vector<Misconfiguration>& fixes) {
  for (const auto& m : fixes) {
    auto& entry = settings.entries[to_lower(m.name)];
    if (entry.name.empty()) entry.name = m.name;
    entry.value = m.recommended;
  }
  return settings;
}

}  // namespace phpguard

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace phpguard {

struct Setting {
  std::string name;   // as written in the file
  std::string value;  // normalized
  std::size_t line = 0;
  bool operator==(const Setting&) const = default;
};

struct IniDiagnostic {
  std::size_t line = 0;
  std::string message;
  bool operator==(const IniDiagnostic&) const = default;
};

/// Settings keyed by lowercased name. A later duplicate replaces the earlier
/// entry; section headers do not qualify keys.
struct SettingsMap {
  std::map<std::string, Setting> entries;
  std::vector<IniDiagnostic> diagnostics;

  const Setting* find(std::string_view name) const;
};

/// Folds booleans (On/Yes/True/1 -> On, Off/No/False/0/None and the empty
/// value -> Off, case-insensitive). Other values are returned trimmed.
/// Comments and quotes are removed by the ini parser before this step.
std::string normalize_value(std::string_view raw);

SettingsMap parse_ini(std::string_view text);

struct PolicyEntry {
  std::string name;
  std::string recommended;  // normalized
  std::string php_default;  // normalized value PHP uses when the key is absent
  std::string rationale;
  bool operator==(const PolicyEntry&) const = default;
};

struct Policy {
  std::vector<PolicyEntry> entries;
};

/// Parses a policy file: ini syntax where every key is preceded by
/// `; rationale: <text>` and `; default: <value>` comment lines.
/// Throws phpguard::Error naming the line when either is missing.
Policy load_policy(std::string_view text);
std::string_view default_policy_text();
const Policy& default_policy();

struct Misconfiguration {
  std::string name;
  std::string current;
  std::string recommended;
  std::string rationale;
  bool from_default = false;  // current value is PHP's default, the key is absent
  bool operator==(const Misconfiguration&) const = default;
};

/// One entry per policy key whose effective value differs from the
/// recommendation, in policy order.
std::vector<Misconfiguration> audit(const SettingsMap& settings, const Policy& policy);

/// Returns `settings` with every reported setting set to its recommendation.
SettingsMap apply_recommendations(SettingsMap settings, const std::vector<Misconfiguration>& fixes);

}  // namespace phpguard

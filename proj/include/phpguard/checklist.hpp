#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace phpguard {

enum class Category {
  CrossSiteScripting,
  SqlInjection,
  CommandInjection,
  CodeInjection,
  FileInclusion,
  FileManipulation,
};

inline constexpr std::array<Category, 6> kAllCategories = {
    Category::CrossSiteScripting, Category::SqlInjection,  Category::CommandInjection,
    Category::CodeInjection,      Category::FileInclusion, Category::FileManipulation};

/// Identifier form used in checklist files, e.g. "SqlInjection".
std::string_view category_id(Category c);
/// Human-readable name used in reports, e.g. "SQL Injection".
std::string_view category_title(Category c);
std::optional<Category> parse_category_id(std::string_view id);
std::optional<Category> parse_category_title(std::string_view title);

/// Vulnerable functions, taint sources and secure functions per category.
///
/// Function names are stored lowercased (PHP function names are case
/// insensitive). A name written `->name` matches method calls only; a plain
/// name matches both free-function and method calls. Sources are either
/// superglobals (`$_GET`) or function names whose return value is
/// attacker-influenced (file and database reads).
struct Checklist {
  std::map<Category, std::set<std::string>> sinks;
  std::map<Category, std::set<std::string>> sanitizers;
  std::set<std::string> sources;

  bool is_sink(Category c, std::string_view name, bool method_call) const;
  bool is_sanitizer(Category c, std::string_view name, bool method_call) const;
  bool is_source_function(std::string_view name, bool method_call) const;
  bool is_source_variable(std::string_view var) const;

  bool operator==(const Checklist&) const = default;
};

/// Parses the line-oriented checklist format:
///
///     # comment
///     SqlInjection: mysql_query, query          (same as SqlInjection.sinks)
///     SqlInjection.sanitizers: mysql_real_escape_string
///     SqlInjection.sources: mysql_fetch_array   (merged into the global set)
///     sources: $_GET, $_POST
///
/// Throws phpguard::Error naming the offending line on malformed input,
/// unknown categories, empty entries, or sink/sanitizer overlap.
Checklist load_checklist(std::string_view text);

/// Text of the checklist shipped with the tool (also in data/default_checklist.txt).
std::string_view default_checklist_text();
const Checklist& default_checklist();

}  // namespace phpguard

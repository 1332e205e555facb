#include "phpguard/checklist.hpp"

#include "phpguard/strings.hpp"

namespace phpguard {

std::string_view category_id(Category c) {
  switch (c) {
    case Category::CrossSiteScripting: return "CrossSiteScripting";
    case Category::SqlInjection: return "SqlInjection";
    case Category::CommandInjection: return "CommandInjection";
    case Category::CodeInjection: return "CodeInjection";
    case Category::FileInclusion: return "FileInclusion";
    case Category::FileManipulation: return "FileManipulation";
  }
  return "?";
}

std::string_view category_title(Category c) {
  switch (c) {
    case Category::CrossSiteScripting: return "Cross-Site Scripting";
    case Category::SqlInjection: return "SQL Injection";
    case Category::CommandInjection: return "Command Injection";
    case Category::CodeInjection: return "Code Injection";
    case Category::FileInclusion: return "File Inclusion";
    case Category::FileManipulation: return "File Manipulation";
  }
  return "?";
}

std::optional<Category> parse_category_id(std::string_view id) {
  for (auto c : kAllCategories) {
    if (category_id(c) == id) return c;
  }
  return std::nullopt;
}

std::optional<Category> parse_category_title(std::string_view title) {
  for (auto c : kAllCategories) {
    if (category_title(c) == title) return c;
  }
  return std::nullopt;
}

namespace {

bool name_matches(const std::set<std::string>& names, std::string_view name, bool method_call) {
  auto lower = to_lower(name);
  if (names.count(lower)) return true;
  return method_call && names.count("->" + lower);
}

}  // namespace

bool Checklist::is_sink(Category c, std::string_view name, bool method_call) const {
  auto it = sinks.find(c);
  return it != sinks.end() && name_matches(it->second, name, method_call);
}

bool Checklist::is_sanitizer(Category c, std::string_view name, bool method_call) const {
  auto it = sanitizers.find(c);
  return it != sanitizers.end() && name_matches(it->second, name, method_call);
}

bool Checklist::is_source_function(std::string_view name, bool method_call) const {
  return name_matches(sources, name, method_call);
}

bool Checklist::is_source_variable(std::string_view var) const {
  return !var.empty() && var.front() == '$' && sources.count(std::string(var)) != 0;
}

Checklist load_checklist(std::string_view text) {
  Checklist list;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto lineno = std::to_string(i + 1);
    auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) throw Error("checklist line " + lineno + ": expected '<key>: names'");
    auto key = trim(line.substr(0, colon));
    auto names = split_list(line.substr(colon + 1), ',');
    if (names.empty()) throw Error("checklist line " + lineno + ": empty entry for '" + std::string(key) + "'");

    if (key == "sources") {
      for (auto& n : names) list.sources.insert(n.front() == '$' ? n : to_lower(n));
      continue;
    }
    std::string_view cat_part = key;
    std::string_view field = "sinks";
    if (auto dot = key.find('.'); dot != std::string_view::npos) {
      cat_part = key.substr(0, dot);
      field = key.substr(dot + 1);
    }
    auto cat = parse_category_id(cat_part);
    if (!cat) throw Error("checklist line " + lineno + ": unknown category '" + std::string(cat_part) + "'");
    if (field == "sinks" || field == "sanitizers") {
      auto& target = field == "sinks" ? list.sinks[*cat] : list.sanitizers[*cat];
      for (auto& n : names) target.insert(to_lower(n));
    } else if (field == "sources") {
      for (auto& n : names) list.sources.insert(n.front() == '$' ? n : to_lower(n));
    } else {
      throw Error("checklist line " + lineno + ": unknown field '" + std::string(field) + "'");
    }
  }
  if (list.sinks.empty()) throw Error("checklist: no categories");
  for (const auto& [cat, names] : list.sinks) {
    auto san = list.sanitizers.find(cat);
    if (san == list.sanitizers.end()) continue;
    for (const auto& n : names) {
      if (san->second.count(n)) {
        throw Error("checklist: '" + n + "' is both sink and sanitizer for " + std::string(category_id(cat)));
      }
    }
  }
  return list;
}

std::string_view default_checklist_text() {
  static constexpr std::string_view kText = R"(# Default vulnerability checklist.
# <Category>[.sinks|.sanitizers|.sources]: name, name, ...
# A name prefixed with "->" matches method calls only.

sources: $_GET, $_POST, $_REQUEST, $_COOKIE, $_SERVER, $_FILES
sources: fgets, fgetc, fread, fscanf, file, file_get_contents
sources: mysql_fetch_array, mysql_fetch_assoc, mysql_fetch_row, mysql_fetch_object, mysql_result
sources: mysqli_fetch_array, mysqli_fetch_assoc, mysqli_fetch_row, pg_fetch_array, pg_fetch_assoc
sources: ->fetch, ->fetch_assoc, ->fetch_array, ->fetchall, ->f

CrossSiteScripting.sinks: echo, print, printf, vprintf, print_r
CrossSiteScripting.sanitizers: htmlspecialchars, htmlentities, strip_tags, intval, urlencode, rawurlencode

SqlInjection.sinks: mysql_query, mysqli_query, mysql_db_query, pg_query, sqlite_query, query, ->exec
SqlInjection.sanitizers: mysql_real_escape_string, mysql_escape_string, mysqli_real_escape_string, addslashes, pg_escape_string, intval

CommandInjection.sinks: system, exec, shell_exec, passthru, popen, proc_open
CommandInjection.sanitizers: escapeshellarg, escapeshellcmd, intval

CodeInjection.sinks: eval, assert, create_function
CodeInjection.sanitizers: intval

FileInclusion.sinks: include, include_once, require, require_once
FileInclusion.sanitizers: basename, intval

FileManipulation.sinks: fopen, file_put_contents, unlink, rmdir, copy, rename, move_uploaded_file
FileManipulation.sanitizers: basename, intval
)";
  return kText;
}

const Checklist& default_checklist() {
  static const Checklist kList = load_checklist(default_checklist_text());
  return kList;
}

}  // namespace phpguard

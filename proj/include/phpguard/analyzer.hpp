#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "phpguard/checklist.hpp"
#include "phpguard/lexer.hpp"

namespace phpguard {

enum class SourceKind {
  Superglobal,     // $_GET, $_POST, ...
  SourceFunction,  // file or database read listed under `sources`
  Unresolved,      // variable with no visible assignment; treated as tainted
  DynamicInclude,  // include/require whose path is not a static string
};

std::string_view to_string(SourceKind kind);
std::optional<SourceKind> parse_source_kind(std::string_view s);

/// One tainted parameter of a sink call (a child node of a Finding).
struct TaintDescriptor {
  std::string variable;  // operand as written at the sink, e.g. "$q" or "$_GET"
  SourceKind kind;
  std::string source;    // "$_GET", "mysql_fetch_array", or the unresolved variable
  std::size_t line;      // line where the taint enters
  bool operator==(const TaintDescriptor&) const = default;
};

struct Finding {
  std::size_t number = 0;
  std::string file;
  Category category;
  std::string sink;
  std::size_t line = 0;
  std::string line_text;  // verbatim source line
  std::vector<TaintDescriptor> children;
  bool operator==(const Finding&) const = default;
};

struct ScanDiagnostic {
  std::string file;
  std::size_t line = 0;
  std::string message;
  bool operator==(const ScanDiagnostic&) const = default;
};

struct ScanResult {
  std::vector<Finding> findings;
  std::size_t files_scanned = 0;
  std::chrono::microseconds elapsed{0};
  std::vector<ScanDiagnostic> diagnostics;
};

/// Right-hand side of one assignment, as a range of code tokens of a unit.
struct Assignment {
  std::size_t unit = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t line = 0;
  std::string scope;
};

struct DeclaredVariable {
  std::vector<Assignment> assignments;
};

/// A tokenized file held by the scan context, with comments and inline HTML
/// stripped from `code` and a per-token scope key.
struct SourceUnit {
  std::string path;
  std::vector<std::string> lines;
  php::TokenStream stream;
  std::vector<php::Token> code;
  std::vector<std::size_t> code_to_stream;
  std::vector<std::string> scope;  // "" global, "fn:<name>", "class:<name>"
  std::vector<std::string> static_includes;  // resolved paths of literal include/require targets
};

/// Mutable state of one top-level file scan.
///
/// `dependency_stack` holds the variables currently being resolved during
/// backtracking; `file_stack` the include chain being gathered. Both are
/// empty between operations. Variables are keyed by "<scope>|<name>".
struct ScanContext {
  std::vector<std::string> dependency_stack;
  std::vector<std::string> file_stack;
  std::map<std::string, DeclaredVariable> declared_variables;
  std::map<std::string, std::set<std::string>> globals_in_scope;
  bool in_function = false;
  bool in_class = false;

  std::vector<SourceUnit> units;
  std::vector<ScanDiagnostic> diagnostics;

  // Memo of resolved variable taint per category; only filled for results
  // computed without cutting a dependency cycle.
  std::map<std::string, std::optional<TaintDescriptor>> memo;
  std::size_t cycle_cuts = 0;

  /// Adds a tokenized unit and records its assignments. `source` supplies
  /// the line texts used in findings and may be empty. Returns the unit index.
  std::size_t declare(const php::TokenStream& stream, std::string_view source);
  const SourceUnit* find_unit(std::string_view path) const;
};

/// Backtracks the arguments of the sink call at `call_site` (index into
/// `stream.tokens`) and returns every tainted parameter for `category`.
/// The stream is declared into `ctx` on first use.
std::vector<TaintDescriptor> backtrack_taint(const php::TokenStream& stream, std::size_t call_site,
                                             Category category, const Checklist& checklist, ScanContext& ctx);

/// Scans one file plus its static include chain. Findings are numbered
/// 1..n in discovery order. Unreadable files become diagnostics.
std::vector<Finding> scan_file(const std::string& path, const Checklist& checklist, ScanContext& ctx);

/// Scans in-memory source as if it were the file `path` (includes resolve
/// against the filesystem relative to `path`).
std::vector<Finding> scan_source(std::string_view source, const std::string& path,
                                 const Checklist& checklist, ScanContext& ctx);

struct ScanOptions {
  // Replaces the root directory in reported file names, e.g.
  // "C:/xampp/htdocs/app" so findings read "C:/xampp/htdocs/app/x.php".
  std::optional<std::string> path_prefix;
};

/// Scans every *.php file under `root` (recursive, lexicographic order) or
/// the single file `root`. Throws phpguard::Error when root does not exist.
ScanResult scan_project(const std::string& root, const Checklist& checklist, const ScanOptions& options = {});

}  // namespace phpguard

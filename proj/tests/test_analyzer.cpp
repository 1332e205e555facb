#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "phpguard/analyzer.hpp"
#include "phpguard/strings.hpp"

using namespace phpguard;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = PHPGUARD_SOURCE_DIR "/fixtures";

std::vector<Finding> scan_text(std::string_view src, const Checklist& cl = default_checklist()) {
  ScanContext ctx;
  return scan_source(src, "/nonexistent/virtual.php", cl, ctx);
}

std::set<Category> categories(const ScanResult& r) {
  std::set<Category> out;
  for (const auto& f : r.findings) out.insert(f.category);
  return out;
}

std::size_t php_line_of(const php::TokenStream& s, std::string_view lexeme, std::size_t nth = 0) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].lexeme == lexeme && nth-- == 0) return i;
  }
  FAIL("lexeme not found: " << lexeme);
  return 0;
}

// ---------------------------------------------------------------------------
// Brute-force oracle for straight-line programs of the form
//   $vN = <expr>;   echo <expr>;   mysql_query(<expr>);
// one statement per line. Every variable occurrence is textually replaced by
// the disjunction of all its right-hand sides (flow-insensitive), unassigned
// variables by an UNRESOLVED marker, then sanitizer calls for the category
// are deleted and the remaining text is searched for a source.
// ---------------------------------------------------------------------------

struct Program {
  std::vector<std::string> lines;
};

const std::map<Category, std::vector<std::string>> kSanitizers = {
    {Category::CrossSiteScripting, {"htmlspecialchars"}},
    {Category::SqlInjection, {"mysql_real_escape_string"}},
};

std::string erase_calls(std::string text, const std::string& fn) {
  for (;;) {
    auto pos = text.find(fn + "(");
    if (pos == std::string::npos) return text;
    std::size_t depth = 0;
    std::size_t i = pos + fn.size();
    for (; i < text.size(); ++i) {
      if (text[i] == '(') ++depth;
      if (text[i] == ')' && --depth == 0) break;
    }
    text.replace(pos, i + 1 - pos, "\"\"");
  }
}

std::string inline_vars(const std::string& expr, const std::map<std::string, std::vector<std::string>>& rhs,
                        std::set<std::string> path) {
  static const std::regex var_re(R"(\$v[0-9])");
  std::string out;
  auto begin = std::sregex_iterator(expr.begin(), expr.end(), var_re);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    out += expr.substr(last, it->position() - last);
    last = it->position() + it->length();
    const auto name = it->str();
    auto found = rhs.find(name);
    if (found == rhs.end()) {
      out += "UNRESOLVED";
    } else if (path.count(name)) {
      out += "\"\"";
    } else {
      auto next = path;
      next.insert(name);
      out += "(";
      for (const auto& r : found->second) out += inline_vars(r, rhs, next) + "|";
      out += ")";
    }
  }
  return out + expr.substr(last);
}

std::set<std::pair<std::size_t, Category>> oracle(const Program& p) {
  static const std::regex assign_re(R"(^(\$v[0-9]) = (.*);$)");
  std::map<std::string, std::vector<std::string>> rhs;
  for (const auto& l : p.lines) {
    std::smatch m;
    if (std::regex_match(l, m, assign_re)) rhs[m[1]].push_back(m[2]);
  }
  std::set<std::pair<std::size_t, Category>> out;
  for (std::size_t i = 0; i < p.lines.size(); ++i) {
    const auto& l = p.lines[i];
    std::string arg;
    Category cat;
    if (l.rfind("echo ", 0) == 0) {
      arg = l.substr(5, l.size() - 6);
      cat = Category::CrossSiteScripting;
    } else if (l.rfind("mysql_query(", 0) == 0) {
      arg = l.substr(12, l.size() - 14);
      cat = Category::SqlInjection;
    } else {
      continue;
    }
    auto text = inline_vars(arg, rhs, {});
    for (const auto& s : kSanitizers.at(cat)) text = erase_calls(text, s);
    if (text.find("$_GET") != std::string::npos || text.find("UNRESOLVED") != std::string::npos ||
        text.find("fgets(") != std::string::npos) {
      out.emplace(i + 2, cat);  // line 1 holds the open tag
    }
  }
  return out;
}

std::string random_expr(std::mt19937& rng, int depth = 0) {
  auto var = [&] { return "$v" + std::to_string(rng() % 4); };
  switch (rng() % (depth > 1 ? 5 : 8)) {
    case 0: return "$_GET['k" + std::to_string(rng() % 3) + "']";
    case 1: return "\"lit\"";
    case 2:
    case 3: return var();
    case 4: return "\"a " + var() + " b\"";
    case 5: return random_expr(rng, depth + 1) + " . " + random_expr(rng, depth + 1);
    case 6: return (rng() % 2 ? "htmlspecialchars(" : "mysql_real_escape_string(") + random_expr(rng, depth + 1) + ")";
    default: return "fgets($fp)";
  }
}

Program random_program(std::mt19937& rng) {
  Program p;
  std::size_t n = 2 + rng() % 9;
  for (std::size_t i = 0; i < n; ++i) {
    switch (rng() % 4) {
      case 0: p.lines.push_back("echo " + random_expr(rng) + ";"); break;
      case 1: p.lines.push_back("mysql_query(" + random_expr(rng) + ");"); break;
      default: p.lines.push_back("$v" + std::to_string(rng() % 4) + " = " + random_expr(rng) + ";"); break;
    }
  }
  return p;
}

std::string render(const Program& p) {
  std::string s = "<?php\n";
  for (const auto& l : p.lines) s += l + "\n";
  return s;
}

std::set<std::pair<std::size_t, Category>> finding_keys(const std::vector<Finding>& fs) {
  std::set<std::pair<std::size_t, Category>> out;
  for (const auto& f : fs) out.emplace(f.line, f.category);
  return out;
}

Checklist oracle_checklist() {
  return load_checklist(
      "sources: $_GET, fgets\n"
      "CrossSiteScripting: echo\n"
      "CrossSiteScripting.sanitizers: htmlspecialchars\n"
      "SqlInjection: mysql_query\n"
      "SqlInjection.sanitizers: mysql_real_escape_string\n");
}

}  // namespace

TEST_CASE("superglobal assignment reaching a query") {
  auto src = "<?php $q = $_GET['id']; mysql_query($q);";
  auto stream = php::tokenize(src, "/nonexistent/one.php");
  ScanContext ctx;
  auto d = backtrack_taint(stream, php_line_of(stream, "mysql_query"), Category::SqlInjection, default_checklist(), ctx);
  REQUIRE(d.size() == 1);
  CHECK(d[0] == TaintDescriptor{"$q", SourceKind::Superglobal, "$_GET", 1});
  CHECK(ctx.dependency_stack.empty());
}

TEST_CASE("literal-only argument has no taint") {
  auto stream = php::tokenize("<?php mysql_query(\"SELECT 1\");", "/nonexistent/two.php");
  ScanContext ctx;
  CHECK(backtrack_taint(stream, php_line_of(stream, "mysql_query"), Category::SqlInjection, default_checklist(), ctx)
            .empty());
}

TEST_CASE("undeclared variable in printf is unresolved and tainted") {
  std::string src = "<?php\n";
  for (int i = 2; i < 114; ++i) src += "\n";
  src += "printf(\"Debug: query = %s<br>\\n\", $Query_String); // db_mysql.inc\n";
  auto stream = php::tokenize(src, "/nonexistent/dbg.php");
  ScanContext ctx;
  auto d = backtrack_taint(stream, php_line_of(stream, "printf"), Category::CrossSiteScripting, default_checklist(), ctx);
  REQUIRE(d.size() == 1);
  CHECK(d[0] == TaintDescriptor{"$Query_String", SourceKind::Unresolved, "$Query_String", 114});
}

TEST_CASE("sanitizer wrapping suppresses the matching category only") {
  auto f = scan_text(
      "<?php\n"
      "$name = $_GET['name'];\n"
      "$safe = htmlspecialchars($name);\n"
      "echo \"Hello \" . $safe;\n"
      "mysql_query(\"SELECT * FROM u WHERE n='$safe'\");\n");
  REQUIRE(f.size() == 1);
  CHECK(f[0].category == Category::SqlInjection);
  CHECK(f[0].line == 5);
  CHECK(f[0].number == 1);
  REQUIRE(f[0].children.size() == 1);
  CHECK(f[0].children[0].variable == "$safe");
  CHECK(f[0].children[0].source == "$_GET");
  CHECK(f[0].children[0].line == 2);
}

TEST_CASE("source kinds and sink shapes") {
  SUBCASE("database fetch is a source") {
    auto f = scan_text("<?php\n$row = mysql_fetch_array($r);\necho $row['name'];\n");
    REQUIRE(f.size() == 1);
    CHECK(f[0].children[0].kind == SourceKind::SourceFunction);
    CHECK(f[0].children[0].source == "mysql_fetch_array");
  }
  SUBCASE("method sink matches on the method name") {
    auto f = scan_text("<?php\n$db->query(\"SELECT \" . $_POST['c']);\n");
    REQUIRE(f.size() == 1);
    CHECK(f[0].sink == "query");
    CHECK(f[0].category == Category::SqlInjection);
    CHECK(f[0].children[0] == TaintDescriptor{"$_POST", SourceKind::Superglobal, "$_POST", 2});
  }
  SUBCASE("method receiver is not an argument") {
    CHECK(scan_text("<?php\n$db = $_GET['x'];\n$db->query(\"SELECT 1\");\n").empty());
  }
  SUBCASE("dynamic include is flagged, literal include is followed") {
    auto f = scan_text("<?php\ninclude $page;\ninclude \"header.php\";\n");
    REQUIRE(f.size() == 1);
    CHECK(f[0].category == Category::FileInclusion);
    CHECK(f[0].line == 2);
  }
  SUBCASE("command and code injection") {
    auto f = scan_text("<?php\nsystem(\"ls \" . $_GET['d']);\neval($_POST['c']);\nsystem(escapeshellarg($_GET['d']));\n");
    REQUIRE(f.size() == 2);
    CHECK(f[0].category == Category::CommandInjection);
    CHECK(f[1].category == Category::CodeInjection);
  }
  SUBCASE("function scope does not see global assignments") {
    auto f = scan_text("<?php\n$x = \"safe\";\nfunction f() { echo $x; }\necho $x;\n");
    REQUIRE(f.size() == 1);
    CHECK(f[0].line == 3);
    CHECK(f[0].children[0].kind == SourceKind::Unresolved);
  }
  SUBCASE("global declaration imports the global binding") {
    CHECK(scan_text("<?php\n$x = \"safe\";\nfunction f() { global $x; echo $x; }\n").empty());
  }
  SUBCASE("self-referential assignment terminates") {
    auto f = scan_text("<?php\n$a = \"x\";\n$a = $a . $b;\n$b = $a;\necho $a;\n");
    CHECK(f.empty());
  }
}

TEST_CASE("include chain shares declarations and cuts cycles") {
  auto dir = fs::temp_directory_path() / "phpguard_inc_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_file((dir / "a.php").string(), "<?php\ninclude \"b.php\";\necho $from_b;\n");
  write_file((dir / "b.php").string(), "<?php\ninclude \"a.php\";\n$from_b = $_COOKIE['c'];\n");
  ScanContext ctx;
  auto f = scan_file((dir / "a.php").string(), default_checklist(), ctx);
  REQUIRE(f.size() == 1);
  CHECK(f[0].children[0].source == "$_COOKIE");
  CHECK(ctx.units.size() == 2);
  CHECK(ctx.file_stack.empty());
  CHECK(ctx.dependency_stack.empty());
  CHECK_FALSE(ctx.in_function);
  CHECK_FALSE(ctx.in_class);
  fs::remove_all(dir);
}

TEST_CASE("unreadable file becomes a diagnostic") {
  ScanContext ctx;
  auto f = scan_file("/nonexistent/missing.php", default_checklist(), ctx);
  CHECK(f.empty());
  CHECK(ctx.diagnostics.size() == 1);
}

TEST_CASE("AdminMenu fixture yields the three reported sinks") {
  ScanOptions opts;
  opts.path_prefix = "C:/xampp/htdocs/empldir_php4t";
  auto r = scan_project(kFixtures + "/empldir_php4t", default_checklist(), opts);
  REQUIRE(r.findings.size() == 3);
  CHECK(r.files_scanned == 2);
  const std::vector<std::size_t> lines = {114, 131, 153};
  const std::vector<Category> cats = {Category::CrossSiteScripting, Category::SqlInjection, Category::SqlInjection};
  const std::vector<std::string> sinks = {"printf", "query", "query"};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.findings[i].number == i + 1);
    CHECK(r.findings[i].file == "C:/xampp/htdocs/empldir_php4t/AdminMenu.php");
    CHECK(r.findings[i].line == lines[i]);
    CHECK(r.findings[i].category == cats[i]);
    CHECK(r.findings[i].sink == sinks[i]);
  }
  CHECK(trim(r.findings[0].line_text) == "printf(\"Debug: query = %s<br>\\n\", $Query_String); // db_mysql.inc");
  CHECK(trim(r.findings[1].line_text) == "$db_fill->query ($sql_query);");
  CHECK(r.findings[0].children.at(0).kind == SourceKind::Unresolved);
}

TEST_CASE("mini-app fixtures produce their category sets") {
  using C = Category;
  const std::map<std::string, std::set<Category>> expected = {
      {"portal", {C::SqlInjection, C::FileManipulation, C::CrossSiteScripting}},
      {"scarf", {C::FileManipulation, C::SqlInjection, C::CrossSiteScripting}},
      {"cet", {C::SqlInjection, C::CrossSiteScripting}},
      {"bookstore", {C::SqlInjection, C::CrossSiteScripting}},
      {"employee_dir", {C::SqlInjection, C::CrossSiteScripting, C::FileManipulation}},
  };
  for (const auto& [app, cats] : expected) {
    CAPTURE(app);
    auto r = scan_project(kFixtures + "/apps/" + app, default_checklist());
    CHECK(categories(r) == cats);
    CHECK(r.diagnostics.empty());
  }
}

TEST_CASE("clean and html-only trees") {
  auto r = scan_project(kFixtures + "/clean", default_checklist());
  CHECK(r.findings.empty());
  CHECK(r.files_scanned == 2);
  auto html_only = scan_project(kFixtures + "/clean/b.php", default_checklist());
  CHECK(html_only.findings.empty());
  CHECK(html_only.files_scanned == 1);
  CHECK_THROWS_AS(scan_project(kFixtures + "/no_such_dir", default_checklist()), Error);
}

TEST_CASE("property: soundness and determinism over fixtures") {
  auto a = scan_project(kFixtures, default_checklist());
  auto b = scan_project(kFixtures, default_checklist());
  CHECK(a.findings == b.findings);
  CHECK(a.files_scanned == b.files_scanned);
  CHECK(a.diagnostics == b.diagnostics);
  REQUIRE_FALSE(a.findings.empty());
  for (std::size_t i = 0; i < a.findings.size(); ++i) {
    const auto& f = a.findings[i];
    CHECK(f.number == i + 1);
    CHECK_FALSE(f.children.empty());
    CHECK(to_lower(f.line_text).find(f.sink) != std::string::npos);
    CHECK(default_checklist().is_sink(f.category, f.sink, true));
  }
}

TEST_CASE("property: straight-line programs agree with the inlining oracle") {
  std::mt19937 rng(42);
  const auto cl = oracle_checklist();
  std::size_t flagged = 0;
  for (int iter = 0; iter < 1500; ++iter) {
    auto p = random_program(rng);
    auto src = render(p);
    CAPTURE(src);
    auto expected = oracle(p);
    flagged += !expected.empty();
    CHECK(finding_keys(scan_text(src, cl)) == expected);
  }
  CHECK(flagged > 300);
  CHECK(flagged < 1400);
}

TEST_CASE("property: checklist monotonicity") {
  std::mt19937 rng(7);
  const auto base = oracle_checklist();
  auto more_sinks = base;
  more_sinks.sinks[Category::CrossSiteScripting].insert("mysql_query");
  auto more_sanitizers = base;
  more_sanitizers.sanitizers[Category::SqlInjection].insert("htmlspecialchars");
  for (int iter = 0; iter < 500; ++iter) {
    auto src = render(random_program(rng));
    CAPTURE(src);
    auto f0 = finding_keys(scan_text(src, base));
    auto f1 = finding_keys(scan_text(src, more_sinks));
    auto f2 = finding_keys(scan_text(src, more_sanitizers));
    CHECK(std::includes(f1.begin(), f1.end(), f0.begin(), f0.end()));
    CHECK(std::includes(f0.begin(), f0.end(), f2.begin(), f2.end()));
  }
}

TEST_CASE("property: registers and stacks are reset after every scan") {
  std::mt19937 rng(99);
  const std::vector<std::string> pieces = {"function f($a) {", "class C {", "}", "echo $x;", "$x = $_GET['a'];",
                                           "if ($x) {", "public function m() { echo $this->p; }", "{"};
  for (int iter = 0; iter < 300; ++iter) {
    std::string src = "<?php\n";
    for (int i = 0; i < 8; ++i) src += pieces[rng() % pieces.size()] + "\n";
    ScanContext ctx;
    scan_source(src, "/nonexistent/regs.php", default_checklist(), ctx);
    CHECK_FALSE(ctx.in_function);
    CHECK_FALSE(ctx.in_class);
    CHECK(ctx.file_stack.empty());
    CHECK(ctx.dependency_stack.empty());
  }
}

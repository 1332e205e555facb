#include "phpguard/analyzer.hpp"

#include <algorithm>
#include <filesystem>

#include "phpguard/strings.hpp"

namespace phpguard {

namespace fs = std::filesystem;
using php::Token;
using php::TokenKind;

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::Superglobal: return "superglobal";
    case SourceKind::SourceFunction: return "source-function";
    case SourceKind::Unresolved: return "unresolved";
    case SourceKind::DynamicInclude: return "dynamic-include";
  }
  return "?";
}

std::optional<SourceKind> parse_source_kind(std::string_view s) {
  for (auto k : {SourceKind::Superglobal, SourceKind::SourceFunction, SourceKind::Unresolved, SourceKind::DynamicInclude}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace {

bool is_punct(const Token& t, char c) {
  return t.kind == TokenKind::Punctuation && t.lexeme.size() == 1 && t.lexeme[0] == c;
}
bool is_op(const Token& t, std::string_view s) { return t.kind == TokenKind::Operator && t.lexeme == s; }
bool is_kw(const Token& t, std::string_view s) { return t.kind == TokenKind::Keyword && iequals(t.lexeme, s); }
bool is_opener(const Token& t) { return is_punct(t, '(') || is_punct(t, '[') || is_punct(t, '{'); }
bool is_closer(const Token& t) { return is_punct(t, ')') || is_punct(t, ']') || is_punct(t, '}'); }
bool is_member_access(const Token& t) { return is_op(t, "->") || is_op(t, "?->") || is_op(t, "::"); }

bool is_assign_op(const Token& t) {
  static const std::set<std::string> kOps = {"=", ".=", "+=", "-=", "*=", "/=", "%=", "\?\?=", "|=", "&=", "^=", "**=", "<<=", ">>="};
  return t.kind == TokenKind::Operator && kOps.count(t.lexeme) != 0;
}

bool is_include_keyword(std::string_view name) {
  auto l = to_lower(name);
  return l == "include" || l == "include_once" || l == "require" || l == "require_once";
}

bool is_statement_boundary(const Token& t) {
  return is_punct(t, ';') || is_punct(t, '{') || is_punct(t, '}') || t.kind == TokenKind::OpenTag || t.kind == TokenKind::CloseTag;
}

// Index of the closer matching the opener at `open`, or code.size().
std::size_t match_close(const std::vector<Token>& code, std::size_t open) {
  int depth = 0;
  for (std::size_t k = open; k < code.size(); ++k) {
    if (is_opener(code[k])) ++depth;
    else if (is_closer(code[k]) && --depth == 0) return k;
  }
  return code.size();
}

// End (exclusive) of the expression starting at `b`.
std::size_t expression_end(const std::vector<Token>& code, std::size_t b, bool stop_at_comma) {
  int depth = 0;
  for (std::size_t k = b; k < code.size(); ++k) {
    const auto& t = code[k];
    if (is_opener(t)) {
      ++depth;
    } else if (is_closer(t)) {
      if (depth == 0) return k;
      --depth;
    } else if (depth == 0) {
      if (is_punct(t, ';') || t.kind == TokenKind::CloseTag) return k;
      if (stop_at_comma && is_punct(t, ',')) return k;
    }
  }
  return code.size();
}

std::string unquote(std::string_view lit) {
  if (lit.size() < 2) return std::string(lit);
  char q = lit.front();
  auto body = lit.substr(1, lit.size() - 2);
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\\' && i + 1 < body.size()) {
      char n = body[i + 1];
      if (n == '\\' || n == q) {
        out += n;
        ++i;
        continue;
      }
      if (q == '"' && n == 'n') { out += '\n'; ++i; continue; }
      if (q == '"' && n == 't') { out += '\t'; ++i; continue; }
    }
    out += body[i];
  }
  return out;
}

// Evaluates a static include path: string literals, __DIR__, __FILE__ and
// dirname(__FILE__) joined with `.`. Returns nullopt for anything dynamic.
std::optional<std::string> static_path(const std::vector<Token>& code, std::size_t b, std::size_t e, const fs::path& file) {
  while (b < e && is_punct(code[b], '(') && match_close(code, b) == e - 1) {
    ++b;
    --e;
  }
  if (b >= e) return std::nullopt;
  std::string out;
  bool want_operand = true;
  for (std::size_t k = b; k < e; ++k) {
    const auto& t = code[k];
    if (!want_operand) {
      if (!is_op(t, ".")) return std::nullopt;
      want_operand = true;
      continue;
    }
    if (t.kind == TokenKind::StringLiteral && (t.lexeme.front() == '\'' || t.lexeme.front() == '"') && t.interpolated.empty()) {
      out += unquote(t.lexeme);
    } else if (t.kind == TokenKind::Identifier && t.lexeme == "__DIR__") {
      out += file.parent_path().generic_string();
    } else if (t.kind == TokenKind::Identifier && t.lexeme == "__FILE__") {
      out += file.generic_string();
    } else if (t.kind == TokenKind::Identifier && iequals(t.lexeme, "dirname") && k + 3 < e && is_punct(code[k + 1], '(') &&
               code[k + 2].lexeme == "__FILE__" && is_punct(code[k + 3], ')')) {
      out += file.parent_path().generic_string();
      k += 3;
    } else {
      return std::nullopt;
    }
    want_operand = false;
  }
  if (want_operand) return std::nullopt;
  return out;
}

std::string var_key(std::string_view scope, std::string_view name) {
  std::string key(scope);
  key += '|';
  key += name;
  return key;
}

std::string class_of_scope(std::string_view scope) {
  if (scope.rfind("class:", 0) == 0) return std::string(scope.substr(6));
  if (scope.rfind("fn:", 0) == 0) {
    auto sep = scope.find("::");
    if (sep != std::string_view::npos) return std::string(scope.substr(3, sep - 3));
  }
  return {};
}

std::string join_lexemes(const std::vector<Token>& code, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t k = b; k < e && k < code.size(); ++k) {
    if (!out.empty()) out += ' ';
    out += code[k].lexeme;
  }
  return out;
}

// Reads a variable operand starting at `k`: `$x` or `$x->prop`. Returns the
// operand name and the index of its last token.
std::pair<std::string, std::size_t> read_operand(const std::vector<Token>& code, std::size_t k, std::size_t e) {
  std::string name = code[k].lexeme;
  if (k + 2 < e && is_op(code[k + 1], "->") && code[k + 2].kind == TokenKind::Identifier &&
      !(k + 3 < e && is_punct(code[k + 3], '('))) {
    return {name + "->" + code[k + 2].lexeme, k + 2};
  }
  return {name, k};
}

class Resolver {
 public:
  Resolver(const Checklist& checklist, ScanContext& ctx) : checklist_(checklist), ctx_(ctx) {}

  // Every tainted operand in code[b, e) of `unit` for category `cat`.
  std::vector<TaintDescriptor> collect(std::size_t unit, std::size_t b, std::size_t e, const std::string& scope,
                                       Category cat, bool first_only) {
    std::vector<TaintDescriptor> out;
    auto add = [&](TaintDescriptor d) {
      for (const auto& x : out) {
        if (x.variable == d.variable) return;
      }
      out.push_back(std::move(d));
    };
    const auto& code = ctx_.units[unit].code;
    e = std::min(e, code.size());
    for (std::size_t k = b; k < e; ++k) {
      const auto& t = code[k];
      if ((t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword) && k + 1 < e && is_punct(code[k + 1], '(')) {
        bool method = k > 0 && is_member_access(code[k - 1]);
        if (checklist_.is_sanitizer(cat, t.lexeme, method)) {
          k = std::min(match_close(code, k + 1), e);
          continue;
        }
        if (checklist_.is_source_function(t.lexeme, method)) {
          add({t.lexeme + "()", SourceKind::SourceFunction, to_lower(t.lexeme), t.line});
          if (first_only) return out;
          k = std::min(match_close(code, k + 1), e);
        }
        continue;
      }
      if (t.kind == TokenKind::Variable) {
        // Receiver of a method call is an object, not a data operand.
        if (k + 3 < e && is_op(code[k + 1], "->") && code[k + 2].kind == TokenKind::Identifier && is_punct(code[k + 3], '(')) {
          continue;
        }
        auto [name, last] = read_operand(code, k, e);
        if (auto d = operand(unit, name, scope, cat, t.line)) {
          add(std::move(*d));
          if (first_only) return out;
        }
        k = last;
        continue;
      }
      if (t.kind == TokenKind::StringLiteral) {
        for (const auto& v : t.interpolated) {
          if (auto d = operand(unit, v, scope, cat, t.line)) {
            add(std::move(*d));
            if (first_only) return out;
          }
        }
      }
    }
    return out;
  }

 private:
  const Checklist& checklist_;
  ScanContext& ctx_;

  std::optional<TaintDescriptor> operand(std::size_t unit, const std::string& name, const std::string& scope, Category cat,
                                         std::size_t line) {
    if (checklist_.is_source_variable(name)) return TaintDescriptor{name, SourceKind::Superglobal, name, line};
    if (auto r = resolve(unit, name, scope, cat, line)) {
      return TaintDescriptor{name, r->kind, r->source, r->line};
    }
    return std::nullopt;
  }

  std::string effective_scope(const std::string& name, const std::string& scope) const {
    if (name.rfind("$this->", 0) == 0) {
      auto cls = class_of_scope(scope);
      return cls.empty() ? std::string() : "class:" + cls;
    }
    if (scope.rfind("fn:", 0) == 0) {
      auto base = name.substr(0, name.find("->"));
      auto it = ctx_.globals_in_scope.find(scope);
      if (it != ctx_.globals_in_scope.end() && it->second.count(base)) return {};
    }
    return scope;
  }

  std::optional<TaintDescriptor> resolve(std::size_t unit, const std::string& name, const std::string& scope, Category cat,
                                         std::size_t line) {
    if (name == "$this") return std::nullopt;
    auto base = name.substr(0, name.find("->"));
    if (checklist_.is_source_variable(base)) return TaintDescriptor{name, SourceKind::Superglobal, base, line};

    auto key = var_key(effective_scope(name, scope), name);
    auto memo_key = key + "#" + std::string(category_id(cat));
    if (auto m = ctx_.memo.find(memo_key); m != ctx_.memo.end()) return m->second;
    if (std::find(ctx_.dependency_stack.begin(), ctx_.dependency_stack.end(), key) != ctx_.dependency_stack.end()) {
      ++ctx_.cycle_cuts;
      return std::nullopt;
    }
    auto it = ctx_.declared_variables.find(key);
    if (it == ctx_.declared_variables.end() || it->second.assignments.empty()) {
      if (base != name) return resolve(unit, base, scope, cat, line);
      return TaintDescriptor{name, SourceKind::Unresolved, name, line};
    }
    const auto cuts_before = ctx_.cycle_cuts;
    ctx_.dependency_stack.push_back(key);
    std::optional<TaintDescriptor> result;
    const auto assignments = it->second.assignments;
    for (const auto& a : assignments) {
      auto found = collect(a.unit, a.begin, a.end, a.scope, cat, true);
      if (!found.empty()) {
        result = found.front();
        break;
      }
    }
    ctx_.dependency_stack.pop_back();
    if (ctx_.cycle_cuts == cuts_before) ctx_.memo[memo_key] = result;
    return result;
  }
};

struct SinkSite {
  std::string name;
  bool method = false;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Recognizes a sink-shaped call at code[i]: `name(...)`, `->name(...)`,
// echo/print/include statements, and the `<?=` short echo.
std::optional<SinkSite> sink_site(const std::vector<Token>& code, std::size_t i) {
  const auto& t = code[i];
  if (t.kind == TokenKind::OpenTag && t.lexeme == "<?=") {
    return SinkSite{"echo", false, i + 1, expression_end(code, i + 1, false)};
  }
  if (t.kind != TokenKind::Identifier && t.kind != TokenKind::Keyword) return std::nullopt;
  if (i > 0) {
    const auto& prev = code[i - 1];
    if (is_kw(prev, "function") || is_kw(prev, "new") || is_kw(prev, "fn")) return std::nullopt;
    if (is_op(prev, "&") && i > 1 && is_kw(code[i - 2], "function")) return std::nullopt;
  }
  bool method = i > 0 && is_member_access(code[i - 1]);
  auto lower = to_lower(t.lexeme);
  if (!method && (is_kw(t, "echo") || is_kw(t, "print"))) {
    return SinkSite{lower, false, i + 1, expression_end(code, i + 1, false)};
  }
  if (!method && t.kind == TokenKind::Keyword && is_include_keyword(t.lexeme)) {
    return SinkSite{lower, false, i + 1, expression_end(code, i + 1, true)};
  }
  if (i + 1 < code.size() && is_punct(code[i + 1], '(')) {
    return SinkSite{lower, method, i + 2, match_close(code, i + 1)};
  }
  return std::nullopt;
}

std::string normal_path(const fs::path& p) { return p.lexically_normal().generic_string(); }

// Walks a unit once: computes scopes, records assignments, globals and
// literal includes, and maintains the function/class registers.
void index_unit(ScanContext& ctx, std::size_t unit_idx) {
  auto& unit = ctx.units[unit_idx];
  const auto& code = unit.code;
  unit.scope.assign(code.size(), {});

  struct Frame {
    bool is_function;
    std::string key;
    std::string class_name;
    int depth;
  };
  std::vector<Frame> frames;
  int brace_depth = 0;
  int closure_count = 0;
  std::optional<std::string> pending_fn;
  std::optional<std::string> pending_class;
  std::size_t params_close = 0;  // index of `)` closing the pending function's parameters

  auto current_scope = [&]() -> std::string {
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
      if (it->is_function) return it->key;
      return "class:" + it->class_name;
    }
    return {};
  };
  auto current_class = [&]() -> std::string {
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
      if (!it->is_function) return it->class_name;
    }
    return {};
  };
  auto record = [&](const std::string& scope, const std::string& name, std::size_t b, std::size_t e, std::size_t line) {
    std::string eff = scope;
    std::string var = name;
    if (scope.rfind("class:", 0) == 0 && name.rfind("$this->", 0) != 0) {
      var = "$this->" + name.substr(1);  // property declaration
    }
    if (var.rfind("$this->", 0) == 0) {
      auto cls = class_of_scope(scope);
      eff = cls.empty() ? std::string() : "class:" + cls;
    } else if (scope.rfind("fn:", 0) == 0) {
      auto g = ctx.globals_in_scope.find(scope);
      if (g != ctx.globals_in_scope.end() && g->second.count(var.substr(0, var.find("->")))) eff.clear();
    }
    ctx.declared_variables[var_key(eff, var)].assignments.push_back({unit_idx, b, e, line, scope});
  };

  const fs::path file(unit.path);
  for (std::size_t i = 0; i < code.size(); ++i) {
    const auto& t = code[i];
    const bool prev_member = i > 0 && is_member_access(code[i - 1]);

    if (is_kw(t, "function") && !prev_member) {
      std::size_t j = i + 1;
      if (j < code.size() && is_op(code[j], "&")) ++j;
      std::string name;
      if (j < code.size() && (code[j].kind == TokenKind::Identifier || code[j].kind == TokenKind::Keyword)) {
        name = code[j].lexeme;
        ++j;
      } else {
        name = "closure#" + std::to_string(++closure_count);
      }
      auto cls = current_class();
      pending_fn = "fn:" + (cls.empty() ? std::string() : cls + "::") + name;
      params_close = (j < code.size() && is_punct(code[j], '(')) ? match_close(code, j) : i;
    } else if ((is_kw(t, "class") || is_kw(t, "interface") || is_kw(t, "trait")) && !prev_member) {
      if (i + 1 < code.size() && code[i + 1].kind == TokenKind::Identifier) {
        pending_class = code[i + 1].lexeme;
      } else {
        pending_class = "anonymous#" + std::to_string(++closure_count);
      }
    }

    if (is_punct(t, '{')) {
      if (pending_fn && i > params_close) {
        frames.push_back({true, *pending_fn, current_class(), brace_depth});
        pending_fn.reset();
        ctx.in_function = true;
      } else if (pending_class && !pending_fn) {
        frames.push_back({false, {}, *pending_class, brace_depth});
        pending_class.reset();
        ctx.in_class = true;
      }
      ++brace_depth;
    } else if (is_punct(t, '}')) {
      --brace_depth;
      if (!frames.empty() && frames.back().depth == brace_depth) {
        frames.pop_back();
        ctx.in_function = std::any_of(frames.begin(), frames.end(), [](const Frame& f) { return f.is_function; });
        ctx.in_class = std::any_of(frames.begin(), frames.end(), [](const Frame& f) { return !f.is_function; });
      }
    } else if (is_punct(t, ';') && pending_fn && i > params_close) {
      pending_fn.reset();  // abstract or interface method
    }

    const std::string scope = pending_fn ? *pending_fn : current_scope();
    unit.scope[i] = scope;
    const bool in_params = pending_fn && i <= params_close;

    if (is_kw(t, "global")) {
      for (std::size_t j = i + 1; j < code.size() && !is_punct(code[j], ';'); ++j) {
        if (code[j].kind == TokenKind::Variable) ctx.globals_in_scope[scope].insert(code[j].lexeme);
      }
    } else if (t.kind == TokenKind::Keyword && is_include_keyword(t.lexeme) && !prev_member) {
      auto e = expression_end(code, i + 1, true);
      if (auto p = static_path(code, i + 1, e, file)) {
        fs::path target(*p);
        if (target.is_relative()) target = file.parent_path() / target;
        unit.static_includes.push_back(normal_path(target));
      }
    } else if (is_kw(t, "list") && i + 1 < code.size() && is_punct(code[i + 1], '(')) {
      auto close = match_close(code, i + 1);
      if (close + 1 < code.size() && is_op(code[close + 1], "=")) {
        auto rhs_e = expression_end(code, close + 2, true);
        for (std::size_t j = i + 2; j < close; ++j) {
          if (code[j].kind == TokenKind::Variable) record(scope, code[j].lexeme, close + 2, rhs_e, code[j].line);
        }
      }
    } else if (is_punct(t, '[') && (i == 0 || is_statement_boundary(code[i - 1]))) {
      auto close = match_close(code, i);
      if (close + 1 < code.size() && is_op(code[close + 1], "=")) {
        auto rhs_e = expression_end(code, close + 2, true);
        for (std::size_t j = i + 1; j < close; ++j) {
          if (code[j].kind == TokenKind::Variable) record(scope, code[j].lexeme, close + 2, rhs_e, code[j].line);
        }
      }
    } else if (is_kw(t, "foreach") && i + 1 < code.size() && is_punct(code[i + 1], '(')) {
      auto close = match_close(code, i + 1);
      std::size_t as = close;
      int depth = 0;
      for (std::size_t j = i + 2; j < close; ++j) {
        if (is_opener(code[j])) ++depth;
        else if (is_closer(code[j])) --depth;
        else if (depth == 0 && is_kw(code[j], "as")) {
          as = j;
          break;
        }
      }
      for (std::size_t j = as + 1; j < close; ++j) {
        if (code[j].kind == TokenKind::Variable) record(scope, code[j].lexeme, i + 2, as, code[j].line);
      }
    } else if (t.kind == TokenKind::Variable && !in_params && !prev_member && !(i > 0 && is_op(code[i - 1], "$"))) {
      auto [name, last] = read_operand(code, i, code.size());
      std::size_t j = last + 1;
      while (j < code.size() && is_punct(code[j], '[')) j = match_close(code, j) + 1;
      if (j < code.size() && is_assign_op(code[j])) {
        std::size_t rhs_b = j + 1;
        if (rhs_b < code.size() && is_op(code[rhs_b], "&")) ++rhs_b;
        record(scope, name, rhs_b, expression_end(code, rhs_b, true), t.line);
      }
    }
  }
  if (!frames.empty() || brace_depth != 0) {
    ctx.diagnostics.push_back({unit.path, code.empty() ? 0 : code.back().line, "unbalanced braces"});
  }
  ctx.in_function = false;
  ctx.in_class = false;
}

}  // namespace

std::size_t ScanContext::declare(const php::TokenStream& stream, std::string_view source) {
  SourceUnit unit;
  unit.path = stream.source_path;
  for (auto l : split_lines(source)) unit.lines.emplace_back(l);
  unit.stream = stream;
  for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
    const auto& t = stream.tokens[i];
    if (t.kind == TokenKind::Comment || t.kind == TokenKind::InlineHtml) continue;
    unit.code.push_back(t);
    unit.code_to_stream.push_back(i);
  }
  for (const auto& d : stream.diagnostics) diagnostics.push_back({stream.source_path, d.line, d.message});
  units.push_back(std::move(unit));
  memo.clear();
  index_unit(*this, units.size() - 1);
  return units.size() - 1;
}

const SourceUnit* ScanContext::find_unit(std::string_view path) const {
  for (const auto& u : units) {
    if (u.path == path) return &u;
  }
  return nullptr;
}

namespace {

// Loads `path` (or uses `source` for the root) and its literal include chain.
void gather(ScanContext& ctx, const std::string& path, const std::optional<std::string_view>& source) {
  if (std::find(ctx.file_stack.begin(), ctx.file_stack.end(), path) != ctx.file_stack.end()) return;
  if (ctx.find_unit(path)) return;
  std::string text;
  if (source) {
    text = std::string(*source);
  } else {
    try {
      text = read_file(path);
    } catch (const Error& e) {
      ctx.diagnostics.push_back({path, 0, "skipped: " + std::string(e.what())});
      return;
    }
  }
  ctx.file_stack.push_back(path);
  auto idx = ctx.declare(php::tokenize(text, path), text);
  const auto includes = ctx.units[idx].static_includes;
  for (const auto& inc : includes) {
    if (!fs::is_regular_file(inc)) {
      ctx.diagnostics.push_back({path, 0, "include target not found: " + inc});
      continue;
    }
    gather(ctx, inc, std::nullopt);
  }
  ctx.file_stack.pop_back();
}

std::vector<Finding> detect(ScanContext& ctx, std::size_t unit_idx, const Checklist& checklist) {
  std::vector<Finding> findings;
  Resolver resolver(checklist, ctx);
  const std::size_t n = ctx.units[unit_idx].code.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& unit = ctx.units[unit_idx];
    auto site = sink_site(unit.code, i);
    if (!site) continue;
    for (auto cat : kAllCategories) {
      if (!checklist.is_sink(cat, site->name, site->method)) continue;
      std::vector<TaintDescriptor> children;
      if (cat == Category::FileInclusion && is_include_keyword(site->name)) {
        if (static_path(unit.code, site->begin, site->end, fs::path(unit.path))) continue;
        children = resolver.collect(unit_idx, site->begin, site->end, unit.scope[i], cat, false);
        if (children.empty()) {
          children.push_back({join_lexemes(unit.code, site->begin, site->end), SourceKind::DynamicInclude, "", unit.code[i].line});
        }
      } else {
        children = resolver.collect(unit_idx, site->begin, site->end, unit.scope[i], cat, false);
      }
      if (children.empty()) continue;
      const auto& u = ctx.units[unit_idx];
      const auto line = u.code[i].line;
      Finding f;
      f.file = u.path;
      f.category = cat;
      f.sink = site->name;
      f.line = line;
      f.line_text = line >= 1 && line <= u.lines.size() ? u.lines[line - 1] : std::string();
      f.children = std::move(children);
      findings.push_back(std::move(f));
    }
  }
  return findings;
}

std::vector<Finding> scan_gathered(ScanContext& ctx, const Checklist& checklist) {
  std::vector<Finding> all;
  for (std::size_t u = 0; u < ctx.units.size(); ++u) {
    auto f = detect(ctx, u, checklist);
    all.insert(all.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  for (std::size_t i = 0; i < all.size(); ++i) all[i].number = i + 1;
  return all;
}

}  // namespace

std::vector<TaintDescriptor> backtrack_taint(const php::TokenStream& stream, std::size_t call_site, Category category,
                                             const Checklist& checklist, ScanContext& ctx) {
  std::size_t unit_idx = ctx.units.size();
  for (std::size_t u = 0; u < ctx.units.size(); ++u) {
    if (ctx.units[u].path == stream.source_path && ctx.units[u].stream == stream) unit_idx = u;
  }
  if (unit_idx == ctx.units.size()) unit_idx = ctx.declare(stream, {});
  const auto& unit = ctx.units[unit_idx];
  auto pos = std::find(unit.code_to_stream.begin(), unit.code_to_stream.end(), call_site);
  if (pos == unit.code_to_stream.end()) return {};
  auto i = static_cast<std::size_t>(pos - unit.code_to_stream.begin());
  auto site = sink_site(unit.code, i);
  if (!site) return {};
  return Resolver(checklist, ctx).collect(unit_idx, site->begin, site->end, unit.scope[i], category, false);
}

std::vector<Finding> scan_file(const std::string& path, const Checklist& checklist, ScanContext& ctx) {
  gather(ctx, normal_path(path), std::nullopt);
  return scan_gathered(ctx, checklist);
}

std::vector<Finding> scan_source(std::string_view source, const std::string& path, const Checklist& checklist,
                                 ScanContext& ctx) {
  gather(ctx, normal_path(path), source);
  return scan_gathered(ctx, checklist);
}

ScanResult scan_project(const std::string& root, const Checklist& checklist, const ScanOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  fs::path root_path(root);
  if (!fs::exists(root_path)) throw Error("scan root does not exist: " + root);

  std::vector<fs::path> files;
  fs::path base = root_path;
  if (fs::is_regular_file(root_path)) {
    files.push_back(root_path);
    base = root_path.parent_path();
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(root_path)) {
      if (entry.is_regular_file() && to_lower(entry.path().extension().string()) == ".php") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
      return a.lexically_relative(root_path).generic_string() < b.lexically_relative(root_path).generic_string();
    });
  }
  const auto base_norm = base.lexically_normal();

  auto display = [&](const std::string& file) {
    if (!options.path_prefix) return file;
    auto rel = fs::path(file).lexically_relative(base_norm).generic_string();
    std::string prefix = *options.path_prefix;
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return prefix + "/" + rel;
  };

  ScanResult result;
  std::set<std::tuple<std::string, std::size_t, Category, std::string>> seen;
  for (const auto& file : files) {
    ScanContext ctx;
    auto findings = scan_file(file.string(), checklist, ctx);
    ++result.files_scanned;
    for (auto& f : findings) {
      if (!seen.emplace(f.file, f.line, f.category, f.sink).second) continue;
      f.file = display(f.file);
      f.number = result.findings.size() + 1;
      result.findings.push_back(std::move(f));
    }
    for (auto& d : ctx.diagnostics) result.diagnostics.push_back(std::move(d));
  }
  result.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
  return result;
}

}  // namespace phpguard

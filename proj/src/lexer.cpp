#include "phpguard/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "phpguard/strings.hpp"

namespace phpguard::php {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::OpenTag: return "OpenTag";
    case TokenKind::CloseTag: return "CloseTag";
    case TokenKind::Identifier: return "Identifier";
    case TokenKind::Variable: return "Variable";
    case TokenKind::StringLiteral: return "StringLiteral";
    case TokenKind::NumberLiteral: return "NumberLiteral";
    case TokenKind::Operator: return "Operator";
    case TokenKind::Punctuation: return "Punctuation";
    case TokenKind::Comment: return "Comment";
    case TokenKind::InlineHtml: return "InlineHtml";
    case TokenKind::Keyword: return "Keyword";
  }
  return "?";
}

bool is_keyword(std::string_view word) {
  static const std::unordered_set<std::string> kKeywords = {
      "abstract", "and", "array", "as", "break", "callable", "case", "catch", "class", "clone",
      "const", "continue", "declare", "default", "die", "do", "echo", "else", "elseif", "empty",
      "enddeclare", "endfor", "endforeach", "endif", "endswitch", "endwhile", "eval", "exit",
      "extends", "final", "finally", "fn", "for", "foreach", "function", "global", "goto", "if",
      "implements", "include", "include_once", "instanceof", "insteadof", "interface", "isset",
      "list", "match", "namespace", "new", "or", "print", "private", "protected", "public",
      "readonly", "require", "require_once", "return", "static", "switch", "throw", "trait", "try",
      "unset", "use", "var", "while", "xor", "yield"};
  return kKeywords.count(to_lower(word)) != 0;
}

namespace {

bool is_ident_start(char c) {
  auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_' || u >= 0x80;
}

bool is_ident_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Longest-first so a greedy scan picks `===` before `==` before `=`.
constexpr std::array<std::string_view, 44> kOperators = {
    "<=>", "===", "!==", "**=", "...", "<<=", ">>=", "\?\?=", "?->",
    "==",  "!=",  "<>",  "<=",  ">=",  "&&",  "||",  "++",  "--", "+=", "-=", "*=", "/=",
    ".=",  "%=",  "&=",  "|=",  "^=",  "->",  "=>",  "::",  "<<", ">>", "??", "**",
    "+",   "-",   "*",   "/",   "%",   "=",   "<",   ">",   "!",  "."};
constexpr std::string_view kSingleOperators = "&|^~?:@\\$";
constexpr std::string_view kPunctuation = "()[]{};,";

/// Collects `$name` references interpolated in double-quoted string content.
std::vector<std::string> scan_interpolations(std::string_view body) {
  std::vector<std::string> vars;
  auto push = [&](std::string name) {
    if (std::find(vars.begin(), vars.end(), name) == vars.end()) vars.push_back(std::move(name));
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '\\') {
      ++i;
      continue;
    }
    if (c != '$') continue;
    if (i + 1 < body.size() && body[i + 1] == '{') {
      // ${name}
      std::size_t j = i + 2;
      std::size_t start = j;
      while (j < body.size() && is_ident_char(body[j])) ++j;
      if (j > start) push("$" + std::string(body.substr(start, j - start)));
      i = j;
      continue;
    }
    if (i + 1 < body.size() && is_ident_start(body[i + 1])) {
      std::size_t j = i + 1;
      while (j < body.size() && is_ident_char(body[j])) ++j;
      push(std::string(body.substr(i, j - i)));
      i = j - 1;
    }
  }
  return vars;
}

class Lexer {
 public:
  Lexer(std::string_view src, std::string path) : src_(src) { out_.source_path = std::move(path); }

  TokenStream run() {
    while (pos_ < src_.size()) {
      if (in_php_) {
        lex_php();
      } else {
        lex_html();
      }
    }
    return std::move(out_);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  bool in_php_ = false;
  TokenStream out_;

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  bool at(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  // Moves to `to`, counting line terminators (CRLF counts once).
  void advance_to(std::size_t to) {
    while (pos_ < to) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
      } else if (c == '\r') {
        if (!(pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n')) ++line_;
      }
      ++pos_;
    }
  }

  void emit(TokenKind kind, std::size_t end, std::vector<std::string> interpolated = {}) {
    Token t{kind, std::string(src_.substr(pos_, end - pos_)), line_, pos_, std::move(interpolated)};
    out_.tokens.push_back(std::move(t));
    advance_to(end);
  }

  void diag(std::string msg) { out_.diagnostics.push_back({line_, std::move(msg)}); }

  // Finds the next `<?php` (followed by whitespace/EOF) or `<?=` at or after `from`.
  std::pair<std::size_t, std::size_t> find_open_tag(std::size_t from) const {
    while (true) {
      auto p = src_.find("<?", from);
      if (p == std::string_view::npos) return {std::string_view::npos, 0};
      if (p + 2 < src_.size() && src_[p + 2] == '=') return {p, 3};
      if (starts_with_icase(src_.substr(p + 2), "php")) {
        std::size_t after = p + 5;
        if (after >= src_.size() || is_space(src_[after])) return {p, 5};
      }
      from = p + 2;
    }
  }

  void lex_html() {
    auto [open, len] = find_open_tag(pos_);
    std::size_t html_end = open == std::string_view::npos ? src_.size() : open;
    if (html_end > pos_) emit(TokenKind::InlineHtml, html_end);
    if (open != std::string_view::npos) {
      emit(TokenKind::OpenTag, open + len);
      in_php_ = true;
    }
  }

  void lex_php() {
    char c = peek();
    if (is_space(c)) {
      std::size_t j = pos_;
      while (j < src_.size() && is_space(src_[j])) ++j;
      advance_to(j);
      return;
    }
    if (at("?>")) {
      emit(TokenKind::CloseTag, pos_ + 2);
      in_php_ = false;
      return;
    }
    if (c == '#' || at("//")) {
      std::size_t j = pos_;
      while (j < src_.size() && src_[j] != '\n' && src_[j] != '\r' && src_.substr(j, 2) != "?>") ++j;
      emit(TokenKind::Comment, j);
      return;
    }
    if (at("/*")) {
      auto close = src_.find("*/", pos_ + 2);
      if (close == std::string_view::npos) {
        diag("unterminated block comment");
        emit(TokenKind::Comment, src_.size());
      } else {
        emit(TokenKind::Comment, close + 2);
      }
      return;
    }
    if (c == '$' && is_ident_start(peek(1))) {
      std::size_t j = pos_ + 1;
      while (j < src_.size() && is_ident_char(src_[j])) ++j;
      emit(TokenKind::Variable, j);
      return;
    }
    if (at("<<<")) {
      if (lex_heredoc()) return;
    }
    if (is_ident_start(c)) {
      std::size_t j = pos_;
      while (j < src_.size() && is_ident_char(src_[j])) ++j;
      auto word = src_.substr(pos_, j - pos_);
      emit(is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, j);
      return;
    }
    if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
      lex_number();
      return;
    }
    if (c == '\'' || c == '"' || c == '`') {
      lex_quoted(c);
      return;
    }
    for (auto op : kOperators) {
      if (at(op)) {
        emit(TokenKind::Operator, pos_ + op.size());
        return;
      }
    }
    if (kPunctuation.find(c) != std::string_view::npos) {
      emit(TokenKind::Punctuation, pos_ + 1);
      return;
    }
    if (kSingleOperators.find(c) == std::string_view::npos) diag("unexpected byte in PHP code");
    emit(TokenKind::Operator, pos_ + 1);
  }

  void lex_number() {
    std::size_t j = pos_;
    if (src_[j] == '0' && j + 1 < src_.size() && (src_[j + 1] == 'x' || src_[j + 1] == 'X' || src_[j + 1] == 'b' || src_[j + 1] == 'B')) {
      j += 2;
      while (j < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
      emit(TokenKind::NumberLiteral, j);
      return;
    }
    while (j < src_.size() && (is_digit(src_[j]) || src_[j] == '_')) ++j;
    if (j < src_.size() && src_[j] == '.' && j + 1 < src_.size() && is_digit(src_[j + 1])) {
      ++j;
      while (j < src_.size() && (is_digit(src_[j]) || src_[j] == '_')) ++j;
    } else if (j < src_.size() && src_[j] == '.' && !(j + 1 < src_.size() && (src_[j + 1] == '.' || src_[j + 1] == '='))) {
      ++j;  // `1.` is a float literal
    }
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && is_digit(src_[k])) {
        j = k;
        while (j < src_.size() && is_digit(src_[j])) ++j;
      }
    }
    emit(TokenKind::NumberLiteral, j);
  }

  void lex_quoted(char quote) {
    std::size_t j = pos_ + 1;
    bool closed = false;
    while (j < src_.size()) {
      if (src_[j] == '\\') {
        j += 2;
        continue;
      }
      if (src_[j] == quote) {
        closed = true;
        ++j;
        break;
      }
      ++j;
    }
    j = std::min(j, src_.size());
    if (!closed) diag("unterminated string literal");
    std::vector<std::string> vars;
    if (quote != '\'') {
      auto body = src_.substr(pos_ + 1, (closed ? j - 1 : j) - (pos_ + 1));
      vars = scan_interpolations(body);
    }
    emit(TokenKind::StringLiteral, j, std::move(vars));
  }

  // Heredoc / nowdoc. Returns false when `<<<` does not start one.
  bool lex_heredoc() {
    std::size_t j = pos_ + 3;
    while (j < src_.size() && (src_[j] == ' ' || src_[j] == '\t')) ++j;
    char quote = '\0';
    if (j < src_.size() && (src_[j] == '\'' || src_[j] == '"')) quote = src_[j++];
    std::size_t id_start = j;
    if (j >= src_.size() || !is_ident_start(src_[j])) return false;
    while (j < src_.size() && is_ident_char(src_[j])) ++j;
    std::string_view id = src_.substr(id_start, j - id_start);
    if (quote != '\0') {
      if (j >= src_.size() || src_[j] != quote) return false;
      ++j;
    }
    if (j >= src_.size() || (src_[j] != '\n' && src_[j] != '\r')) return false;
    std::size_t body_start = j;
    // Scan line by line for the closing identifier (leading whitespace allowed).
    std::size_t line_start = j;
    while (line_start < src_.size()) {
      while (line_start < src_.size() && (src_[line_start] == '\n' || src_[line_start] == '\r')) ++line_start;
      std::size_t k = line_start;
      while (k < src_.size() && (src_[k] == ' ' || src_[k] == '\t')) ++k;
      if (src_.substr(k, id.size()) == id && (k + id.size() >= src_.size() || !is_ident_char(src_[k + id.size()]))) {
        std::size_t end = k + id.size();
        std::vector<std::string> vars;
        if (quote != '\'') vars = scan_interpolations(src_.substr(body_start, line_start - body_start));
        emit(TokenKind::StringLiteral, end, std::move(vars));
        return true;
      }
      while (line_start < src_.size() && src_[line_start] != '\n' && src_[line_start] != '\r') ++line_start;
    }
    diag("unterminated heredoc");
    std::vector<std::string> vars;
    if (quote != '\'') vars = scan_interpolations(src_.substr(body_start));
    emit(TokenKind::StringLiteral, src_.size(), std::move(vars));
    return true;
  }
};

}  // namespace

TokenStream tokenize(std::string_view source, std::string path) {
  return Lexer(source, std::move(path)).run();
}

}  // namespace phpguard::php

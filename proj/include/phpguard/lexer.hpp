#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace phpguard::php {

enum class TokenKind {
  OpenTag,
  CloseTag,
  Identifier,
  Variable,
  StringLiteral,
  NumberLiteral,
  Operator,
  Punctuation,
  Comment,
  InlineHtml,
  Keyword,
};

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string lexeme;
  std::size_t line = 1;    // line on which the lexeme starts, 1-based
  std::size_t offset = 0;  // byte offset of the lexeme in the source
  // Variables interpolated into a double-quoted string or heredoc, e.g. "$id".
  std::vector<std::string> interpolated;

  bool is(TokenKind k, std::string_view text) const { return kind == k && lexeme == text; }
  bool operator==(const Token&) const = default;
};

struct LexDiagnostic {
  std::size_t line;
  std::string message;
  bool operator==(const LexDiagnostic&) const = default;
};

struct TokenStream {
  std::vector<Token> tokens;
  std::string source_path;
  std::vector<LexDiagnostic> diagnostics;

  auto begin() const { return tokens.begin(); }
  auto end() const { return tokens.end(); }
  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  const Token& operator[](std::size_t i) const { return tokens[i]; }
  bool operator==(const TokenStream&) const = default;
};

/// Tokenizes PHP source. Total over arbitrary bytes: malformed constructs
/// (unterminated strings, comments, heredocs) consume to end of input and
/// are reported in `diagnostics`.
TokenStream tokenize(std::string_view source, std::string path = {});

/// True for PHP keywords the scanner treats as language constructs.
bool is_keyword(std::string_view word);

}  // namespace phpguard::php

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Minimal XML for the profile and model files: elements, attributes, text,
// comments and a prolog. No namespaces, DTDs or processing instructions.
namespace phpguard::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;  // concatenated character data, entities decoded
  std::vector<Element> children;
  std::size_t line = 0;

  std::optional<std::string> attr(std::string_view key) const;
};

/// Throws phpguard::Error("<source>:<line>: <message>") on malformed input.
Element parse(std::string_view text, std::string_view source = "<xml>");

/// Serializes with a prolog and two-space indentation. Elements without
/// children are written on one line.
std::string write(const Element& root);

std::string escape(std::string_view text);

bool is_valid_name(std::string_view name);
/// Maps any string to a valid element name: disallowed bytes become `_xHH_`
/// (and so does every '_' followed by 'x') so that
/// decode_name(encode_name(s)) == s.
std::string encode_name(std::string_view name);
std::string decode_name(std::string_view name);

}  // namespace phpguard::xml

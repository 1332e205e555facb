#include "phpguard/xml.hpp"

#include <cctype>

#include "phpguard/strings.hpp"

namespace phpguard::xml {

std::optional<std::string> Element::attr(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return v;
  }
  return std::nullopt;
}

namespace {

bool name_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool name_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '-' || c == '.'; }
bool hex_digit(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }

bool escape_at(std::string_view s, std::size_t i) {
  return i + 4 < s.size() && s[i] == '_' && s[i + 1] == 'x' && hex_digit(s[i + 2]) && hex_digit(s[i + 3]) &&
         s[i + 4] == '_';
}

class Parser {
 public:
  Parser(std::string_view text, std::string_view source) : s_(text), source_(source) {}

  Element document() {
    skip_misc();
    if (starts("<?xml")) {
      auto end = s_.find("?>", pos_);
      if (end == std::string_view::npos) fail("unterminated prolog");
      advance_to(end + 2);
    }
    skip_misc();
    if (!starts("<")) fail("expected root element");
    auto root = element();
    skip_misc();
    if (pos_ != s_.size()) fail("content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(std::string(source_) + ":" + std::to_string(line_) + ": " + msg);
  }

  bool starts(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void advance_to(std::size_t to) {
    for (; pos_ < to && pos_ < s_.size(); ++pos_) {
      if (s_[pos_] == '\n') ++line_;
    }
  }

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) advance_to(pos_ + 1);
  }

  void skip_misc() {
    for (;;) {
      skip_space();
      if (!starts("<!--")) return;
      auto end = s_.find("-->", pos_);
      if (end == std::string_view::npos) fail("unterminated comment");
      advance_to(end + 3);
    }
  }

  std::string name() {
    auto b = pos_;
    if (pos_ >= s_.size() || !name_start(static_cast<unsigned char>(s_[pos_]))) fail("expected a name");
    while (pos_ < s_.size() && name_char(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  std::string decode(std::string_view raw) {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity");
      auto ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "amp") out += '&';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (ent.size() > 1 && ent[0] == '#') {
        unsigned long code = 0;
        try {
          code = ent[1] == 'x' ? std::stoul(std::string(ent.substr(2)), nullptr, 16) : std::stoul(std::string(ent.substr(1)));
        } catch (const std::exception&) {
          fail("bad character reference");
        }
        if (code > 127) fail("non-ASCII character reference");
        out += static_cast<char>(code);
      } else {
        fail("unknown entity &" + std::string(ent) + ";");
      }
      i = semi;
    }
    return out;
  }

  Element element() {
    Element e;
    e.line = line_;
    advance_to(pos_ + 1);  // '<'
    e.name = name();
    for (;;) {
      skip_space();
      if (starts("/>")) {
        advance_to(pos_ + 2);
        return e;
      }
      if (starts(">")) {
        advance_to(pos_ + 1);
        break;
      }
      auto key = name();
      skip_space();
      if (!starts("=")) fail("expected '=' after attribute " + key);
      advance_to(pos_ + 1);
      skip_space();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted attribute value");
      char q = s_[pos_];
      auto end = s_.find(q, pos_ + 1);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      auto value = decode(s_.substr(pos_ + 1, end - pos_ - 1));
      advance_to(end + 1);
      if (e.attr(key)) fail("duplicate attribute " + key);
      e.attributes.emplace_back(key, value);
    }
    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated element <" + e.name + ">");
      if (starts("<!--")) {
        auto end = s_.find("-->", pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        advance_to(end + 3);
      } else if (starts("</")) {
        advance_to(pos_ + 2);
        auto closing = name();
        if (closing != e.name) fail("mismatched </" + closing + ">, expected </" + e.name + ">");
        skip_space();
        if (!starts(">")) fail("expected '>'");
        advance_to(pos_ + 1);
        e.text = std::string(trim(e.text));
        return e;
      } else if (starts("<")) {
        e.children.push_back(element());
      } else {
        auto end = s_.find('<', pos_);
        if (end == std::string_view::npos) end = s_.size();
        e.text += decode(s_.substr(pos_, end - pos_));
        advance_to(end);
      }
    }
  }

  std::string_view s_;
  std::string_view source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

void write_element(const Element& e, int depth, std::string& out) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += "<" + e.name;
  for (const auto& [k, v] : e.attributes) out += " " + k + "=\"" + escape(v) + "\"";
  if (e.children.empty() && e.text.empty()) {
    out += "/>\n";
    return;
  }
  out += ">";
  out += escape(e.text);
  if (!e.children.empty()) {
    out += "\n";
    for (const auto& c : e.children) write_element(c, depth + 1, out);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
  }
  out += "</" + e.name + ">\n";
}

}  // namespace

Element parse(std::string_view text, std::string_view source) { return Parser(text, source).document(); }

std::string write(const Element& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write_element(root, 0, out);
  return out;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool is_valid_name(std::string_view name) {
  if (name.empty() || !name_start(static_cast<unsigned char>(name[0]))) return false;
  for (char c : name) {
    if (!name_char(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string encode_name(std::string_view name) {
  static const char* hex = "0123456789ABCDEF";
  if (name.empty()) throw Error("cannot encode an empty element name");
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    auto c = static_cast<unsigned char>(name[i]);
    bool ok = i == 0 ? name_start(c) : name_char(c);
    // An underscore followed by 'x' is always encoded, so a literal '_' in the
    // output never starts something that decodes as an escape.
    const bool clash = c == '_' && i + 1 < name.size() && name[i + 1] == 'x';
    if (ok && !clash) {
      out += static_cast<char>(c);
    } else {
      out += "_x";
      out += hex[c >> 4];
      out += hex[c & 15];
      out += '_';
    }
  }
  return out;
}

std::string decode_name(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (escape_at(name, i)) {
      out += static_cast<char>(std::stoi(std::string(name.substr(i + 2, 2)), nullptr, 16));
      i += 4;
    } else {
      out += name[i];
    }
  }
  return out;
}

}  // namespace phpguard::xml

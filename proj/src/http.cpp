#include "phpguard/http.hpp"

#include <charconv>
#include <cctype>

#include "phpguard/strings.hpp"

namespace phpguard::http {

std::optional<std::string> find_header(const Headers& headers, std::string_view name) {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return std::nullopt;
}

std::vector<std::string> find_headers(const Headers& headers, std::string_view name) {
  std::vector<std::string> out;
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) out.push_back(v);
  }
  return out;
}

std::string Request::path() const {
  auto end = target.find_first_of("?#");
  return target.substr(0, end);
}

std::optional<std::size_t> head_end(std::string_view buffer) {
  auto crlf = buffer.find("\r\n\r\n");
  auto lf = buffer.find("\n\n");
  if (crlf == std::string_view::npos && lf == std::string_view::npos) return std::nullopt;
  if (lf == std::string_view::npos || (crlf != std::string_view::npos && crlf < lf)) return crlf + 4;
  return lf + 2;
}

namespace {

std::vector<std::string_view> head_lines(std::string_view head) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < head.size()) {
    auto nl = head.find('\n', pos);
    if (nl == std::string_view::npos) nl = head.size();
    auto line = head.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

Headers parse_headers(const std::vector<std::string_view>& lines) {
  Headers headers;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto colon = lines[i].find(':');
    if (colon == std::string_view::npos || colon == 0 || std::isspace(static_cast<unsigned char>(lines[i][0]))) {
      throw Error("malformed header line: " + std::string(lines[i]));
    }
    headers.emplace_back(std::string(lines[i].substr(0, colon)), std::string(trim(lines[i].substr(colon + 1))));
  }
  return headers;
}

bool valid_version(std::string_view v) { return v == "HTTP/1.0" || v == "HTTP/1.1"; }

std::string decode_chunked(std::string_view body) {
  std::string out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto nl = body.find("\r\n", pos);
    if (nl == std::string_view::npos) break;
    auto size_text = trim(body.substr(pos, nl - pos));
    size_text = size_text.substr(0, size_text.find(';'));
    std::size_t size = 0;
    auto [p, ec] = std::from_chars(size_text.data(), size_text.data() + size_text.size(), size, 16);
    if (ec != std::errc() || p != size_text.data() + size_text.size()) throw Error("malformed chunk size");
    pos = nl + 2;
    if (size == 0) break;
    out.append(body.substr(pos, size));
    pos += size + 2;
  }
  return out;
}

}  // namespace

std::size_t content_length(const Headers& headers) {
  auto v = find_header(headers, "Content-Length");
  if (!v) return 0;
  std::size_t n = 0;
  auto t = trim(*v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
  if (ec != std::errc() || p != t.data() + t.size()) throw Error("malformed Content-Length: " + *v);
  return n;
}

std::optional<std::size_t> declared_length(std::string_view head) {
  try {
    return content_length(parse_headers(head_lines(head)));
  } catch (const Error&) {
    return std::nullopt;
  }
}

Request parse_request(std::string_view raw) {
  auto end = head_end(raw);
  auto head = end ? raw.substr(0, *end) : raw;
  auto lines = head_lines(head);
  if (lines.empty()) throw Error("empty request");
  Request r;
  auto first = lines[0];
  auto sp1 = first.find(' ');
  auto sp2 = sp1 == std::string_view::npos ? sp1 : first.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos || first.find(' ', sp2 + 1) != std::string_view::npos) {
    throw Error("malformed request line: " + std::string(first));
  }
  r.method = std::string(first.substr(0, sp1));
  r.target = std::string(first.substr(sp1 + 1, sp2 - sp1 - 1));
  r.version = std::string(first.substr(sp2 + 1));
  if (r.method != "GET" && r.method != "POST") throw Error("unsupported method: " + r.method);
  if (r.target.empty() || r.target.front() != '/') throw Error("unsupported request target: " + r.target);
  if (!valid_version(r.version)) throw Error("unsupported HTTP version: " + r.version);
  r.headers = parse_headers(lines);
  if (find_header(r.headers, "Transfer-Encoding")) throw Error("request bodies must use Content-Length");
  auto len = content_length(r.headers);
  auto body = end ? raw.substr(*end) : std::string_view{};
  if (body.size() < len) throw Error("request body shorter than Content-Length");
  r.body = std::string(body.substr(0, len));
  return r;
}

Response parse_response(std::string_view raw) {
  auto end = head_end(raw);
  auto head = end ? raw.substr(0, *end) : raw;
  auto lines = head_lines(head);
  if (lines.empty()) throw Error("empty response");
  Response r;
  auto first = lines[0];
  auto sp1 = first.find(' ');
  if (sp1 == std::string_view::npos) throw Error("malformed status line: " + std::string(first));
  r.version = std::string(first.substr(0, sp1));
  auto rest = first.substr(sp1 + 1);
  auto sp2 = rest.find(' ');
  auto code = rest.substr(0, sp2);
  auto [p, ec] = std::from_chars(code.data(), code.data() + code.size(), r.status);
  if (ec != std::errc() || p != code.data() + code.size() || code.size() != 3) {
    throw Error("malformed status line: " + std::string(first));
  }
  if (sp2 != std::string_view::npos) r.reason = std::string(rest.substr(sp2 + 1));
  r.headers = parse_headers(lines);
  auto body = end ? raw.substr(*end) : std::string_view{};
  auto te = find_header(r.headers, "Transfer-Encoding");
  if (te && iequals(trim(*te), "chunked")) {
    r.body = decode_chunked(body);
  } else if (find_header(r.headers, "Content-Length")) {
    r.body = std::string(body.substr(0, content_length(r.headers)));
  } else {
    r.body = std::string(body);
  }
  return r;
}

std::map<std::string, std::string> parse_cookie_header(std::string_view value) {
  std::map<std::string, std::string> out;
  for (const auto& pair : split_list(value, ';')) {
    auto eq = pair.find('=');
    auto name = std::string(trim(std::string_view(pair).substr(0, eq)));
    auto val = eq == std::string::npos ? std::string() : std::string(trim(std::string_view(pair).substr(eq + 1)));
    if (!name.empty()) out.emplace(name, val);
  }
  return out;
}

std::optional<std::string> session_cookie(const Headers& headers, std::string_view cookie_name) {
  for (const auto& value : find_headers(headers, "Cookie")) {
    for (const auto& pair : split_list(value, ';')) {
      auto eq = pair.find('=');
      if (eq == std::string::npos || trim(std::string_view(pair).substr(0, eq)) != cookie_name) continue;
      auto val = trim(std::string_view(pair).substr(eq + 1));
      if (!val.empty()) return std::string(val);
    }
  }
  return std::nullopt;
}

int extract_session_flag(const Headers& headers, std::string_view cookie_name) {
  return session_cookie(headers, cookie_name) ? 1 : 0;
}

std::optional<SetCookie> parse_set_cookie(std::string_view value) {
  auto parts = split_list(value, ';');
  if (parts.empty()) return std::nullopt;
  auto eq = parts[0].find('=');
  if (eq == std::string::npos || eq == 0) return std::nullopt;
  SetCookie c;
  c.name = std::string(trim(std::string_view(parts[0]).substr(0, eq)));
  c.value = std::string(trim(std::string_view(parts[0]).substr(eq + 1)));
  c.cleared = c.value.empty() || c.value == "deleted";
  for (std::size_t i = 1; i < parts.size(); ++i) {
    std::string_view attr = parts[i];
    if (starts_with_icase(attr, "max-age=")) {
      auto v = trim(attr.substr(8));
      if (!v.empty() && (v.front() == '-' || v == "0")) c.cleared = true;
    } else if (starts_with_icase(attr, "expires=") && attr.find("1970") != std::string_view::npos) {
      c.cleared = true;
    }
  }
  return c;
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::map<std::string, std::string> parse_form(std::string_view body) {
  std::map<std::string, std::string> out;
  for (const auto& pair : split_list(body, '&')) {
    auto eq = pair.find('=');
    auto key = url_decode(std::string_view(pair).substr(0, eq));
    auto val = eq == std::string::npos ? std::string() : url_decode(std::string_view(pair).substr(eq + 1));
    out.emplace(key, val);
  }
  return out;
}

std::string build_request(std::string_view method, std::string_view target, const Headers& headers,
                          std::string_view body) {
  std::string out;
  out.append(method).append(" ").append(target).append(" HTTP/1.1\r\n");
  for (const auto& [k, v] : headers) out.append(k).append(": ").append(v).append("\r\n");
  if (!body.empty() || method == "POST") out.append("Content-Length: ").append(std::to_string(body.size())).append("\r\n");
  out.append("\r\n").append(body);
  return out;
}

std::string build_response(int status, std::string_view reason, const Headers& headers, std::string_view body) {
  std::string out = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) + "\r\n";
  for (const auto& [k, v] : headers) out.append(k).append(": ").append(v).append("\r\n");
  out.append("Content-Length: ").append(std::to_string(body.size())).append("\r\n\r\n").append(body);
  return out;
}

Url parse_url(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (!starts_with_icase(url, scheme)) throw Error("only http:// URLs are supported: " + std::string(url));
  auto rest = url.substr(scheme.size());
  auto slash = rest.find('/');
  auto authority = rest.substr(0, slash);
  Url u;
  if (slash != std::string_view::npos) u.target = std::string(rest.substr(slash));
  auto colon = authority.rfind(':');
  u.host = std::string(authority.substr(0, colon));
  if (colon != std::string_view::npos) {
    auto port = authority.substr(colon + 1);
    unsigned value = 0;
    auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc() || p != port.data() + port.size() || value == 0 || value > 65535) {
      throw Error("bad port in URL: " + std::string(url));
    }
    u.port = static_cast<unsigned short>(value);
  }
  if (u.host.empty()) throw Error("missing host in URL: " + std::string(url));
  return u;
}

}  // namespace phpguard::http

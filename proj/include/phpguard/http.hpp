#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace phpguard::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

/// First value of the named header (case-insensitive), if any.
std::optional<std::string> find_header(const Headers& headers, std::string_view name);
std::vector<std::string> find_headers(const Headers& headers, std::string_view name);

struct Request {
  std::string method;
  std::string target;   // request-target as sent, e.g. "/a/b.php?x=1"
  std::string version;  // "HTTP/1.1"
  Headers headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
  /// Path part of the target: query and fragment removed.
  std::string path() const;
};

struct Response {
  std::string version;
  int status = 0;
  std::string reason;
  Headers headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
};

/// Offset one past the blank line ending the message head, if present.
std::optional<std::size_t> head_end(std::string_view buffer);

/// Parses a complete request (head plus Content-Length body). Accepts GET and
/// POST over HTTP/1.0 and 1.1; throws phpguard::Error otherwise or when the
/// request line, a header line or the Content-Length value is malformed.
Request parse_request(std::string_view raw);

/// Parses a response head and whatever body bytes follow it. Chunked bodies
/// are decoded.
Response parse_response(std::string_view raw);

/// Declared body length of a request head; 0 when absent.
std::size_t content_length(const Headers& headers);

/// Content-Length found in a raw message head; 0 when absent, nullopt when
/// the head or value is malformed.
std::optional<std::size_t> declared_length(std::string_view head);

/// name=value pairs of a Cookie header value.
std::map<std::string, std::string> parse_cookie_header(std::string_view value);

/// 1 iff a Cookie header carries `cookie_name` with a non-empty value.
int extract_session_flag(const Headers& headers, std::string_view cookie_name);
std::optional<std::string> session_cookie(const Headers& headers, std::string_view cookie_name);

struct SetCookie {
  std::string name;
  std::string value;
  bool cleared = false;  // empty value, "deleted", Max-Age<=0 or an Expires in 1970
};
std::optional<SetCookie> parse_set_cookie(std::string_view value);

std::string url_decode(std::string_view s);
std::string url_encode(std::string_view s);
/// application/x-www-form-urlencoded body -> fields (first occurrence wins).
std::map<std::string, std::string> parse_form(std::string_view body);

/// Serializes a request with the given headers and a Content-Length when a
/// body is present.
std::string build_request(std::string_view method, std::string_view target, const Headers& headers,
                          std::string_view body = {});
std::string build_response(int status, std::string_view reason, const Headers& headers, std::string_view body);

struct Url {
  std::string host;
  unsigned short port = 80;
  std::string target = "/";
};
/// Parses "http://host[:port][/path]". Throws phpguard::Error for other schemes.
Url parse_url(std::string_view url);

}  // namespace phpguard::http

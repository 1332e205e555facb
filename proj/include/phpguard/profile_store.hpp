#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace phpguard {

/// Canonical request identity: uppercased method and the basename of the path.
struct RequestId {
  std::string method;
  std::string page;
  std::string text() const { return method + "_" + page; }
  bool operator==(const RequestId&) const = default;
};

/// `url_path` may still carry a query or fragment; both are dropped. A path
/// ending in `/` maps to `root_page`. Throws phpguard::Error on an empty method.
RequestId derive_request_id(std::string_view method, std::string_view url_path,
                            std::string_view root_page = "index.php");

/// Static resources (.js, .css, images, fonts) recorded in Model Set 1 but
/// never used as page-graph nodes.
bool is_asset(std::string_view page);

/// Role names become file names; only [A-Za-z0-9_.-] is accepted.
bool valid_role_name(std::string_view role);

struct Visit {
  std::size_t id = 0;
  std::string request_id;
  std::string page;
  bool operator==(const Visit&) const = default;
};

/// One contiguous browsing sequence (a login session, or the anonymous crawl).
using Walk = std::vector<Visit>;

/// Training-phase profile directory:
///   <id>_request    raw request bytes (head and body)
///   <id>_Srequest   "0" or "1"
///   <role>.xml      the role's walks, one <Visit> per recorded request
///
/// Communication ids continue from the largest id already in the directory.
/// Single writer; concurrent training runs need separate directories.
class ProfileStore {
 public:
  explicit ProfileStore(std::string dir, std::string session_cookie = "PHPSESSID");

  const std::string& dir() const { return dir_; }

  /// Writes the profile files for one request attributed to `role` and
  /// appends it to the role's open walk. Returns the communication id.
  /// Throws phpguard::Error when the request cannot be parsed or a write fails.
  std::size_t record_exchange(std::string_view raw_request, const std::string& role);

  /// Closes the role's open walk; its next record starts a new one.
  void end_walk(const std::string& role);

  const std::map<std::string, std::vector<Walk>>& walks() const { return walks_; }

  /// Communication ids present as `<id>_request`, ascending.
  static std::vector<std::size_t> list_ids(const std::string& dir);
  /// Walks per role read from the `<role>.xml` files of `dir`.
  static std::map<std::string, std::vector<Walk>> load_walks(const std::string& dir);

 private:
  void save_role(const std::string& role) const;

  std::string dir_;
  std::string session_cookie_;
  std::size_t next_id_ = 1;
  std::map<std::string, std::vector<Walk>> walks_;
  std::map<std::string, bool> open_;
};

}  // namespace phpguard

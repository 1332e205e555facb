#include "phpguard/profile_store.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>

#include "phpguard/http.hpp"
#include "phpguard/strings.hpp"
#include "phpguard/xml.hpp"

namespace fs = std::filesystem;

namespace phpguard {

RequestId derive_request_id(std::string_view method, std::string_view url_path, std::string_view root_page) {
  if (trim(method).empty()) throw Error("request id: empty method");
  auto path = url_path.substr(0, url_path.find_first_of("?#"));
  RequestId id;
  id.method = to_upper(trim(method));
  if (path.empty() || path.back() == '/') {
    id.page = std::string(root_page);
  } else {
    auto slash = path.rfind('/');
    id.page = std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
  }
  return id;
}

bool is_asset(std::string_view page) {
  static const char* kExt[] = {".js", ".css", ".png", ".jpg", ".jpeg", ".gif", ".ico", ".svg", ".woff", ".woff2", ".map"};
  auto lower = to_lower(page);
  for (const char* e : kExt) {
    std::string_view ext(e);
    if (lower.size() > ext.size() && lower.compare(lower.size() - ext.size(), ext.size(), ext) == 0) return true;
  }
  return false;
}

bool valid_role_name(std::string_view role) {
  if (role.empty() || role == "." || role == "..") return false;
  return std::all_of(role.begin(), role.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::vector<std::size_t> ProfileStore::list_ids(const std::string& dir) {
  std::vector<std::size_t> ids;
  if (!fs::is_directory(dir)) return ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto name = e.path().filename().string();
    constexpr std::string_view suffix = "_request";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    auto digits = std::string_view(name).substr(0, name.size() - suffix.size());
    std::size_t id = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec == std::errc() && p == digits.data() + digits.size() && id > 0) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<std::string, std::vector<Walk>> ProfileStore::load_walks(const std::string& dir) {
  std::map<std::string, std::vector<Walk>> out;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".xml") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto source = f.string();
    auto root = xml::parse(read_file(source), source);
    auto where = [&](const xml::Element& e) { return source + ":" + std::to_string(e.line) + ": "; };
    if (root.name != "Sequence") throw Error(where(root) + "expected <Sequence>");
    auto role = root.attr("role").value_or("");
    if (role != f.stem().string()) throw Error(where(root) + "role attribute does not match file name");
    auto& walks = out[role];
    for (const auto& w : root.children) {
      if (w.name != "Walk") throw Error(where(w) + "expected <Walk>");
      Walk walk;
      for (const auto& v : w.children) {
        auto id = v.attr("id");
        auto req = v.attr("request");
        auto page = v.attr("page");
        if (v.name != "Visit" || !id || !req || !page) throw Error(where(v) + "expected <Visit id request page/>");
        std::size_t n = 0;
        auto [p, ec] = std::from_chars(id->data(), id->data() + id->size(), n);
        if (ec != std::errc() || p != id->data() + id->size() || n == 0) throw Error(where(v) + "bad id");
        walk.push_back({n, *req, *page});
      }
      walks.push_back(std::move(walk));
    }
  }
  return out;
}

ProfileStore::ProfileStore(std::string dir, std::string session_cookie)
    : dir_(std::move(dir)), session_cookie_(std::move(session_cookie)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (!fs::is_directory(dir_)) throw Error("profile store: cannot create directory " + dir_);
  auto ids = list_ids(dir_);
  if (!ids.empty()) next_id_ = ids.back() + 1;
  walks_ = load_walks(dir_);
}

std::size_t ProfileStore::record_exchange(std::string_view raw_request, const std::string& role) {
  if (!valid_role_name(role)) throw Error("profile store: invalid role name '" + role + "'");
  auto req = http::parse_request(raw_request);
  auto rid = derive_request_id(req.method, req.path());
  const auto id = next_id_++;
  const auto base = (fs::path(dir_) / std::to_string(id)).string();
  write_file(base + "_request", raw_request);
  write_file(base + "_Srequest", std::to_string(http::extract_session_flag(req.headers, session_cookie_)));
  auto& walks = walks_[role];
  if (!open_[role] || walks.empty()) {
    walks.emplace_back();
    open_[role] = true;
  }
  walks.back().push_back({id, rid.text(), rid.page});
  save_role(role);
  return id;
}

void ProfileStore::end_walk(const std::string& role) { open_[role] = false; }

void ProfileStore::save_role(const std::string& role) const {
  xml::Element root{"Sequence", {{"role", role}}, "", {}, 0};
  for (const auto& walk : walks_.at(role)) {
    xml::Element w{"Walk", {}, "", {}, 0};
    for (const auto& v : walk) {
      w.children.push_back({"Visit", {{"id", std::to_string(v.id)}, {"request", v.request_id}, {"page", v.page}}, "", {}, 0});
    }
    root.children.push_back(std::move(w));
  }
  write_file((fs::path(dir_) / (role + ".xml")).string(), xml::write(root));
}

}  // namespace phpguard

#include "phpguard/model.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>

#include "phpguard/http.hpp"
#include "phpguard/profile_store.hpp"
#include "phpguard/strings.hpp"
#include "phpguard/xml.hpp"

namespace fs = std::filesystem;

namespace phpguard {

namespace {

constexpr std::string_view kModel1File = "model1.csv";
constexpr std::string_view kModel1Header = "sno,convid,reqresid,sessionFlag,role";

std::size_t parse_count(std::string_view text, const std::string& where) {
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc() || p != text.data() + text.size() || text.empty()) {
    throw Error(where + "expected a number, got '" + std::string(text) + "'");
  }
  return n;
}

}  // namespace

std::set<Triple> ModelSet1::relation() const {
  std::set<Triple> out;
  for (const auto& r : rows) out.emplace(r.reqresid, r.session_flag, r.role);
  return out;
}

bool RoleGraph::has_node(const std::string& page) const {
  return std::find(nodes.begin(), nodes.end(), page) != nodes.end();
}

bool RoleGraph::has_edge(const std::string& from, const std::string& to) const {
  auto it = next.find(from);
  return it != next.end() && std::find(it->second.begin(), it->second.end(), to) != it->second.end();
}

bool RoleGraph::is_entry(const std::string& page) const {
  return std::find(entries.begin(), entries.end(), page) != entries.end();
}

void RoleGraph::add_node(const std::string& page) {
  if (!has_node(page)) nodes.push_back(page);
}

void RoleGraph::add_entry(const std::string& page) {
  add_node(page);
  if (!is_entry(page)) entries.push_back(page);
}

void RoleGraph::add_edge(const std::string& from, const std::string& to) {
  add_node(from);
  add_node(to);
  if (!has_edge(from, to)) next[from].push_back(to);
}

std::set<std::pair<std::string, std::string>> RoleGraph::edges() const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [from, tos] : next) {
    for (const auto& to : tos) out.emplace(from, to);
  }
  return out;
}

Models build_model(const std::string& store_dir) {
  if (!fs::is_directory(store_dir)) throw Error("profile store not found: " + store_dir);
  auto ids = ProfileStore::list_ids(store_dir);
  if (ids.empty()) throw Error("profile store is empty: " + store_dir);
  auto walks = ProfileStore::load_walks(store_dir);

  std::map<std::size_t, std::string> role_of;
  for (const auto& [role, list] : walks) {
    for (const auto& walk : list) {
      for (const auto& v : walk) {
        if (!role_of.emplace(v.id, role).second) {
          throw Error("profile store: communication id " + std::to_string(v.id) + " appears in more than one walk");
        }
      }
    }
  }

  Models m;
  for (auto id : ids) {
    auto base = (fs::path(store_dir) / std::to_string(id)).string();
    if (!fs::exists(base + "_Srequest")) {
      throw Error("profile store: communication id " + std::to_string(id) + " has no " + std::to_string(id) +
                  "_Srequest");
    }
    auto flag_text = std::string(trim(read_file(base + "_Srequest")));
    if (flag_text != "0" && flag_text != "1") {
      throw Error("profile store: " + std::to_string(id) + "_Srequest must contain 0 or 1");
    }
    auto role = role_of.find(id);
    if (role == role_of.end()) {
      throw Error("profile store: communication id " + std::to_string(id) + " is not part of any role sequence");
    }
    auto req = http::parse_request(read_file(base + "_request"));
    auto rid = derive_request_id(req.method, req.path());
    m.set1.rows.push_back({m.set1.rows.size(), id, rid.text(), flag_text == "1" ? 1 : 0, role->second});
  }
  for (const auto& [id, role] : role_of) {
    if (!std::binary_search(ids.begin(), ids.end(), id)) {
      throw Error("profile store: " + role + ".xml references missing communication id " + std::to_string(id));
    }
  }

  for (const auto& [role, list] : walks) {
    auto& g = m.set2[role];
    for (const auto& walk : list) {
      const std::string* prev = nullptr;
      for (const auto& v : walk) {
        if (is_asset(v.page)) continue;
        if (prev) {
          g.add_edge(*prev, v.page);
        } else {
          g.add_entry(v.page);
        }
        prev = &v.page;
      }
    }
  }
  return m;
}

void persist_model(const Models& models, const std::string& dir) {
  std::string csv = std::string(kModel1Header) + "\n";
  for (const auto& r : models.set1.rows) {
    if (r.reqresid.find_first_of(",\r\n") != std::string::npos || !valid_role_name(r.role)) {
      throw Error("model row " + std::to_string(r.sno) + " cannot be written as CSV");
    }
    csv += std::to_string(r.sno) + "," + std::to_string(r.convid) + "," + r.reqresid + "," +
           std::to_string(r.session_flag) + "," + r.role + "\n";
  }
  write_file((fs::path(dir) / kModel1File).string(), csv);

  for (const auto& [role, g] : models.set2) {
    if (!valid_role_name(role)) throw Error("invalid role name '" + role + "'");
    for (const auto& page : g.nodes) {
      if (page.find(',') != std::string::npos) throw Error("page name contains a comma: " + page);
    }
    std::string entries;
    for (const auto& e : g.entries) entries += (entries.empty() ? "" : ",") + e;
    xml::Element root{"Pages", {{"role", role}, {"entry", entries}}, "", {}, 0};
    for (const auto& page : g.nodes) {
      std::string text;
      auto it = g.next.find(page);
      if (it != g.next.end()) {
        for (const auto& to : it->second) text += (text.empty() ? "" : ", ") + to;
      }
      root.children.push_back({xml::encode_name(page), {}, text, {}, 0});
    }
    write_file((fs::path(dir) / (role + ".xml")).string(), xml::write(root));
  }
}

Models load_model(const std::string& dir) {
  Models m;
  const auto csv_path = (fs::path(dir) / kModel1File).string();
  if (!fs::exists(csv_path)) throw Error("model file not found: " + csv_path);
  const auto text = read_file(csv_path);
  auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != kModel1Header) {
    throw Error(csv_path + ":1: expected header '" + std::string(kModel1Header) + "'");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto where = csv_path + ":" + std::to_string(i + 1) + ": ";
    std::vector<std::string> cols;
    std::string_view rest = lines[i];
    for (;;) {
      auto comma = rest.find(',');
      cols.emplace_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 5) throw Error(where + "expected 5 columns");
    if (cols[3] != "0" && cols[3] != "1") throw Error(where + "sessionFlag must be 0 or 1");
    if (cols[2].empty() || !valid_role_name(cols[4])) throw Error(where + "empty request id or bad role");
    m.set1.rows.push_back({parse_count(cols[0], where), parse_count(cols[1], where), cols[2], cols[3] == "1" ? 1 : 0, cols[4]});
  }

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".xml") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto source = f.string();
    auto root = xml::parse(read_file(source), source);
    auto where = [&](const xml::Element& e) { return source + ":" + std::to_string(e.line) + ": "; };
    if (root.name != "Pages") throw Error(where(root) + "expected <Pages>");
    auto role = root.attr("role").value_or(f.stem().string());
    if (role != f.stem().string()) throw Error(where(root) + "role attribute does not match file name");
    auto& g = m.set2[role];
    for (const auto& child : root.children) {
      if (!child.children.empty()) throw Error(where(child) + "page elements hold text only");
      g.add_node(xml::decode_name(child.name));
    }
    for (const auto& child : root.children) {
      auto from = xml::decode_name(child.name);
      for (const auto& to : split_list(child.text, ',')) {
        if (!g.has_node(to)) throw Error(where(child) + "next page '" + to + "' has no element of its own");
        g.add_edge(from, to);
      }
    }
    for (const auto& e : split_list(root.attr("entry").value_or(""), ',')) {
      if (!g.has_node(e)) throw Error(where(root) + "entry page '" + e + "' has no element");
      g.add_entry(e);
    }
  }
  return m;
}

}  // namespace phpguard

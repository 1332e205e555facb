#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace phpguard {

struct ModelRow {
  std::size_t sno = 0;
  std::size_t convid = 0;
  std::string reqresid;
  int session_flag = 0;
  std::string role;
  bool operator==(const ModelRow&) const = default;
};

/// (reqresid, sessionFlag, role)
using Triple = std::tuple<std::string, int, std::string>;

/// Every observed request, in communication-id order, repeats included.
struct ModelSet1 {
  std::vector<ModelRow> rows;
  std::set<Triple> relation() const;
  bool operator==(const ModelSet1&) const = default;
};

/// Page-transition graph of one role. Orders are first-observation orders,
/// which keeps persisted files deterministic.
struct RoleGraph {
  std::vector<std::string> nodes;
  std::vector<std::string> entries;
  std::map<std::string, std::vector<std::string>> next;

  bool has_node(const std::string& page) const;
  bool has_edge(const std::string& from, const std::string& to) const;
  bool is_entry(const std::string& page) const;
  void add_node(const std::string& page);
  void add_entry(const std::string& page);
  void add_edge(const std::string& from, const std::string& to);
  /// Edges as (from, to) pairs.
  std::set<std::pair<std::string, std::string>> edges() const;
  bool operator==(const RoleGraph&) const = default;
};

struct Models {
  ModelSet1 set1;
  std::map<std::string, RoleGraph> set2;
  bool operator==(const Models&) const = default;
};

/// Builds both model sets from a profile store directory. Rows follow
/// communication ids; graph edges join consecutive non-asset pages of each
/// walk and the first page of every walk is an entry. Throws phpguard::Error
/// for an empty store, an `<id>_request` without `<id>_Srequest`, or a
/// record that no walk references.
Models build_model(const std::string& store_dir);

/// Writes `model1.csv` and one `<role>.xml` per role into `dir`.
void persist_model(const Models& models, const std::string& dir);
/// Reads what persist_model wrote. Throws phpguard::Error naming file and line.
Models load_model(const std::string& dir);

}  // namespace phpguard

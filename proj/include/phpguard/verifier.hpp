#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "phpguard/model.hpp"

namespace phpguard {

enum class Reason {
  Ok,
  UnknownRequest,
  SessionFlagMismatch,
  RoleMismatch,
  UnknownPageForRole,
  SequenceViolation,
  IdentityMismatch,
};

enum class Level { None, One, Two, Identity };

std::string_view reason_name(Reason r);   // "ok", "session_flag_mismatch", ...
std::optional<Reason> parse_reason(std::string_view name);
std::string_view level_name(Level l);     // "", "1", "2", "identity"

struct Verdict {
  Reason reason = Reason::Ok;
  Level level = Level::None;
  std::string detail;

  bool blocked() const { return reason != Reason::Ok; }
  static Verdict allow() { return {}; }
  static Verdict block(Reason r, Level l, std::string detail) { return {r, l, std::move(detail)}; }
};

/// Level 1 and level 2 checks over immutable models.
class Verifier {
 public:
  explicit Verifier(Models models);

  const Models& models() const { return models_; }

  /// Admits (reqresid, flag, role) iff the triple is in the deduplicated
  /// Model Set 1 relation. Otherwise: unknown_request when no row has the
  /// request id; session_flag_mismatch when no row pairs the id with this
  /// flag under any role; role_mismatch when the id and flag are known but
  /// only under other roles.
  Verdict level1(const std::string& reqresid, int session_flag, const std::string& role) const;

  /// With no last page the page must be an entry of the role's graph;
  /// otherwise the edge last_page -> page must exist. unknown_page_for_role
  /// when the role has no graph or the page is not one of its nodes,
  /// sequence_violation when the node exists but the step does not.
  Verdict level2(const std::string& page, const std::string& role, const std::optional<std::string>& last_page) const;

 private:
  Models models_;
  std::set<Triple> relation_;
  std::set<std::string> known_ids_;
  std::set<std::pair<std::string, int>> known_id_flags_;
};

/// Request-side facts the verifier needs, already derived from the request
/// and the client's state.
struct RequestFacts {
  std::string reqresid;
  std::string page;
  int session_flag = 0;
  std::string role = "0";
  std::optional<std::string> last_page;
};

/// Level 1, then level 2 for non-asset pages.
Verdict verify_request(const RequestFacts& facts, const Verifier& verifier);

}  // namespace phpguard

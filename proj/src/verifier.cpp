#include "phpguard/verifier.hpp"

#include "phpguard/profile_store.hpp"

namespace phpguard {

namespace {

constexpr std::pair<Reason, std::string_view> kReasonNames[] = {
    {Reason::Ok, "ok"},
    {Reason::UnknownRequest, "unknown_request"},
    {Reason::SessionFlagMismatch, "session_flag_mismatch"},
    {Reason::RoleMismatch, "role_mismatch"},
    {Reason::UnknownPageForRole, "unknown_page_for_role"},
    {Reason::SequenceViolation, "sequence_violation"},
    {Reason::IdentityMismatch, "identity_mismatch"},
};

}  // namespace

std::string_view reason_name(Reason r) {
  for (const auto& [reason, name] : kReasonNames) {
    if (reason == r) return name;
  }
  return "?";
}

std::optional<Reason> parse_reason(std::string_view name) {
  for (const auto& [reason, n] : kReasonNames) {
    if (n == name) return reason;
  }
  return std::nullopt;
}

std::string_view level_name(Level l) {
  switch (l) {
    case Level::None: return "";
    case Level::One: return "1";
    case Level::Two: return "2";
    case Level::Identity: return "identity";
  }
  return "?";
}

Verifier::Verifier(Models models) : models_(std::move(models)), relation_(models_.set1.relation()) {
  for (const auto& [id, flag, role] : relation_) {
    known_ids_.insert(id);
    known_id_flags_.insert({id, flag});
  }
}

Verdict Verifier::level1(const std::string& reqresid, int session_flag, const std::string& role) const {
  if (relation_.count({reqresid, session_flag, role})) return Verdict::allow();
  if (!known_ids_.count(reqresid)) return Verdict::block(Reason::UnknownRequest, Level::One, reqresid + " was never trained");
  const auto triple = reqresid + " with session flag " + std::to_string(session_flag);
  if (!known_id_flags_.count({reqresid, session_flag})) {
    return Verdict::block(Reason::SessionFlagMismatch, Level::One, triple + " was never trained");
  }
  return Verdict::block(Reason::RoleMismatch, Level::One, triple + " was not trained for role " + role);
}

Verdict Verifier::level2(const std::string& page, const std::string& role,
                         const std::optional<std::string>& last_page) const {
  auto it = models_.set2.find(role);
  if (it == models_.set2.end()) {
    return Verdict::block(Reason::UnknownPageForRole, Level::Two, "role " + role + " has no page graph");
  }
  const auto& g = it->second;
  if (!g.has_node(page)) {
    return Verdict::block(Reason::UnknownPageForRole, Level::Two, page + " is not a page of role " + role);
  }
  if (!last_page) {
    if (g.is_entry(page)) return Verdict::allow();
    return Verdict::block(Reason::SequenceViolation, Level::Two, page + " is not an entry page of role " + role);
  }
  if (g.has_edge(*last_page, page)) return Verdict::allow();
  return Verdict::block(Reason::SequenceViolation, Level::Two, *last_page + " -> " + page + " is not a trained step");
}

Verdict verify_request(const RequestFacts& facts, const Verifier& verifier) {
  auto v = verifier.level1(facts.reqresid, facts.session_flag, facts.role);
  if (v.blocked() || is_asset(facts.page)) return v;
  return verifier.level2(facts.page, facts.role, facts.last_page);
}

}  // namespace phpguard

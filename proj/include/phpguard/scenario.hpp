#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phpguard/net.hpp"

namespace phpguard {

/// One line of a scenario script. See docs/scenarios.md for the syntax.
struct ScenarioStep {
  enum class Kind { Client, Use, Get, Post, Login, Steal, ClearCookie, ExpectAllow, ExpectBlock, ExpectStatus, ExpectLogDelta };
  Kind kind;
  std::vector<std::string> args;
  std::size_t line = 0;
};

struct Scenario {
  std::string name;
  std::vector<ScenarioStep> steps;
};

/// Throws phpguard::Error("scenario line N: ...") on an unknown step or a
/// wrong argument count.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

struct ScenarioResult {
  bool passed = true;
  std::vector<std::string> transcript;
  std::size_t blocks = 0;  // 403 responses carrying X-Guard-Block
};

/// Runs the steps against the enforcer at `target`. `log_path` is the
/// enforcer's deviation log file, read for `expect log-delta`. Stops at the
/// first failed expectation or transport error.
ScenarioResult run_scenario(const Scenario& scenario, const net::Endpoint& target,
                            const std::optional<std::string>& log_path = std::nullopt);

}  // namespace phpguard

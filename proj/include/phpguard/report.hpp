#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "phpguard/analyzer.hpp"
#include "phpguard/config_audit.hpp"

namespace phpguard {

using Timestamp = std::chrono::sys_seconds;
using Clock = std::function<std::chrono::system_clock::time_point()>;

struct Report {
  std::string application_name;
  Timestamp scan_timestamp{};
  std::size_t files_scanned = 0;
  std::chrono::microseconds elapsed{0};
  std::vector<Finding> findings;
  std::vector<Misconfiguration> misconfigurations;
  bool operator==(const Report&) const = default;
};

/// Timestamps are taken from `clock` and truncated to whole seconds.
Report build_report(const ScanResult& scan, std::vector<Misconfiguration> audits, std::string app_name,
                    const Clock& clock = std::chrono::system_clock::now);

/// "2024-05-01T09:30:00Z"
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

/// Plain-text report: header block, VULNERABILITY DETAILS with four labeled
/// lines per finding, then CONFIGURATION DETAILS when audits are present.
std::string render(const Report& report);

/// Structured sidecar: the line `phpguard-report 1` followed by a JSON document.
std::string render_structured(const Report& report);
/// Throws phpguard::Error on a missing/unsupported header or malformed body.
Report parse_structured(std::string_view text);

/// Writes `<base>.txt` and `<base>.json`.
void write_report(const Report& report, const std::string& base);

}  // namespace phpguard

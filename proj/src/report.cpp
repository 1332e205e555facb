#include "phpguard/report.hpp"

#include <ctime>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "phpguard/strings.hpp"

namespace phpguard {

namespace {

constexpr std::string_view kStructuredHeader = "phpguard-report 1";

using nlohmann::json;

json to_json(const Finding& f) {
  json children = json::array();
  for (const auto& c : f.children) {
    children.push_back({{"variable", c.variable}, {"kind", to_string(c.kind)}, {"source", c.source}, {"line", c.line}});
  }
  return {{"number", f.number},
          {"file", f.file},
          {"category", category_id(f.category)},
          {"sink", f.sink},
          {"line", f.line},
          {"line_text", f.line_text},
          {"children", std::move(children)}};
}

Finding finding_from_json(const json& j) {
  Finding f;
  f.number = j.at("number").get<std::size_t>();
  f.file = j.at("file").get<std::string>();
  auto cat = parse_category_id(j.at("category").get<std::string>());
  if (!cat) throw Error("report: unknown category " + j.at("category").dump());
  f.category = *cat;
  f.sink = j.at("sink").get<std::string>();
  f.line = j.at("line").get<std::size_t>();
  f.line_text = j.at("line_text").get<std::string>();
  for (const auto& c : j.at("children")) {
    auto kind = parse_source_kind(c.at("kind").get<std::string>());
    if (!kind) throw Error("report: unknown source kind " + c.at("kind").dump());
    f.children.push_back(
        {c.at("variable").get<std::string>(), *kind, c.at("source").get<std::string>(), c.at("line").get<std::size_t>()});
  }
  return f;
}

std::string format_elapsed(std::chrono::microseconds us) {
  std::ostringstream os;
  os << us.count() / 1000000 << '.' << std::setw(6) << std::setfill('0') << us.count() % 1000000 << " s";
  return os.str();
}

}  // namespace

Report build_report(const ScanResult& scan, std::vector<Misconfiguration> audits, std::string app_name,
                    const Clock& clock) {
  Report r;
  r.application_name = std::move(app_name);
  r.scan_timestamp = std::chrono::floor<std::chrono::seconds>(clock());
  r.files_scanned = scan.files_scanned;
  r.elapsed = scan.elapsed;
  r.findings = scan.findings;
  r.misconfigurations = std::move(audits);
  return r;
}

std::string format_timestamp(Timestamp t) {
  std::time_t tt = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  std::tm tm{};
  std::istringstream is{std::string(text)};
  is >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  if (is.fail() || text.size() != 20 || text.back() != 'Z') throw Error("bad timestamp: " + std::string(text));
  return Timestamp{std::chrono::seconds{timegm(&tm)}};
}

std::string render(const Report& report) {
  std::ostringstream os;
  os << "PHP SECURITY SCAN REPORT\n"
     << "Application : " << report.application_name << "\n"
     << "Scan Date : " << format_timestamp(report.scan_timestamp) << "\n"
     << "Files Scanned : " << report.files_scanned << "\n"
     << "Scan Time : " << format_elapsed(report.elapsed) << "\n"
     << "\nVULNERABILITY DETAILS\n";
  if (report.findings.empty()) os << "\nNo vulnerabilities detected.\n";
  for (const auto& f : report.findings) {
    os << "\nVulnerabilityNumber : " << f.number << "\n"
       << "Vulnerability FileName : " << f.file << "\n"
       << "VulnerabilityName : " << category_title(f.category) << "\n"
       << "Vulnerable Line : " << f.line << ": " << f.sink << " " << trim(f.line_text) << "\n";
  }
  if (!report.misconfigurations.empty()) {
    os << "\nCONFIGURATION DETAILS\n";
    for (const auto& m : report.misconfigurations) {
      os << "\nSetting : " << m.name << "\n"
         << "Current Value : " << m.current << (m.from_default ? " (PHP default)" : "") << "\n"
         << "Recommended Value : " << m.recommended << "\n"
         << "Rationale : " << m.rationale << "\n";
    }
  }
  return os.str();
}

std::string render_structured(const Report& report) {
  json findings = json::array();
  for (const auto& f : report.findings) findings.push_back(to_json(f));
  json misconfigurations = json::array();
  for (const auto& m : report.misconfigurations) {
    misconfigurations.push_back({{"name", m.name},
                                 {"current", m.current},
                                 {"recommended", m.recommended},
                                 {"rationale", m.rationale},
                                 {"from_default", m.from_default}});
  }
  json doc = {{"application", report.application_name},
              {"timestamp", format_timestamp(report.scan_timestamp)},
              {"files_scanned", report.files_scanned},
              {"elapsed_us", report.elapsed.count()},
              {"findings", std::move(findings)},
              {"misconfigurations", std::move(misconfigurations)}};
  return std::string(kStructuredHeader) + "\n" + doc.dump(2) + "\n";
}

Report parse_structured(std::string_view text) {
  auto nl = text.find('\n');
  auto header = trim(text.substr(0, nl));
  if (header != kStructuredHeader) throw Error("report: expected header '" + std::string(kStructuredHeader) + "'");
  try {
    auto doc = json::parse(nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1));
    Report r;
    r.application_name = doc.at("application").get<std::string>();
    r.scan_timestamp = parse_timestamp(doc.at("timestamp").get<std::string>());
    r.files_scanned = doc.at("files_scanned").get<std::size_t>();
    r.elapsed = std::chrono::microseconds{doc.at("elapsed_us").get<std::int64_t>()};
    for (const auto& f : doc.at("findings")) r.findings.push_back(finding_from_json(f));
    for (const auto& m : doc.at("misconfigurations")) {
      r.misconfigurations.push_back({m.at("name").get<std::string>(), m.at("current").get<std::string>(),
                                     m.at("recommended").get<std::string>(), m.at("rationale").get<std::string>(),
                                     m.at("from_default").get<bool>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("report: ") + e.what());
  }
}

void write_report(const Report& report, const std::string& base) {
  write_file(base + ".txt", render(report));
  write_file(base + ".json", render_structured(report));
}

}  // namespace phpguard

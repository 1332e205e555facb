#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <pthread.h>

#include "phpguard/analyzer.hpp"
#include "phpguard/config_audit.hpp"
#include "phpguard/crawler.hpp"
#include "phpguard/demo_app.hpp"
#include "phpguard/enforcer.hpp"
#include "phpguard/model.hpp"
#include "phpguard/profile_store.hpp"
#include "phpguard/proxy.hpp"
#include "phpguard/report.hpp"
#include "phpguard/scenario.hpp"
#include "phpguard/strings.hpp"

using namespace phpguard;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

sigset_t stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

// Called before any thread starts so every thread inherits the mask.
void block_stop_signals() {
  auto set = stop_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

void wait_for_stop_signal() {
  auto set = stop_signals();
  int sig = 0;
  sigwait(&set, &sig);
}

struct ScanArgs {
  std::string root;
  std::string checklist = "default";
  std::string ini;
  std::string policy;
  std::string app_name;
  std::string path_prefix;
  std::string out;
  std::string clock;
};

Policy policy_from(const std::string& path) {
  return path.empty() ? default_policy() : load_policy(read_file(path));
}

int run_scan(const ScanArgs& a) {
  Checklist list = a.checklist == "default" ? default_checklist() : load_checklist(read_file(a.checklist));
  ScanOptions opts;
  if (!a.path_prefix.empty()) opts.path_prefix = a.path_prefix;
  auto scan = scan_project(a.root, list, opts);
  std::vector<Misconfiguration> misconf;
  if (!a.ini.empty()) {
    auto settings = parse_ini(read_file(a.ini));
    for (const auto& d : settings.diagnostics) std::cerr << a.ini << ":" << d.line << ": " << d.message << "\n";
    misconf = audit(settings, policy_from(a.policy));
  }
  auto app = a.app_name.empty() ? fs::path(a.root).lexically_normal().filename().string() : a.app_name;
  if (app.empty()) app = fs::path(a.root).lexically_normal().parent_path().filename().string();
  Clock clock = std::chrono::system_clock::now;
  if (!a.clock.empty()) {
    auto fixed = parse_timestamp(a.clock);
    clock = [fixed] { return std::chrono::system_clock::time_point(fixed); };
  }
  auto report = build_report(scan, misconf, app, clock);
  for (const auto& d : scan.diagnostics) std::cerr << d.file << ":" << d.line << ": " << d.message << "\n";
  if (a.out.empty()) {
    std::cout << render(report);
  } else {
    write_report(report, a.out);
    std::cout << a.out << ".txt: " << report.findings.size() << " finding(s), " << report.misconfigurations.size()
              << " misconfiguration(s)\n";
  }
  return report.findings.empty() && report.misconfigurations.empty() ? kOk : kFailed;
}

int run_audit(const std::string& ini, const std::string& policy) {
  auto settings = parse_ini(read_file(ini));
  for (const auto& d : settings.diagnostics) std::cerr << ini << ":" << d.line << ": " << d.message << "\n";
  auto found = audit(settings, policy_from(policy));
  for (const auto& m : found) {
    std::cout << m.name << "\tcurrent=" << m.current << (m.from_default ? " (PHP default)" : "")
              << "\trecommended=" << m.recommended << "\t" << m.rationale << "\n";
  }
  if (found.empty()) std::cout << "no misconfigurations\n";
  return found.empty() ? kOk : kFailed;
}

int run_report(const std::string& in, const std::string& out) {
  auto report = parse_structured(read_file(in));
  if (out.empty()) {
    std::cout << render(report);
  } else {
    write_file(out, render(report));
  }
  return kOk;
}

int run_train(CrawlOptions options, const std::string& store_dir) {
  ProfileStore store(store_dir, options.session_cookie);
  auto result = crawl(options, store);
  std::cout << "role " << options.role << ": " << result.pages.size() << " page(s), " << result.assets.size()
            << " asset(s), " << result.requests << " request(s) recorded in " << store_dir << "\n";
  for (const auto& p : result.pages) std::cout << "  " << p << "\n";
  return kOk;
}

int run_build_model(const std::string& store, const std::string& out) {
  auto models = build_model(store);
  fs::create_directories(out);
  persist_model(models, out);
  std::cout << models.set1.rows.size() << " row(s), " << models.set1.relation().size() << " distinct triple(s), "
            << models.set2.size() << " role graph(s) written to " << out << "\n";
  return kOk;
}

struct EnforceArgs {
  std::string models;
  std::string listen;
  std::string upstream;
  std::string bindings;
  std::string session_cookie = "PHPSESSID";
  long idle_timeout = 1800;
  std::string log = "deviations.tsv";
  std::string login_page = "Login.php";
};

int run_enforce(const EnforceArgs& a) {
  EnforcerOptions opts;
  opts.session_cookie = a.session_cookie;
  opts.idle_timeout = std::chrono::seconds(a.idle_timeout);
  opts.login_page = a.login_page;
  DeviationLog log(a.log);
  Enforcer enforcer(Verifier(load_model(a.models)), load_bindings(a.bindings), opts, log);
  ProxyServer proxy(enforcer, net::parse_endpoint(a.listen), net::parse_endpoint(a.upstream));
  std::cout << "enforcing on " << proxy.endpoint().to_string() << " -> " << a.upstream << ", log " << a.log
            << std::endl;
  wait_for_stop_signal();
  proxy.stop();
  for (const auto& n : enforcer.notices()) std::cerr << "notice: " << n << "\n";
  std::cout << enforcer.forwarded() << " forwarded, " << enforcer.blocked() << " blocked\n";
  return kOk;
}

int run_serve_demo(const std::string& listen, std::uint64_t seed) {
  DemoApp app(default_demo_site(), net::parse_endpoint(listen), seed);
  std::cout << "demo app on " << app.base_url() << std::endl;
  wait_for_stop_signal();
  app.stop();
  return kOk;
}

int run_scenarios(const std::vector<std::string>& files, const std::string& target, const std::string& log) {
  bool all = true;
  for (const auto& f : files) {
    auto s = load_scenario(f);
    auto r = run_scenario(s, net::parse_endpoint(target), log.empty() ? std::nullopt : std::optional(log));
    for (const auto& line : r.transcript) std::cout << line << "\n";
    all = all && r.passed;
  }
  return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  block_stop_signals();
  CLI::App app{"PHP application security toolkit: static scan, php.ini audit, traffic model training and enforcement"};
  app.require_subcommand(1);

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Scan PHP sources for tainted sink calls and write a report");
  scan_cmd->add_option("--root", scan.root, "Application directory or single .php file")->required();
  scan_cmd->add_option("--checklist", scan.checklist, "'default' or a checklist file")->capture_default_str();
  scan_cmd->add_option("--ini", scan.ini, "php.ini to audit alongside the sources");
  scan_cmd->add_option("--policy", scan.policy, "Policy file for --ini (built-in policy when omitted)");
  scan_cmd->add_option("--app-name", scan.app_name, "Application name in the report (default: root directory name)");
  scan_cmd->add_option("--path-prefix", scan.path_prefix, "Replace the root directory in reported file names");
  scan_cmd->add_option("--out", scan.out, "Write <out>.txt and <out>.json instead of printing");
  scan_cmd->add_option("--clock", scan.clock, "Fixed scan timestamp, e.g. 2024-01-01T00:00:00Z");

  std::string audit_ini, audit_policy;
  auto* audit_cmd = app.add_subcommand("audit", "Compare php.ini settings with the security policy");
  audit_cmd->add_option("--ini", audit_ini, "php.ini file")->required();
  audit_cmd->add_option("--policy", audit_policy, "Policy file (built-in policy when omitted)");

  std::string report_in, report_out;
  auto* report_cmd = app.add_subcommand("report", "Render a structured report as text");
  report_cmd->add_option("--in", report_in, "Structured report (.json) written by scan --out")->required();
  report_cmd->add_option("--out", report_out, "Text output file (stdout when omitted)");

  CrawlOptions crawl_opts;
  std::string store_dir;
  std::string bind_ip;
  auto* train_cmd = app.add_subcommand("train", "Crawl the application as one role and record its requests");
  train_cmd->add_option("--role", crawl_opts.role, "Role id; 0 crawls without logging in")->required();
  train_cmd->add_option("--base", crawl_opts.base_url, "Start URL (role 0) or site URL (login roles)")->required();
  train_cmd->add_option("--store", store_dir, "Profile store directory")->required();
  train_cmd->add_option("--login-user", crawl_opts.username, "Login user name");
  train_cmd->add_option("--login-pass", crawl_opts.password, "Login password");
  train_cmd->add_option("--session-cookie", crawl_opts.session_cookie, "Session cookie name")->capture_default_str();
  train_cmd->add_option("--login-page", crawl_opts.login_page, "Login form page")->capture_default_str();
  train_cmd->add_option("--logout-page", crawl_opts.logout_page, "Logout page (never followed)")->capture_default_str();
  train_cmd->add_option("--bind-ip", bind_ip, "Local source address for crawler connections");

  std::string model_store, model_out;
  auto* build_cmd = app.add_subcommand("build-model", "Build both model sets from a profile store");
  build_cmd->add_option("--store", model_store, "Profile store directory")->required();
  build_cmd->add_option("--out", model_out, "Model output directory")->required();

  EnforceArgs enforce;
  auto* enforce_cmd = app.add_subcommand("enforce", "Run the enforcing reverse proxy until SIGINT/SIGTERM");
  enforce_cmd->add_option("--models", enforce.models, "Model directory from build-model")->required();
  enforce_cmd->add_option("--listen", enforce.listen, "Listen address host:port")->required();
  enforce_cmd->add_option("--upstream", enforce.upstream, "Application address host:port")->required();
  enforce_cmd->add_option("--bindings", enforce.bindings, "File of 'username,role' lines")->required();
  enforce_cmd->add_option("--session-cookie", enforce.session_cookie, "Session cookie name")->capture_default_str();
  enforce_cmd->add_option("--idle-timeout", enforce.idle_timeout, "Seconds before an idle client reverts to role 0")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  enforce_cmd->add_option("--log", enforce.log, "Deviation log file (appended)")->capture_default_str();
  enforce_cmd->add_option("--login-page", enforce.login_page, "Login form page")->capture_default_str();

  std::string demo_listen;
  std::uint64_t demo_seed = 1;
  auto* demo_cmd = app.add_subcommand("serve-demo", "Serve the two-role sample application until SIGINT/SIGTERM");
  demo_cmd->add_option("--listen", demo_listen, "Listen address host:port")->required();
  demo_cmd->add_option("--seed", demo_seed, "Session cookie generator seed")->capture_default_str();

  std::vector<std::string> scenario_files;
  std::string scenario_target, scenario_log;
  auto* scenario_cmd = app.add_subcommand("scenario", "Run scenario scripts against a running enforcer");
  scenario_cmd->add_option("--file", scenario_files, "Scenario file(s)")->required()->check(CLI::ExistingFile);
  scenario_cmd->add_option("--enforcer", scenario_target, "Enforcer address host:port")->required();
  scenario_cmd->add_option("--log", scenario_log, "Enforcer deviation log, for 'expect log-delta'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*scan_cmd) return run_scan(scan);
    if (*audit_cmd) return run_audit(audit_ini, audit_policy);
    if (*report_cmd) return run_report(report_in, report_out);
    if (*train_cmd) {
      if (!bind_ip.empty()) crawl_opts.bind_ip = bind_ip;
      return run_train(crawl_opts, store_dir);
    }
    if (*build_cmd) return run_build_model(model_store, model_out);
    if (*enforce_cmd) return run_enforce(enforce);
    if (*demo_cmd) return run_serve_demo(demo_listen, demo_seed);
    if (*scenario_cmd) return run_scenarios(scenario_files, scenario_target, scenario_log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

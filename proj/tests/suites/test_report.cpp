/**
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "udsaudit/report.h"

using namespace udsaudit;

namespace {

Report run_mini(int jobs, Diagnostics& diags) {
  PipelineOptions opts;
  opts.jobs = jobs;
  return run_pipeline(UDSAUDIT_MINI_IMAGE, opts, diags);
}

const ReportEndpoint* by_address(const Report& r, const std::string& addr) {
  for (const ReportEndpoint& re : r.endpoints) {
    if (re.ep.address == addr) return &re;
  }
  return nullptr;
}

// Runs the installed command-line tool; returns the exit status and
// captures stdout.
int run_cli(const std::string& args, std::string& out) {
  std::string cmd = std::string(UDSAUDIT_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  out.clear();
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int rc = pclose(pipe);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("the sample image produces the expected endpoint inventory") {
  Diagnostics diags;
  Report r = run_mini(1, diags);

  CHECK(r.image == "mini_aosp");
  CHECK(r.stats.rules_parsed == 18);
  CHECK(r.stats.services == 6);
  CHECK(r.stats.binaries_analyzed == 5);
  CHECK(r.stats.binaries_skipped == 1);

  REQUIRE(r.endpoints.size() == 5);
  // Sorted by owner binary, then address.
  CHECK(r.endpoints[0].ep.owner_binary == "/system/bin/camerad");
  CHECK(r.endpoints[1].ep.owner_binary == "/system/bin/cand");
  CHECK(r.endpoints[2].ep.owner_binary == "/system/bin/cnd");
  CHECK(r.endpoints[3].ep.owner_binary == "/system/bin/fmhal");
  CHECK(r.endpoints[4].ep.owner_binary == "/system/bin/netd");

  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].binary == "/system/bin/mcdriver");
  CHECK(r.skipped[0].reason == kReasonSkippedStatic);
}

TEST_CASE("the reserved dns proxy socket is gated only by a permission") {
  Diagnostics diags;
  Report r = run_mini(1, diags);
  const ReportEndpoint* re = by_address(r, "/dev/socket/dnsproxyd");
  REQUIRE(re != nullptr);
  CHECK(re->ep.ns == SocketNamespace::reserved);
  CHECK(re->ep.provenance == Provenance::initrc);
  CHECK(re->ep.owner_domain == "netd");
  CHECK(re->ep.confidence == Confidence::exact);
  REQUIRE(re->ep.file_entry.has_value());
  CHECK(re->ep.file_entry->mode == 0660);
  CHECK(re->ep.file_entry->gid == 3003);
  CHECK(re->ep.file_entry->selabel == "u:object_r:dnsproxyd_socket:s0");

  CHECK(re->verdict.mac_ipc_allowed);
  CHECK(re->verdict.mac_file_allowed == true);
  CHECK(re->verdict.dac_allowed == true);
  CHECK(re->verdict.accessible);
  CHECK(re->verdict.required_permissions == std::set<std::string>{"INTERNET"});
  CHECK(re->verdict.dos_risk == DosRisk::none);
  CHECK(re->checks.empty());
  CHECK(re->verdict.auth_summary == CheckStrength::none);
}

TEST_CASE("the abstract control socket is open to any allowed domain") {
  Diagnostics diags;
  Report r = run_mini(1, diags);
  const ReportEndpoint* re = by_address(r, "@cand.socket.ctrl");
  REQUIRE(re != nullptr);
  CHECK(re->ep.ns == SocketNamespace::abstract);
  CHECK(re->ep.provenance == Provenance::binary_bind);
  CHECK(re->ep.owner_domain == "cand");
  CHECK(re->ep.raw_address == std::string(1, '\0') + "cand.socket.ctrl");
  CHECK_FALSE(re->ep.file_entry.has_value());

  CHECK(re->verdict.mac_ipc_allowed);
  CHECK_FALSE(re->verdict.mac_file_allowed.has_value());
  CHECK_FALSE(re->verdict.dac_allowed.has_value());
  CHECK(re->verdict.accessible);
  CHECK(re->verdict.required_permissions.empty());
  // Restartable through a writable property: the name can be squatted.
  CHECK(re->ep.property_restart);
  CHECK(re->verdict.dos_risk == DosRisk::property_restart);
}

TEST_CASE("the filesystem camera socket is stopped by the file mac check") {
  Diagnostics diags;
  Report r = run_mini(1, diags);
  const ReportEndpoint* re = by_address(r, "/data/misc/camera/cam_socket");
  REQUIRE(re != nullptr);
  CHECK(re->ep.ns == SocketNamespace::filesystem);
  CHECK(re->ep.provenance == Provenance::binary_bind);
  CHECK(re->ep.owner_domain == "camerad");
  REQUIRE(re->ep.file_entry.has_value());
  CHECK(re->ep.file_entry->mode == 0777);
  CHECK(re->ep.file_entry->selabel == "u:object_r:camera_socket:s0");

  CHECK(re->verdict.mac_ipc_allowed);
  CHECK(re->verdict.mac_file_allowed == false);
  CHECK(re->verdict.dac_allowed == true);  // wide-open bits, blocked above
  CHECK_FALSE(re->verdict.accessible);
  CHECK(re->verdict.required_permissions.empty());
  CHECK(re->verdict.dos_risk == DosRisk::none);
}

TEST_CASE("peer checking daemons carry their strongest classification") {
  Diagnostics diags;
  Report r = run_mini(1, diags);

  const ReportEndpoint* fmhal = by_address(r, "@fmhal_sock");
  REQUIRE(fmhal != nullptr);
  CHECK(fmhal->ep.owner_domain == "fmhal");
  CHECK(fmhal->verdict.accessible);
  REQUIRE(fmhal->checks.size() == 3);
  std::set<int64_t> comparands;
  for (const CheckRow& row : fmhal->checks) {
    CHECK(row.field == CredField::uid);
    CHECK(row.usage == UsageKind::comparison);
    CHECK(row.strength == CheckStrength::secure);
    REQUIRE(row.comparand.has_value());
    comparands.insert(*row.comparand);
  }
  CHECK(comparands == std::set<int64_t>{0, 1000, 1001});
  CHECK(fmhal->verdict.auth_summary == CheckStrength::secure);

  const ReportEndpoint* cnd = by_address(r, "/dev/socket/cnd");
  REQUIRE(cnd != nullptr);
  CHECK(cnd->ep.owner_domain == "cnd");
  CHECK(cnd->verdict.accessible);
  CHECK(cnd->verdict.required_permissions.empty());  // world-writable 0666
  // The pid flows to the comm reader and, inside it, to snprintf. The
  // comm-reader row defines the endpoint summary.
  REQUIRE(cnd->checks.size() == 2);
  CHECK(cnd->checks[0].field == CredField::pid);
  CHECK(cnd->checks[0].usage == UsageKind::function_arg);
  CHECK(cnd->checks[0].callee == "caller_is_cnd_client");
  CHECK(cnd->checks[0].strength == CheckStrength::spoofable);
  CHECK(cnd->checks[1].callee == "snprintf");
  CHECK(cnd->checks[1].strength == CheckStrength::weak);
  CHECK(cnd->verdict.auth_summary == CheckStrength::spoofable);
}

TEST_CASE("json output follows the schema and canonical mode is stable") {
  Diagnostics diags;
  Report r = run_mini(1, diags);

  std::string full = emit_report(r, ReportFormat::json, false);
  nlohmann::json j = nlohmann::json::parse(full);
  CHECK(j["report_version"] == 1);
  CHECK(j["image"] == "mini_aosp");
  CHECK(j["stats"]["rules_parsed"] == 18);
  CHECK(j["stats"]["services"] == 6);
  CHECK(j["stats"]["binaries_analyzed"] == 5);
  CHECK(j["stats"]["binaries_skipped"] == 1);
  REQUIRE(j["endpoints"].is_array());
  REQUIRE(j["endpoints"].size() == 5);
  CHECK(j.contains("timing"));
  CHECK(j["timing"].contains("total_ms"));

  const nlohmann::json& netd = j["endpoints"][4];
  CHECK(netd["address"] == "/dev/socket/dnsproxyd");
  CHECK(netd["namespace"] == "RESERVED");
  CHECK(netd["daemon_binary"] == "/system/bin/netd");
  CHECK(netd["daemon_domain"] == "netd");
  CHECK(netd["provenance"] == "initrc");
  CHECK(netd["checks"].empty());
  CHECK(netd["verdict"]["mac_ipc"] == true);
  CHECK(netd["verdict"]["mac_file"] == true);
  CHECK(netd["verdict"]["dac"] == true);
  CHECK(netd["verdict"]["accessible"] == true);
  CHECK(netd["verdict"]["required_permissions"] ==
        nlohmann::json::array({"INTERNET"}));
  CHECK(netd["verdict"]["dos_risk"] == "none");

  const nlohmann::json& cand = j["endpoints"][1];
  CHECK(cand["address"] == "@cand.socket.ctrl");
  CHECK(cand["namespace"] == "ABSTRACT");
  CHECK(cand["verdict"]["mac_file"].is_null());
  CHECK(cand["verdict"]["dac"].is_null());
  CHECK(cand["verdict"]["dos_risk"] == "property_restart");

  const nlohmann::json& cnd = j["endpoints"][2];
  REQUIRE(cnd["checks"].size() == 2);
  CHECK(cnd["checks"][0]["creds"] == nlohmann::json::array({"pid"}));
  CHECK(cnd["checks"][0]["usage"] == "function_arg");
  CHECK(cnd["checks"][0]["comparand"].is_null());
  CHECK(cnd["checks"][0]["callee"] == "caller_is_cnd_client");
  CHECK(cnd["checks"][0]["strength"] == "spoofable");

  REQUIRE(j["skipped"].size() == 1);
  CHECK(j["skipped"][0]["binary"] == "/system/bin/mcdriver");
  CHECK(j["skipped"][0]["reason"] == "SKIPPED_STATIC");

  // Canonical mode: timing dropped, byte-identical across runs and
  // worker counts.
  std::string canon1 = emit_report(r, ReportFormat::json, true);
  CHECK(nlohmann::json::parse(canon1).contains("timing") == false);
  Diagnostics d2;
  Report r2 = run_mini(4, d2);
  std::string canon2 = emit_report(r2, ReportFormat::json, true);
  CHECK(canon1 == canon2);
}

TEST_CASE("the table form summarizes authentication per endpoint") {
  Diagnostics diags;
  Report r = run_mini(1, diags);
  std::string table = emit_report(r, ReportFormat::table, true);

  CHECK(table.find("Address") != std::string::npos);
  CHECK(table.find("@cand.socket.ctrl") != std::string::npos);
  CHECK(table.find("@fmhal_sock") != std::string::npos);
  CHECK(table.find("secure") != std::string::npos);
  CHECK(table.find("spoofable") != std::string::npos);
  // Inaccessible endpoints show n/a instead of a strength.
  CHECK(table.find("n/a") != std::string::npos);
  CHECK(table.find("INTERNET") != std::string::npos);
  CHECK(table.find("/system/bin/mcdriver") != std::string::npos);
  CHECK(table.find("skipped") != std::string::npos);
  CHECK(table.find("rules_parsed=18 services=6 binaries_analyzed=5 "
                    "binaries_skipped=1") != std::string::npos);
  // Canonical table carries no timing lines.
  CHECK(table.find("total:") == std::string::npos);
}

TEST_CASE("the command line tool reports success, skips, and errors") {
  std::string out;
  int rc = run_cli(std::string("analyze ") + UDSAUDIT_MINI_IMAGE +
                       " --format json --canonical --jobs 1",
                   out);
  CHECK(rc == 2);  // a skipped binary is worth flagging
  nlohmann::json j = nlohmann::json::parse(out);
  CHECK(j["image"] == "mini_aosp");
  CHECK(j["endpoints"].size() == 5);

  // Same command, table form.
  rc = run_cli(std::string("analyze ") + UDSAUDIT_MINI_IMAGE + " --format table",
               out);
  CHECK(rc == 2);
  CHECK(out.find("Address") != std::string::npos);

  // A missing image directory is a hard error.
  rc = run_cli(std::string("analyze ") + UDSAUDIT_MINI_IMAGE + "/no_such_dir",
               out);
  CHECK(rc == 1);

  // Bad flags are reported as usage errors.
  rc = run_cli("analyze", out);
  CHECK(rc == 1);
}

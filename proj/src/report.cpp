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
#include "udsaudit/report.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <thread>
#include <utility>

#include "json.hpp"
#include "udsaudit/binanalysis.h"
#include "udsaudit/cfg.h"
#include "udsaudit/correlate.h"
#include "udsaudit/dataflow.h"
#include "udsaudit/elf_image.h"
#include "udsaudit/fw_image.h"
#include "udsaudit/initrc.h"
#include "udsaudit/sepolicy.h"

namespace udsaudit {

namespace {

constexpr unsigned kNobodyId = 9999;

using Clock = std::chrono::steady_clock;

class StageClock {
 public:
  explicit StageClock(std::vector<StageTime>& out)
      : out_(out), start_(Clock::now()), mark_(start_) {}

  void lap(const char* stage) {
    Clock::time_point now = Clock::now();
    out_.push_back({stage, millis(mark_, now)});
    mark_ = now;
  }

  void finish() { out_.push_back({"total", millis(start_, Clock::now())}); }

 private:
  static double millis(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  }

  std::vector<StageTime>& out_;
  Clock::time_point start_;
  Clock::time_point mark_;
};

std::string image_id(const std::string& dir) {
  std::string s = dir;
  while (s.size() > 1 && s.back() == '/') s.pop_back();
  size_t slash = s.find_last_of('/');
  return slash == std::string::npos ? s : s.substr(slash + 1);
}

std::string hex_addr(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

// Everything the per-binary workers hand back. Plain data only: the
// ElfImage and Cfg a worker builds die with it.
struct BindInfo {
  ExtractedBind bind;
  std::vector<CredModCall> mods;
  bool close_rebind = false;
};

struct BinResult {
  std::string path;
  std::string domain;
  std::string skip_reason;  // nonempty = not analyzed
  std::vector<BindInfo> binds;
  std::vector<PeerCredCheck> checks;
  std::set<std::string> comm_callees;
};

BinResult analyze_one(const FirmwareImage& image, const std::string& path,
                      const std::string& domain, const std::set<std::string>& apis,
                      Diagnostics& diags) {
  BinResult r;
  r.path = path;
  r.domain = domain;
  const std::vector<uint8_t>* bytes = image.binary(path);
  if (!bytes) {
    r.skip_reason = kReasonMissingContent;
    return r;
  }
  try {
    ElfImage elf = load_elf(*bytes);
    if (elf.opaque()) {
      // No dynamic imports and no named functions: nothing to anchor the
      // extraction on, so don't burn time decoding the whole text segment.
      r.skip_reason = kReasonSkippedStatic;
      return r;
    }
    Cfg cfg = build_cfg(elf);
    BinaryAnalysis ba(elf, cfg, apis, &diags);
    ba.run();
    if (ba.skipped_static()) {
      r.skip_reason = kReasonSkippedStatic;
      return r;
    }
    for (const ExtractedBind& b : ba.binds()) {
      BindInfo info;
      info.bind = b;
      if (b.confidence == Confidence::exact && !ba.replay_derivation(b)) {
        diags.warn(path + ": address derivation at " + hex_addr(b.callsite) +
                   " did not replay from the binary, downgrading to symbolic");
        info.bind.confidence = Confidence::symbolic;
      }
      info.mods = ba.cred_mods(b.callsite);
      info.close_rebind = ba.close_outside_cleanup(b.callsite);
      r.binds.push_back(std::move(info));
    }
    r.checks = ba.peer_checks();
    r.comm_callees = ba.comm_reader_callees();
  } catch (const std::exception& e) {
    r.skip_reason = std::string(kReasonLoadError) + ": " + e.what();
  }
  return r;
}

std::vector<CheckRow> flatten_checks(const std::vector<PeerCredCheck>& checks,
                                     const std::set<std::string>& comm_callees) {
  std::vector<CheckRow> rows;
  for (const PeerCredCheck& c : checks) {
    for (const CredUsage& u : c.usages) {
      CheckRow row;
      row.field = u.field;
      row.usage = u.kind;
      row.comparand = u.comparand;
      row.callee = u.callee;
      PeerCredCheck single;
      single.callsite = c.callsite;
      single.creds_used = {u.field};
      single.usages = {u};
      row.strength = classify_check_strength(single, comm_callees);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

const char* ns_str(SocketNamespace ns) {
  switch (ns) {
    case SocketNamespace::filesystem: return "FILESYSTEM";
    case SocketNamespace::reserved: return "RESERVED";
    case SocketNamespace::abstract: return "ABSTRACT";
  }
  return "?";
}

const char* prov_str(Provenance p) {
  switch (p) {
    case Provenance::initrc: return "initrc";
    case Provenance::binary_bind: return "binary_bind";
    case Provenance::binary_getenv: return "binary_getenv";
  }
  return "?";
}

const char* field_str(CredField f) {
  switch (f) {
    case CredField::pid: return "pid";
    case CredField::uid: return "uid";
    case CredField::gid: return "gid";
  }
  return "?";
}

const char* usage_str(UsageKind k) {
  return k == UsageKind::comparison ? "comparison" : "function_arg";
}

const char* strength_str(CheckStrength s) {
  switch (s) {
    case CheckStrength::none: return "none";
    case CheckStrength::spoofable: return "spoofable";
    case CheckStrength::weak: return "weak";
    case CheckStrength::secure: return "secure";
  }
  return "?";
}

const char* dos_str(DosRisk d) {
  switch (d) {
    case DosRisk::none: return "none";
    case DosRisk::close_rebind: return "close_rebind";
    case DosRisk::property_restart: return "property_restart";
    case DosRisk::both: return "both";
  }
  return "?";
}

}  // namespace

Report run_pipeline(const std::string& image_dir, const PipelineOptions& opts,
                    Diagnostics& diags) {
  Report report;
  report.image = image_id(image_dir);
  StageClock clock(report.timing);

  std::set<std::string> apis = opts.bind_api_list
                                   ? BinaryAnalysis::load_bind_apis(*opts.bind_api_list)
                                   : BinaryAnalysis::default_bind_apis();

  FirmwareImage image =
      FirmwareImage::load(image_dir, image_dir + "/manifest.tsv", diags, opts.strict);
  clock.lap("load");

  PolicyDb db = parse_policy(image.policy_source(), diags, opts.strict);
  report.stats.rules_parsed = db.stats.rules_parsed;
  clock.lap("parse_policy");

  InitRcData rc = parse_image_initrc(image, diags);
  report.stats.services = rc.services.size();
  clock.lap("parse_initrc");

  RwTable table = RwTable::defaults();
  table.write_like.insert(opts.extra_write_perms.begin(), opts.extra_write_perms.end());
  DataflowGraph graph = DataflowGraph::build(db, table);
  clock.lap("build_graph");

  std::set<ObjRef> reachable = graph.query_writable(opts.subject, opts.hops);
  std::set<std::string> domains;
  for (const ObjRef& obj : reachable) {
    std::set<std::string> own = graph.owners(obj);
    if (own.empty()) {
      // No bind/listen holder in the policy; the label itself is the only
      // lead on who serves it.
      domains.insert(obj.type);
    } else {
      domains.insert(own.begin(), own.end());
    }
  }
  clock.lap("query");

  std::map<std::string, std::set<std::string>> dom2bin =
      correlate_subject_binaries(db, image, rc.services);
  std::map<std::string, std::string> bin_domain;  // path -> matched domain
  for (const std::string& d : domains) {
    auto it = dom2bin.find(d);
    if (it == dom2bin.end() || it->second.empty()) {
      report.skipped.push_back({d, kReasonNoBackingBinary});
      continue;
    }
    for (const std::string& path : it->second) {
      auto [slot, inserted] = bin_domain.emplace(path, d);
      if (!inserted && slot->second != d) {
        diags.warn("binary '" + path + "' matches domains '" + slot->second + "' and '" + d +
                   "', keeping the first");
      }
    }
  }
  clock.lap("correlate");

  std::vector<std::pair<std::string, std::string>> work(bin_domain.begin(), bin_domain.end());
  std::vector<BinResult> results(work.size());
  unsigned jobs = opts.jobs > 0 ? static_cast<unsigned>(opts.jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, work.empty() ? 1 : static_cast<unsigned>(work.size()));
  if (jobs <= 1) {
    for (size_t i = 0; i < work.size(); i++) {
      results[i] = analyze_one(image, work[i].first, work[i].second, apis, diags);
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; t++) {
      pool.emplace_back([&] {
        for (size_t i; (i = next.fetch_add(1)) < work.size();) {
          results[i] = analyze_one(image, work[i].first, work[i].second, apis, diags);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  clock.lap("binary_analysis");

  BootSimReport boot_report;
  FirmwareImage boot = simulate_boot(image, rc.services, rc.fs_actions, diags, &boot_report);
  clock.lap("boot_sim");

  // First service claiming an executable wins, same rule the boot
  // simulation applies to duplicate socket names.
  std::map<std::string, const ServiceDefinition*> svc_by_exec;
  for (const ServiceDefinition& svc : rc.services) {
    svc_by_exec.emplace(svc.exec_path, &svc);
  }

  struct Assembled {
    SocketEndpoint ep;
    bool pre_indeterminate = false;
  };

  for (const BinResult& r : results) {
    if (!r.skip_reason.empty()) {
      report.skipped.push_back({r.path, r.skip_reason});
      continue;
    }
    report.stats.binaries_analyzed++;

    const ServiceDefinition* svc = nullptr;
    if (auto it = svc_by_exec.find(r.path); it != svc_by_exec.end()) svc = it->second;
    bool prestart = svc && restart_risk(*svc, rc.triggers) == RestartRisk::property_restart;
    unsigned daemon_uid = 0;
    unsigned daemon_gid = 0;
    if (svc) {
      const AidMap& aids = boot.aid_map();
      if (!svc->user.empty()) daemon_uid = aids.resolve_uid(svc->user).value_or(kNobodyId);
      if (!svc->group.empty()) daemon_gid = aids.resolve_gid(svc->group).value_or(kNobodyId);
    }

    std::map<std::string, Assembled> endpoints;  // keyed by raw address

    if (svc) {
      for (SocketEndpoint ep : extract_reserved_sockets(*svc)) {
        ep.owner_domain = r.domain;
        ep.address = display_address(ep.raw_address, ep.ns);
        ep.property_restart = prestart;
        ep.checks = r.checks;
        // The boot simulation already resolved names and labels for this
        // file; prefer its view over the parser's static fallback.
        if (const FsEntry* e = boot.find(ep.raw_address)) ep.file_entry = *e;
        std::string key = ep.raw_address;
        endpoints.emplace(std::move(key), Assembled{std::move(ep), false});
      }
    }

    for (const BindInfo& info : r.binds) {
      const ExtractedBind& b = info.bind;
      std::optional<SocketNamespace> ns = classify_namespace(b);
      if (!ns) {
        diags.warn(r.path + ": bind at " + hex_addr(b.callsite) +
                   " has an unclassifiable address, endpoint not reported");
        continue;
      }
      std::string raw = *ns == SocketNamespace::reserved ? "/dev/socket/" + b.address_bytes
                                                         : b.address_bytes;
      bool named = *ns == SocketNamespace::abstract ? raw.size() > 1
                   : *ns == SocketNamespace::reserved ? !b.address_bytes.empty()
                                                      : !raw.empty();
      if (!named) {
        diags.warn(r.path + ": bind at " + hex_addr(b.callsite) +
                   " recovered no address bytes, endpoint not reported");
        continue;
      }

      if (auto it = endpoints.find(raw); it != endpoints.end()) {
        // init declares this socket; keep that provenance but fold in what
        // the daemon does to it after taking it over.
        SocketEndpoint& ep = it->second.ep;
        ep.cred_mods.insert(ep.cred_mods.end(), info.mods.begin(), info.mods.end());
        ep.close_rebind = ep.close_rebind || info.close_rebind;
        continue;
      }

      SocketEndpoint ep;
      ep.raw_address = raw;
      ep.ns = *ns;
      ep.address = display_address(raw, *ns);
      ep.owner_binary = r.path;
      ep.owner_domain = r.domain;
      ep.provenance = *ns == SocketNamespace::reserved ? Provenance::binary_getenv
                                                       : Provenance::binary_bind;
      ep.confidence = b.confidence;
      ep.cred_mods = info.mods;
      ep.close_rebind = info.close_rebind;
      ep.property_restart = prestart;
      ep.checks = r.checks;

      bool pre_ind = false;
      if (*ns == SocketNamespace::reserved) {
        if (const FsEntry* e = boot.find(raw)) {
          ep.file_entry = *e;
        } else {
          diags.warn(r.path + ": reserved socket '" + raw +
                     "' is not declared by any service; treated as nonexistent");
        }
      } else if (*ns == SocketNamespace::filesystem) {
        std::string lookup = normalize_path(raw).value_or(raw);
        if (const FsEntry* e = boot.find(lookup)) {
          FsEntry entry = *e;
          if (entry.selabel.empty()) {
            entry.selabel = boot.resolve_label(lookup).value_or(kDefaultLabel);
          }
          ep.file_entry = std::move(entry);
        } else {
          // The daemon creates the file at bind time; model that file,
          // labeled the way file_contexts would label a new node there.
          FsEntry entry = effective_file_entry(ep, std::nullopt, daemon_uid, daemon_gid, &pre_ind);
          entry.selabel = boot.resolve_label(lookup).value_or(kDefaultLabel);
          ep.file_entry = std::move(entry);
        }
      }
      endpoints.emplace(std::move(raw), Assembled{std::move(ep), pre_ind});
    }

    if (endpoints.empty()) {
      report.skipped.push_back({r.path, kReasonNoEndpoints});
      continue;
    }

    std::vector<CheckRow> rows = flatten_checks(r.checks, r.comm_callees);
    // Summarize strength per retrieval site, not per flattened row: a pid
    // that reaches a process-name reader must stay spoofable even when the
    // same pid also passes through an unrelated call.
    std::vector<CheckStrength> strengths;
    strengths.reserve(r.checks.size());
    for (const PeerCredCheck& c : r.checks) {
      strengths.push_back(classify_check_strength(c, r.comm_callees));
    }

    for (auto& [raw, assembled] : endpoints) {
      ReportEndpoint re;
      re.ep = std::move(assembled.ep);
      re.checks = rows;
      re.verdict = evaluate_endpoint(graph, boot, opts.subject, re.ep, strengths, diags);
      re.verdict.indeterminate_dac =
          re.verdict.indeterminate_dac || assembled.pre_indeterminate;
      report.endpoints.push_back(std::move(re));
    }
  }

  std::sort(report.endpoints.begin(), report.endpoints.end(),
            [](const ReportEndpoint& a, const ReportEndpoint& b) {
              if (a.ep.owner_binary != b.ep.owner_binary) {
                return a.ep.owner_binary < b.ep.owner_binary;
              }
              return a.ep.address < b.ep.address;
            });
  std::sort(report.skipped.begin(), report.skipped.end(),
            [](const SkippedBinary& a, const SkippedBinary& b) {
              if (a.binary != b.binary) return a.binary < b.binary;
              return a.reason < b.reason;
            });
  report.stats.binaries_skipped = report.skipped.size();
  clock.lap("evaluate");
  clock.finish();
  return report;
}

namespace {

nlohmann::ordered_json check_json(const CheckRow& row) {
  nlohmann::ordered_json j;
  j["creds"] = nlohmann::ordered_json::array({field_str(row.field)});
  j["usage"] = usage_str(row.usage);
  if (row.comparand) {
    j["comparand"] = *row.comparand;
  } else {
    j["comparand"] = nullptr;
  }
  if (row.callee.empty()) {
    j["callee"] = nullptr;
  } else {
    j["callee"] = row.callee;
  }
  j["strength"] = strength_str(row.strength);
  return j;
}

nlohmann::ordered_json endpoint_json(const ReportEndpoint& re) {
  nlohmann::ordered_json j;
  j["address"] = re.ep.address;
  j["namespace"] = ns_str(re.ep.ns);
  j["daemon_binary"] = re.ep.owner_binary;
  j["daemon_domain"] = re.ep.owner_domain;
  j["provenance"] = prov_str(re.ep.provenance);
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const CheckRow& row : re.checks) checks.push_back(check_json(row));
  j["checks"] = std::move(checks);
  nlohmann::ordered_json v;
  v["mac_ipc"] = re.verdict.mac_ipc_allowed;
  if (re.verdict.mac_file_allowed) {
    v["mac_file"] = *re.verdict.mac_file_allowed;
  } else {
    v["mac_file"] = nullptr;
  }
  if (re.verdict.dac_allowed) {
    v["dac"] = *re.verdict.dac_allowed;
  } else {
    v["dac"] = nullptr;
  }
  v["required_permissions"] =
      std::vector<std::string>(re.verdict.required_permissions.begin(),
                               re.verdict.required_permissions.end());
  v["accessible"] = re.verdict.accessible;
  v["dos_risk"] = dos_str(re.verdict.dos_risk);
  j["verdict"] = std::move(v);
  return j;
}

std::string emit_json(const Report& report, bool canonical) {
  nlohmann::ordered_json j;
  j["report_version"] = 1;
  j["image"] = report.image;
  nlohmann::ordered_json stats;
  stats["rules_parsed"] = report.stats.rules_parsed;
  stats["services"] = report.stats.services;
  stats["binaries_analyzed"] = report.stats.binaries_analyzed;
  stats["binaries_skipped"] = report.stats.binaries_skipped;
  j["stats"] = std::move(stats);
  nlohmann::ordered_json eps = nlohmann::ordered_json::array();
  for (const ReportEndpoint& re : report.endpoints) eps.push_back(endpoint_json(re));
  j["endpoints"] = std::move(eps);
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const SkippedBinary& s : report.skipped) {
    nlohmann::ordered_json row;
    row["binary"] = s.binary;
    row["reason"] = s.reason;
    skipped.push_back(std::move(row));
  }
  j["skipped"] = std::move(skipped);
  if (!canonical) {
    nlohmann::ordered_json timing;
    for (const StageTime& st : report.timing) timing[st.stage + "_ms"] = st.ms;
    j["timing"] = std::move(timing);
  }
  return j.dump(2) + "\n";
}

std::string render_table(const std::vector<std::array<std::string, 7>>& rows) {
  std::array<size_t, 7> width{};
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); c++) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (size_t i = 0; i < rows.size(); i++) {
    std::string line;
    for (size_t c = 0; c < rows[i].size(); c++) {
      line += rows[i][c];
      if (c + 1 < rows[i].size()) {
        line.append(width[c] - rows[i][c].size() + 2, ' ');
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
    if (i == 0) {
      std::string sep;
      for (size_t c = 0; c < width.size(); c++) {
        sep.append(width[c], '-');
        if (c + 1 < width.size()) sep.append(2, ' ');
      }
      while (!sep.empty() && sep.back() == ' ') sep.pop_back();
      out += sep;
      out += '\n';
    }
  }
  return out;
}

std::string join_perms(const std::set<std::string>& perms) {
  std::string out;
  for (const std::string& p : perms) {
    if (!out.empty()) out += ",";
    out += p;
  }
  return out.empty() ? "-" : out;
}

std::string emit_table(const Report& report, bool canonical) {
  std::vector<std::array<std::string, 7>> rows;
  rows.push_back({"Address", "Namespace", "Daemon", "Auth Checks", "Accessible",
                  "Required Perms", "DoS Risk"});
  for (const ReportEndpoint& re : report.endpoints) {
    std::string auth;
    if (!re.verdict.accessible) {
      auth = "n/a";
    } else if (re.checks.empty()) {
      auth = "none";
    } else {
      auth = strength_str(re.verdict.auth_summary);
    }
    rows.push_back({re.ep.address, ns_str(re.ep.ns), re.ep.owner_binary, auth,
                    re.verdict.accessible ? "yes" : "no",
                    re.verdict.accessible ? join_perms(re.verdict.required_permissions) : "-",
                    dos_str(re.verdict.dos_risk)});
  }
  for (const SkippedBinary& s : report.skipped) {
    rows.push_back({"-", "-", s.binary, "skipped", "-", "-", "-"});
  }
  std::string out = render_table(rows);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "\nrules_parsed=%zu services=%zu binaries_analyzed=%zu binaries_skipped=%zu\n",
                report.stats.rules_parsed, report.stats.services,
                report.stats.binaries_analyzed, report.stats.binaries_skipped);
  out += buf;
  if (!canonical) {
    for (const StageTime& st : report.timing) {
      std::snprintf(buf, sizeof(buf), "%s: %.1f ms\n", st.stage.c_str(), st.ms);
      out += buf;
    }
  }
  return out;
}

}  // namespace

std::string emit_report(const Report& report, ReportFormat format, bool canonical) {
  return format == ReportFormat::json ? emit_json(report, canonical)
                                      : emit_table(report, canonical);
}

}  // namespace udsaudit

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
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.h"
#include "udsaudit/access_eval.h"

using namespace udsaudit;
namespace fs = std::filesystem;

namespace {

DataflowGraph graph_from(const char* policy) {
  Diagnostics diags;
  PolicyDb db = parse_policy(policy, diags);
  REQUIRE(diags.count() == 0);
  return DataflowGraph::build(db);
}

FsEntry entry(std::string path, unsigned mode, unsigned uid, unsigned gid,
              std::string selabel = "u:object_r:some_socket:s0",
              FileKind kind = FileKind::socket_file) {
  FsEntry e;
  e.path = std::move(path);
  e.mode = mode;
  e.uid = uid;
  e.gid = gid;
  e.selabel = std::move(selabel);
  e.kind = kind;
  e.metadata_only = true;
  return e;
}

SocketEndpoint abstract_ep(const std::string& name, const std::string& domain) {
  SocketEndpoint ep;
  ep.raw_address = std::string(1, '\0') + name;
  ep.address = "@" + name;
  ep.ns = SocketNamespace::abstract;
  ep.owner_domain = domain;
  ep.provenance = Provenance::binary_bind;
  return ep;
}

SocketEndpoint file_ep(const std::string& path, const std::string& domain,
                       std::optional<FsEntry> fe) {
  SocketEndpoint ep;
  ep.raw_address = path;
  ep.address = path;
  ep.ns = SocketNamespace::filesystem;
  ep.owner_domain = domain;
  ep.file_entry = std::move(fe);
  ep.provenance = Provenance::binary_bind;
  return ep;
}

// Image containing only what each test inserts, plus the mandatory policy.
FirmwareImage empty_image(const std::string& tag) {
  fs::path root = fs::path(UDSAUDIT_SCRATCH) / ("access_" + tag);
  fs::remove_all(root);
  fs::create_directories(root / "fs");
  std::ofstream(root / "manifest.tsv") << "";
  std::ofstream(root / "sepolicy.txt") << "allow a b:file read;\n";
  Diagnostics diags;
  return FirmwareImage::load(root.string(), (root / "manifest.tsv").string(), diags);
}

}  // namespace

TEST_CASE("threat-model credentials mirror the app sandbox") {
  CredentialSet none = threat_model_credentials({});
  CHECK(none.uid == kUntrustedAppUid);
  CHECK(none.primary_gid == kUntrustedAppUid);
  CHECK(none.supplementary_gids.empty());

  CredentialSet all = threat_model_credentials(kGrantablePermissions);
  CHECK(all.supplementary_gids == std::set<unsigned>{1077, 3001, 3002, 3003});

  CredentialSet custom = threat_model_credentials({"INTERNET"}, 10456);
  CHECK(custom.uid == 10456);
  CHECK(custom.supplementary_gids == std::set<unsigned>{3003});
  CHECK(custom.holds_gid(3003));
  CHECK(custom.holds_gid(10456));
  CHECK_FALSE(custom.holds_gid(3002));

  CHECK_THROWS_AS(threat_model_credentials({"CAMERA"}), UnknownPermission);
}

TEST_CASE("bind shapes classify into namespaces") {
  ExtractedBind b;
  b.address_bytes = std::string("\0abstract.name", 14);
  b.hint = NamespaceHint::abstract;
  CHECK(classify_namespace(b) == SocketNamespace::abstract);

  b.address_bytes = "/data/misc/foo.sock";
  b.hint = NamespaceHint::filesystem;
  CHECK(classify_namespace(b) == SocketNamespace::filesystem);

  b.address_bytes = "ctlname";
  b.hint = NamespaceHint::reserved_env;
  CHECK(classify_namespace(b) == SocketNamespace::reserved);

  ExtractedBind junk;
  junk.address_bytes = "neither-slash-nor-nul";
  junk.hint = NamespaceHint::unknown;
  CHECK_FALSE(classify_namespace(junk).has_value());
  ExtractedBind empty;
  empty.hint = NamespaceHint::unknown;
  CHECK_FALSE(classify_namespace(empty).has_value());
}

TEST_CASE("DAC selects exactly one class before testing the bit") {
  // Group is chosen over other even when it grants less.
  FsEntry e = entry("/x", 0606, 0, 3003);
  CredentialSet in_group = threat_model_credentials({"INTERNET"});
  CredentialSet outsider = threat_model_credentials({});
  CHECK_FALSE(eval_dac(e, in_group));   // group bits 0, despite other-write
  CHECK(eval_dac(e, outsider));         // other bits apply

  // Owner is chosen over group and other.
  FsEntry own = entry("/y", 0077, kUntrustedAppUid, 3003);
  CHECK_FALSE(eval_dac(own, in_group));

  // Owner match grants regardless of the other classes.
  FsEntry mine = entry("/z", 0200, kUntrustedAppUid, 0);
  CHECK(eval_dac(mine, threat_model_credentials({})));

  // Search uses the execute bit with the same precedence.
  FsEntry dir = entry("/d", 0701, 0, 3003, "u:object_r:d:s0", FileKind::directory);
  CHECK_FALSE(eval_dac_search(dir, in_group));
  CHECK(eval_dac_search(dir, outsider));
}

TEST_CASE("DAC agrees with the independent mode-bit oracle") {
  std::mt19937 rng(7301);
  std::uniform_int_distribution<unsigned> mode_dist(0, 07777);
  std::uniform_int_distribution<int> id_pick(0, 4);
  const unsigned ids[] = {0, 1000, 3003, kUntrustedAppUid, 9999};

  for (int trial = 0; trial < 2000; trial++) {
    FsEntry e = entry("/sweep", mode_dist(rng), ids[id_pick(rng)], ids[id_pick(rng)]);
    std::set<std::string> grants;
    for (const std::string& p : kGrantablePermissions) {
      if (rng() & 1) grants.insert(p);
    }
    CredentialSet creds = threat_model_credentials(grants);
    CAPTURE(e.mode);
    CAPTURE(e.uid);
    CAPTURE(e.gid);
    CHECK(eval_dac(e, creds) ==
          testing::oracle_may_write(e.mode, e.uid, e.gid, creds.uid, creds.primary_gid,
                                    creds.supplementary_gids));
    CHECK(eval_dac_search(e, creds) ==
          testing::oracle_may_search(e.mode, e.uid, e.gid, creds.uid, creds.primary_gid,
                                     creds.supplementary_gids));
  }
}

TEST_CASE("MAC needs a write edge onto the owner domain's socket") {
  DataflowGraph g = graph_from(
      "allow untrusted_app netd:unix_stream_socket connectto;\n"
      "allow untrusted_app netd_socket:sock_file write;\n"
      "allow untrusted_app other_socket:sock_file getattr;\n");
  Diagnostics diags;

  SocketEndpoint ep = file_ep("/dev/socket/dnsproxyd", "netd",
                              entry("/dev/socket/dnsproxyd", 0666, 0, 0,
                                    "u:object_r:netd_socket:s0"));
  MacResult r = eval_mac(g, "untrusted_app", ep, diags);
  CHECK(r.ipc_allowed);
  REQUIRE(r.file_allowed.has_value());
  CHECK(*r.file_allowed);

  // Wrong owner domain: no write edge to its socket.
  SocketEndpoint other = file_ep("/dev/socket/x", "vold",
                                 entry("/dev/socket/x", 0666, 0, 0,
                                       "u:object_r:netd_socket:s0"));
  CHECK_FALSE(eval_mac(g, "untrusted_app", other, diags).ipc_allowed);

  // Read-like permission on the sock_file is not enough.
  SocketEndpoint ro = file_ep("/dev/socket/y", "netd",
                              entry("/dev/socket/y", 0666, 0, 0,
                                    "u:object_r:other_socket:s0"));
  CHECK_FALSE(*eval_mac(g, "untrusted_app", ro, diags).file_allowed);
}

TEST_CASE("MAC fails closed on missing knowledge") {
  DataflowGraph g = graph_from("allow untrusted_app netd:unix_stream_socket connectto;\n");
  Diagnostics diags;

  SocketEndpoint unknown_owner = abstract_ep("x", "");
  CHECK_FALSE(eval_mac(g, "untrusted_app", unknown_owner, diags).ipc_allowed);
  CHECK(diags.count() == 1);

  SocketEndpoint untyped = file_ep("/dev/socket/z", "netd",
                                   entry("/dev/socket/z", 0666, 0, 0, "garbage-label"));
  MacResult r = eval_mac(g, "untrusted_app", untyped, diags);
  CHECK(r.ipc_allowed);
  REQUIRE(r.file_allowed.has_value());
  CHECK_FALSE(*r.file_allowed);
  CHECK(diags.count() == 2);

  // Abstract endpoints never get a file verdict.
  SocketEndpoint abs = abstract_ep("name", "netd");
  CHECK_FALSE(eval_mac(g, "untrusted_app", abs, diags).file_allowed.has_value());
}

TEST_CASE("effective entry starts from the boot file when one exists") {
  SocketEndpoint ep = file_ep("/dev/socket/ctl", "d",
                              entry("/dev/socket/ctl", 0660, 0, 3003));
  bool ind = false;
  FsEntry eff = effective_file_entry(ep, ep.file_entry, 0, 0, &ind);
  CHECK(eff == *ep.file_entry);
  CHECK_FALSE(ind);

  // umask/seteuid only matter for files the daemon itself creates.
  CredModCall umask_call;
  umask_call.kind = CredModKind::umask;
  umask_call.args = {0027u};
  umask_call.position = CredModPosition::before_bind;
  ep.cred_mods.push_back(umask_call);
  eff = effective_file_entry(ep, ep.file_entry, 0, 0, &ind);
  CHECK(eff.mode == 0660u);
  CHECK_FALSE(ind);
}

TEST_CASE("daemon-created files take umask and effective ids") {
  SocketEndpoint ep = file_ep("/data/misc/d/ctl.sock", "d", std::nullopt);

  bool ind = false;
  FsEntry eff = effective_file_entry(ep, std::nullopt, 1000, 1000, &ind);
  CHECK(eff.path == "/data/misc/d/ctl.sock");
  CHECK(eff.mode == 0777u);  // no umask call visible: assume permissive
  CHECK(eff.uid == 1000);
  CHECK(eff.gid == 1000);
  CHECK(eff.kind == FileKind::socket_file);
  CHECK_FALSE(ind);

  CredModCall um;
  um.kind = CredModKind::umask;
  um.args = {0027u};
  um.position = CredModPosition::before_bind;
  ep.cred_mods.push_back(um);
  CredModCall uid;
  uid.kind = CredModKind::seteuid;
  uid.args = {1006u};
  uid.position = CredModPosition::before_bind;
  ep.cred_mods.push_back(uid);
  eff = effective_file_entry(ep, std::nullopt, 1000, 1000, &ind);
  CHECK(eff.mode == 0750u);
  CHECK(eff.uid == 1006);
  CHECK(eff.gid == 1000);
  CHECK_FALSE(ind);

  // An unresolvable umask argument taints the result instead of guessing.
  SocketEndpoint vague = file_ep("/data/v.sock", "d", std::nullopt);
  CredModCall unknown_umask;
  unknown_umask.kind = CredModKind::umask;
  unknown_umask.args = {std::nullopt};
  unknown_umask.position = CredModPosition::before_bind;
  vague.cred_mods.push_back(unknown_umask);
  bool vague_ind = false;
  effective_file_entry(vague, std::nullopt, 0, 0, &vague_ind);
  CHECK(vague_ind);
}

TEST_CASE("rewrites after bind override both boot files and created files") {
  SocketEndpoint ep = file_ep("/dev/socket/ctl", "d",
                              entry("/dev/socket/ctl", 0600, 0, 0));
  CredModCall chmod_call;
  chmod_call.kind = CredModKind::fchmod;
  chmod_call.args = {0666u};
  chmod_call.position = CredModPosition::after_bind;
  ep.cred_mods.push_back(chmod_call);
  CredModCall chown_call;
  chown_call.kind = CredModKind::chown;
  chown_call.args = {1000u, 3003u};
  chown_call.position = CredModPosition::after_bind;
  ep.cred_mods.push_back(chown_call);

  bool ind = false;
  FsEntry eff = effective_file_entry(ep, ep.file_entry, 0, 0, &ind);
  CHECK(eff.mode == 0666u);
  CHECK(eff.uid == 1000);
  CHECK(eff.gid == 3003);
  CHECK_FALSE(ind);

  // Sticky/set-id bits survive the 07777 mask.
  ep.cred_mods[0].args = {02770u};
  eff = effective_file_entry(ep, ep.file_entry, 0, 0, &ind);
  CHECK(eff.mode == 02770u);

  // chmod with an unknown argument taints; chown with one known and one
  // unknown id likewise.
  ep.cred_mods[0].args = {std::nullopt};
  effective_file_entry(ep, ep.file_entry, 0, 0, &ind);
  CHECK(ind);
  ind = false;
  ep.cred_mods[0].args = {0666u};
  ep.cred_mods[1].args = {1000u, std::nullopt};
  effective_file_entry(ep, ep.file_entry, 0, 0, &ind);
  CHECK(ind);
}

TEST_CASE("abstract endpoints are judged by MAC IPC alone") {
  DataflowGraph g = graph_from("allow untrusted_app cand:unix_stream_socket connectto;\n");
  FirmwareImage image = empty_image("abstract");
  Diagnostics diags;

  SocketEndpoint ep = abstract_ep("cand.socket", "cand");
  // A stray (nonsensical) file entry must not change the verdict.
  ep.file_entry = entry("/nonsense", 0000, 0, 0);

  AccessVerdict v = evaluate_endpoint(g, image, "untrusted_app", ep,
                                      {CheckStrength::weak}, diags);
  CHECK(v.accessible);
  CHECK(v.mac_ipc_allowed);
  CHECK_FALSE(v.mac_file_allowed.has_value());
  CHECK_FALSE(v.dac_allowed.has_value());
  CHECK(v.required_permissions.empty());
  CHECK(v.auth_summary == CheckStrength::weak);
  CHECK(v.dos_risk == DosRisk::none);

  SocketEndpoint denied = abstract_ep("other", "vold");
  AccessVerdict dv = evaluate_endpoint(g, image, "untrusted_app", denied, {}, diags);
  CHECK_FALSE(dv.accessible);
  CHECK(dv.auth_summary == CheckStrength::none);
}

TEST_CASE("filesystem endpoints need all three gates") {
  DataflowGraph g = graph_from(
      "allow untrusted_app netd:unix_stream_socket connectto;\n"
      "allow untrusted_app netd_socket:sock_file write;\n");
  FirmwareImage image = empty_image("gates");
  Diagnostics diags;

  SocketEndpoint ep = file_ep("/dev/socket/dnsproxyd", "netd",
                              entry("/dev/socket/dnsproxyd", 0660, 0, 3003,
                                    "u:object_r:netd_socket:s0"));
  AccessVerdict v = evaluate_endpoint(g, image, "untrusted_app", ep, {}, diags);
  CHECK(v.accessible);
  CHECK(v.mac_ipc_allowed);
  CHECK(v.mac_file_allowed == true);
  CHECK(v.dac_allowed == true);
  CHECK(v.required_permissions == std::set<std::string>{"INTERNET"});

  // Without the group bit no grant subset helps.
  SocketEndpoint closed = file_ep("/dev/socket/dnsproxyd", "netd",
                                  entry("/dev/socket/dnsproxyd", 0600, 0, 3003,
                                        "u:object_r:netd_socket:s0"));
  AccessVerdict cv = evaluate_endpoint(g, image, "untrusted_app", closed, {}, diags);
  CHECK_FALSE(cv.accessible);
  CHECK(cv.dac_allowed == false);
  CHECK(cv.required_permissions.empty());

  // World-writable needs no grants at all.
  SocketEndpoint open_ep = file_ep("/dev/socket/dnsproxyd", "netd",
                                   entry("/dev/socket/dnsproxyd", 0666, 0, 0,
                                         "u:object_r:netd_socket:s0"));
  AccessVerdict ov = evaluate_endpoint(g, image, "untrusted_app", open_ep, {}, diags);
  CHECK(ov.accessible);
  CHECK(ov.required_permissions.empty());

  // MAC file denial blocks even a world-writable file, and the required
  // set stays empty because no subset makes the endpoint reachable.
  DataflowGraph ipc_only = graph_from("allow untrusted_app netd:unix_stream_socket connectto;\n");
  AccessVerdict mv = evaluate_endpoint(ipc_only, image, "untrusted_app", open_ep, {}, diags);
  CHECK_FALSE(mv.accessible);
  CHECK(mv.mac_ipc_allowed);
  CHECK(mv.mac_file_allowed == false);
  CHECK(mv.dac_allowed == true);
  CHECK(mv.required_permissions.empty());
}

TEST_CASE("ancestor directories gate filesystem endpoints") {
  DataflowGraph g = graph_from(
      "allow untrusted_app camerad:unix_stream_socket connectto;\n"
      "allow untrusted_app camera_socket:sock_file write;\n");
  Diagnostics diags;

  FirmwareImage image = empty_image("parents");
  FsEntry root_dir = entry("/", 0755, 0, 0, "u:object_r:rootfs:s0", FileKind::directory);
  FsEntry data = entry("/data", 0771, 1000, 1000, "u:object_r:system_data_file:s0",
                       FileKind::directory);
  FsEntry priv_dir = entry("/data/private", 0770, 1006, 1006,
                           "u:object_r:camera_data_file:s0", FileKind::directory);
  image = image.insert_entry(root_dir).insert_entry(data).insert_entry(priv_dir);

  SocketEndpoint ep = file_ep("/data/private/cam.sock", "camerad",
                              entry("/data/private/cam.sock", 0666, 1006, 1006,
                                    "u:object_r:camera_socket:s0"));
  AccessVerdict v = evaluate_endpoint(g, image, "untrusted_app", ep, {}, diags);
  CHECK_FALSE(v.accessible);  // /data/private has no other-search bit
  CHECK(v.dac_allowed == false);

  // Opening the directory opens the endpoint.
  FsEntry opened = priv_dir;
  opened.mode = 0771;
  FirmwareImage image2 = image.insert_entry(opened, /*overwrite=*/true);
  AccessVerdict v2 = evaluate_endpoint(g, image2, "untrusted_app", ep, {}, diags);
  CHECK(v2.accessible);

  // Ancestors absent from the image are assumed traversable.
  SocketEndpoint elsewhere = file_ep("/mnt/unknown/dir/s.sock", "camerad",
                                     entry("/mnt/unknown/dir/s.sock", 0666, 0, 0,
                                           "u:object_r:camera_socket:s0"));
  AccessVerdict v3 = evaluate_endpoint(g, image, "untrusted_app", elsewhere, {}, diags);
  CHECK(v3.accessible);
}

TEST_CASE("required permission sets are minimal") {
  DataflowGraph g = graph_from(
      "allow untrusted_app d:unix_stream_socket connectto;\n"
      "allow untrusted_app d_socket:sock_file write;\n");
  FirmwareImage image = empty_image("minimal");
  Diagnostics diags;

  auto verdict_for = [&](unsigned mode, unsigned uid, unsigned gid) {
    SocketEndpoint ep = file_ep("/dev/socket/d", "d",
                                entry("/dev/socket/d", mode, uid, gid,
                                      "u:object_r:d_socket:s0"));
    return evaluate_endpoint(g, image, "untrusted_app", ep, {}, diags);
  };

  CHECK(verdict_for(0660, 0, 3002).required_permissions ==
        std::set<std::string>{"BLUETOOTH"});
  CHECK(verdict_for(0660, 0, 1077).required_permissions ==
        std::set<std::string>{"MANAGE_EXTERNAL_STORAGE"});
  CHECK(verdict_for(0662, 0, 3001).required_permissions.empty());  // other bit cheaper
  CHECK(verdict_for(0620, kUntrustedAppUid, 3001).required_permissions.empty());  // owner
  // Group-writable for a non-grantable gid: no subset works.
  AccessVerdict ungranted = verdict_for(0660, 0, 1000);
  CHECK_FALSE(ungranted.accessible);
  CHECK(ungranted.required_permissions.empty());
}

TEST_CASE("verdicts do not depend on the synthetic app uid") {
  DataflowGraph g = graph_from(
      "allow untrusted_app d:unix_stream_socket connectto;\n"
      "allow untrusted_app d_socket:sock_file write;\n");
  FirmwareImage image = empty_image("uid_choice");
  Diagnostics diags;

  for (unsigned mode : {0666u, 0660u, 0606u, 0600u, 0620u}) {
    SocketEndpoint ep = file_ep("/dev/socket/d", "d",
                                entry("/dev/socket/d", mode, 0, 3003,
                                      "u:object_r:d_socket:s0"));
    AccessVerdict a = evaluate_endpoint(g, image, "untrusted_app", ep, {}, diags, 10123);
    AccessVerdict b = evaluate_endpoint(g, image, "untrusted_app", ep, {}, diags, 10777);
    CAPTURE(mode);
    CHECK(a.accessible == b.accessible);
    CHECK(a.required_permissions == b.required_permissions);
    CHECK(a.dac_allowed == b.dac_allowed);
  }
}

TEST_CASE("DoS risk applies to abstract names only") {
  auto with_flags = [](bool rebind, bool restart) {
    SocketEndpoint ep = abstract_ep("x", "d");
    ep.close_rebind = rebind;
    ep.property_restart = restart;
    MacResult mac;
    mac.ipc_allowed = true;
    return combine_verdict(ep, mac, std::nullopt, {}, {}, false).dos_risk;
  };
  CHECK(with_flags(false, false) == DosRisk::none);
  CHECK(with_flags(true, false) == DosRisk::close_rebind);
  CHECK(with_flags(false, true) == DosRisk::property_restart);
  CHECK(with_flags(true, true) == DosRisk::both);

  SocketEndpoint fsep = file_ep("/dev/socket/d", "d", entry("/dev/socket/d", 0666, 0, 0));
  fsep.close_rebind = true;
  fsep.property_restart = true;
  MacResult mac;
  mac.ipc_allowed = true;
  mac.file_allowed = true;
  CHECK(combine_verdict(fsep, mac, true, {}, {}, false).dos_risk == DosRisk::none);
}

TEST_CASE("auth summary is the strongest observed check") {
  SocketEndpoint ep = abstract_ep("x", "d");
  MacResult mac;
  mac.ipc_allowed = true;
  CHECK(combine_verdict(ep, mac, std::nullopt, {}, {}, false).auth_summary ==
        CheckStrength::none);
  CHECK(combine_verdict(ep, mac, std::nullopt,
                        {CheckStrength::spoofable, CheckStrength::weak}, {}, false)
            .auth_summary == CheckStrength::weak);
  CHECK(combine_verdict(ep, mac, std::nullopt,
                        {CheckStrength::weak, CheckStrength::secure,
                         CheckStrength::spoofable},
                        {}, false)
            .auth_summary == CheckStrength::secure);
}

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

#include "doctest.h"
#include "udsaudit/initrc.h"

using namespace udsaudit;
namespace fs = std::filesystem;

namespace {

// Assembles an in-scratch image whose rc files come from `rc_files`
// (path -> content). Gives every rc file a manifest record plus a root
// entry so parse_image_initrc has something to chew on.
FirmwareImage image_with_rc(const std::string& tag,
                            const std::vector<std::pair<std::string, std::string>>& rc_files,
                            Diagnostics& diags,
                            const std::string& file_contexts = "") {
  fs::path root = fs::path(UDSAUDIT_SCRATCH) / ("initrc_" + tag);
  fs::remove_all(root);
  fs::create_directories(root / "fs");
  std::string manifest = "/\t755\t0\t0\tu:object_r:rootfs:s0\tdirectory\n";
  for (const auto& [path, content] : rc_files) {
    fs::path backing = root / "fs" / path.substr(1);
    fs::create_directories(backing.parent_path());
    std::ofstream(backing) << content;
    manifest += path + "\t644\t0\t0\tu:object_r:rootfs:s0\tregular\n";
  }
  std::ofstream(root / "manifest.tsv") << manifest;
  std::ofstream(root / "sepolicy.txt") << "allow a b:file read;\n";
  if (!file_contexts.empty()) std::ofstream(root / "file_contexts") << file_contexts;
  return FirmwareImage::load(root.string(), (root / "manifest.tsv").string(), diags);
}

}  // namespace

TEST_CASE("service blocks collect options until the next block starts") {
  Diagnostics diags;
  InitRcData data = parse_initrc(
      "service netd /system/bin/netd --flag\n"
      "    class main\n"
      "    user root\n"
      "    group root inet wakelock\n"
      "    socket dnsproxyd stream+passcred 0660 root inet\n"
      "    socket mdns dgram 0666 root root u:object_r:mdns_socket:s0\n"
      "    oneshot\n"
      "    disabled\n"
      "\n"
      "service empty /vendor/bin/empty\n",
      "/init.rc", diags);

  REQUIRE(data.services.size() == 2);
  const ServiceDefinition& netd = data.services[0];
  CHECK(netd.name == "netd");
  CHECK(netd.exec_path == "/system/bin/netd");
  CHECK(netd.args == std::vector<std::string>{"--flag"});
  CHECK(netd.user == "root");
  CHECK(netd.group == "root");
  CHECK(netd.supp_groups == std::vector<std::string>{"inet", "wakelock"});
  CHECK(netd.svc_class == "main");
  CHECK(netd.oneshot);
  CHECK(netd.disabled);
  CHECK(netd.origin == "/init.rc");

  REQUIRE(netd.sockets.size() == 2);
  CHECK(netd.sockets[0].name == "dnsproxyd");
  CHECK(netd.sockets[0].sock_type == SockType::stream);
  CHECK(netd.sockets[0].perm == 0660);
  CHECK(netd.sockets[0].user == "root");
  CHECK(netd.sockets[0].group == "inet");
  CHECK(netd.sockets[0].seclabel.empty());
  CHECK(netd.sockets[1].sock_type == SockType::dgram);
  CHECK(netd.sockets[1].seclabel == "u:object_r:mdns_socket:s0");

  CHECK(data.services[1].sockets.empty());
  CHECK(data.services[1].user.empty());
}

TEST_CASE("malformed socket options are skipped with a warning") {
  Diagnostics diags;
  InitRcData data = parse_initrc(
      "service s /bin/s\n"
      "    socket ok stream 0660\n"
      "    socket bad tcp 0660\n"        // unknown type
      "    socket bad2 stream 9999\n"    // not octal / too large
      "    socket bad3 stream 4755\n"    // above 0777
      "    socket short stream\n"        // too few args
      "    socket ok stream 0600\n",     // duplicate name
      "/init.rc", diags);
  REQUIRE(data.services.size() == 1);
  REQUIRE(data.services[0].sockets.size() == 1);
  CHECK(data.services[0].sockets[0].perm == 0660);
  CHECK(diags.count() == 5);
}

TEST_CASE("unknown service options and on-commands are counted") {
  Diagnostics diags;
  InitRcData data = parse_initrc(
      "service s /bin/s\n"
      "    capabilities NET_ADMIN\n"
      "    setenv A B\n"
      "on boot\n"
      "    write /proc/sys/x 1\n"
      "stray_toplevel_line\n",
      "/init.rc", diags);
  CHECK(data.unknown_options == 2);
  CHECK(data.unknown_commands == 2);
}

TEST_CASE("line continuations join logical lines") {
  Diagnostics diags;
  InitRcData data = parse_initrc(
      "service s /bin/s \\\n"
      "    --one --two\n"
      "    user system\n",
      "/init.rc", diags);
  REQUIRE(data.services.size() == 1);
  CHECK(data.services[0].args == std::vector<std::string>{"--one", "--two"});
  CHECK(data.services[0].user == "system");
}

TEST_CASE("on-block commands record their trigger context") {
  Diagnostics diags;
  InitRcData data = parse_initrc(
      "on early-init\n"
      "    mkdir /dev/socket 0755 root root\n"
      "    mkdir /data/misc\n"
      "on boot\n"
      "    chmod 0771 /data/misc/camera\n"
      "    chown camera camera /data/misc/camera\n"
      "    restorecon /data/misc/camera\n"
      "on property:persist.svc.enable=1\n"
      "    start svc_a\n"
      "on property:persist.svc.bounce=*\n"
      "    restart svc_b\n"
      "on property:sys.shutdown.requested\n"
      "    stop svc_c\n"
      "on boot\n"
      "    start not_recorded\n",  // start outside a property block
      "/init.rc", diags);

  REQUIRE(data.fs_actions.size() == 5);
  CHECK(data.fs_actions[0].kind == FsAction::Kind::mkdir);
  CHECK(data.fs_actions[0].mode == 0755u);
  CHECK(data.fs_actions[0].user == "root");
  CHECK_FALSE(data.fs_actions[1].mode.has_value());
  CHECK(data.fs_actions[2].kind == FsAction::Kind::chmod);
  CHECK(data.fs_actions[2].mode == 0771u);
  CHECK(data.fs_actions[3].kind == FsAction::Kind::chown);
  CHECK(data.fs_actions[3].user == "camera");
  CHECK(data.fs_actions[4].kind == FsAction::Kind::restorecon);

  REQUIRE(data.triggers.size() == 3);
  CHECK(data.triggers[0].property == "persist.svc.enable");
  CHECK(data.triggers[0].value == "1");
  CHECK(data.triggers[0].action == PropertyTrigger::Action::start);
  CHECK(data.triggers[1].value == "*");
  CHECK(data.triggers[1].action == PropertyTrigger::Action::restart);
  CHECK(data.triggers[2].property == "sys.shutdown.requested");
  CHECK(data.triggers[2].value == "*");  // missing =value matches any
  CHECK(data.triggers[2].action == PropertyTrigger::Action::stop);
}

TEST_CASE("image-wide parse follows imports once and warns on bad ones") {
  Diagnostics diags;
  FirmwareImage image = image_with_rc(
      "imports",
      {{"/init.rc",
        "import /init.extra.rc\n"
        "import /init.missing.rc\n"
        "import ${ro.hardware}.rc\n"
        "service main /bin/main\n"},
       {"/init.extra.rc",
        "import /init.rc\n"  // cycle back to the importer
        "service extra /bin/extra\n"}},
      diags);
  InitRcData data = parse_image_initrc(image, diags);

  // /init.extra.rc sorts first, then pulls /init.rc via its import; each
  // file parses exactly once despite the cycle.
  REQUIRE(data.services.size() == 2);
  CHECK(data.services[0].name == "extra");
  CHECK(data.services[1].name == "main");

  size_t missing = 0, expansion = 0;
  for (const std::string& w : diags.warnings()) {
    if (w.find("init.missing.rc") != std::string::npos) missing++;
    if (w.find("property expansion") != std::string::npos) expansion++;
  }
  CHECK(missing == 1);
  CHECK(expansion == 1);
}

TEST_CASE("socket options become reserved endpoints with metadata attached") {
  ServiceDefinition svc;
  svc.name = "netd";
  svc.exec_path = "/system/bin/netd";
  SocketOption opt;
  opt.name = "dnsproxyd";
  opt.sock_type = SockType::stream;
  opt.perm = 0660;
  opt.user = "root";
  opt.group = "inet";
  svc.sockets.push_back(opt);
  SocketOption labeled;
  labeled.name = "mdns";
  labeled.perm = 0666;
  labeled.seclabel = "u:object_r:mdns_socket:s0";
  svc.sockets.push_back(labeled);

  auto eps = extract_reserved_sockets(svc);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].address == "dnsproxyd");
  CHECK(eps[0].raw_address == "/dev/socket/dnsproxyd");
  CHECK(eps[0].ns == SocketNamespace::reserved);
  CHECK(eps[0].owner_binary == "/system/bin/netd");
  CHECK(eps[0].provenance == Provenance::initrc);
  CHECK(eps[0].confidence == Confidence::exact);
  REQUIRE(eps[0].file_entry.has_value());
  CHECK(eps[0].file_entry->mode == 0660u);
  CHECK(eps[0].file_entry->uid == 0);
  CHECK(eps[0].file_entry->gid == 3003);  // inet
  CHECK(eps[0].file_entry->kind == FileKind::socket_file);
  CHECK(eps[0].file_entry->selabel.empty());
  CHECK(eps[1].file_entry->selabel == "u:object_r:mdns_socket:s0");
}

TEST_CASE("boot simulation applies actions then creates socket files") {
  Diagnostics diags;
  FirmwareImage image = image_with_rc(
      "bootsim",
      {{"/init.rc",
        "on early-init\n"
        "    mkdir /dev/socket 0755 root root\n"
        "    mkdir /dev/socket\n"            // second mkdir is a no-op
        "    chmod 0700 /nonexistent\n"      // warned, skipped
        "    chown root root /nonexistent\n"
        "    restorecon /nonexistent\n"
        "service netd /system/bin/netd\n"
        "    socket dnsproxyd stream 0660 root inet\n"
        "service off /system/bin/off\n"
        "    disabled\n"
        "    socket ghost stream 0666\n"
        "service dup /system/bin/dup\n"
        "    socket dnsproxyd stream 0666\n"}},  // loses to netd
      diags,
      "/dev/socket(/.*)? u:object_r:socket_device:s0\n"
      "/dev/socket/dnsproxyd u:object_r:dnsproxyd_socket:s0\n");
  InitRcData data = parse_image_initrc(image, diags);

  BootSimReport rep;
  FirmwareImage booted = simulate_boot(image, data.services, data.fs_actions, diags, &rep);

  CHECK(rep.actions_applied == 1);
  CHECK(rep.sockets_created == 1);
  REQUIRE(rep.socket_conflicts.size() == 1);
  CHECK(rep.socket_conflicts[0] == "dnsproxyd");

  const FsEntry* dir = booted.find("/dev/socket");
  REQUIRE(dir != nullptr);
  CHECK(dir->kind == FileKind::directory);
  CHECK(dir->mode == 0755u);
  CHECK(dir->selabel == "u:object_r:socket_device:s0");

  const FsEntry* sock = booted.find("/dev/socket/dnsproxyd");
  REQUIRE(sock != nullptr);
  CHECK(sock->kind == FileKind::socket_file);
  CHECK(sock->mode == 0660u);  // netd's declaration won
  CHECK(sock->gid == 3003);
  CHECK(sock->selabel == "u:object_r:dnsproxyd_socket:s0");

  CHECK(booted.find("/dev/socket/ghost") == nullptr);  // disabled service
  CHECK(image.find("/dev/socket") == nullptr);         // input image untouched

  // Idempotence: a second pass changes nothing and reports no conflicts
  // beyond the genuine one.
  Diagnostics diags2;
  BootSimReport rep2;
  FirmwareImage again = simulate_boot(booted, data.services, data.fs_actions, diags2, &rep2);
  CHECK(rep2.sockets_created == 0);
  REQUIRE(rep2.socket_conflicts.size() == 1);  // dup still conflicts
  CHECK(again.entries().size() == booted.entries().size());
  for (const auto& [path, entry] : booted.entries()) {
    const FsEntry* other = again.find(path);
    REQUIRE(other != nullptr);
    CHECK(*other == entry);
  }
}

TEST_CASE("unresolvable socket owners fall back to nobody") {
  Diagnostics diags;
  FirmwareImage image = image_with_rc(
      "nobody",
      {{"/init.rc",
        "service v /vendor/bin/v\n"
        "    socket vsock stream 0660 made_up_user made_up_group\n"}},
      diags);
  InitRcData data = parse_image_initrc(image, diags);
  FirmwareImage booted = simulate_boot(image, data.services, data.fs_actions, diags);
  const FsEntry* sock = booted.find("/dev/socket/vsock");
  REQUIRE(sock != nullptr);
  CHECK(sock->uid == 9999);
  CHECK(sock->gid == 9999);
  bool warned = false;
  for (const std::string& w : diags.warnings()) {
    if (w.find("made_up_user") != std::string::npos) warned = true;
  }
  CHECK(warned);
}

TEST_CASE("per-image passwd entries resolve during boot simulation") {
  fs::path root = fs::path(UDSAUDIT_SCRATCH) / "initrc_passwd";
  fs::remove_all(root);
  fs::create_directories(root / "fs");
  std::ofstream(root / "manifest.tsv")
      << "/\t755\t0\t0\tu:object_r:rootfs:s0\tdirectory\n"
      << "/init.rc\t644\t0\t0\tu:object_r:rootfs:s0\tregular\n";
  std::ofstream(root / "sepolicy.txt") << "allow a b:file read;\n";
  std::ofstream(root / "passwd") << "canbus:x:1098:1098:CAN:/:/bin/false\n";
  std::ofstream(root / "fs" / "init.rc")
      << "service c /vendor/bin/c\n    socket can stream 0660 canbus canbus\n";
  Diagnostics diags;
  FirmwareImage image =
      FirmwareImage::load(root.string(), (root / "manifest.tsv").string(), diags);
  InitRcData data = parse_image_initrc(image, diags);
  FirmwareImage booted = simulate_boot(image, data.services, data.fs_actions, diags);
  const FsEntry* sock = booted.find("/dev/socket/can");
  REQUIRE(sock != nullptr);
  CHECK(sock->uid == 1098);
  CHECK(sock->gid == 1098);
}

TEST_CASE("restart risk follows stop, restart, and gated-start triggers") {
  ServiceDefinition svc;
  svc.name = "cand";

  auto trig = [](PropertyTrigger::Action a, const std::string& service) {
    PropertyTrigger t;
    t.property = "persist.x";
    t.value = "*";
    t.action = a;
    t.service = service;
    return t;
  };

  CHECK(restart_risk(svc, {}) == RestartRisk::none);
  CHECK(restart_risk(svc, {trig(PropertyTrigger::Action::restart, "cand")}) ==
        RestartRisk::property_restart);
  CHECK(restart_risk(svc, {trig(PropertyTrigger::Action::stop, "cand")}) ==
        RestartRisk::property_restart);
  CHECK(restart_risk(svc, {trig(PropertyTrigger::Action::restart, "other")}) ==
        RestartRisk::none);
  // start triggers only matter for services not running at boot
  CHECK(restart_risk(svc, {trig(PropertyTrigger::Action::start, "cand")}) ==
        RestartRisk::none);
  svc.disabled = true;
  CHECK(restart_risk(svc, {trig(PropertyTrigger::Action::start, "cand")}) ==
        RestartRisk::property_restart);
}

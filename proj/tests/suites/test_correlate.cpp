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
#include <string>

#include "doctest.h"
#include "udsaudit/correlate.h"
#include "udsaudit/fw_image.h"
#include "udsaudit/initrc.h"
#include "udsaudit/sepolicy.h"

using namespace udsaudit;

namespace {

// A small on-disk image: three executables, one with a manifest label
// pinned directly, the others labeled through file_contexts.
struct CorrelateImage {
  std::filesystem::path root;

  explicit CorrelateImage(const std::string& name) {
    root = std::filesystem::path(UDSAUDIT_SCRATCH) / name;
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root / "fs/system/bin");
    std::filesystem::create_directories(root / "fs/vendor/bin");

    write("fs/system/bin/netd", "\x7f" "ELFnetd");
    write("fs/system/bin/logger", "\x7f" "ELFlogger");
    write("fs/vendor/bin/fmhal", "\x7f" "ELFfmhal");

    write("manifest.tsv",
          "/system/bin/netd\t0755\t0\t0\t-\tregular\n"
          "/system/bin/logger\t0755\t0\t0\tu:object_r:logger_exec:s0\tregular\n"
          "/vendor/bin/fmhal\t0755\t0\t0\t-\tregular\n"
          "/system/bin\t0755\t0\t0\t-\tdirectory\n");

    write("file_contexts",
          "/system/bin/netd u:object_r:netd_exec:s0\n"
          "/vendor/bin/fmhal u:object_r:fmhal_exec:s0\n"
          "/system/bin/logger u:object_r:wrong_exec:s0\n");

    write("sepolicy.txt",
          "type netd_exec;\n"
          "type fmhal_exec;\n"
          "type logger_exec;\n"
          "type_transition init netd_exec:process netd;\n"
          "type_transition init logger_exec:process logger;\n"
          "allow netd netd_exec:file read;\n");
  }

  void write(const std::string& rel, const std::string& content) {
    std::filesystem::path p = root / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
  }

  FirmwareImage load(Diagnostics& diags) {
    return FirmwareImage::load(root.string(), (root / "manifest.tsv").string(),
                               diags, false);
  }
};

ServiceDefinition service(const std::string& name, const std::string& exec,
                          const std::string& seclabel = "") {
  ServiceDefinition svc;
  svc.name = name;
  svc.exec_path = exec;
  svc.seclabel = seclabel;
  return svc;
}

}  // namespace

TEST_CASE("domain transitions tie entrypoint-labeled binaries to domains") {
  CorrelateImage ci("correlate_transitions");
  Diagnostics diags;
  FirmwareImage img = ci.load(diags);
  Diagnostics pd;
  PolicyDb db = parse_policy(img.policy_source(), pd, false);

  auto map = correlate_subject_binaries(db, img, {});
  REQUIRE(map.count("netd") == 1);
  CHECK(map.at("netd") == std::set<std::string>{"/system/bin/netd"});

  // The manifest label wins over file_contexts: logger's manifest type is
  // logger_exec, so the transition through it matches despite the decoy
  // file_contexts line.
  REQUIRE(map.count("logger") == 1);
  CHECK(map.at("logger") == std::set<std::string>{"/system/bin/logger"});

  // fmhal_exec has no process transition and no service: absent.
  CHECK(map.count("fmhal") == 0);

  // Only domains with at least one binary appear at all.
  for (const auto& [domain, bins] : map) {
    CAPTURE(domain);
    CHECK_FALSE(bins.empty());
  }
}

TEST_CASE("service seclabels name the domain directly") {
  CorrelateImage ci("correlate_seclabel");
  Diagnostics diags;
  FirmwareImage img = ci.load(diags);
  Diagnostics pd;
  PolicyDb db = parse_policy(img.policy_source(), pd, false);

  std::vector<ServiceDefinition> services = {
      service("fmhal", "/vendor/bin/fmhal", "u:r:fmhal:s0"),
  };
  auto map = correlate_subject_binaries(db, img, services);
  REQUIRE(map.count("fmhal") == 1);
  CHECK(map.at("fmhal") == std::set<std::string>{"/vendor/bin/fmhal"});
}

TEST_CASE("unlabeled services inherit the domain their entrypoint triggers") {
  CorrelateImage ci("correlate_exec_derived");
  Diagnostics diags;
  FirmwareImage img = ci.load(diags);
  Diagnostics pd;
  PolicyDb db = parse_policy(img.policy_source(), pd, false);

  std::vector<ServiceDefinition> services = {
      service("netd", "/system/bin/netd"),          // netd_exec -> netd
      service("fmhal", "/vendor/bin/fmhal"),        // no transition: dropped
      service("ghost", "/system/bin/nonexistent"),  // not in the image
  };
  auto map = correlate_subject_binaries(db, img, services);
  REQUIRE(map.count("netd") == 1);
  CHECK(map.at("netd") == std::set<std::string>{"/system/bin/netd"});
  CHECK(map.count("fmhal") == 0);

  // The transition match and the service match agree on one entry.
  CHECK(map.at("netd").size() == 1);
}

TEST_CASE("malformed seclabels on services are skipped rather than guessed") {
  CorrelateImage ci("correlate_badlabel");
  Diagnostics diags;
  FirmwareImage img = ci.load(diags);
  Diagnostics pd;
  PolicyDb db = parse_policy(img.policy_source(), pd, false);

  std::vector<ServiceDefinition> services = {
      service("broken", "/vendor/bin/fmhal", "not-a-context"),
  };
  auto map = correlate_subject_binaries(db, img, services);
  for (const auto& [domain, bins] : map) {
    CHECK(bins.count("/vendor/bin/fmhal") == 0);
  }
}

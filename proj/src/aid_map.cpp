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
#include "udsaudit/aid_map.h"

#include "udsaudit/common.h"

namespace udsaudit {

namespace {

struct AidEntry {
  const char* name;
  unsigned id;
};

// Static AOSP assigned ids (android_filesystem_config.h vintage, Android
// 7-9 era). Names and ids are shared between the uid and gid namespaces.
constexpr AidEntry kStaticAids[] = {
    {"root", 0},
    {"system", 1000},
    {"radio", 1001},
    {"bluetooth", 1002},
    {"graphics", 1003},
    {"input", 1004},
    {"audio", 1005},
    {"camera", 1006},
    {"log", 1007},
    {"compass", 1008},
    {"mount", 1009},
    {"wifi", 1010},
    {"adb", 1011},
    {"install", 1012},
    {"media", 1013},
    {"dhcp", 1014},
    {"sdcard_rw", 1015},
    {"vpn", 1016},
    {"keystore", 1017},
    {"usb", 1018},
    {"drm", 1019},
    {"mdnsr", 1020},
    {"gps", 1021},
    {"media_rw", 1023},
    {"mtp", 1024},
    {"drmrpc", 1026},
    {"nfc", 1027},
    {"sdcard_r", 1028},
    {"clat", 1029},
    {"loop_radio", 1030},
    {"mediadrm", 1031},
    {"package_info", 1032},
    {"sdcard_pics", 1033},
    {"sdcard_av", 1034},
    {"sdcard_all", 1035},
    {"logd", 1036},
    {"shared_relro", 1037},
    {"dbus", 1038},
    {"tlsdate", 1039},
    {"mediaex", 1040},
    {"audioserver", 1041},
    {"metrics_coll", 1042},
    {"metricsd", 1043},
    {"webserv", 1044},
    {"debuggerd", 1045},
    {"mediacodec", 1046},
    {"cameraserver", 1047},
    {"firewall", 1048},
    {"trunks", 1049},
    {"nvram", 1050},
    {"dns", 1051},
    {"dns_tether", 1052},
    {"webview_zygote", 1053},
    {"vehicle_network", 1054},
    {"media_audio", 1055},
    {"media_video", 1056},
    {"media_image", 1057},
    {"tombstoned", 1058},
    {"media_obb", 1059},
    {"ese", 1060},
    {"ota_update", 1061},
    {"automotive_evs", 1062},
    {"lowpan", 1063},
    {"hsm", 1064},
    {"reserved_disk", 1065},
    {"statsd", 1066},
    {"incidentd", 1067},
    {"secure_element", 1068},
    {"lmkd", 1069},
    {"llkd", 1070},
    {"iorapd", 1071},
    {"gpu_service", 1072},
    {"network_stack", 1073},
    {"external_storage", 1077},
    {"shell", 2000},
    {"cache", 2001},
    {"diag", 2002},
    {"net_bt_admin", 3001},
    {"net_bt", 3002},
    {"inet", 3003},
    {"net_raw", 3004},
    {"net_admin", 3005},
    {"net_bw_stats", 3006},
    {"net_bw_acct", 3007},
    {"net_bt_stack", 3008},
    {"readproc", 3009},
    {"wakelock", 3010},
    {"uhid", 3011},
    {"everybody", 9997},
    {"misc", 9998},
    {"nobody", 9999},
};

}  // namespace

AidMap::AidMap() {
  for (const AidEntry& entry : kStaticAids) {
    uids_.emplace(entry.name, entry.id);
    gids_.emplace(entry.name, entry.id);
  }
}

void AidMap::load_passwd(std::string_view text) {
  for (std::string_view raw : split_char(text, '\n')) {
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_char(line, ':');
    if (fields.size() < 3) continue;
    std::string name(fields[0]);
    // passwd(5): name:x:uid:gid. Short form: name:uid:gid.
    size_t uid_idx = (fields.size() >= 4 && fields[1] == "x") ? 2 : 1;
    auto uid = parse_decimal(fields[uid_idx]);
    auto gid = (uid_idx + 1 < fields.size()) ? parse_decimal(fields[uid_idx + 1]) : uid;
    if (!uid) continue;
    override_uids_[name] = static_cast<unsigned>(*uid);
    override_gids_[name] = static_cast<unsigned>(gid ? *gid : *uid);
  }
}

std::optional<unsigned> AidMap::resolve_uid(std::string_view name) const {
  if (auto numeric = parse_decimal(name)) return static_cast<unsigned>(*numeric);
  if (auto it = override_uids_.find(name); it != override_uids_.end()) return it->second;
  if (auto it = uids_.find(name); it != uids_.end()) return it->second;
  return std::nullopt;
}

std::optional<unsigned> AidMap::resolve_gid(std::string_view name) const {
  if (auto numeric = parse_decimal(name)) return static_cast<unsigned>(*numeric);
  if (auto it = override_gids_.find(name); it != override_gids_.end()) return it->second;
  if (auto it = gids_.find(name); it != gids_.end()) return it->second;
  return std::nullopt;
}

}  // namespace udsaudit

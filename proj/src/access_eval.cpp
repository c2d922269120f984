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
#include "udsaudit/access_eval.h"

#include <algorithm>
#include <array>
#include <vector>

namespace udsaudit {

const std::set<std::string> kGrantablePermissions = {
    "INTERNET",
    "BLUETOOTH",
    "BLUETOOTH_ADMIN",
    "MANAGE_EXTERNAL_STORAGE",
};

namespace {

unsigned permission_gid(const std::string& perm) {
  if (perm == "INTERNET") return 3003;                  // inet
  if (perm == "BLUETOOTH") return 3002;                 // net_bt
  if (perm == "BLUETOOTH_ADMIN") return 3001;           // net_bt_admin
  if (perm == "MANAGE_EXTERNAL_STORAGE") return 1077;   // external_storage
  throw UnknownPermission(perm);
}

// Owner/group/other class selection with the write or execute bit.
bool dac_bit(const FsEntry& entry, const CredentialSet& creds, unsigned bit_shift) {
  unsigned bits;
  if (creds.uid == entry.uid) {
    bits = (entry.mode >> 6) & 7;
  } else if (creds.holds_gid(entry.gid)) {
    bits = (entry.mode >> 3) & 7;
  } else {
    bits = entry.mode & 7;
  }
  return (bits >> bit_shift) & 1;
}

}  // namespace

CredentialSet threat_model_credentials(const std::set<std::string>& grants, unsigned app_uid) {
  CredentialSet creds;
  creds.uid = app_uid;
  creds.primary_gid = app_uid;  // an app's gid equals its uid
  for (const std::string& g : grants) {
    creds.supplementary_gids.insert(permission_gid(g));
  }
  return creds;
}

std::optional<SocketNamespace> classify_namespace(const ExtractedBind& bind) {
  if (bind.hint == NamespaceHint::reserved_env) return SocketNamespace::reserved;
  if (!bind.address_bytes.empty() && bind.address_bytes[0] == '\0') {
    return SocketNamespace::abstract;
  }
  if (!bind.address_bytes.empty() && bind.address_bytes[0] == '/') {
    return SocketNamespace::filesystem;
  }
  return std::nullopt;
}

bool eval_dac(const FsEntry& entry, const CredentialSet& creds) {
  return dac_bit(entry, creds, 1);  // write bit
}

bool eval_dac_search(const FsEntry& entry, const CredentialSet& creds) {
  return dac_bit(entry, creds, 0);  // execute bit
}

MacResult eval_mac(const DataflowGraph& graph, const std::string& subject,
                   const SocketEndpoint& ep, Diagnostics& diags) {
  MacResult r;
  if (ep.owner_domain.empty()) {
    diags.warn("endpoint '" + ep.address + "': owner domain unknown, IPC check fails closed");
    r.ipc_allowed = false;
  } else {
    // Connecting/sending targets a socket object labeled with the server
    // process's domain; any socket class with a write edge qualifies.
    for (const FlowEdge& e : graph.writes()) {
      if (e.domain == subject && e.obj.type == ep.owner_domain &&
          DataflowGraph::categorize(e.obj.cls) == ObjCategory::ipc_socket) {
        r.ipc_allowed = true;
        break;
      }
    }
  }
  if (ep.ns == SocketNamespace::abstract || !ep.file_entry) {
    r.file_allowed = std::nullopt;
  } else {
    std::optional<std::string> type = context_type(ep.file_entry->selabel);
    if (!type) {
      diags.warn("endpoint '" + ep.address + "': file label '" + ep.file_entry->selabel +
                 "' has no type field, file check fails closed");
      r.file_allowed = false;
    } else {
      r.file_allowed = graph.can_write(subject, ObjRef{*type, "sock_file"});
    }
  }
  return r;
}

FsEntry effective_file_entry(const SocketEndpoint& ep, const std::optional<FsEntry>& base,
                             unsigned default_uid, unsigned default_gid, bool* indeterminate) {
  FsEntry e;
  if (base) {
    e = *base;
  } else {
    // The daemon creates the file through bind: mode 0777 screened by
    // umask (assumed 0 when no call is visible), owned by its effective
    // ids at the time of the call.
    e.path = ep.raw_address;
    e.kind = FileKind::socket_file;
    e.metadata_only = true;
    e.uid = default_uid;
    e.gid = default_gid;
    unsigned mask = 0;
    for (const CredModCall& m : ep.cred_mods) {
      if (m.position != CredModPosition::before_bind) continue;
      bool has_arg = !m.args.empty() && m.args[0].has_value();
      switch (m.kind) {
        case CredModKind::umask:
          if (has_arg) {
            mask = static_cast<unsigned>(*m.args[0]) & 0777;
          } else if (indeterminate) {
            *indeterminate = true;
          }
          break;
        case CredModKind::seteuid:
          if (has_arg) {
            e.uid = static_cast<unsigned>(*m.args[0]);
          } else if (indeterminate) {
            *indeterminate = true;
          }
          break;
        case CredModKind::setegid:
          if (has_arg) {
            e.gid = static_cast<unsigned>(*m.args[0]);
          } else if (indeterminate) {
            *indeterminate = true;
          }
          break;
        default:
          break;
      }
    }
    e.mode = 0777 & ~mask;
  }
  // Rewrites after the bind win over whatever the file started as.
  for (const CredModCall& m : ep.cred_mods) {
    if (m.position != CredModPosition::after_bind) continue;
    switch (m.kind) {
      case CredModKind::chmod:
      case CredModKind::fchmod: {
        if (!m.args.empty() && m.args[0]) {
          e.mode = static_cast<unsigned>(*m.args[0]) & 07777;
        } else if (indeterminate) {
          *indeterminate = true;
        }
        break;
      }
      case CredModKind::chown:
      case CredModKind::fchown: {
        if (m.args.size() >= 2 && m.args[0] && m.args[1]) {
          e.uid = static_cast<unsigned>(*m.args[0]);
          e.gid = static_cast<unsigned>(*m.args[1]);
        } else if (indeterminate) {
          *indeterminate = true;
        }
        break;
      }
      default:
        break;
    }
  }
  return e;
}

namespace {

// Write access to the file plus search permission on every ancestor
// directory present in the image. Missing ancestors are assumed
// traversable: extracted trees are usually incomplete.
bool dac_with_parents(const FirmwareImage& image, const FsEntry& entry,
                      const CredentialSet& creds) {
  if (!eval_dac(entry, creds)) return false;
  std::optional<std::string> dir = parent_path(entry.path);
  while (dir) {
    const FsEntry* pe = image.find(*dir);
    if (pe && pe->kind == FileKind::directory && !eval_dac_search(*pe, creds)) return false;
    if (*dir == "/") break;
    dir = parent_path(*dir);
  }
  return true;
}

CheckStrength strongest(const std::vector<CheckStrength>& strengths) {
  CheckStrength best = CheckStrength::none;
  for (CheckStrength s : strengths) {
    if (static_cast<int>(s) > static_cast<int>(best)) best = s;
  }
  return best;
}

DosRisk dos_for(const SocketEndpoint& ep) {
  // Only an abstract name can be re-claimed by an app: socket files live
  // in directories an app cannot create entries in.
  if (ep.ns != SocketNamespace::abstract) return DosRisk::none;
  if (ep.close_rebind && ep.property_restart) return DosRisk::both;
  if (ep.close_rebind) return DosRisk::close_rebind;
  if (ep.property_restart) return DosRisk::property_restart;
  return DosRisk::none;
}

}  // namespace

AccessVerdict combine_verdict(const SocketEndpoint& ep, const MacResult& mac,
                              std::optional<bool> dac_allowed,
                              const std::vector<CheckStrength>& check_strengths,
                              std::set<std::string> required_permissions,
                              bool indeterminate_dac) {
  AccessVerdict v;
  v.mac_ipc_allowed = mac.ipc_allowed;
  v.mac_file_allowed = mac.file_allowed;
  v.dac_allowed = dac_allowed;
  v.required_permissions = std::move(required_permissions);
  v.auth_summary = strongest(check_strengths);
  v.indeterminate_dac = indeterminate_dac;
  if (ep.ns == SocketNamespace::abstract) {
    v.accessible = mac.ipc_allowed;
  } else {
    v.accessible = mac.ipc_allowed && mac.file_allowed.value_or(false) &&
                   dac_allowed.value_or(false);
  }
  v.dos_risk = dos_for(ep);
  return v;
}

AccessVerdict evaluate_endpoint(const DataflowGraph& graph, const FirmwareImage& image,
                                const std::string& subject, const SocketEndpoint& ep,
                                const std::vector<CheckStrength>& check_strengths,
                                Diagnostics& diags, unsigned app_uid) {
  MacResult mac = eval_mac(graph, subject, ep, diags);

  if (ep.ns == SocketNamespace::abstract) {
    return combine_verdict(ep, mac, std::nullopt, check_strengths, {}, false);
  }

  bool indeterminate = false;
  FsEntry eff = effective_file_entry(ep, ep.file_entry, 0, 0, &indeterminate);

  // An app chooses which permissions to request, so try every subset of
  // the four grantable ones and keep the cheapest that works. Iteration
  // is by popcount then lexicographic grant names, so the first hit is
  // already minimal.
  std::vector<std::string> universe(kGrantablePermissions.begin(), kGrantablePermissions.end());
  std::vector<std::pair<std::set<std::string>, bool>> outcomes;
  bool any_dac = false;
  std::optional<std::set<std::string>> best;
  for (int mask = 0; mask < (1 << 4); mask++) {
    std::set<std::string> grants;
    for (size_t i = 0; i < universe.size(); i++) {
      if (mask & (1 << i)) grants.insert(universe[i]);
    }
    CredentialSet creds = threat_model_credentials(grants, app_uid);
    bool ok = dac_with_parents(image, eff, creds);
    any_dac = any_dac || ok;
    if (ok) outcomes.push_back({std::move(grants), true});
  }
  if (!outcomes.empty()) {
    auto better = [](const std::set<std::string>& a, const std::set<std::string>& b) {
      if (a.size() != b.size()) return a.size() < b.size();
      return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    };
    best = outcomes.front().first;
    for (const auto& [grants, ok] : outcomes) {
      if (better(grants, *best)) best = grants;
    }
  }

  std::set<std::string> required;
  if (mac.ipc_allowed && mac.file_allowed.value_or(false) && best) required = *best;
  return combine_verdict(ep, mac, any_dac, check_strengths, std::move(required), indeterminate);
}

}  // namespace udsaudit

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
#ifndef UDSAUDIT_ACCESS_EVAL_H
#define UDSAUDIT_ACCESS_EVAL_H

#include <optional>
#include <set>
#include <string>

#include "udsaudit/dataflow.h"
#include "udsaudit/endpoint.h"
#include "udsaudit/fw_image.h"

namespace udsaudit {

// Synthetic uid for the hypothetical untrusted app. Any value in the app
// range works; verdicts must not depend on the exact choice.
constexpr unsigned kUntrustedAppUid = 10123;

// The four install-time permissions an app can request that map directly
// to supplementary groups, i.e. the only ones that change DAC outcomes.
extern const std::set<std::string> kGrantablePermissions;

// Maps a set of requested permissions onto the credentials the app's
// process would carry. Throws UnknownPermission for anything outside the
// four grantable names.
CredentialSet threat_model_credentials(const std::set<std::string>& grants,
                                       unsigned app_uid = kUntrustedAppUid);

// Namespace of a recovered bind address: leading NUL byte means abstract,
// leading '/' filesystem, an environment lookup reserved. Anything else
// is unclassifiable and yields nullopt (callers report and exclude it).
std::optional<SocketNamespace> classify_namespace(const ExtractedBind& bind);

// Whether `creds` may write `entry` under plain owner/group/other
// evaluation. The matching class is decided first (owner if uid matches,
// else group if any gid matches, else other) and only that class's bit
// counts, so a group can carry fewer rights than "other".
bool eval_dac(const FsEntry& entry, const CredentialSet& creds);

// Search (execute) permission on a directory, same class precedence.
bool eval_dac_search(const FsEntry& entry, const CredentialSet& creds);

struct MacResult {
  bool ipc_allowed = false;
  // nullopt = not applicable (abstract endpoint, or no file entry).
  std::optional<bool> file_allowed;
};

// SELinux prerequisites: ipc_allowed iff the subject holds a write-like
// permission on a socket-class object of the owner's domain; file_allowed
// iff it can write the sock_file type labeling the endpoint's file. An
// unknown owner domain fails the IPC check with a warning.
MacResult eval_mac(const DataflowGraph& graph, const std::string& subject,
                   const SocketEndpoint& ep, Diagnostics& diags);

struct AccessVerdict {
  bool mac_ipc_allowed = false;
  std::optional<bool> mac_file_allowed;  // nullopt = not applicable
  std::optional<bool> dac_allowed;       // nullopt = not applicable
  // Smallest permission set under which every applicable check passes;
  // meaningful only when accessible.
  std::set<std::string> required_permissions;
  CheckStrength auth_summary = CheckStrength::none;
  bool accessible = false;
  DosRisk dos_risk = DosRisk::none;
  // A chmod/chown around the bind site had arguments we could not
  // resolve, so the DAC result may not reflect the file's real state.
  bool indeterminate_dac = false;
};

// The socket file as it looks once the daemon has run: credential calls
// recovered from the binary override what init (or bind itself) set up.
// umask/seteuid/setegid apply only to files the daemon itself creates
// (base==nullopt); chmod/chown variants rewrite any file. Mods with
// unresolved arguments set *indeterminate instead of guessing.
FsEntry effective_file_entry(const SocketEndpoint& ep, const std::optional<FsEntry>& base,
                             unsigned default_uid, unsigned default_gid, bool* indeterminate);

// Full judgment for one endpoint: MAC via the policy graph, DAC swept
// over all sixteen permission-grant subsets (an app picks what it
// requests, so accessible means some subset passes), parent-directory
// search included when ancestors exist in the image. auth_summary is the
// strongest classification among the endpoint's peer checks; DoS flags
// apply to abstract endpoints, where the name can be re-claimed.
AccessVerdict evaluate_endpoint(const DataflowGraph& graph, const FirmwareImage& image,
                                const std::string& subject, const SocketEndpoint& ep,
                                const std::vector<CheckStrength>& check_strengths,
                                Diagnostics& diags, unsigned app_uid = kUntrustedAppUid);

// Assembles a verdict from already-computed pieces; the accessibility
// rule is mac_ipc ∧ (abstract ∨ (mac_file ∧ dac)).
AccessVerdict combine_verdict(const SocketEndpoint& ep, const MacResult& mac,
                              std::optional<bool> dac_allowed,
                              const std::vector<CheckStrength>& check_strengths,
                              std::set<std::string> required_permissions, bool indeterminate_dac);

}  // namespace udsaudit

#endif  // UDSAUDIT_ACCESS_EVAL_H

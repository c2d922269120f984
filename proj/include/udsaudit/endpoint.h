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
#ifndef UDSAUDIT_ENDPOINT_H
#define UDSAUDIT_ENDPOINT_H

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "udsaudit/fs_entry.h"

namespace udsaudit {

// Unix domain sockets live in one of three address namespaces, each with
// its own enforcement surface:
//   filesystem  a socket file anywhere in the tree; file permissions apply
//   reserved    a socket file under /dev/socket, created at boot on the
//               service's behalf and handed over via the environment
//   abstract    a kernel-only name starting with a NUL byte; no file
//               exists, so file permissions never apply
enum class SocketNamespace { filesystem, reserved, abstract };

const char* to_string(SocketNamespace ns);

// Where knowledge of an endpoint came from.
enum class Provenance {
  initrc,         // socket option in a service definition
  binary_bind,    // recovered bind argument in the daemon binary
  binary_getenv,  // ANDROID_SOCKET_* environment lookup in the binary
};

const char* to_string(Provenance p);

// --- Facts recovered from daemon binaries -------------------------------

// Namespace suggested by the shape of a recovered bind address. Unlike
// SocketNamespace this can be unknown when the address bytes end up
// unresolvable.
enum class NamespaceHint { abstract, filesystem, reserved_env, unknown };

const char* to_string(NamespaceHint h);

enum class Confidence {
  exact,     // every byte of the address recovered
  partial,   // a prefix recovered, tail unknown
  symbolic,  // runtime-dependent; address_bytes may be empty
};

const char* to_string(Confidence c);

// One bind-family callsite and the socket address recovered for it.
struct ExtractedBind {
  uint64_t callsite = 0;
  std::string address_bytes;  // raw; abstract addresses begin with '\0'
  NamespaceHint hint = NamespaceHint::unknown;
  std::string api;  // symbol the address was passed to (bind, ...)
  Confidence confidence = Confidence::symbolic;
};

// Calls that change the effective credentials or the socket file's bits
// around a bind site. The before/after split matters: umask and the
// set*id calls shape the file at creation, chmod/chown rewrite it later.
enum class CredModKind { umask, seteuid, setegid, chmod, fchmod, chown, fchown };

const char* to_string(CredModKind k);

enum class CredModPosition { before_bind, after_bind };

struct CredModCall {
  CredModKind kind = CredModKind::umask;
  // Argument values where constant-resolvable; nullopt marks a value only
  // known at runtime. Descriptor arguments of f* variants are omitted.
  std::vector<std::optional<uint64_t>> args;
  CredModPosition position = CredModPosition::before_bind;
  uint64_t callsite = 0;
};

// --- Peer credential checking -------------------------------------------

// The three fields of the ucred struct a daemon can read back for a
// connected peer.
enum class CredField { pid, uid, gid };

const char* to_string(CredField f);

enum class UsageKind { comparison, function_arg };

// One observed use of a peer credential field.
struct CredUsage {
  UsageKind kind = UsageKind::comparison;
  CredField field = CredField::uid;
  std::optional<int64_t> comparand;  // comparison with a known constant
  std::string callee;                // function_arg: symbol or hex vaddr
};

// A SO_PEERCRED retrieval and everything the daemon does with the result.
struct PeerCredCheck {
  uint64_t callsite = 0;
  std::set<CredField> creds_used;
  std::vector<CredUsage> usages;
};

// How much protection the daemon's own checking provides, weakest first.
// uid/gid cannot be forged by an app; a pid can be recycled and a process
// name (looked up from the pid) can be set freely by the peer.
enum class CheckStrength { none, spoofable, weak, secure };

const char* to_string(CheckStrength s);

enum class DosRisk { none, close_rebind, property_restart, both };

const char* to_string(DosRisk r);

// --- The assembled endpoint ---------------------------------------------

// One socket endpoint a daemon serves, with everything needed to judge
// whether an untrusted app can reach it.
struct SocketEndpoint {
  std::string address;  // display form; abstract names shown as @name
  std::string raw_address;  // raw bytes; abstract names keep the NUL
  SocketNamespace ns = SocketNamespace::filesystem;
  std::string owner_binary;  // image path of the serving daemon
  std::string owner_domain;  // SELinux domain it runs in; empty = unknown
  std::optional<FsEntry> file_entry;  // absent for abstract
  std::vector<PeerCredCheck> checks;
  std::vector<CredModCall> cred_mods;
  Provenance provenance = Provenance::initrc;
  Confidence confidence = Confidence::exact;
  bool close_rebind = false;       // rebinds after close in a loop
  bool property_restart = false;   // stoppable via property trigger
};

// Display form of an address: abstract raw bytes "\0name" render as
// "@name", everything else passes through.
std::string display_address(const std::string& raw, SocketNamespace ns);

}  // namespace udsaudit

#endif  // UDSAUDIT_ENDPOINT_H

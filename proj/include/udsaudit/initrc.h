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
#ifndef UDSAUDIT_INITRC_H
#define UDSAUDIT_INITRC_H

#include <optional>
#include <string>
#include <vector>

#include "udsaudit/endpoint.h"
#include "udsaudit/fw_image.h"

namespace udsaudit {

enum class SockType { stream, dgram, seqpacket };

// One `socket <name> <type> <perm> [user [group [seclabel]]]` option.
// init creates /dev/socket/<name> with these attributes before the
// service runs and passes the open descriptor via ANDROID_SOCKET_<name>.
struct SocketOption {
  std::string name;
  SockType sock_type = SockType::stream;
  unsigned perm = 0;       // mode bits of the created socket file
  std::string user;        // name or decimal uid; empty = root
  std::string group;       // name or decimal gid; empty = root
  std::string seclabel;    // empty = derive from file_contexts
  size_t line = 0;
};

// A start/stop/restart command inside an `on property:...` block.
struct PropertyTrigger {
  enum class Action { start, stop, restart };

  std::string property;
  std::string value;  // "*" matches any value
  Action action = Action::start;
  std::string service;
  std::string origin;  // rc file the command came from
  size_t line = 0;
};

// A filesystem command inside an `on ...` block that shapes permissions
// or labels. Execution-order semantics of real init are not modeled;
// these are replayed in deterministic file order.
struct FsAction {
  enum class Kind { mkdir, chmod, chown, restorecon };

  Kind kind = Kind::mkdir;
  std::string path;
  std::optional<unsigned> mode;  // mkdir (optional arg), chmod
  std::string user;              // mkdir/chown; empty = unspecified
  std::string group;
  std::string origin;
  size_t line = 0;
};

struct ServiceDefinition {
  std::string name;
  std::string exec_path;
  std::vector<std::string> args;
  std::string user;    // empty = root
  std::string group;   // empty = root
  std::vector<std::string> supp_groups;
  std::string svc_class;  // empty = "default"
  bool oneshot = false;
  bool disabled = false;
  std::string seclabel;  // empty = derive from the executable's label
  std::vector<SocketOption> sockets;
  std::string origin;
  size_t line = 0;
};

// Everything one rc file (or a merged set of them) declares.
struct InitRcData {
  std::vector<ServiceDefinition> services;
  std::vector<PropertyTrigger> triggers;
  std::vector<FsAction> fs_actions;
  std::vector<std::string> imports;  // raw arguments of `import` lines
  size_t unknown_options = 0;        // unrecognized service options
  size_t unknown_commands = 0;       // unrecognized `on` block commands

  // Appends the other file's declarations to this one.
  void merge(InitRcData&& other);
};

// Parses one rc file. Never throws on malformed input: unrecognized
// options and commands are counted and skipped, bad socket options
// reported through diags. Line continuations with a trailing backslash
// are honored.
InitRcData parse_initrc(std::string_view text, const std::string& origin, Diagnostics& diags);

// Parses every `.rc` source the image collected, resolving `import`
// statements against the image (cycles broken by a visited set, missing
// targets reported). Files are processed in sorted path order.
InitRcData parse_image_initrc(const FirmwareImage& image, Diagnostics& diags);

// The RESERVED endpoints a service's socket options will produce:
// one per option, at /dev/socket/<name>.
std::vector<SocketEndpoint> extract_reserved_sockets(const ServiceDefinition& svc);

// What simulate_boot did, for reporting.
struct BootSimReport {
  // Socket names declared by more than one enabled service. The first
  // declaration (in path-sorted, then line order) wins.
  std::vector<std::string> socket_conflicts;
  size_t sockets_created = 0;
  size_t actions_applied = 0;
};

// Replays boot-time filesystem effects into the image: fs_actions first
// (path-sorted by origin, then line order), then one socket_file entry
// per enabled service's socket option. user/group names resolve through
// the image's AID map; unresolvable names fall back to nobody (9999)
// with a warning. Running the result through simulate_boot again is a
// no-op.
FirmwareImage simulate_boot(const FirmwareImage& image,
                            const std::vector<ServiceDefinition>& services,
                            const std::vector<FsAction>& fs_actions, Diagnostics& diags,
                            BootSimReport* report = nullptr);

enum class RestartRisk { none, property_restart };

// Whether a property change can stop (or bounce) the service. A stopped
// daemon frees its abstract socket name for anyone to claim, so this is
// DoS-relevant. True when a stop/restart trigger targets the service, or
// when the service is not running at boot (disabled) and a start trigger
// exists for it.
RestartRisk restart_risk(const ServiceDefinition& svc,
                         const std::vector<PropertyTrigger>& triggers);

}  // namespace udsaudit

#endif  // UDSAUDIT_INITRC_H

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
#include "udsaudit/endpoint.h"

namespace udsaudit {

const char* to_string(SocketNamespace ns) {
  switch (ns) {
    case SocketNamespace::filesystem: return "FILESYSTEM";
    case SocketNamespace::reserved: return "RESERVED";
    case SocketNamespace::abstract: return "ABSTRACT";
  }
  return "?";
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::initrc: return "initrc";
    case Provenance::binary_bind: return "binary_bind";
    case Provenance::binary_getenv: return "binary_getenv";
  }
  return "?";
}

const char* to_string(NamespaceHint h) {
  switch (h) {
    case NamespaceHint::abstract: return "abstract";
    case NamespaceHint::filesystem: return "filesystem";
    case NamespaceHint::reserved_env: return "reserved_env";
    case NamespaceHint::unknown: return "unknown";
  }
  return "?";
}

const char* to_string(Confidence c) {
  switch (c) {
    case Confidence::exact: return "exact";
    case Confidence::partial: return "partial";
    case Confidence::symbolic: return "symbolic";
  }
  return "?";
}

const char* to_string(CredModKind k) {
  switch (k) {
    case CredModKind::umask: return "umask";
    case CredModKind::seteuid: return "seteuid";
    case CredModKind::setegid: return "setegid";
    case CredModKind::chmod: return "chmod";
    case CredModKind::fchmod: return "fchmod";
    case CredModKind::chown: return "chown";
    case CredModKind::fchown: return "fchown";
  }
  return "?";
}

const char* to_string(CredField f) {
  switch (f) {
    case CredField::pid: return "pid";
    case CredField::uid: return "uid";
    case CredField::gid: return "gid";
  }
  return "?";
}

const char* to_string(CheckStrength s) {
  switch (s) {
    case CheckStrength::none: return "none";
    case CheckStrength::spoofable: return "spoofable";
    case CheckStrength::weak: return "weak";
    case CheckStrength::secure: return "secure";
  }
  return "?";
}

const char* to_string(DosRisk r) {
  switch (r) {
    case DosRisk::none: return "none";
    case DosRisk::close_rebind: return "close_rebind";
    case DosRisk::property_restart: return "property_restart";
    case DosRisk::both: return "both";
  }
  return "?";
}

std::string display_address(const std::string& raw, SocketNamespace ns) {
  if (ns == SocketNamespace::abstract) {
    std::string rest = raw;
    if (!rest.empty() && rest[0] == '\0') rest.erase(0, 1);
    return "@" + rest;
  }
  return raw;
}

}  // namespace udsaudit

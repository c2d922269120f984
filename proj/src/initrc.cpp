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
#include "udsaudit/initrc.h"

#include <algorithm>
#include <cstring>
#include <functional>
#include <iterator>
#include <map>
#include <set>

#include "udsaudit/aid_map.h"

namespace udsaudit {

namespace {

constexpr unsigned kNobody = 9999;

// Lines of an rc file with continuations folded and comments stripped,
// tokenized on whitespace. A '#' starting a token comments out the rest
// of the line.
struct RcLine {
  std::vector<std::string> tokens;
  size_t line;  // first physical line of the (possibly folded) statement
};

std::vector<RcLine> tokenize_rc(std::string_view text) {
  std::vector<RcLine> out;
  size_t lineno = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t start_line = lineno + 1;
    std::string logical;
    // Fold lines joined by a trailing backslash.
    while (pos <= text.size()) {
      size_t nl = text.find('\n', pos);
      std::string_view phys =
          nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      lineno++;
      if (!phys.empty() && phys.back() == '\r') phys.remove_suffix(1);
      if (!phys.empty() && phys.back() == '\\') {
        logical.append(phys.substr(0, phys.size() - 1));
        logical.push_back(' ');
        continue;
      }
      logical.append(phys);
      break;
    }
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < logical.size()) {
      while (i < logical.size() && (logical[i] == ' ' || logical[i] == '\t')) i++;
      if (i >= logical.size()) break;
      if (logical[i] == '#') break;
      size_t b = i;
      while (i < logical.size() && logical[i] != ' ' && logical[i] != '\t') i++;
      tokens.push_back(logical.substr(b, i - b));
    }
    if (!tokens.empty()) out.push_back({std::move(tokens), start_line});
    if (pos > text.size()) break;
  }
  return out;
}

std::optional<SockType> parse_sock_type(std::string_view word) {
  // Suffixes such as "+passcred" modify delivery, not the address.
  size_t plus = word.find('+');
  std::string_view base = plus == std::string_view::npos ? word : word.substr(0, plus);
  if (base == "stream") return SockType::stream;
  if (base == "dgram") return SockType::dgram;
  if (base == "seqpacket") return SockType::seqpacket;
  return std::nullopt;
}

// Resolves a possibly empty name-or-id, falling back to nobody.
unsigned resolve_or_nobody(const AidMap& aids, const std::string& name, bool is_uid,
                           const std::string& what, Diagnostics& diags) {
  if (name.empty()) return 0;  // init runs as root; unspecified means root
  std::optional<unsigned> id = is_uid ? aids.resolve_uid(name) : aids.resolve_gid(name);
  if (id) return *id;
  diags.warn("unknown " + std::string(is_uid ? "user" : "group") + " '" + name + "' for " + what +
             ", using nobody (" + std::to_string(kNobody) + ")");
  return kNobody;
}

}  // namespace

void InitRcData::merge(InitRcData&& other) {
  std::move(other.services.begin(), other.services.end(), std::back_inserter(services));
  std::move(other.triggers.begin(), other.triggers.end(), std::back_inserter(triggers));
  std::move(other.fs_actions.begin(), other.fs_actions.end(), std::back_inserter(fs_actions));
  std::move(other.imports.begin(), other.imports.end(), std::back_inserter(imports));
  unknown_options += other.unknown_options;
  unknown_commands += other.unknown_commands;
}

InitRcData parse_initrc(std::string_view text, const std::string& origin, Diagnostics& diags) {
  InitRcData data;
  enum class Section { none, service, on_block };
  Section section = Section::none;
  ServiceDefinition* svc = nullptr;
  // Property trigger of the current on-block, if it is one.
  std::optional<std::pair<std::string, std::string>> on_property;

  auto warn = [&](size_t line, const std::string& msg) {
    diags.warn(origin + ":" + std::to_string(line) + ": " + msg);
  };

  for (const RcLine& rc : tokenize_rc(text)) {
    const std::vector<std::string>& t = rc.tokens;
    const std::string& head = t[0];

    if (head == "service") {
      section = Section::service;
      svc = nullptr;
      on_property.reset();
      if (t.size() < 3) {
        warn(rc.line, "service line needs a name and an executable, block skipped");
        section = Section::none;
        continue;
      }
      ServiceDefinition def;
      def.name = t[1];
      def.exec_path = t[2];
      def.args.assign(t.begin() + 3, t.end());
      def.origin = origin;
      def.line = rc.line;
      if (def.exec_path.empty() || def.exec_path[0] != '/') {
        warn(rc.line, "service '" + def.name + "' executable path is not absolute");
      }
      data.services.push_back(std::move(def));
      svc = &data.services.back();
      continue;
    }
    if (head == "on") {
      section = Section::on_block;
      svc = nullptr;
      on_property.reset();
      if (t.size() >= 2 && starts_with(t[1], "property:")) {
        std::string expr = t[1].substr(strlen("property:"));
        size_t eq = expr.find('=');
        if (eq == std::string::npos) {
          on_property = {expr, "*"};
        } else {
          on_property = {expr.substr(0, eq), expr.substr(eq + 1)};
        }
      }
      continue;
    }
    if (head == "import") {
      section = Section::none;
      svc = nullptr;
      on_property.reset();
      if (t.size() == 2) {
        data.imports.push_back(t[1]);
      } else {
        warn(rc.line, "import takes exactly one path");
      }
      continue;
    }

    if (section == Section::service && svc) {
      if (head == "socket") {
        // socket <name> <type> <perm> [user [group [seclabel]]]
        if (t.size() < 4 || t.size() > 7) {
          warn(rc.line, "socket option needs 3 to 6 arguments, skipped");
          continue;
        }
        SocketOption opt;
        opt.name = t[1];
        opt.line = rc.line;
        std::optional<SockType> st = parse_sock_type(t[2]);
        std::optional<unsigned> perm = parse_octal_mode(t[3]);
        if (opt.name.empty() || !st || !perm || *perm > 0777) {
          warn(rc.line, "malformed socket option '" + t[1] + "', skipped");
          continue;
        }
        opt.sock_type = *st;
        opt.perm = *perm;
        if (t.size() > 4) opt.user = t[4];
        if (t.size() > 5) opt.group = t[5];
        if (t.size() > 6) opt.seclabel = t[6];
        bool dup = false;
        for (const SocketOption& prev : svc->sockets) {
          if (prev.name == opt.name) dup = true;
        }
        if (dup) {
          warn(rc.line, "service '" + svc->name + "' declares socket '" + opt.name +
                            "' twice, keeping the first");
          continue;
        }
        svc->sockets.push_back(std::move(opt));
      } else if (head == "user" && t.size() == 2) {
        svc->user = t[1];
      } else if (head == "group" && t.size() >= 2) {
        svc->group = t[1];
        svc->supp_groups.assign(t.begin() + 2, t.end());
      } else if (head == "seclabel" && t.size() == 2) {
        svc->seclabel = t[1];
      } else if (head == "class" && t.size() >= 2) {
        svc->svc_class = t[1];
      } else if (head == "oneshot") {
        svc->oneshot = true;
      } else if (head == "disabled") {
        svc->disabled = true;
      } else {
        data.unknown_options++;
      }
      continue;
    }

    if (section == Section::on_block) {
      if (head == "start" || head == "stop" || head == "restart") {
        if (!on_property) continue;  // only property triggers are modeled
        if (t.size() != 2) {
          warn(rc.line, head + " takes exactly one service name");
          continue;
        }
        PropertyTrigger trig;
        trig.property = on_property->first;
        trig.value = on_property->second;
        trig.action = head == "start"  ? PropertyTrigger::Action::start
                      : head == "stop" ? PropertyTrigger::Action::stop
                                       : PropertyTrigger::Action::restart;
        trig.service = t[1];
        trig.origin = origin;
        trig.line = rc.line;
        data.triggers.push_back(std::move(trig));
      } else if (head == "mkdir" && t.size() >= 2) {
        FsAction a;
        a.kind = FsAction::Kind::mkdir;
        a.path = t[1];
        if (t.size() > 2) {
          std::optional<unsigned> mode = parse_octal_mode(t[2]);
          if (!mode) {
            warn(rc.line, "mkdir mode '" + t[2] + "' is not octal, command skipped");
            continue;
          }
          a.mode = mode;
        }
        if (t.size() > 3) a.user = t[3];
        if (t.size() > 4) a.group = t[4];
        a.origin = origin;
        a.line = rc.line;
        data.fs_actions.push_back(std::move(a));
      } else if (head == "chmod" && t.size() == 3) {
        std::optional<unsigned> mode = parse_octal_mode(t[1]);
        if (!mode) {
          warn(rc.line, "chmod mode '" + t[1] + "' is not octal, command skipped");
          continue;
        }
        FsAction a;
        a.kind = FsAction::Kind::chmod;
        a.mode = mode;
        a.path = t[2];
        a.origin = origin;
        a.line = rc.line;
        data.fs_actions.push_back(std::move(a));
      } else if (head == "chown" && t.size() == 4) {
        FsAction a;
        a.kind = FsAction::Kind::chown;
        a.user = t[1];
        a.group = t[2];
        a.path = t[3];
        a.origin = origin;
        a.line = rc.line;
        data.fs_actions.push_back(std::move(a));
      } else if (head == "restorecon" && t.size() >= 2) {
        FsAction a;
        a.kind = FsAction::Kind::restorecon;
        a.path = t[1];
        a.origin = origin;
        a.line = rc.line;
        data.fs_actions.push_back(std::move(a));
      } else {
        data.unknown_commands++;
      }
      continue;
    }

    // Directives outside any block (or after a skipped one).
    data.unknown_commands++;
  }
  return data;
}

InitRcData parse_image_initrc(const FirmwareImage& image, Diagnostics& diags) {
  std::map<std::string, std::string_view> sources;
  for (const auto& [path, content] : image.initrc_sources()) {
    sources.emplace(path, content);
  }

  InitRcData merged;
  std::set<std::string> visited;

  // Depth-first over imports so an imported file's declarations land
  // before the remainder of the importer's siblings (approximating real
  // include order), then sweep any file not reachable from an import.
  std::function<void(const std::string&)> visit = [&](const std::string& path) {
    if (!visited.insert(path).second) return;  // breaks import cycles
    auto it = sources.find(path);
    if (it == sources.end()) return;
    InitRcData one = parse_initrc(it->second, path, diags);
    std::vector<std::string> imports = one.imports;
    merged.merge(std::move(one));
    for (const std::string& imp : imports) {
      if (imp.find("${") != std::string::npos) {
        diags.warn(path + ": import '" + imp + "' uses property expansion, not followed");
        continue;
      }
      std::optional<std::string> norm = normalize_path(imp);
      if (!norm || !sources.count(*norm)) {
        diags.warn(path + ": import '" + imp + "' not found in image");
        continue;
      }
      visit(*norm);
    }
  };

  for (const auto& [path, content] : sources) visit(path);
  return merged;
}

std::vector<SocketEndpoint> extract_reserved_sockets(const ServiceDefinition& svc) {
  // Name resolution here uses the bundled static table only; the boot
  // simulation re-resolves against the image's own map.
  AidMap aids;
  std::vector<SocketEndpoint> out;
  for (const SocketOption& opt : svc.sockets) {
    SocketEndpoint ep;
    ep.address = opt.name;
    ep.raw_address = "/dev/socket/" + opt.name;
    ep.ns = SocketNamespace::reserved;
    ep.owner_binary = svc.exec_path;
    ep.provenance = Provenance::initrc;
    ep.confidence = Confidence::exact;
    FsEntry entry;
    entry.path = ep.raw_address;
    entry.mode = opt.perm;
    entry.uid = opt.user.empty() ? 0 : aids.resolve_uid(opt.user).value_or(kNobody);
    entry.gid = opt.group.empty() ? 0 : aids.resolve_gid(opt.group).value_or(kNobody);
    entry.selabel = opt.seclabel;
    entry.kind = FileKind::socket_file;
    entry.metadata_only = true;
    ep.file_entry = std::move(entry);
    out.push_back(std::move(ep));
  }
  return out;
}

FirmwareImage simulate_boot(const FirmwareImage& image,
                            const std::vector<ServiceDefinition>& services,
                            const std::vector<FsAction>& fs_actions, Diagnostics& diags,
                            BootSimReport* report) {
  BootSimReport local;
  BootSimReport& rep = report ? *report : local;
  const AidMap& aids = image.aid_map();
  FirmwareImage img = image;

  std::vector<FsAction> actions = fs_actions;
  std::stable_sort(actions.begin(), actions.end(), [](const FsAction& a, const FsAction& b) {
    return a.origin != b.origin ? a.origin < b.origin : a.line < b.line;
  });

  for (const FsAction& a : actions) {
    std::optional<std::string> path = normalize_path(a.path);
    if (!path) {
      diags.warn(a.origin + ":" + std::to_string(a.line) + ": path '" + a.path +
                 "' is not a normalized absolute path, command skipped");
      continue;
    }
    const FsEntry* existing = img.find(*path);
    switch (a.kind) {
      case FsAction::Kind::mkdir: {
        if (existing) break;  // real mkdir leaves an existing directory alone
        FsEntry e;
        e.path = *path;
        e.mode = a.mode.value_or(0755);
        e.uid = resolve_or_nobody(aids, a.user, true, "mkdir " + *path, diags);
        e.gid = resolve_or_nobody(aids, a.group, false, "mkdir " + *path, diags);
        e.kind = FileKind::directory;
        e.metadata_only = true;
        img = img.insert_entry(std::move(e));
        rep.actions_applied++;
        break;
      }
      case FsAction::Kind::chmod: {
        if (!existing) {
          diags.warn(a.origin + ":" + std::to_string(a.line) + ": chmod target '" + *path +
                     "' does not exist, command skipped");
          break;
        }
        FsEntry e = *existing;
        e.mode = *a.mode;
        img = img.insert_entry(std::move(e), /*overwrite=*/true);
        rep.actions_applied++;
        break;
      }
      case FsAction::Kind::chown: {
        if (!existing) {
          diags.warn(a.origin + ":" + std::to_string(a.line) + ": chown target '" + *path +
                     "' does not exist, command skipped");
          break;
        }
        FsEntry e = *existing;
        e.uid = resolve_or_nobody(aids, a.user, true, "chown " + *path, diags);
        e.gid = resolve_or_nobody(aids, a.group, false, "chown " + *path, diags);
        img = img.insert_entry(std::move(e), /*overwrite=*/true);
        rep.actions_applied++;
        break;
      }
      case FsAction::Kind::restorecon: {
        if (!existing) {
          diags.warn(a.origin + ":" + std::to_string(a.line) + ": restorecon target '" + *path +
                     "' does not exist, command skipped");
          break;
        }
        FsEntry e = *existing;
        e.selabel = img.resolve_label(*path).value_or(std::string(kDefaultLabel));
        img = img.insert_entry(std::move(e), /*overwrite=*/true);
        rep.actions_applied++;
        break;
      }
    }
  }

  std::vector<const ServiceDefinition*> ordered;
  for (const ServiceDefinition& s : services) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ServiceDefinition* a, const ServiceDefinition* b) {
                     return a->origin != b->origin ? a->origin < b->origin : a->line < b->line;
                   });

  // First declaration of a name wins; later ones are conflicts.
  std::set<std::string> claimed;
  for (const ServiceDefinition* svc : ordered) {
    if (svc->disabled) continue;
    for (const SocketOption& opt : svc->sockets) {
      std::string path = "/dev/socket/" + opt.name;
      if (!claimed.insert(opt.name).second) {
        rep.socket_conflicts.push_back(opt.name);
        diags.warn("socket '" + opt.name + "' declared by more than one service; '" + svc->name +
                   "' loses to the earlier declaration");
        continue;
      }
      FsEntry e;
      e.path = path;
      e.mode = opt.perm;
      e.uid = resolve_or_nobody(aids, opt.user, true, "socket " + opt.name, diags);
      e.gid = resolve_or_nobody(aids, opt.group, false, "socket " + opt.name, diags);
      e.selabel = opt.seclabel;  // empty resolves through file_contexts
      e.kind = FileKind::socket_file;
      e.metadata_only = true;
      const FsEntry* existing = img.find(path);
      if (existing) {
        // A second run over an already-simulated image lands here; only
        // a genuinely different file is worth reporting.
        FsEntry resolved = e;
        if (resolved.selabel.empty()) {
          resolved.selabel = img.resolve_label(path).value_or(std::string(kDefaultLabel));
        }
        if (!(*existing == resolved)) {
          rep.socket_conflicts.push_back(opt.name);
          diags.warn("socket file '" + path + "' already present with different attributes; " +
                     "keeping the existing entry");
        }
        continue;
      }
      img = img.insert_entry(std::move(e));
      rep.sockets_created++;
    }
  }
  return img;
}

RestartRisk restart_risk(const ServiceDefinition& svc,
                         const std::vector<PropertyTrigger>& triggers) {
  for (const PropertyTrigger& t : triggers) {
    if (t.service != svc.name) continue;
    if (t.action == PropertyTrigger::Action::stop ||
        t.action == PropertyTrigger::Action::restart) {
      return RestartRisk::property_restart;
    }
    // A service that only runs when a property turns on can be turned
    // back off (or die with nobody to restart it until the next flip).
    if (t.action == PropertyTrigger::Action::start && svc.disabled) {
      return RestartRisk::property_restart;
    }
  }
  return RestartRisk::none;
}

}  // namespace udsaudit

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
#include "udsaudit/correlate.h"

#include <optional>

namespace udsaudit {

namespace {

// Label type of a file as it would exist at runtime: the manifest label
// when one is recorded, the file_contexts match otherwise.
std::optional<std::string> file_type(const FirmwareImage& image, const std::string& path,
                                     const FsEntry& entry) {
  if (!entry.selabel.empty()) return context_type(entry.selabel);
  std::optional<std::string> label = image.resolve_label(path);
  if (!label) return std::nullopt;
  return context_type(*label);
}

}  // namespace

std::map<std::string, std::set<std::string>> correlate_subject_binaries(
    const PolicyDb& db, const FirmwareImage& image,
    const std::vector<ServiceDefinition>& services) {
  // Index executables by label type once; both match rules consume it.
  std::map<std::string, std::set<std::string>> paths_by_type;
  std::map<std::string, std::string> type_by_path;
  for (const auto& [path, entry] : image.entries()) {
    if (entry.kind != FileKind::regular) continue;
    std::optional<std::string> type = file_type(image, path, entry);
    if (!type) continue;
    paths_by_type[*type].insert(path);
    type_by_path[path] = *type;
  }

  std::map<std::string, std::set<std::string>> out;

  for (const DomainTransition& dt : db.domain_transitions) {
    auto it = paths_by_type.find(dt.entrypoint);
    if (it == paths_by_type.end()) continue;
    out[dt.target].insert(it->second.begin(), it->second.end());
  }

  for (const ServiceDefinition& svc : services) {
    if (svc.exec_path.empty()) continue;
    std::string domain;
    if (!svc.seclabel.empty()) {
      domain = context_type(svc.seclabel).value_or("");
    } else if (auto tp = type_by_path.find(svc.exec_path); tp != type_by_path.end()) {
      // No explicit seclabel: init execs the file and the kernel applies
      // whatever transition its entrypoint type triggers.
      for (const DomainTransition& dt : db.domain_transitions) {
        if (dt.entrypoint == tp->second) {
          domain = dt.target;
          break;
        }
      }
    }
    if (!domain.empty()) out[domain].insert(svc.exec_path);
  }

  return out;
}

}  // namespace udsaudit

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
#ifndef UDSAUDIT_FW_IMAGE_H
#define UDSAUDIT_FW_IMAGE_H

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "udsaudit/aid_map.h"
#include "udsaudit/common.h"
#include "udsaudit/fs_entry.h"

namespace udsaudit {

/// Label assigned when no file_contexts pattern matches. Unlabeled objects
/// are conventionally inaccessible, so unmatched paths fail closed.
inline constexpr const char* kDefaultLabel = "u:object_r:unlabeled:s0";

/// One file_contexts rule: an anchored regular expression and the context
/// it assigns. Specificity is the length of the pattern's literal prefix.
struct FileContextRule {
  std::string pattern;
  std::string context;
  std::regex re;
  size_t literal_prefix = 0;
  size_t index = 0;
};

std::vector<FileContextRule> parse_file_contexts(std::string_view text,
                                                 Diagnostics& diags);

/// An extracted firmware tree loaded into memory. Immutable after
/// construction: insert_entry returns a derived image, so a loaded image
/// can be shared read-only across parallel workers.
class FirmwareImage {
 public:
  FirmwareImage() : binaries_(std::make_shared<BinaryStore>()) {}

  const std::map<std::string, FsEntry>& entries() const { return entries_; }
  const FsEntry* find(std::string_view path) const;

  const std::vector<FileContextRule>& file_contexts() const { return file_contexts_; }
  const std::string& policy_source() const { return policy_source_; }
  const std::vector<std::pair<std::string, std::string>>& initrc_sources() const {
    return initrc_sources_;
  }
  const std::vector<uint8_t>* binary(std::string_view path) const;
  const AidMap& aid_map() const { return aid_map_; }

  /// Most-specific matching context for `path`: longest literal prefix
  /// wins, ties broken by the latest rule. nullopt = NoMatchingContext
  /// (callers assign kDefaultLabel).
  std::optional<std::string> resolve_label(std::string_view path) const;

  /// Returns a copy of this image with `entry` added. UNSET labels are
  /// resolved through file_contexts (default label if nothing matches).
  /// Throws DuplicatePath when the path exists and overwrite is false.
  FirmwareImage insert_entry(FsEntry entry, bool overwrite = false) const;

  /// True when every entry carries a label (UNSET nowhere).
  bool labels_total() const;

  struct LoadStats {
    size_t manifest_records = 0;
    size_t metadata_only = 0;
    size_t initrc_files = 0;
  };
  const LoadStats& load_stats() const { return load_stats_; }

  /// Loads an image from an extracted tree:
  ///   root_dir/fs/...          file contents, addressed by manifest path
  ///   root_dir/file_contexts   label rules
  ///   root_dir/sepolicy.txt    textual AV rules (required)
  ///   root_dir/passwd          optional uid/gid name overrides
  /// `manifest` is the metadata manifest (one tab-separated record per
  /// line). Throws MalformedManifest / MissingPolicy.
  static FirmwareImage load(const std::string& root_dir, const std::string& manifest,
                            Diagnostics& diags, bool strict = false);

 private:
  using BinaryStore = std::map<std::string, std::vector<uint8_t>>;

  std::map<std::string, FsEntry> entries_;
  std::vector<FileContextRule> file_contexts_;
  std::string policy_source_;
  std::vector<std::pair<std::string, std::string>> initrc_sources_;
  std::shared_ptr<const BinaryStore> binaries_;  // shared across derived images
  AidMap aid_map_;
  LoadStats load_stats_;
};

/// Parses one manifest record (tab-separated
/// `path<TAB>mode_octal<TAB>uid<TAB>gid<TAB>selabel<TAB>kind`). `-` as
/// selabel means UNSET. Throws MalformedManifest on any field error.
FsEntry parse_manifest_record(std::string_view line, size_t lineno);

}  // namespace udsaudit

#endif  // UDSAUDIT_FW_IMAGE_H

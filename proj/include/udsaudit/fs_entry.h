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
#ifndef UDSAUDIT_FS_ENTRY_H
#define UDSAUDIT_FS_ENTRY_H

#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace udsaudit {

enum class FileKind { regular, directory, symlink, socket_file, device, other };

std::optional<FileKind> file_kind_from_string(std::string_view s);
std::string_view to_string(FileKind kind);

/// One filesystem object as recorded in the image manifest (or inserted by
/// boot simulation / binary analysis). The manifest is the single source of
/// truth for DAC bits and MAC labels; host filesystem metadata is never
/// consulted.
struct FsEntry {
  std::string path;       // absolute, normalized
  unsigned mode = 0;      // 12 bits: rwxrwxrwx + setuid/setgid/sticky
  unsigned uid = 0;
  unsigned gid = 0;
  std::string selabel;    // SELinux context, empty = UNSET
  FileKind kind = FileKind::regular;
  bool metadata_only = false;  // no backing content under the extracted tree

  bool label_unset() const { return selabel.empty(); }

  bool operator==(const FsEntry& other) const {
    return path == other.path && mode == other.mode && uid == other.uid &&
           gid == other.gid && selabel == other.selabel && kind == other.kind;
  }
};

/// The credentials a connecting process presents to DAC checks.
struct CredentialSet {
  unsigned uid = 0;
  unsigned primary_gid = 0;
  std::set<unsigned> supplementary_gids;  // never contains primary_gid

  bool holds_gid(unsigned gid) const {
    return gid == primary_gid || supplementary_gids.count(gid) > 0;
  }
};

}  // namespace udsaudit

#endif  // UDSAUDIT_FS_ENTRY_H

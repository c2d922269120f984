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
#ifndef UDSAUDIT_AID_MAP_H
#define UDSAUDIT_AID_MAP_H

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace udsaudit {

/// Maps Android user/group names to numeric ids. Extracted firmware trees
/// rarely carry /etc/passwd, so resolution goes: numeric literal, per-image
/// passwd-style override, then the bundled static AID table (see
/// docs/aid_table.md for the full listing).
class AidMap {
 public:
  AidMap();

  /// Adds entries parsed from a passwd-style file: `name:x:uid:gid:...`
  /// (the shorter `name:uid:gid` form is also accepted). Overrides win
  /// over the bundled table.
  void load_passwd(std::string_view text);

  std::optional<unsigned> resolve_uid(std::string_view name) const;
  std::optional<unsigned> resolve_gid(std::string_view name) const;

 private:
  std::map<std::string, unsigned, std::less<>> uids_;
  std::map<std::string, unsigned, std::less<>> gids_;
  std::map<std::string, unsigned, std::less<>> override_uids_;
  std::map<std::string, unsigned, std::less<>> override_gids_;
};

}  // namespace udsaudit

#endif  // UDSAUDIT_AID_MAP_H

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
#ifndef UDSAUDIT_SEPOLICY_H
#define UDSAUDIT_SEPOLICY_H

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "udsaudit/common.h"

namespace udsaudit {

/// One `allow` statement. source/target may name a type or an attribute;
/// target may be `self`, which expands to the source at graph build time.
struct AvRule {
  std::string source;
  std::string target;
  std::string cls;
  std::set<std::string> perms;  // nonempty
  size_t line = 0;
};

struct DomainTransition {
  std::string source;      // e.g. init
  std::string entrypoint;  // file type labeling the executable
  std::string target;      // resulting process domain
};

struct PolicyStats {
  size_t rules_parsed = 0;
  size_t unknown_statements = 0;
  size_t malformed_skipped = 0;
};

struct PolicyDb {
  std::vector<AvRule> av_rules;
  std::map<std::string, std::set<std::string>> attributes;  // attribute -> member types
  std::vector<DomainTransition> domain_transitions;
  PolicyStats stats;

  bool is_attribute(std::string_view name) const {
    return attributes.find(std::string(name)) != attributes.end();
  }
};

/// Parses textual AV rules:
///   allow SRC TGT:CLASS PERM;
///   allow SRC TGT:CLASS { P1 P2 ... };
///   attribute NAME;
///   typeattribute TYPE ATTR;
///   type_transition SRC ENTRY:process TGT;
/// Statements end at `;`, `#` starts a comment. Unknown statement kinds are
/// counted and skipped in both modes; malformed statements of known kinds
/// throw PolicySyntaxError in strict mode and are skipped otherwise.
PolicyDb parse_policy(std::string_view text, Diagnostics& diags, bool strict = false);

}  // namespace udsaudit

#endif  // UDSAUDIT_SEPOLICY_H

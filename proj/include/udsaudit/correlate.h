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
#ifndef UDSAUDIT_CORRELATE_H
#define UDSAUDIT_CORRELATE_H

#include <map>
#include <set>
#include <string>
#include <vector>

#include "udsaudit/fw_image.h"
#include "udsaudit/initrc.h"
#include "udsaudit/sepolicy.h"

namespace udsaudit {

// Maps process domains to the executables that run in them. A domain
// matches a binary when
//   (a) a domain transition's entrypoint type labels that file, or
//   (b) an init service executes it and the service's seclabel (or the
//       transition derived from the executable's label) names the domain.
// Only domains with at least one match appear; callers decide what an
// absent domain means.
std::map<std::string, std::set<std::string>> correlate_subject_binaries(
    const PolicyDb& db, const FirmwareImage& image,
    const std::vector<ServiceDefinition>& services);

}  // namespace udsaudit

#endif  // UDSAUDIT_CORRELATE_H

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
#ifndef UDSAUDIT_REPORT_H
#define UDSAUDIT_REPORT_H

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "udsaudit/access_eval.h"
#include "udsaudit/common.h"
#include "udsaudit/endpoint.h"

namespace udsaudit {

struct PipelineOptions {
  bool strict = false;
  int hops = 1;
  // Worker threads for the per-binary stage; 0 = one per hardware thread.
  int jobs = 0;
  // Extra permission names treated as write-implying when building the
  // dataflow graph, on top of the built-in table.
  std::set<std::string> extra_write_perms;
  // File listing bind-like API symbols, one per line; overrides the
  // built-in set.
  std::optional<std::string> bind_api_list;
  std::string subject = "untrusted_app";
};

// Reasons attached to skipped-binary records.
inline constexpr const char* kReasonSkippedStatic = "SKIPPED_STATIC";
inline constexpr const char* kReasonLoadError = "LOAD_ERROR";
inline constexpr const char* kReasonMissingContent = "MISSING_CONTENT";
inline constexpr const char* kReasonNoBackingBinary = "NO_BACKING_BINARY";
inline constexpr const char* kReasonNoEndpoints = "NO_ENDPOINTS_RECOVERED";

// One peer-credential observation, flattened to a single usage so the
// report can show each comparison or hand-off on its own line.
struct CheckRow {
  CredField field = CredField::uid;
  UsageKind usage = UsageKind::comparison;
  std::optional<int64_t> comparand;
  std::string callee;
  CheckStrength strength = CheckStrength::none;
};

struct ReportEndpoint {
  SocketEndpoint ep;
  std::vector<CheckRow> checks;
  AccessVerdict verdict;
};

struct SkippedBinary {
  std::string binary;  // image path, or domain name when no file matched
  std::string reason;
};

struct ReportStats {
  size_t rules_parsed = 0;
  size_t services = 0;
  size_t binaries_analyzed = 0;
  size_t binaries_skipped = 0;
};

struct StageTime {
  std::string stage;
  double ms = 0.0;
};

struct Report {
  std::string image;  // basename of the image directory
  std::vector<ReportEndpoint> endpoints;  // sorted by (owner binary, address)
  std::vector<SkippedBinary> skipped;     // sorted by binary
  ReportStats stats;
  std::vector<StageTime> timing;  // pipeline order, "total" last
};

enum class ReportFormat { json, table };

// Runs the whole analysis for one extracted image directory:
// load, policy parse, dataflow graph, subject reachability, binary
// correlation, per-binary extraction (parallel), boot simulation,
// endpoint evaluation. Image-level input problems throw; per-binary
// problems become skipped records.
Report run_pipeline(const std::string& image_dir, const PipelineOptions& opts,
                    Diagnostics& diags);

// Serializes a report. JSON follows the versioned schema in
// docs/report_schema.md; canonical mode drops the timing section so
// identical inputs serialize byte-identically. Table mode is the
// human-readable form and carries no stability promise.
std::string emit_report(const Report& report, ReportFormat format, bool canonical = false);

}  // namespace udsaudit

#endif  // UDSAUDIT_REPORT_H

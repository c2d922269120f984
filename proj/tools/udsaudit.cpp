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
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "udsaudit/common.h"
#include "udsaudit/report.h"

int main(int argc, char** argv) {
  CLI::App app{"Audit Unix domain socket exposure in an extracted firmware image"};
  app.require_subcommand(1);

  CLI::App* analyze = app.add_subcommand("analyze", "Run the full analysis on one image directory");
  std::string image_dir;
  std::string format = "table";
  bool strict = false;
  std::string perm_set;
  int hops = 1;
  int jobs = 0;
  std::string bind_api_list;
  bool canonical = false;
  analyze->add_option("image_dir", image_dir, "Extracted image directory")->required();
  analyze->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"json", "table"}));
  analyze->add_flag("--strict", strict, "Fail on malformed policy or manifest records");
  analyze->add_option("--perm-set", perm_set,
                      "Extra permission names treated as write-implying, comma separated");
  analyze->add_option("--hops", hops, "Reachability depth; above 1 chases relayed flows")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--jobs", jobs, "Worker threads for the binary stage, 0 = auto")
      ->check(CLI::NonNegativeNumber);
  analyze->add_option("--bind-api-list", bind_api_list,
                      "File listing bind-like API symbols, one per line");
  analyze->add_flag("--canonical", canonical, "Deterministic JSON output without timing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  udsaudit::PipelineOptions opts;
  opts.strict = strict;
  opts.hops = hops;
  opts.jobs = jobs;
  if (!bind_api_list.empty()) opts.bind_api_list = bind_api_list;
  for (std::string_view part : udsaudit::split_char(perm_set, ',')) {
    std::string_view p = udsaudit::trim(part);
    if (!p.empty()) opts.extra_write_perms.insert(std::string(p));
  }

  udsaudit::Diagnostics diags;
  try {
    udsaudit::Report report = udsaudit::run_pipeline(image_dir, opts, diags);
    std::string out = udsaudit::emit_report(
        report,
        format == "json" ? udsaudit::ReportFormat::json : udsaudit::ReportFormat::table,
        canonical);
    std::fputs(out.c_str(), stdout);
    for (const std::string& w : diags.warnings()) {
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    return report.skipped.empty() ? 0 : 2;
  } catch (const std::exception& e) {
    for (const std::string& w : diags.warnings()) {
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

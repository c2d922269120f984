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
#include "udsaudit/fw_image.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace udsaudit {

std::optional<FileKind> file_kind_from_string(std::string_view s) {
  if (s == "regular") return FileKind::regular;
  if (s == "directory") return FileKind::directory;
  if (s == "symlink") return FileKind::symlink;
  if (s == "socket_file") return FileKind::socket_file;
  if (s == "device") return FileKind::device;
  if (s == "other") return FileKind::other;
  return std::nullopt;
}

std::string_view to_string(FileKind kind) {
  switch (kind) {
    case FileKind::regular: return "regular";
    case FileKind::directory: return "directory";
    case FileKind::symlink: return "symlink";
    case FileKind::socket_file: return "socket_file";
    case FileKind::device: return "device";
    case FileKind::other: return "other";
  }
  return "other";
}

FsEntry parse_manifest_record(std::string_view line, size_t lineno) {
  auto fields = split_char(line, '\t');
  if (fields.size() != 6) {
    throw MalformedManifest(
        "expected 6 tab-separated fields, got " + std::to_string(fields.size()), lineno);
  }
  FsEntry entry;
  auto normalized = normalize_path(fields[0]);
  if (!normalized) {
    throw MalformedManifest("path is not absolute: '" + std::string(fields[0]) + "'", lineno);
  }
  entry.path = *normalized;
  auto mode = parse_octal_mode(fields[1]);
  if (!mode) {
    throw MalformedManifest("bad octal mode '" + std::string(fields[1]) + "'", lineno);
  }
  entry.mode = *mode;
  auto uid = parse_decimal(fields[2]);
  auto gid = parse_decimal(fields[3]);
  if (!uid || !gid) {
    throw MalformedManifest("bad uid/gid", lineno);
  }
  entry.uid = static_cast<unsigned>(*uid);
  entry.gid = static_cast<unsigned>(*gid);
  if (fields[4].empty()) {
    throw MalformedManifest("empty selabel field (use '-' for unset)", lineno);
  }
  entry.selabel = (fields[4] == "-") ? "" : std::string(fields[4]);
  auto kind = file_kind_from_string(fields[5]);
  if (!kind) {
    throw MalformedManifest("unknown kind '" + std::string(fields[5]) + "'", lineno);
  }
  entry.kind = *kind;
  return entry;
}

namespace {

size_t regex_literal_prefix(std::string_view pattern) {
  // Length of the leading run with no regex metacharacters. A backslash
  // escape ends the literal prefix too: specificity is a heuristic knob,
  // not a parser.
  static constexpr std::string_view kMeta = ".^$*+?()[]{}|\\";
  size_t n = 0;
  while (n < pattern.size() && kMeta.find(pattern[n]) == std::string_view::npos) n++;
  return n;
}

std::optional<std::string> read_file_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::vector<uint8_t>> read_file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

std::vector<FileContextRule> parse_file_contexts(std::string_view text,
                                                 Diagnostics& diags) {
  std::vector<FileContextRule> rules;
  size_t lineno = 0;
  for (std::string_view raw : split_char(text, '\n')) {
    lineno++;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto tokens = split_ws(line);
    if (tokens.size() != 2) {
      diags.warn("file_contexts line " + std::to_string(lineno) +
                 ": expected 'pattern context', skipped");
      continue;
    }
    FileContextRule rule;
    rule.pattern = tokens[0];
    rule.context = tokens[1];
    rule.literal_prefix = regex_literal_prefix(rule.pattern);
    rule.index = rules.size();
    try {
      rule.re = std::regex(rule.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
      diags.warn("file_contexts line " + std::to_string(lineno) +
                 ": unparseable pattern '" + rule.pattern + "', skipped");
      continue;
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

const FsEntry* FirmwareImage::find(std::string_view path) const {
  auto it = entries_.find(std::string(path));
  return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<uint8_t>* FirmwareImage::binary(std::string_view path) const {
  auto it = binaries_->find(std::string(path));
  return it == binaries_->end() ? nullptr : &it->second;
}

std::optional<std::string> FirmwareImage::resolve_label(std::string_view path) const {
  const FileContextRule* best = nullptr;
  for (const FileContextRule& rule : file_contexts_) {
    if (!std::regex_match(path.begin(), path.end(), rule.re)) continue;
    if (!best || rule.literal_prefix > best->literal_prefix ||
        (rule.literal_prefix == best->literal_prefix && rule.index >= best->index)) {
      best = &rule;
    }
  }
  if (!best) return std::nullopt;
  return best->context;
}

FirmwareImage FirmwareImage::insert_entry(FsEntry entry, bool overwrite) const {
  auto normalized = normalize_path(entry.path);
  if (!normalized) {
    throw InputError("BadPath", "insert_entry: path not absolute: " + entry.path);
  }
  entry.path = *normalized;
  if (!overwrite && entries_.count(entry.path)) {
    throw DuplicatePath(entry.path);
  }
  if (entry.label_unset()) {
    auto label = resolve_label(entry.path);
    entry.selabel = label ? *label : kDefaultLabel;
  }
  FirmwareImage derived(*this);
  derived.entries_[entry.path] = std::move(entry);
  return derived;
}

bool FirmwareImage::labels_total() const {
  for (const auto& [path, entry] : entries_) {
    if (entry.label_unset()) return false;
  }
  return true;
}

FirmwareImage FirmwareImage::load(const std::string& root_dir, const std::string& manifest,
                                  Diagnostics& diags, bool strict) {
  FirmwareImage image;
  fs::path root(root_dir);
  fs::path tree = root / "fs";

  auto manifest_text = read_file_text(manifest);
  if (!manifest_text) {
    throw MalformedManifest("cannot read manifest: " + manifest, 0);
  }

  if (auto contexts = read_file_text(root / "file_contexts")) {
    image.file_contexts_ = parse_file_contexts(*contexts, diags);
  } else {
    diags.warn("no file_contexts in " + root_dir + "; inserted files get the default label");
  }

  auto policy = read_file_text(root / "sepolicy.txt");
  if (!policy || policy->empty()) {
    throw MissingPolicy("no AV-rule document at " + (root / "sepolicy.txt").string());
  }
  image.policy_source_ = std::move(*policy);

  if (auto passwd = read_file_text(root / "passwd")) {
    image.aid_map_.load_passwd(*passwd);
  }

  auto store = std::make_shared<BinaryStore>();
  size_t lineno = 0;
  for (std::string_view raw : split_char(*manifest_text, '\n')) {
    lineno++;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line[0] == '#') continue;
    FsEntry entry = parse_manifest_record(line, lineno);
    if (image.entries_.count(entry.path)) {
      throw MalformedManifest("duplicate path " + entry.path, lineno);
    }
    image.load_stats_.manifest_records++;

    if (entry.kind == FileKind::regular) {
      fs::path backing = tree / entry.path.substr(1);
      if (auto bytes = read_file_bytes(backing)) {
        if (ends_with(entry.path, ".rc")) {
          image.initrc_sources_.emplace_back(
              entry.path, std::string(bytes->begin(), bytes->end()));
          image.load_stats_.initrc_files++;
        }
        (*store)[entry.path] = std::move(*bytes);
      } else {
        if (strict) {
          throw MalformedManifest("no backing content for regular file " + entry.path, lineno);
        }
        entry.metadata_only = true;
        image.load_stats_.metadata_only++;
        diags.warn("manifest line " + std::to_string(lineno) + ": regular file " +
                   entry.path + " has no backing content, kept metadata-only");
      }
    } else {
      entry.metadata_only = true;
    }
    image.entries_[entry.path] = std::move(entry);
  }
  image.binaries_ = std::move(store);

  // Stable per-path order regardless of manifest order.
  std::sort(image.initrc_sources_.begin(), image.initrc_sources_.end());

  if (image.initrc_sources_.empty()) {
    diags.warn("MissingInitRc: image has no .rc sources; RESERVED sockets will only "
               "be found by binary analysis");
  }
  return image;
}

}  // namespace udsaudit

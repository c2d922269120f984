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
#ifndef UDSAUDIT_COMMON_H
#define UDSAUDIT_COMMON_H

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace udsaudit {

/// Base class for all fatal input errors raised by the toolkit.
class InputError : public std::runtime_error {
 public:
  InputError(std::string kind, std::string message, size_t line = 0)
      : std::runtime_error(line ? kind + ": line " + std::to_string(line) + ": " + message
                                : kind + ": " + message),
        kind_(std::move(kind)),
        line_(line) {}

  const std::string& kind() const { return kind_; }
  size_t line() const { return line_; }

 private:
  std::string kind_;
  size_t line_;
};

class MalformedManifest : public InputError {
 public:
  MalformedManifest(std::string message, size_t line)
      : InputError("MalformedManifest", std::move(message), line) {}
};

class MissingPolicy : public InputError {
 public:
  explicit MissingPolicy(std::string message)
      : InputError("MissingPolicy", std::move(message)) {}
};

class DuplicatePath : public InputError {
 public:
  explicit DuplicatePath(std::string path)
      : InputError("DuplicatePath", std::move(path)) {}
};

class PolicySyntaxError : public InputError {
 public:
  PolicySyntaxError(std::string message, size_t line)
      : InputError("SyntaxError", std::move(message), line) {}
};

class UnsupportedArch : public InputError {
 public:
  explicit UnsupportedArch(std::string message)
      : InputError("UnsupportedArch", std::move(message)) {}
};

class MalformedElf : public InputError {
 public:
  explicit MalformedElf(std::string message)
      : InputError("MalformedElf", std::move(message)) {}
};

class UnknownPermission : public InputError {
 public:
  explicit UnknownPermission(std::string message)
      : InputError("UnknownPermission", std::move(message)) {}
};

/// Collects non-fatal warnings emitted while loading and analyzing an image.
/// Parsers are lenient by default: anything they can skip lands here instead
/// of aborting the run. Thread safe; the binary-analysis stage appends from
/// worker threads.
class Diagnostics {
 public:
  void warn(std::string message) {
    std::lock_guard<std::mutex> lock(mutex_);
    warnings_.push_back(std::move(message));
  }

  std::vector<std::string> warnings() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return warnings_;
  }

  size_t count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return warnings_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> warnings_;
};

// --- small string helpers shared by the line-oriented parsers ---

inline std::string_view trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) i++;
    size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') i++;
    if (i > b) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

inline std::vector<std::string_view> split_char(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); i++) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Parses a non-negative decimal integer; rejects empty/overflow/junk.
std::optional<uint64_t> parse_decimal(std::string_view s);

/// Parses an octal mode string. Values above `limit` are rejected.
std::optional<unsigned> parse_octal_mode(std::string_view s, unsigned limit = 07777);

/// Normalizes an absolute slash-separated path: collapses duplicate
/// separators, resolves `.` and `..` lexically, strips trailing slash.
/// Returns nullopt if the input is not absolute or `..` escapes the root.
std::optional<std::string> normalize_path(std::string_view path);

/// Parent directory of a normalized absolute path ("/" for top-level
/// entries, nullopt for "/").
std::optional<std::string> parent_path(std::string_view path);

/// Extracts the SELinux type from a `user:role:type:level` context string.
/// The level may itself contain colons (MLS categories).
std::optional<std::string> context_type(std::string_view context);

}  // namespace udsaudit

#endif  // UDSAUDIT_COMMON_H

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
#include "udsaudit/common.h"

namespace udsaudit {

std::optional<uint64_t> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  uint64_t value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    if (value > (UINT64_MAX - (c - '0')) / 10) return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

std::optional<unsigned> parse_octal_mode(std::string_view s, unsigned limit) {
  if (s.empty()) return std::nullopt;
  unsigned value = 0;
  for (char c : s) {
    if (c < '0' || c > '7') return std::nullopt;
    value = value * 8 + (c - '0');
    if (value > limit) return std::nullopt;
  }
  return value;
}

std::optional<std::string> normalize_path(std::string_view path) {
  if (path.empty() || path[0] != '/') return std::nullopt;
  std::vector<std::string_view> parts;
  for (std::string_view part : split_char(path, '/')) {
    if (part.empty() || part == ".") continue;
    if (part == "..") {
      if (parts.empty()) return std::nullopt;
      parts.pop_back();
      continue;
    }
    parts.push_back(part);
  }
  if (parts.empty()) return std::string("/");
  std::string out;
  for (std::string_view part : parts) {
    out += '/';
    out += part;
  }
  return out;
}

std::optional<std::string> parent_path(std::string_view path) {
  if (path == "/") return std::nullopt;
  size_t slash = path.rfind('/');
  if (slash == std::string_view::npos) return std::nullopt;
  if (slash == 0) return std::string("/");
  return std::string(path.substr(0, slash));
}

std::optional<std::string> context_type(std::string_view context) {
  // user:role:type:level, where level may contain further colons.
  size_t a = context.find(':');
  if (a == std::string_view::npos) return std::nullopt;
  size_t b = context.find(':', a + 1);
  if (b == std::string_view::npos) return std::nullopt;
  size_t c = context.find(':', b + 1);
  if (c == std::string_view::npos) return std::nullopt;
  if (c == b + 1) return std::nullopt;
  return std::string(context.substr(b + 1, c - b - 1));
}

}  // namespace udsaudit

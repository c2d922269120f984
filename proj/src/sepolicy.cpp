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
#include "udsaudit/sepolicy.h"

#include <cstring>

namespace udsaudit {

namespace {

struct Token {
  std::string text;
  size_t line;
};

// Splits the policy text into statements (token runs ending at ';').
// '{', '}', ':' and ';' are their own tokens.
class StatementLexer {
 public:
  explicit StatementLexer(std::string_view text) : text_(text) {}

  // Returns tokens of the next statement, excluding the terminating ';'.
  // Empty vector + done() means end of input.
  std::vector<Token> next() {
    std::vector<Token> tokens;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        line_++;
        pos_++;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        pos_++;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') pos_++;
      } else if (c == ';') {
        pos_++;
        return tokens;
      } else if (c == '{' || c == '}' || c == ':') {
        tokens.push_back({std::string(1, c), line_});
        pos_++;
      } else {
        size_t b = pos_;
        while (pos_ < text_.size() && !strchr(" \t\r\n#;{}:", text_[pos_])) pos_++;
        tokens.push_back({text_.substr(b, pos_ - b), line_});
      }
    }
    unterminated_ = !tokens.empty();
    return tokens;
  }

  bool done() const { return pos_ >= text_.size(); }
  bool unterminated() const { return unterminated_; }

 private:
  std::string text_;
  size_t pos_ = 0;
  size_t line_ = 1;
  bool unterminated_ = false;
};

class StatementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::set<std::string> parse_perm_set(const std::vector<Token>& t, size_t i) {
  std::set<std::string> perms;
  if (i < t.size() && t[i].text == "{") {
    i++;
    while (i < t.size() && t[i].text != "}") {
      perms.insert(t[i].text);
      i++;
    }
    if (i >= t.size()) throw StatementError("unterminated permission set");
    if (i + 1 != t.size()) throw StatementError("trailing tokens after '}'");
  } else {
    if (i + 1 != t.size()) throw StatementError("expected a single permission or '{ ... }'");
    perms.insert(t[i].text);
  }
  if (perms.empty()) throw StatementError("empty permission set");
  return perms;
}

// allow SRC TGT : CLASS perms
AvRule parse_allow(const std::vector<Token>& t) {
  if (t.size() < 6) throw StatementError("truncated allow rule");
  if (t[3].text != ":") throw StatementError("expected ':' after target");
  AvRule rule;
  rule.source = t[1].text;
  rule.target = t[2].text;
  rule.cls = t[4].text;
  rule.line = t[0].line;
  rule.perms = parse_perm_set(t, 5);
  return rule;
}

}  // namespace

PolicyDb parse_policy(std::string_view text, Diagnostics& diags, bool strict) {
  PolicyDb db;
  StatementLexer lexer(text);
  while (!lexer.done()) {
    std::vector<Token> t = lexer.next();
    if (t.empty()) continue;
    const std::string& kind = t[0].text;
    size_t line = t[0].line;
    try {
      if (lexer.unterminated()) throw StatementError("statement not terminated by ';'");
      if (kind == "allow") {
        db.av_rules.push_back(parse_allow(t));
        db.stats.rules_parsed++;
      } else if (kind == "attribute") {
        if (t.size() != 2) throw StatementError("attribute takes exactly one name");
        db.attributes.emplace(t[1].text, std::set<std::string>{});
      } else if (kind == "typeattribute") {
        if (t.size() != 3) throw StatementError("typeattribute takes TYPE ATTR");
        db.attributes[t[2].text].insert(t[1].text);
      } else if (kind == "type_transition") {
        // type_transition SRC ENTRY : CLASS TGT
        if (t.size() != 6 || t[3].text != ":") {
          throw StatementError("expected 'type_transition SRC ENTRY:CLASS TGT'");
        }
        if (t[4].text == "process") {
          db.domain_transitions.push_back({t[1].text, t[2].text, t[5].text});
        } else {
          // File-name transitions and friends are irrelevant here.
          db.stats.unknown_statements++;
        }
      } else {
        db.stats.unknown_statements++;
      }
    } catch (const StatementError& e) {
      if (strict) {
        throw PolicySyntaxError(std::string(e.what()) + " in '" + kind + "' statement", line);
      }
      db.stats.malformed_skipped++;
      diags.warn("policy line " + std::to_string(line) + ": " + e.what() + ", statement skipped");
    }
  }
  return db;
}

}  // namespace udsaudit

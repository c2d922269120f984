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
#include "doctest.h"
#include "oracles.h"
#include "udsaudit/sepolicy.h"

using namespace udsaudit;

TEST_CASE("allow rules parse in both permission forms") {
  Diagnostics diags;
  PolicyDb db = parse_policy(
      "allow netd dnsproxyd_socket:sock_file write;\n"
      "allow netd self:unix_stream_socket { create bind listen accept };\n",
      diags);
  REQUIRE(db.av_rules.size() == 2);
  CHECK(db.stats.rules_parsed == 2);

  CHECK(db.av_rules[0].source == "netd");
  CHECK(db.av_rules[0].target == "dnsproxyd_socket");
  CHECK(db.av_rules[0].cls == "sock_file");
  CHECK(db.av_rules[0].perms == std::set<std::string>{"write"});
  CHECK(db.av_rules[0].line == 1);

  CHECK(db.av_rules[1].target == "self");
  CHECK(db.av_rules[1].perms ==
        std::set<std::string>{"accept", "bind", "create", "listen"});
  CHECK(diags.count() == 0);
}

TEST_CASE("statements may span lines and comments vanish") {
  Diagnostics diags;
  PolicyDb db = parse_policy(
      "# full-line comment\n"
      "allow a b : file # trailing comment\n"
      "  { read\n"
      "    write };\n"
      "allow c d:dir search;allow e f:file open;\n",
      diags);
  REQUIRE(db.av_rules.size() == 3);
  CHECK(db.av_rules[0].perms == std::set<std::string>{"read", "write"});
  CHECK(db.av_rules[1].line == 5);
  CHECK(db.av_rules[2].source == "e");
}

TEST_CASE("attributes and memberships accumulate") {
  Diagnostics diags;
  PolicyDb db = parse_policy(
      "attribute halserverdomain;\n"
      "typeattribute fmhal halserverdomain;\n"
      "typeattribute wifihal halserverdomain;\n"
      "typeattribute netd coredomain;\n",  // attribute never declared, still tracked
      diags);
  CHECK(db.is_attribute("halserverdomain"));
  CHECK(db.is_attribute("coredomain"));
  CHECK_FALSE(db.is_attribute("fmhal"));
  CHECK(db.attributes.at("halserverdomain") ==
        std::set<std::string>{"fmhal", "wifihal"});
  CHECK(db.attributes.at("coredomain") == std::set<std::string>{"netd"});
  CHECK(db.stats.rules_parsed == 0);
}

TEST_CASE("process transitions are kept, file transitions are not modeled") {
  Diagnostics diags;
  PolicyDb db = parse_policy(
      "type_transition init netd_exec:process netd;\n"
      "type_transition netd tmpfs:file netd_tmpfs;\n",
      diags);
  REQUIRE(db.domain_transitions.size() == 1);
  CHECK(db.domain_transitions[0].source == "init");
  CHECK(db.domain_transitions[0].entrypoint == "netd_exec");
  CHECK(db.domain_transitions[0].target == "netd");
  CHECK(db.stats.unknown_statements == 1);
}

TEST_CASE("unknown statement kinds are counted and skipped in both modes") {
  const char* text =
      "type netd, domain;\n"
      "dontaudit untrusted_app mcdriver:unix_stream_socket ioctl;\n"
      "allow a b:file read;\n";
  Diagnostics diags;
  PolicyDb lenient = parse_policy(text, diags);
  CHECK(lenient.stats.unknown_statements == 2);
  CHECK(lenient.stats.rules_parsed == 1);
  CHECK(lenient.stats.malformed_skipped == 0);
  CHECK(diags.count() == 0);

  Diagnostics sdiags;
  PolicyDb strict = parse_policy(text, sdiags, /*strict=*/true);
  CHECK(strict.stats.unknown_statements == 2);
  CHECK(strict.stats.rules_parsed == 1);
}

TEST_CASE("malformed known statements skip leniently and throw strictly") {
  const char* cases[] = {
      "allow a b:file;\n",                    // missing permissions
      "allow a b file read;\n",               // missing ':'
      "allow a b:file { read write;\n",       // unterminated set
      "allow a b:file { };\n",                // empty set
      "attribute one two;\n",                 // arity
      "typeattribute solo;\n",                // arity
      "type_transition a b:process;\n",       // arity
      "allow a b:file read",                  // missing ';' at EOF
  };
  for (const char* text : cases) {
    CAPTURE(text);
    Diagnostics diags;
    PolicyDb db = parse_policy(text, diags);
    CHECK(db.stats.malformed_skipped == 1);
    CHECK(db.av_rules.empty());
    CHECK(diags.count() == 1);
    Diagnostics sdiags;
    CHECK_THROWS_AS(parse_policy(text, sdiags, /*strict=*/true), PolicySyntaxError);
  }
}

TEST_CASE("strict errors carry the statement's line number") {
  Diagnostics diags;
  try {
    parse_policy("allow ok ok:file read;\nallow broken broken:file { };\n", diags, true);
    FAIL("expected PolicySyntaxError");
  } catch (const PolicySyntaxError& err) {
    CHECK(err.line() == 2);
    CHECK(err.kind() == "SyntaxError");
  }
}

TEST_CASE("a malformed statement does not poison its neighbors") {
  Diagnostics diags;
  PolicyDb db = parse_policy(
      "allow a b:file read;\n"
      "allow broken;\n"
      "allow c d:file write;\n",
      diags);
  REQUIRE(db.av_rules.size() == 2);
  CHECK(db.av_rules[1].source == "c");
  CHECK(db.stats.malformed_skipped == 1);
}

TEST_CASE("expansion oracle agrees with the parsed structures") {
  // Small sanity check that the parse produces what brute-force expansion
  // expects to consume; the full equivalence runs in the dataflow suite.
  Diagnostics diags;
  PolicyDb db = parse_policy(
      "attribute appdomain;\n"
      "typeattribute app1 appdomain;\n"
      "typeattribute app2 appdomain;\n"
      "allow appdomain logd:unix_stream_socket connectto;\n"
      "allow logd self:unix_stream_socket bind;\n",
      diags);
  auto expanded = testing::oracle_expand(db);
  CHECK(expanded.count({"app1", "logd", "unix_stream_socket", "connectto"}) == 1);
  CHECK(expanded.count({"app2", "logd", "unix_stream_socket", "connectto"}) == 1);
  CHECK(expanded.count({"appdomain", "logd", "unix_stream_socket", "connectto"}) == 0);
  CHECK(expanded.count({"logd", "logd", "unix_stream_socket", "bind"}) == 1);
  CHECK(expanded.size() == 3);
}

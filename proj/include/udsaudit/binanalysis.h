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
#ifndef UDSAUDIT_BINANALYSIS_H
#define UDSAUDIT_BINANALYSIS_H

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "udsaudit/cfg.h"
#include "udsaudit/common.h"
#include "udsaudit/elf_image.h"
#include "udsaudit/endpoint.h"

namespace udsaudit {

struct PeerCheckScan {
  std::vector<PeerCredCheck> checks;
  size_t nonconst_optname = 0;  // getsockopt sites skipped for that reason
};

// One recovered fragment of an extracted address, kept so the result can
// be re-derived from the binary and cross-checked.
struct ByteFragment {
  enum class Kind {
    image,    // bytes copied from a mapped section, starting at `vaddr`
    literal,  // bytes supplied by an instruction immediate at `vaddr`
    synth,    // bytes synthesized by a simulated call (formatted digits)
  };
  Kind kind = Kind::synth;
  uint64_t vaddr = 0;
  std::string bytes;
};

// Whole-binary dataflow pass.  Interprets every defined function with an
// abstract machine over registers, stack bytes, and global data, and
// records socket-relevant events along the way.  The standalone
// extraction functions below are conveniences that run one of these.
class BinaryAnalysis {
 public:
  BinaryAnalysis(const ElfImage& img, const Cfg& cfg,
                 std::set<std::string> bind_apis, Diagnostics* diags);
  ~BinaryAnalysis();

  void run();

  // No anchors for analysis: statically linked with all symbols gone.
  bool skipped_static() const;

  const std::vector<ExtractedBind>& binds() const;
  const std::vector<std::string>& reserved_names() const;
  std::vector<CredModCall> cred_mods(uint64_t bind_callsite) const;
  const std::vector<PeerCredCheck>& peer_checks() const;
  size_t nonconst_optname() const;
  bool close_outside_cleanup(uint64_t bind_callsite) const;

  // Callees that look up a peer's process name from /proc (used to
  // downgrade pid checks to spoofable).
  const std::set<std::string>& comm_reader_callees() const;

  // Re-derives an exact extraction from the binary and compares; used to
  // reject fabricated bytes.
  bool replay_derivation(const ExtractedBind& b) const;
  const std::vector<ByteFragment>* derivation(uint64_t callsite) const;

  static std::set<std::string> default_bind_apis();
  // Reads one symbol per line; '#' comments and blank lines ignored.
  static std::set<std::string> load_bind_apis(const std::string& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<ExtractedBind> extract_bind_addresses(const Cfg& cfg,
                                                  const ElfImage& bin);
std::vector<std::string> extract_reserved_getenv(const Cfg& cfg,
                                                 const ElfImage& bin);
std::vector<CredModCall> extract_cred_mods(const Cfg& cfg, const ElfImage& bin,
                                           uint64_t bind_callsite);
PeerCheckScan extract_peer_checks(const Cfg& cfg, const ElfImage& bin);
bool detect_close_outside_cleanup(const Cfg& cfg, const ElfImage& bin,
                                  uint64_t bind_callsite);

CheckStrength classify_check_strength(const PeerCredCheck& check,
                                      const std::set<std::string>& callee_hints);

}  // namespace udsaudit

#endif  // UDSAUDIT_BINANALYSIS_H

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
#ifndef UDSAUDIT_CFG_H
#define UDSAUDIT_CFG_H

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "udsaudit/elf_image.h"
#include "udsaudit/insn.h"

namespace udsaudit {

struct BasicBlock {
  uint64_t start = 0;
  uint64_t end = 0;  // address after the last decoded instruction
  std::vector<Insn> insns;
  std::vector<uint64_t> succ;  // successor block starts within the function
  bool truncated = false;      // ended early on undecodable bytes
};

// One call or tail-call instruction with its resolution. `symbol` is
// empty when the target could not be named (indirect call with no
// recoverable slot, or a local function without a symbol).
struct Callsite {
  uint64_t vaddr = 0;
  uint64_t func_entry = 0;
  uint64_t target = 0;  // callee vaddr for direct calls, GOT slot resolution otherwise
  std::string symbol;
  bool indirect = false;
  bool tail = false;
};

struct CfgFunction {
  std::string name;
  uint64_t entry = 0;
  uint64_t limit = 0;  // exclusive decoding bound
  std::map<uint64_t, BasicBlock> blocks;
  std::map<uint64_t, uint64_t> idom;  // block start -> immediate dominator
  std::vector<std::pair<uint64_t, uint64_t>> back_edges;  // (tail block, loop header)
  size_t undecodable = 0;

  const BasicBlock* block_of(uint64_t vaddr) const;
  // Block-level dominance; both arguments are block start addresses.
  bool dominates_block(uint64_t a, uint64_t b) const;
  // Instruction-level dominance within this function.
  bool dominates_insn(uint64_t a, uint64_t b) const;
  // Natural loop bodies, one set of block starts per back edge.
  std::vector<std::set<uint64_t>> natural_loops() const;
  // True when `vaddr` lies inside a natural loop body whose header
  // dominates it (used for rebinding detection).
  bool in_loop(uint64_t vaddr) const;
};

struct Cfg {
  Arch arch = Arch::x86_64;
  std::map<uint64_t, CfgFunction> functions;  // keyed by entry vaddr
  std::vector<Callsite> calls;                // sorted by vaddr
  size_t undecodable_total = 0;

  const CfgFunction* function_containing(uint64_t vaddr) const;
};

Cfg build_cfg(const ElfImage& img);

// Filters the call list down to the named symbols.
std::vector<Callsite> find_callsites(const Cfg& cfg,
                                     const std::set<std::string>& symbols);

}  // namespace udsaudit

#endif  // UDSAUDIT_CFG_H

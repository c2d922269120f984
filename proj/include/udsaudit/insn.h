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
#ifndef UDSAUDIT_INSN_H
#define UDSAUDIT_INSN_H

#include <cstdint>
#include <cstddef>
#include <vector>

namespace udsaudit {

enum class Arch { x86_64, aarch64 };

// Architecture-neutral instruction form. Decoders lower only the
// operations the dataflow engine models; everything else becomes
// Op::other, which still carries length, control-flow effect, and the
// registers it clobbers so the engine can havoc them.
//
// Register numbering is the architecture's own GPR index: rax..r15 =
// 0..15; x0..x30 = 0..30 plus sp = 31. kRegNone marks an absent operand.
constexpr int kRegNone = -1;
// Pseudo-base for rip/pc-relative addressing.
constexpr int kRegPc = 64;

enum class Op {
  mov_reg_imm,   // dst <- imm
  mov_reg_reg,   // dst <- src
  movk,          // dst: 16 bits at `disp` replaced by imm (keeps the rest)
  lea,           // dst <- base + disp (address arithmetic, no load)
  load,          // dst <- size bytes at [base + disp]
  load_pair,     // dst <- [base+disp], src2-as-dst2 <- [base+disp+size]
  store_reg,     // [base + disp] <- src (size bytes)
  store_pair,    // [base+disp] <- src, [base+disp+size] <- src2
  store_imm,     // [base + disp] <- imm (size bytes)
  store_havoc,   // [base + disp] <- unknown (size bytes)
  add_imm,       // dst <- src + imm
  sub_imm,       // dst <- src - imm
  push_reg,      // x86 only: [--sp] <- src
  pop_reg,       // x86 only: dst <- [sp++]
  cmp_reg_imm,   // compare src with imm (flags only)
  cmp_reg_reg,   // compare src with src2
  cmp_mem_imm,   // compare [base + disp] with imm
  cmp_mem_reg,   // compare [base + disp] with src
  call_direct,   // call to `target`
  call_indirect,
  jmp_direct,    // unconditional, to `target`
  jmp_indirect,  // unconditional, target unknown (ends the block)
  jcc,           // conditional, to `target` plus fallthrough; when src is
                 // set the instruction itself compares src with imm
  jcc_bit,       // conditional on a single bit of src (no usable constant)
  ret,
  nop,
  other,         // decoded but not modeled; clobbers listed registers
};

struct Insn {
  uint64_t vaddr = 0;
  uint32_t len = 0;
  Op op = Op::other;
  int dst = kRegNone;
  int src = kRegNone;
  int src2 = kRegNone;  // second comparison operand / second pair register
  int base = kRegNone;  // memory base (kRegPc for rip/pc-relative)
  int64_t disp = 0;     // memory displacement (absolute when base=kRegPc)
  int64_t imm = 0;      // immediate
  uint64_t target = 0;  // resolved direct branch/call target
  uint8_t size = 8;     // access width in bytes for load/store
  bool wback = false;   // base register updated by wb_disp afterwards
  int64_t wb_disp = 0;
  // The address is not a plain base+disp (scaled index, string op):
  // a store through it can land anywhere.
  bool wild_mem = false;
  // Registers whose value the instruction destroys (Op::other only;
  // modeled ops imply their own destination).
  std::vector<int> clobbers;
};

// Decodes one instruction at `vaddr` from `bytes` (at least `avail`
// readable). Returns false when the bytes do not form an instruction;
// on success fills `out`, always including a nonzero length.
bool decode_x86(const uint8_t* bytes, size_t avail, uint64_t vaddr, Insn& out);
bool decode_a64(const uint8_t* bytes, size_t avail, uint64_t vaddr, Insn& out);

// Calling-convention facts the dataflow engine needs.
struct AbiInfo {
  std::vector<int> arg_regs;
  int ret_reg;
  int sp_reg;
  // Registers a callee must preserve; everything else is assumed
  // destroyed across a call.
  std::vector<int> callee_saved;
};

const AbiInfo& abi_info(Arch arch);

}  // namespace udsaudit

#endif  // UDSAUDIT_INSN_H

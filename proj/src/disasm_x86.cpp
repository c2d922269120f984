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
#include "udsaudit/insn.h"

#include <cstring>
#include <initializer_list>

namespace udsaudit {

namespace {

// General purpose register indices.
constexpr int RAX = 0, RCX = 1, RDX = 2, RSP = 4, RBP = 5, RSI = 6, RDI = 7;

enum class ImmKind { none, i8, iz, i16, iv, rel8, rel32, i16_8, moffs };

struct OpAttr {
  bool valid = false;
  bool modrm = false;
  ImmKind imm = ImmKind::none;
};

OpAttr one_byte_attr(uint8_t op) {
  // 00-3f: the classic ALU rows. Per row of 8: /r forms, then AL,imm8 and
  // eAX,immz; the last two slots are gone in 64-bit mode.
  if (op <= 0x3f) {
    switch (op & 7) {
      case 0: case 1: case 2: case 3: return {true, true, ImmKind::none};
      case 4: return {true, false, ImmKind::i8};
      case 5: return {true, false, ImmKind::iz};
      default: return {};
    }
  }
  if (op >= 0x50 && op <= 0x5f) return {true, false, ImmKind::none};
  switch (op) {
    case 0x63: return {true, true, ImmKind::none};        // movsxd
    case 0x68: return {true, false, ImmKind::iz};         // push imm
    case 0x69: return {true, true, ImmKind::iz};          // imul r,r/m,imm
    case 0x6a: return {true, false, ImmKind::i8};
    case 0x6b: return {true, true, ImmKind::i8};
    case 0x6c: case 0x6d: case 0x6e: case 0x6f: return {true, false, ImmKind::none};
  }
  if (op >= 0x70 && op <= 0x7f) return {true, false, ImmKind::rel8};
  switch (op) {
    case 0x80: return {true, true, ImmKind::i8};
    case 0x81: return {true, true, ImmKind::iz};
    case 0x83: return {true, true, ImmKind::i8};
    case 0x84: case 0x85: case 0x86: case 0x87: return {true, true, ImmKind::none};
    case 0x88: case 0x89: case 0x8a: case 0x8b: return {true, true, ImmKind::none};
    case 0x8c: case 0x8d: case 0x8e: case 0x8f: return {true, true, ImmKind::none};
  }
  if (op >= 0x90 && op <= 0x99) return {true, false, ImmKind::none};
  switch (op) {
    case 0x9b: case 0x9c: case 0x9d: case 0x9e: case 0x9f:
      return {true, false, ImmKind::none};
    case 0xa0: case 0xa1: case 0xa2: case 0xa3: return {true, false, ImmKind::moffs};
    case 0xa4: case 0xa5: case 0xa6: case 0xa7: return {true, false, ImmKind::none};
    case 0xa8: return {true, false, ImmKind::i8};
    case 0xa9: return {true, false, ImmKind::iz};
    case 0xaa: case 0xab: case 0xac: case 0xad: case 0xae: case 0xaf:
      return {true, false, ImmKind::none};
  }
  if (op >= 0xb0 && op <= 0xb7) return {true, false, ImmKind::i8};
  if (op >= 0xb8 && op <= 0xbf) return {true, false, ImmKind::iv};
  switch (op) {
    case 0xc0: case 0xc1: return {true, true, ImmKind::i8};
    case 0xc2: return {true, false, ImmKind::i16};
    case 0xc3: return {true, false, ImmKind::none};
    case 0xc6: return {true, true, ImmKind::i8};
    case 0xc7: return {true, true, ImmKind::iz};
    case 0xc8: return {true, false, ImmKind::i16_8};      // enter
    case 0xc9: return {true, false, ImmKind::none};       // leave
    case 0xca: return {true, false, ImmKind::i16};
    case 0xcb: case 0xcc: return {true, false, ImmKind::none};
    case 0xcd: return {true, false, ImmKind::i8};
    case 0xcf: return {true, false, ImmKind::none};
    case 0xd0: case 0xd1: case 0xd2: case 0xd3: return {true, true, ImmKind::none};
    case 0xd7: return {true, false, ImmKind::none};
  }
  if (op >= 0xd8 && op <= 0xdf) return {true, true, ImmKind::none};  // x87
  if (op >= 0xe0 && op <= 0xe3) return {true, false, ImmKind::rel8};
  switch (op) {
    case 0xe4: case 0xe5: case 0xe6: case 0xe7: return {true, false, ImmKind::i8};
    case 0xe8: case 0xe9: return {true, false, ImmKind::rel32};
    case 0xeb: return {true, false, ImmKind::rel8};
    case 0xec: case 0xed: case 0xee: case 0xef: return {true, false, ImmKind::none};
    case 0xf1: case 0xf4: case 0xf5: return {true, false, ImmKind::none};
    case 0xf6: return {true, true, ImmKind::i8};   // imm only for /0 /1, fixed later
    case 0xf7: return {true, true, ImmKind::iz};   // same
    case 0xf8: case 0xf9: case 0xfa: case 0xfb: case 0xfc: case 0xfd:
      return {true, false, ImmKind::none};
    case 0xfe: case 0xff: return {true, true, ImmKind::none};
  }
  return {};
}

OpAttr two_byte_attr(uint8_t op) {
  // jcc rel32
  if (op >= 0x80 && op <= 0x8f) return {true, false, ImmKind::rel32};
  switch (op) {
    // no-operand forms
    case 0x05: case 0x06: case 0x07: case 0x08: case 0x09: case 0x0b: case 0x0e:
    case 0x30: case 0x31: case 0x32: case 0x33: case 0x34: case 0x35: case 0x37:
    case 0x77: case 0xa0: case 0xa1: case 0xa2: case 0xa8: case 0xa9: case 0xaa:
      return {true, false, ImmKind::none};
    // modrm + imm8 forms
    case 0x70: case 0x71: case 0x72: case 0x73: case 0xa4: case 0xac: case 0xba:
    case 0xc2: case 0xc4: case 0xc5: case 0xc6:
      return {true, true, ImmKind::i8};
  }
  if (op >= 0xc8 && op <= 0xcf) return {true, false, ImmKind::none};  // bswap
  // Everything else in the 0f map takes a modrm and no immediate.
  return {true, true, ImmKind::none};
}

struct ModRm {
  uint8_t mod = 0, reg = 0, rm = 0;
  int reg_id = kRegNone;  // reg field with REX.R
  int rm_id = kRegNone;   // register form (mod == 3)
  int base = kRegNone;    // memory form base
  int64_t disp = 0;
  bool is_mem = false;
  bool indexed = false;   // SIB with an index register
  bool rip_rel = false;   // disp is relative to the next instruction
};

// Parses modrm/sib/displacement; returns bytes consumed or 0 on truncation.
size_t parse_modrm(const uint8_t* b, size_t avail, uint8_t rex, ModRm& m) {
  if (avail < 1) return 0;
  uint8_t v = b[0];
  m.mod = v >> 6;
  m.reg = (v >> 3) & 7;
  m.rm = v & 7;
  m.reg_id = m.reg | ((rex & 4) ? 8 : 0);
  size_t n = 1;
  if (m.mod == 3) {
    m.rm_id = m.rm | ((rex & 1) ? 8 : 0);
    return n;
  }
  m.is_mem = true;
  int base = m.rm | ((rex & 1) ? 8 : 0);
  if (m.rm == 4) {  // SIB
    if (avail < 2) return 0;
    uint8_t s = b[1];
    n++;
    uint8_t idx = (s >> 3) & 7;
    if (idx != 4 || (rex & 2)) m.indexed = true;
    uint8_t sib_base = s & 7;
    base = sib_base | ((rex & 1) ? 8 : 0);
    if (sib_base == 5 && m.mod == 0) {
      // disp32 with no base register
      if (avail < n + 4) return 0;
      int32_t d;
      memcpy(&d, b + n, 4);
      m.disp = d;
      m.base = kRegNone;
      return n + 4;
    }
  } else if (m.rm == 5 && m.mod == 0) {
    // rip-relative
    if (avail < n + 4) return 0;
    int32_t d;
    memcpy(&d, b + n, 4);
    m.disp = d;
    m.base = kRegPc;
    m.rip_rel = true;
    return n + 4;
  }
  m.base = base;
  if (m.mod == 1) {
    if (avail < n + 1) return 0;
    m.disp = static_cast<int8_t>(b[n]);
    n += 1;
  } else if (m.mod == 2) {
    if (avail < n + 4) return 0;
    int32_t d;
    memcpy(&d, b + n, 4);
    m.disp = d;
    n += 4;
  }
  return n;
}

int64_t read_signed(const uint8_t* b, size_t width) {
  uint64_t v = 0;
  memcpy(&v, b, width);
  switch (width) {
    case 1: return static_cast<int8_t>(v);
    case 2: return static_cast<int16_t>(v);
    case 4: return static_cast<int32_t>(v);
    default: return static_cast<int64_t>(v);
  }
}

}  // namespace

bool decode_x86(const uint8_t* b, size_t avail, uint64_t vaddr, Insn& out) {
  out = Insn{};
  out.vaddr = vaddr;
  if (avail == 0) return false;

  size_t i = 0;
  bool p66 = false, pf2 = false, pf3 = false, plock = false, pseg = false;
  uint8_t rex = 0;
  while (i < avail && i < 14) {
    uint8_t c = b[i];
    if (c == 0x66) { p66 = true; i++; continue; }
    if (c == 0x67) { i++; continue; }
    if (c == 0xf0) { plock = true; i++; continue; }
    if (c == 0xf2) { pf2 = true; i++; continue; }
    if (c == 0xf3) { pf3 = true; i++; continue; }
    if (c == 0x2e || c == 0x3e || c == 0x26 || c == 0x36 || c == 0x64 || c == 0x65) {
      pseg = true;
      i++;
      continue;
    }
    if ((c & 0xf0) == 0x40) { rex = c; i++; continue; }
    break;
  }
  if (i >= avail) return false;

  // Opcode maps: 1 = one-byte, 2 = 0f, 3 = 0f 38, 4 = 0f 3a.
  int map = 1;
  uint8_t op = b[i++];
  bool vex = false;
  if (op == 0xc5) {  // two-byte VEX
    if (i >= avail) return false;
    i++;  // vvvv/L/pp byte
    if (i >= avail) return false;
    op = b[i++];
    map = 2;
    vex = true;
  } else if (op == 0xc4) {  // three-byte VEX
    if (i + 1 >= avail) return false;
    uint8_t m = b[i] & 0x1f;
    i += 2;
    if (i >= avail) return false;
    op = b[i++];
    map = m == 2 ? 3 : m == 3 ? 4 : 2;
    vex = true;
  } else if (op == 0x0f) {
    if (i >= avail) return false;
    op = b[i++];
    if (op == 0x38) {
      if (i >= avail) return false;
      op = b[i++];
      map = 3;
    } else if (op == 0x3a) {
      if (i >= avail) return false;
      op = b[i++];
      map = 4;
    } else {
      map = 2;
    }
  }

  OpAttr attr;
  switch (map) {
    case 1: attr = one_byte_attr(op); break;
    case 2: attr = two_byte_attr(op); break;
    case 3: attr = {true, true, ImmKind::none}; break;
    case 4: attr = {true, true, ImmKind::i8}; break;
  }
  if (!attr.valid) return false;

  ModRm m;
  if (attr.modrm) {
    size_t n = parse_modrm(b + i, avail - i, rex, m);
    if (n == 0) return false;
    i += n;
  }

  // test r/m, imm is the only immediate carrier in the f6/f7 groups.
  if (map == 1 && (op == 0xf6 || op == 0xf7) && m.reg >= 2) attr.imm = ImmKind::none;

  unsigned opsize = p66 ? 2 : ((rex & 8) ? 8 : 4);
  size_t imm_width = 0;
  switch (attr.imm) {
    case ImmKind::none: break;
    case ImmKind::i8: case ImmKind::rel8: imm_width = 1; break;
    case ImmKind::i16: imm_width = 2; break;
    case ImmKind::iz: imm_width = p66 ? 2 : 4; break;
    case ImmKind::rel32: imm_width = 4; break;
    case ImmKind::iv: imm_width = p66 ? 2 : ((rex & 8) ? 8 : 4); break;
    case ImmKind::i16_8: imm_width = 3; break;
    case ImmKind::moffs: imm_width = 8; break;
  }
  if (avail < i + imm_width) return false;
  int64_t imm = 0;
  if (imm_width > 0 && attr.imm != ImmKind::i16_8) {
    imm = read_signed(b + i, imm_width);
  }
  i += imm_width;
  out.len = static_cast<uint32_t>(i);
  out.imm = imm;

  uint64_t next = vaddr + out.len;
  if (m.rip_rel) m.disp = static_cast<int64_t>(next) + m.disp;

  // 8-bit operands without REX can name the historical high-byte
  // registers; those cannot be represented, so degrade such forms.
  auto high_byte = [&](int id) { return rex == 0 && id >= 4 && id <= 7; };

  auto mem_op = [&](Insn& o) {
    o.base = m.base;
    o.disp = m.disp;
    if (m.indexed || pseg) o.wild_mem = true;
  };
  auto havoc_store = [&](uint8_t size) {
    out.op = Op::store_havoc;
    mem_op(out);
    out.size = size;
  };
  auto set_other = [&](std::initializer_list<int> regs) {
    out.op = Op::other;
    out.clobbers.assign(regs);
  };

  if (vex) {
    // AVX forms are not modeled; a memory operand may be a store.
    if (m.is_mem) {
      havoc_store(32);
    } else {
      set_other({});
    }
    return true;
  }

  if (map == 1) {
    // ALU rows share shape; cmp and the xor zero idiom get semantics.
    if (op <= 0x3f) {
      unsigned alu = op >> 3;       // 0 add ... 5 sub, 6 xor, 7 cmp
      unsigned form = op & 7;
      uint8_t width = (form == 0 || form == 2 || form == 4) ? 1 : opsize;
      if (form == 4 || form == 5) {  // AL/eAX, imm
        if (alu == 7) {
          out.op = Op::cmp_reg_imm;
          out.src = RAX;
        } else {
          set_other({RAX});
        }
        return true;
      }
      bool to_rm = form <= 1;  // r/m <- r direction
      if (alu == 7) {          // cmp never writes
        if (m.is_mem) {
          out.op = Op::cmp_mem_reg;
          mem_op(out);
          out.src = m.reg_id;
          out.size = width;
        } else {
          out.op = Op::cmp_reg_reg;
          out.src = to_rm ? m.rm_id : m.reg_id;
          out.src2 = to_rm ? m.reg_id : m.rm_id;
        }
        return true;
      }
      if (alu == 6 && !m.is_mem && m.reg_id == m.rm_id) {  // xor self
        out.op = Op::mov_reg_imm;
        out.dst = m.reg_id;
        out.imm = 0;
        return true;
      }
      if (to_rm && m.is_mem) {
        havoc_store(width);
        return true;
      }
      set_other({to_rm ? m.rm_id : m.reg_id});
      return true;
    }
    if (op >= 0x50 && op <= 0x57) {
      out.op = Op::push_reg;
      out.src = (op & 7) | ((rex & 1) ? 8 : 0);
      return true;
    }
    if (op >= 0x58 && op <= 0x5f) {
      out.op = Op::pop_reg;
      out.dst = (op & 7) | ((rex & 1) ? 8 : 0);
      return true;
    }
    switch (op) {
      case 0x63:  // movsxd
        if (m.is_mem) {
          out.op = Op::load;
          out.dst = m.reg_id;
          mem_op(out);
          out.size = 4;
        } else {
          out.op = Op::mov_reg_reg;
          out.dst = m.reg_id;
          out.src = m.rm_id;
        }
        return true;
      case 0x68:  // push imm
        out.op = Op::store_imm;
        out.base = RSP;
        out.disp = -8;
        out.size = 8;
        out.wback = true;
        out.wb_disp = -8;
        return true;
      case 0x69: case 0x6b:
        set_other({m.reg_id});
        return true;
      case 0x6a:  // push imm8
        out.op = Op::store_imm;
        out.base = RSP;
        out.disp = -8;
        out.size = 8;
        out.wback = true;
        out.wb_disp = -8;
        return true;
      case 0x6c: case 0x6d: set_other({RDI}); out.wild_mem = true; return true;
      case 0x6e: case 0x6f: set_other({RSI}); return true;
    }
    if (op >= 0x70 && op <= 0x7f) {
      out.op = Op::jcc;
      out.target = next + imm;
      return true;
    }
    switch (op) {
      case 0x80: case 0x81: case 0x83: {
        uint8_t width = op == 0x80 ? 1 : opsize;
        if (m.reg == 7) {  // cmp
          if (m.is_mem) {
            out.op = Op::cmp_mem_imm;
            mem_op(out);
            out.size = width;
          } else {
            out.op = Op::cmp_reg_imm;
            out.src = m.rm_id;
          }
          return true;
        }
        if (m.is_mem) {
          havoc_store(width);
          return true;
        }
        if (m.reg == 0) {  // add
          out.op = Op::add_imm;
          out.dst = out.src = m.rm_id;
          return true;
        }
        if (m.reg == 5) {  // sub
          out.op = Op::sub_imm;
          out.dst = out.src = m.rm_id;
          return true;
        }
        set_other({m.rm_id});
        return true;
      }
      case 0x84: case 0x85: {  // test
        uint8_t width = op == 0x84 ? 1 : opsize;
        if (m.is_mem) {
          out.op = Op::cmp_mem_reg;
          mem_op(out);
          out.src = m.reg_id;
          out.size = width;
        } else if (m.reg_id == m.rm_id) {
          out.op = Op::cmp_reg_imm;
          out.src = m.reg_id;
          out.imm = 0;
        } else {
          out.op = Op::cmp_reg_reg;
          out.src = m.rm_id;
          out.src2 = m.reg_id;
        }
        return true;
      }
      case 0x86: case 0x87:  // xchg
        if (m.is_mem) {
          havoc_store(op == 0x86 ? 1 : opsize);
          out.clobbers = {m.reg_id};
        } else {
          set_other({m.reg_id, m.rm_id});
        }
        return true;
      case 0x88: case 0x89: {  // mov r/m Gv
        uint8_t width = op == 0x88 ? 1 : opsize;
        if (width == 1 && high_byte(m.reg_id)) {
          if (m.is_mem) havoc_store(1); else set_other({m.rm_id & 3});
          return true;
        }
        if (m.is_mem) {
          out.op = Op::store_reg;
          mem_op(out);
          out.src = m.reg_id;
          out.size = width;
        } else {
          out.op = Op::mov_reg_reg;
          out.dst = m.rm_id;
          out.src = m.reg_id;
          out.size = width;
        }
        return true;
      }
      case 0x8a: case 0x8b: {  // mov Gv r/m
        uint8_t width = op == 0x8a ? 1 : opsize;
        if (width == 1 && high_byte(m.reg_id)) {
          set_other({m.reg_id & 3});
          return true;
        }
        if (m.is_mem) {
          out.op = Op::load;
          out.dst = m.reg_id;
          mem_op(out);
          out.size = width;
        } else {
          out.op = Op::mov_reg_reg;
          out.dst = m.reg_id;
          out.src = m.rm_id;
          out.size = width;
        }
        return true;
      }
      case 0x8c: case 0x8e:
        set_other(m.is_mem ? std::initializer_list<int>{} : std::initializer_list<int>{m.rm_id});
        return true;
      case 0x8d:  // lea
        if (!m.is_mem || m.indexed) {
          set_other({m.reg_id});
          return true;
        }
        out.op = Op::lea;
        out.dst = m.reg_id;
        out.base = m.base;
        out.disp = m.disp;
        return true;
      case 0x8f:  // pop r/m
        if (m.is_mem) {
          set_other({RSP});
        } else {
          out.op = Op::pop_reg;
          out.dst = m.rm_id;
        }
        return true;
      case 0x90:
        out.op = Op::nop;
        return true;
    }
    if (op >= 0x91 && op <= 0x97) {
      set_other({RAX, (op & 7) | ((rex & 1) ? 8 : 0)});
      return true;
    }
    switch (op) {
      case 0x98: set_other({RAX}); return true;
      case 0x99: set_other({RDX}); return true;
      case 0x9b: case 0x9e: out.op = Op::nop; return true;
      case 0x9c:  // pushf
        havoc_store(8);
        out.base = RSP;
        out.disp = -8;
        out.wild_mem = false;
        out.wback = true;
        out.wb_disp = -8;
        return true;
      case 0x9d:  // popf
        out.op = Op::add_imm;
        out.dst = out.src = RSP;
        out.imm = 8;
        return true;
      case 0x9f: set_other({RAX}); return true;
      case 0xa0: case 0xa1:
        out.op = Op::load;
        out.dst = RAX;
        out.base = kRegPc;
        out.disp = imm;
        out.size = op == 0xa0 ? 1 : opsize;
        return true;
      case 0xa2: case 0xa3:
        out.op = Op::store_reg;
        out.src = RAX;
        out.base = kRegPc;
        out.disp = imm;
        out.size = op == 0xa2 ? 1 : opsize;
        return true;
      case 0xa4: case 0xa5:  // movs
        set_other(pf3 ? std::initializer_list<int>{RCX, RSI, RDI}
                      : std::initializer_list<int>{RSI, RDI});
        out.wild_mem = true;
        return true;
      case 0xa6: case 0xa7:
        set_other(pf3 || pf2 ? std::initializer_list<int>{RCX, RSI, RDI}
                             : std::initializer_list<int>{RSI, RDI});
        return true;
      case 0xa8: case 0xa9:
        out.op = Op::cmp_reg_imm;
        out.src = RAX;
        return true;
      case 0xaa: case 0xab:  // stos
        set_other(pf3 ? std::initializer_list<int>{RCX, RDI}
                      : std::initializer_list<int>{RDI});
        out.wild_mem = true;
        return true;
      case 0xac: case 0xad:
        set_other({RAX, RSI});
        return true;
      case 0xae: case 0xaf:
        set_other(pf3 || pf2 ? std::initializer_list<int>{RCX, RDI}
                             : std::initializer_list<int>{RDI});
        return true;
    }
    if (op >= 0xb0 && op <= 0xb7) {
      int id = (op & 7) | ((rex & 1) ? 8 : 0);
      if (high_byte(id)) {
        set_other({id & 3});
      } else {
        out.op = Op::mov_reg_imm;
        out.dst = id;
        out.size = 1;
      }
      return true;
    }
    if (op >= 0xb8 && op <= 0xbf) {
      out.op = Op::mov_reg_imm;
      out.dst = (op & 7) | ((rex & 1) ? 8 : 0);
      if (!(rex & 8) && !p66) out.imm = static_cast<uint32_t>(out.imm);
      return true;
    }
    switch (op) {
      case 0xc0: case 0xc1: case 0xd0: case 0xd1: case 0xd2: case 0xd3:
        if (m.is_mem) havoc_store(opsize); else set_other({m.rm_id});
        return true;
      case 0xc2: case 0xc3: case 0xca: case 0xcb: case 0xcf:
        out.op = Op::ret;
        return true;
      case 0xc6:
        if (m.reg != 0) { set_other({}); return true; }
        if (m.is_mem) {
          out.op = Op::store_imm;
          mem_op(out);
          out.size = 1;
        } else if (high_byte(m.rm_id)) {
          set_other({m.rm_id & 3});
        } else {
          out.op = Op::mov_reg_imm;
          out.dst = m.rm_id;
          out.size = 1;
        }
        return true;
      case 0xc7:
        if (m.reg != 0) { set_other({}); return true; }
        if (m.is_mem) {
          out.op = Op::store_imm;
          mem_op(out);
          out.size = opsize;
        } else {
          out.op = Op::mov_reg_imm;
          out.dst = m.rm_id;
          if (!(rex & 8) && !p66) out.imm = static_cast<uint32_t>(out.imm);
        }
        return true;
      case 0xc8: case 0xc9:
        set_other({RSP, RBP});
        return true;
      case 0xcc: case 0xcd:
        set_other({});
        return true;
      case 0xd7:
        set_other({RAX});
        return true;
    }
    if (op >= 0xd8 && op <= 0xdf) {
      if (m.is_mem) havoc_store(8); else set_other({});
      return true;
    }
    if (op >= 0xe0 && op <= 0xe3) {
      out.op = Op::jcc;
      out.target = next + imm;
      return true;
    }
    switch (op) {
      case 0xe4: case 0xe5: case 0xec: case 0xed: set_other({RAX}); return true;
      case 0xe6: case 0xe7: case 0xee: case 0xef: set_other({}); return true;
      case 0xe8:
        out.op = Op::call_direct;
        out.target = next + imm;
        return true;
      case 0xe9: case 0xeb:
        out.op = Op::jmp_direct;
        out.target = next + imm;
        return true;
      case 0xf1: case 0xf4: case 0xf5:
        set_other({});
        return true;
      case 0xf6: case 0xf7: {
        uint8_t width = op == 0xf6 ? 1 : opsize;
        if (m.reg <= 1) {  // test imm
          if (m.is_mem) {
            out.op = Op::cmp_mem_imm;
            mem_op(out);
            out.size = width;
          } else {
            out.op = Op::cmp_reg_imm;
            out.src = m.rm_id;
          }
          return true;
        }
        if (m.reg <= 3) {  // not/neg
          if (m.is_mem) havoc_store(width); else set_other({m.rm_id});
          return true;
        }
        set_other({RAX, RDX});  // mul/div family
        return true;
      }
      case 0xf8: case 0xf9: case 0xfa: case 0xfb: case 0xfc: case 0xfd:
        set_other({});
        return true;
      case 0xfe:
        if (m.is_mem) havoc_store(1); else set_other({m.rm_id});
        return true;
      case 0xff:
        switch (m.reg) {
          case 0: case 1:  // inc/dec
            if (m.is_mem) havoc_store(opsize); else set_other({m.rm_id});
            return true;
          case 2: case 3:  // call
            out.op = Op::call_indirect;
            if (m.is_mem) {
              mem_op(out);
              if (m.base == kRegPc) out.target = static_cast<uint64_t>(m.disp);
            } else {
              out.src = m.rm_id;
            }
            return true;
          case 4: case 5:  // jmp
            out.op = Op::jmp_indirect;
            if (m.is_mem) {
              mem_op(out);
              if (m.base == kRegPc) out.target = static_cast<uint64_t>(m.disp);
            } else {
              out.src = m.rm_id;
            }
            return true;
          case 6:  // push r/m
            if (m.is_mem) {
              set_other({RSP});
            } else {
              out.op = Op::push_reg;
              out.src = m.rm_id;
            }
            return true;
          default:
            return false;
        }
    }
    return false;
  }

  if (map == 2) {
    if (op >= 0x80 && op <= 0x8f) {
      out.op = Op::jcc;
      out.target = next + imm;
      return true;
    }
    if (op >= 0x40 && op <= 0x4f) {  // cmov
      set_other({m.reg_id});
      return true;
    }
    if (op >= 0x90 && op <= 0x9f) {  // setcc
      if (m.is_mem) havoc_store(1); else set_other({m.rm_id});
      return true;
    }
    if (op >= 0xc8 && op <= 0xcf) {  // bswap
      set_other({(op & 7) | ((rex & 1) ? 8 : 0)});
      return true;
    }
    switch (op) {
      case 0x05:  // syscall
        set_other({RAX, RCX, 11});
        return true;
      case 0x0b:  // ud2: execution stops here
        out.op = Op::ret;
        return true;
      case 0x1e:
        out.op = Op::nop;  // endbr and related hints
        return true;
      case 0x18: case 0x19: case 0x1a: case 0x1b: case 0x1c: case 0x1d: case 0x1f:
        out.op = Op::nop;
        return true;
      case 0xa2:  // cpuid
        set_other({RAX, RCX, RDX, 3});
        return true;
      case 0xb6: case 0xb7: {  // movzx
        uint8_t width = op == 0xb6 ? 1 : 2;
        if (m.is_mem) {
          out.op = Op::load;
          out.dst = m.reg_id;
          mem_op(out);
          out.size = width;
        } else if (width == 1 && high_byte(m.rm_id)) {
          set_other({m.reg_id});
        } else {
          out.op = Op::mov_reg_reg;
          out.dst = m.reg_id;
          out.src = m.rm_id;
          out.size = width;
        }
        return true;
      }
      case 0xbe: case 0xbf: {  // movsx
        uint8_t width = op == 0xbe ? 1 : 2;
        if (m.is_mem) {
          out.op = Op::load;
          out.dst = m.reg_id;
          mem_op(out);
          out.size = width;
        } else {
          set_other({m.reg_id});
        }
        return true;
      }
      case 0xaf: case 0xbc: case 0xbd: case 0xb8:  // imul/bsf/bsr/popcnt
        set_other({m.reg_id});
        return true;
      case 0x10: case 0x12: case 0x16: case 0x28: case 0x6f:
        set_other({});  // vector loads
        return true;
      case 0x11: case 0x13: case 0x17: case 0x29: case 0x2b: case 0x7f:
      case 0xd6: case 0xe7:
        if (m.is_mem) havoc_store(16); else set_other({});
        return true;
      case 0x7e:
        if (pf3) { set_other({}); return true; }  // movq xmm load
        if (m.is_mem) havoc_store(opsize == 2 ? 4 : opsize); else set_other({m.rm_id});
        return true;
      case 0x2c: case 0x2d:  // cvt to gpr
        set_other({m.reg_id});
        return true;
      case 0x2e: case 0x2f: case 0xc2:  // comparisons
        set_other({});
        return true;
      case 0xa3:  // bt
        set_other({});
        return true;
      case 0xab: case 0xb3: case 0xbb:  // bts/btr/btc
        if (m.is_mem) havoc_store(opsize); else set_other({m.rm_id});
        return true;
      case 0xba:
        if (m.reg == 4) { set_other({}); return true; }
        if (m.is_mem) havoc_store(opsize); else set_other({m.rm_id});
        return true;
      case 0xa4: case 0xa5: case 0xac: case 0xad:  // shld/shrd
        if (m.is_mem) havoc_store(opsize); else set_other({m.rm_id});
        return true;
      case 0xae:
        if (m.is_mem) havoc_store(64); else out.op = Op::nop;
        return true;
      case 0xb0: case 0xb1:  // cmpxchg
        if (m.is_mem) {
          havoc_store(op == 0xb0 ? 1 : opsize);
          out.clobbers = {RAX};
        } else {
          set_other({RAX, m.rm_id});
        }
        return true;
      case 0xc0: case 0xc1:  // xadd
        if (m.is_mem) {
          havoc_store(op == 0xc0 ? 1 : opsize);
          out.clobbers = {m.reg_id};
        } else {
          set_other({m.reg_id, m.rm_id});
        }
        return true;
      case 0xc3:  // movnti
        if (m.is_mem) havoc_store(opsize); else set_other({});
        return true;
      case 0xc7:
        if (m.is_mem) {
          havoc_store(16);
          out.clobbers = {RAX, RDX};
        } else {
          set_other({m.rm_id});
        }
        return true;
      case 0xc5: case 0xd7:  // pextrw/pmovmskb
        set_other({m.reg_id});
        return true;
    }
    // Remaining 0f map entries are vector/MMX operations without GPR
    // effects; a memory operand on the store-direction ones was handled
    // above, the rest only read.
    if (attr.modrm && m.is_mem && plock) {
      havoc_store(opsize);
      return true;
    }
    set_other({});
    return true;
  }

  // 0f 38 / 0f 3a maps: vector permutes and the like.
  if (m.is_mem && plock) {
    havoc_store(opsize);
    return true;
  }
  set_other(attr.modrm && m.mod == 3 ? std::initializer_list<int>{m.reg_id}
                                     : std::initializer_list<int>{});
  return true;
}

const AbiInfo& abi_info(Arch arch) {
  static const AbiInfo x86{{RDI, RSI, RDX, RCX, 8, 9}, RAX, RSP, {3, RBP, RSP, 12, 13, 14, 15}};
  static const AbiInfo a64{{0, 1, 2, 3, 4, 5, 6, 7},
                           0,
                           31,
                           {19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 31}};
  return arch == Arch::x86_64 ? x86 : a64;
}

}  // namespace udsaudit

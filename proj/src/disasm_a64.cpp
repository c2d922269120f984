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

namespace udsaudit {

namespace {

constexpr int XZR_SP = 31;

int64_t sext(uint64_t v, unsigned bits) {
  uint64_t sign = 1ull << (bits - 1);
  return static_cast<int64_t>((v ^ sign) - sign);
}

}  // namespace

bool decode_a64(const uint8_t* b, size_t avail, uint64_t vaddr, Insn& out) {
  if (avail < 4) return false;
  uint32_t w;
  memcpy(&w, b, 4);
  out = Insn{};
  out.vaddr = vaddr;
  out.len = 4;
  if (w == 0) return false;  // udf #0, the usual padding

  int rd = w & 31;
  int rn = (w >> 5) & 31;
  int rt2 = (w >> 10) & 31;
  int rm = (w >> 16) & 31;

  auto other = [&](std::initializer_list<int> regs) {
    out.op = Op::other;
    out.clobbers.assign(regs);
    return true;
  };
  auto clobber_rd = [&] {
    return rd == XZR_SP ? other({}) : other({rd});
  };

  // Hints (nop, bti, pac, yield...).
  if ((w & 0xFFFFF01F) == 0xD503201F) {
    out.op = Op::nop;
    return true;
  }
  // Barriers and other system instructions without register results.
  if ((w & 0xFFF80000) == 0xD5000000 || (w & 0xFFF80000) == 0xD5080000) {
    // MSR immediate / system space; MRS reads into Rt.
    if ((w & 0xFFF00000) == 0xD5300000) return other({rd});
    return other({});
  }

  // Branches.
  if ((w & 0xFC000000) == 0x14000000) {
    out.op = Op::jmp_direct;
    out.target = vaddr + (sext(w & 0x3FFFFFF, 26) << 2);
    return true;
  }
  if ((w & 0xFC000000) == 0x94000000) {
    out.op = Op::call_direct;
    out.target = vaddr + (sext(w & 0x3FFFFFF, 26) << 2);
    return true;
  }
  if ((w & 0xFF000010) == 0x54000000) {
    out.op = Op::jcc;
    out.target = vaddr + (sext((w >> 5) & 0x7FFFF, 19) << 2);
    return true;
  }
  if ((w & 0x7E000000) == 0x34000000) {  // cbz/cbnz: compares Rt with zero
    out.op = Op::jcc;
    out.src = rd;
    out.imm = 0;
    out.target = vaddr + (sext((w >> 5) & 0x7FFFF, 19) << 2);
    return true;
  }
  if ((w & 0x7E000000) == 0x36000000) {  // tbz/tbnz
    out.op = Op::jcc_bit;
    out.src = rd;
    out.target = vaddr + (sext((w >> 5) & 0x3FFF, 14) << 2);
    return true;
  }
  if ((w & 0xFFFFFC1F) == 0xD65F0000) {
    out.op = Op::ret;
    return true;
  }
  if ((w & 0xFFFFFC1F) == 0xD61F0000) {
    out.op = Op::jmp_indirect;
    out.src = rn;
    return true;
  }
  if ((w & 0xFFFFFC1F) == 0xD63F0000) {
    out.op = Op::call_indirect;
    out.src = rn;
    return true;
  }
  if ((w & 0xFFE0001F) == 0xD4000001 || (w & 0xFFE0001F) == 0xD4400000) {
    return other({});  // svc / hlt
  }
  if ((w & 0xFFE0001F) == 0xD4200000) {  // brk: execution stops
    out.op = Op::ret;
    return true;
  }

  bool sf = (w >> 31) & 1;
  uint64_t wmask = sf ? ~0ull : 0xFFFFFFFFull;

  // Wide moves.
  if ((w & 0x1F800000) == 0x12800000) {
    unsigned hw = (w >> 21) & 3;
    uint64_t imm16 = (w >> 5) & 0xFFFF;
    bool movk = ((w >> 29) & 3) == 3;
    bool movn = ((w >> 29) & 3) == 0;
    if (!movk && !movn && ((w >> 29) & 3) != 2) return false;
    if (rd == XZR_SP) {
      out.op = Op::nop;
      return true;
    }
    if (movk) {
      out.op = Op::movk;
      out.dst = rd;
      out.imm = static_cast<int64_t>(imm16);
      out.disp = hw * 16;
      return true;
    }
    uint64_t v = imm16 << (hw * 16);
    if (movn) v = ~v;
    out.op = Op::mov_reg_imm;
    out.dst = rd;
    out.imm = static_cast<int64_t>(v & wmask);
    return true;
  }

  // PC-relative address computation.
  if ((w & 0x9F000000) == 0x90000000) {  // adrp
    int64_t imm = sext(((w >> 3) & 0x1FFFFC) | ((w >> 29) & 3), 21);
    out.op = Op::lea;
    out.dst = rd;
    out.base = kRegPc;
    out.disp = static_cast<int64_t>(vaddr & ~0xFFFull) + (imm << 12);
    return true;
  }
  if ((w & 0x9F000000) == 0x10000000) {  // adr
    int64_t imm = sext(((w >> 3) & 0x1FFFFC) | ((w >> 29) & 3), 21);
    out.op = Op::lea;
    out.dst = rd;
    out.base = kRegPc;
    out.disp = static_cast<int64_t>(vaddr) + imm;
    return true;
  }

  // Add/subtract immediate. Register 31 here is SP on both sides, which
  // is how `mov xN, sp` spells itself.
  if ((w & 0x1F800000) == 0x11000000) {
    bool is_sub = (w >> 30) & 1;
    bool set_flags = (w >> 29) & 1;
    int64_t imm = static_cast<int64_t>((w >> 10) & 0xFFF) << (((w >> 22) & 1) ? 12 : 0);
    if (set_flags && rd == XZR_SP) {
      out.op = Op::cmp_reg_imm;
      out.src = rn;
      out.imm = is_sub ? imm : -imm;
      return true;
    }
    out.op = is_sub ? Op::sub_imm : Op::add_imm;
    out.dst = rd;
    out.src = rn;
    out.imm = imm;
    return true;
  }

  // Logical immediate; the bitmask immediate is not decoded, so only the
  // flag-setting tst form keeps comparison semantics (without a value).
  if ((w & 0x1F800000) == 0x12000000) {
    unsigned opc = (w >> 29) & 3;
    if (opc == 3 && rd == XZR_SP) {
      out.op = Op::cmp_reg_reg;
      out.src = rn;
      out.src2 = kRegNone;
      return true;
    }
    return clobber_rd();
  }

  // Bitfield and extract.
  if ((w & 0x1F800000) == 0x13000000 || (w & 0x1F800000) == 0x13800000) {
    return clobber_rd();
  }

  // Load/store space.
  if ((w & 0x0A000000) == 0x08000000) {
    bool simd = (w >> 26) & 1;

    // Literal (pc-relative) load.
    if ((w & 0x3B000000) == 0x18000000) {
      if (simd) return other({});
      unsigned opc = w >> 30;
      if (opc == 3) {  // prfm
        out.op = Op::nop;
        return true;
      }
      out.op = Op::load;
      out.dst = rd;
      out.base = kRegPc;
      out.disp = static_cast<int64_t>(vaddr) + (sext((w >> 5) & 0x7FFFF, 19) << 2);
      out.size = opc == 1 ? 8 : 4;
      return true;
    }

    // Load/store pair.
    if ((w & 0x3A000000) == 0x28000000) {
      unsigned mode = (w >> 23) & 7;  // 0 stnp, 1 post, 2 offset, 3 pre
      bool load = (w >> 22) & 1;
      unsigned opc = w >> 30;
      if (simd) {
        unsigned size = opc == 0 ? 4 : opc == 1 ? 8 : 16;
        int64_t off = sext((w >> 15) & 0x7F, 7) * size;
        if (load) return other({});
        out.op = Op::store_havoc;
        out.base = rn;
        out.disp = (mode == 1) ? 0 : off;
        out.size = static_cast<uint8_t>(size * 2);
        if (mode == 1 || mode == 3) {
          out.wback = true;
          out.wb_disp = off;
        }
        return true;
      }
      unsigned size = opc == 2 ? 8 : 4;
      int64_t off = sext((w >> 15) & 0x7F, 7) * size;
      out.op = load ? Op::load_pair : Op::store_pair;
      out.base = rn;
      out.disp = (mode == 1) ? 0 : off;
      out.size = static_cast<uint8_t>(size);
      if (load) {
        out.dst = rd;
        out.src2 = rt2;
      } else {
        out.src = rd;
        out.src2 = rt2;
      }
      if (mode == 1 || mode == 3) {
        out.wback = true;
        out.wb_disp = off;
      }
      return true;
    }

    // Exclusives and atomics: treat as an opaque memory write.
    if ((w & 0x3F000000) == 0x08000000) {
      out.op = Op::store_havoc;
      out.base = rn;
      out.disp = 0;
      out.size = 16;
      out.clobbers = {rd == XZR_SP ? rm : rd};
      if (out.clobbers[0] == XZR_SP) out.clobbers.clear();
      return true;
    }

    // Register forms.
    if ((w & 0x38000000) == 0x38000000) {
      unsigned size = w >> 30;
      unsigned opc = (w >> 22) & 3;
      unsigned group = (w >> 24) & 3;
      bool wide_simd = simd && (opc & 2);
      unsigned width = simd ? (wide_simd ? 16 : (1u << size)) : (1u << size);
      bool is_store = simd ? ((opc & 1) == 0) : (opc == 0);
      bool is_prfm = !simd && size == 3 && opc == 2;

      if (group == 1) {  // unsigned immediate offset
        unsigned shift = size + (wide_simd ? 4 : 0);
        int64_t disp = static_cast<int64_t>((w >> 10) & 0xFFF) << shift;
        if (is_prfm) {
          out.op = Op::nop;
          return true;
        }
        if (simd) {
          if (!is_store) return other({});
          out.op = Op::store_havoc;
          out.base = rn;
          out.disp = disp;
          out.size = static_cast<uint8_t>(width);
          return true;
        }
        if (is_store) {
          if (rd == XZR_SP) {
            out.op = Op::store_imm;
            out.imm = 0;
          } else {
            out.op = Op::store_reg;
            out.src = rd;
          }
        } else {
          if (rd == XZR_SP) return other({});
          out.op = Op::load;
          out.dst = rd;
        }
        out.base = rn;
        out.disp = disp;
        out.size = static_cast<uint8_t>(width);
        return true;
      }

      // group == 0: unscaled / post / pre / unprivileged / reg-offset.
      bool reg21 = (w >> 21) & 1;
      unsigned idx = (w >> 10) & 3;
      if (reg21) {
        if (idx == 2) {  // register offset: address not statically known
          if (simd || !is_store) {
            if (!simd && !is_store && !is_prfm && rd != XZR_SP) return other({rd});
            return other({});
          }
          out.op = Op::store_havoc;
          out.base = rn;
          out.disp = 0;
          out.size = static_cast<uint8_t>(width);
          out.wild_mem = true;
          return true;
        }
        // Atomic memory operations land here too.
        out.op = Op::store_havoc;
        out.base = rn;
        out.disp = 0;
        out.size = static_cast<uint8_t>(width);
        if (rd != XZR_SP && !is_store) out.clobbers = {rd};
        return true;
      }
      int64_t imm9 = sext((w >> 12) & 0x1FF, 9);
      bool wback = idx == 1 || idx == 3;
      int64_t disp = (idx == 1) ? 0 : imm9;
      if (is_prfm) {
        out.op = Op::nop;
        return true;
      }
      if (simd) {
        if (!is_store) return other({});
        out.op = Op::store_havoc;
        out.base = rn;
        out.disp = disp;
        out.size = static_cast<uint8_t>(width);
        if (wback) {
          out.wback = true;
          out.wb_disp = imm9;
        }
        return true;
      }
      if (is_store) {
        if (rd == XZR_SP) {
          out.op = Op::store_imm;
          out.imm = 0;
        } else {
          out.op = Op::store_reg;
          out.src = rd;
        }
      } else {
        if (rd == XZR_SP) return other({});
        out.op = Op::load;
        out.dst = rd;
      }
      out.base = rn;
      out.disp = disp;
      out.size = static_cast<uint8_t>(width);
      if (wback) {
        out.wback = true;
        out.wb_disp = imm9;
      }
      return true;
    }

    return other({});
  }

  // Add/subtract register (shifted or extended).
  if ((w & 0x1F000000) == 0x0B000000) {
    bool is_sub = (w >> 30) & 1;
    bool set_flags = (w >> 29) & 1;
    bool extended = (w >> 21) & 1;
    unsigned amount = (w >> 10) & 0x3F;
    if (set_flags && rd == XZR_SP && is_sub && (extended || amount == 0)) {
      out.op = Op::cmp_reg_reg;
      out.src = rn;
      out.src2 = rm;
      return true;
    }
    return clobber_rd();
  }

  // Logical register; the ORR alias is how plain register moves spell
  // themselves.
  if ((w & 0x1F000000) == 0x0A000000) {
    unsigned opc = (w >> 29) & 3;
    bool negated = (w >> 21) & 1;
    unsigned amount = (w >> 10) & 0x3F;
    unsigned shift = (w >> 22) & 3;
    if (opc == 1 && !negated && rn == XZR_SP && amount == 0 && shift == 0) {
      if (rd == XZR_SP) {
        out.op = Op::nop;
        return true;
      }
      if (rm == XZR_SP) {
        out.op = Op::mov_reg_imm;
        out.dst = rd;
        out.imm = 0;
      } else {
        out.op = Op::mov_reg_reg;
        out.dst = rd;
        out.src = rm;
      }
      return true;
    }
    if (opc == 3 && rd == XZR_SP) {  // tst
      out.op = Op::cmp_reg_reg;
      out.src = rn;
      out.src2 = kRegNone;
      return true;
    }
    return clobber_rd();
  }

  // Conditional compare.
  if ((w & 0x1FE00800) == 0x1A400000) {
    out.op = Op::cmp_reg_reg;
    out.src = rn;
    out.src2 = rm;
    return true;
  }
  if ((w & 0x1FE00800) == 0x1A400800) {
    out.op = Op::cmp_reg_imm;
    out.src = rn;
    out.imm = rm;  // imm5 shares the Rm field
    return true;
  }

  // Conditional select, two-source and one-source data processing.
  if ((w & 0x1F000000) == 0x1A000000 || (w & 0x1F000000) == 0x1B000000) {
    return clobber_rd();
  }

  // Scalar FP and SIMD data processing; only the conversions write a
  // general register.
  unsigned op0 = (w >> 25) & 0xF;
  if (op0 == 0x7 || op0 == 0xF) {
    if ((w & 0x7F20FC00) == 0x1E200000 || (w & 0x7F3FFC00) == 0x1E260000 ||
        (w & 0x7F3FFC00) == 0x1E270000) {
      return clobber_rd();
    }
    if ((w & 0x5F200000) == 0x1E200000 && ((w >> 10) & 0x3F) == 0) {
      return clobber_rd();  // fmov / fcvt to integer registers
    }
    return other({});
  }

  return clobber_rd();
}

}  // namespace udsaudit

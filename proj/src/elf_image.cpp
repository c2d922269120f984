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
#include "udsaudit/elf_image.h"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "udsaudit/common.h"

namespace udsaudit {

namespace {

constexpr uint16_t EM_X86_64 = 62;
constexpr uint16_t EM_AARCH64 = 183;
constexpr uint32_t SHT_PROGBITS = 1;
constexpr uint32_t SHT_SYMTAB = 2;
constexpr uint32_t SHT_NOBITS = 8;
constexpr uint32_t SHT_RELA = 4;
constexpr uint32_t SHT_DYNSYM = 11;
constexpr uint64_t SHF_WRITE = 0x1;
constexpr uint64_t SHF_ALLOC = 0x2;
constexpr uint64_t SHF_EXECINSTR = 0x4;

constexpr uint32_t R_X86_64_GLOB_DAT = 6;
constexpr uint32_t R_X86_64_JUMP_SLOT = 7;
constexpr uint32_t R_AARCH64_GLOB_DAT = 1025;
constexpr uint32_t R_AARCH64_JUMP_SLOT = 1026;

struct Reader {
  const uint8_t* data;
  size_t size;

  void require(uint64_t off, uint64_t n) const {
    if (off > size || n > size - off) {
      throw MalformedElf("structure extends past end of file");
    }
  }
  uint16_t u16(uint64_t off) const {
    require(off, 2);
    uint16_t v;
    memcpy(&v, data + off, 2);
    return v;
  }
  uint32_t u32(uint64_t off) const {
    require(off, 4);
    uint32_t v;
    memcpy(&v, data + off, 4);
    return v;
  }
  uint64_t u64(uint64_t off) const {
    require(off, 8);
    uint64_t v;
    memcpy(&v, data + off, 8);
    return v;
  }
  std::string cstr(uint64_t off, uint64_t limit) const {
    std::string s;
    while (off < limit && off < size && data[off] != 0) {
      s.push_back(static_cast<char>(data[off]));
      ++off;
    }
    return s;
  }
};

struct RawSection {
  std::string name;
  uint32_t type = 0;
  uint64_t flags = 0;
  uint64_t vaddr = 0;
  uint64_t offset = 0;
  uint64_t size = 0;
  uint32_t link = 0;
  uint64_t entsize = 0;
};

struct RawSymbol {
  std::string name;
  uint64_t value = 0;
  uint64_t size = 0;
  uint8_t info = 0;
  uint16_t shndx = 0;
};

std::vector<RawSymbol> parse_symbols(const Reader& r, const RawSection& symtab,
                                     const std::vector<RawSection>& sections) {
  std::vector<RawSymbol> out;
  if (symtab.entsize != 24 || symtab.link >= sections.size()) return out;
  const RawSection& strtab = sections[symtab.link];
  uint64_t count = symtab.size / 24;
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t off = symtab.offset + i * 24;
    r.require(off, 24);
    RawSymbol sym;
    uint32_t name_off = r.u32(off);
    sym.info = r.data[off + 4];
    sym.shndx = r.u16(off + 6);
    sym.value = r.u64(off + 8);
    sym.size = r.u64(off + 16);
    if (name_off != 0) {
      sym.name = r.cstr(strtab.offset + name_off, strtab.offset + strtab.size);
    }
    out.push_back(std::move(sym));
  }
  return out;
}

// Walks an aarch64 PLT section recognizing the linker's standard stub
// shape (adrp x16 / ldr x17, [x16, #off] / ... / br x17), tolerating a
// leading BTI hint.
void scan_plt_a64(const ElfSection& sec, ElfImage& img) {
  for (uint64_t off = 0; off + 16 <= sec.bytes.size(); off += 16) {
    uint64_t entry = sec.vaddr + off;
    uint64_t page = 0;
    bool have_page = false;
    uint64_t slot = 0;
    bool have_slot = false;
    for (unsigned i = 0; i < 8 && off + i * 4 + 4 <= sec.bytes.size(); ++i) {
      Insn insn;
      if (!decode_a64(sec.bytes.data() + off + i * 4, 4, entry + i * 4, insn)) break;
      if (insn.op == Op::lea && insn.base == kRegPc && insn.dst == 16) {
        page = static_cast<uint64_t>(insn.disp);
        have_page = true;
      } else if (insn.op == Op::load && insn.base == 16 && insn.dst == 17 &&
                 have_page) {
        slot = page + static_cast<uint64_t>(insn.disp);
        have_slot = true;
      } else if (insn.op == Op::jmp_indirect && insn.src == 17) {
        break;
      }
    }
    if (have_slot) {
      auto it = img.got_imports.find(slot);
      if (it != img.got_imports.end()) img.plt_stubs[entry] = it->second;
    }
  }
}

// x86_64 PLT stubs all funnel through an indirect jump via a GOT slot.
// Entry layouts differ across linkers (plain, IBT, bnd), so scan byte
// by byte for the jump and attribute it to the enclosing 16-byte entry.
void scan_plt_x86(const ElfSection& sec, ElfImage& img) {
  const auto& b = sec.bytes;
  for (uint64_t off = 0; off + 6 <= b.size(); ++off) {
    if (b[off] != 0xff || b[off + 1] != 0x25) continue;
    int32_t disp;
    memcpy(&disp, b.data() + off + 2, 4);
    uint64_t slot = sec.vaddr + off + 6 + static_cast<int64_t>(disp);
    auto it = img.got_imports.find(slot);
    if (it == img.got_imports.end()) continue;
    uint64_t entry = (sec.vaddr + off) & ~15ull;
    if (entry < sec.vaddr) entry = sec.vaddr;
    img.plt_stubs[entry] = it->second;
    img.plt_stubs[sec.vaddr + off] = it->second;
    if (off > 0 && b[off - 1] == 0xf2) img.plt_stubs[sec.vaddr + off - 1] = it->second;
  }
}

}  // namespace

const ElfSection* ElfImage::section_at(uint64_t vaddr) const {
  for (const auto& s : sections) {
    if (vaddr >= s.vaddr && vaddr - s.vaddr < s.size) return &s;
  }
  return nullptr;
}

bool ElfImage::read_bytes(uint64_t vaddr, size_t n, uint8_t* out) const {
  const ElfSection* s = section_at(vaddr);
  if (s == nullptr || vaddr - s->vaddr + n > s->size) return false;
  uint64_t off = vaddr - s->vaddr;
  for (size_t i = 0; i < n; ++i) {
    out[i] = off + i < s->bytes.size() ? s->bytes[off + i] : 0;
  }
  return true;
}

bool ElfImage::string_at(uint64_t vaddr, std::string& out, size_t max) const {
  const ElfSection* s = section_at(vaddr);
  if (s == nullptr) return false;
  out.clear();
  uint64_t off = vaddr - s->vaddr;
  while (off < s->size && out.size() < max) {
    uint8_t c = off < s->bytes.size() ? s->bytes[off] : 0;
    if (c == 0) return true;
    out.push_back(static_cast<char>(c));
    ++off;
  }
  return false;
}

bool ElfImage::is_writable(uint64_t vaddr) const {
  const ElfSection* s = section_at(vaddr);
  return s != nullptr && s->writable;
}

bool ElfImage::in_image(uint64_t vaddr) const {
  return section_at(vaddr) != nullptr;
}

ElfImage load_elf(const std::vector<uint8_t>& bytes) {
  Reader r{bytes.data(), bytes.size()};
  if (bytes.size() < 64 || memcmp(bytes.data(), "\x7f" "ELF", 4) != 0) {
    throw MalformedElf("not an ELF file");
  }
  if (bytes[4] != 2) throw UnsupportedArch("only 64-bit ELF is supported");
  if (bytes[5] != 1) throw UnsupportedArch("only little-endian ELF is supported");

  uint16_t type = r.u16(16);
  if (type != 2 && type != 3) {
    throw MalformedElf("not an executable or shared object");
  }
  uint16_t machine = r.u16(18);
  ElfImage img;
  if (machine == EM_X86_64) {
    img.arch = Arch::x86_64;
  } else if (machine == EM_AARCH64) {
    img.arch = Arch::aarch64;
  } else {
    throw UnsupportedArch("unsupported machine type " + std::to_string(machine));
  }
  img.entry = r.u64(24);

  uint64_t shoff = r.u64(40);
  uint16_t shentsize = r.u16(58);
  uint16_t shnum = r.u16(60);
  uint16_t shstrndx = r.u16(62);
  if (shoff == 0 || shnum == 0) throw MalformedElf("missing section headers");
  if (shentsize != 64) throw MalformedElf("unexpected section header size");
  if (shstrndx >= shnum) throw MalformedElf("bad section string table index");

  std::vector<RawSection> raw(shnum);
  for (uint16_t i = 0; i < shnum; ++i) {
    uint64_t off = shoff + static_cast<uint64_t>(i) * 64;
    r.require(off, 64);
    raw[i].type = r.u32(off + 4);
    raw[i].flags = r.u64(off + 8);
    raw[i].vaddr = r.u64(off + 16);
    raw[i].offset = r.u64(off + 24);
    raw[i].size = r.u64(off + 32);
    raw[i].link = r.u32(off + 40);
    raw[i].entsize = r.u64(off + 56);
  }
  const RawSection& shstr = raw[shstrndx];
  for (uint16_t i = 0; i < shnum; ++i) {
    uint32_t name_off = r.u32(shoff + static_cast<uint64_t>(i) * 64);
    raw[i].name = r.cstr(shstr.offset + name_off, shstr.offset + shstr.size);
  }

  for (const auto& rs : raw) {
    if ((rs.flags & SHF_ALLOC) == 0) continue;
    if (rs.type != SHT_PROGBITS && rs.type != SHT_NOBITS) continue;
    ElfSection sec;
    sec.name = rs.name;
    sec.vaddr = rs.vaddr;
    sec.size = rs.size;
    sec.writable = (rs.flags & SHF_WRITE) != 0;
    sec.executable = (rs.flags & SHF_EXECINSTR) != 0;
    if (rs.type == SHT_PROGBITS && rs.size > 0) {
      r.require(rs.offset, rs.size);
      sec.bytes.assign(bytes.begin() + static_cast<ptrdiff_t>(rs.offset),
                       bytes.begin() + static_cast<ptrdiff_t>(rs.offset + rs.size));
    }
    img.sections.push_back(std::move(sec));
  }
  std::sort(img.sections.begin(), img.sections.end(),
            [](const ElfSection& a, const ElfSection& b) { return a.vaddr < b.vaddr; });

  std::vector<RawSymbol> dynsyms;
  std::vector<RawSymbol> symtab;
  for (const auto& rs : raw) {
    if (rs.type == SHT_DYNSYM) {
      auto syms = parse_symbols(r, rs, raw);
      dynsyms.insert(dynsyms.end(), syms.begin(), syms.end());
    } else if (rs.type == SHT_SYMTAB) {
      auto syms = parse_symbols(r, rs, raw);
      symtab.insert(symtab.end(), syms.begin(), syms.end());
    }
  }

  for (const auto& sym : dynsyms) {
    if (sym.shndx == 0 && !sym.name.empty()) ++img.dynamic_import_count;
  }

  for (const auto& rs : raw) {
    if (rs.type != SHT_RELA || rs.entsize != 24) continue;
    uint64_t count = rs.size / 24;
    for (uint64_t i = 0; i < count; ++i) {
      uint64_t off = rs.offset + i * 24;
      r.require(off, 24);
      uint64_t r_offset = r.u64(off);
      uint64_t r_info = r.u64(off + 8);
      uint32_t rtype = static_cast<uint32_t>(r_info & 0xffffffff);
      uint32_t rsym = static_cast<uint32_t>(r_info >> 32);
      bool is_import_slot =
          (img.arch == Arch::x86_64 &&
           (rtype == R_X86_64_JUMP_SLOT || rtype == R_X86_64_GLOB_DAT)) ||
          (img.arch == Arch::aarch64 &&
           (rtype == R_AARCH64_JUMP_SLOT || rtype == R_AARCH64_GLOB_DAT));
      if (!is_import_slot || rsym == 0 || rsym >= dynsyms.size()) continue;
      if (dynsyms[rsym].name.empty()) continue;
      img.got_imports[r_offset] = dynsyms[rsym].name;
    }
  }

  // Defined function symbols.  The static symbol table wins when both
  // name the same address.
  std::map<uint64_t, ElfFunction> funcs;
  auto add_funcs = [&](const std::vector<RawSymbol>& syms) {
    for (const auto& sym : syms) {
      if ((sym.info & 0xf) != 2) continue;  // STT_FUNC
      if (sym.shndx == 0 || sym.name.empty()) continue;
      ElfFunction f{sym.name, sym.value, sym.size};
      funcs[sym.value] = f;
    }
  };
  add_funcs(dynsyms);
  add_funcs(symtab);
  for (auto& [addr, f] : funcs) img.functions.push_back(f);

  for (const auto& sec : img.sections) {
    if (!sec.executable) continue;
    if (sec.name.rfind(".plt", 0) != 0) continue;
    if (img.arch == Arch::x86_64) {
      scan_plt_x86(sec, img);
    } else {
      scan_plt_a64(sec, img);
    }
  }

  return img;
}

ElfImage load_elf_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedElf("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return load_elf(bytes);
}

}  // namespace udsaudit

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
#ifndef UDSAUDIT_ELF_IMAGE_H
#define UDSAUDIT_ELF_IMAGE_H

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "udsaudit/insn.h"

namespace udsaudit {

// A loaded program section. `bytes` is empty for SHT_NOBITS sections
// (.bss), whose contents are zero at load time.
struct ElfSection {
  std::string name;
  uint64_t vaddr = 0;
  uint64_t size = 0;
  bool writable = false;
  bool executable = false;
  std::vector<uint8_t> bytes;
};

struct ElfFunction {
  std::string name;
  uint64_t vaddr = 0;
  uint64_t size = 0;  // 0 when the symbol table does not record one
};

// Parsed view of one ELF64 little-endian executable or shared object.
// Only the pieces the analyses consume are retained: allocatable
// sections, defined function symbols, and the import plumbing (GOT
// slots and PLT stubs) needed to name external calls.
struct ElfImage {
  Arch arch = Arch::x86_64;
  uint64_t entry = 0;
  std::vector<ElfSection> sections;       // sorted by vaddr
  std::vector<ElfFunction> functions;     // defined FUNC symbols, sorted by vaddr
  std::map<uint64_t, std::string> got_imports;  // GOT slot vaddr -> symbol name
  std::map<uint64_t, std::string> plt_stubs;    // stub entry vaddr -> symbol name
  size_t dynamic_import_count = 0;        // undefined dynamic symbols

  const ElfSection* section_at(uint64_t vaddr) const;
  bool read_bytes(uint64_t vaddr, size_t n, uint8_t* out) const;
  // Reads a NUL-terminated string; returns false if the address is not
  // backed by image bytes or no terminator is found within `max` bytes.
  bool string_at(uint64_t vaddr, std::string& out, size_t max = 4096) const;
  bool is_writable(uint64_t vaddr) const;
  bool in_image(uint64_t vaddr) const;

  // True when there is nothing to anchor an analysis on: no dynamic
  // imports and no named function symbols.
  bool opaque() const {
    return dynamic_import_count == 0 && functions.empty();
  }
};

ElfImage load_elf(const std::vector<uint8_t>& bytes);
ElfImage load_elf_file(const std::string& path);

}  // namespace udsaudit

#endif  // UDSAUDIT_ELF_IMAGE_H

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
#include "udsaudit/cfg.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <deque>

namespace udsaudit {

namespace {

bool decode_one(Arch arch, const uint8_t* bytes, size_t avail, uint64_t vaddr,
                Insn& out) {
  if (arch == Arch::x86_64) return decode_x86(bytes, avail, vaddr, out);
  return decode_a64(bytes, avail, vaddr, out);
}

bool is_terminator(const Insn& i) {
  switch (i.op) {
    case Op::ret:
    case Op::jmp_direct:
    case Op::jmp_indirect:
    case Op::jcc:
    case Op::jcc_bit:
      return true;
    default:
      return false;
  }
}

// Prologue scan for binaries without function symbols.  Matches the
// common compiler-emitted entry sequences.
std::vector<ElfFunction> scan_prologues(const ElfImage& img) {
  std::vector<ElfFunction> out;
  for (const auto& sec : img.sections) {
    if (!sec.executable || sec.name.rfind(".plt", 0) == 0) continue;
    const auto& b = sec.bytes;
    if (img.arch == Arch::x86_64) {
      for (size_t off = 0; off + 4 <= b.size(); ++off) {
        bool endbr = b[off] == 0xf3 && b[off + 1] == 0x0f && b[off + 2] == 0x1e &&
                     b[off + 3] == 0xfa;
        bool frame = b[off] == 0x55 && b[off + 1] == 0x48 && b[off + 2] == 0x89 &&
                     b[off + 3] == 0xe5;
        if (endbr || frame) {
          out.push_back({"", sec.vaddr + off, 0});
          if (frame) off += 3;
        }
      }
    } else {
      for (size_t off = 0; off + 4 <= b.size(); off += 4) {
        uint32_t w;
        memcpy(&w, b.data() + off, 4);
        bool paci = w == 0xD503233F || w == 0xD503237F;
        bool stp_fp = (w & 0xFFC07FFF) == 0xA9807BFD;  // stp x29, x30, [sp, #-n]!
        bool sub_sp = (w & 0xFFC003FF) == 0xD10003FF;  // sub sp, sp, #n
        if (paci || stp_fp || sub_sp) {
          // sub sp also appears mid-function; require it to follow a
          // terminator or section start to count as an entry.
          out.push_back({"", sec.vaddr + off, 0});
        }
      }
    }
  }
  if (img.entry != 0 && img.section_at(img.entry) != nullptr) {
    out.push_back({"", img.entry, 0});
  }
  std::sort(out.begin(), out.end(),
            [](const ElfFunction& a, const ElfFunction& b) { return a.vaddr < b.vaddr; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const ElfFunction& a, const ElfFunction& b) {
                          return a.vaddr == b.vaddr;
                        }),
            out.end());
  for (auto& f : out) {
    char buf[32];
    snprintf(buf, sizeof(buf), "sub_%llx", static_cast<unsigned long long>(f.vaddr));
    f.name = buf;
  }
  return out;
}

struct Decoded {
  std::map<uint64_t, Insn> insns;
  std::set<uint64_t> leaders;
  size_t undecodable = 0;
};

Decoded decode_function(const ElfImage& img, uint64_t entry, uint64_t limit) {
  Decoded d;
  std::deque<uint64_t> work{entry};
  d.leaders.insert(entry);
  std::set<uint64_t> visited;
  while (!work.empty()) {
    uint64_t pc = work.front();
    work.pop_front();
    if (visited.count(pc)) continue;
    visited.insert(pc);
    while (pc < limit) {
      if (d.insns.count(pc)) break;  // merged into an already decoded run
      const ElfSection* sec = img.section_at(pc);
      if (sec == nullptr) break;
      uint64_t off = pc - sec->vaddr;
      size_t avail = static_cast<size_t>(
          std::min<uint64_t>(sec->bytes.size() > off ? sec->bytes.size() - off : 0,
                             limit - pc));
      Insn insn;
      if (avail == 0 ||
          !decode_one(img.arch, sec->bytes.data() + off, avail, pc, insn)) {
        ++d.undecodable;
        break;
      }
      d.insns[pc] = insn;
      if (insn.op == Op::jmp_direct || insn.op == Op::jcc || insn.op == Op::jcc_bit) {
        if (insn.target >= entry && insn.target < limit) {
          d.leaders.insert(insn.target);
          work.push_back(insn.target);
        }
      }
      if (is_terminator(insn)) {
        if (insn.op == Op::jcc || insn.op == Op::jcc_bit) {
          d.leaders.insert(pc + insn.len);
          work.push_back(pc + insn.len);
        }
        break;
      }
      pc += insn.len;
    }
  }
  return d;
}

void compute_dominators(CfgFunction& fn) {
  // Reverse postorder over the block graph.
  std::vector<uint64_t> rpo;
  std::map<uint64_t, std::vector<uint64_t>> preds;
  {
    std::set<uint64_t> seen;
    std::vector<std::pair<uint64_t, size_t>> stack;
    stack.emplace_back(fn.entry, 0);
    seen.insert(fn.entry);
    std::vector<uint64_t> postorder;
    while (!stack.empty()) {
      auto& [b, idx] = stack.back();
      auto it = fn.blocks.find(b);
      if (it == fn.blocks.end() || idx >= it->second.succ.size()) {
        postorder.push_back(b);
        stack.pop_back();
        continue;
      }
      uint64_t s = it->second.succ[idx++];
      if (!seen.count(s) && fn.blocks.count(s)) {
        seen.insert(s);
        stack.emplace_back(s, 0);
      }
    }
    rpo.assign(postorder.rbegin(), postorder.rend());
  }
  std::map<uint64_t, size_t> rpo_index;
  for (size_t i = 0; i < rpo.size(); ++i) rpo_index[rpo[i]] = i;
  for (uint64_t b : rpo) {
    auto it = fn.blocks.find(b);
    if (it == fn.blocks.end()) continue;
    for (uint64_t s : it->second.succ) {
      if (rpo_index.count(s)) preds[s].push_back(b);
    }
  }

  fn.idom.clear();
  fn.idom[fn.entry] = fn.entry;
  auto intersect = [&](uint64_t a, uint64_t b) {
    while (a != b) {
      while (rpo_index[a] > rpo_index[b]) a = fn.idom[a];
      while (rpo_index[b] > rpo_index[a]) b = fn.idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (uint64_t b : rpo) {
      if (b == fn.entry) continue;
      uint64_t new_idom = 0;
      bool have = false;
      for (uint64_t p : preds[b]) {
        if (!fn.idom.count(p)) continue;
        if (!have) {
          new_idom = p;
          have = true;
        } else {
          new_idom = intersect(new_idom, p);
        }
      }
      if (!have) continue;
      auto it = fn.idom.find(b);
      if (it == fn.idom.end() || it->second != new_idom) {
        fn.idom[b] = new_idom;
        changed = true;
      }
    }
  }

  fn.back_edges.clear();
  for (const auto& [start, blk] : fn.blocks) {
    for (uint64_t s : blk.succ) {
      if (fn.blocks.count(s) && fn.dominates_block(s, start)) {
        fn.back_edges.emplace_back(start, s);
      }
    }
  }
}

}  // namespace

const BasicBlock* CfgFunction::block_of(uint64_t vaddr) const {
  auto it = blocks.upper_bound(vaddr);
  if (it == blocks.begin()) return nullptr;
  --it;
  if (vaddr >= it->second.start && vaddr < it->second.end) return &it->second;
  return nullptr;
}

bool CfgFunction::dominates_block(uint64_t a, uint64_t b) const {
  if (a == b) return true;
  auto it = idom.find(b);
  while (it != idom.end()) {
    uint64_t up = it->second;
    if (up == a) return true;
    if (up == b) return false;  // reached the entry's self loop
    b = up;
    it = idom.find(b);
  }
  return false;
}

bool CfgFunction::dominates_insn(uint64_t a, uint64_t b) const {
  const BasicBlock* ba = block_of(a);
  const BasicBlock* bb = block_of(b);
  if (ba == nullptr || bb == nullptr) return false;
  if (ba == bb) return a < b;
  return dominates_block(ba->start, bb->start);
}

std::vector<std::set<uint64_t>> CfgFunction::natural_loops() const {
  std::vector<std::set<uint64_t>> out;
  if (back_edges.empty()) return out;
  // Predecessor map shared by all loop computations.
  std::map<uint64_t, std::vector<uint64_t>> preds;
  for (const auto& [s, b] : blocks) {
    for (uint64_t succ : b.succ) preds[succ].push_back(s);
  }
  // Natural loop body of back edge (t, h): all blocks that reach t
  // without passing through h.
  for (const auto& [tail, header] : back_edges) {
    std::set<uint64_t> body{header, tail};
    std::deque<uint64_t> work{tail};
    while (!work.empty()) {
      uint64_t cur = work.front();
      work.pop_front();
      if (cur == header) continue;
      for (uint64_t p : preds[cur]) {
        if (body.insert(p).second) work.push_back(p);
      }
    }
    out.push_back(std::move(body));
  }
  return out;
}

bool CfgFunction::in_loop(uint64_t vaddr) const {
  const BasicBlock* blk = block_of(vaddr);
  if (blk == nullptr) return false;
  for (const auto& body : natural_loops()) {
    if (body.count(blk->start)) return true;
  }
  return false;
}

const CfgFunction* Cfg::function_containing(uint64_t vaddr) const {
  auto it = functions.upper_bound(vaddr);
  if (it == functions.begin()) return nullptr;
  --it;
  if (vaddr >= it->second.entry && vaddr < it->second.limit) return &it->second;
  return nullptr;
}

Cfg build_cfg(const ElfImage& img) {
  Cfg cfg;
  cfg.arch = img.arch;

  std::vector<ElfFunction> funcs = img.functions;
  if (funcs.empty()) funcs = scan_prologues(img);
  std::sort(funcs.begin(), funcs.end(),
            [](const ElfFunction& a, const ElfFunction& b) { return a.vaddr < b.vaddr; });

  // Defined-function names by entry, for call resolution.
  std::map<uint64_t, std::string> func_names;
  for (const auto& f : funcs) func_names[f.vaddr] = f.name;

  for (size_t i = 0; i < funcs.size(); ++i) {
    const ElfFunction& f = funcs[i];
    const ElfSection* sec = img.section_at(f.vaddr);
    if (sec == nullptr || !sec->executable) continue;
    uint64_t limit = sec->vaddr + sec->size;
    if (i + 1 < funcs.size() && funcs[i + 1].vaddr > f.vaddr &&
        funcs[i + 1].vaddr < limit) {
      limit = funcs[i + 1].vaddr;
    }
    if (f.size > 0 && f.vaddr + f.size < limit) limit = f.vaddr + f.size;
    if (limit <= f.vaddr) continue;

    Decoded d = decode_function(img, f.vaddr, limit);
    CfgFunction fn;
    fn.name = f.name;
    fn.entry = f.vaddr;
    fn.limit = limit;
    fn.undecodable = d.undecodable;
    cfg.undecodable_total += d.undecodable;

    // Assemble blocks: cut at leaders and after terminators.
    BasicBlock* cur = nullptr;
    for (auto& [vaddr, insn] : d.insns) {
      if (cur == nullptr || d.leaders.count(vaddr) || cur->end != vaddr) {
        BasicBlock blk;
        blk.start = vaddr;
        blk.end = vaddr;
        cur = &fn.blocks.emplace(vaddr, std::move(blk)).first->second;
      }
      cur->end = vaddr + insn.len;
      bool term = is_terminator(insn);
      cur->insns.push_back(insn);
      if (term) cur = nullptr;
    }
    // Successor edges.
    for (auto& [start, blk] : fn.blocks) {
      if (blk.insns.empty()) continue;
      const Insn& last = blk.insns.back();
      uint64_t fall = last.vaddr + last.len;
      auto add_if_block = [&](uint64_t t) {
        if (fn.blocks.count(t)) blk.succ.push_back(t);
      };
      switch (last.op) {
        case Op::ret:
        case Op::jmp_indirect:
          break;
        case Op::jmp_direct:
          if (last.target >= fn.entry && last.target < fn.limit) {
            add_if_block(last.target);
          }
          break;
        case Op::jcc:
        case Op::jcc_bit:
          if (last.target >= fn.entry && last.target < fn.limit) {
            add_if_block(last.target);
          }
          add_if_block(fall);
          break;
        default:
          add_if_block(fall);
          break;
      }
      // A block that was cut because the next address is a leader falls
      // through into it.
      if (!is_terminator(last)) {
        if (blk.succ.empty() && fn.blocks.count(fall)) blk.succ.push_back(fall);
      }
    }
    compute_dominators(fn);
    cfg.functions.emplace(fn.entry, std::move(fn));
  }

  // Call edges, including tail calls that leave the function.
  for (const auto& [entry, fn] : cfg.functions) {
    for (const auto& [start, blk] : fn.blocks) {
      for (const Insn& insn : blk.insns) {
        Callsite cs;
        cs.vaddr = insn.vaddr;
        cs.func_entry = entry;
        if (insn.op == Op::call_direct) {
          cs.target = insn.target;
        } else if (insn.op == Op::call_indirect) {
          cs.indirect = true;
          cs.target = insn.target;  // GOT slot address when rip-relative
        } else if ((insn.op == Op::jmp_direct || insn.op == Op::jmp_indirect) &&
                   insn.target != 0 &&
                   (insn.target < fn.entry || insn.target >= fn.limit)) {
          cs.tail = true;
          cs.indirect = insn.op == Op::jmp_indirect;
          cs.target = insn.target;
        } else {
          continue;
        }
        // Resolution: PLT stub, direct GOT dispatch, or defined function.
        if (!cs.indirect) {
          auto plt = img.plt_stubs.find(cs.target);
          if (plt != img.plt_stubs.end()) {
            cs.symbol = plt->second;
          } else {
            auto fit = func_names.find(cs.target);
            if (fit != func_names.end()) cs.symbol = fit->second;
          }
        } else if (cs.target != 0) {
          auto got = img.got_imports.find(cs.target);
          if (got != img.got_imports.end()) cs.symbol = got->second;
        }
        cfg.calls.push_back(std::move(cs));
      }
    }
  }
  std::sort(cfg.calls.begin(), cfg.calls.end(),
            [](const Callsite& a, const Callsite& b) { return a.vaddr < b.vaddr; });

  return cfg;
}

std::vector<Callsite> find_callsites(const Cfg& cfg,
                                     const std::set<std::string>& symbols) {
  std::vector<Callsite> out;
  for (const auto& cs : cfg.calls) {
    if (!cs.symbol.empty() && symbols.count(cs.symbol)) out.push_back(cs);
  }
  return out;
}

}  // namespace udsaudit

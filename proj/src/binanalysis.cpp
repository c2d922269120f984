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
#include "udsaudit/binanalysis.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <iterator>
#include <optional>
#include <tuple>

namespace udsaudit {

namespace {

constexpr int kMaxDepth = 3;
constexpr int kMaxBlockVisits = 40;
constexpr size_t kMaxSteps = 400000;
constexpr size_t kMaxString = 255;
// How far an unresolvable write clobbers known bytes at a known base.
constexpr int64_t kUnknownWriteSpan = 128;

const char* kReservedEnvPrefix = "ANDROID_SOCKET_";

// ---- value lattice -------------------------------------------------------

enum class VK {
  bottom,      // nothing reached here yet
  constv,      // known integer / byte-string constant
  data_addr,   // pointer into the loaded image
  stack_addr,  // pointer into the current stack, offset from root SP
  call_ret,    // opaque return value of a call (descriptor identity)
  import_ptr,  // address of an imported symbol read from a GOT slot
  cred,        // one field of a peer credential struct
  symbolic,    // anything else
};

// Provenance of constv bytes, kept so extracted strings can be replayed
// against the binary.
enum class PK { none, image, imm, synth };

struct Val {
  VK k = VK::bottom;
  int64_t n = 0;      // constv value / pointer offset / import slot
  uint64_t site = 0;  // call_ret, cred: the originating callsite
  int cred_off = -1;  // cred: 0 pid, 4 uid, 8 gid
  PK pk = PK::none;
  uint64_t prov = 0;  // image: vaddr of lowest byte; imm: insn vaddr

  static Val sym() { return Val{VK::symbolic, 0, 0, -1, PK::none, 0}; }
  static Val cst(int64_t v, PK pk = PK::none, uint64_t prov = 0) {
    return Val{VK::constv, v, 0, -1, pk, prov};
  }
  static Val stack(int64_t off) { return Val{VK::stack_addr, off, 0, -1, PK::none, 0}; }
  static Val data(int64_t va) { return Val{VK::data_addr, va, 0, -1, PK::none, 0}; }
  static Val ret_of(uint64_t site) { return Val{VK::call_ret, 0, site, -1, PK::none, 0}; }
  static Val cred_field(uint64_t site, int off) {
    return Val{VK::cred, 0, site, off, PK::none, 0};
  }

  bool is_const() const { return k == VK::constv; }
  bool same_value(const Val& o) const {
    return k == o.k && n == o.n && site == o.site && cred_off == o.cred_off;
  }
};

Val join_val(const Val& a, const Val& b) {
  if (a.k == VK::bottom) return b;
  if (b.k == VK::bottom) return a;
  if (!a.same_value(b)) return Val::sym();
  if (a.pk == b.pk && a.prov == b.prov) return a;
  Val v = a;
  v.pk = a.is_const() ? PK::synth : PK::none;
  v.prov = 0;
  return v;
}

Val add_val(const Val& v, int64_t d) {
  switch (v.k) {
    case VK::constv: {
      Val r = Val::cst(v.n + d);
      if (d == 0) {
        r.pk = v.pk;
        r.prov = v.prov;
      }
      return r;
    }
    case VK::stack_addr:
      return Val::stack(v.n + d);
    case VK::data_addr:
      return Val::data(v.n + d);
    default:
      return Val::sym();
  }
}

struct Cell {
  Val v;
  uint8_t size = 0;

  // Representation equality, for fixpoint change detection.
  bool operator==(const Cell& o) const {
    return size == o.size && v.k == o.v.k && v.n == o.v.n && v.site == o.v.site &&
           v.cred_off == o.v.cred_off && v.pk == o.v.pk && v.prov == o.v.prov;
  }
};

struct State {
  bool valid = false;
  std::vector<Val> regs;
  std::map<int64_t, Cell> stack;     // keyed by offset from root SP
  std::map<uint64_t, Cell> globals;  // overlay over writable data

  static State entry(Arch arch) {
    State st;
    st.valid = true;
    st.regs.assign(33, Val::sym());
    st.regs[abi_info(arch).sp_reg] = Val::stack(0);
    return st;
  }
};

template <typename K>
void join_cells(std::map<K, Cell>& into, const std::map<K, Cell>& other) {
  for (auto it = into.begin(); it != into.end();) {
    auto jt = other.find(it->first);
    if (jt == other.end() || jt->second.size != it->second.size) {
      it = into.erase(it);
      continue;
    }
    it->second.v = join_val(it->second.v, jt->second.v);
    ++it;
  }
}

// Returns true if `into` changed.
bool join_state(State& into, const State& from) {
  if (!from.valid) return false;
  if (!into.valid) {
    into = from;
    return true;
  }
  bool changed = false;
  for (size_t i = 0; i < into.regs.size(); ++i) {
    Val j = join_val(into.regs[i], from.regs[i]);
    if (!j.same_value(into.regs[i]) || j.pk != into.regs[i].pk) {
      into.regs[i] = j;
      changed = true;
    }
  }
  size_t before = into.stack.size() + into.globals.size();
  auto snapshot_stack = into.stack;
  auto snapshot_globals = into.globals;
  join_cells(into.stack, from.stack);
  join_cells(into.globals, from.globals);
  if (into.stack.size() + into.globals.size() != before) changed = true;
  if (!changed) {
    changed = !(snapshot_stack == into.stack) || !(snapshot_globals == into.globals);
  }
  return changed;
}

// ---- event collection ----------------------------------------------------

struct BindEvent {
  uint64_t callsite = 0;
  std::string api;
  NamespaceHint hint = NamespaceHint::unknown;
  Confidence conf = Confidence::symbolic;
  std::string bytes;
  std::vector<ByteFragment> frags;
};

struct CredEvent {
  uint64_t callsite = 0;
  CredModKind kind = CredModKind::umask;
  std::vector<std::optional<uint64_t>> args;
};

struct CloseEvent {
  uint64_t callsite = 0;
  bool fd_known = false;
  uint64_t fd_site = 0;
};

struct Collector {
  std::vector<BindEvent> binds;
  std::vector<CredEvent> cred_mods;
  std::vector<CloseEvent> closes;
  std::map<uint64_t, PeerCredCheck> checks;
  std::set<std::string> reserved;
  size_t nonconst_optname = 0;

  void add_usage(uint64_t site, CredField field, UsageKind kind,
                 std::optional<int64_t> comparand, std::string callee) {
    PeerCredCheck& c = checks[site];
    c.callsite = site;
    for (const CredUsage& u : c.usages) {
      if (u.kind == kind && u.field == field && u.comparand == comparand &&
          u.callee == callee) {
        return;
      }
    }
    CredUsage u;
    u.kind = kind;
    u.field = field;
    u.comparand = comparand;
    u.callee = std::move(callee);
    c.usages.push_back(std::move(u));
    c.creds_used.insert(field);
  }
};

CredField field_of(int off) {
  return off == 0 ? CredField::pid : off == 4 ? CredField::uid : CredField::gid;
}

// ---- string reads with provenance ----------------------------------------

struct ByteProv {
  uint8_t byte = 0;
  PK pk = PK::none;
  uint64_t prov = 0;
};

struct StrRead {
  bool any = false;         // at least the first byte was known
  bool terminated = false;  // a NUL was reached
  std::string bytes;
  std::vector<ByteFragment> frags;
};

void append_frag(std::vector<ByteFragment>& frags, const ByteProv& bp) {
  ByteFragment::Kind kind = bp.pk == PK::image ? ByteFragment::Kind::image
                            : bp.pk == PK::imm ? ByteFragment::Kind::literal
                                               : ByteFragment::Kind::synth;
  if (!frags.empty()) {
    ByteFragment& last = frags.back();
    bool mergeable =
        last.kind == kind &&
        ((kind == ByteFragment::Kind::image &&
          last.vaddr + last.bytes.size() == bp.prov) ||
         (kind == ByteFragment::Kind::literal && last.vaddr == bp.prov) ||
         kind == ByteFragment::Kind::synth);
    if (mergeable) {
      last.bytes.push_back(static_cast<char>(bp.byte));
      return;
    }
  }
  ByteFragment f;
  f.kind = kind;
  f.vaddr = bp.prov;
  f.bytes.push_back(static_cast<char>(bp.byte));
  frags.push_back(std::move(f));
}

// Drops the first n bytes of a fragment run, keeping provenance for what
// remains. Image fragments advance their base address; literal fragments
// keep the instruction address, their bytes stay a slice of its immediate.
std::vector<ByteFragment> drop_frag_prefix(const std::vector<ByteFragment>& frags, size_t n) {
  std::vector<ByteFragment> out;
  for (const ByteFragment& f : frags) {
    if (n >= f.bytes.size()) {
      n -= f.bytes.size();
      continue;
    }
    ByteFragment g = f;
    if (n > 0) {
      g.bytes = f.bytes.substr(n);
      if (f.kind == ByteFragment::Kind::image) g.vaddr += n;
      n = 0;
    }
    out.push_back(std::move(g));
  }
  return out;
}

// ---- the interpreter -------------------------------------------------

class Interp {
 public:
  Interp(const ElfImage& img, const Cfg& cfg, const std::set<std::string>& apis,
         Collector& out, Diagnostics* diags)
      : img_(img), cfg_(cfg), apis_(apis), out_(out), diags_(diags),
        abi_(abi_info(img.arch)) {
    for (const Callsite& cs : cfg.calls) calls_by_vaddr_[cs.vaddr] = &cs;
  }

  void run_root(const CfgFunction& fn) {
    steps_ = 0;
    chain_.clear();
    interpret_function(fn, State::entry(img_.arch), 0);
  }

 private:
  const ElfImage& img_;
  const Cfg& cfg_;
  const std::set<std::string>& apis_;
  Collector& out_;
  Diagnostics* diags_;
  AbiInfo abi_;
  std::map<uint64_t, const Callsite*> calls_by_vaddr_;
  size_t steps_ = 0;
  std::vector<uint64_t> chain_;  // call chain, for recursion cut-off

  void warn(const std::string& msg) {
    if (diags_ != nullptr) diags_->warn(msg);
  }

  // -- memory ---------------------------------------------------------

  template <typename K>
  static void erase_range(std::map<K, Cell>& m, K off, int64_t len) {
    if (len <= 0) return;
    auto it = m.lower_bound(off);
    if (it != m.begin()) {
      auto prev = std::prev(it);
      if (static_cast<int64_t>(prev->first) + prev->second.size >
          static_cast<int64_t>(off)) {
        it = prev;
      }
    }
    std::vector<std::pair<K, Cell>> tails;
    while (it != m.end() && static_cast<int64_t>(it->first) <
                                static_cast<int64_t>(off) + len) {
      // Preserve the untouched bytes of partially overwritten constant
      // cells; everything else is dropped whole.
      const Cell& c = it->second;
      if (c.v.is_const()) {
        int64_t cs = static_cast<int64_t>(it->first);
        for (int i = 0; i < c.size; ++i) {
          int64_t b = cs + i;
          if (b >= static_cast<int64_t>(off) &&
              b < static_cast<int64_t>(off) + len) {
            continue;
          }
          Val bv = Val::cst(static_cast<uint8_t>(c.v.n >> (8 * i)));
          if (c.v.pk == PK::image) {
            bv.pk = PK::image;
            bv.prov = c.v.prov + static_cast<uint64_t>(i);
          } else if (c.v.pk != PK::none) {
            bv.pk = PK::synth;
          }
          tails.push_back({static_cast<K>(b), Cell{bv, 1}});
        }
      }
      it = m.erase(it);
    }
    for (auto& [k, c] : tails) m.emplace(k, c);
  }

  std::optional<ByteProv> byte_at(const State& st, const Val& addr) {
    if (addr.k == VK::stack_addr) {
      return cell_byte(st.stack, addr.n);
    }
    if (addr.k == VK::data_addr || addr.k == VK::constv) {
      uint64_t va = static_cast<uint64_t>(addr.n);
      auto fromCells = cell_byte(st.globals, va);
      if (fromCells) return fromCells;
      if (cell_covering(st.globals, va)) return std::nullopt;
      uint8_t b;
      if (img_.read_bytes(va, 1, &b)) {
        return ByteProv{b, PK::image, va};
      }
    }
    return std::nullopt;
  }

  template <typename K>
  static bool cell_covering(const std::map<K, Cell>& m, K off) {
    auto it = m.upper_bound(off);
    if (it == m.begin()) return false;
    --it;
    return static_cast<int64_t>(off) <
           static_cast<int64_t>(it->first) + it->second.size;
  }

  template <typename K>
  static std::optional<ByteProv> cell_byte(const std::map<K, Cell>& m, K off) {
    auto it = m.upper_bound(off);
    if (it == m.begin()) return std::nullopt;
    --it;
    int64_t delta = static_cast<int64_t>(off) - static_cast<int64_t>(it->first);
    if (delta >= it->second.size) return std::nullopt;
    const Val& v = it->second.v;
    if (!v.is_const()) return std::nullopt;
    ByteProv bp;
    bp.byte = static_cast<uint8_t>(static_cast<uint64_t>(v.n) >> (8 * delta));
    if (v.pk == PK::image) {
      bp.pk = PK::image;
      bp.prov = v.prov + static_cast<uint64_t>(delta);
    } else if (v.pk == PK::imm && delta == 0 && it->second.size <= 8) {
      bp.pk = PK::imm;
      bp.prov = v.prov;
    } else if (v.pk != PK::none) {
      bp.pk = PK::synth;
    }
    return bp;
  }

  Val read_mem(State& st, const Val& addr, unsigned size) {
    if (size == 0 || size > 8) return Val::sym();
    if (addr.k == VK::stack_addr) {
      auto it = st.stack.find(addr.n);
      if (it != st.stack.end() && it->second.size == size) return it->second.v;
    } else if (addr.k == VK::data_addr || addr.k == VK::constv) {
      uint64_t va = static_cast<uint64_t>(addr.n);
      auto it = st.globals.find(va);
      if (it != st.globals.end() && it->second.size == size) return it->second.v;
      if (size == 8 && !cell_covering(st.globals, va) &&
          img_.got_imports.count(va)) {
        Val v;
        v.k = VK::import_ptr;
        v.n = addr.n;
        return v;
      }
    } else {
      return Val::sym();
    }
    // Byte-wise assembly from smaller constant cells or image data.
    uint64_t acc = 0;
    bool contiguous_image = true;
    uint64_t first_prov = 0;
    for (unsigned i = 0; i < size; ++i) {
      auto bp = byte_at(st, add_val(addr, i));
      if (!bp) return Val::sym();
      acc |= static_cast<uint64_t>(bp->byte) << (8 * i);
      if (bp->pk != PK::image) contiguous_image = false;
      if (i == 0) first_prov = bp->prov;
      if (contiguous_image && bp->prov != first_prov + i) contiguous_image = false;
    }
    int64_t sval = static_cast<int64_t>(acc);
    if (size < 8) sval = static_cast<int64_t>(acc);  // zero-extended view
    Val v = Val::cst(sval);
    if (contiguous_image) {
      v.pk = PK::image;
      v.prov = first_prov;
    } else {
      v.pk = PK::synth;
    }
    return v;
  }

  void write_mem(State& st, const Val& addr, unsigned size, const Val& v) {
    if (size == 0 || size > 8) return;
    if (addr.k == VK::stack_addr) {
      erase_range(st.stack, addr.n, static_cast<int64_t>(size));
      st.stack[addr.n] = Cell{v, static_cast<uint8_t>(size)};
      return;
    }
    if (addr.k == VK::data_addr || addr.k == VK::constv) {
      uint64_t va = static_cast<uint64_t>(addr.n);
      if (!img_.is_writable(va)) return;
      erase_range(st.globals, va, static_cast<int64_t>(size));
      st.globals[va] = Cell{v, static_cast<uint8_t>(size)};
    }
    // Writes through unknown pointers are dropped; the lattice keeps
    // whatever was known, trading soundness for usable precision.
  }

  void havoc_region(State& st, const Val& addr, int64_t len) {
    if (addr.k == VK::stack_addr) {
      erase_range(st.stack, addr.n, len);
    } else if (addr.k == VK::data_addr || addr.k == VK::constv) {
      erase_range(st.globals, static_cast<uint64_t>(addr.n), len);
    }
  }

  void write_byte(State& st, const Val& addr, const ByteProv& bp) {
    Val v = Val::cst(bp.byte);
    v.pk = bp.pk;
    v.prov = bp.prov;
    write_mem(st, addr, 1, v);
  }

  StrRead read_cstring(State& st, const Val& addr, size_t max = kMaxString) {
    StrRead r;
    if (addr.k != VK::stack_addr && addr.k != VK::data_addr &&
        addr.k != VK::constv) {
      return r;
    }
    for (size_t i = 0; i <= max; ++i) {
      auto bp = byte_at(st, add_val(addr, static_cast<int64_t>(i)));
      if (!bp) return r;
      if (i == 0) r.any = true;
      if (bp->byte == 0) {
        r.terminated = true;
        return r;
      }
      r.bytes.push_back(static_cast<char>(bp->byte));
      append_frag(r.frags, *bp);
    }
    return r;
  }

  // -- address formation ------------------------------------------------

  std::optional<Val> eff_addr(State& st, const Insn& in) {
    if (in.wild_mem) return std::nullopt;
    if (in.base == kRegPc || in.base == kRegNone) {
      return Val::data(in.disp);
    }
    Val b = st.regs[in.base];
    switch (b.k) {
      case VK::stack_addr:
      case VK::data_addr:
      case VK::constv: {
        Val a = add_val(b, in.disp);
        if (a.k == VK::constv) return Val::data(a.n);
        return a;
      }
      default:
        return std::nullopt;
    }
  }

  void apply_wback(State& st, const Insn& in) {
    if (!in.wback || in.base < 0 || in.base >= 33) return;
    st.regs[in.base] = add_val(st.regs[in.base], in.wb_disp);
  }

  // -- credential usage spotting ---------------------------------------

  void note_compare(const Val& a, std::optional<int64_t> comparand) {
    if (a.k != VK::cred) return;
    out_.add_usage(a.site, field_of(a.cred_off), UsageKind::comparison,
                   comparand, "");
  }

  void note_compare_pair(const Val& a, const Val& b) {
    if (a.k == VK::cred) {
      note_compare(a, b.is_const() ? std::optional<int64_t>(b.n) : std::nullopt);
    }
    if (b.k == VK::cred) {
      note_compare(b, a.is_const() ? std::optional<int64_t>(a.n) : std::nullopt);
    }
  }

  // -- calls -----------------------------------------------------------

  Val arg(State& st, unsigned i) {
    if (i < abi_.arg_regs.size()) return st.regs[abi_.arg_regs[i]];
    return Val::sym();
  }

  std::string callee_name(const Callsite* cs, const Insn& in) {
    if (cs != nullptr && !cs->symbol.empty()) return cs->symbol;
    // A register call through a GOT pointer read earlier.
    if (in.op == Op::call_indirect && in.src >= 0) return "";
    if (cs != nullptr && cs->target != 0) {
      char buf[24];
      snprintf(buf, sizeof(buf), "0x%llx",
               static_cast<unsigned long long>(cs->target));
      return buf;
    }
    return "";
  }

  // Maps a resolved callee symbol onto the configured bind-API list.
  // Mangled C++ names match by substring for the class-based APIs.
  std::string api_for(const std::string& symbol) const {
    if (symbol.empty()) return "";
    if (apis_.count(symbol)) return symbol;
    if (symbol.rfind("_Z", 0) == 0) {
      std::string best;
      for (const std::string& api : apis_) {
        if (api.size() < 6) continue;
        if (symbol.find(api) != std::string::npos && api.size() > best.size()) {
          best = api;
        }
      }
      return best;
    }
    return "";
  }

  void clobber_caller_saved(State& st) {
    for (int r = 0; r < 33; ++r) {
      if (r == abi_.sp_reg) continue;
      bool saved = false;
      for (int cs : abi_.callee_saved) {
        if (cs == r) {
          saved = true;
          break;
        }
      }
      if (!saved) st.regs[r] = Val::sym();
    }
  }

  void extern_effect(State& st, uint64_t callsite) {
    clobber_caller_saved(st);
    st.regs[abi_.ret_reg] = Val::ret_of(callsite);
  }

  void do_call(State& st, const Insn& in, int depth) {
    const Callsite* cs = nullptr;
    auto it = calls_by_vaddr_.find(in.vaddr);
    if (it != calls_by_vaddr_.end()) cs = it->second;

    std::string symbol;
    if (cs != nullptr) symbol = cs->symbol;
    if (symbol.empty() && in.op == Op::call_indirect && in.src >= 0) {
      const Val& t = st.regs[in.src];
      if (t.k == VK::import_ptr) {
        auto gi = img_.got_imports.find(static_cast<uint64_t>(t.n));
        if (gi != img_.got_imports.end()) symbol = gi->second;
      }
    }
    std::string display = !symbol.empty() ? symbol : callee_name(cs, in);

    // Peer credential values flowing into any call are usages.
    for (unsigned i = 0; i < 4 && i < abi_.arg_regs.size(); ++i) {
      const Val& a = st.regs[abi_.arg_regs[i]];
      if (a.k == VK::cred) {
        out_.add_usage(a.site, field_of(a.cred_off), UsageKind::function_arg,
                       std::nullopt, display.empty() ? "indirect" : display);
      }
    }

    std::string api = api_for(symbol);
    if (!api.empty()) {
      handle_bind_api(st, in.vaddr, api);
      extern_effect(st, in.vaddr);
      return;
    }
    if (!symbol.empty() && simulate_known(st, in.vaddr, symbol)) return;

    // Descend into defined functions.
    uint64_t target = cs != nullptr && !cs->indirect ? cs->target : 0;
    auto fit = target != 0 ? cfg_.functions.find(target) : cfg_.functions.end();
    if (fit != cfg_.functions.end() && depth + 1 <= kMaxDepth &&
        std::find(chain_.begin(), chain_.end(), target) == chain_.end()) {
      Val saved_sp = st.regs[abi_.sp_reg];
      State callee_in = st;
      if (img_.arch == Arch::x86_64) {
        callee_in.regs[abi_.sp_reg] = add_val(saved_sp, -8);
      } else {
        callee_in.regs[30] = Val::sym();  // link register
      }
      State exit = interpret_function(fit->second, std::move(callee_in), depth + 1);
      if (exit.valid) {
        exit.regs[abi_.sp_reg] = saved_sp;
        if (img_.arch == Arch::aarch64) exit.regs[30] = Val::sym();
        st = std::move(exit);
        return;
      }
    }
    extern_effect(st, in.vaddr);
  }

  // Reads the sockaddr_un at `addr_ptr` and emits a bind event.
  void extract_sockaddr(State& st, uint64_t callsite, const std::string& api,
                        const Val& addr_ptr) {
    BindEvent ev;
    ev.callsite = callsite;
    ev.api = api;
    Val path0 = add_val(addr_ptr, 2);  // skip sun_family
    auto first = byte_at(st, path0);
    if (!first) {
      ev.hint = NamespaceHint::unknown;
      ev.conf = Confidence::symbolic;
      out_.binds.push_back(std::move(ev));
      return;
    }
    if (first->byte == 0) {
      // Abstract: a NUL, then the name.
      StrRead name = read_cstring(st, add_val(addr_ptr, 3));
      ev.hint = NamespaceHint::abstract;
      ev.bytes = std::string(1, '\0') + name.bytes;
      ev.conf = name.terminated ? Confidence::exact
                : name.any      ? Confidence::partial
                                : Confidence::symbolic;
      // The leading NUL participates in the derivation too.
      ByteFragment nul;
      nul.kind = first->pk == PK::image ? ByteFragment::Kind::image
                 : first->pk == PK::imm ? ByteFragment::Kind::literal
                                        : ByteFragment::Kind::synth;
      nul.vaddr = first->prov;
      nul.bytes = std::string(1, '\0');
      name.frags.insert(name.frags.begin(), std::move(nul));
      ev.frags = std::move(name.frags);
    } else {
      StrRead path = read_cstring(st, path0);
      ev.bytes = path.bytes;
      ev.hint = first->byte == '/' ? NamespaceHint::filesystem
                                   : NamespaceHint::unknown;
      ev.conf = path.terminated ? Confidence::exact
                : path.any      ? Confidence::partial
                                : Confidence::symbolic;
      ev.frags = std::move(path.frags);
    }
    out_.binds.push_back(std::move(ev));
  }

  void emit_name_bind(uint64_t callsite, const std::string& api,
                      NamespaceHint hint, const StrRead& name,
                      std::string bytes) {
    BindEvent ev;
    ev.callsite = callsite;
    ev.api = api;
    ev.hint = hint;
    ev.bytes = std::move(bytes);
    ev.conf = name.terminated ? Confidence::exact
              : name.any      ? Confidence::partial
                              : Confidence::symbolic;
    ev.frags = name.frags;
    out_.binds.push_back(std::move(ev));
  }

  void handle_bind_api(State& st, uint64_t callsite, const std::string& api) {
    if (api == "bind") {
      extract_sockaddr(st, callsite, api, arg(st, 1));
      return;
    }
    if (api == "getenv") {
      StrRead name = read_cstring(st, arg(st, 0));
      if (name.terminated &&
          name.bytes.rfind(kReservedEnvPrefix, 0) == 0 &&
          name.bytes.size() > strlen(kReservedEnvPrefix)) {
        std::string suffix = name.bytes.substr(strlen(kReservedEnvPrefix));
        out_.reserved.insert(suffix);
        StrRead sub = name;
        sub.bytes = suffix;
        sub.frags = drop_frag_prefix(name.frags, strlen(kReservedEnvPrefix));
        emit_name_bind(callsite, api, NamespaceHint::reserved_env, sub, suffix);
      }
      return;
    }
    if (api == "android_get_control_socket") {
      StrRead name = read_cstring(st, arg(st, 0));
      if (name.any || name.terminated) {
        if (name.terminated) out_.reserved.insert(name.bytes);
        emit_name_bind(callsite, api, NamespaceHint::reserved_env, name,
                       name.bytes);
      } else {
        emit_name_bind(callsite, api, NamespaceHint::reserved_env, name, "");
      }
      return;
    }
    if (api == "FrameworkListener" || api == "SocketListener") {
      // C++ constructors carry `this` first; plain C shims do not.
      StrRead name = read_cstring(st, arg(st, 0));
      if (!name.terminated) {
        StrRead second = read_cstring(st, arg(st, 1));
        if (second.terminated) name = second;
      }
      if (name.terminated) out_.reserved.insert(name.bytes);
      emit_name_bind(callsite, api, NamespaceHint::reserved_env, name,
                     name.bytes);
      return;
    }
    if (api == "socket_local_server" || api == "socket_local_server_bind") {
      unsigned name_idx = api == "socket_local_server" ? 0 : 2;
      unsigned ns_idx = 1;
      StrRead name = read_cstring(st, arg(st, name_idx));
      Val ns = arg(st, ns_idx);
      if (!ns.is_const()) {
        emit_name_bind(callsite, api, NamespaceHint::unknown, name, name.bytes);
        return;
      }
      switch (ns.n) {
        case 0:  // abstract
          emit_name_bind(callsite, api, NamespaceHint::abstract, name,
                         std::string(1, '\0') + name.bytes);
          break;
        case 1:  // reserved
          if (name.terminated) out_.reserved.insert(name.bytes);
          emit_name_bind(callsite, api, NamespaceHint::reserved_env, name,
                         name.bytes);
          break;
        case 2:  // filesystem
          if (!name.bytes.empty() && name.bytes[0] == '/') {
            emit_name_bind(callsite, api, NamespaceHint::filesystem, name,
                           name.bytes);
          } else {
            warn("filesystem socket name without absolute path at callsite");
            emit_name_bind(callsite, api, NamespaceHint::unknown, name,
                           name.bytes);
          }
          break;
        default:
          emit_name_bind(callsite, api, NamespaceHint::unknown, name,
                         name.bytes);
          break;
      }
      return;
    }
    // A user-supplied API name without shape knowledge: record the
    // callsite with nothing resolved.
    BindEvent ev;
    ev.callsite = callsite;
    ev.api = api;
    out_.binds.push_back(std::move(ev));
  }

  std::optional<uint64_t> const_arg(State& st, unsigned i) {
    Val v = arg(st, i);
    if (v.is_const()) return static_cast<uint64_t>(v.n);
    return std::nullopt;
  }

  bool simulate_known(State& st, uint64_t callsite, const std::string& sym) {
    if (sym == "umask" || sym == "seteuid" || sym == "setegid") {
      CredEvent ev;
      ev.callsite = callsite;
      ev.kind = sym == "umask" ? CredModKind::umask
                : sym == "seteuid" ? CredModKind::seteuid
                                   : CredModKind::setegid;
      ev.args = {const_arg(st, 0)};
      out_.cred_mods.push_back(std::move(ev));
      extern_effect(st, callsite);
      return true;
    }
    if (sym == "chmod" || sym == "fchmod") {
      CredEvent ev;
      ev.callsite = callsite;
      ev.kind = sym == "chmod" ? CredModKind::chmod : CredModKind::fchmod;
      ev.args = {const_arg(st, 1)};
      out_.cred_mods.push_back(std::move(ev));
      extern_effect(st, callsite);
      return true;
    }
    if (sym == "chown" || sym == "fchown") {
      CredEvent ev;
      ev.callsite = callsite;
      ev.kind = sym == "chown" ? CredModKind::chown : CredModKind::fchown;
      ev.args = {const_arg(st, 1), const_arg(st, 2)};
      out_.cred_mods.push_back(std::move(ev));
      extern_effect(st, callsite);
      return true;
    }
    if (sym == "getsockopt") {
      Val optname = arg(st, 2);
      Val optval = arg(st, 3);
      if (!optname.is_const()) {
        ++out_.nonconst_optname;
      } else if (optname.n == 0x11) {
        PeerCredCheck& c = out_.checks[callsite];
        c.callsite = callsite;
        if (optval.k == VK::stack_addr || optval.k == VK::data_addr) {
          write_mem(st, add_val(optval, 0), 4, Val::cred_field(callsite, 0));
          write_mem(st, add_val(optval, 4), 4, Val::cred_field(callsite, 4));
          write_mem(st, add_val(optval, 8), 4, Val::cred_field(callsite, 8));
        }
      }
      extern_effect(st, callsite);
      return true;
    }
    if (sym == "close") {
      CloseEvent ev;
      ev.callsite = callsite;
      Val fd = arg(st, 0);
      if (fd.k == VK::call_ret) {
        ev.fd_known = true;
        ev.fd_site = fd.site;
      }
      out_.closes.push_back(ev);
      extern_effect(st, callsite);
      return true;
    }
    if (sym == "strcpy" || sym == "stpcpy") {
      Val dst = arg(st, 0);
      StrRead src = read_cstring(st, arg(st, 1));
      if (!src.terminated) {
        havoc_region(st, dst, kUnknownWriteSpan);
      } else {
        copy_string(st, dst, src, true);
      }
      clobber_caller_saved(st);
      st.regs[abi_.ret_reg] = dst;
      return true;
    }
    if (sym == "strcat") {
      Val dst = arg(st, 0);
      int64_t at = find_nul(st, dst);
      StrRead src = read_cstring(st, arg(st, 1));
      if (at < 0 || !src.terminated) {
        havoc_region(st, dst, kUnknownWriteSpan);
      } else {
        copy_string(st, add_val(dst, at), src, true);
      }
      clobber_caller_saved(st);
      st.regs[abi_.ret_reg] = dst;
      return true;
    }
    if (sym == "strncpy") {
      Val dst = arg(st, 0);
      StrRead src = read_cstring(st, arg(st, 1));
      std::optional<uint64_t> n = const_arg(st, 2);
      if (!n || !src.terminated) {
        havoc_region(st, dst, n ? std::min<int64_t>(*n, kUnknownWriteSpan)
                                : kUnknownWriteSpan);
      } else {
        size_t limit = static_cast<size_t>(*n);
        for (size_t i = 0; i < limit; ++i) {
          if (i < src.bytes.size()) {
            ByteProv bp = byte_prov_of(src, i);
            write_byte(st, add_val(dst, static_cast<int64_t>(i)), bp);
          } else {
            write_mem(st, add_val(dst, static_cast<int64_t>(i)), 1, Val::cst(0));
          }
        }
      }
      clobber_caller_saved(st);
      st.regs[abi_.ret_reg] = dst;
      return true;
    }
    if (sym == "memcpy" || sym == "memmove") {
      Val dst = arg(st, 0);
      Val src = arg(st, 1);
      std::optional<uint64_t> n = const_arg(st, 2);
      if (!n || *n > 4096) {
        havoc_region(st, dst, kUnknownWriteSpan);
      } else {
        for (uint64_t i = 0; i < *n; ++i) {
          auto bp = byte_at(st, add_val(src, static_cast<int64_t>(i)));
          if (bp) {
            write_byte(st, add_val(dst, static_cast<int64_t>(i)), *bp);
          } else {
            havoc_region(st, add_val(dst, static_cast<int64_t>(i)), 1);
          }
        }
      }
      clobber_caller_saved(st);
      st.regs[abi_.ret_reg] = dst;
      return true;
    }
    if (sym == "memset") {
      Val dst = arg(st, 0);
      std::optional<uint64_t> c = const_arg(st, 1);
      std::optional<uint64_t> n = const_arg(st, 2);
      if (!n || !c || *n > 4096) {
        havoc_region(st, dst, n ? std::min<int64_t>(*n, kUnknownWriteSpan)
                                : kUnknownWriteSpan);
      } else {
        for (uint64_t i = 0; i < *n; ++i) {
          write_mem(st, add_val(dst, static_cast<int64_t>(i)), 1,
                    Val::cst(static_cast<uint8_t>(*c)));
        }
      }
      clobber_caller_saved(st);
      st.regs[abi_.ret_reg] = dst;
      return true;
    }
    if (sym == "strlen") {
      StrRead s = read_cstring(st, arg(st, 0));
      clobber_caller_saved(st);
      st.regs[abi_.ret_reg] = s.terminated
                                  ? Val::cst(static_cast<int64_t>(s.bytes.size()))
                                  : Val::ret_of(callsite);
      return true;
    }
    if (sym == "sprintf" || sym == "snprintf") {
      bool bounded = sym == "snprintf";
      Val dst = arg(st, 0);
      std::optional<uint64_t> cap;
      unsigned fmt_idx = bounded ? 2 : 1;
      if (bounded) {
        cap = const_arg(st, 1);
        if (!cap) {
          havoc_region(st, dst, kUnknownWriteSpan);
          extern_effect(st, callsite);
          return true;
        }
      }
      do_format(st, callsite, dst, fmt_idx, cap);
      return true;
    }
    return false;
  }

  static ByteProv byte_prov_of(const StrRead& s, size_t idx) {
    ByteProv bp;
    bp.byte = static_cast<uint8_t>(s.bytes[idx]);
    size_t pos = 0;
    for (const ByteFragment& f : s.frags) {
      if (idx < pos + f.bytes.size()) {
        size_t d = idx - pos;
        switch (f.kind) {
          case ByteFragment::Kind::image:
            bp.pk = PK::image;
            bp.prov = f.vaddr + d;
            break;
          case ByteFragment::Kind::literal:
            bp.pk = PK::imm;
            bp.prov = f.vaddr;
            break;
          case ByteFragment::Kind::synth:
            bp.pk = PK::synth;
            break;
        }
        return bp;
      }
      pos += f.bytes.size();
    }
    bp.pk = PK::synth;
    return bp;
  }

  void copy_string(State& st, const Val& dst, const StrRead& src,
                   bool terminate) {
    for (size_t i = 0; i < src.bytes.size(); ++i) {
      write_byte(st, add_val(dst, static_cast<int64_t>(i)), byte_prov_of(src, i));
    }
    if (terminate) {
      write_mem(st, add_val(dst, static_cast<int64_t>(src.bytes.size())), 1,
                Val::cst(0));
    }
  }

  int64_t find_nul(State& st, const Val& base) {
    for (int64_t i = 0; i < static_cast<int64_t>(kMaxString); ++i) {
      auto bp = byte_at(st, add_val(base, i));
      if (!bp) return -1;
      if (bp->byte == 0) return i;
    }
    return -1;
  }

  void do_format(State& st, uint64_t callsite, const Val& dst,
                 unsigned fmt_idx, std::optional<uint64_t> cap) {
    StrRead fmt = read_cstring(st, arg(st, fmt_idx));
    if (!fmt.terminated) {
      havoc_region(st, dst, kUnknownWriteSpan);
      extern_effect(st, callsite);
      return;
    }
    std::vector<ByteProv> outbytes;
    bool resolved = true;
    unsigned argi = fmt_idx + 1;
    for (size_t i = 0; i < fmt.bytes.size() && resolved; ++i) {
      char c = fmt.bytes[i];
      if (c != '%') {
        outbytes.push_back(byte_prov_of(fmt, i));
        continue;
      }
      ++i;
      // Minimal flag/width handling: skip over them.
      while (i < fmt.bytes.size() &&
             (fmt.bytes[i] == '-' || fmt.bytes[i] == '0' ||
              (fmt.bytes[i] >= '1' && fmt.bytes[i] <= '9') ||
              fmt.bytes[i] == '.' || fmt.bytes[i] == 'l' ||
              fmt.bytes[i] == 'z')) {
        ++i;
      }
      if (i >= fmt.bytes.size()) break;
      char spec = fmt.bytes[i];
      if (spec == '%') {
        ByteProv bp;
        bp.byte = '%';
        bp.pk = PK::synth;
        outbytes.push_back(bp);
        continue;
      }
      if (spec == 's') {
        StrRead sub = read_cstring(st, arg(st, argi++));
        if (!sub.terminated) {
          resolved = false;
          break;
        }
        for (size_t k = 0; k < sub.bytes.size(); ++k) {
          outbytes.push_back(byte_prov_of(sub, k));
        }
        continue;
      }
      if (spec == 'd' || spec == 'u' || spec == 'x') {
        std::optional<uint64_t> v = const_arg(st, argi++);
        if (!v) {
          resolved = false;
          break;
        }
        char buf[32];
        if (spec == 'd') {
          snprintf(buf, sizeof(buf), "%lld",
                   static_cast<long long>(static_cast<int64_t>(*v)));
        } else if (spec == 'u') {
          snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(*v));
        } else {
          snprintf(buf, sizeof(buf), "%llx", static_cast<unsigned long long>(*v));
        }
        for (char* p = buf; *p != 0; ++p) {
          ByteProv bp;
          bp.byte = static_cast<uint8_t>(*p);
          bp.pk = PK::synth;
          outbytes.push_back(bp);
        }
        continue;
      }
      resolved = false;
    }
    if (!resolved) {
      havoc_region(st, dst, kUnknownWriteSpan);
      extern_effect(st, callsite);
      return;
    }
    size_t n = outbytes.size();
    if (cap) n = std::min<size_t>(n, *cap > 0 ? *cap - 1 : 0);
    for (size_t i = 0; i < n; ++i) {
      write_byte(st, add_val(dst, static_cast<int64_t>(i)), outbytes[i]);
    }
    if (!cap || *cap > 0) {
      write_mem(st, add_val(dst, static_cast<int64_t>(n)), 1, Val::cst(0));
    }
    clobber_caller_saved(st);
    st.regs[abi_.ret_reg] = Val::cst(static_cast<int64_t>(outbytes.size()));
  }

  // -- instruction execution ---------------------------------------------

  void exec_insn(State& st, const Insn& in, int depth) {
    switch (in.op) {
      case Op::mov_reg_imm:
        if (in.dst >= 0) st.regs[in.dst] = Val::cst(in.imm, PK::imm, in.vaddr);
        break;
      case Op::movk:
        if (in.dst >= 0) {
          Val& d = st.regs[in.dst];
          if (d.is_const()) {
            uint64_t keep = ~(0xFFFFull << in.disp);
            uint64_t v = (static_cast<uint64_t>(d.n) & keep) |
                         (static_cast<uint64_t>(in.imm & 0xFFFF) << in.disp);
            d = Val::cst(static_cast<int64_t>(v), PK::synth, 0);
          } else {
            d = Val::sym();
          }
        }
        break;
      case Op::mov_reg_reg:
        if (in.dst >= 0 && in.src >= 0) st.regs[in.dst] = st.regs[in.src];
        break;
      case Op::lea:
        if (in.dst >= 0) {
          if (in.wild_mem) {
            st.regs[in.dst] = Val::sym();
          } else if (in.base == kRegPc || in.base == kRegNone) {
            st.regs[in.dst] = Val::data(in.disp);
          } else {
            Val a = add_val(st.regs[in.base], in.disp);
            // A constant lea result is an address in disguise.
            if (a.k == VK::constv && img_.in_image(static_cast<uint64_t>(a.n))) {
              a = Val::data(a.n);
            }
            st.regs[in.dst] = a;
          }
        }
        break;
      case Op::load: {
        auto a = eff_addr(st, in);
        if (in.dst >= 0) st.regs[in.dst] = a ? read_mem(st, *a, in.size) : Val::sym();
        apply_wback(st, in);
        break;
      }
      case Op::load_pair: {
        auto a = eff_addr(st, in);
        if (a) {
          if (in.dst >= 0) st.regs[in.dst] = read_mem(st, *a, in.size);
          if (in.src2 >= 0) {
            st.regs[in.src2] = read_mem(st, add_val(*a, in.size), in.size);
          }
        } else {
          if (in.dst >= 0) st.regs[in.dst] = Val::sym();
          if (in.src2 >= 0) st.regs[in.src2] = Val::sym();
        }
        apply_wback(st, in);
        break;
      }
      case Op::store_reg: {
        auto a = eff_addr(st, in);
        if (a && in.src >= 0) write_mem(st, *a, in.size, st.regs[in.src]);
        apply_wback(st, in);
        break;
      }
      case Op::store_pair: {
        auto a = eff_addr(st, in);
        if (a) {
          if (in.src >= 0) write_mem(st, *a, in.size, st.regs[in.src]);
          if (in.src2 >= 0) {
            write_mem(st, add_val(*a, in.size), in.size, st.regs[in.src2]);
          }
        }
        apply_wback(st, in);
        break;
      }
      case Op::store_imm: {
        auto a = eff_addr(st, in);
        if (a) write_mem(st, *a, in.size, Val::cst(in.imm, PK::imm, in.vaddr));
        apply_wback(st, in);
        break;
      }
      case Op::store_havoc: {
        auto a = eff_addr(st, in);
        if (a) havoc_region(st, *a, in.size);
        apply_wback(st, in);
        break;
      }
      case Op::add_imm:
        if (in.dst >= 0 && in.src >= 0) {
          st.regs[in.dst] = add_val(st.regs[in.src], in.imm);
        }
        break;
      case Op::sub_imm:
        if (in.dst >= 0 && in.src >= 0) {
          st.regs[in.dst] = add_val(st.regs[in.src], -in.imm);
        }
        break;
      case Op::push_reg: {
        Val sp = st.regs[abi_.sp_reg];
        Val slot = add_val(sp, -8);
        if (in.src >= 0 && slot.k == VK::stack_addr) {
          write_mem(st, slot, 8, st.regs[in.src]);
        }
        st.regs[abi_.sp_reg] = slot;
        break;
      }
      case Op::pop_reg: {
        Val sp = st.regs[abi_.sp_reg];
        if (in.dst >= 0) {
          st.regs[in.dst] = sp.k == VK::stack_addr ? read_mem(st, sp, 8) : Val::sym();
        }
        st.regs[abi_.sp_reg] = add_val(sp, 8);
        break;
      }
      case Op::cmp_reg_imm:
        if (in.src >= 0) note_compare(st.regs[in.src], in.imm);
        break;
      case Op::cmp_reg_reg:
        if (in.src >= 0) {
          Val rhs = in.src2 >= 0 && in.src2 < 33 ? st.regs[in.src2] : Val::sym();
          note_compare_pair(st.regs[in.src], rhs);
        }
        break;
      case Op::cmp_mem_imm: {
        auto a = eff_addr(st, in);
        if (a) note_compare(read_mem(st, *a, in.size), in.imm);
        break;
      }
      case Op::cmp_mem_reg: {
        auto a = eff_addr(st, in);
        if (a && in.src >= 0) {
          note_compare_pair(read_mem(st, *a, in.size), st.regs[in.src]);
        }
        break;
      }
      case Op::call_direct:
      case Op::call_indirect:
        do_call(st, in, depth);
        break;
      case Op::jmp_direct:
      case Op::jmp_indirect:
        // Tail calls still record their events; the state dies with the
        // block either way.
        if (calls_by_vaddr_.count(in.vaddr)) do_call(st, in, depth);
        break;
      case Op::jcc:
        if (in.src >= 0 && in.src < 33) note_compare(st.regs[in.src], in.imm);
        break;
      case Op::jcc_bit:
        if (in.src >= 0 && in.src < 33) {
          note_compare(st.regs[in.src], std::nullopt);
        }
        break;
      case Op::ret:
      case Op::nop:
        break;
      case Op::other:
        for (int r : in.clobbers) {
          if (r >= 0 && r < 33) st.regs[r] = Val::sym();
        }
        break;
    }
  }

  State interpret_function(const CfgFunction& fn, State in_state, int depth) {
    State exit;
    if (fn.blocks.empty()) return exit;
    chain_.push_back(fn.entry);
    std::map<uint64_t, State> in;
    std::map<uint64_t, int> visits;
    in[fn.entry] = std::move(in_state);
    std::deque<uint64_t> work{fn.entry};
    while (!work.empty()) {
      uint64_t b = work.front();
      work.pop_front();
      auto bit = fn.blocks.find(b);
      if (bit == fn.blocks.end()) continue;
      if (++visits[b] > kMaxBlockVisits) continue;
      State st = in[b];
      if (!st.valid) continue;
      bool aborted = false;
      for (const Insn& insn : bit->second.insns) {
        if (++steps_ > kMaxSteps) {
          aborted = true;
          break;
        }
        exec_insn(st, insn, depth);
      }
      if (aborted) break;
      const Insn& last = bit->second.insns.back();
      if (last.op == Op::ret) {
        join_state(exit, st);
        continue;
      }
      for (uint64_t s : bit->second.succ) {
        if (join_state(in[s], st)) work.push_back(s);
      }
    }
    chain_.pop_back();
    return exit;
  }
};

}  // namespace

// ---- public wrapper --------------------------------------------------

struct BinaryAnalysis::Impl {
  const ElfImage& img;
  const Cfg& cfg;
  std::set<std::string> apis;
  Diagnostics* diags;
  Collector events;
  bool ran = false;

  std::vector<ExtractedBind> binds;
  std::vector<std::string> reserved;
  std::vector<PeerCredCheck> checks;
  std::map<uint64_t, std::vector<ByteFragment>> derivations;
  std::set<std::string> comm_callees;

  Impl(const ElfImage& i, const Cfg& c, std::set<std::string> a, Diagnostics* d)
      : img(i), cfg(c), apis(std::move(a)), diags(d) {}

  void finalize_binds() {
    std::map<uint64_t, std::vector<const BindEvent*>> by_site;
    for (const BindEvent& ev : events.binds) by_site[ev.callsite].push_back(&ev);
    for (auto& [site, evs] : by_site) {
      ExtractedBind b;
      b.callsite = site;
      b.api = evs.front()->api;
      // Conflicting resolutions at one site merge down to symbolic.
      std::set<std::pair<std::string, NamespaceHint>> exacts;
      std::set<std::pair<std::string, NamespaceHint>> partials;
      const BindEvent* exact_ev = nullptr;
      const BindEvent* partial_ev = nullptr;
      for (const BindEvent* ev : evs) {
        if (ev->conf == Confidence::exact) {
          exacts.insert({ev->bytes, ev->hint});
          exact_ev = ev;
        } else if (ev->conf == Confidence::partial) {
          partials.insert({ev->bytes, ev->hint});
          partial_ev = ev;
        }
      }
      if (exacts.size() == 1) {
        b.confidence = Confidence::exact;
        b.address_bytes = exact_ev->bytes;
        b.hint = exact_ev->hint;
        derivations[site] = exact_ev->frags;
      } else if (exacts.empty() && partials.size() == 1) {
        b.confidence = Confidence::partial;
        b.address_bytes = partial_ev->bytes;
        b.hint = partial_ev->hint;
      } else {
        b.confidence = Confidence::symbolic;
      }
      binds.push_back(std::move(b));
    }
  }

  void find_comm_callees() {
    for (const auto& [entry, fn] : cfg.functions) {
      bool has_proc = false;
      bool has_comm = false;
      auto check_string = [&](uint64_t va) {
        std::string s;
        if (!img.string_at(va, s, 128)) return;
        if (s.find("/proc") != std::string::npos) has_proc = true;
        if (s.find("comm") != std::string::npos) has_comm = true;
      };
      for (const auto& [bs, blk] : fn.blocks) {
        for (const Insn& in : blk.insns) {
          if (in.op == Op::lea && (in.base == kRegPc || in.base == kRegNone)) {
            check_string(static_cast<uint64_t>(in.disp));
          } else if (in.op == Op::mov_reg_imm && in.imm > 0 &&
                     img.in_image(static_cast<uint64_t>(in.imm))) {
            check_string(static_cast<uint64_t>(in.imm));
          }
        }
      }
      if (has_proc && has_comm) comm_callees.insert(fn.name);
    }
  }

  void run() {
    if (ran) return;
    ran = true;
    if (img.opaque()) return;
    Interp interp(img, cfg, apis, events, diags);
    for (const auto& [entry, fn] : cfg.functions) interp.run_root(fn);
    finalize_binds();
    reserved.assign(events.reserved.begin(), events.reserved.end());
    for (auto& [site, check] : events.checks) {
      if (check.usages.empty()) continue;  // retrieved but never used
      PeerCredCheck c = check;
      std::sort(c.usages.begin(), c.usages.end(),
                [](const CredUsage& a, const CredUsage& b) {
                  return std::tie(a.field, a.kind, a.comparand, a.callee) <
                         std::tie(b.field, b.kind, b.comparand, b.callee);
                });
      checks.push_back(std::move(c));
    }
    find_comm_callees();
  }
};

BinaryAnalysis::BinaryAnalysis(const ElfImage& img, const Cfg& cfg,
                               std::set<std::string> bind_apis,
                               Diagnostics* diags)
    : impl_(new Impl(img, cfg, std::move(bind_apis), diags)) {}

BinaryAnalysis::~BinaryAnalysis() = default;

void BinaryAnalysis::run() { impl_->run(); }

bool BinaryAnalysis::skipped_static() const { return impl_->img.opaque(); }

const std::vector<ExtractedBind>& BinaryAnalysis::binds() const {
  return impl_->binds;
}

const std::vector<std::string>& BinaryAnalysis::reserved_names() const {
  return impl_->reserved;
}

std::vector<CredModCall> BinaryAnalysis::cred_mods(uint64_t bind_callsite) const {
  std::vector<CredModCall> out;
  const CfgFunction* fn = impl_->cfg.function_containing(bind_callsite);
  if (fn == nullptr) return out;
  // Merge repeated observations of one callsite; arguments that differ
  // across paths degrade to unresolved.
  std::map<uint64_t, CredModCall> merged;
  for (const CredEvent& ev : impl_->events.cred_mods) {
    if (ev.callsite < fn->entry || ev.callsite >= fn->limit) continue;
    bool creation_kind = ev.kind == CredModKind::umask ||
                         ev.kind == CredModKind::seteuid ||
                         ev.kind == CredModKind::setegid;
    CredModPosition pos;
    if (creation_kind && fn->dominates_insn(ev.callsite, bind_callsite)) {
      pos = CredModPosition::before_bind;
    } else if (!creation_kind && fn->dominates_insn(bind_callsite, ev.callsite)) {
      pos = CredModPosition::after_bind;
    } else {
      continue;
    }
    auto it = merged.find(ev.callsite);
    if (it == merged.end()) {
      CredModCall c;
      c.kind = ev.kind;
      c.args = ev.args;
      c.position = pos;
      c.callsite = ev.callsite;
      merged.emplace(ev.callsite, std::move(c));
    } else {
      for (size_t i = 0; i < it->second.args.size() && i < ev.args.size(); ++i) {
        if (it->second.args[i] != ev.args[i]) it->second.args[i] = std::nullopt;
      }
    }
  }
  for (auto& [site, c] : merged) out.push_back(std::move(c));
  return out;
}

const std::vector<PeerCredCheck>& BinaryAnalysis::peer_checks() const {
  return impl_->checks;
}

size_t BinaryAnalysis::nonconst_optname() const {
  return impl_->events.nonconst_optname;
}

bool BinaryAnalysis::close_outside_cleanup(uint64_t bind_callsite) const {
  const CfgFunction* fn = impl_->cfg.function_containing(bind_callsite);
  if (fn == nullptr) return false;
  const BasicBlock* bind_blk = fn->block_of(bind_callsite);
  if (bind_blk == nullptr) return false;

  // Which descriptor does this bind use?  Recover it from the recorded
  // bind event's function: the closes remember the socket() callsite.
  // Without a match on both sides, fall back to "a close in the loop".
  auto loops = fn->natural_loops();
  for (const auto& body : loops) {
    if (!body.count(bind_blk->start)) continue;
    for (const CloseEvent& ev : impl_->events.closes) {
      if (ev.callsite < fn->entry || ev.callsite >= fn->limit) continue;
      const BasicBlock* close_blk = fn->block_of(ev.callsite);
      if (close_blk != nullptr && body.count(close_blk->start)) return true;
    }
  }
  return false;
}

const std::set<std::string>& BinaryAnalysis::comm_reader_callees() const {
  return impl_->comm_callees;
}

const std::vector<ByteFragment>* BinaryAnalysis::derivation(
    uint64_t callsite) const {
  auto it = impl_->derivations.find(callsite);
  return it == impl_->derivations.end() ? nullptr : &it->second;
}

bool BinaryAnalysis::replay_derivation(const ExtractedBind& b) const {
  if (b.confidence != Confidence::exact) return true;
  const std::vector<ByteFragment>* frags = derivation(b.callsite);
  if (frags == nullptr) return b.address_bytes.empty();
  std::string rebuilt;
  for (const ByteFragment& f : *frags) {
    switch (f.kind) {
      case ByteFragment::Kind::image: {
        std::vector<uint8_t> buf(f.bytes.size());
        if (!impl_->img.read_bytes(f.vaddr, buf.size(), buf.data())) return false;
        if (memcmp(buf.data(), f.bytes.data(), buf.size()) != 0) return false;
        rebuilt += f.bytes;
        break;
      }
      case ByteFragment::Kind::literal: {
        // The instruction must exist and carry these bytes in its
        // immediate.
        const ElfSection* sec = impl_->img.section_at(f.vaddr);
        if (sec == nullptr || sec->bytes.empty()) return false;
        uint64_t off = f.vaddr - sec->vaddr;
        Insn insn;
        bool ok = impl_->img.arch == Arch::x86_64
                      ? decode_x86(sec->bytes.data() + off,
                                   sec->bytes.size() - off, f.vaddr, insn)
                      : decode_a64(sec->bytes.data() + off,
                                   sec->bytes.size() - off, f.vaddr, insn);
        if (!ok) return false;
        uint8_t immle[8];
        uint64_t u = static_cast<uint64_t>(insn.imm);
        for (int i = 0; i < 8; ++i) immle[i] = static_cast<uint8_t>(u >> (8 * i));
        bool found = false;
        for (size_t s = 0; s + f.bytes.size() <= 8 && !found; ++s) {
          found = memcmp(immle + s, f.bytes.data(), f.bytes.size()) == 0;
        }
        if (!found) return false;
        rebuilt += f.bytes;
        break;
      }
      case ByteFragment::Kind::synth:
        rebuilt += f.bytes;
        break;
    }
  }
  // The reconstructed bytes must cover the reported address exactly,
  // modulo the leading NUL of abstract names which is structural.
  std::string want = b.address_bytes;
  if (!want.empty() && want[0] == '\0' && !rebuilt.empty() && rebuilt[0] != '\0') {
    want = want.substr(1);
  }
  return rebuilt == want;
}

std::set<std::string> BinaryAnalysis::default_bind_apis() {
  return {"bind",
          "getenv",
          "FrameworkListener",
          "SocketListener",
          "android_get_control_socket",
          "socket_local_server",
          "socket_local_server_bind"};
}

std::set<std::string> BinaryAnalysis::load_bind_apis(const std::string& path) {
  std::set<std::string> out;
  std::ifstream in(path);
  if (!in) throw InputError("bind-api-list", "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    std::string t(trim(line));
    if (t.empty() || t[0] == '#') continue;
    out.insert(std::move(t));
  }
  return out;
}

std::vector<ExtractedBind> extract_bind_addresses(const Cfg& cfg,
                                                  const ElfImage& bin) {
  BinaryAnalysis a(bin, cfg, BinaryAnalysis::default_bind_apis(), nullptr);
  a.run();
  return a.binds();
}

std::vector<std::string> extract_reserved_getenv(const Cfg& cfg,
                                                 const ElfImage& bin) {
  BinaryAnalysis a(bin, cfg, BinaryAnalysis::default_bind_apis(), nullptr);
  a.run();
  return a.reserved_names();
}

std::vector<CredModCall> extract_cred_mods(const Cfg& cfg, const ElfImage& bin,
                                           uint64_t bind_callsite) {
  BinaryAnalysis a(bin, cfg, BinaryAnalysis::default_bind_apis(), nullptr);
  a.run();
  return a.cred_mods(bind_callsite);
}

PeerCheckScan extract_peer_checks(const Cfg& cfg, const ElfImage& bin) {
  BinaryAnalysis a(bin, cfg, BinaryAnalysis::default_bind_apis(), nullptr);
  a.run();
  PeerCheckScan scan;
  scan.checks = a.peer_checks();
  scan.nonconst_optname = a.nonconst_optname();
  return scan;
}

bool detect_close_outside_cleanup(const Cfg& cfg, const ElfImage& bin,
                                  uint64_t bind_callsite) {
  BinaryAnalysis a(bin, cfg, BinaryAnalysis::default_bind_apis(), nullptr);
  a.run();
  return a.close_outside_cleanup(bind_callsite);
}

CheckStrength classify_check_strength(const PeerCredCheck& check,
                                      const std::set<std::string>& callee_hints) {
  if (check.usages.empty()) return CheckStrength::none;
  bool has_uid_gid = check.creds_used.count(CredField::uid) ||
                     check.creds_used.count(CredField::gid);
  if (has_uid_gid) return CheckStrength::secure;
  if (check.creds_used.count(CredField::pid)) {
    for (const CredUsage& u : check.usages) {
      if (u.kind == UsageKind::function_arg && u.field == CredField::pid &&
          callee_hints.count(u.callee)) {
        return CheckStrength::spoofable;
      }
    }
    return CheckStrength::weak;
  }
  return CheckStrength::none;
}

}  // namespace udsaudit

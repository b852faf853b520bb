#include "bir/cosim.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace bir::cosim {

using namespace bir::isa;
using namespace bir::lift;

uint64_t trial_seed(uint64_t seed, uint64_t index) {
  // splitmix64 over the pair
  uint64_t z = seed + index * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Env related_env(const MachState &s) {
  Env env;
  for (unsigned i = 0; i <= 30; i++)
    env.bind(reg_var(i), BType::reg(64), BValue::word(64, s.r[i]));
  env.bind(SP_VAR, BType::reg(64), BValue::word(64, s.sp));
  for (char f : {'N', 'Z', 'C', 'V'})
    env.bind(flag_var(f), BType::reg(1), BValue::word(1, s.flag(f) ? 1 : 0));
  env.bind(MEM_VAR, BType::mem(64), BValue::mem(MemBytes(64, s.mem)));
  return env;
}

BirState make_related(const MachState &s) {
  return BirState::at(related_env(s), Label::of_addr(s.pc));
}

MachState mach_of_bir(const BirState &bs) {
  MachState s;
  auto word_of = [&](const std::string &name) -> uint64_t {
    const TypedValue *tv = bs.env.find(name);
    return tv && tv->value.is_word() ? tv->value.bits() : 0;
  };
  for (unsigned i = 0; i <= 30; i++) s.r[i] = word_of(reg_var(i));
  s.sp = word_of(SP_VAR);
  for (char f : {'N', 'Z', 'C', 'V'}) s.set_flag(f, word_of(flag_var(f)) & 1);
  if (const TypedValue *tv = bs.env.find(MEM_VAR))
    if (tv->value.is_mem()) s.mem = tv->value.memory().bytes();
  s.pc = bs.pc.is_string ? 0 : bs.pc.addr;
  return s;
}

std::string relation_mismatch(const BirState &bs, const MachState &s) {
  if (!bs.running()) return "ir state is an error state";
  if (bs.pc.is_string || bs.pc.addr != s.pc) {
    std::ostringstream o;
    o << "pc: ir " << bs.pc.str() << " vs machine 0x" << std::hex << s.pc;
    return o.str();
  }
  auto word_is = [&](const std::string &name, uint64_t want) {
    const TypedValue *tv = bs.env.find(name);
    return tv && tv->value.is_word() && tv->value.width() == 64 &&
           tv->value.bits() == want;
  };
  for (unsigned i = 0; i <= 30; i++)
    if (!word_is(reg_var(i), s.r[i])) return "register " + reg_var(i);
  if (!word_is(SP_VAR, s.sp)) return "SP";
  for (char f : {'N', 'Z', 'C', 'V'}) {
    const TypedValue *tv = bs.env.find(flag_var(f));
    if (!tv || !tv->value.is_word() || tv->value.width() != 1 ||
        tv->value.bits() != (s.flag(f) ? 1u : 0u))
      return std::string("flag ") + f;
  }
  const TypedValue *mem = bs.env.find(MEM_VAR);
  if (!mem || !mem->value.is_mem() ||
      mem->value.memory().addr_width() != 64 ||
      !(mem->value.memory().bytes() == s.mem))
    return "memory";
  return "";
}

// ---- trial generation ----

namespace {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}
  uint64_t word() { return gen(); }
  uint64_t below(uint64_t n) { return gen() % n; }
  bool coin() { return gen() & 1; }
};

void install_program(MachState &s, const LiftedProgram &lp) {
  for (auto &[ad, w] : lp.source) s.wr(ad, w, 4);
}

void randomize_state(MachState &s, Rng &rng) {
  for (unsigned i = 0; i <= 30; i++) {
    switch (rng.below(4)) {
    case 0: s.r[i] = rng.word(); break;
    case 1: s.r[i] = rng.below(32); break;
    case 2: s.r[i] = 0x10000 + rng.below(0x10000) * 8; break;
    default: s.r[i] = ~0ULL - rng.below(16); break;
    }
  }
  s.sp = 0x100000 + rng.below(0x8000) * 8;
  s.n = rng.coin();
  s.z = rng.coin();
  s.c = rng.coin();
  s.v = rng.coin();
}

void collect_aligned(const MExprPtr &e, std::vector<MExprPtr> &out) {
  if (!e) return;
  if (e->kind == MExpr::Kind::Aligned) out.push_back(e);
  collect_aligned(e->a, out);
  collect_aligned(e->b, out);
  collect_aligned(e->c, out);
}

std::optional<FieldId> first_base_field(const MExprPtr &e) {
  if (!e) return std::nullopt;
  if (e->kind == MExpr::Kind::Reg) return FieldId::reg(e->reg);
  if (e->kind == MExpr::Kind::Sp) return FieldId::sp();
  for (const MExprPtr &c : {e->a, e->b, e->c})
    if (c)
      if (auto f = first_base_field(c)) return f;
  return std::nullopt;
}

void shift_base(MachState &s, const FieldId &f, uint64_t delta) {
  if (f.kind == FieldId::Kind::Reg)
    s.r[f.idx] += delta;
  else if (f.kind == FieldId::Kind::Sp)
    s.sp += delta;
}

// Moves the base register of an address expression so the expression
// evaluates to `target` (address expressions in the subset are base
// plus constant, so one shift suffices).
bool aim_addr(MachState &s, const MExprPtr &addr, uint64_t target) {
  auto base = first_base_field(addr);
  if (!base) return false;
  uint64_t cur = meval(addr, s).bits;
  shift_base(s, *base, target - cur);
  return meval(addr, s).bits == target;
}

bool try_flags(MachState &s, const MExprPtr &guard, Rng &rng) {
  unsigned start = unsigned(rng.below(16));
  bool sn = s.n, sz = s.z, sc = s.c, sv = s.v;
  for (unsigned k = 0; k < 16; k++) {
    unsigned bits = (start + k) & 0xF;
    s.n = bits & 1;
    s.z = bits & 2;
    s.c = bits & 4;
    s.v = bits & 8;
    if (guard_holds(guard, s)) return true;
  }
  s.n = sn;
  s.z = sz;
  s.c = sc;
  s.v = sv;
  return false;
}

// Repairs a candidate state until the guard holds: flag enumeration,
// alignment fixes, and zero/nonzero register probes cover the guard
// shapes the step function produces.
bool adjust_for_guard(MachState &s, const MExprPtr &guard, Rng &rng) {
  if (guard_holds(guard, s)) return true;
  if (try_flags(s, guard, rng)) return true;
  std::vector<MExprPtr> aligns;
  collect_aligned(guard, aligns);
  for (const MExprPtr &al : aligns) {
    uint64_t cur = meval(al->a, s).bits;
    uint64_t delta = cur % al->nbytes;
    if (delta != 0)
      if (auto base = first_base_field(al->a)) shift_base(s, *base, -delta);
  }
  if (guard_holds(guard, s)) return true;
  if (auto f = first_base_field(guard)) {
    uint64_t saved = f->kind == FieldId::Kind::Sp ? s.sp : s.r[f->idx];
    for (uint64_t cand : {uint64_t(0), rng.word() | 1, saved}) {
      if (f->kind == FieldId::Kind::Sp)
        s.sp = cand;
      else
        s.r[f->idx] = cand;
      if (guard_holds(guard, s)) return true;
      if (try_flags(s, guard, rng)) return true;
    }
  }
  return guard_holds(guard, s);
}

// Scatters random bytes around every address the case can touch, then
// re-installs the program so stored() still holds.
void scatter_memory(MachState &s, const GuardedEffect &ge,
                    const LiftedProgram &lp, Rng &rng) {
  std::vector<MExprPtr> addrs;
  auto collect_access = [&](auto &&self, const MExprPtr &e) -> void {
    if (!e) return;
    if (e->kind == MExpr::Kind::Read || e->kind == MExpr::Kind::Write)
      addrs.push_back(e->b);
    self(self, e->a);
    self(self, e->b);
    self(self, e->c);
  };
  collect_access(collect_access, ge.guard);
  for (auto &[f, e] : ge.updates) collect_access(collect_access, e);
  for (const MExprPtr &a : addrs) {
    uint64_t base = meval(a, s).bits;
    for (uint64_t off = 0; off < 24; off++)
      if (rng.coin()) s.wr(base - 8 + off, uint8_t(rng.word()), 1);
  }
  install_program(s, lp);
}

std::map<uint64_t, uint8_t> memr_bytes(const MachState &s,
                                       const MemRegion &memr) {
  std::map<uint64_t, uint8_t> out;
  for (auto &[lo, hi] : memr.intervals)
    for (uint64_t a = lo; a < hi; a++) {
      uint8_t b = s.rd8(a);
      if (b) out[a] = b;
    }
  return out;
}

const MExprPtr *first_write_addr(const GuardedEffect &ge) {
  for (auto &[f, e] : ge.updates) {
    if (f.kind != FieldId::Kind::Mem) continue;
    const MExpr *cur = e.get();
    while (cur) {
      if (cur->kind == MExpr::Kind::Write) return &cur->b;
      cur = cur->a.get();
    }
  }
  return nullptr;
}

} // namespace

ValidationReport check_instruction(const LiftedProgram &lp, uint64_t at,
                                   int trials, uint64_t seed) {
  ValidationReport rep;
  rep.at = at;
  for (auto &[ad, w] : lp.source)
    if (ad == at) rep.word = w;

  auto cases_it = lp.cases.find(at);
  if (cases_it == lp.cases.end()) {
    rep.mismatches.push_back(
        {at, "unsupported", "no behavior cases recorded for this address", {}});
    return rep;
  }
  const std::vector<GuardedEffect> &cases = cases_it->second;

  // Trial modes: one per behavior case, plus misaligned / protected-hit /
  // protected-edge probes for memory-touching cases.
  enum class Mode { Case, Misaligned, MemrHit, MemrEdge };
  std::vector<std::pair<Mode, size_t>> modes;
  for (size_t j = 0; j < cases.size(); j++) modes.emplace_back(Mode::Case, j);
  for (size_t j = 0; j < cases.size(); j++) {
    std::vector<MExprPtr> aligns;
    collect_aligned(cases[j].guard, aligns);
    if (!aligns.empty()) modes.emplace_back(Mode::Misaligned, j);
    if (first_write_addr(cases[j]) && !lp.memr.empty()) {
      modes.emplace_back(Mode::MemrHit, j);
      modes.emplace_back(Mode::MemrEdge, j);
    }
  }

  for (int t = 0; t < trials; t++) {
    Rng rng(trial_seed(seed, uint64_t(t)));
    auto [mode, j] = modes[size_t(t) % modes.size()];
    const GuardedEffect &ge = cases[j];

    MachState s;
    randomize_state(s, rng);
    s.pc = at;

    bool prepared = true;
    switch (mode) {
    case Mode::Case:
      prepared = adjust_for_guard(s, ge.guard, rng);
      break;
    case Mode::Misaligned: {
      std::vector<MExprPtr> aligns;
      collect_aligned(ge.guard, aligns);
      prepared = !aligns.empty();
      if (prepared) {
        adjust_for_guard(s, ge.guard, rng);
        uint64_t a = meval(aligns[0]->a, s).bits;
        if (auto base = first_base_field(aligns[0]->a))
          shift_base(s, *base, 1 + rng.below(aligns[0]->nbytes - 1));
        else
          prepared = false;
        (void)a;
      }
      break;
    }
    case Mode::MemrHit:
    case Mode::MemrEdge: {
      adjust_for_guard(s, ge.guard, rng);
      const MExprPtr *wa = first_write_addr(ge);
      prepared = wa != nullptr;
      if (prepared) {
        auto [lo, hi] = lp.memr.intervals[rng.below(lp.memr.intervals.size())];
        uint64_t align = 8;
        std::vector<MExprPtr> aligns;
        collect_aligned(ge.guard, aligns);
        if (!aligns.empty()) align = aligns[0]->nbytes;
        uint64_t target = mode == Mode::MemrHit ? (lo + align - 1) / align * align
                                                : (hi + align - 1) / align * align;
        prepared = aim_addr(s, *wa, target);
      }
      break;
    }
    }
    if (!prepared) {
      rep.skipped++;
      continue;
    }
    scatter_memory(s, ge, lp, rng);
    rep.trials++;

    auto before_memr = memr_bytes(s, lp.memr);
    StepResult mr = mach_step(s);
    bool machine_wrote_memr =
        mr.ok() && !(memr_bytes(mr.next, lp.memr) == before_memr);

    LabelSet ls = lp.entry_labels;
    if (mr.ok()) ls.insert(Label::of_addr(mr.next.pc));
    WeakResult br = weak_exec(lp.program, make_related(s), ls, 64);

    auto fail = [&](const std::string &kind, const std::string &detail) {
      if (rep.mismatches.size() < 10)
        rep.mismatches.push_back({at, kind, detail, s});
    };

    if (br.diverged) {
      fail("divergence", "instruction fragment did not terminate");
      continue;
    }
    if (br.state.type_error()) {
      fail("type-error", "ir execution hit a type error");
      continue;
    }
    if (br.state.failed()) {
      if (!mr.ok() || machine_wrote_memr) {
        rep.acceptable_failures++;
      } else {
        fail("spurious-failure",
             "ir failed but the machine stepped without touching protected memory");
      }
      continue;
    }
    if (!mr.ok()) {
      fail("missed-failure", "machine stuck but ir did not fail");
      continue;
    }
    std::string diff = relation_mismatch(br.state, mr.next);
    if (!diff.empty()) {
      fail("relation", diff);
      continue;
    }
    if (machine_wrote_memr) {
      fail("frame", "protected memory changed in an accepted trial");
      continue;
    }
    rep.related_ok++;
  }
  return rep;
}

ValidationReport check_program_sim(const LiftedProgram &lp, int steps,
                                   int trials, uint64_t seed) {
  ValidationReport rep;
  rep.at = lp.entry;

  for (int t = 0; t < trials; t++) {
    Rng rng(trial_seed(seed ^ 0xC0517EC0517EULL, uint64_t(t)));
    MachState s;
    randomize_state(s, rng);
    // Stack window away from the program's own memory.
    for (int guard = 0; guard < 64 && lp.memr.contains(s.sp); guard++)
      s.sp += 0x10000;
    for (uint64_t off = 0; off < 256; off++)
      if (rng.coin()) s.wr(s.sp - 128 + off, uint8_t(rng.word()), 1);
    install_program(s, lp);
    s.pc = lp.entry;
    rep.trials++;

    BirState bs = make_related(s);
    for (int k = 0; k < steps; k++) {
      if (!lp.entry_labels.count(Label::of_addr(s.pc))) break; // exited

      auto before_memr = memr_bytes(s, lp.memr);
      StepResult mr = mach_step(s);
      bool wrote_memr =
          mr.ok() && !(memr_bytes(mr.next, lp.memr) == before_memr);

      auto fail = [&](const std::string &kind, const std::string &detail) {
        if (rep.mismatches.size() < 10)
          rep.mismatches.push_back({s.pc, kind, detail, s});
      };

      // Forward direction: machine first, then the IR to the next
      // instruction label.
      LabelSet ls = lp.entry_labels;
      if (mr.ok()) ls.insert(Label::of_addr(mr.next.pc));
      WeakResult br = weak_exec(lp.program, bs, ls, 4096);
      if (br.diverged) {
        fail("divergence", "ir did not reach the next instruction label");
        break;
      }
      if (br.state.type_error()) {
        fail("type-error", "ir execution hit a type error");
        break;
      }
      if (br.state.failed()) {
        if (!mr.ok() || wrote_memr)
          rep.acceptable_failures++; // covers self-modification
        else
          fail("spurious-failure", "ir failed but the machine stepped");
        break;
      }
      if (!mr.ok()) {
        fail("missed-failure", "machine stuck but ir did not fail");
        break;
      }
      std::string diff = relation_mismatch(br.state, mr.next);
      if (!diff.empty()) {
        fail("relation", diff);
        break;
      }

      // Reverse direction: drive the IR first from the related state and
      // replay the machine from its inverse image.
      WeakResult bir_first = weak_exec(lp.program, bs, lp.entry_labels, 4096);
      if (bir_first.state.running() && !bir_first.state.pc.is_string) {
        StepResult replay = mach_step(mach_of_bir(bs));
        if (!replay.ok()) {
          fail("replay", "machine replay stuck where ir succeeded");
          break;
        }
        std::string rdiff = relation_mismatch(bir_first.state, replay.next);
        if (!rdiff.empty()) {
          fail("replay-relation", rdiff);
          break;
        }
      }

      s = mr.next;
      bs = br.state;
      if (k + 1 == steps) rep.related_ok++;
    }
  }
  return rep;
}

// ---- mutation harness ----

namespace {

// All single-node edits of an expression, excluding known-equivalent
// rewrites. Each result shares unchanged structure with the original.
void expr_mutants(const ExprPtr &e,
                  std::vector<std::pair<std::string, ExprPtr>> &out) {
  if (!e) return;
  auto rebuild = [&](ExprPtr a, ExprPtr b, ExprPtr c) {
    BExpr n = *e;
    n.a = std::move(a);
    n.b = std::move(b);
    n.c = std::move(c);
    return std::make_shared<const BExpr>(std::move(n));
  };

  if (e->kind == BExpr::Kind::BinOp) {
    auto is_zero = [](const ExprPtr &x) {
      return x->kind == BExpr::Kind::ConstWord && x->bits == 0;
    };
    auto swap_to = [&](BinOpK k, const char *name) {
      BExpr n = *e;
      n.bin = k;
      out.emplace_back(name, std::make_shared<const BExpr>(std::move(n)));
    };
    switch (e->bin) {
    case BinOpK::Add:
      if (!is_zero(e->a) && !is_zero(e->b)) swap_to(BinOpK::Sub, "add->sub");
      break;
    case BinOpK::Sub:
      if (!is_zero(e->a) && !is_zero(e->b)) swap_to(BinOpK::Add, "sub->add");
      break;
    case BinOpK::And: swap_to(BinOpK::Or, "and->or"); break;
    case BinOpK::Or: swap_to(BinOpK::Xor, "or->xor"); break;
    case BinOpK::Xor: swap_to(BinOpK::And, "xor->and"); break;
    case BinOpK::Ult: swap_to(BinOpK::Slt, "ult->slt"); break;
    case BinOpK::Slt: swap_to(BinOpK::Ult, "slt->ult"); break;
    default: break;
    }
  }
  if (e->kind == BExpr::Kind::ConstWord && e->width >= 8) {
    BExpr n = *e;
    n.bits = (e->bits + 1) & mask_bits(e->width);
    out.emplace_back("const+1", std::make_shared<const BExpr>(std::move(n)));
    BExpr m = *e;
    m.bits = (e->bits + 4) & mask_bits(e->width);
    out.emplace_back("const+4", std::make_shared<const BExpr>(std::move(m)));
  }
  if (e->kind == BExpr::Kind::UnOp &&
      (e->un == UnOpK::ZExt || e->un == UnOpK::SExt)) {
    BExpr n = *e;
    n.un = e->un == UnOpK::ZExt ? UnOpK::SExt : UnOpK::ZExt;
    out.emplace_back("extend-kind", std::make_shared<const BExpr>(std::move(n)));
  }

  std::vector<std::pair<std::string, ExprPtr>> child;
  expr_mutants(e->a, child);
  for (auto &[d, m] : child) out.emplace_back(d, rebuild(m, e->b, e->c));
  child.clear();
  expr_mutants(e->b, child);
  for (auto &[d, m] : child) out.emplace_back(d, rebuild(e->a, m, e->c));
  child.clear();
  expr_mutants(e->c, child);
  for (auto &[d, m] : child) out.emplace_back(d, rebuild(e->a, e->b, m));
}

} // namespace

std::vector<Mutant> enumerate_mutants(const LiftedProgram &lp) {
  std::vector<Mutant> out;
  for (size_t bi = 0; bi < lp.program.blocks.size(); bi++) {
    const BirBlock &b = lp.program.blocks[bi];
    auto addr = instr_addr_of_label(b.label);
    if (!addr || !lp.cases.count(*addr)) continue;

    auto add = [&](const std::string &desc, BirProgram prog) {
      out.push_back({b.label.str() + ": " + desc, *addr, std::move(prog)});
    };

    for (size_t si = 0; si < b.stmts.size(); si++) {
      std::vector<std::pair<std::string, ExprPtr>> muts;
      expr_mutants(b.stmts[si].e, muts);
      for (auto &[desc, m] : muts) {
        BirProgram p = lp.program;
        p.blocks[bi].stmts[si].e = m;
        add(desc, std::move(p));
      }
      if (b.stmts[si].kind == BirStmt::Kind::Assign) {
        BirProgram p = lp.program;
        p.blocks[bi].stmts.erase(p.blocks[bi].stmts.begin() + long(si));
        add("drop " + b.stmts[si].var + " update", std::move(p));
      }
    }
    if (b.cf.kind == CfStmt::Kind::CJmp &&
        !expr_equal(b.cf.target, b.cf.else_target)) {
      BirProgram p = lp.program;
      std::swap(p.blocks[bi].cf.target, p.blocks[bi].cf.else_target);
      add("swap branch targets", std::move(p));
    }
    if (b.cf.kind == CfStmt::Kind::Jmp) {
      std::vector<std::pair<std::string, ExprPtr>> muts;
      expr_mutants(b.cf.target, muts);
      for (auto &[desc, m] : muts) {
        BirProgram p = lp.program;
        p.blocks[bi].cf.target = m;
        add("jump " + desc, std::move(p));
      }
    }
  }
  return out;
}

MutationOutcome mutation_campaign(const LiftedProgram &lp, size_t count,
                                  int trials_per_mutant, uint64_t seed) {
  std::vector<Mutant> all = enumerate_mutants(lp);
  std::mt19937_64 gen(trial_seed(seed, 0xD15EA5E));
  std::shuffle(all.begin(), all.end(), gen);
  if (all.size() > count) all.resize(count);

  MutationOutcome out;
  out.total = all.size();
  for (size_t i = 0; i < all.size(); i++) {
    LiftedProgram mutated = lp;
    mutated.program = all[i].program;
    ValidationReport r = check_instruction(mutated, all[i].instr_addr,
                                           trials_per_mutant, seed + i);
    if (!r.passed())
      out.killed++;
    else
      out.survivors.push_back(all[i].description);
  }
  return out;
}

} // namespace bir::cosim

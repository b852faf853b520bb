#include "bir/lifter.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace bir::lift {

using namespace bir::isa;

std::string reg_var(unsigned i) { return "R" + std::to_string(i); }
const char *const SP_VAR = "SP";
const char *const MEM_VAR = "MEM";
std::string flag_var(char f) { return std::string(1, f); }

std::optional<FieldId> field_of_var(const std::string &name) {
  if (name == SP_VAR) return FieldId::sp();
  if (name == MEM_VAR) return FieldId::mem();
  if (name.size() == 1 && (name[0] == 'N' || name[0] == 'Z' ||
                           name[0] == 'C' || name[0] == 'V'))
    return FieldId::flagf(name[0]);
  if (name.size() >= 2 && name[0] == 'R') {
    unsigned i = 0;
    for (size_t k = 1; k < name.size(); k++) {
      if (!isdigit((unsigned char)name[k])) return std::nullopt;
      i = i * 10 + unsigned(name[k] - '0');
    }
    if (i <= 30) return FieldId::reg(i);
  }
  return std::nullopt;
}

std::string var_of_field(const FieldId &f) {
  switch (f.kind) {
  case FieldId::Kind::Reg: return reg_var(f.idx);
  case FieldId::Kind::Sp: return SP_VAR;
  case FieldId::Kind::Flag: return flag_var(f.flag);
  case FieldId::Kind::Mem: return MEM_VAR;
  case FieldId::Kind::Pc: return "PC";
  }
  return "?";
}

MemRegion MemRegion::of(std::vector<std::pair<uint64_t, uint64_t>> raw) {
  std::sort(raw.begin(), raw.end());
  MemRegion r;
  for (auto &[lo, hi] : raw) {
    if (lo >= hi) continue;
    if (!r.intervals.empty() && lo <= r.intervals.back().second)
      r.intervals.back().second = std::max(r.intervals.back().second, hi);
    else
      r.intervals.emplace_back(lo, hi);
  }
  return r;
}

namespace {

unsigned mwidth(const MExprPtr &e) {
  switch (e->kind) {
  case MExpr::Kind::Const: return e->width;
  case MExpr::Kind::Reg:
  case MExpr::Kind::Sp: return 64;
  case MExpr::Kind::Flag: return 1;
  case MExpr::Kind::Mem: return 0;
  case MExpr::Kind::Bin:
    switch (e->bin) {
    case MBinK::Eq:
    case MBinK::Ult:
    case MBinK::BoolAnd:
    case MBinK::BoolOr: return 1;
    default: return mwidth(e->a);
    }
  case MExpr::Kind::Un:
    return e->un == MUnK::Not ? mwidth(e->a) : e->width;
  case MExpr::Kind::Read: return e->nbytes * 8;
  case MExpr::Kind::Write: return 0;
  default: return 1; // predicates
  }
}

ExprPtr trunc1(ExprPtr e) { return cast(UnOpK::Trunc, 1, std::move(e)); }

} // namespace

ExprPtr translate_mach_expr(const MExprPtr &e) {
  switch (e->kind) {
  case MExpr::Kind::Const: return const_word(e->width, e->bits);
  case MExpr::Kind::Reg: return var(reg_var(e->reg));
  case MExpr::Kind::Sp: return var(SP_VAR);
  case MExpr::Kind::Flag: return var(flag_var(e->flag));
  case MExpr::Kind::Mem: return var(MEM_VAR);
  case MExpr::Kind::Bin: {
    ExprPtr a = translate_mach_expr(e->a);
    ExprPtr b = translate_mach_expr(e->b);
    switch (e->bin) {
    case MBinK::Add: return binop(BinOpK::Add, a, b);
    case MBinK::Sub: return binop(BinOpK::Sub, a, b);
    case MBinK::And: return binop(BinOpK::And, a, b);
    case MBinK::Or: return binop(BinOpK::Or, a, b);
    case MBinK::Xor: return binop(BinOpK::Xor, a, b);
    case MBinK::Eq: return binop(BinOpK::Eq, a, b);
    case MBinK::Ult: return binop(BinOpK::Ult, a, b);
    case MBinK::BoolAnd: return binop(BinOpK::BAnd, a, b);
    case MBinK::BoolOr: return binop(BinOpK::BOr, a, b);
    }
    break;
  }
  case MExpr::Kind::Un: {
    ExprPtr a = translate_mach_expr(e->a);
    switch (e->un) {
    case MUnK::Not: return unop(UnOpK::Not, a);
    case MUnK::ZExt: return cast(UnOpK::ZExt, e->width, a);
    case MUnK::Trunc: return cast(UnOpK::Trunc, e->width, a);
    }
    break;
  }
  case MExpr::Kind::Read:
    return load(translate_mach_expr(e->a), translate_mach_expr(e->b),
                e->nbytes * 8);
  case MExpr::Kind::Write:
    return store(translate_mach_expr(e->a), translate_mach_expr(e->b),
                 translate_mach_expr(e->c), e->nbytes * 8);
  case MExpr::Kind::CarryAdd:
    // [x] + [y] >= 2^n  <=>  (~x) <u y
    return binop(BinOpK::Ult, unop(UnOpK::Not, translate_mach_expr(e->a)),
                 translate_mach_expr(e->b));
  case MExpr::Kind::CarrySub:
    // [x] + [~y] + 1 >= 2^n  <=>  not (x <u y)
    return unop(UnOpK::Not,
                binop(BinOpK::Ult, translate_mach_expr(e->a),
                      translate_mach_expr(e->b)));
  case MExpr::Kind::OvfAdd: {
    unsigned w = mwidth(e->a);
    ExprPtr x = translate_mach_expr(e->a);
    ExprPtr y = translate_mach_expr(e->b);
    ExprPtr r = binop(BinOpK::Add, x, y);
    ExprPtr bits = binop(BinOpK::And, binop(BinOpK::Xor, x, r),
                         binop(BinOpK::Xor, y, r));
    return trunc1(binop(BinOpK::Lshr, bits, const_word(w, w - 1)));
  }
  case MExpr::Kind::OvfSub: {
    unsigned w = mwidth(e->a);
    ExprPtr x = translate_mach_expr(e->a);
    ExprPtr y = translate_mach_expr(e->b);
    ExprPtr r = binop(BinOpK::Sub, x, y);
    ExprPtr bits = binop(BinOpK::And, binop(BinOpK::Xor, x, y),
                         binop(BinOpK::Xor, x, r));
    return trunc1(binop(BinOpK::Lshr, bits, const_word(w, w - 1)));
  }
  case MExpr::Kind::Aligned: {
    unsigned w = mwidth(e->a);
    return binop(BinOpK::Eq,
                 binop(BinOpK::And, translate_mach_expr(e->a),
                       const_word(w, e->nbytes - 1)),
                 const_word(w, 0));
  }
  case MExpr::Kind::Msb: {
    unsigned w = mwidth(e->a);
    return trunc1(binop(BinOpK::Lshr, translate_mach_expr(e->a),
                        const_word(w, w - 1)));
  }
  }
  throw std::invalid_argument("translate_mach_expr: unsupported operator");
}

namespace {

bool is_true_const(const MExprPtr &e) {
  return e->kind == MExpr::Kind::Const && e->width == 1 && e->bits == 1;
}
bool is_not_of(const MExprPtr &e, const MExprPtr &base) {
  return e->kind == MExpr::Kind::Un && e->un == MUnK::Not && e->a == base;
}

// The guard disjunction is trivially true for single always-enabled cases
// and for complementary branch pairs.
bool guards_cover(const std::vector<GuardedEffect> &cases) {
  for (const auto &c : cases)
    if (is_true_const(c.guard)) return true;
  if (cases.size() == 2)
    return is_not_of(cases[1].guard, cases[0].guard) ||
           is_not_of(cases[0].guard, cases[1].guard);
  return false;
}

// All (address, nbytes) writes inside an update expression.
void collect_writes(const MExprPtr &e,
                    std::vector<std::pair<MExprPtr, unsigned>> &out) {
  if (!e) return;
  if (e->kind == MExpr::Kind::Write) out.emplace_back(e->b, e->nbytes);
  collect_writes(e->a, out);
  collect_writes(e->b, out);
  collect_writes(e->c, out);
}

// exp_m: every written byte address lies outside every protected
// interval, as per-byte range comparisons.
ExprPtr memr_assertion(const GuardedEffect &ge, const MemRegion &memr) {
  if (memr.empty()) return nullptr;
  std::vector<std::pair<MExprPtr, unsigned>> writes;
  for (const auto &[f, e] : ge.updates)
    if (f.kind == FieldId::Kind::Mem) collect_writes(e, writes);
  if (writes.empty()) return nullptr;
  ExprPtr conj;
  for (const auto &[addr_m, nbytes] : writes) {
    ExprPtr addr = translate_mach_expr(addr_m);
    unsigned w = mwidth(addr_m);
    for (unsigned k = 0; k < nbytes; k++) {
      ExprPtr byte_addr =
          k == 0 ? addr : binop(BinOpK::Add, addr, const_word(w, k));
      for (const auto &[lo, hi] : memr.intervals) {
        ExprPtr outside = binop(
            BinOpK::BOr, binop(BinOpK::Ult, byte_addr, const_word(w, lo)),
            unop(UnOpK::Not, binop(BinOpK::Ult, byte_addr, const_word(w, hi))));
        conj = conj ? band(conj, outside) : outside;
      }
    }
  }
  return conj;
}

std::string internal_label(uint64_t at, const std::string &suffix) {
  return std::to_string(at) + "-" + suffix;
}

const MExprPtr *pc_update(const GuardedEffect &ge) {
  for (const auto &[f, e] : ge.updates)
    if (f.kind == FieldId::Kind::Pc) return &e;
  return nullptr;
}

bool pc_only(const GuardedEffect &ge) {
  for (const auto &[f, e] : ge.updates)
    if (f.kind != FieldId::Kind::Pc) return false;
  return true;
}

// Body statements and control flow for one case.
void emit_case_body(const GuardedEffect &ge, const MemRegion &memr,
                    std::vector<BirStmt> &stmts, CfStmt &cf) {
  if (ExprPtr m = memr_assertion(ge, memr)) stmts.push_back(BirStmt::assert_(m));

  const MExprPtr *pc_e = pc_update(ge);
  if (!pc_e) throw std::logic_error("case without a pc update");

  // A field written by this case needs a temporary iff another update
  // (including the jump target) reads it.
  std::vector<std::pair<FieldId, MExprPtr>> writes;
  for (const auto &up : ge.updates)
    if (up.first.kind != FieldId::Kind::Pc) writes.push_back(up);

  auto read_by_other = [&](const FieldId &f) {
    for (const auto &[g, e] : ge.updates) {
      if (g == f) continue;
      if (mexpr_reads(e, f)) return true;
    }
    return false;
  };

  std::vector<bool> tmp(writes.size(), false);
  for (size_t i = 0; i < writes.size(); i++)
    tmp[i] = read_by_other(writes[i].first);
  bool pc_reads_written = false;
  for (const auto &w : writes)
    if (mexpr_reads(*pc_e, w.first)) pc_reads_written = true;

  // Temporaries capture pre-state values first, then plain updates, then
  // the captured values are copied into their fields.
  for (size_t i = 0; i < writes.size(); i++)
    if (tmp[i])
      stmts.push_back(BirStmt::assign("tmp_" + var_of_field(writes[i].first),
                                      translate_mach_expr(writes[i].second)));
  ExprPtr pc_expr;
  if (pc_reads_written) {
    stmts.push_back(BirStmt::assign("tmp_PC", translate_mach_expr(*pc_e)));
    pc_expr = var("tmp_PC");
  }
  for (size_t i = 0; i < writes.size(); i++)
    if (!tmp[i])
      stmts.push_back(BirStmt::assign(var_of_field(writes[i].first),
                                      translate_mach_expr(writes[i].second)));
  for (size_t i = 0; i < writes.size(); i++)
    if (tmp[i])
      stmts.push_back(BirStmt::assign(var_of_field(writes[i].first),
                                      var("tmp_" + var_of_field(writes[i].first))));

  if (!pc_expr) {
    if ((*pc_e)->kind == MExpr::Kind::Const)
      pc_expr = const_word(64, (*pc_e)->bits);
    else
      pc_expr = translate_mach_expr(*pc_e);
  }
  cf = CfStmt::jmp(pc_expr);
}

} // namespace

std::vector<BirBlock> lift_effects(const std::vector<GuardedEffect> &cases,
                                   uint64_t at, const MemRegion &memr) {
  if (cases.empty()) throw std::invalid_argument("lift_effects: no cases");
  std::vector<BirBlock> out;

  ExprPtr exp_c;
  if (!guards_cover(cases)) {
    MExprPtr disj = cases[0].guard;
    for (size_t j = 1; j < cases.size(); j++)
      disj = mbin(MBinK::BoolOr, disj, cases[j].guard);
    exp_c = translate_mach_expr(disj);
  }

  if (cases.size() == 1) {
    // Single case: merged with the entry block.
    BirBlock b;
    b.label = Label::of_addr(at);
    if (exp_c) b.stmts.push_back(BirStmt::assert_(exp_c));
    emit_case_body(cases[0], memr, b.stmts, b.cf);
    out.push_back(std::move(b));
    return out;
  }

  // Case targets: a pc-only case with a constant target needs no block.
  std::vector<ExprPtr> targets(cases.size());
  std::vector<bool> needs_block(cases.size(), false);
  for (size_t j = 0; j < cases.size(); j++) {
    const MExprPtr *pc_e = pc_update(cases[j]);
    if (!pc_e) throw std::logic_error("case without a pc update");
    if (pc_only(cases[j]) && (*pc_e)->kind == MExpr::Kind::Const) {
      targets[j] = const_word(64, (*pc_e)->bits);
    } else {
      needs_block[j] = true;
      targets[j] = const_label(internal_label(at, std::to_string(j + 1)));
    }
  }

  // Entry block routes to the case whose guard holds; with more than two
  // cases a selector chain tests one guard per block.
  BirBlock entry;
  entry.label = Label::of_addr(at);
  if (exp_c) entry.stmts.push_back(BirStmt::assert_(exp_c));
  ExprPtr next_sel =
      cases.size() == 2
          ? targets[1]
          : const_label(internal_label(at, "sel2"));
  entry.cf = CfStmt::cjmp(translate_mach_expr(cases[0].guard), targets[0],
                          next_sel);
  out.push_back(std::move(entry));

  for (size_t j = 1; j + 1 < cases.size(); j++) {
    BirBlock sel;
    sel.label = Label::of_name(internal_label(at, "sel" + std::to_string(j + 1)));
    ExprPtr fallthrough =
        j + 2 == cases.size()
            ? targets[j + 1]
            : const_label(internal_label(at, "sel" + std::to_string(j + 2)));
    sel.cf = CfStmt::cjmp(translate_mach_expr(cases[j].guard), targets[j],
                          fallthrough);
    out.push_back(std::move(sel));
  }

  for (size_t j = 0; j < cases.size(); j++) {
    if (!needs_block[j]) continue;
    BirBlock b;
    b.label = Label::of_name(internal_label(at, std::to_string(j + 1)));
    emit_case_body(cases[j], memr, b.stmts, b.cf);
    out.push_back(std::move(b));
  }
  return out;
}

LiftInstrResult lift_instruction(uint32_t word, uint64_t at,
                                 const MemRegion &memr) {
  LiftInstrResult r;
  DecodeResult d = decode(word, at);
  if (!d.ok) {
    BirBlock b;
    b.label = Label::of_addr(at);
    b.stmts.push_back(BirStmt::assert_(bfalse()));
    b.cf = CfStmt::jmp(const_word(64, at + 4));
    r.blocks.push_back(std::move(b));
    return r;
  }
  r.supported = true;
  r.instr = d.instr;
  r.cases = step_cases(d.instr, at);
  r.blocks = lift_effects(r.cases, at, memr);
  return r;
}

std::variant<LiftedProgram, LiftError>
lift_program(std::vector<std::pair<uint64_t, uint32_t>> words, uint64_t entry) {
  if (words.empty()) return LiftError{"no instructions"};
  std::sort(words.begin(), words.end());
  for (size_t i = 0; i < words.size(); i++) {
    if (words[i].first % 4 != 0)
      return LiftError{"instruction address not 4-aligned"};
    if (i > 0 && words[i].first == words[i - 1].first)
      return LiftError{"duplicate instruction address"};
  }
  bool entry_ok = false;
  for (auto &[ad, w] : words) entry_ok |= ad == entry;
  if (!entry_ok) return LiftError{"entry address is not in the program"};

  LiftedProgram lp;
  lp.entry = entry;
  lp.source = words;
  std::vector<std::pair<uint64_t, uint64_t>> ranges;
  for (auto &[ad, w] : words) ranges.emplace_back(ad, ad + 4);
  lp.memr = MemRegion::of(std::move(ranges));

  std::map<uint32_t, DecodeResult> decode_cache;
  for (auto &[ad, w] : words) {
    lp.entry_labels.insert(Label::of_addr(ad));
    auto it = decode_cache.find(w);
    if (it == decode_cache.end())
      it = decode_cache.emplace(w, decode(w, ad)).first;
    else
      lp.decode_cache_hits++;
    LiftInstrResult r;
    if (!it->second.ok) {
      r = lift_instruction(w, ad, lp.memr);
    } else {
      r.supported = true;
      r.instr = it->second.instr;
      r.cases = step_cases(it->second.instr, ad);
      r.blocks = lift_effects(r.cases, ad, lp.memr);
    }
    if (!r.supported)
      lp.unsupported.push_back(ad);
    else
      lp.cases.emplace(ad, std::move(r.cases));
    for (auto &b : r.blocks) lp.program.blocks.push_back(std::move(b));
  }
  return lp;
}

std::optional<uint64_t> instr_addr_of_label(const Label &l) {
  if (!l.is_string) return l.addr;
  uint64_t v = 0;
  size_t i = 0;
  for (; i < l.name.size() && isdigit((unsigned char)l.name[i]); i++)
    v = v * 10 + uint64_t(l.name[i] - '0');
  if (i == 0 || i == l.name.size() || l.name[i] != '-') return std::nullopt;
  return v;
}

} // namespace bir::lift

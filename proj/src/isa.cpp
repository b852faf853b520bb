#include "bir/isa.hpp"

#include "bir/expr.hpp" // mask_bits

#include <stdexcept>

namespace bir::isa {

using bir::mask_bits;

// ---- decoder ----

namespace {

int64_t sext_field(uint64_t v, unsigned bits) {
  uint64_t sign = 1ULL << (bits - 1);
  return (v & sign) ? int64_t(v) - int64_t(1ULL << bits) : int64_t(v);
}

} // namespace

DecodeResult decode(uint32_t w, uint64_t) {
  Instr i;

  // add/sub immediate: sf op S 100010 sh imm12 Rn Rd (64-bit only)
  if (((w >> 23) & 0x3F) == 0x22 && (w >> 31) == 1) {
    i.kind = Instr::Kind::AddSubImm;
    i.sub = (w >> 30) & 1;
    i.setflags = (w >> 29) & 1;
    unsigned sh = (w >> 22) & 1;
    i.imm = uint64_t((w >> 10) & 0xFFF) << (sh ? 12 : 0);
    i.rn = (w >> 5) & 0x1F;
    i.dst = w & 0x1F;
    return DecodeResult::of(i, w);
  }
  // add/sub shifted register, LSL #0: sf op S 01011 00 0 Rm 000000 Rn Rd
  if (((w >> 24) & 0x1F) == 0x0B && (w >> 31) == 1 && ((w >> 21) & 1) == 0 &&
      ((w >> 22) & 3) == 0 && ((w >> 10) & 0x3F) == 0) {
    i.kind = Instr::Kind::AddSubReg;
    i.sub = (w >> 30) & 1;
    i.setflags = (w >> 29) & 1;
    i.rm = (w >> 16) & 0x1F;
    i.rn = (w >> 5) & 0x1F;
    i.dst = w & 0x1F;
    return DecodeResult::of(i, w);
  }
  // and/orr/eor shifted register, LSL #0: sf opc 01010 00 N Rm imm6 Rn Rd
  if (((w >> 24) & 0x1F) == 0x0A && (w >> 31) == 1 && ((w >> 21) & 1) == 0 &&
      ((w >> 22) & 3) == 0 && ((w >> 10) & 0x3F) == 0) {
    unsigned opc = (w >> 29) & 3;
    if (opc != 3) { // ANDS excluded from the subset
      i.kind = Instr::Kind::LogicReg;
      i.logic = opc == 0   ? Instr::LogicOp::And
                : opc == 1 ? Instr::LogicOp::Or
                           : Instr::LogicOp::Xor;
      i.rm = (w >> 16) & 0x1F;
      i.rn = (w >> 5) & 0x1F;
      i.dst = w & 0x1F;
      return DecodeResult::of(i, w);
    }
  }
  // movn/movz/movk: sf opc 100101 hw imm16 Rd
  if (((w >> 23) & 0x3F) == 0x25 && (w >> 31) == 1) {
    unsigned opc = (w >> 29) & 3;
    if (opc != 1) {
      i.kind = Instr::Kind::MovWide;
      i.mov = opc == 0   ? Instr::MovKind::Movn
              : opc == 2 ? Instr::MovKind::Movz
                         : Instr::MovKind::Movk;
      i.hw = (w >> 21) & 3;
      i.imm = (w >> 5) & 0xFFFF;
      i.dst = w & 0x1F;
      return DecodeResult::of(i, w);
    }
  }
  // ldr/str unsigned immediate offset, 32/64-bit: size 111001 opc imm12 Rn Rt
  if (((w >> 24) & 0x3F) == 0x39) {
    unsigned size = w >> 30;
    unsigned opc = (w >> 22) & 3;
    if ((size == 2 || size == 3) && (opc == 0 || opc == 1)) {
      i.kind = Instr::Kind::LdrStr;
      i.load = opc == 1;
      i.size = size == 3 ? 8 : 4;
      i.imm = uint64_t((w >> 10) & 0xFFF) * i.size;
      i.rn = (w >> 5) & 0x1F;
      i.rt = w & 0x1F;
      return DecodeResult::of(i, w);
    }
  }
  // b: 000101 imm26
  if ((w >> 26) == 0x05) {
    i.kind = Instr::Kind::B;
    i.offset = sext_field(w & 0x3FFFFFF, 26) * 4;
    return DecodeResult::of(i, w);
  }
  // b.cond: 01010100 imm19 0 cond
  if ((w >> 24) == 0x54 && ((w >> 4) & 1) == 0) {
    i.kind = Instr::Kind::BCond;
    i.cond = w & 0xF;
    i.offset = sext_field((w >> 5) & 0x7FFFF, 19) * 4;
    return DecodeResult::of(i, w);
  }
  // cbz/cbnz 64-bit: 1011010 op imm19 Rt
  if ((w >> 25) == 0x5A) {
    i.kind = ((w >> 24) & 1) ? Instr::Kind::Cbnz : Instr::Kind::Cbz;
    i.rt = w & 0x1F;
    i.offset = sext_field((w >> 5) & 0x7FFFF, 19) * 4;
    return DecodeResult::of(i, w);
  }
  // ret
  if ((w & 0xFFFFFC1F) == 0xD65F0000) {
    i.kind = Instr::Kind::Ret;
    i.rn = (w >> 5) & 0x1F;
    return DecodeResult::of(i, w);
  }
  // nop
  if (w == 0xD503201F) {
    i.kind = Instr::Kind::Nop;
    return DecodeResult::of(i, w);
  }
  return DecodeResult::unsupported(w);
}

// ---- expression construction ----

namespace {
MExprPtr mk(MExpr e) { return std::make_shared<const MExpr>(std::move(e)); }
} // namespace

MExprPtr mconst(unsigned width, uint64_t bits) {
  MExpr e;
  e.kind = MExpr::Kind::Const;
  e.width = width;
  e.bits = bits & mask_bits(width);
  return mk(std::move(e));
}
MExprPtr mreg(unsigned i) {
  if (i > 30) throw std::invalid_argument("mreg: register index > 30");
  MExpr e;
  e.kind = MExpr::Kind::Reg;
  e.reg = i;
  return mk(std::move(e));
}
MExprPtr msp() {
  MExpr e;
  e.kind = MExpr::Kind::Sp;
  return mk(std::move(e));
}
MExprPtr mmem() {
  MExpr e;
  e.kind = MExpr::Kind::Mem;
  return mk(std::move(e));
}
MExprPtr mflag(char f) {
  MExpr e;
  e.kind = MExpr::Kind::Flag;
  e.flag = f;
  return mk(std::move(e));
}
MExprPtr mbin(MBinK op, MExprPtr a, MExprPtr b) {
  MExpr e;
  e.kind = MExpr::Kind::Bin;
  e.bin = op;
  e.a = std::move(a);
  e.b = std::move(b);
  return mk(std::move(e));
}
MExprPtr mnot(MExprPtr a) {
  MExpr e;
  e.kind = MExpr::Kind::Un;
  e.un = MUnK::Not;
  e.a = std::move(a);
  return mk(std::move(e));
}
MExprPtr mzext(unsigned width, MExprPtr a) {
  MExpr e;
  e.kind = MExpr::Kind::Un;
  e.un = MUnK::ZExt;
  e.width = width;
  e.a = std::move(a);
  return mk(std::move(e));
}
MExprPtr mtrunc(unsigned width, MExprPtr a) {
  MExpr e;
  e.kind = MExpr::Kind::Un;
  e.un = MUnK::Trunc;
  e.width = width;
  e.a = std::move(a);
  return mk(std::move(e));
}
MExprPtr mread(MExprPtr mem, MExprPtr addr, unsigned nbytes) {
  MExpr e;
  e.kind = MExpr::Kind::Read;
  e.nbytes = nbytes;
  e.a = std::move(mem);
  e.b = std::move(addr);
  return mk(std::move(e));
}
MExprPtr mwrite(MExprPtr mem, MExprPtr addr, MExprPtr value, unsigned nbytes) {
  MExpr e;
  e.kind = MExpr::Kind::Write;
  e.nbytes = nbytes;
  e.a = std::move(mem);
  e.b = std::move(addr);
  e.c = std::move(value);
  return mk(std::move(e));
}
static MExprPtr mk2(MExpr::Kind k, MExprPtr a, MExprPtr b) {
  MExpr e;
  e.kind = k;
  e.a = std::move(a);
  e.b = std::move(b);
  return mk(std::move(e));
}
MExprPtr mcarry_add(MExprPtr x, MExprPtr y) { return mk2(MExpr::Kind::CarryAdd, std::move(x), std::move(y)); }
MExprPtr mcarry_sub(MExprPtr x, MExprPtr y) { return mk2(MExpr::Kind::CarrySub, std::move(x), std::move(y)); }
MExprPtr movf_add(MExprPtr x, MExprPtr y) { return mk2(MExpr::Kind::OvfAdd, std::move(x), std::move(y)); }
MExprPtr movf_sub(MExprPtr x, MExprPtr y) { return mk2(MExpr::Kind::OvfSub, std::move(x), std::move(y)); }
MExprPtr maligned(MExprPtr addr, unsigned nbytes) {
  MExpr e;
  e.kind = MExpr::Kind::Aligned;
  e.nbytes = nbytes;
  e.a = std::move(addr);
  return mk(std::move(e));
}
MExprPtr mmsb(MExprPtr x) {
  MExpr e;
  e.kind = MExpr::Kind::Msb;
  e.a = std::move(x);
  return mk(std::move(e));
}
MExprPtr mtrue() { return mconst(1, 1); }

std::string FieldId::str() const {
  switch (kind) {
  case Kind::Reg: return "r" + std::to_string(idx);
  case Kind::Sp: return "sp";
  case Kind::Pc: return "pc";
  case Kind::Flag: return std::string(1, flag);
  case Kind::Mem: return "mem";
  }
  return "?";
}

// ---- condition codes ----

MExprPtr cond_expr(unsigned cond) {
  MExprPtr one = mconst(1, 1), zero = mconst(1, 0);
  MExprPtr base;
  switch (cond >> 1) {
  case 0: base = mbin(MBinK::Eq, mflag('Z'), one); break; // EQ/NE
  case 1: base = mbin(MBinK::Eq, mflag('C'), one); break; // CS/CC
  case 2: base = mbin(MBinK::Eq, mflag('N'), one); break; // MI/PL
  case 3: base = mbin(MBinK::Eq, mflag('V'), one); break; // VS/VC
  case 4: // HI/LS: C=1 and Z=0
    base = mbin(MBinK::BoolAnd, mbin(MBinK::Eq, mflag('C'), one),
                mbin(MBinK::Eq, mflag('Z'), zero));
    break;
  case 5: base = mbin(MBinK::Eq, mflag('N'), mflag('V')); break; // GE/LT
  case 6: // GT/LE: Z=0 and N=V
    base = mbin(MBinK::BoolAnd, mbin(MBinK::Eq, mflag('Z'), zero),
                mbin(MBinK::Eq, mflag('N'), mflag('V')));
    break;
  default:
    return mtrue(); // AL and NV both behave as always
  }
  if (cond & 1) return mnot(base);
  return base;
}

const char *cond_name(unsigned cond) {
  static const char *names[] = {"eq", "ne", "cs", "cc", "mi", "pl",
                                "vs", "vc", "hi", "ls", "ge", "lt",
                                "gt", "le", "al", "nv"};
  return names[cond & 0xF];
}

// ---- step cases ----

namespace {

MExprPtr xreg_or_zero(unsigned i) { return i == 31 ? mconst(64, 0) : mreg(i); }
MExprPtr xreg_or_sp(unsigned i) { return i == 31 ? msp() : mreg(i); }

void add_flag_updates(std::vector<std::pair<FieldId, MExprPtr>> &ups,
                      const MExprPtr &a, const MExprPtr &b,
                      const MExprPtr &res, bool is_sub) {
  ups.emplace_back(FieldId::flagf('N'), mmsb(res));
  ups.emplace_back(FieldId::flagf('Z'), mbin(MBinK::Eq, res, mconst(64, 0)));
  ups.emplace_back(FieldId::flagf('C'),
                   is_sub ? mcarry_sub(a, b) : mcarry_add(a, b));
  ups.emplace_back(FieldId::flagf('V'),
                   is_sub ? movf_sub(a, b) : movf_add(a, b));
}

GuardedEffect with_next_pc(std::vector<std::pair<FieldId, MExprPtr>> ups,
                           uint64_t at, MExprPtr guard = nullptr) {
  ups.emplace_back(FieldId::pc(), mconst(64, at + 4));
  return {guard ? guard : mtrue(), std::move(ups)};
}

} // namespace

std::vector<GuardedEffect> step_cases(const Instr &i, uint64_t at) {
  std::vector<std::pair<FieldId, MExprPtr>> ups;
  switch (i.kind) {
  case Instr::Kind::AddSubImm: {
    MExprPtr a = xreg_or_sp(i.rn);
    MExprPtr b = mconst(64, i.imm);
    MExprPtr res = mbin(i.sub ? MBinK::Sub : MBinK::Add, a, b);
    if (i.dst != 31)
      ups.emplace_back(FieldId::reg(i.dst), res);
    else if (!i.setflags)
      ups.emplace_back(FieldId::sp(), res);
    if (i.setflags) add_flag_updates(ups, a, b, res, i.sub);
    return {with_next_pc(std::move(ups), at)};
  }
  case Instr::Kind::AddSubReg: {
    MExprPtr a = xreg_or_zero(i.rn);
    MExprPtr b = xreg_or_zero(i.rm);
    MExprPtr res = mbin(i.sub ? MBinK::Sub : MBinK::Add, a, b);
    if (i.dst != 31) ups.emplace_back(FieldId::reg(i.dst), res);
    if (i.setflags) add_flag_updates(ups, a, b, res, i.sub);
    return {with_next_pc(std::move(ups), at)};
  }
  case Instr::Kind::LogicReg: {
    MBinK op = i.logic == Instr::LogicOp::And  ? MBinK::And
               : i.logic == Instr::LogicOp::Or ? MBinK::Or
                                               : MBinK::Xor;
    if (i.dst != 31)
      ups.emplace_back(FieldId::reg(i.dst),
                       mbin(op, xreg_or_zero(i.rn), xreg_or_zero(i.rm)));
    return {with_next_pc(std::move(ups), at)};
  }
  case Instr::Kind::MovWide: {
    uint64_t sh = i.hw * 16;
    if (i.dst != 31) {
      MExprPtr val;
      switch (i.mov) {
      case Instr::MovKind::Movz: val = mconst(64, i.imm << sh); break;
      case Instr::MovKind::Movn: val = mconst(64, ~(i.imm << sh)); break;
      case Instr::MovKind::Movk:
        val = mbin(MBinK::Or,
                   mbin(MBinK::And, mreg(i.dst),
                        mconst(64, ~(uint64_t(0xFFFF) << sh))),
                   mconst(64, i.imm << sh));
        break;
      }
      ups.emplace_back(FieldId::reg(i.dst), val);
    }
    return {with_next_pc(std::move(ups), at)};
  }
  case Instr::Kind::LdrStr: {
    MExprPtr addr = mbin(MBinK::Add, xreg_or_sp(i.rn), mconst(64, i.imm));
    MExprPtr guard = maligned(addr, i.size);
    if (i.load) {
      if (i.rt != 31) {
        MExprPtr v = mread(mmem(), addr, i.size);
        if (i.size == 4) v = mzext(64, v);
        ups.emplace_back(FieldId::reg(i.rt), v);
      }
    } else {
      MExprPtr v = xreg_or_zero(i.rt);
      if (i.size == 4) v = mtrunc(32, v);
      ups.emplace_back(FieldId::mem(), mwrite(mmem(), addr, v, i.size));
    }
    return {with_next_pc(std::move(ups), at, guard)};
  }
  case Instr::Kind::B: {
    ups.emplace_back(FieldId::pc(), mconst(64, at + uint64_t(i.offset)));
    return {{mtrue(), std::move(ups)}};
  }
  case Instr::Kind::BCond: {
    MExprPtr g = cond_expr(i.cond);
    GuardedEffect taken{g, {{FieldId::pc(), mconst(64, at + uint64_t(i.offset))}}};
    GuardedEffect fall{mnot(g), {{FieldId::pc(), mconst(64, at + 4)}}};
    return {taken, fall};
  }
  case Instr::Kind::Cbz:
  case Instr::Kind::Cbnz: {
    MExprPtr z = mbin(MBinK::Eq, xreg_or_zero(i.rt), mconst(64, 0));
    MExprPtr g = i.kind == Instr::Kind::Cbz ? z : mnot(z);
    GuardedEffect taken{g, {{FieldId::pc(), mconst(64, at + uint64_t(i.offset))}}};
    GuardedEffect fall{mnot(g), {{FieldId::pc(), mconst(64, at + 4)}}};
    return {taken, fall};
  }
  case Instr::Kind::Ret: {
    MExprPtr t = xreg_or_zero(i.rn);
    GuardedEffect ge{maligned(t, 4), {{FieldId::pc(), t}}};
    return {ge};
  }
  case Instr::Kind::Nop:
    return {with_next_pc({}, at)};
  }
  return {};
}

// ---- evaluation ----

namespace {
MVal word_val(unsigned w, uint64_t bits) {
  MVal v;
  v.width = w;
  v.bits = bits & mask_bits(w);
  return v;
}
} // namespace

MVal meval(const MExprPtr &e, const MachState &s) {
  switch (e->kind) {
  case MExpr::Kind::Const: return word_val(e->width, e->bits);
  case MExpr::Kind::Reg: return word_val(64, s.r[e->reg]);
  case MExpr::Kind::Sp: return word_val(64, s.sp);
  case MExpr::Kind::Flag: return word_val(1, s.flag(e->flag) ? 1 : 0);
  case MExpr::Kind::Mem: {
    MVal v;
    v.is_mem = true;
    v.mem = std::make_shared<const std::map<uint64_t, uint8_t>>(s.mem);
    return v;
  }
  case MExpr::Kind::Bin: {
    MVal a = meval(e->a, s), b = meval(e->b, s);
    unsigned w = a.width;
    switch (e->bin) {
    case MBinK::Add: return word_val(w, a.bits + b.bits);
    case MBinK::Sub: return word_val(w, a.bits - b.bits);
    case MBinK::And: return word_val(w, a.bits & b.bits);
    case MBinK::Or: return word_val(w, a.bits | b.bits);
    case MBinK::Xor: return word_val(w, a.bits ^ b.bits);
    case MBinK::Eq: return word_val(1, a.bits == b.bits ? 1 : 0);
    case MBinK::Ult: return word_val(1, a.bits < b.bits ? 1 : 0);
    case MBinK::BoolAnd: return word_val(1, (a.bits & b.bits) & 1);
    case MBinK::BoolOr: return word_val(1, (a.bits | b.bits) & 1);
    }
    return {};
  }
  case MExpr::Kind::Un: {
    MVal a = meval(e->a, s);
    switch (e->un) {
    case MUnK::Not: return word_val(a.width, ~a.bits);
    case MUnK::ZExt: return word_val(e->width, a.bits);
    case MUnK::Trunc: return word_val(e->width, a.bits);
    }
    return {};
  }
  case MExpr::Kind::Read: {
    MVal m = meval(e->a, s), a = meval(e->b, s);
    uint64_t v = 0;
    for (unsigned k = 0; k < e->nbytes; k++) {
      auto it = m.mem->find(a.bits + k);
      v |= uint64_t(it == m.mem->end() ? 0 : it->second) << (8 * k);
    }
    return word_val(e->nbytes * 8, v);
  }
  case MExpr::Kind::Write: {
    MVal m = meval(e->a, s), a = meval(e->b, s), v = meval(e->c, s);
    auto out = std::make_shared<std::map<uint64_t, uint8_t>>(*m.mem);
    for (unsigned k = 0; k < e->nbytes; k++) {
      uint8_t b = uint8_t(v.bits >> (8 * k));
      if (b == 0)
        out->erase(a.bits + k);
      else
        (*out)[a.bits + k] = b;
    }
    MVal r;
    r.is_mem = true;
    r.mem = std::move(out);
    return r;
  }
  case MExpr::Kind::CarryAdd: {
    // Natural-number definition: [x] + [y] >= 2^w.
    MVal x = meval(e->a, s), y = meval(e->b, s);
    unsigned __int128 sum = (unsigned __int128)x.bits + y.bits;
    return word_val(1, sum >= ((unsigned __int128)1 << x.width) ? 1 : 0);
  }
  case MExpr::Kind::CarrySub: {
    // [x] + [~y] + 1 >= 2^w.
    MVal x = meval(e->a, s), y = meval(e->b, s);
    unsigned __int128 sum = (unsigned __int128)x.bits +
                            (~y.bits & mask_bits(x.width)) + 1;
    return word_val(1, sum >= ((unsigned __int128)1 << x.width) ? 1 : 0);
  }
  case MExpr::Kind::OvfAdd: {
    MVal x = meval(e->a, s), y = meval(e->b, s);
    unsigned w = x.width;
    uint64_t r = (x.bits + y.bits) & mask_bits(w);
    bool sx = (x.bits >> (w - 1)) & 1, sy = (y.bits >> (w - 1)) & 1,
         sr = (r >> (w - 1)) & 1;
    return word_val(1, (sx == sy && sr != sx) ? 1 : 0);
  }
  case MExpr::Kind::OvfSub: {
    MVal x = meval(e->a, s), y = meval(e->b, s);
    unsigned w = x.width;
    uint64_t r = (x.bits - y.bits) & mask_bits(w);
    bool sx = (x.bits >> (w - 1)) & 1, sy = (y.bits >> (w - 1)) & 1,
         sr = (r >> (w - 1)) & 1;
    return word_val(1, (sx != sy && sr != sx) ? 1 : 0);
  }
  case MExpr::Kind::Aligned: {
    MVal a = meval(e->a, s);
    return word_val(1, a.bits % e->nbytes == 0 ? 1 : 0);
  }
  case MExpr::Kind::Msb: {
    MVal a = meval(e->a, s);
    return word_val(1, (a.bits >> (a.width - 1)) & 1);
  }
  }
  return {};
}

bool guard_holds(const MExprPtr &guard, const MachState &s) {
  MVal v = meval(guard, s);
  return !v.is_mem && v.width == 1 && v.bits == 1;
}

MachState apply_effect(const GuardedEffect &ge, const MachState &s) {
  // Evaluate every update against the pre-state, then commit.
  std::vector<std::pair<FieldId, MVal>> vals;
  vals.reserve(ge.updates.size());
  for (const auto &[f, e] : ge.updates) vals.emplace_back(f, meval(e, s));
  MachState out = s;
  for (auto &[f, v] : vals) {
    switch (f.kind) {
    case FieldId::Kind::Reg: out.r[f.idx] = v.bits; break;
    case FieldId::Kind::Sp: out.sp = v.bits; break;
    case FieldId::Kind::Pc: out.pc = v.bits; break;
    case FieldId::Kind::Flag: out.set_flag(f.flag, v.bits & 1); break;
    case FieldId::Kind::Mem: out.mem = *v.mem; break;
    }
  }
  return out;
}

bool mexpr_reads(const MExprPtr &e, const FieldId &f) {
  if (!e) return false;
  switch (e->kind) {
  case MExpr::Kind::Reg:
    if (f.kind == FieldId::Kind::Reg && f.idx == e->reg) return true;
    break;
  case MExpr::Kind::Sp:
    if (f.kind == FieldId::Kind::Sp) return true;
    break;
  case MExpr::Kind::Flag:
    if (f.kind == FieldId::Kind::Flag && f.flag == e->flag) return true;
    break;
  case MExpr::Kind::Mem:
    if (f.kind == FieldId::Kind::Mem) return true;
    break;
  default: break;
  }
  return mexpr_reads(e->a, f) || mexpr_reads(e->b, f) || mexpr_reads(e->c, f);
}

StepResult mach_step(const MachState &s) {
  uint32_t w = uint32_t(s.rd(s.pc, 4));
  DecodeResult d = decode(w, s.pc);
  if (!d.ok) return {StepResult::Kind::StuckUndecodable, {}, w};
  for (const GuardedEffect &ge : step_cases(d.instr, s.pc)) {
    if (guard_holds(ge.guard, s))
      return {StepResult::Kind::Ok, apply_effect(ge, s), w};
  }
  return {StepResult::Kind::StuckUnpredictable, {}, w};
}

} // namespace bir::isa

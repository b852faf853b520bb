// Reference model of an A64 subset: machine state, instruction decoder,
// and a step function that returns guarded state transformations (one
// guard + transform per behavior case of an instruction). The guards and
// update expressions are kept symbolic so the lifter can translate them;
// the interpreter evaluates the same structures.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace bir::isa {

// Machine state: 31 general 64-bit registers (r30 is the link register),
// stack pointer, program counter, NZCV flags, byte-addressable memory
// with default byte 0.
struct MachState {
  std::array<uint64_t, 31> r{};
  uint64_t sp = 0;
  uint64_t pc = 0;
  bool n = false, z = false, c = false, v = false;
  std::map<uint64_t, uint8_t> mem;

  uint8_t rd8(uint64_t a) const {
    auto it = mem.find(a);
    return it == mem.end() ? 0 : it->second;
  }
  uint64_t rd(uint64_t a, unsigned nbytes) const {
    uint64_t v_ = 0;
    for (unsigned i = 0; i < nbytes; i++) v_ |= uint64_t(rd8(a + i)) << (8 * i);
    return v_;
  }
  void wr(uint64_t a, uint64_t value, unsigned nbytes) {
    for (unsigned i = 0; i < nbytes; i++) {
      uint8_t b = uint8_t(value >> (8 * i));
      if (b == 0)
        mem.erase(a + i);
      else
        mem[a + i] = b;
    }
  }
  bool flag(char f) const {
    switch (f) {
    case 'N': return n;
    case 'Z': return z;
    case 'C': return c;
    default: return v;
    }
  }
  void set_flag(char f, bool val) {
    switch (f) {
    case 'N': n = val; break;
    case 'Z': z = val; break;
    case 'C': c = val; break;
    default: v = val; break;
    }
  }
};

// ---- decoded instructions ----

struct Instr {
  enum class Kind {
    AddSubImm, // add/adds/sub/subs Xd|SP, Xn|SP, #imm{, lsl 12}
    AddSubReg, // add/adds/sub/subs Xd, Xn, Xm   (LSL #0 form)
    LogicReg,  // and/orr/eor Xd, Xn, Xm         (LSL #0 form)
    MovWide,   // movz/movn/movk Xd, #imm16{, lsl #hw*16}
    LdrStr,    // ldr/str Xt|Wt, [Xn|SP, #scaled-imm12]
    B,         // unconditional pc-relative branch
    BCond,     // conditional branch on NZCV
    Cbz,       // compare-and-branch on zero
    Cbnz,
    Ret,       // indirect branch through a register
    Nop,
  };
  enum class LogicOp { And, Or, Xor };
  enum class MovKind { Movn, Movz, Movk };

  Kind kind = Kind::Nop;
  bool sub = false;
  bool setflags = false;
  bool load = false;
  unsigned dst = 0, rn = 0, rm = 0, rt = 0;
  uint64_t imm = 0;   // AddSubImm shifted immediate; MovWide imm16
  unsigned hw = 0;    // MovWide shift / 16
  MovKind mov = MovKind::Movz;
  LogicOp logic = LogicOp::And;
  unsigned size = 0;  // LdrStr access bytes (4 or 8)
  int64_t offset = 0; // pc-relative byte offset (B/BCond/Cbz/Cbnz)
  unsigned cond = 0;  // BCond condition field
};

struct DecodeResult {
  bool ok = false;
  Instr instr;
  uint32_t raw = 0;
  static DecodeResult unsupported(uint32_t w) { return {false, {}, w}; }
  static DecodeResult of(Instr i, uint32_t w) { return {true, i, w}; }
};

// Exact encodings of the supported subset; everything else is
// Unsupported (carrying the raw word).
DecodeResult decode(uint32_t word, uint64_t at);

// ---- symbolic machine expressions ----

struct MExpr;
using MExprPtr = std::shared_ptr<const MExpr>;

enum class MBinK { Add, Sub, And, Or, Xor, Eq, Ult, BoolAnd, BoolOr };
enum class MUnK { Not, ZExt, Trunc };

struct MExpr {
  enum class Kind {
    Const,    // width, bits
    Reg,      // reg index (value of r(i) in the pre-state)
    Sp, Mem,  // stack pointer / whole memory
    Flag,     // one NZCV flag as a 1-bit value
    Bin, Un,
    Read,     // Read(mem, addr, nbytes), little-endian
    Write,    // Write(mem, addr, value, nbytes)
    CarryAdd, // [x] + [y] >= 2^width(x)
    CarrySub, // [x] + [~y] + 1 >= 2^width(x)
    OvfAdd,   // signed overflow of x + y
    OvfSub,   // signed overflow of x - y
    Aligned,  // address is a multiple of nbytes
    Msb,      // most significant bit as a 1-bit value
  };
  Kind kind;
  unsigned width = 0;  // Const width; cast target width
  uint64_t bits = 0;   // Const value
  unsigned reg = 0;
  char flag = 'N';
  MBinK bin = MBinK::Add;
  MUnK un = MUnK::Not;
  unsigned nbytes = 0; // Read/Write size; Aligned alignment
  MExprPtr a, b, c;
};

MExprPtr mconst(unsigned width, uint64_t bits);
MExprPtr mreg(unsigned i);
MExprPtr msp();
MExprPtr mmem();
MExprPtr mflag(char f);
MExprPtr mbin(MBinK op, MExprPtr a, MExprPtr b);
MExprPtr mnot(MExprPtr a);
MExprPtr mzext(unsigned width, MExprPtr a);
MExprPtr mtrunc(unsigned width, MExprPtr a);
MExprPtr mread(MExprPtr mem, MExprPtr addr, unsigned nbytes);
MExprPtr mwrite(MExprPtr mem, MExprPtr addr, MExprPtr value, unsigned nbytes);
MExprPtr mcarry_add(MExprPtr x, MExprPtr y);
MExprPtr mcarry_sub(MExprPtr x, MExprPtr y);
MExprPtr movf_add(MExprPtr x, MExprPtr y);
MExprPtr movf_sub(MExprPtr x, MExprPtr y);
MExprPtr maligned(MExprPtr addr, unsigned nbytes);
MExprPtr mmsb(MExprPtr x);
MExprPtr mtrue();

// Machine state fields assignable by an instruction.
struct FieldId {
  enum class Kind { Reg, Sp, Pc, Flag, Mem };
  Kind kind = Kind::Pc;
  unsigned idx = 0;
  char flag = 'N';

  static FieldId reg(unsigned i) { return {Kind::Reg, i, 'N'}; }
  static FieldId sp() { return {Kind::Sp, 0, 'N'}; }
  static FieldId pc() { return {Kind::Pc, 0, 'N'}; }
  static FieldId flagf(char f) { return {Kind::Flag, 0, f}; }
  static FieldId mem() { return {Kind::Mem, 0, 'N'}; }
  bool operator==(const FieldId &o) const {
    return kind == o.kind && idx == o.idx && flag == o.flag;
  }
  std::string str() const;
};

// One behavior case: the transform is total on states satisfying the
// guard. All update expressions read the pre-state (parallel commit).
struct GuardedEffect {
  MExprPtr guard;
  std::vector<std::pair<FieldId, MExprPtr>> updates; // always includes pc
};

// The cases of an instruction at a given address: unconditional ops get
// one case with a true guard; conditional branches two complementary
// cases; memory accesses one case guarded by alignment (no guard holds
// on misaligned states).
std::vector<GuardedEffect> step_cases(const Instr &i, uint64_t at);

// ---- evaluation ----

struct MVal {
  bool is_mem = false;
  unsigned width = 0;
  uint64_t bits = 0;
  std::shared_ptr<const std::map<uint64_t, uint8_t>> mem;
};

MVal meval(const MExprPtr &e, const MachState &s);
bool guard_holds(const MExprPtr &guard, const MachState &s);
MachState apply_effect(const GuardedEffect &ge, const MachState &s);

// True iff the expression reads the given field of the pre-state.
bool mexpr_reads(const MExprPtr &e, const FieldId &f);

struct StepResult {
  enum class Kind { Ok, StuckUndecodable, StuckUnpredictable };
  Kind kind = Kind::Ok;
  MachState next;
  uint32_t raw = 0;
  bool ok() const { return kind == Kind::Ok; }
};

// Fetch (little-endian) at pc, decode, apply the unique case whose guard
// holds; Stuck when decoding fails or no guard holds.
StepResult mach_step(const MachState &s);

// Condition expression for a BCond condition field over the NZCV flags.
MExprPtr cond_expr(unsigned cond);
const char *cond_name(unsigned cond);

} // namespace bir::isa

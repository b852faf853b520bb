// Translation of machine instructions into IR fragments: one block per
// behavior case (merged when there is a single case), guard and
// protected-memory assertions, temporaries for interdependent field
// updates, and whole-program composition with entry-label metadata.
#pragma once

#include "bir/isa.hpp"
#include "bir/program.hpp"

#include <optional>
#include <variant>

namespace bir::lift {

// Fixed machine-field <-> variable name map (the simulation relation):
// r(i) <-> R<i> (Reg64), sp <-> SP, flags <-> N/Z/C/V (Reg1),
// mem <-> MEM (Mem64); the machine pc maps to the IR program counter.
std::string reg_var(unsigned i);
extern const char *const SP_VAR;
extern const char *const MEM_VAR;
std::string flag_var(char f);
std::optional<isa::FieldId> field_of_var(const std::string &name);
std::string var_of_field(const isa::FieldId &f);

// Normalized set of disjoint [lo, hi) address intervals.
struct MemRegion {
  std::vector<std::pair<uint64_t, uint64_t>> intervals;

  static MemRegion of(std::vector<std::pair<uint64_t, uint64_t>> raw);
  bool empty() const { return intervals.empty(); }
  bool contains(uint64_t a) const {
    for (auto &[lo, hi] : intervals)
      if (a >= lo && a < hi) return true;
    return false;
  }
  uint64_t byte_count() const {
    uint64_t n = 0;
    for (auto &[lo, hi] : intervals) n += hi - lo;
    return n;
  }
};

struct LiftError {
  std::string message;
};

// Translates a machine expression into an IR expression over the mapped
// variable names. The carry predicates use the complement/unsigned-less
// rewrite; alignment becomes a mask-and-compare.
ExprPtr translate_mach_expr(const isa::MExprPtr &e);

// IR fragment for one instruction's behavior cases. The first block is
// labeled with the (integer) instruction address; internal blocks use
// string labels "<decimal addr>-<case index>".
std::vector<BirBlock> lift_effects(const std::vector<isa::GuardedEffect> &cases,
                                   uint64_t at, const MemRegion &memr);

struct LiftInstrResult {
  bool supported = false;
  std::vector<BirBlock> blocks;
  std::vector<isa::GuardedEffect> cases;
  isa::Instr instr;
};

// Decode + step cases + template. Unsupported instructions yield an
// always-failing block (assert false) so the fragment still composes.
LiftInstrResult lift_instruction(uint32_t word, uint64_t at,
                                 const MemRegion &memr);

struct LiftedProgram {
  BirProgram program;
  LabelSet entry_labels; // one integer label per instruction address
  MemRegion memr;        // the program's own address range(s)
  uint64_t entry = 0;
  std::vector<std::pair<uint64_t, uint32_t>> source;
  std::vector<uint64_t> unsupported; // addresses of unsupported words
  std::map<uint64_t, std::vector<isa::GuardedEffect>> cases;
  size_t decode_cache_hits = 0;
};

// Lifts a whole program. memr is computed from the instruction addresses
// themselves; decoding is memoized per distinct word (pc-relative fields
// are stored relative, so the cache is address-independent).
// Fails on an empty program, duplicate or misaligned addresses, or an
// entry outside the program.
std::variant<LiftedProgram, LiftError>
lift_program(std::vector<std::pair<uint64_t, uint32_t>> words, uint64_t entry);

// Parses "<decimal addr>" or "<decimal addr>-<case>" back to the owning
// instruction address of a lifted block label.
std::optional<uint64_t> instr_addr_of_label(const Label &l);

} // namespace bir::lift

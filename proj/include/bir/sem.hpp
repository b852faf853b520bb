// Operational semantics: statement effects, whole-block execution, and
// the fuel-bounded weak transition that runs until the program counter
// enters a designated label set or an error state.
#pragma once

#include "bir/eval.hpp"
#include "bir/program.hpp"

namespace bir {

struct BirState {
  enum class Pc { Label, Failed, TypeError };
  Env env;
  Pc pc_kind = Pc::Label;
  Label pc;

  static BirState at(Env e, Label l) {
    return {std::move(e), Pc::Label, std::move(l)};
  }
  bool failed() const { return pc_kind == Pc::Failed; }
  bool type_error() const { return pc_kind == Pc::TypeError; }
  bool running() const { return pc_kind == Pc::Label; }
};

struct StmtResult {
  enum class Kind { Ok, Failed, TypeError };
  Kind kind;
  Env env; // meaningful for Ok
};

// Assign updates a binding when the evaluated type matches the existing
// one (creating it on first use); Assert requires a Reg1 condition.
StmtResult exec_stmt(const BirStmt &s, const Env &env);

// Executes the block at bs.pc: statements in order, then the control-flow
// statement. Jump targets must be existing labels of p (or members of
// `exits`); anything else is the failure state. The weak transition
// passes its label set as exits so executions may stop at labels outside
// the program.
BirState exec_block(const BirProgram &p, const BirState &bs,
                    const LabelSet &exits = {});

struct WeakResult {
  bool diverged = false;
  BirState state;
};

// Runs exec_block until pc is in ls or an error state, starting with a
// zero-step check (a start state already in ls is returned unchanged).
// Exhausting fuel yields the distinct Diverged outcome.
WeakResult weak_exec(const BirProgram &p, BirState bs, const LabelSet &ls,
                     uint64_t fuel);

} // namespace bir

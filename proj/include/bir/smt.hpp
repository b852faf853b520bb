// SMT-LIB2 export (bitvectors + arrays, QF_ABV) and external-solver
// dispatch for implication goals. The export is untrusted; the
// differential tests against brute-force evaluation back it.
#pragma once

#include "bir/eval.hpp"

#include <variant>

namespace bir::smt {

struct SmtError {
  std::string message;
  bool solver_missing = false;
  bool malformed_output = false;
};

// Term translation under the given variable typing. Substitution nodes
// are rejected (simplify first); Reg n maps to (_ BitVec n) with Reg1
// truth encoded as literal 1, Mem a to (Array (_ BitVec a) (_ BitVec 8)).
std::variant<std::string, SmtError>
to_smt(const ExprPtr &e, const std::map<std::string, BType> &typing);

struct SmtScript {
  std::string text;
};

// Full script asserting premise = 1 and conclusion = 0 (the negated
// implication); declarations are emitted in sorted order so the script
// text is deterministic.
std::variant<SmtScript, SmtError>
implication_script(const ExprPtr &premise, const ExprPtr &conclusion,
                   const std::map<std::string, BType> &typing);

enum class Verdict { Proved, Counterexample, Unknown };

struct ProveOutcome {
  Verdict verdict = Verdict::Unknown;
  Env model;            // decoded counterexample environment
  std::string raw;      // solver stdout (for reports)
  std::string note;     // e.g. timeout reason for Unknown
};

// Writes the script to a temporary file and runs `solver_path file`.
// unsat => Proved, sat => Counterexample (model decoded), unknown or
// timeout => Unknown. Missing solver and unparseable output are errors,
// never conflated with Unknown.
std::variant<ProveOutcome, SmtError>
prove_implication(const ExprPtr &premise, const ExprPtr &conclusion,
                  const std::map<std::string, BType> &typing,
                  const std::string &solver_path, int timeout_sec);

// Resolves the solver binary: explicit path, else the BIRTK_SOLVER
// environment variable, else a minismt next to the running executable.
std::string resolve_solver(const std::string &explicit_path);

} // namespace bir::smt

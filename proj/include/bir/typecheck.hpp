// Static program type checker. Variable types are inferred, not declared:
// the program's uses must pin one type per name. Accepted programs cannot
// reach the type-error state from environments accepted by check_env.
#pragma once

#include "bir/eval.hpp"
#include "bir/program.hpp"

#include <variant>

namespace bir {

struct TypingContext {
  std::map<std::string, BType> vars;
  LabelSet labels;
};

struct TypeDiagnostic {
  Label block;
  int stmt_index; // -1 for the control-flow statement / block-level issues
  std::string message;
};

using CheckResult = std::variant<TypingContext, std::vector<TypeDiagnostic>>;

// Checks the whole program: duplicate labels, expression well-typedness,
// Reg1 assert/cjmp conditions, label- or word-typed jump targets,
// consistent per-name variable types, and absence of Subst nodes in
// statements. Returns the inferred context on success.
CheckResult check_program(const BirProgram &p);

// True iff every variable of the context is bound in env with the
// matching type (extra bindings are allowed).
bool check_env(const Env &env, const TypingContext &ctx);

// Infers one consistent typing for the free variables of the given
// expressions (substitution nodes bind their variable to the replacement
// type). With require_bool, each expression must have type Reg1.
std::optional<std::map<std::string, BType>>
infer_expr_typing(const std::vector<ExprPtr> &exprs, bool require_bool,
                  std::string *err = nullptr);

std::string render_diagnostics(const std::vector<TypeDiagnostic> &ds);

} // namespace bir

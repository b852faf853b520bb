// Tautology-preserving elimination of explicit substitution nodes from
// P |- P' goals: fresh-variable abbreviations replace substitutions so the
// conclusion never undergoes the exponential expansion.
#pragma once

#include "bir/typecheck.hpp"
#include "bir/wp.hpp"

namespace bir::simp {

struct TautologyGoal {
  ExprPtr premise;
  ExprPtr conclusion;
};

struct SimplifyError {
  std::string message;
};

// Renames free occurrences of v to vp. At an inner substitution
// {E/v''}B the renaming always enters E but enters B only when v != v''
// (v is shadowed otherwise). vp must not occur in e.
ExprPtr push_subst(const std::string &v, const std::string &vp,
                   const ExprPtr &e);

// Returns a substitution-free conclusion P'' with
// (P |- P') <=> (P |- P''). Handles exactly the forms the WP generator
// emits: conjunction, implication, substitution; other operators are
// leaves. Rejects ill-typed goals and substitutions outside that fragment.
std::variant<ExprPtr, SimplifyError> simplify(const TautologyGoal &goal);

// Expands every substitution node eagerly (shared-structure result; use
// tree_nodes/count_var_occurrences to measure the real expansion).
ExprPtr naive_expand(const ExprPtr &e);

// Brute-force equivalence of the two goal forms over an enumerable
// environment domain: (forall env. P => P') iff (forall env extended with
// the fresh variables of P''. P => P''). The universal over fresh
// variables is evaluated exactly with the one-point rule on definitional
// equations, with bounded enumeration as a fallback.
bool equisatisfiable_oracle(const ExprPtr &p, const ExprPtr &p_orig,
                            const ExprPtr &p_simplified,
                            const wp::EnvDomain &domain);

} // namespace bir::simp

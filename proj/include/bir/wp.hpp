// CFG construction and weakest-precondition propagation for loop-free
// fragments with multiple entries and exits, plus the exhaustive triple
// oracle used to test WP soundness.
#pragma once

#include "bir/sem.hpp"
#include "bir/typecheck.hpp"

#include <optional>
#include <variant>

namespace bir::wp {

using PredMap = std::map<Label, ExprPtr>;

struct Cfg {
  LabelSet nodes;
  std::set<std::pair<Label, Label>> edges;
  LabelSet entries;    // nodes without incoming edges
  LabelSet exits;      // nodes without outgoing edges (referenced labels
                       // that have no block)
  LabelSet unresolved; // blocks whose jump target is not a constant
};

// Static edges from constant jump targets only; indirect targets are
// recorded, never guessed.
Cfg build_cfg(const BirProgram &p);

// Statement rule: assignments become explicit substitution nodes (never
// expanded here); assertions conjoin.
ExprPtr wp_stmt(const BirStmt &s, const ExprPtr &q);

struct WpError {
  std::string message;
  std::vector<Label> cycle; // witness when a cycle blocks propagation
};

// Control-flow rule over the current precondition map.
std::variant<ExprPtr, WpError> wp_cf(const CfStmt &cf, const PredMap &h);

// Labels whose block's successors all have preconditions; sorted.
std::vector<Label> eligible_labels(const BirProgram &p, const PredMap &h);

// One iteration: computes the precondition of l's block and extends h.
std::variant<PredMap, WpError> wp_select(const BirProgram &p, const PredMap &h,
                                         const Label &l);

// Iterates lowest-label-first until every target has a precondition;
// returns the map restricted to targets plus the original postcondition
// domain. Errors name a cycle witness or an unresolved indirect jump.
std::variant<PredMap, WpError> wp_fragment(const BirProgram &p,
                                           const PredMap &q,
                                           const LabelSet &targets);

// Enumerable environment space: candidate typed values per variable; the
// product of the candidate lists is executed exhaustively.
struct EnvDomain {
  std::vector<std::pair<std::string, std::vector<TypedValue>>> vars;

  size_t combinations() const {
    size_t n = 1;
    for (auto &[_, vs] : vars) n *= vs.size();
    return n;
  }
  Env nth(size_t idx) const {
    Env e;
    for (auto &[name, vs] : vars) {
      e.bind(name, vs[idx % vs.size()].type, vs[idx % vs.size()].value);
      idx /= vs.size();
    }
    return e;
  }
};

struct TripleCounterexample {
  Label entry;
  Env env;
  std::string reason;
};

struct TripleResult {
  bool holds = true;
  std::optional<TripleCounterexample> cex;
};

// Brute-force triple check: for every entry in dom(pre) and every domain
// env satisfying the precondition, run the weak transition to dom(post);
// executions reaching it must not have failed and must satisfy the
// postcondition. This is the independent oracle for the WP engine.
TripleResult check_triple_exhaustive(const BirProgram &p, const PredMap &pre,
                                     const PredMap &post,
                                     const EnvDomain &domain,
                                     uint64_t fuel = 100000);

} // namespace bir::wp

// Small CDCL SAT solver: two-literal watching, first-UIP learning,
// activity-based decisions, phase saving, Luby restarts.
#pragma once

#include <cstdint>
#include <vector>

namespace minismt {

// Literals: variable v has literals 2v (positive) and 2v+1 (negative).
inline int pos_lit(int v) { return 2 * v; }
inline int neg_lit(int v) { return 2 * v + 1; }
inline int lit_not(int l) { return l ^ 1; }
inline int lit_var(int l) { return l >> 1; }
inline bool lit_sign(int l) { return l & 1; } // true = negated

class Sat {
public:
  enum class Result { Sat, Unsat, Unknown };

  int new_var();
  int num_vars() const { return nvars_; }
  // False literal set is allowed; tautologies and duplicates are handled.
  void add_clause(std::vector<int> lits);

  // conflict_budget < 0 means unbounded.
  Result solve(int64_t conflict_budget = -1);

  // Valid after Sat: value of each variable.
  bool model_value(int var) const { return model_[size_t(var)]; }

private:
  struct Clause {
    std::vector<int> lits;
    bool learnt = false;
    double activity = 0;
  };

  int nvars_ = 0;
  std::vector<Clause> clauses_;
  std::vector<std::vector<std::pair<int, int>>> watches_; // lit -> (clause, blocker)
  std::vector<int8_t> assigns_;  // var -> -1 unset / 0 false / 1 true
  std::vector<int> trail_;
  std::vector<int> trail_lim_;
  std::vector<int> reason_;      // var -> clause index or -1
  std::vector<int> level_;
  std::vector<double> activity_;
  std::vector<int8_t> phase_;
  std::vector<uint8_t> seen_;
  std::vector<bool> model_;
  double var_inc_ = 1.0;
  size_t qhead_ = 0;
  bool unsat_ = false;

  bool lit_true(int l) const {
    int8_t a = assigns_[size_t(lit_var(l))];
    return a != -1 && (a == 1) != lit_sign(l);
  }
  bool lit_false(int l) const {
    int8_t a = assigns_[size_t(lit_var(l))];
    return a != -1 && (a == 1) == lit_sign(l);
  }
  bool lit_unset(int l) const { return assigns_[size_t(lit_var(l))] == -1; }

  void enqueue(int l, int reason);
  int propagate(); // returns conflicting clause index or -1
  void attach(int ci);
  int decision_level() const { return int(trail_lim_.size()); }
  void cancel_until(int level);
  void bump(int var);
  void decay() { var_inc_ *= 1.0 / 0.95; }
  std::vector<int> analyze(int confl, int &out_level);
  int pick_branch();
};

} // namespace minismt

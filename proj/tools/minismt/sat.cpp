#include "sat.hpp"

#include <algorithm>
#include <cmath>

namespace minismt {

int Sat::new_var() {
  int v = nvars_++;
  watches_.resize(size_t(2 * nvars_));
  assigns_.push_back(-1);
  reason_.push_back(-1);
  level_.push_back(0);
  activity_.push_back(0);
  phase_.push_back(0);
  seen_.push_back(0);
  return v;
}

void Sat::add_clause(std::vector<int> lits) {
  if (unsat_) return;
  std::sort(lits.begin(), lits.end());
  lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
  for (size_t i = 0; i + 1 < lits.size(); i++)
    if (lits[i] == lit_not(lits[i + 1])) return; // tautology
  // Top-level simplification against already-fixed literals.
  std::vector<int> out;
  for (int l : lits) {
    if (lit_true(l) && level_[size_t(lit_var(l))] == 0) return;
    if (lit_false(l) && level_[size_t(lit_var(l))] == 0) continue;
    out.push_back(l);
  }
  if (out.empty()) {
    unsat_ = true;
    return;
  }
  if (out.size() == 1) {
    if (lit_false(out[0])) {
      unsat_ = true;
      return;
    }
    if (lit_unset(out[0])) {
      enqueue(out[0], -1);
      if (propagate() != -1) unsat_ = true;
    }
    return;
  }
  clauses_.push_back({std::move(out), false, 0});
  attach(int(clauses_.size()) - 1);
}

void Sat::attach(int ci) {
  const Clause &c = clauses_[size_t(ci)];
  watches_[size_t(lit_not(c.lits[0]))].emplace_back(ci, c.lits[1]);
  watches_[size_t(lit_not(c.lits[1]))].emplace_back(ci, c.lits[0]);
}

void Sat::enqueue(int l, int reason) {
  int v = lit_var(l);
  assigns_[size_t(v)] = lit_sign(l) ? 0 : 1;
  reason_[size_t(v)] = reason;
  level_[size_t(v)] = decision_level();
  phase_[size_t(v)] = lit_sign(l) ? 0 : 1;
  trail_.push_back(l);
}

int Sat::propagate() {
  while (qhead_ < trail_.size()) {
    int l = trail_[qhead_++];
    auto &ws = watches_[size_t(l)];
    size_t keep = 0;
    for (size_t i = 0; i < ws.size(); i++) {
      auto [ci, blocker] = ws[i];
      if (lit_true(blocker)) {
        ws[keep++] = ws[i];
        continue;
      }
      Clause &c = clauses_[size_t(ci)];
      int false_lit = lit_not(l);
      if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
      if (lit_true(c.lits[0])) {
        ws[keep++] = {ci, c.lits[0]};
        continue;
      }
      bool moved = false;
      for (size_t k = 2; k < c.lits.size(); k++) {
        if (!lit_false(c.lits[k])) {
          std::swap(c.lits[1], c.lits[k]);
          watches_[size_t(lit_not(c.lits[1]))].emplace_back(ci, c.lits[0]);
          moved = true;
          break;
        }
      }
      if (moved) continue;
      // Unit or conflict.
      ws[keep++] = {ci, c.lits[0]};
      if (lit_false(c.lits[0])) {
        for (size_t k = i + 1; k < ws.size(); k++) ws[keep++] = ws[k];
        ws.resize(keep);
        qhead_ = trail_.size();
        return ci;
      }
      enqueue(c.lits[0], ci);
    }
    ws.resize(keep);
  }
  return -1;
}

void Sat::cancel_until(int lvl) {
  if (decision_level() <= lvl) return;
  size_t bound = size_t(trail_lim_[size_t(lvl)]);
  for (size_t i = trail_.size(); i-- > bound;) {
    int v = lit_var(trail_[i]);
    assigns_[size_t(v)] = -1;
    reason_[size_t(v)] = -1;
  }
  trail_.resize(bound);
  trail_lim_.resize(size_t(lvl));
  qhead_ = trail_.size();
}

void Sat::bump(int var) {
  activity_[size_t(var)] += var_inc_;
  if (activity_[size_t(var)] > 1e100) {
    for (double &a : activity_) a *= 1e-100;
    var_inc_ *= 1e-100;
  }
}

std::vector<int> Sat::analyze(int confl, int &out_level) {
  std::vector<int> learnt{0}; // slot for the asserting literal
  int counter = 0;
  int l = -1;
  size_t idx = trail_.size();

  int ci = confl;
  do {
    Clause &c = clauses_[size_t(ci)];
    for (int q : c.lits) {
      if (q == l) continue;
      int v = lit_var(q);
      if (!seen_[size_t(v)] && level_[size_t(v)] > 0) {
        seen_[size_t(v)] = 1;
        bump(v);
        if (level_[size_t(v)] >= decision_level())
          counter++;
        else
          learnt.push_back(q);
      }
    }
    while (!seen_[size_t(lit_var(trail_[idx - 1]))]) idx--;
    idx--;
    l = trail_[idx];
    seen_[size_t(lit_var(l))] = 0;
    counter--;
    ci = reason_[size_t(lit_var(l))];
  } while (counter > 0);
  learnt[0] = lit_not(l);

  out_level = 0;
  for (size_t i = 1; i < learnt.size(); i++)
    out_level = std::max(out_level, level_[size_t(lit_var(learnt[i]))]);
  for (size_t i = 1; i < learnt.size(); i++)
    seen_[size_t(lit_var(learnt[i]))] = 0;
  return learnt;
}

int Sat::pick_branch() {
  int best = -1;
  double best_act = -1;
  for (int v = 0; v < nvars_; v++) {
    if (assigns_[size_t(v)] == -1 && activity_[size_t(v)] > best_act) {
      best = v;
      best_act = activity_[size_t(v)];
    }
  }
  if (best == -1) return -1;
  return phase_[size_t(best)] ? pos_lit(best) : neg_lit(best);
}

namespace {
// Luby restart sequence scaled by a base interval.
int64_t luby(int64_t i) {
  int64_t k = 1;
  while ((1LL << k) - 1 < i + 1) k++;
  while ((1LL << k) - 1 != i + 1) {
    i -= (1LL << (k - 1)) - 1;
    k = 1;
    while ((1LL << k) - 1 < i + 1) k++;
  }
  return 1LL << (k - 1);
}
} // namespace

Sat::Result Sat::solve(int64_t conflict_budget) {
  if (unsat_) return Result::Unsat;
  if (propagate() != -1) return Result::Unsat;

  int64_t conflicts_total = 0;
  int64_t restart_num = 0;
  int64_t restart_limit = 64 * luby(restart_num);
  int64_t conflicts_since_restart = 0;

  for (;;) {
    int confl = propagate();
    if (confl != -1) {
      conflicts_total++;
      conflicts_since_restart++;
      if (decision_level() == 0) return Result::Unsat;
      int back_level = 0;
      std::vector<int> learnt = analyze(confl, back_level);
      cancel_until(back_level);
      if (learnt.size() == 1) {
        enqueue(learnt[0], -1);
      } else {
        clauses_.push_back({learnt, true, 0});
        int ci = int(clauses_.size()) - 1;
        // Watch the asserting literal and a top-level one.
        Clause &c = clauses_[size_t(ci)];
        size_t hi = 1;
        for (size_t k = 2; k < c.lits.size(); k++)
          if (level_[size_t(lit_var(c.lits[k]))] >
              level_[size_t(lit_var(c.lits[hi]))])
            hi = k;
        std::swap(c.lits[1], c.lits[hi]);
        attach(ci);
        enqueue(c.lits[0], ci);
      }
      decay();
      if (conflict_budget >= 0 && conflicts_total > conflict_budget)
        return Result::Unknown;
      if (conflicts_since_restart >= restart_limit) {
        conflicts_since_restart = 0;
        restart_limit = 64 * luby(++restart_num);
        cancel_until(0);
      }
      continue;
    }
    int next = pick_branch();
    if (next == -1) {
      model_.assign(size_t(nvars_), false);
      for (int v = 0; v < nvars_; v++) model_[size_t(v)] = assigns_[size_t(v)] == 1;
      cancel_until(0);
      return Result::Sat;
    }
    trail_lim_.push_back(int(trail_.size()));
    enqueue(next, -1);
  }
}

} // namespace minismt

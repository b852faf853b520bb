#include "bir/wp.hpp"

#include <algorithm>

namespace bir::wp {

Cfg build_cfg(const BirProgram &p) {
  Cfg g;
  auto add_edge = [&](const Label &from, const ExprPtr &target) {
    if (auto t = const_target(target)) {
      g.nodes.insert(*t);
      g.edges.emplace(from, *t);
    } else {
      g.unresolved.insert(from);
    }
  };
  for (const auto &b : p.blocks) {
    g.nodes.insert(b.label);
    if (b.cf.kind == CfStmt::Kind::Jmp) {
      add_edge(b.label, b.cf.target);
    } else {
      add_edge(b.label, b.cf.target);
      add_edge(b.label, b.cf.else_target);
    }
  }
  LabelSet has_in, has_out;
  for (auto &[a, b] : g.edges) {
    has_out.insert(a);
    has_in.insert(b);
  }
  for (auto &n : g.unresolved) has_out.insert(n);
  for (auto &n : g.nodes) {
    if (!has_in.count(n)) g.entries.insert(n);
    if (!has_out.count(n)) g.exits.insert(n);
  }
  return g;
}

ExprPtr wp_stmt(const BirStmt &s, const ExprPtr &q) {
  if (s.kind == BirStmt::Kind::Assign) return subst(s.e, s.var, q);
  return band(s.e, q);
}

std::variant<ExprPtr, WpError> wp_cf(const CfStmt &cf, const PredMap &h) {
  auto lookup = [&](const ExprPtr &target) -> std::variant<ExprPtr, WpError> {
    auto t = const_target(target);
    if (!t)
      return WpError{"cannot propagate through an indirect jump", {}};
    auto it = h.find(*t);
    if (it == h.end())
      return WpError{"cannot propagate: no precondition for " + t->str(), {*t}};
    return it->second;
  };
  if (cf.kind == CfStmt::Kind::Jmp) return lookup(cf.target);
  auto t1 = lookup(cf.target);
  if (std::holds_alternative<WpError>(t1)) return t1;
  auto t2 = lookup(cf.else_target);
  if (std::holds_alternative<WpError>(t2)) return t2;
  return band(bimp(cf.cond, std::get<ExprPtr>(t1)),
              bimp(bnot(cf.cond), std::get<ExprPtr>(t2)));
}

namespace {

// Constant successors of a block; nullopt when any target is indirect.
std::optional<std::vector<Label>> const_succs(const BirBlock &b) {
  std::vector<Label> out;
  auto add = [&](const ExprPtr &e) {
    auto t = const_target(e);
    if (!t) return false;
    out.push_back(*t);
    return true;
  };
  if (b.cf.kind == CfStmt::Kind::Jmp) {
    if (!add(b.cf.target)) return std::nullopt;
  } else {
    if (!add(b.cf.target) || !add(b.cf.else_target)) return std::nullopt;
  }
  return out;
}

// A cycle witness among the given blocks, used for error reporting.
std::vector<Label> find_cycle(const BirProgram &p, const LabelSet &candidates) {
  std::map<Label, int> state; // 0 unvisited, 1 on stack, 2 done
  std::vector<Label> stack, cycle;
  auto dfs = [&](auto &&self, const Label &l) -> bool {
    state[l] = 1;
    stack.push_back(l);
    const BirBlock *b = p.find(l);
    if (b) {
      if (auto succs = const_succs(*b)) {
        for (const Label &s : *succs) {
          if (!candidates.count(s)) continue;
          if (state[s] == 1) {
            auto it = std::find(stack.begin(), stack.end(), s);
            cycle.assign(it, stack.end());
            return true;
          }
          if (state[s] == 0 && self(self, s)) return true;
        }
      }
    }
    stack.pop_back();
    state[l] = 2;
    return false;
  };
  for (const Label &l : candidates)
    if (state[l] == 0 && dfs(dfs, l)) return cycle;
  return {};
}

} // namespace

std::vector<Label> eligible_labels(const BirProgram &p, const PredMap &h) {
  std::vector<Label> out;
  for (const auto &b : p.blocks) {
    if (h.count(b.label)) continue;
    auto succs = const_succs(b);
    if (!succs) continue;
    bool all = true;
    for (const Label &s : *succs) all &= h.count(s) != 0;
    if (all) out.push_back(b.label);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::variant<PredMap, WpError> wp_select(const BirProgram &p, const PredMap &h,
                                         const Label &l) {
  const BirBlock *b = p.find(l);
  if (!b) return WpError{"no block labeled " + l.str(), {}};
  auto cf = wp_cf(b->cf, h);
  if (auto *err = std::get_if<WpError>(&cf)) return *err;
  ExprPtr pred = std::get<ExprPtr>(cf);
  for (auto it = b->stmts.rbegin(); it != b->stmts.rend(); ++it)
    pred = wp_stmt(*it, pred);
  PredMap out = h;
  out[l] = pred;
  return out;
}

std::variant<PredMap, WpError> wp_fragment(const BirProgram &p,
                                           const PredMap &q,
                                           const LabelSet &targets) {
  PredMap h = q;
  auto missing = [&]() {
    LabelSet m;
    for (const Label &t : targets)
      if (!h.count(t)) m.insert(t);
    return m;
  };
  while (!missing().empty()) {
    std::vector<Label> el = eligible_labels(p, h);
    if (el.empty()) {
      // Either a cycle blocks propagation or an indirect jump does.
      LabelSet pending;
      for (const auto &b : p.blocks)
        if (!h.count(b.label)) pending.insert(b.label);
      for (const Label &l : pending) {
        const BirBlock *b = p.find(l);
        if (b && !const_succs(*b))
          return WpError{"unresolved indirect jump at " + l.str(), {l}};
      }
      std::vector<Label> cyc = find_cycle(p, pending);
      if (!cyc.empty())
        return WpError{"fragment is not loop-free", cyc};
      LabelSet m = missing();
      return WpError{"cannot reach target " + m.begin()->str(), {}};
    }
    auto next = wp_select(p, h, el.front());
    if (auto *err = std::get_if<WpError>(&next)) return *err;
    h = std::move(std::get<PredMap>(next));
  }
  PredMap out;
  for (const auto &[l, e] : h)
    if (targets.count(l) || q.count(l)) out[l] = e;
  return out;
}

TripleResult check_triple_exhaustive(const BirProgram &p, const PredMap &pre,
                                     const PredMap &post,
                                     const EnvDomain &domain, uint64_t fuel) {
  LabelSet post_dom;
  for (auto &[l, _] : post) post_dom.insert(l);
  size_t total = domain.combinations();
  for (const auto &[entry, pre_expr] : pre) {
    for (size_t i = 0; i < total; i++) {
      Env env = domain.nth(i);
      EvalResult pr = eval(pre_expr, env);
      if (!pr.is_true()) continue;
      WeakResult r = weak_exec(p, BirState::at(env, entry), post_dom, fuel);
      if (r.diverged) continue; // no claim on divergent executions
      if (!r.state.running())
        return {false, TripleCounterexample{entry, env,
                                            r.state.failed()
                                                ? "execution failed"
                                                : "execution hit a type error"}};
      auto it = post.find(r.state.pc);
      if (it == post.end()) continue; // left the fragment without reaching Q
      EvalResult qr = eval(it->second, r.state.env);
      if (!qr.is_true())
        return {false, TripleCounterexample{entry, env,
                                            "postcondition does not hold at " +
                                                r.state.pc.str()}};
    }
  }
  return {true, std::nullopt};
}

} // namespace bir::wp

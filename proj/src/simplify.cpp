#include "bir/simplify.hpp"

#include <unordered_map>

namespace bir::simp {

namespace {

ExprPtr push_subst_memo(const std::string &v, const std::string &vp,
                        const ExprPtr &e,
                        std::unordered_map<const BExpr *, ExprPtr> &memo) {
  if (!e) return e;
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  ExprPtr out;
  switch (e->kind) {
  case BExpr::Kind::Var:
    out = e->name == v ? var(vp) : e;
    break;
  case BExpr::Kind::ConstWord:
  case BExpr::Kind::ConstLabel:
    out = e;
    break;
  case BExpr::Kind::Subst: {
    ExprPtr repl = push_subst_memo(v, vp, e->a, memo);
    // v is shadowed in the body when this substitution binds it.
    ExprPtr body = e->name == v ? e->b : push_subst_memo(v, vp, e->b, memo);
    out = (repl == e->a && body == e->b) ? e : subst(repl, e->name, body);
    break;
  }
  default: {
    ExprPtr a = push_subst_memo(v, vp, e->a, memo);
    ExprPtr b = push_subst_memo(v, vp, e->b, memo);
    ExprPtr c = push_subst_memo(v, vp, e->c, memo);
    if (a == e->a && b == e->b && c == e->c) {
      out = e;
    } else {
      BExpr n = *e;
      n.a = a;
      n.b = b;
      n.c = c;
      out = std::make_shared<const BExpr>(std::move(n));
    }
  }
  }
  memo.emplace(e.get(), out);
  return out;
}

} // namespace

ExprPtr push_subst(const std::string &v, const std::string &vp,
                   const ExprPtr &e) {
  std::unordered_map<const BExpr *, ExprPtr> memo;
  return push_subst_memo(v, vp, e, memo);
}

namespace {

struct Transform {
  std::set<std::string> avoid;
  std::string error;

  ExprPtr run(const ExprPtr &e) {
    if (!error.empty()) return nullptr;
    if (!contains_subst(e)) return e;
    if (e->kind == BExpr::Kind::BinOp && e->bin == BinOpK::BAnd) {
      ExprPtr a = run(e->a);
      ExprPtr b = run(e->b);
      if (!a || !b) return nullptr;
      return band(a, b);
    }
    if (e->kind == BExpr::Kind::BinOp && e->bin == BinOpK::BImp) {
      // The antecedent joins the premise; only the consequent is
      // transformed. WP output keeps antecedents substitution-free.
      if (contains_subst(e->a)) {
        error = "substitution in an implication antecedent";
        return nullptr;
      }
      ExprPtr b = run(e->b);
      if (!b) return nullptr;
      return bimp(e->a, b);
    }
    if (e->kind == BExpr::Kind::Subst) {
      if (contains_subst(e->a)) {
        error = "substitution inside a replacement expression";
        return nullptr;
      }
      std::set<std::string> fv_body = free_vars(e->b);
      if (!fv_body.count(e->name))
        return run(e->b); // dead substitution: dropping it avoids the
                          // wrongly-typed re-reference hazard
      std::string vp = fresh_name(avoid, e->name);
      avoid.insert(vp);
      ExprPtr renamed = push_subst(e->name, vp, e->b);
      ExprPtr rest = run(renamed);
      if (!rest) return nullptr;
      return bimp(eq(var(vp), e->a), rest);
    }
    error = "substitution under an unsupported operator";
    return nullptr;
  }
};

} // namespace

std::variant<ExprPtr, SimplifyError> simplify(const TautologyGoal &goal) {
  std::string type_err;
  if (!infer_expr_typing({goal.premise, goal.conclusion}, true, &type_err))
    return SimplifyError{"ill-typed goal: " + type_err};
  Transform t;
  t.avoid = all_names(goal.premise);
  auto more = all_names(goal.conclusion);
  t.avoid.insert(more.begin(), more.end());
  ExprPtr out = t.run(goal.conclusion);
  if (!out) return SimplifyError{t.error};
  return out;
}

namespace {

ExprPtr replace_var(const ExprPtr &e, const std::string &v, const ExprPtr &r,
                    std::unordered_map<const BExpr *, ExprPtr> &memo) {
  if (!e) return e;
  auto it = memo.find(e.get());
  if (it != memo.end()) return it->second;
  ExprPtr out;
  if (e->kind == BExpr::Kind::Var) {
    out = e->name == v ? r : e;
  } else if (!e->a && !e->b && !e->c) {
    out = e;
  } else {
    BExpr n = *e;
    n.a = replace_var(e->a, v, r, memo);
    n.b = replace_var(e->b, v, r, memo);
    n.c = replace_var(e->c, v, r, memo);
    out = std::make_shared<const BExpr>(std::move(n));
  }
  memo.emplace(e.get(), out);
  return out;
}

} // namespace

ExprPtr naive_expand(const ExprPtr &e) {
  if (!e) return e;
  if (e->kind == BExpr::Kind::Subst) {
    ExprPtr repl = naive_expand(e->a);
    ExprPtr body = naive_expand(e->b);
    std::unordered_map<const BExpr *, ExprPtr> memo;
    return replace_var(body, e->name, repl, memo);
  }
  if (!e->a && !e->b && !e->c) return e;
  BExpr n = *e;
  n.a = naive_expand(e->a);
  n.b = naive_expand(e->b);
  n.c = naive_expand(e->c);
  return std::make_shared<const BExpr>(std::move(n));
}

namespace {

// Exact evaluation of (forall fresh. e) under env. Definitional
// implications (v = E) => B with fresh v are handled by the one-point
// rule; the universal distributes over conjunction and fresh-free
// antecedents. Anything else falls back to enumerating the variable.
struct ForallEval {
  const std::map<std::string, BType> &typing;
  bool exact = true;

  bool has_fresh(const ExprPtr &e, const std::set<std::string> &fresh) {
    for (const std::string &v : free_vars(e))
      if (fresh.count(v)) return true;
    return false;
  }

  bool run(const ExprPtr &e, Env env, std::set<std::string> fresh) {
    if (!has_fresh(e, fresh)) return eval(e, env).is_true();
    if (e->kind == BExpr::Kind::BinOp && e->bin == BinOpK::BAnd)
      return run(e->a, env, fresh) && run(e->b, env, fresh);
    if (e->kind == BExpr::Kind::BinOp && e->bin == BinOpK::BImp) {
      const ExprPtr &ant = e->a;
      if (!has_fresh(ant, fresh)) {
        if (!eval(ant, env).is_true()) return true;
        return run(e->b, env, fresh);
      }
      // one-point rule: forall v. (v = E) => B  <=>  B[E/v]
      if (ant->kind == BExpr::Kind::BinOp && ant->bin == BinOpK::Eq) {
        const ExprPtr &lhs = ant->a;
        const ExprPtr &rhs = ant->b;
        for (auto [vside, eside] : {std::pair{lhs, rhs}, std::pair{rhs, lhs}}) {
          if (vside->kind != BExpr::Kind::Var || !fresh.count(vside->name))
            continue;
          if (has_fresh(eside, fresh)) continue;
          EvalResult val = eval(eside, env);
          if (!val.ok) return false;
          BType t = val.value.is_word()
                        ? BType::reg(val.value.width())
                        : BType::mem(val.value.memory().addr_width());
          fresh.erase(vside->name);
          return run(e->b, env.with(vside->name, t, val.value), fresh);
        }
      }
    }
    // Fallback: enumerate one fresh variable (bounded for wide words).
    std::string v;
    for (const std::string &name : free_vars(e))
      if (fresh.count(name)) {
        v = name;
        break;
      }
    auto it = typing.find(v);
    if (it == typing.end() || !it->second.is_reg()) return false;
    unsigned w = it->second.width();
    fresh.erase(v);
    if (w <= 8) {
      for (uint64_t x = 0; x <= mask_bits(w); x++)
        if (!run(e, env.with(v, it->second, BValue::word(w, x)), fresh))
          return false;
      return true;
    }
    exact = false;
    uint64_t samples[] = {0, 1, 2, 3, mask_bits(w), mask_bits(w) - 1,
                          1ULL << (w - 1), (1ULL << (w - 1)) - 1};
    for (uint64_t x : samples)
      if (!run(e, env.with(v, it->second, BValue::word(w, x & mask_bits(w))),
               fresh))
        return false;
    return true;
  }
};

} // namespace

bool equisatisfiable_oracle(const ExprPtr &p, const ExprPtr &p_orig,
                            const ExprPtr &p_simplified,
                            const wp::EnvDomain &domain) {
  std::set<std::string> base_vars;
  for (auto &[name, _] : domain.vars) base_vars.insert(name);
  std::set<std::string> fresh;
  for (const std::string &v : free_vars(p_simplified))
    if (!base_vars.count(v)) fresh.insert(v);

  auto typing_opt = infer_expr_typing({p, p_orig, p_simplified}, true);
  if (!typing_opt) return false;

  size_t total = domain.combinations();
  for (size_t i = 0; i < total; i++) {
    Env env = domain.nth(i);
    EvalResult pe = eval(p, env);
    if (!pe.ok) return false;
    bool lhs = !pe.is_true() || eval(p_orig, env).is_true();
    bool rhs;
    if (!pe.is_true()) {
      rhs = true;
    } else {
      ForallEval fe{*typing_opt};
      rhs = fe.run(p_simplified, env, fresh);
    }
    if (lhs != rhs) return false;
  }
  return true;
}

} // namespace bir::simp

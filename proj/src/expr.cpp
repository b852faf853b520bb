#include "bir/expr.hpp"

#include <unordered_map>
#include <unordered_set>

namespace bir {

std::string Label::str() const {
  if (is_string) return name;
  char buf[32];
  snprintf(buf, sizeof buf, "0x%llx", (unsigned long long)addr);
  return buf;
}

static ExprPtr mk(BExpr e) { return std::make_shared<const BExpr>(std::move(e)); }

ExprPtr const_word(unsigned width, uint64_t bits) {
  if (!valid_reg_width(width))
    throw std::invalid_argument("const_word: bad width");
  BExpr e;
  e.kind = BExpr::Kind::ConstWord;
  e.width = width;
  e.bits = bits & mask_bits(width);
  return mk(std::move(e));
}

ExprPtr const_label(std::string text) {
  BExpr e;
  e.kind = BExpr::Kind::ConstLabel;
  e.name = std::move(text);
  return mk(std::move(e));
}

ExprPtr var(std::string name) {
  BExpr e;
  e.kind = BExpr::Kind::Var;
  e.name = std::move(name);
  return mk(std::move(e));
}

ExprPtr ite(ExprPtr cond, ExprPtr t, ExprPtr f) {
  BExpr e;
  e.kind = BExpr::Kind::Ite;
  e.a = std::move(cond);
  e.b = std::move(t);
  e.c = std::move(f);
  return mk(std::move(e));
}

ExprPtr unop(UnOpK op, ExprPtr x) {
  if (op == UnOpK::ZExt || op == UnOpK::SExt || op == UnOpK::Trunc)
    throw std::invalid_argument("unop: casts need a target width, use cast()");
  BExpr e;
  e.kind = BExpr::Kind::UnOp;
  e.un = op;
  e.a = std::move(x);
  return mk(std::move(e));
}

ExprPtr cast(UnOpK op, unsigned target_width, ExprPtr x) {
  if (op != UnOpK::ZExt && op != UnOpK::SExt && op != UnOpK::Trunc)
    throw std::invalid_argument("cast: not a cast operator");
  if (!valid_reg_width(target_width))
    throw std::invalid_argument("cast: bad target width");
  BExpr e;
  e.kind = BExpr::Kind::UnOp;
  e.un = op;
  e.cast_width = target_width;
  e.a = std::move(x);
  return mk(std::move(e));
}

ExprPtr binop(BinOpK op, ExprPtr a, ExprPtr b) {
  BExpr e;
  e.kind = BExpr::Kind::BinOp;
  e.bin = op;
  e.a = std::move(a);
  e.b = std::move(b);
  return mk(std::move(e));
}

ExprPtr load(ExprPtr mem, ExprPtr addr, unsigned value_width) {
  if (value_width < 8 || !valid_reg_width(value_width))
    throw std::invalid_argument("load: value width must be 8/16/32/64");
  BExpr e;
  e.kind = BExpr::Kind::Load;
  e.width = value_width;
  e.a = std::move(mem);
  e.b = std::move(addr);
  return mk(std::move(e));
}

ExprPtr store(ExprPtr mem, ExprPtr addr, ExprPtr value, unsigned value_width) {
  if (value_width < 8 || !valid_reg_width(value_width))
    throw std::invalid_argument("store: value width must be 8/16/32/64");
  BExpr e;
  e.kind = BExpr::Kind::Store;
  e.width = value_width;
  e.a = std::move(mem);
  e.b = std::move(addr);
  e.c = std::move(value);
  return mk(std::move(e));
}

ExprPtr subst(ExprPtr replacement, std::string name, ExprPtr body) {
  BExpr e;
  e.kind = BExpr::Kind::Subst;
  e.name = std::move(name);
  e.a = std::move(replacement);
  e.b = std::move(body);
  return mk(std::move(e));
}

ExprPtr band(ExprPtr a, ExprPtr b) { return binop(BinOpK::BAnd, std::move(a), std::move(b)); }
ExprPtr bimp(ExprPtr a, ExprPtr b) { return binop(BinOpK::BImp, std::move(a), std::move(b)); }
ExprPtr bnot(ExprPtr a) { return unop(UnOpK::Not, std::move(a)); }
ExprPtr eq(ExprPtr a, ExprPtr b) { return binop(BinOpK::Eq, std::move(a), std::move(b)); }

bool expr_equal(const ExprPtr &a, const ExprPtr &b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
  case BExpr::Kind::ConstWord:
    return a->width == b->width && a->bits == b->bits;
  case BExpr::Kind::ConstLabel:
  case BExpr::Kind::Var:
    return a->name == b->name;
  case BExpr::Kind::Ite:
    return expr_equal(a->a, b->a) && expr_equal(a->b, b->b) &&
           expr_equal(a->c, b->c);
  case BExpr::Kind::UnOp:
    return a->un == b->un && a->cast_width == b->cast_width &&
           expr_equal(a->a, b->a);
  case BExpr::Kind::BinOp:
    return a->bin == b->bin && expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
  case BExpr::Kind::Load:
    return a->width == b->width && expr_equal(a->a, b->a) &&
           expr_equal(a->b, b->b);
  case BExpr::Kind::Store:
    return a->width == b->width && expr_equal(a->a, b->a) &&
           expr_equal(a->b, b->b) && expr_equal(a->c, b->c);
  case BExpr::Kind::Subst:
    return a->name == b->name && expr_equal(a->a, b->a) &&
           expr_equal(a->b, b->b);
  }
  return false;
}

static void free_vars_into(const ExprPtr &e, std::set<std::string> &out) {
  if (!e) return;
  switch (e->kind) {
  case BExpr::Kind::Var:
    out.insert(e->name);
    return;
  case BExpr::Kind::Subst: {
    free_vars_into(e->a, out);
    std::set<std::string> body;
    free_vars_into(e->b, body);
    body.erase(e->name);
    out.insert(body.begin(), body.end());
    return;
  }
  default:
    free_vars_into(e->a, out);
    free_vars_into(e->b, out);
    free_vars_into(e->c, out);
  }
}

std::set<std::string> free_vars(const ExprPtr &e) {
  std::set<std::string> out;
  free_vars_into(e, out);
  return out;
}

static void all_names_into(const ExprPtr &e, std::set<std::string> &out) {
  if (!e) return;
  if (e->kind == BExpr::Kind::Var || e->kind == BExpr::Kind::Subst)
    out.insert(e->name);
  all_names_into(e->a, out);
  all_names_into(e->b, out);
  all_names_into(e->c, out);
}

std::set<std::string> all_names(const ExprPtr &e) {
  std::set<std::string> out;
  all_names_into(e, out);
  return out;
}

std::string fresh_name(const std::set<std::string> &avoid,
                       const std::string &hint) {
  if (!avoid.count(hint)) return hint;
  for (unsigned i = 1;; i++) {
    std::string cand = hint + "_" + std::to_string(i);
    if (!avoid.count(cand)) return cand;
  }
}

size_t dag_nodes(const ExprPtr &e) {
  std::unordered_set<const BExpr *> seen;
  size_t n = 0;
  auto walk = [&](auto &&self, const ExprPtr &x) -> void {
    if (!x || seen.count(x.get())) return;
    seen.insert(x.get());
    n++;
    self(self, x->a);
    self(self, x->b);
    self(self, x->c);
  };
  walk(walk, e);
  return n;
}

size_t tree_nodes(const ExprPtr &e) {
  std::unordered_map<const BExpr *, size_t> memo;
  auto walk = [&](auto &&self, const ExprPtr &x) -> size_t {
    if (!x) return 0;
    auto it = memo.find(x.get());
    if (it != memo.end()) return it->second;
    size_t n = 1 + self(self, x->a) + self(self, x->b) + self(self, x->c);
    memo[x.get()] = n;
    return n;
  };
  return walk(walk, e);
}

size_t count_var_occurrences(const ExprPtr &e, const std::string &name) {
  std::unordered_map<const BExpr *, size_t> memo;
  auto walk = [&](auto &&self, const ExprPtr &x) -> size_t {
    if (!x) return 0;
    auto it = memo.find(x.get());
    if (it != memo.end()) return it->second;
    size_t n = (x->kind == BExpr::Kind::Var && x->name == name) ? 1 : 0;
    n += self(self, x->a) + self(self, x->b) + self(self, x->c);
    memo[x.get()] = n;
    return n;
  };
  return walk(walk, e);
}

bool contains_subst(const ExprPtr &e) {
  if (!e) return false;
  if (e->kind == BExpr::Kind::Subst) return true;
  return contains_subst(e->a) || contains_subst(e->b) || contains_subst(e->c);
}

} // namespace bir

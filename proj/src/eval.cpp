#include "bir/eval.hpp"

namespace bir {

bool value_has_type(const BValue &v, const BType &t) {
  switch (v.kind()) {
  case BValue::Kind::Word: return t.is_reg() && t.width() == v.width();
  case BValue::Kind::Mem: return t.is_mem() && t.width() == v.memory().addr_width();
  case BValue::Kind::Label: return false;
  }
  return false;
}

void Env::bind(const std::string &name, BType t, BValue v) {
  if (!value_has_type(v, t))
    throw std::invalid_argument("Env::bind: value does not inhabit type");
  map_.insert_or_assign(name, TypedValue{t, std::move(v)});
}

Env Env::with(const std::string &name, BType t, BValue v) const {
  Env e = *this;
  e.bind(name, t, std::move(v));
  return e;
}

bool Env::operator==(const Env &o) const {
  if (map_.size() != o.map_.size()) return false;
  auto a = map_.begin();
  auto b = o.map_.begin();
  for (; a != map_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.type == b->second.type) ||
        !(a->second.value == b->second.value))
      return false;
  }
  return true;
}

std::string SType::str() const {
  switch (kind) {
  case Kind::Reg: return "reg" + std::to_string(width);
  case Kind::Mem: return "mem" + std::to_string(width);
  default: return "label";
  }
}

static int64_t to_signed(uint64_t bits, unsigned w) {
  if (w == 64) return int64_t(bits);
  uint64_t sign = 1ULL << (w - 1);
  return (bits & sign) ? int64_t(bits) - int64_t(1ULL << w) : int64_t(bits);
}

static EvalResult eval_binop(BinOpK op, const BValue &a, const BValue &b) {
  // Memory equality is the only operation on memories.
  if (a.is_mem() || b.is_mem()) {
    if (op == BinOpK::Eq && a.is_mem() && b.is_mem() &&
        a.memory().addr_width() == b.memory().addr_width())
      return EvalResult::of(BValue::word(1, a == b ? 1 : 0));
    return EvalResult::type_error();
  }
  if (a.is_label() || b.is_label()) return EvalResult::type_error();
  if (a.width() != b.width()) return EvalResult::type_error();
  unsigned w = a.width();
  uint64_t x = a.bits(), y = b.bits(), m = mask_bits(w);
  switch (op) {
  case BinOpK::Add: return EvalResult::of(BValue::word(w, (x + y) & m));
  case BinOpK::Sub: return EvalResult::of(BValue::word(w, (x - y) & m));
  case BinOpK::Mul: return EvalResult::of(BValue::word(w, (x * y) & m));
  case BinOpK::And: return EvalResult::of(BValue::word(w, x & y));
  case BinOpK::Or: return EvalResult::of(BValue::word(w, x | y));
  case BinOpK::Xor: return EvalResult::of(BValue::word(w, x ^ y));
  case BinOpK::Shl: return EvalResult::of(BValue::word(w, (x << (y % w)) & m));
  case BinOpK::Lshr: return EvalResult::of(BValue::word(w, x >> (y % w)));
  case BinOpK::Ashr: {
    unsigned s = unsigned(y % w);
    return EvalResult::of(BValue::word(w, uint64_t(to_signed(x, w) >> s) & m));
  }
  case BinOpK::Eq: return EvalResult::of(BValue::word(1, x == y ? 1 : 0));
  case BinOpK::Ult: return EvalResult::of(BValue::word(1, x < y ? 1 : 0));
  case BinOpK::Slt:
    return EvalResult::of(BValue::word(1, to_signed(x, w) < to_signed(y, w) ? 1 : 0));
  case BinOpK::BAnd:
  case BinOpK::BOr:
  case BinOpK::BImp: {
    if (w != 1) return EvalResult::type_error();
    uint64_t r = op == BinOpK::BAnd ? (x & y)
                 : op == BinOpK::BOr ? (x | y)
                                     : ((x ^ 1) | y);
    return EvalResult::of(BValue::word(1, r));
  }
  }
  return EvalResult::type_error();
}

EvalResult eval(const ExprPtr &e, const Env &env) {
  if (!e) return EvalResult::type_error();
  switch (e->kind) {
  case BExpr::Kind::ConstWord:
    return EvalResult::of(BValue::word(e->width, e->bits));
  case BExpr::Kind::ConstLabel:
    return EvalResult::of(BValue::label(Label::of_name(e->name)));
  case BExpr::Kind::Var: {
    const TypedValue *tv = env.find(e->name);
    if (!tv) return EvalResult::type_error();
    return EvalResult::of(tv->value);
  }
  case BExpr::Kind::Ite: {
    // Strict in all three operands so evaluation agrees with the static
    // type checker.
    EvalResult c = eval(e->a, env);
    EvalResult t = eval(e->b, env);
    EvalResult f = eval(e->c, env);
    if (!c.ok || !t.ok || !f.ok) return EvalResult::type_error();
    if (!(c.value.is_word() && c.value.width() == 1)) return EvalResult::type_error();
    if (t.value.is_label() || f.value.is_label()) return EvalResult::type_error();
    if (t.value.is_word() != f.value.is_word()) return EvalResult::type_error();
    if (t.value.is_word() && t.value.width() != f.value.width())
      return EvalResult::type_error();
    if (t.value.is_mem() &&
        t.value.memory().addr_width() != f.value.memory().addr_width())
      return EvalResult::type_error();
    return c.value.bits() ? t : f;
  }
  case BExpr::Kind::UnOp: {
    EvalResult r = eval(e->a, env);
    if (!r.ok || !r.value.is_word()) return EvalResult::type_error();
    unsigned w = r.value.width();
    uint64_t x = r.value.bits();
    switch (e->un) {
    case UnOpK::Not: return EvalResult::of(BValue::word(w, ~x & mask_bits(w)));
    case UnOpK::Neg: return EvalResult::of(BValue::word(w, (~x + 1) & mask_bits(w)));
    case UnOpK::ZExt:
      if (e->cast_width < w) return EvalResult::type_error();
      return EvalResult::of(BValue::word(e->cast_width, x));
    case UnOpK::SExt: {
      if (e->cast_width < w) return EvalResult::type_error();
      uint64_t v = uint64_t(to_signed(x, w)) & mask_bits(e->cast_width);
      return EvalResult::of(BValue::word(e->cast_width, v));
    }
    case UnOpK::Trunc:
      if (e->cast_width > w) return EvalResult::type_error();
      return EvalResult::of(BValue::word(e->cast_width, x & mask_bits(e->cast_width)));
    }
    return EvalResult::type_error();
  }
  case BExpr::Kind::BinOp: {
    EvalResult a = eval(e->a, env);
    EvalResult b = eval(e->b, env);
    if (!a.ok || !b.ok) return EvalResult::type_error();
    return eval_binop(e->bin, a.value, b.value);
  }
  case BExpr::Kind::Load: {
    EvalResult m = eval(e->a, env);
    EvalResult a = eval(e->b, env);
    if (!m.ok || !a.ok || !m.value.is_mem() || !a.value.is_word())
      return EvalResult::type_error();
    const MemBytes &mem = m.value.memory();
    if (a.value.width() != mem.addr_width()) return EvalResult::type_error();
    return EvalResult::of(
        BValue::word(e->width, mem.read(a.value.bits(), e->width / 8)));
  }
  case BExpr::Kind::Store: {
    EvalResult m = eval(e->a, env);
    EvalResult a = eval(e->b, env);
    EvalResult v = eval(e->c, env);
    if (!m.ok || !a.ok || !v.ok || !m.value.is_mem() || !a.value.is_word() ||
        !v.value.is_word())
      return EvalResult::type_error();
    const MemBytes &mem = m.value.memory();
    if (a.value.width() != mem.addr_width()) return EvalResult::type_error();
    if (v.value.width() != e->width) return EvalResult::type_error();
    return EvalResult::of(
        BValue::mem(mem.write(a.value.bits(), v.value.bits(), e->width / 8)));
  }
  case BExpr::Kind::Subst: {
    // Closure semantics: evaluate the body with the variable overridden.
    EvalResult r = eval(e->a, env);
    if (!r.ok || r.value.is_label()) return EvalResult::type_error();
    BType t = r.value.is_word() ? BType::reg(r.value.width())
                                : BType::mem(r.value.memory().addr_width());
    return eval(e->b, env.with(e->name, t, r.value));
  }
  }
  return EvalResult::type_error();
}

std::optional<SType>
type_of_expr(const ExprPtr &e, const std::map<std::string, BType> &typing) {
  if (!e) return std::nullopt;
  switch (e->kind) {
  case BExpr::Kind::ConstWord:
    return SType::reg(e->width);
  case BExpr::Kind::ConstLabel:
    return SType::label();
  case BExpr::Kind::Var: {
    auto it = typing.find(e->name);
    if (it == typing.end()) return std::nullopt;
    return SType::of(it->second);
  }
  case BExpr::Kind::Ite: {
    auto c = type_of_expr(e->a, typing);
    auto t = type_of_expr(e->b, typing);
    auto f = type_of_expr(e->c, typing);
    if (!c || !t || !f || !c->is_reg(1)) return std::nullopt;
    if (!(*t == *f) || t->kind == SType::Kind::Label) return std::nullopt;
    return t;
  }
  case BExpr::Kind::UnOp: {
    auto a = type_of_expr(e->a, typing);
    if (!a || a->kind != SType::Kind::Reg) return std::nullopt;
    switch (e->un) {
    case UnOpK::Not:
    case UnOpK::Neg:
      return a;
    case UnOpK::ZExt:
    case UnOpK::SExt:
      if (e->cast_width < a->width) return std::nullopt;
      return SType::reg(e->cast_width);
    case UnOpK::Trunc:
      if (e->cast_width > a->width) return std::nullopt;
      return SType::reg(e->cast_width);
    }
    return std::nullopt;
  }
  case BExpr::Kind::BinOp: {
    auto a = type_of_expr(e->a, typing);
    auto b = type_of_expr(e->b, typing);
    if (!a || !b || !(*a == *b)) return std::nullopt;
    switch (e->bin) {
    case BinOpK::Eq:
      if (a->kind == SType::Kind::Label) return std::nullopt;
      return SType::reg(1);
    case BinOpK::Ult:
    case BinOpK::Slt:
      if (a->kind != SType::Kind::Reg) return std::nullopt;
      return SType::reg(1);
    case BinOpK::BAnd:
    case BinOpK::BOr:
    case BinOpK::BImp:
      if (!a->is_reg(1)) return std::nullopt;
      return SType::reg(1);
    default:
      if (a->kind != SType::Kind::Reg) return std::nullopt;
      return a;
    }
  }
  case BExpr::Kind::Load: {
    auto m = type_of_expr(e->a, typing);
    auto a = type_of_expr(e->b, typing);
    if (!m || !a || m->kind != SType::Kind::Mem || !a->is_reg(m->width))
      return std::nullopt;
    return SType::reg(e->width);
  }
  case BExpr::Kind::Store: {
    auto m = type_of_expr(e->a, typing);
    auto a = type_of_expr(e->b, typing);
    auto v = type_of_expr(e->c, typing);
    if (!m || !a || !v || m->kind != SType::Kind::Mem || !a->is_reg(m->width) ||
        !v->is_reg(e->width))
      return std::nullopt;
    return *m;
  }
  case BExpr::Kind::Subst: {
    auto r = type_of_expr(e->a, typing);
    if (!r) return std::nullopt;
    auto bt = r->btype();
    if (!bt) return std::nullopt;
    auto inner = typing;
    inner.insert_or_assign(e->name, *bt);
    return type_of_expr(e->b, inner);
  }
  }
  return std::nullopt;
}

} // namespace bir

// Environments, the recursive evaluation function, and static expression
// typing. Evaluation is total: every failure mode is the TypeError result.
#pragma once

#include "bir/expr.hpp"

#include <optional>

namespace bir {

struct TypedValue {
  BType type;
  BValue value;
};

// Variable environment. Bindings pair a type with a value of that type;
// labels cannot be bound.
class Env {
public:
  Env() = default;

  // Throws if the value does not inhabit the type.
  void bind(const std::string &name, BType t, BValue v);
  Env with(const std::string &name, BType t, BValue v) const;

  const TypedValue *find(const std::string &name) const {
    auto it = map_.find(name);
    return it == map_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, TypedValue> &bindings() const { return map_; }

  bool operator==(const Env &o) const;

private:
  std::map<std::string, TypedValue> map_;
};

// True iff v is a word of width t.width() / a memory of t's address width.
bool value_has_type(const BValue &v, const BType &t);

// Static type of an expression: a value type, or "label" for label
// constants (usable only as jump targets).
struct SType {
  enum class Kind { Reg, Mem, Label };
  Kind kind = Kind::Reg;
  unsigned width = 0;

  static SType reg(unsigned n) { return {Kind::Reg, n}; }
  static SType mem(unsigned a) { return {Kind::Mem, a}; }
  static SType label() { return {Kind::Label, 0}; }
  static SType of(const BType &t) {
    return t.is_reg() ? reg(t.width()) : mem(t.width());
  }
  bool is_reg(unsigned n) const { return kind == Kind::Reg && width == n; }
  std::optional<BType> btype() const {
    switch (kind) {
    case Kind::Reg: return BType::reg(width);
    case Kind::Mem: return BType::mem(width);
    default: return std::nullopt;
    }
  }
  bool operator==(const SType &o) const = default;
  std::string str() const;
};

// Evaluation result: a typed value, or the type-error outcome.
struct EvalResult {
  bool ok = false;
  BValue value = BValue::word(1, 0);

  static EvalResult type_error() { return {}; }
  static EvalResult of(BValue v) { return {true, std::move(v)}; }
  bool is_true() const { return ok && value.is_word() && value.width() == 1 && value.bits() == 1; }
  bool is_false() const { return ok && value.is_word() && value.width() == 1 && value.bits() == 0; }
};

// Recursive evaluation. Loads read little-endian; stores return a new
// memory; Subst(E, v, A) evaluates A with v bound to eval(E).
// Shift amounts are taken modulo the operand width.
EvalResult eval(const ExprPtr &e, const Env &env);

// Static type under the given variable typing, or nullopt for ill-typed
// expressions. Agrees with eval on all consistent environments.
std::optional<SType> type_of_expr(const ExprPtr &e,
                                  const std::map<std::string, BType> &typing);

} // namespace bir

// Program syntax: blocks of assignment/assert statements closed by one
// control-flow statement, identified by unique labels.
#pragma once

#include "bir/expr.hpp"

#include <optional>
#include <vector>

namespace bir {

struct BirStmt {
  enum class Kind { Assign, Assert };
  Kind kind;
  std::string var; // Assign target
  ExprPtr e;

  static BirStmt assign(std::string v, ExprPtr e) {
    return {Kind::Assign, std::move(v), std::move(e)};
  }
  static BirStmt assert_(ExprPtr e) { return {Kind::Assert, "", std::move(e)}; }
};

struct CfStmt {
  enum class Kind { Jmp, CJmp };
  Kind kind;
  ExprPtr cond;        // CJmp condition
  ExprPtr target;      // Jmp target / CJmp then-target
  ExprPtr else_target; // CJmp else-target

  static CfStmt jmp(ExprPtr t) { return {Kind::Jmp, nullptr, std::move(t), nullptr}; }
  static CfStmt cjmp(ExprPtr c, ExprPtr t1, ExprPtr t2) {
    return {Kind::CJmp, std::move(c), std::move(t1), std::move(t2)};
  }
};

struct BirBlock {
  Label label;
  std::vector<BirStmt> stmts;
  CfStmt cf = CfStmt::jmp(nullptr);
};

struct BirProgram {
  std::vector<BirBlock> blocks;

  const BirBlock *find(const Label &l) const {
    for (const auto &b : blocks)
      if (b.label == l) return &b;
    return nullptr;
  }
  bool has_label(const Label &l) const { return find(l) != nullptr; }
  std::optional<Label> first_duplicate_label() const {
    LabelSet seen;
    for (const auto &b : blocks)
      if (!seen.insert(b.label).second) return b.label;
    return std::nullopt;
  }
  LabelSet labels() const {
    LabelSet s;
    for (const auto &b : blocks) s.insert(b.label);
    return s;
  }
};

// Constant jump-target labels of an expression, when statically known.
inline std::optional<Label> const_target(const ExprPtr &e) {
  if (!e) return std::nullopt;
  if (e->kind == BExpr::Kind::ConstWord) return Label::of_addr(e->bits);
  if (e->kind == BExpr::Kind::ConstLabel) return Label::of_name(e->name);
  return std::nullopt;
}

} // namespace bir

#include "bir/typecheck.hpp"

#include <sstream>

namespace bir {

namespace {

// Type inference with union-find at two levels: terms (unknown / label /
// word / memory) and width slots shared between terms, so that
// `load(var M, var A, 32)` ties M's address width to A's word width
// before either is concrete.
struct Infer {
  enum class Shape { Unknown, Reg, Mem, Label };

  // width variables
  std::vector<int> wparent;
  std::vector<int> wval; // -1 unknown
  // terms
  struct Node {
    int parent;
    Shape shape = Shape::Unknown;
    int wv = -1; // width variable for Reg/Mem
  };
  std::vector<Node> nodes;
  std::map<std::string, int> var_terms;
  std::string conflict;

  int fresh_wv(int concrete = -1) {
    wparent.push_back(int(wparent.size()));
    wval.push_back(concrete);
    return int(wparent.size()) - 1;
  }
  int wfind(int i) {
    while (wparent[i] != i) i = wparent[i] = wparent[wparent[i]];
    return i;
  }
  bool wunify(int a, int b) {
    a = wfind(a);
    b = wfind(b);
    if (a == b) return true;
    if (wval[a] != -1 && wval[b] != -1 && wval[a] != wval[b]) return false;
    if (wval[a] == -1) wval[a] = wval[b];
    wparent[b] = a;
    return true;
  }
  int wconcrete(int i) { return wval[wfind(i)]; }

  int fresh() {
    nodes.push_back({int(nodes.size())});
    return int(nodes.size()) - 1;
  }
  int fresh_shaped(Shape s, int wv) {
    int t = fresh();
    nodes[t].shape = s;
    nodes[t].wv = wv;
    return t;
  }
  int fresh_reg(int width) { return fresh_shaped(Shape::Reg, fresh_wv(width)); }

  int find(int i) {
    while (nodes[i].parent != i) i = nodes[i].parent = nodes[nodes[i].parent].parent;
    return i;
  }
  Shape shape(int i) { return nodes[find(i)].shape; }
  int width_of(int i) {
    int r = find(i);
    return nodes[r].wv == -1 ? -1 : wconcrete(nodes[r].wv);
  }

  bool unify(int a, int b, const std::string &what) {
    a = find(a);
    b = find(b);
    if (a == b) return true;
    Node &na = nodes[a];
    Node &nb = nodes[b];
    if (na.shape == Shape::Unknown) {
      na.parent = b;
      return true;
    }
    if (nb.shape == Shape::Unknown) {
      nb.parent = a;
      return true;
    }
    if (na.shape != nb.shape) {
      if (conflict.empty()) conflict = "type mismatch in " + what;
      return false;
    }
    if (na.shape != Shape::Label && !wunify(na.wv, nb.wv)) {
      if (conflict.empty()) conflict = "width mismatch in " + what;
      return false;
    }
    nb.parent = a;
    return true;
  }

  int var_term(const std::string &name) {
    auto it = var_terms.find(name);
    if (it != var_terms.end()) return it->second;
    int t = fresh();
    var_terms.emplace(name, t);
    return t;
  }
};

// Infers the term of an expression, recording constraints. Returns -1 on
// a structural typing error (message in err).
int infer_expr(Infer &in, const ExprPtr &e, std::string &err) {
  auto fail = [&](const std::string &m) {
    if (err.empty()) err = in.conflict.empty() ? m : in.conflict;
    in.conflict.clear();
    return -1;
  };
  switch (e->kind) {
  case BExpr::Kind::ConstWord:
    return in.fresh_reg(int(e->width));
  case BExpr::Kind::ConstLabel:
    return in.fresh_shaped(Infer::Shape::Label, -1);
  case BExpr::Kind::Var:
    return in.var_term(e->name);
  case BExpr::Kind::Ite: {
    int c = infer_expr(in, e->a, err);
    int t = infer_expr(in, e->b, err);
    int f = infer_expr(in, e->c, err);
    if (c < 0 || t < 0 || f < 0) return -1;
    if (!in.unify(c, in.fresh_reg(1), "ite condition"))
      return fail("ite condition must be Reg1");
    if (!in.unify(t, f, "ite branches")) return fail("ite branch mismatch");
    if (in.shape(t) == Infer::Shape::Label) return fail("ite on labels");
    return t;
  }
  case BExpr::Kind::UnOp: {
    int a = infer_expr(in, e->a, err);
    if (a < 0) return -1;
    if (!in.unify(a, in.fresh_shaped(Infer::Shape::Reg, in.fresh_wv()),
                  "unary operand"))
      return fail("unary operator on non-word");
    switch (e->un) {
    case UnOpK::Not:
    case UnOpK::Neg:
      return a;
    case UnOpK::ZExt:
    case UnOpK::SExt: {
      int w = in.width_of(a);
      if (w != -1 && unsigned(w) > e->cast_width) return fail("extend narrows");
      return in.fresh_reg(int(e->cast_width));
    }
    case UnOpK::Trunc: {
      int w = in.width_of(a);
      if (w != -1 && unsigned(w) < e->cast_width) return fail("truncate widens");
      return in.fresh_reg(int(e->cast_width));
    }
    }
    return fail("bad unary operator");
  }
  case BExpr::Kind::BinOp: {
    int a = infer_expr(in, e->a, err);
    int b = infer_expr(in, e->b, err);
    if (a < 0 || b < 0) return -1;
    if (!in.unify(a, b, "binary operands")) return fail("operand mismatch");
    switch (e->bin) {
    case BinOpK::Eq:
      if (in.shape(a) == Infer::Shape::Label) return fail("comparison on labels");
      return in.fresh_reg(1);
    case BinOpK::Ult:
    case BinOpK::Slt:
      if (!in.unify(a, in.fresh_shaped(Infer::Shape::Reg, in.fresh_wv()),
                    "comparison operands"))
        return fail("ordered comparison on non-word");
      return in.fresh_reg(1);
    case BinOpK::BAnd:
    case BinOpK::BOr:
    case BinOpK::BImp:
      if (!in.unify(a, in.fresh_reg(1), "boolean operands"))
        return fail("boolean operator needs Reg1 operands");
      return in.fresh_reg(1);
    default:
      if (!in.unify(a, in.fresh_shaped(Infer::Shape::Reg, in.fresh_wv()),
                    "arithmetic operands"))
        return fail("arithmetic on non-word");
      return a;
    }
  }
  case BExpr::Kind::Load: {
    int m = infer_expr(in, e->a, err);
    int a = infer_expr(in, e->b, err);
    if (m < 0 || a < 0) return -1;
    int aw = in.fresh_wv();
    if (!in.unify(m, in.fresh_shaped(Infer::Shape::Mem, aw), "load memory"))
      return fail("load from non-memory");
    if (!in.unify(a, in.fresh_shaped(Infer::Shape::Reg, aw), "load address"))
      return fail("load address mismatch");
    return in.fresh_reg(int(e->width));
  }
  case BExpr::Kind::Store: {
    int m = infer_expr(in, e->a, err);
    int a = infer_expr(in, e->b, err);
    int v = infer_expr(in, e->c, err);
    if (m < 0 || a < 0 || v < 0) return -1;
    int aw = in.fresh_wv();
    if (!in.unify(m, in.fresh_shaped(Infer::Shape::Mem, aw), "store memory"))
      return fail("store to non-memory");
    if (!in.unify(a, in.fresh_shaped(Infer::Shape::Reg, aw), "store address"))
      return fail("store address mismatch");
    if (!in.unify(v, in.fresh_reg(int(e->width)), "store value"))
      return fail("store value width mismatch");
    return m;
  }
  case BExpr::Kind::Subst: {
    // {E/v}A types A with v bound to E's type; the binding shadows any
    // outer use of v.
    int r = infer_expr(in, e->a, err);
    if (r < 0) return -1;
    if (in.shape(r) == Infer::Shape::Label)
      return fail("cannot substitute a label value");
    auto it = in.var_terms.find(e->name);
    bool had = it != in.var_terms.end();
    int saved = had ? it->second : -1;
    in.var_terms[e->name] = r;
    int body = infer_expr(in, e->b, err);
    if (had)
      in.var_terms[e->name] = saved;
    else
      in.var_terms.erase(e->name);
    return body;
  }
  }
  return fail("malformed expression");
}

} // namespace

std::optional<std::map<std::string, BType>>
infer_expr_typing(const std::vector<ExprPtr> &exprs, bool require_bool,
                  std::string *err_out) {
  Infer in;
  auto fail = [&](const std::string &m) {
    if (err_out) *err_out = m;
    return std::nullopt;
  };
  for (const ExprPtr &e : exprs) {
    std::string err;
    int t = infer_expr(in, e, err);
    if (t < 0) return fail(err);
    if (require_bool && !in.unify(t, in.fresh_reg(1), "expression type"))
      return fail("expression is not Reg1");
  }
  std::map<std::string, BType> out;
  for (auto &[name, term] : in.var_terms) {
    Infer::Shape s = in.shape(term);
    int w = in.width_of(term);
    if (s == Infer::Shape::Unknown || s == Infer::Shape::Label || w == -1)
      return fail("cannot infer a type for variable " + name);
    if (s == Infer::Shape::Reg && !valid_reg_width(unsigned(w)))
      return fail("bad inferred width for " + name);
    if (s == Infer::Shape::Mem && !valid_addr_width(unsigned(w)))
      return fail("bad inferred address width for " + name);
    out.emplace(name, s == Infer::Shape::Reg ? BType::reg(unsigned(w))
                                             : BType::mem(unsigned(w)));
  }
  return out;
}

CheckResult check_program(const BirProgram &p) {
  std::vector<TypeDiagnostic> ds;
  if (auto dup = p.first_duplicate_label()) {
    ds.push_back({*dup, -1, "duplicate block label"});
    return ds;
  }

  Infer in;
  TypingContext ctx;
  for (const auto &b : p.blocks) ctx.labels.insert(b.label);

  auto check_expr = [&](const Label &blk, int idx, const ExprPtr &e) -> int {
    if (!e) {
      ds.push_back({blk, idx, "missing expression"});
      return -1;
    }
    if (contains_subst(e)) {
      ds.push_back({blk, idx, "substitution node in statement"});
      return -1;
    }
    std::string err;
    int t = infer_expr(in, e, err);
    if (t < 0) ds.push_back({blk, idx, err});
    return t;
  };

  for (const auto &b : p.blocks) {
    for (size_t i = 0; i < b.stmts.size(); i++) {
      const BirStmt &s = b.stmts[i];
      int t = check_expr(b.label, int(i), s.e);
      if (t < 0) continue;
      if (s.kind == BirStmt::Kind::Assign) {
        if (in.shape(t) == Infer::Shape::Label) {
          ds.push_back({b.label, int(i), "cannot assign a label value"});
          continue;
        }
        if (!in.unify(in.var_term(s.var), t, "assignment to " + s.var)) {
          ds.push_back(
              {b.label, int(i), "conflicting types for variable " + s.var});
          in.conflict.clear();
        }
      } else if (!in.unify(t, in.fresh_reg(1), "assert condition")) {
        ds.push_back({b.label, int(i), "condition must be Reg1"});
        in.conflict.clear();
      }
    }
    auto check_target = [&](const ExprPtr &t) {
      int tt = check_expr(b.label, -1, t);
      if (tt >= 0 && in.shape(tt) == Infer::Shape::Mem)
        ds.push_back({b.label, -1, "jump target must be label- or word-typed"});
    };
    if (b.cf.kind == CfStmt::Kind::Jmp) {
      check_target(b.cf.target);
    } else {
      int c = check_expr(b.label, -1, b.cf.cond);
      if (c >= 0 && !in.unify(c, in.fresh_reg(1), "cjmp condition")) {
        ds.push_back({b.label, -1, "condition must be Reg1"});
        in.conflict.clear();
      }
      check_target(b.cf.target);
      check_target(b.cf.else_target);
    }
  }
  if (!ds.empty()) return ds;

  // Resolve every variable to a concrete type.
  for (auto &[name, term] : in.var_terms) {
    Infer::Shape s = in.shape(term);
    if (s == Infer::Shape::Unknown || s == Infer::Shape::Label) {
      ds.push_back({Label::of_name(""), -1,
                    "cannot infer a type for variable " + name});
      continue;
    }
    int w = in.width_of(term);
    if (w == -1 || (s == Infer::Shape::Reg && !valid_reg_width(unsigned(w))) ||
        (s == Infer::Shape::Mem && !valid_addr_width(unsigned(w)))) {
      ds.push_back({Label::of_name(""), -1,
                    "cannot infer a width for variable " + name});
      continue;
    }
    ctx.vars.emplace(name, s == Infer::Shape::Reg ? BType::reg(unsigned(w))
                                                  : BType::mem(unsigned(w)));
  }
  if (!ds.empty()) return ds;

  // Final pass under the concrete context; validates cast side conditions
  // the incremental pass may have left open.
  for (const auto &b : p.blocks) {
    for (size_t i = 0; i < b.stmts.size(); i++) {
      auto t = type_of_expr(b.stmts[i].e, ctx.vars);
      if (!t) {
        ds.push_back({b.label, int(i), "ill-typed expression"});
        continue;
      }
      if (b.stmts[i].kind == BirStmt::Kind::Assert && !t->is_reg(1))
        ds.push_back({b.label, int(i), "condition must be Reg1"});
    }
    auto chk = [&](const ExprPtr &e, bool cond) {
      if (!e) return;
      auto t = type_of_expr(e, ctx.vars);
      if (!t)
        ds.push_back({b.label, -1, "ill-typed expression"});
      else if (cond && !t->is_reg(1))
        ds.push_back({b.label, -1, "condition must be Reg1"});
    };
    chk(b.cf.cond, true);
    chk(b.cf.target, false);
    chk(b.cf.else_target, false);
  }
  if (!ds.empty()) return ds;
  return ctx;
}

bool check_env(const Env &env, const TypingContext &ctx) {
  for (const auto &[name, t] : ctx.vars) {
    const TypedValue *tv = env.find(name);
    if (!tv || !(tv->type == t) || !value_has_type(tv->value, t)) return false;
  }
  return true;
}

std::string render_diagnostics(const std::vector<TypeDiagnostic> &ds) {
  std::ostringstream out;
  for (const auto &d : ds) {
    out << d.block.str() << ":";
    if (d.stmt_index >= 0)
      out << d.stmt_index;
    else
      out << "cf";
    out << ": " << d.message << "\n";
  }
  return out.str();
}

} // namespace bir

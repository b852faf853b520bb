#include "bir/text.hpp"

#include <cctype>
#include <sstream>

namespace bir::text {

// ---- S-expression reader ----

namespace {

struct SNode {
  bool is_atom = false;
  std::string atom;          // unquoted token text
  bool was_quoted = false;   // atom came from a "..." literal
  std::vector<SNode> items;
  size_t pos = 0;
};

struct Reader {
  const std::string &s;
  size_t i = 0;
  std::string err;
  size_t err_pos = 0;

  explicit Reader(const std::string &text) : s(text) {}

  void skip_ws() {
    while (i < s.size()) {
      if (isspace((unsigned char)s[i])) {
        i++;
      } else if (s[i] == ';') {
        while (i < s.size() && s[i] != '\n') i++;
      } else {
        break;
      }
    }
  }

  bool fail(const std::string &m) {
    if (err.empty()) {
      err = m;
      err_pos = i;
    }
    return false;
  }

  bool read(SNode &out) {
    skip_ws();
    if (i >= s.size()) return fail("unexpected end of input");
    out.pos = i;
    if (s[i] == '(') {
      i++;
      out.is_atom = false;
      out.items.clear();
      while (true) {
        skip_ws();
        if (i >= s.size()) return fail("unterminated list");
        if (s[i] == ')') {
          i++;
          return true;
        }
        SNode child;
        if (!read(child)) return false;
        out.items.push_back(std::move(child));
      }
    }
    if (s[i] == ')') return fail("unexpected ')'");
    if (s[i] == '"') {
      i++;
      std::string a;
      while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) i++;
        a += s[i++];
      }
      if (i >= s.size()) return fail("unterminated string");
      i++;
      out.is_atom = true;
      out.was_quoted = true;
      out.atom = std::move(a);
      return true;
    }
    std::string a;
    while (i < s.size() && !isspace((unsigned char)s[i]) && s[i] != '(' &&
           s[i] != ')' && s[i] != ';' && s[i] != '"')
      a += s[i++];
    if (a.empty()) return fail("empty token");
    out.is_atom = true;
    out.atom = std::move(a);
    return true;
  }
};

bool parse_u64(const std::string &t, uint64_t &out) {
  if (t.empty()) return false;
  try {
    size_t used = 0;
    out = std::stoull(t, &used, 0); // accepts decimal and 0x-hex
    return used == t.size();
  } catch (...) {
    return false;
  }
}

std::string quote(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string hex(uint64_t v) {
  char buf[32];
  snprintf(buf, sizeof buf, "0x%llx", (unsigned long long)v);
  return buf;
}

// ---- expression printing ----

const char *binop_name(BinOpK op) {
  switch (op) {
  case BinOpK::Add: return "add";
  case BinOpK::Sub: return "sub";
  case BinOpK::Mul: return "mul";
  case BinOpK::And: return "and";
  case BinOpK::Or: return "or";
  case BinOpK::Xor: return "xor";
  case BinOpK::Shl: return "shl";
  case BinOpK::Lshr: return "lshr";
  case BinOpK::Ashr: return "ashr";
  case BinOpK::Eq: return "eq";
  case BinOpK::Ult: return "ult";
  case BinOpK::Slt: return "slt";
  case BinOpK::BAnd: return "band";
  case BinOpK::BOr: return "bor";
  case BinOpK::BImp: return "bimp";
  }
  return "?";
}

void print_expr_into(const ExprPtr &e, std::string &out) {
  switch (e->kind) {
  case BExpr::Kind::ConstWord:
    out += "(w" + std::to_string(e->width) + " " + hex(e->bits) + ")";
    return;
  case BExpr::Kind::ConstLabel:
    out += "(label " + quote(e->name) + ")";
    return;
  case BExpr::Kind::Var:
    out += "(var " + e->name + ")";
    return;
  case BExpr::Kind::Ite:
    out += "(ite ";
    print_expr_into(e->a, out);
    out += " ";
    print_expr_into(e->b, out);
    out += " ";
    print_expr_into(e->c, out);
    out += ")";
    return;
  case BExpr::Kind::UnOp: {
    switch (e->un) {
    case UnOpK::Not: out += "(not "; break;
    case UnOpK::Neg: out += "(neg "; break;
    case UnOpK::ZExt: out += "(zext " + std::to_string(e->cast_width) + " "; break;
    case UnOpK::SExt: out += "(sext " + std::to_string(e->cast_width) + " "; break;
    case UnOpK::Trunc: out += "(trunc " + std::to_string(e->cast_width) + " "; break;
    }
    print_expr_into(e->a, out);
    out += ")";
    return;
  }
  case BExpr::Kind::BinOp:
    out += std::string("(") + binop_name(e->bin) + " ";
    print_expr_into(e->a, out);
    out += " ";
    print_expr_into(e->b, out);
    out += ")";
    return;
  case BExpr::Kind::Load:
    out += "(load ";
    print_expr_into(e->a, out);
    out += " ";
    print_expr_into(e->b, out);
    out += " " + std::to_string(e->width) + ")";
    return;
  case BExpr::Kind::Store:
    out += "(store ";
    print_expr_into(e->a, out);
    out += " ";
    print_expr_into(e->b, out);
    out += " ";
    print_expr_into(e->c, out);
    out += " " + std::to_string(e->width) + ")";
    return;
  case BExpr::Kind::Subst:
    out += "(subst ";
    print_expr_into(e->a, out);
    out += " " + e->name + " ";
    print_expr_into(e->b, out);
    out += ")";
    return;
  }
}

// ---- expression parsing ----

struct ExprParser {
  std::string err;
  size_t err_pos = 0;

  ExprPtr fail(const std::string &m, size_t pos) {
    if (err.empty()) {
      err = m;
      err_pos = pos;
    }
    return nullptr;
  }

  ExprPtr expr(const SNode &n) {
    if (n.is_atom) return fail("expected expression list", n.pos);
    if (n.items.empty() || !n.items[0].is_atom)
      return fail("expected operator", n.pos);
    const std::string &op = n.items[0].atom;
    size_t argc = n.items.size() - 1;

    auto need = [&](size_t k) {
      if (argc != k) {
        fail("operator " + op + " expects " + std::to_string(k) + " operands",
             n.pos);
        return false;
      }
      return true;
    };
    auto width_arg = [&](size_t idx, unsigned &w) {
      uint64_t v;
      if (!n.items[idx].is_atom || !parse_u64(n.items[idx].atom, v)) {
        fail("expected width", n.items[idx].pos);
        return false;
      }
      w = unsigned(v);
      return true;
    };

    if (op.size() >= 2 && op[0] == 'w' && isdigit((unsigned char)op[1])) {
      uint64_t wv, bits;
      if (!parse_u64(op.substr(1), wv)) return fail("bad width", n.pos);
      unsigned w = unsigned(wv);
      if (!valid_reg_width(w)) return fail("bad word width", n.pos);
      if (!need(1)) return nullptr;
      if (!n.items[1].is_atom || !parse_u64(n.items[1].atom, bits))
        return fail("expected word value", n.items[1].pos);
      return const_word(w, bits);
    }
    if (op == "label") {
      if (!need(1) || !n.items[1].is_atom)
        return fail("expected label text", n.pos);
      return const_label(n.items[1].atom);
    }
    if (op == "var") {
      if (!need(1) || !n.items[1].is_atom)
        return fail("expected variable name", n.pos);
      return var(n.items[1].atom);
    }
    if (op == "ite") {
      if (!need(3)) return nullptr;
      auto a = expr(n.items[1]), b = expr(n.items[2]), c = expr(n.items[3]);
      if (!a || !b || !c) return nullptr;
      return ite(a, b, c);
    }
    if (op == "not" || op == "neg") {
      if (!need(1)) return nullptr;
      auto a = expr(n.items[1]);
      if (!a) return nullptr;
      return unop(op == "not" ? UnOpK::Not : UnOpK::Neg, a);
    }
    if (op == "zext" || op == "sext" || op == "trunc") {
      if (!need(2)) return nullptr;
      unsigned w;
      if (!width_arg(1, w)) return nullptr;
      auto a = expr(n.items[2]);
      if (!a) return nullptr;
      UnOpK k = op == "zext" ? UnOpK::ZExt
                : op == "sext" ? UnOpK::SExt
                               : UnOpK::Trunc;
      if (!valid_reg_width(w)) return fail("bad cast width", n.pos);
      return cast(k, w, a);
    }
    static const std::pair<const char *, BinOpK> binops[] = {
        {"add", BinOpK::Add}, {"sub", BinOpK::Sub}, {"mul", BinOpK::Mul},
        {"and", BinOpK::And}, {"or", BinOpK::Or},   {"xor", BinOpK::Xor},
        {"shl", BinOpK::Shl}, {"lshr", BinOpK::Lshr}, {"ashr", BinOpK::Ashr},
        {"eq", BinOpK::Eq},   {"ult", BinOpK::Ult},  {"slt", BinOpK::Slt},
        {"band", BinOpK::BAnd}, {"bor", BinOpK::BOr}, {"bimp", BinOpK::BImp},
    };
    for (auto &[name, k] : binops) {
      if (op == name) {
        if (!need(2)) return nullptr;
        auto a = expr(n.items[1]), b = expr(n.items[2]);
        if (!a || !b) return nullptr;
        return binop(k, a, b);
      }
    }
    if (op == "load") {
      if (!need(3)) return nullptr;
      auto m = expr(n.items[1]), a = expr(n.items[2]);
      unsigned w;
      if (!m || !a || !width_arg(3, w)) return nullptr;
      if (w < 8 || !valid_reg_width(w)) return fail("bad load width", n.pos);
      return load(m, a, w);
    }
    if (op == "store") {
      if (!need(4)) return nullptr;
      auto m = expr(n.items[1]), a = expr(n.items[2]), v = expr(n.items[3]);
      unsigned w;
      if (!m || !a || !v || !width_arg(4, w)) return nullptr;
      if (w < 8 || !valid_reg_width(w)) return fail("bad store width", n.pos);
      return store(m, a, v, w);
    }
    if (op == "subst") {
      if (!need(3)) return nullptr;
      auto r = expr(n.items[1]);
      if (!r) return nullptr;
      if (!n.items[2].is_atom) return fail("expected variable name", n.pos);
      auto b = expr(n.items[3]);
      if (!b) return nullptr;
      return subst(r, n.items[2].atom, b);
    }
    return fail("unknown operator " + op, n.pos);
  }
};

Parsed<SNode> read_one(const std::string &text) {
  Reader r(text);
  SNode n;
  if (!r.read(n)) return Parsed<SNode>::failure(r.err, r.err_pos);
  r.skip_ws();
  if (r.i != text.size())
    return Parsed<SNode>::failure("trailing input", r.i);
  return Parsed<SNode>::success(std::move(n));
}

ExprPtr expr_of_node(const SNode &n, std::string &err, size_t &pos) {
  ExprParser p;
  ExprPtr e = p.expr(n);
  if (!e) {
    err = p.err;
    pos = p.err_pos;
  }
  return e;
}

std::optional<Label> label_of_node(const SNode &n) {
  if (!n.is_atom) return std::nullopt;
  if (n.was_quoted) return Label::of_name(n.atom);
  uint64_t v;
  if (parse_u64(n.atom, v)) return Label::of_addr(v);
  return std::nullopt;
}

} // namespace

// ---- public entry points ----

std::string print_expr(const ExprPtr &e) {
  std::string out;
  print_expr_into(e, out);
  return out;
}

Parsed<ExprPtr> parse_expr(const std::string &text) {
  auto n = read_one(text);
  if (!n.ok) return Parsed<ExprPtr>::failure(n.error.message, n.error.pos);
  std::string err;
  size_t pos = 0;
  ExprPtr e = expr_of_node(n.value, err, pos);
  if (!e) return Parsed<ExprPtr>::failure(err, pos);
  return Parsed<ExprPtr>::success(std::move(e));
}

std::string print_label(const Label &l) {
  return l.is_string ? quote(l.name) : hex(l.addr);
}

Parsed<Label> parse_label(const std::string &text) {
  auto n = read_one(text);
  if (!n.ok) return Parsed<Label>::failure(n.error.message, n.error.pos);
  auto l = label_of_node(n.value);
  if (!l) return Parsed<Label>::failure("expected label", n.value.pos);
  return Parsed<Label>::success(*l);
}

std::string print_program(const BirProgram &p) {
  std::string out = "(program";
  for (const auto &b : p.blocks) {
    out += "\n  (block " + print_label(b.label) + "\n    (stmts";
    for (const auto &s : b.stmts) {
      if (s.kind == BirStmt::Kind::Assign)
        out += "\n      (assign " + s.var + " " + print_expr(s.e) + ")";
      else
        out += "\n      (assert " + print_expr(s.e) + ")";
    }
    out += ")\n    ";
    if (b.cf.kind == CfStmt::Kind::Jmp)
      out += "(jmp " + print_expr(b.cf.target) + ")";
    else
      out += "(cjmp " + print_expr(b.cf.cond) + " " + print_expr(b.cf.target) +
             " " + print_expr(b.cf.else_target) + ")";
    out += ")";
  }
  out += ")\n";
  return out;
}

Parsed<BirProgram> parse_program(const std::string &text) {
  using P = Parsed<BirProgram>;
  auto top = read_one(text);
  if (!top.ok) return P::failure(top.error.message, top.error.pos);
  const SNode &n = top.value;
  if (n.is_atom || n.items.empty() || !n.items[0].is_atom ||
      n.items[0].atom != "program")
    return P::failure("expected (program ...)", n.pos);
  BirProgram prog;
  for (size_t bi = 1; bi < n.items.size(); bi++) {
    const SNode &bn = n.items[bi];
    if (bn.is_atom || bn.items.size() != 4 || !bn.items[0].is_atom ||
        bn.items[0].atom != "block")
      return P::failure("expected (block <label> (stmts ...) <cf>)", bn.pos);
    BirBlock blk;
    auto l = label_of_node(bn.items[1]);
    if (!l) return P::failure("expected block label", bn.items[1].pos);
    blk.label = *l;
    const SNode &sn = bn.items[2];
    if (sn.is_atom || sn.items.empty() || !sn.items[0].is_atom ||
        sn.items[0].atom != "stmts")
      return P::failure("expected (stmts ...)", sn.pos);
    for (size_t si = 1; si < sn.items.size(); si++) {
      const SNode &st = sn.items[si];
      if (st.is_atom || st.items.empty() || !st.items[0].is_atom)
        return P::failure("expected statement", st.pos);
      std::string err;
      size_t pos = 0;
      if (st.items[0].atom == "assign" && st.items.size() == 3 &&
          st.items[1].is_atom) {
        ExprPtr e = expr_of_node(st.items[2], err, pos);
        if (!e) return P::failure(err, pos);
        blk.stmts.push_back(BirStmt::assign(st.items[1].atom, e));
      } else if (st.items[0].atom == "assert" && st.items.size() == 2) {
        ExprPtr e = expr_of_node(st.items[1], err, pos);
        if (!e) return P::failure(err, pos);
        blk.stmts.push_back(BirStmt::assert_(e));
      } else {
        return P::failure("expected (assign ...) or (assert ...)", st.pos);
      }
    }
    const SNode &cf = bn.items[3];
    if (cf.is_atom || cf.items.empty() || !cf.items[0].is_atom)
      return P::failure("expected control-flow statement", cf.pos);
    std::string err;
    size_t pos = 0;
    if (cf.items[0].atom == "jmp" && cf.items.size() == 2) {
      ExprPtr t = expr_of_node(cf.items[1], err, pos);
      if (!t) return P::failure(err, pos);
      blk.cf = CfStmt::jmp(t);
    } else if (cf.items[0].atom == "cjmp" && cf.items.size() == 4) {
      ExprPtr c = expr_of_node(cf.items[1], err, pos);
      if (!c) return P::failure(err, pos);
      ExprPtr t1 = expr_of_node(cf.items[2], err, pos);
      if (!t1) return P::failure(err, pos);
      ExprPtr t2 = expr_of_node(cf.items[3], err, pos);
      if (!t2) return P::failure(err, pos);
      blk.cf = CfStmt::cjmp(c, t1, t2);
    } else {
      return P::failure("expected (jmp ...) or (cjmp ...)", cf.pos);
    }
    prog.blocks.push_back(std::move(blk));
  }
  return P::success(std::move(prog));
}

std::string print_env(const Env &env) {
  std::string out = "(env";
  for (const auto &[name, tv] : env.bindings()) {
    out += "\n  (" + name + " ";
    if (tv.type.is_reg()) {
      out += "(reg " + std::to_string(tv.type.width()) + ") (w" +
             std::to_string(tv.value.width()) + " " + hex(tv.value.bits()) + ")";
    } else {
      out += "(mem " + std::to_string(tv.type.width()) + ") (bytes";
      for (const auto &[a, b] : tv.value.memory().bytes())
        out += " (" + hex(a) + " " + hex(b) + ")";
      out += ")";
    }
    out += ")";
  }
  out += ")\n";
  return out;
}

Parsed<Env> parse_env(const std::string &text) {
  using P = Parsed<Env>;
  auto top = read_one(text);
  if (!top.ok) return P::failure(top.error.message, top.error.pos);
  const SNode &n = top.value;
  if (n.is_atom || n.items.empty() || !n.items[0].is_atom ||
      n.items[0].atom != "env")
    return P::failure("expected (env ...)", n.pos);
  Env env;
  for (size_t i = 1; i < n.items.size(); i++) {
    const SNode &bn = n.items[i];
    if (bn.is_atom || bn.items.size() != 3 || !bn.items[0].is_atom)
      return P::failure("expected (<name> <type> <value>)", bn.pos);
    const std::string &name = bn.items[0].atom;
    const SNode &tn = bn.items[1];
    const SNode &vn = bn.items[2];
    if (tn.is_atom || tn.items.size() != 2 || !tn.items[0].is_atom)
      return P::failure("expected (reg N) or (mem N)", tn.pos);
    uint64_t w;
    if (!tn.items[1].is_atom || !parse_u64(tn.items[1].atom, w))
      return P::failure("expected width", tn.pos);
    try {
      if (tn.items[0].atom == "reg") {
        if (vn.is_atom || vn.items.size() != 2 || !vn.items[0].is_atom)
          return P::failure("expected (wN value)", vn.pos);
        uint64_t bits;
        if (!vn.items[1].is_atom || !parse_u64(vn.items[1].atom, bits))
          return P::failure("expected word value", vn.pos);
        env.bind(name, BType::reg(unsigned(w)),
                 BValue::word(unsigned(w), bits));
      } else if (tn.items[0].atom == "mem") {
        if (vn.is_atom || vn.items.empty() || !vn.items[0].is_atom ||
            vn.items[0].atom != "bytes")
          return P::failure("expected (bytes ...)", vn.pos);
        MemBytes::Map m;
        for (size_t k = 1; k < vn.items.size(); k++) {
          const SNode &pn = vn.items[k];
          uint64_t a, b;
          if (pn.is_atom || pn.items.size() != 2 || !pn.items[0].is_atom ||
              !pn.items[1].is_atom || !parse_u64(pn.items[0].atom, a) ||
              !parse_u64(pn.items[1].atom, b))
            return P::failure("expected (addr byte)", pn.pos);
          m[a] = uint8_t(b);
        }
        env.bind(name, BType::mem(unsigned(w)),
                 BValue::mem(MemBytes(unsigned(w), std::move(m))));
      } else {
        return P::failure("unknown type " + tn.items[0].atom, tn.pos);
      }
    } catch (const std::exception &ex) {
      return P::failure(ex.what(), bn.pos);
    }
  }
  return P::success(std::move(env));
}

std::string print_predmap(const PredMap &pm) {
  std::string out = "(predmap";
  for (const auto &[l, e] : pm)
    out += "\n  (" + print_label(l) + " " + print_expr(e) + ")";
  out += ")\n";
  return out;
}

Parsed<PredMap> parse_predmap(const std::string &text) {
  using P = Parsed<PredMap>;
  auto top = read_one(text);
  if (!top.ok) return P::failure(top.error.message, top.error.pos);
  const SNode &n = top.value;
  if (n.is_atom || n.items.empty() || !n.items[0].is_atom ||
      n.items[0].atom != "predmap")
    return P::failure("expected (predmap ...)", n.pos);
  PredMap pm;
  for (size_t i = 1; i < n.items.size(); i++) {
    const SNode &en = n.items[i];
    if (en.is_atom || en.items.size() != 2)
      return P::failure("expected (<label> <expr>)", en.pos);
    auto l = label_of_node(en.items[0]);
    if (!l) return P::failure("expected label", en.items[0].pos);
    std::string err;
    size_t pos = 0;
    ExprPtr e = expr_of_node(en.items[1], err, pos);
    if (!e) return P::failure(err, pos);
    pm[*l] = e;
  }
  return P::success(std::move(pm));
}

std::string print_goal(const GoalText &g) {
  return "(goal\n  (premise " + print_expr(g.premise) + ")\n  (conclusion " +
         print_expr(g.conclusion) + "))\n";
}

Parsed<GoalText> parse_goal(const std::string &text) {
  using P = Parsed<GoalText>;
  auto top = read_one(text);
  if (!top.ok) return P::failure(top.error.message, top.error.pos);
  const SNode &n = top.value;
  if (n.is_atom || n.items.size() != 3 || !n.items[0].is_atom ||
      n.items[0].atom != "goal")
    return P::failure("expected (goal (premise ...) (conclusion ...))", n.pos);
  GoalText g;
  for (size_t i = 1; i <= 2; i++) {
    const SNode &part = n.items[i];
    if (part.is_atom || part.items.size() != 2 || !part.items[0].is_atom)
      return P::failure("expected (premise|conclusion <expr>)", part.pos);
    std::string err;
    size_t pos = 0;
    ExprPtr e = expr_of_node(part.items[1], err, pos);
    if (!e) return P::failure(err, pos);
    if (part.items[0].atom == "premise")
      g.premise = e;
    else if (part.items[0].atom == "conclusion")
      g.conclusion = e;
    else
      return P::failure("expected premise/conclusion", part.pos);
  }
  if (!g.premise || !g.conclusion)
    return P::failure("goal needs premise and conclusion", n.pos);
  return P::success(std::move(g));
}

} // namespace bir::text

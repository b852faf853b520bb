#include "smtlib.hpp"

#include "sat.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace minismt {

namespace {

uint64_t maskw(unsigned w) { return w >= 64 ? ~0ULL : ((1ULL << w) - 1); }

// ---- s-expressions ----

struct Node {
  bool atom = false;
  std::string text;
  std::vector<Node> items;
};

struct Reader {
  const std::string &s;
  size_t i = 0;

  bool skip() {
    while (i < s.size()) {
      if (isspace((unsigned char)s[i]))
        i++;
      else if (s[i] == ';') {
        while (i < s.size() && s[i] != '\n') i++;
      } else
        return true;
    }
    return false;
  }
  std::optional<Node> read() {
    if (!skip()) return std::nullopt;
    Node n;
    if (s[i] == '(') {
      i++;
      while (skip() && s[i] != ')') {
        auto c = read();
        if (!c) throw std::runtime_error("unterminated list");
        n.items.push_back(std::move(*c));
      }
      if (i >= s.size()) throw std::runtime_error("unterminated list");
      i++;
      return n;
    }
    if (s[i] == ')') throw std::runtime_error("unexpected )");
    n.atom = true;
    if (s[i] == '|') {
      size_t end = s.find('|', i + 1);
      if (end == std::string::npos) throw std::runtime_error("unterminated |");
      n.text = s.substr(i + 1, end - i - 1);
      i = end + 1;
      return n;
    }
    size_t start = i;
    while (i < s.size() && !isspace((unsigned char)s[i]) && s[i] != '(' &&
           s[i] != ')' && s[i] != ';')
      i++;
    n.text = s.substr(start, i - start);
    return n;
  }
};

// ---- sorts and terms ----

struct Sort {
  enum class K { Bool, Bv, Array } k = K::Bool;
  unsigned width = 0;      // Bv
  unsigned addr_width = 0; // Array index width (elements are Bv 8)
  bool operator==(const Sort &o) const = default;
  static Sort boolean() { return {K::Bool, 0, 0}; }
  static Sort bv(unsigned w) { return {K::Bv, w, 0}; }
  static Sort array(unsigned aw) { return {K::Array, 0, aw}; }
};

struct Term;
using TPtr = std::shared_ptr<const Term>;

struct Term {
  enum class Op {
    Const,      // bv constant: bits/width
    True, False,
    Var,        // name
    Not, And, Or, Implies, Xor, // booleans
    Eq,                         // any sort -> Bool
    Ite,                        // Bool x T x T
    BvNot, BvNeg,
    BvAnd, BvOr, BvXor, BvAdd, BvSub, BvMul,
    BvShl, BvLshr, BvAshr,
    BvUlt, BvUle, BvUgt, BvUge, BvSlt, BvSle, BvSgt, BvSge,
    Concat, Extract, ZeroExt, SignExt,
    Select, Store,
  };
  Op op = Op::Const;
  Sort sort;
  uint64_t bits = 0;
  unsigned hi = 0, lo = 0; // Extract
  std::string name;
  std::vector<TPtr> args;
};

TPtr mkt(Term t) { return std::make_shared<const Term>(std::move(t)); }

TPtr bv_const(uint64_t bits, unsigned w) {
  Term t;
  t.op = Term::Op::Const;
  t.sort = Sort::bv(w);
  t.bits = bits & maskw(w);
  return mkt(std::move(t));
}

struct Ctx {
  std::map<std::string, Sort> vars;
  std::vector<TPtr> assertions;
};

[[noreturn]] void err(const std::string &m) { throw std::runtime_error(m); }

Sort parse_sort(const Node &n) {
  if (n.atom) {
    if (n.text == "Bool") return Sort::boolean();
    err("unknown sort " + n.text);
  }
  if (n.items.size() == 3 && n.items[0].atom && n.items[0].text == "_" &&
      n.items[1].atom && n.items[1].text == "BitVec")
    return Sort::bv(unsigned(std::stoul(n.items[2].text)));
  if (n.items.size() == 3 && n.items[0].atom && n.items[0].text == "Array") {
    Sort idx = parse_sort(n.items[1]);
    Sort el = parse_sort(n.items[2]);
    if (idx.k != Sort::K::Bv || !(el == Sort::bv(8)))
      err("only (Array (_ BitVec n) (_ BitVec 8)) arrays are supported");
    return Sort::array(idx.width);
  }
  err("unknown sort");
}

struct TermParser {
  Ctx &ctx;

  TPtr parse(const Node &n) {
    if (n.atom) return atom(n.text);
    if (n.items.empty()) err("empty application");
    // ((_ op args) x) indexed applications
    if (!n.items[0].atom) {
      const Node &head = n.items[0];
      if (head.items.size() >= 2 && head.items[0].atom &&
          head.items[0].text == "_") {
        const std::string &op = head.items[1].text;
        if (op == "extract") {
          unsigned hi = unsigned(std::stoul(head.items[2].text));
          unsigned lo = unsigned(std::stoul(head.items[3].text));
          TPtr a = parse(n.items[1]);
          if (a->sort.k != Sort::K::Bv || hi < lo || hi >= a->sort.width)
            err("bad extract");
          Term t;
          t.op = Term::Op::Extract;
          t.hi = hi;
          t.lo = lo;
          t.sort = Sort::bv(hi - lo + 1);
          t.args = {a};
          return mkt(std::move(t));
        }
        if (op == "zero_extend" || op == "sign_extend") {
          unsigned k = unsigned(std::stoul(head.items[2].text));
          TPtr a = parse(n.items[1]);
          if (a->sort.k != Sort::K::Bv) err("bad extend");
          Term t;
          t.op = op == "zero_extend" ? Term::Op::ZeroExt : Term::Op::SignExt;
          t.sort = Sort::bv(a->sort.width + k);
          t.args = {a};
          return mkt(std::move(t));
        }
      }
      // ((as const (Array ...)) v)
      if (head.items.size() == 3 && head.items[0].atom &&
          head.items[0].text == "as" && head.items[1].atom &&
          head.items[1].text == "const")
        err("as-const arrays are not supported in input");
      err("unsupported application head");
    }
    const std::string &op = n.items[0].text;
    if (op == "_") {
      // (_ bvN w)
      if (n.items.size() == 3 && n.items[1].text.rfind("bv", 0) == 0)
        return bv_const(strtoull(n.items[1].text.c_str() + 2, nullptr, 10),
                        unsigned(std::stoul(n.items[2].text)));
      err("unknown indexed literal");
    }
    std::vector<TPtr> args;
    for (size_t i = 1; i < n.items.size(); i++) args.push_back(parse(n.items[i]));
    return apply(op, std::move(args));
  }

  TPtr atom(const std::string &a) {
    if (a == "true" || a == "false") {
      Term t;
      t.op = a == "true" ? Term::Op::True : Term::Op::False;
      t.sort = Sort::boolean();
      return mkt(std::move(t));
    }
    if (a.rfind("#b", 0) == 0) {
      uint64_t bits = 0;
      for (size_t k = 2; k < a.size(); k++) bits = (bits << 1) | uint64_t(a[k] == '1');
      return bv_const(bits, unsigned(a.size() - 2));
    }
    if (a.rfind("#x", 0) == 0)
      return bv_const(strtoull(a.c_str() + 2, nullptr, 16),
                      unsigned((a.size() - 2) * 4));
    auto it = ctx.vars.find(a);
    if (it == ctx.vars.end()) err("undeclared symbol " + a);
    Term t;
    t.op = Term::Op::Var;
    t.name = a;
    t.sort = it->second;
    return mkt(std::move(t));
  }

  TPtr fold_left(Term::Op op, Sort sort, std::vector<TPtr> args) {
    TPtr acc = args[0];
    for (size_t i = 1; i < args.size(); i++) {
      Term t;
      t.op = op;
      t.sort = sort;
      t.args = {acc, args[i]};
      acc = mkt(std::move(t));
    }
    return acc;
  }

  TPtr apply(const std::string &op, std::vector<TPtr> args) {
    auto need = [&](size_t k) {
      if (args.size() != k) err(op + ": bad arity");
    };
    auto bool_args = [&]() {
      for (auto &a : args)
        if (a->sort.k != Sort::K::Bool) err(op + ": Bool expected");
    };
    auto bv_args_same = [&]() {
      for (auto &a : args)
        if (a->sort.k != Sort::K::Bv || a->sort.width != args[0]->sort.width)
          err(op + ": matching bitvectors expected");
    };

    if (op == "not") {
      need(1);
      bool_args();
      Term t;
      t.op = Term::Op::Not;
      t.sort = Sort::boolean();
      t.args = std::move(args);
      return mkt(std::move(t));
    }
    if (op == "and" || op == "or" || op == "xor" || op == "=>") {
      if (args.size() < 2) err(op + ": bad arity");
      bool_args();
      Term::Op k = op == "and"  ? Term::Op::And
                   : op == "or" ? Term::Op::Or
                   : op == "xor" ? Term::Op::Xor
                                 : Term::Op::Implies;
      if (op == "=>") {
        // right-assoc
        TPtr acc = args.back();
        for (size_t i = args.size() - 1; i-- > 0;) {
          Term t;
          t.op = k;
          t.sort = Sort::boolean();
          t.args = {args[i], acc};
          acc = mkt(std::move(t));
        }
        return acc;
      }
      return fold_left(k, Sort::boolean(), std::move(args));
    }
    if (op == "=") {
      need(2);
      if (!(args[0]->sort == args[1]->sort)) err("=: sort mismatch");
      Term t;
      t.op = Term::Op::Eq;
      t.sort = Sort::boolean();
      t.args = std::move(args);
      return mkt(std::move(t));
    }
    if (op == "ite") {
      need(3);
      if (args[0]->sort.k != Sort::K::Bool) err("ite: Bool condition expected");
      if (!(args[1]->sort == args[2]->sort)) err("ite: branch sort mismatch");
      Term t;
      t.op = Term::Op::Ite;
      t.sort = args[1]->sort;
      t.args = std::move(args);
      return mkt(std::move(t));
    }
    if (op == "select") {
      need(2);
      if (args[0]->sort.k != Sort::K::Array ||
          !(args[1]->sort == Sort::bv(args[0]->sort.addr_width)))
        err("select: sort mismatch");
      Term t;
      t.op = Term::Op::Select;
      t.sort = Sort::bv(8);
      t.args = std::move(args);
      return mkt(std::move(t));
    }
    if (op == "store") {
      need(3);
      if (args[0]->sort.k != Sort::K::Array ||
          !(args[1]->sort == Sort::bv(args[0]->sort.addr_width)) ||
          !(args[2]->sort == Sort::bv(8)))
        err("store: sort mismatch");
      Term t;
      t.op = Term::Op::Store;
      t.sort = args[0]->sort;
      t.args = std::move(args);
      return mkt(std::move(t));
    }
    if (op == "concat") {
      need(2);
      if (args[0]->sort.k != Sort::K::Bv || args[1]->sort.k != Sort::K::Bv)
        err("concat: bitvectors expected");
      Term t;
      t.op = Term::Op::Concat;
      t.sort = Sort::bv(args[0]->sort.width + args[1]->sort.width);
      t.args = std::move(args);
      return mkt(std::move(t));
    }
    static const std::pair<const char *, Term::Op> unary_bv[] = {
        {"bvnot", Term::Op::BvNot}, {"bvneg", Term::Op::BvNeg}};
    for (auto &[name, k] : unary_bv) {
      if (op == name) {
        need(1);
        if (args[0]->sort.k != Sort::K::Bv) err(op + ": bitvector expected");
        Term t;
        t.op = k;
        t.sort = args[0]->sort;
        t.args = std::move(args);
        return mkt(std::move(t));
      }
    }
    static const std::pair<const char *, Term::Op> bin_bv[] = {
        {"bvand", Term::Op::BvAnd},   {"bvor", Term::Op::BvOr},
        {"bvxor", Term::Op::BvXor},   {"bvadd", Term::Op::BvAdd},
        {"bvsub", Term::Op::BvSub},   {"bvmul", Term::Op::BvMul},
        {"bvshl", Term::Op::BvShl},   {"bvlshr", Term::Op::BvLshr},
        {"bvashr", Term::Op::BvAshr}};
    for (auto &[name, k] : bin_bv) {
      if (op == name) {
        if (args.size() < 2) err(op + ": bad arity");
        bv_args_same();
        return fold_left(k, args[0]->sort, std::move(args));
      }
    }
    static const std::pair<const char *, Term::Op> cmp_bv[] = {
        {"bvult", Term::Op::BvUlt}, {"bvule", Term::Op::BvUle},
        {"bvugt", Term::Op::BvUgt}, {"bvuge", Term::Op::BvUge},
        {"bvslt", Term::Op::BvSlt}, {"bvsle", Term::Op::BvSle},
        {"bvsgt", Term::Op::BvSgt}, {"bvsge", Term::Op::BvSge}};
    for (auto &[name, k] : cmp_bv) {
      if (op == name) {
        need(2);
        bv_args_same();
        Term t;
        t.op = k;
        t.sort = Sort::boolean();
        t.args = std::move(args);
        return mkt(std::move(t));
      }
    }
    err("unsupported operator " + op);
  }
};

// ---- array elimination ----
//
// Step 1 replaces array-equality atoms with fresh boolean selectors
// constrained on every relevant index plus a per-atom witness index.
// Step 2 rewrites select-over-store. Step 3 replaces base-array selects
// with fresh 8-bit variables plus functional-consistency implications.

struct ArrayElim {
  Ctx &ctx;
  std::vector<TPtr> extra; // added assertions
  int fresh_count = 0;

  std::string fresh_name(const std::string &hint) {
    for (;;) {
      std::string n = "!" + hint + std::to_string(fresh_count++);
      if (!ctx.vars.count(n)) return n;
    }
  }

  TPtr fresh_var(Sort s, const std::string &hint) {
    std::string n = fresh_name(hint);
    ctx.vars.emplace(n, s);
    Term t;
    t.op = Term::Op::Var;
    t.name = n;
    t.sort = s;
    return mkt(std::move(t));
  }

  static void collect_indices(const TPtr &t, std::vector<TPtr> &out) {
    if ((t->op == Term::Op::Select || t->op == Term::Op::Store))
      out.push_back(t->args[1]);
    for (auto &a : t->args) collect_indices(a, out);
  }

  TPtr mk_select(TPtr arr, TPtr idx) {
    Term t;
    t.op = Term::Op::Select;
    t.sort = Sort::bv(8);
    t.args = {std::move(arr), std::move(idx)};
    return mkt(std::move(t));
  }
  static TPtr mk_bool(Term::Op op, std::vector<TPtr> args) {
    Term t;
    t.op = op;
    t.sort = Sort::boolean();
    t.args = std::move(args);
    return mkt(std::move(t));
  }
  static TPtr mk_ite(TPtr c, TPtr a, TPtr b) {
    Term t;
    t.op = Term::Op::Ite;
    t.sort = a->sort;
    t.args = {std::move(c), std::move(a), std::move(b)};
    return mkt(std::move(t));
  }

  // Step 1: array equalities -> selector booleans.
  TPtr split_array_eq(const TPtr &t, const std::vector<TPtr> &all_indices) {
    std::vector<TPtr> args;
    for (auto &a : t->args) args.push_back(split_array_eq(a, all_indices));
    if (t->op == Term::Op::Eq && t->args[0]->sort.k == Sort::K::Array) {
      TPtr b = fresh_var(Sort::boolean(), "aeq");
      TPtr w = fresh_var(Sort::bv(t->args[0]->sort.addr_width), "wit");
      std::vector<TPtr> idxs = all_indices;
      idxs.push_back(w);
      for (const TPtr &i : idxs) {
        if (!(i->sort == Sort::bv(t->args[0]->sort.addr_width))) continue;
        TPtr pointwise = mk_bool(
            Term::Op::Eq, {mk_select(args[0], i), mk_select(args[1], i)});
        extra.push_back(
            mk_bool(Term::Op::Implies, {b, pointwise}));
      }
      extra.push_back(mk_bool(
          Term::Op::Implies,
          {mk_bool(Term::Op::Not, {b}),
           mk_bool(Term::Op::Not,
                   {mk_bool(Term::Op::Eq, {mk_select(args[0], w),
                                           mk_select(args[1], w)})})}));
      return b;
    }
    if (args == t->args) return t;
    Term n = *t;
    n.args = std::move(args);
    return mkt(std::move(n));
  }

  // Step 2: read-over-write.
  TPtr rewrite_selects(const TPtr &t) {
    std::vector<TPtr> args;
    for (auto &a : t->args) args.push_back(rewrite_selects(a));
    if (t->op == Term::Op::Select && args[0]->op == Term::Op::Store) {
      TPtr arr = args[0], idx = args[1];
      TPtr cond = mk_bool(Term::Op::Eq, {idx, arr->args[1]});
      TPtr inner = rewrite_selects(mk_select(arr->args[0], idx));
      return mk_ite(cond, arr->args[2], inner);
    }
    if (args == t->args) return t;
    Term n = *t;
    n.args = std::move(args);
    return mkt(std::move(n));
  }

  // Step 3: Ackermannize base-array selects.
  struct SelectKey {
    std::string base;
    TPtr index;
  };
  std::vector<std::pair<SelectKey, TPtr>> select_vars; // key -> bv8 var

  static bool term_equal(const TPtr &a, const TPtr &b) {
    if (a == b) return true;
    if (a->op != b->op || !(a->sort == b->sort) || a->bits != b->bits ||
        a->hi != b->hi || a->lo != b->lo || a->name != b->name ||
        a->args.size() != b->args.size())
      return false;
    for (size_t i = 0; i < a->args.size(); i++)
      if (!term_equal(a->args[i], b->args[i])) return false;
    return true;
  }

  TPtr ackermannize(const TPtr &t) {
    std::vector<TPtr> args;
    for (auto &a : t->args) args.push_back(ackermannize(a));
    if (t->op == Term::Op::Select) {
      if (args[0]->op != Term::Op::Var)
        err("internal: select base is not a variable after rewriting");
      TPtr idx = args[1];
      for (auto &[key, var] : select_vars)
        if (key.base == args[0]->name && term_equal(key.index, idx)) return var;
      TPtr v = fresh_var(Sort::bv(8), "sel");
      // Functional consistency with every earlier select on this base.
      for (auto &[key, var] : select_vars) {
        if (key.base != args[0]->name) continue;
        extra.push_back(mk_bool(
            Term::Op::Implies,
            {mk_bool(Term::Op::Eq, {idx, key.index}),
             mk_bool(Term::Op::Eq, {v, var})}));
      }
      select_vars.push_back({{args[0]->name, idx}, v});
      return v;
    }
    if (args == t->args) return t;
    Term n = *t;
    n.args = std::move(args);
    return mkt(std::move(n));
  }
};

// ---- bit blasting ----

struct Blaster {
  Sat sat;
  int tru; // literal fixed true

  Blaster() {
    int v = sat.new_var();
    tru = pos_lit(v);
    sat.add_clause({tru});
  }
  int fls() const { return lit_not(tru); }

  int fresh() { return pos_lit(sat.new_var()); }

  int lnot(int a) { return lit_not(a); }
  int land(int a, int b) {
    if (a == fls() || b == fls()) return fls();
    if (a == tru) return b;
    if (b == tru) return a;
    int c = fresh();
    sat.add_clause({lit_not(a), lit_not(b), c});
    sat.add_clause({a, lit_not(c)});
    sat.add_clause({b, lit_not(c)});
    return c;
  }
  int lor(int a, int b) { return lit_not(land(lit_not(a), lit_not(b))); }
  int lxor(int a, int b) {
    if (a == fls()) return b;
    if (b == fls()) return a;
    if (a == tru) return lit_not(b);
    if (b == tru) return lit_not(a);
    int c = fresh();
    sat.add_clause({lit_not(a), lit_not(b), lit_not(c)});
    sat.add_clause({a, b, lit_not(c)});
    sat.add_clause({a, lit_not(b), c});
    sat.add_clause({lit_not(a), b, c});
    return c;
  }
  int mux(int c, int t, int f) {
    if (c == tru) return t;
    if (c == fls()) return f;
    if (t == f) return t;
    int z = fresh();
    sat.add_clause({lit_not(c), lit_not(t), z});
    sat.add_clause({lit_not(c), t, lit_not(z)});
    sat.add_clause({c, lit_not(f), z});
    sat.add_clause({c, f, lit_not(z)});
    return z;
  }

  using Bits = std::vector<int>; // LSB first

  Bits constant(uint64_t bits, unsigned w) {
    Bits out(w);
    for (unsigned i = 0; i < w; i++) out[i] = (bits >> i) & 1 ? tru : fls();
    return out;
  }

  Bits adder(const Bits &a, const Bits &b, int cin, int *cout = nullptr) {
    Bits out(a.size());
    int carry = cin;
    for (size_t i = 0; i < a.size(); i++) {
      int axb = lxor(a[i], b[i]);
      out[i] = lxor(axb, carry);
      carry = lor(land(a[i], b[i]), land(axb, carry));
    }
    if (cout) *cout = carry;
    return out;
  }

  Bits bvnot(const Bits &a) {
    Bits out(a.size());
    for (size_t i = 0; i < a.size(); i++) out[i] = lit_not(a[i]);
    return out;
  }

  Bits mul(const Bits &a, const Bits &b) {
    Bits acc = constant(0, unsigned(a.size()));
    for (size_t i = 0; i < b.size(); i++) {
      Bits shifted(a.size(), fls());
      for (size_t k = i; k < a.size(); k++) shifted[k] = land(a[k - i], b[i]);
      acc = adder(acc, shifted, fls());
    }
    return acc;
  }

  int eq_bits(const Bits &a, const Bits &b) {
    int acc = tru;
    for (size_t i = 0; i < a.size(); i++)
      acc = land(acc, lit_not(lxor(a[i], b[i])));
    return acc;
  }

  int ult(const Bits &a, const Bits &b) {
    int cout = tru;
    adder(a, bvnot(b), tru, &cout); // a - b; borrow = !carry
    return lit_not(cout);
  }

  int slt(const Bits &a, const Bits &b) {
    int sa = a.back(), sb = b.back();
    return mux(lxor(sa, sb), sa, ult(a, b));
  }

  // Barrel shifter honoring full SMT shift semantics (amount >= width
  // yields zero / sign fill).
  Bits shift(const Bits &a, const Bits &amt, bool left, bool arith) {
    unsigned w = unsigned(a.size());
    int fill_base = arith ? a.back() : fls();
    Bits cur = a;
    unsigned stages = 0;
    while ((1ULL << stages) < w) stages++;
    for (unsigned s = 0; s < stages && s < amt.size(); s++) {
      uint64_t k = 1ULL << s;
      Bits shifted(w);
      for (unsigned i = 0; i < w; i++) {
        int from;
        if (left)
          from = i >= k ? cur[i - k] : fls();
        else
          from = i + k < w ? cur[i + k] : fill_base;
        shifted[i] = from;
      }
      Bits next(w);
      for (unsigned i = 0; i < w; i++) next[i] = mux(amt[s], shifted[i], cur[i]);
      cur = next;
    }
    // Any higher amount bit set -> full shift-out.
    int big = fls();
    for (size_t s = stages; s < amt.size(); s++) big = lor(big, amt[s]);
    Bits out(w);
    for (unsigned i = 0; i < w; i++)
      out[i] = mux(big, left ? fls() : fill_base, cur[i]);
    return out;
  }
};

// ---- solver driver ----

struct Solver {
  Ctx ctx;
  Options opt;
  Blaster bl;
  std::map<std::string, Blaster::Bits> var_bits; // bv vars
  std::map<std::string, int> var_bool;           // bool vars
  std::map<const Term *, Blaster::Bits> memo_bits;
  std::map<const Term *, int> memo_bool;

  // For model printing: original array selects.
  struct SelectInfo {
    std::string base;
    TPtr index;
    TPtr value_var;
  };
  std::vector<SelectInfo> selects;
  std::map<std::string, Sort> declared; // user-declared symbols only

  bool solved = false;
  Sat::Result result = Sat::Result::Unknown;

  Blaster::Bits &bits_of_var(const std::string &name, unsigned w) {
    auto it = var_bits.find(name);
    if (it != var_bits.end()) return it->second;
    Blaster::Bits b(w);
    for (unsigned i = 0; i < w; i++) b[i] = bl.fresh();
    return var_bits.emplace(name, std::move(b)).first->second;
  }
  int bool_of_var(const std::string &name) {
    auto it = var_bool.find(name);
    if (it != var_bool.end()) return it->second;
    return var_bool.emplace(name, bl.fresh()).first->second;
  }

  Blaster::Bits blast_bits(const TPtr &t) {
    auto it = memo_bits.find(t.get());
    if (it != memo_bits.end()) return it->second;
    Blaster::Bits out;
    unsigned w = t->sort.width;
    switch (t->op) {
    case Term::Op::Const: out = bl.constant(t->bits, w); break;
    case Term::Op::Var: out = bits_of_var(t->name, w); break;
    case Term::Op::Ite: {
      int c = blast_bool(t->args[0]);
      Blaster::Bits a = blast_bits(t->args[1]);
      Blaster::Bits b = blast_bits(t->args[2]);
      out.resize(w);
      for (unsigned i = 0; i < w; i++) out[i] = bl.mux(c, a[i], b[i]);
      break;
    }
    case Term::Op::BvNot: out = bl.bvnot(blast_bits(t->args[0])); break;
    case Term::Op::BvNeg:
      out = bl.adder(bl.bvnot(blast_bits(t->args[0])),
                     bl.constant(0, w), bl.tru);
      break;
    case Term::Op::BvAnd:
    case Term::Op::BvOr:
    case Term::Op::BvXor: {
      Blaster::Bits a = blast_bits(t->args[0]);
      Blaster::Bits b = blast_bits(t->args[1]);
      out.resize(w);
      for (unsigned i = 0; i < w; i++)
        out[i] = t->op == Term::Op::BvAnd  ? bl.land(a[i], b[i])
                 : t->op == Term::Op::BvOr ? bl.lor(a[i], b[i])
                                           : bl.lxor(a[i], b[i]);
      break;
    }
    case Term::Op::BvAdd:
      out = bl.adder(blast_bits(t->args[0]), blast_bits(t->args[1]), bl.fls());
      break;
    case Term::Op::BvSub:
      out = bl.adder(blast_bits(t->args[0]), bl.bvnot(blast_bits(t->args[1])),
                     bl.tru);
      break;
    case Term::Op::BvMul:
      out = bl.mul(blast_bits(t->args[0]), blast_bits(t->args[1]));
      break;
    case Term::Op::BvShl:
      out = bl.shift(blast_bits(t->args[0]), blast_bits(t->args[1]), true, false);
      break;
    case Term::Op::BvLshr:
      out = bl.shift(blast_bits(t->args[0]), blast_bits(t->args[1]), false, false);
      break;
    case Term::Op::BvAshr:
      out = bl.shift(blast_bits(t->args[0]), blast_bits(t->args[1]), false, true);
      break;
    case Term::Op::Concat: {
      Blaster::Bits hi = blast_bits(t->args[0]);
      Blaster::Bits lo = blast_bits(t->args[1]);
      out = lo;
      out.insert(out.end(), hi.begin(), hi.end());
      break;
    }
    case Term::Op::Extract: {
      Blaster::Bits a = blast_bits(t->args[0]);
      out.assign(a.begin() + t->lo, a.begin() + t->hi + 1);
      break;
    }
    case Term::Op::ZeroExt:
    case Term::Op::SignExt: {
      Blaster::Bits a = blast_bits(t->args[0]);
      out = a;
      int fill = t->op == Term::Op::ZeroExt ? bl.fls() : a.back();
      out.resize(w, fill);
      break;
    }
    default:
      err("internal: unexpected bv operator");
    }
    memo_bits.emplace(t.get(), out);
    return out;
  }

  int blast_bool(const TPtr &t) {
    auto it = memo_bool.find(t.get());
    if (it != memo_bool.end()) return it->second;
    int out;
    switch (t->op) {
    case Term::Op::True: out = bl.tru; break;
    case Term::Op::False: out = bl.fls(); break;
    case Term::Op::Var: out = bool_of_var(t->name); break;
    case Term::Op::Not: out = lit_not(blast_bool(t->args[0])); break;
    case Term::Op::And:
      out = bl.land(blast_bool(t->args[0]), blast_bool(t->args[1]));
      break;
    case Term::Op::Or:
      out = bl.lor(blast_bool(t->args[0]), blast_bool(t->args[1]));
      break;
    case Term::Op::Xor:
      out = bl.lxor(blast_bool(t->args[0]), blast_bool(t->args[1]));
      break;
    case Term::Op::Implies:
      out = bl.lor(lit_not(blast_bool(t->args[0])), blast_bool(t->args[1]));
      break;
    case Term::Op::Ite:
      out = bl.mux(blast_bool(t->args[0]), blast_bool(t->args[1]),
                   blast_bool(t->args[2]));
      break;
    case Term::Op::Eq:
      if (t->args[0]->sort.k == Sort::K::Bool)
        out = lit_not(bl.lxor(blast_bool(t->args[0]), blast_bool(t->args[1])));
      else
        out = bl.eq_bits(blast_bits(t->args[0]), blast_bits(t->args[1]));
      break;
    case Term::Op::BvUlt:
      out = bl.ult(blast_bits(t->args[0]), blast_bits(t->args[1]));
      break;
    case Term::Op::BvUle:
      out = lit_not(bl.ult(blast_bits(t->args[1]), blast_bits(t->args[0])));
      break;
    case Term::Op::BvUgt:
      out = bl.ult(blast_bits(t->args[1]), blast_bits(t->args[0]));
      break;
    case Term::Op::BvUge:
      out = lit_not(bl.ult(blast_bits(t->args[0]), blast_bits(t->args[1])));
      break;
    case Term::Op::BvSlt:
      out = bl.slt(blast_bits(t->args[0]), blast_bits(t->args[1]));
      break;
    case Term::Op::BvSle:
      out = lit_not(bl.slt(blast_bits(t->args[1]), blast_bits(t->args[0])));
      break;
    case Term::Op::BvSgt:
      out = bl.slt(blast_bits(t->args[1]), blast_bits(t->args[0]));
      break;
    case Term::Op::BvSge:
      out = lit_not(bl.slt(blast_bits(t->args[0]), blast_bits(t->args[1])));
      break;
    default:
      err("internal: unexpected boolean operator");
    }
    memo_bool.emplace(t.get(), out);
    return out;
  }

  void check_sat(std::ostringstream &out) {
    // Arrays out, then CNF.
    ArrayElim elim{ctx, {}, 0};
    std::vector<TPtr> work = ctx.assertions;
    std::vector<TPtr> all_indices;
    for (const TPtr &a : work) ArrayElim::collect_indices(a, all_indices);
    for (TPtr &a : work) a = elim.split_array_eq(a, all_indices);
    for (size_t i = 0; i < elim.extra.size(); i++)
      work.push_back(elim.extra[i]);
    elim.extra.clear();
    for (TPtr &a : work) a = elim.rewrite_selects(a);
    for (TPtr &a : work) a = elim.ackermannize(a);
    while (!elim.extra.size() == 0) {
      std::vector<TPtr> more = std::move(elim.extra);
      elim.extra.clear();
      for (TPtr &a : more) {
        a = elim.rewrite_selects(a);
        a = elim.ackermannize(a);
        work.push_back(a);
      }
    }
    for (auto &[key, var] : elim.select_vars)
      selects.push_back({key.base, key.index, var});

    for (const TPtr &a : work) {
      if (a->sort.k != Sort::K::Bool) err("assertion is not Bool");
      bl.sat.add_clause({blast_bool(a)});
    }
    result = bl.sat.solve(opt.conflict_budget);
    solved = true;
    switch (result) {
    case Sat::Result::Sat: out << "sat\n"; break;
    case Sat::Result::Unsat: out << "unsat\n"; break;
    case Sat::Result::Unknown: out << "unknown\n"; break;
    }
  }

  uint64_t bits_value(const Blaster::Bits &b) {
    uint64_t v = 0;
    for (size_t i = 0; i < b.size() && i < 64; i++) {
      int l = b[i];
      bool val = bl.sat.model_value(lit_var(l));
      if (lit_sign(l)) val = !val;
      if (val) v |= 1ULL << i;
    }
    return v;
  }

  // Term evaluation under the SAT model (used for array indices).
  uint64_t eval_term(const TPtr &t) {
    if (t->sort.k == Sort::K::Bool) return eval_bool(t) ? 1 : 0;
    auto it = memo_bits.find(t.get());
    if (it != memo_bits.end()) return bits_value(it->second);
    switch (t->op) {
    case Term::Op::Const: return t->bits;
    case Term::Op::Var: return bits_value(bits_of_var(t->name, t->sort.width));
    default: return bits_value(blast_bits(t)); // safe: model is fixed
    }
  }
  bool eval_bool(const TPtr &t) {
    auto it = memo_bool.find(t.get());
    int l = it != memo_bool.end() ? it->second : blast_bool(t);
    bool val = bl.sat.model_value(lit_var(l));
    return lit_sign(l) ? !val : val;
  }

  void get_model(std::ostringstream &out) {
    if (!solved || result != Sat::Result::Sat) {
      out << "(error \"model is not available\")\n";
      return;
    }
    out << "(model\n";
    for (auto &[name, sort] : declared) {
      if (sort.k == Sort::K::Bv) {
        uint64_t v = bits_value(bits_of_var(name, sort.width));
        out << "  (define-fun " << name << " () (_ BitVec " << sort.width
            << ") (_ bv" << v << " " << sort.width << "))\n";
      } else if (sort.k == Sort::K::Bool) {
        out << "  (define-fun " << name << " () Bool "
            << (eval_bool_var(name) ? "true" : "false") << ")\n";
      } else {
        // Store chain over a zero-default constant array, one entry per
        // observed select index.
        std::map<uint64_t, uint64_t> entries;
        for (const SelectInfo &s : selects)
          if (s.base == name)
            entries[eval_term(s.index)] = eval_term(s.value_var);
        out << "  (define-fun " << name << " () (Array (_ BitVec "
            << sort.addr_width << ") (_ BitVec 8)) ";
        std::string arr = "((as const (Array (_ BitVec " +
                          std::to_string(sort.addr_width) +
                          ") (_ BitVec 8))) (_ bv0 8))";
        for (auto &[idx, val] : entries)
          arr = "(store " + arr + " (_ bv" + std::to_string(idx) + " " +
                std::to_string(sort.addr_width) + ") (_ bv" +
                std::to_string(val) + " 8))";
        out << arr << ")\n";
      }
    }
    out << ")\n";
  }
  bool eval_bool_var(const std::string &name) {
    int l = bool_of_var(name);
    bool val = bl.sat.model_value(lit_var(l));
    return lit_sign(l) ? !val : val;
  }
};

} // namespace

std::string run_script(const std::string &text, const Options &opt) {
  std::ostringstream out;
  try {
    Reader r{text};
    Solver solver;
    solver.opt = opt;
    TermParser tp{solver.ctx};
    while (auto cmd = r.read()) {
      if (cmd->atom || cmd->items.empty() || !cmd->items[0].atom)
        err("malformed command");
      const std::string &c = cmd->items[0].text;
      if (c == "set-logic" || c == "set-option" || c == "set-info") continue;
      if (c == "declare-const" || c == "declare-fun") {
        size_t sort_at = c == "declare-const" ? 2 : 3;
        if (cmd->items.size() != sort_at + 1 || !cmd->items[1].atom)
          err("malformed declaration");
        if (c == "declare-fun" && !cmd->items[2].items.empty())
          err("only constants are supported");
        Sort s = parse_sort(cmd->items[sort_at]);
        solver.ctx.vars.emplace(cmd->items[1].text, s);
        solver.declared.emplace(cmd->items[1].text, s);
        continue;
      }
      if (c == "assert") {
        if (cmd->items.size() != 2) err("malformed assert");
        TPtr t = tp.parse(cmd->items[1]);
        if (t->sort.k != Sort::K::Bool) err("assert expects Bool");
        solver.ctx.assertions.push_back(t);
        continue;
      }
      if (c == "check-sat") {
        solver.check_sat(out);
        continue;
      }
      if (c == "get-model") {
        solver.get_model(out);
        continue;
      }
      if (c == "exit") break;
      err("unsupported command " + c);
    }
  } catch (const std::exception &ex) {
    out << "(error \"" << ex.what() << "\")\n";
  }
  return out.str();
}

} // namespace minismt

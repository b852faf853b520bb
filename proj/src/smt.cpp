#include "bir/smt.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sstream>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

namespace bir::smt {

namespace {

std::string symbol(const std::string &name) {
  bool simple = !name.empty() && !isdigit((unsigned char)name[0]);
  for (char c : name)
    simple &= isalnum((unsigned char)c) || c == '_' || c == '.' || c == '-';
  if (simple) return name;
  return "|" + name + "|";
}

std::string bv_lit(uint64_t bits, unsigned width) {
  std::ostringstream o;
  o << "(_ bv" << bits << " " << width << ")";
  return o.str();
}

std::string bool_wrap(const std::string &pred) {
  return "(ite " + pred + " #b1 #b0)";
}

struct Translator {
  const std::map<std::string, BType> &typing;
  std::string error;

  struct Term {
    std::string text;
    SType type;
  };

  std::optional<Term> fail(const std::string &m) {
    if (error.empty()) error = m;
    return std::nullopt;
  }

  std::optional<Term> tr(const ExprPtr &e) {
    switch (e->kind) {
    case BExpr::Kind::ConstWord:
      return Term{bv_lit(e->bits, e->width), SType::reg(e->width)};
    case BExpr::Kind::ConstLabel:
      return fail("label constant has no SMT sort");
    case BExpr::Kind::Var: {
      auto it = typing.find(e->name);
      if (it == typing.end()) return fail("untyped variable " + e->name);
      return Term{symbol(e->name), SType::of(it->second)};
    }
    case BExpr::Kind::Ite: {
      auto c = tr(e->a), t = tr(e->b), f = tr(e->c);
      if (!c || !t || !f) return std::nullopt;
      if (!c->type.is_reg(1)) return fail("ite condition is not Reg1");
      return Term{"(ite (= " + c->text + " #b1) " + t->text + " " + f->text +
                      ")",
                  t->type};
    }
    case BExpr::Kind::UnOp: {
      auto a = tr(e->a);
      if (!a) return std::nullopt;
      if (a->type.kind != SType::Kind::Reg) return fail("unary on non-word");
      unsigned w = a->type.width;
      switch (e->un) {
      case UnOpK::Not: return Term{"(bvnot " + a->text + ")", a->type};
      case UnOpK::Neg: return Term{"(bvneg " + a->text + ")", a->type};
      case UnOpK::ZExt:
        if (e->cast_width == w) return a;
        return Term{"((_ zero_extend " + std::to_string(e->cast_width - w) +
                        ") " + a->text + ")",
                    SType::reg(e->cast_width)};
      case UnOpK::SExt:
        if (e->cast_width == w) return a;
        return Term{"((_ sign_extend " + std::to_string(e->cast_width - w) +
                        ") " + a->text + ")",
                    SType::reg(e->cast_width)};
      case UnOpK::Trunc:
        if (e->cast_width == w) return a;
        return Term{"((_ extract " + std::to_string(e->cast_width - 1) +
                        " 0) " + a->text + ")",
                    SType::reg(e->cast_width)};
      }
      return fail("bad unary operator");
    }
    case BExpr::Kind::BinOp: {
      auto a = tr(e->a), b = tr(e->b);
      if (!a || !b) return std::nullopt;
      auto bv2 = [&](const char *op) {
        return Term{std::string("(") + op + " " + a->text + " " + b->text + ")",
                    a->type};
      };
      switch (e->bin) {
      case BinOpK::Add: return bv2("bvadd");
      case BinOpK::Sub: return bv2("bvsub");
      case BinOpK::Mul: return bv2("bvmul");
      case BinOpK::And: return bv2("bvand");
      case BinOpK::Or: return bv2("bvor");
      case BinOpK::Xor: return bv2("bvxor");
      case BinOpK::Shl:
      case BinOpK::Lshr:
      case BinOpK::Ashr: {
        // Shift amounts are modulo the width; widths are powers of two,
        // so the mask is width-1.
        unsigned w = a->type.width;
        std::string amt =
            "(bvand " + b->text + " " + bv_lit(w - 1, w) + ")";
        const char *op = e->bin == BinOpK::Shl    ? "bvshl"
                         : e->bin == BinOpK::Lshr ? "bvlshr"
                                                  : "bvashr";
        return Term{std::string("(") + op + " " + a->text + " " + amt + ")",
                    a->type};
      }
      case BinOpK::Eq:
        return Term{bool_wrap("(= " + a->text + " " + b->text + ")"),
                    SType::reg(1)};
      case BinOpK::Ult:
        return Term{bool_wrap("(bvult " + a->text + " " + b->text + ")"),
                    SType::reg(1)};
      case BinOpK::Slt:
        return Term{bool_wrap("(bvslt " + a->text + " " + b->text + ")"),
                    SType::reg(1)};
      case BinOpK::BAnd: return bv2("bvand");
      case BinOpK::BOr: return bv2("bvor");
      case BinOpK::BImp:
        return Term{"(bvor (bvnot " + a->text + ") " + b->text + ")",
                    SType::reg(1)};
      }
      return fail("bad binary operator");
    }
    case BExpr::Kind::Load: {
      auto m = tr(e->a), a = tr(e->b);
      if (!m || !a) return std::nullopt;
      unsigned aw = a->type.width;
      unsigned n = e->width / 8;
      // Little-endian: the byte at addr+n-1 is most significant.
      std::string out;
      if (n == 1) {
        out = "(select " + m->text + " " + a->text + ")";
      } else {
        out = "(concat";
        for (unsigned k = n; k-- > 0;) {
          std::string idx =
              k == 0 ? a->text
                     : "(bvadd " + a->text + " " + bv_lit(k, aw) + ")";
          out += " (select " + m->text + " " + idx + ")";
        }
        out += ")";
      }
      return Term{out, SType::reg(e->width)};
    }
    case BExpr::Kind::Store: {
      auto m = tr(e->a), a = tr(e->b), v = tr(e->c);
      if (!m || !a || !v) return std::nullopt;
      unsigned aw = a->type.width;
      unsigned n = e->width / 8;
      std::string out = m->text;
      for (unsigned k = 0; k < n; k++) {
        std::string idx =
            k == 0 ? a->text : "(bvadd " + a->text + " " + bv_lit(k, aw) + ")";
        std::string byte =
            n == 1 ? v->text
                   : "((_ extract " + std::to_string(8 * k + 7) + " " +
                         std::to_string(8 * k) + ") " + v->text + ")";
        out = "(store " + out + " " + idx + " " + byte + ")";
      }
      return Term{out, m->type};
    }
    case BExpr::Kind::Subst:
      return fail("substitution node: simplify first");
    }
    return fail("malformed expression");
  }
};

} // namespace

std::variant<std::string, SmtError>
to_smt(const ExprPtr &e, const std::map<std::string, BType> &typing) {
  Translator t{typing, {}};
  auto r = t.tr(e);
  if (!r) return SmtError{t.error};
  return r->text;
}

std::variant<SmtScript, SmtError>
implication_script(const ExprPtr &premise, const ExprPtr &conclusion,
                   const std::map<std::string, BType> &typing) {
  Translator t{typing, {}};
  auto p = t.tr(premise);
  if (!p) return SmtError{t.error};
  auto c = t.tr(conclusion);
  if (!c) return SmtError{t.error};
  if (!p->type.is_reg(1) || !c->type.is_reg(1))
    return SmtError{"implication sides must be Reg1"};

  std::set<std::string> used;
  auto fv = free_vars(premise);
  used.insert(fv.begin(), fv.end());
  fv = free_vars(conclusion);
  used.insert(fv.begin(), fv.end());

  std::ostringstream s;
  s << "(set-option :produce-models true)\n";
  s << "(set-logic QF_ABV)\n";
  for (const std::string &name : used) {
    auto it = typing.find(name);
    if (it == typing.end()) return SmtError{"untyped variable " + name};
    if (it->second.is_reg())
      s << "(declare-const " << symbol(name) << " (_ BitVec "
        << it->second.width() << "))\n";
    else
      s << "(declare-const " << symbol(name) << " (Array (_ BitVec "
        << it->second.width() << ") (_ BitVec 8)))\n";
  }
  s << "(assert (= " << p->text << " #b1))\n";
  s << "(assert (= " << c->text << " #b0))\n";
  s << "(check-sat)\n(get-model)\n";
  return SmtScript{s.str()};
}

// ---- solver process ----

namespace {

struct RunResult {
  bool started = false;
  bool timed_out = false;
  int exit_code = -1;
  std::string output;
};

RunResult run_process(const std::string &path, const std::string &arg,
                      int timeout_sec) {
  RunResult r;
  int fds[2];
  if (pipe(fds) != 0) return r;
  pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    return r;
  }
  if (pid == 0) {
    dup2(fds[1], 1);
    dup2(fds[1], 2);
    close(fds[0]);
    close(fds[1]);
    execlp(path.c_str(), path.c_str(), arg.c_str(), (char *)nullptr);
    _exit(127);
  }
  close(fds[1]);
  r.started = true;
  struct pollfd pfd{fds[0], POLLIN, 0};
  int waited_ms = 0;
  const int step_ms = 20;
  bool open = true;
  while (open) {
    int pr = poll(&pfd, 1, step_ms);
    if (pr > 0) {
      char buf[4096];
      ssize_t n = read(fds[0], buf, sizeof buf);
      if (n <= 0)
        open = false;
      else
        r.output.append(buf, size_t(n));
    } else {
      waited_ms += step_ms;
      if (timeout_sec > 0 && waited_ms >= timeout_sec * 1000) {
        kill(pid, SIGKILL);
        r.timed_out = true;
        open = false;
      }
    }
  }
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  return r;
}

// Minimal s-expression reader for solver model output.
struct ModelNode {
  bool atom = false;
  std::string text;
  std::vector<ModelNode> items;
};

bool read_model_node(const std::string &s, size_t &i, ModelNode &out) {
  while (i < s.size() && isspace((unsigned char)s[i])) i++;
  if (i >= s.size()) return false;
  if (s[i] == '(') {
    i++;
    out.atom = false;
    while (true) {
      while (i < s.size() && isspace((unsigned char)s[i])) i++;
      if (i < s.size() && s[i] == ')') {
        i++;
        return true;
      }
      ModelNode child;
      if (!read_model_node(s, i, child)) return false;
      out.items.push_back(std::move(child));
    }
  }
  out.atom = true;
  if (s[i] == '|') {
    size_t end = s.find('|', i + 1);
    if (end == std::string::npos) return false;
    out.text = s.substr(i + 1, end - i - 1);
    i = end + 1;
    return true;
  }
  size_t start = i;
  while (i < s.size() && !isspace((unsigned char)s[i]) && s[i] != '(' &&
         s[i] != ')')
    i++;
  out.text = s.substr(start, i - start);
  return i > start;
}

bool parse_bv_value(const ModelNode &n, uint64_t &bits, unsigned &width) {
  if (n.atom) {
    if (n.text.rfind("#b", 0) == 0) {
      width = unsigned(n.text.size() - 2);
      bits = 0;
      for (size_t k = 2; k < n.text.size(); k++)
        bits = (bits << 1) | uint64_t(n.text[k] == '1');
      return true;
    }
    if (n.text.rfind("#x", 0) == 0) {
      width = unsigned((n.text.size() - 2) * 4);
      bits = strtoull(n.text.c_str() + 2, nullptr, 16);
      return true;
    }
    return false;
  }
  // (_ bvN width)
  if (n.items.size() == 3 && n.items[0].atom && n.items[0].text == "_" &&
      n.items[1].atom && n.items[1].text.rfind("bv", 0) == 0) {
    bits = strtoull(n.items[1].text.c_str() + 2, nullptr, 10);
    width = unsigned(strtoull(n.items[2].text.c_str(), nullptr, 10));
    return true;
  }
  return false;
}

// Array values: ((as const ...) default) wrapped in store chains.
bool parse_array_value(const ModelNode &n, std::map<uint64_t, uint8_t> &bytes,
                       uint64_t &default_byte) {
  if (!n.atom && !n.items.empty() && n.items[0].atom &&
      n.items[0].text == "store" && n.items.size() == 4) {
    if (!parse_array_value(n.items[1], bytes, default_byte)) return false;
    uint64_t idx, val;
    unsigned w;
    if (!parse_bv_value(n.items[2], idx, w)) return false;
    if (!parse_bv_value(n.items[3], val, w)) return false;
    bytes[idx] = uint8_t(val);
    return true;
  }
  if (!n.atom && n.items.size() == 2 && !n.items[0].atom &&
      n.items[0].items.size() >= 2 && n.items[0].items[0].atom &&
      n.items[0].items[0].text == "as" && n.items[0].items[1].atom &&
      n.items[0].items[1].text == "const") {
    unsigned w;
    return parse_bv_value(n.items[1], default_byte, w);
  }
  return false;
}

} // namespace

std::string resolve_solver(const std::string &explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char *env = getenv("BIRTK_SOLVER"); env && *env) return env;
  // A minismt sitting next to the current executable.
  char buf[4096];
  ssize_t n = readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n > 0) {
    buf[n] = 0;
    std::string dir(buf);
    size_t slash = dir.rfind('/');
    if (slash != std::string::npos) {
      std::string cand = dir.substr(0, slash + 1) + "minismt";
      if (access(cand.c_str(), X_OK) == 0) return cand;
    }
  }
  return "";
}

std::variant<ProveOutcome, SmtError>
prove_implication(const ExprPtr &premise, const ExprPtr &conclusion,
                  const std::map<std::string, BType> &typing,
                  const std::string &solver_path, int timeout_sec) {
  auto script = implication_script(premise, conclusion, typing);
  if (auto *err = std::get_if<SmtError>(&script)) return *err;

  std::string solver = resolve_solver(solver_path);
  if (solver.empty() || access(solver.c_str(), X_OK) != 0)
    return SmtError{"solver not found" +
                        (solver.empty() ? std::string() : ": " + solver),
                    true};

  char tmpl[] = "/tmp/birtk-smt-XXXXXX";
  int fd = mkstemp(tmpl);
  if (fd < 0) return SmtError{"cannot create temporary script file"};
  const std::string &text = std::get<SmtScript>(script).text;
  if (write(fd, text.data(), text.size()) != ssize_t(text.size())) {
    close(fd);
    unlink(tmpl);
    return SmtError{"cannot write script file"};
  }
  close(fd);
  RunResult run = run_process(solver, tmpl, timeout_sec);
  unlink(tmpl);
  if (!run.started) return SmtError{"cannot start solver process", true};

  ProveOutcome out;
  out.raw = run.output;
  if (run.timed_out) {
    out.verdict = Verdict::Unknown;
    out.note = "timeout";
    return out;
  }
  std::istringstream lines(run.output);
  std::string first;
  while (std::getline(lines, first)) {
    if (!first.empty()) break;
  }
  if (first == "unsat") {
    out.verdict = Verdict::Proved;
    return out;
  }
  if (first == "unknown") {
    out.verdict = Verdict::Unknown;
    return out;
  }
  if (first != "sat")
    return SmtError{"unrecognized solver output: " + first, false, true};

  out.verdict = Verdict::Counterexample;
  // Model: every (define-fun name () sort value) under the remaining
  // output. z3-style wrapping "(model ...)" and bare "(...)" both parse.
  size_t pos = run.output.find('\n');
  std::string rest = pos == std::string::npos ? "" : run.output.substr(pos);
  size_t i = 0;
  ModelNode top;
  if (!read_model_node(rest, i, top)) return out; // sat without model text
  std::vector<const ModelNode *> defs;
  auto scan = [&](auto &&self, const ModelNode &n) -> void {
    if (!n.atom && !n.items.empty() && n.items[0].atom &&
        n.items[0].text == "define-fun") {
      defs.push_back(&n);
      return;
    }
    if (!n.atom)
      for (const ModelNode &c : n.items) self(self, c);
  };
  scan(scan, top);
  for (const ModelNode *d : defs) {
    if (d->items.size() < 5 || !d->items[1].atom) continue;
    const std::string &name = d->items[1].text;
    auto it = typing.find(name);
    if (it == typing.end()) continue;
    if (it->second.is_reg()) {
      uint64_t bits;
      unsigned w;
      if (parse_bv_value(d->items[4], bits, w))
        out.model.bind(name, it->second,
                       BValue::word(it->second.width(),
                                    bits & mask_bits(it->second.width())));
    } else {
      std::map<uint64_t, uint8_t> bytes;
      uint64_t def = 0;
      if (parse_array_value(d->items[4], bytes, def) && def == 0)
        out.model.bind(name, it->second,
                       BValue::mem(MemBytes(it->second.width(), bytes)));
    }
  }
  return out;
}

} // namespace bir::smt

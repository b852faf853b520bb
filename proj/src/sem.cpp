#include "bir/sem.hpp"

namespace bir {

StmtResult exec_stmt(const BirStmt &s, const Env &env) {
  EvalResult r = eval(s.e, env);
  if (s.kind == BirStmt::Kind::Assign) {
    if (!r.ok || r.value.is_label()) return {StmtResult::Kind::TypeError, {}};
    BType t = r.value.is_word() ? BType::reg(r.value.width())
                                : BType::mem(r.value.memory().addr_width());
    if (const TypedValue *old = env.find(s.var)) {
      if (!(old->type == t)) return {StmtResult::Kind::TypeError, {}};
    }
    return {StmtResult::Kind::Ok, env.with(s.var, t, r.value)};
  }
  // Assert
  if (!r.ok || !r.value.is_word() || r.value.width() != 1)
    return {StmtResult::Kind::TypeError, {}};
  if (r.value.bits() == 0) return {StmtResult::Kind::Failed, {}};
  return {StmtResult::Kind::Ok, env};
}

namespace {

// A jump target value is an integer label (any word) or a string label;
// memory-typed targets are a type error.
bool target_label(const EvalResult &r, Label &out) {
  if (!r.ok) return false;
  if (r.value.is_word()) {
    out = Label::of_addr(r.value.bits());
    return true;
  }
  if (r.value.is_label()) {
    out = r.value.label_value();
    return true;
  }
  return false;
}

BirState error_state(Env env, BirState::Pc kind) {
  BirState s;
  s.env = std::move(env);
  s.pc_kind = kind;
  return s;
}

} // namespace

BirState exec_block(const BirProgram &p, const BirState &bs,
                    const LabelSet &exits) {
  if (!bs.running()) return bs;
  const BirBlock *blk = p.find(bs.pc);
  if (!blk) return error_state(bs.env, BirState::Pc::Failed);

  Env env = bs.env;
  for (const BirStmt &s : blk->stmts) {
    StmtResult r = exec_stmt(s, env);
    if (r.kind == StmtResult::Kind::Failed)
      return error_state(std::move(env), BirState::Pc::Failed);
    if (r.kind == StmtResult::Kind::TypeError)
      return error_state(std::move(env), BirState::Pc::TypeError);
    env = std::move(r.env);
  }

  Label next;
  if (blk->cf.kind == CfStmt::Kind::Jmp) {
    if (!target_label(eval(blk->cf.target, env), next))
      return error_state(std::move(env), BirState::Pc::TypeError);
  } else {
    EvalResult c = eval(blk->cf.cond, env);
    if (!c.ok || !c.value.is_word() || c.value.width() != 1)
      return error_state(std::move(env), BirState::Pc::TypeError);
    // Both targets are evaluated; each must be label-valued.
    Label then_l, else_l;
    if (!target_label(eval(blk->cf.target, env), then_l) ||
        !target_label(eval(blk->cf.else_target, env), else_l))
      return error_state(std::move(env), BirState::Pc::TypeError);
    next = c.value.bits() ? then_l : else_l;
  }
  if (!p.has_label(next) && !exits.count(next))
    return error_state(std::move(env), BirState::Pc::Failed);
  return BirState::at(std::move(env), next);
}

WeakResult weak_exec(const BirProgram &p, BirState bs, const LabelSet &ls,
                     uint64_t fuel) {
  for (;;) {
    if (!bs.running()) return {false, std::move(bs)};
    if (ls.count(bs.pc)) return {false, std::move(bs)};
    if (!p.has_label(bs.pc)) {
      bs.pc_kind = BirState::Pc::Failed;
      return {false, std::move(bs)};
    }
    if (fuel == 0) return {true, std::move(bs)};
    fuel--;
    bs = exec_block(p, bs, ls);
  }
}

} // namespace bir

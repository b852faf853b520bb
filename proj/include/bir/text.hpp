// Canonical textual form of expressions, programs, environments and
// predicate maps (S-expression grammar; see docs/format.md). Printing is
// deterministic and parse(print(x)) == x.
#pragma once

#include "bir/eval.hpp"
#include "bir/program.hpp"

#include <string>

namespace bir::text {

struct ParseError {
  std::string message;
  size_t pos = 0;
};

template <typename T> struct Parsed {
  bool ok = false;
  T value{};
  ParseError error;
  static Parsed success(T v) { return {true, std::move(v), {}}; }
  static Parsed failure(std::string msg, size_t pos = 0) {
    return {false, T{}, {std::move(msg), pos}};
  }
};

std::string print_expr(const ExprPtr &e);
Parsed<ExprPtr> parse_expr(const std::string &text);

std::string print_label(const Label &l);
Parsed<Label> parse_label(const std::string &text);

std::string print_program(const BirProgram &p);
Parsed<BirProgram> parse_program(const std::string &text);

std::string print_env(const Env &env);
Parsed<Env> parse_env(const std::string &text);

using PredMap = std::map<Label, ExprPtr>;
std::string print_predmap(const PredMap &pm);
Parsed<PredMap> parse_predmap(const std::string &text);

struct GoalText {
  ExprPtr premise;
  ExprPtr conclusion;
};
std::string print_goal(const GoalText &g);
Parsed<GoalText> parse_goal(const std::string &text);

} // namespace bir::text

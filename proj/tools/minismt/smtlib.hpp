// SMT-LIB2 front end for the QF_ABV fragment: parser, eager array
// elimination (read-over-write + Ackermann constraints + per-equality
// extensionality witnesses), bit-blasting to CNF, and model printing.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace minismt {

struct Options {
  int64_t conflict_budget = -1; // < 0: unbounded
};

// Executes a complete script; returns what a solver would print.
std::string run_script(const std::string &text, const Options &opt = {});

} // namespace minismt

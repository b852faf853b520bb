// Translation validation: lockstep execution of the machine model and the
// lifted program from related states, guard-targeted per-instruction
// trials, and a mutation harness that measures the validator's own
// sensitivity. Randomized memory is sparse: bytes are scattered around the
// addresses each case can touch, with the program bytes installed last.
#pragma once

#include "bir/lifter.hpp"
#include "bir/sem.hpp"

namespace bir::cosim {

// ---- the simulation relation ----

Env related_env(const isa::MachState &s);
BirState make_related(const isa::MachState &s);
// Inverse on the mapped fields (total: unmapped variables are ignored,
// missing ones read as zero). bir.pc must be an integer label.
isa::MachState mach_of_bir(const BirState &bs);
// Empty string when related; otherwise the first differing field.
std::string relation_mismatch(const BirState &bs, const isa::MachState &s);
inline bool related(const BirState &bs, const isa::MachState &s) {
  return relation_mismatch(bs, s).empty();
}

// ---- reports ----

struct Counterexample {
  uint64_t at = 0;
  std::string kind;
  std::string detail;
  isa::MachState initial;
};

struct ValidationReport {
  uint64_t at = 0;
  uint32_t word = 0;
  int trials = 0;
  int related_ok = 0;
  int acceptable_failures = 0; // flagged, not counted as mismatches
  int skipped = 0;             // unsatisfiable guard targets
  std::vector<Counterexample> mismatches;
  bool passed() const { return mismatches.empty(); }
};

// Per-instruction validation: randomized machine states at `at` with the
// program stored in memory, guards of every behavior case targeted, plus
// misaligned and protected-memory boundary states. A failing IR run is
// acceptable only when the machine is stuck or wrote protected memory;
// an IR type error never is.
ValidationReport check_instruction(const lift::LiftedProgram &lp, uint64_t at,
                                   int trials, uint64_t seed);

// n-step lockstep co-simulation from related initial states at the
// program entry; after each machine step the IR runs to the next
// instruction label and the relation is re-checked. The reverse direction
// drives the IR first and replays the machine from the related state.
ValidationReport check_program_sim(const lift::LiftedProgram &lp, int steps,
                                   int trials, uint64_t seed);

// ---- mutation harness ----

struct Mutant {
  std::string description;
  uint64_t instr_addr = 0;
  BirProgram program; // lifted program with one defect injected
};

// Structural single-defect mutations of the lifted blocks: operator
// swaps, constant off-by-ones, dropped assignments, swapped branch
// targets. Known-equivalent patterns are excluded.
std::vector<Mutant> enumerate_mutants(const lift::LiftedProgram &lp);

struct MutationOutcome {
  size_t total = 0;
  size_t killed = 0;
  std::vector<std::string> survivors;
};

// Runs check_instruction against `count` seeded-shuffle-selected mutants;
// a mutant is killed when a counterexample is found within the budget.
MutationOutcome mutation_campaign(const lift::LiftedProgram &lp, size_t count,
                                  int trials_per_mutant, uint64_t seed);

// Reproducible per-trial RNG stream.
uint64_t trial_seed(uint64_t seed, uint64_t index);

} // namespace bir::cosim

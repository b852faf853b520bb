// Typed expression language of the binary intermediate representation:
// word/memory types, runtime values, the expression AST, free variables,
// and the explicit-substitution node used by the WP engine.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bir {

inline uint64_t mask_bits(unsigned width) {
  return width >= 64 ? ~0ULL : ((1ULL << width) - 1);
}

inline bool valid_reg_width(unsigned n) {
  return n == 1 || n == 8 || n == 16 || n == 32 || n == 64;
}
inline bool valid_addr_width(unsigned a) { return a == 32 || a == 64; }

enum class TypeKind { Reg, Mem };

// Variable/value type: Reg(n) for n-bit words, Mem(a) for byte memories
// with a-bit addresses.
class BType {
public:
  static BType reg(unsigned n) {
    if (!valid_reg_width(n))
      throw std::invalid_argument("BType::reg: width must be 1/8/16/32/64");
    return BType(TypeKind::Reg, n);
  }
  static BType mem(unsigned a) {
    if (!valid_addr_width(a))
      throw std::invalid_argument("BType::mem: address width must be 32/64");
    return BType(TypeKind::Mem, a);
  }
  TypeKind kind() const { return kind_; }
  bool is_reg() const { return kind_ == TypeKind::Reg; }
  bool is_mem() const { return kind_ == TypeKind::Mem; }
  // Word width for Reg, address width for Mem.
  unsigned width() const { return width_; }
  bool operator==(const BType &o) const = default;

private:
  BType(TypeKind k, unsigned w) : kind_(k), width_(w) {}
  TypeKind kind_;
  unsigned width_;
};

// Immutable byte map with default byte 0. Addresses are masked to the
// address width; zero-valued entries are dropped so equal memories have
// equal maps.
class MemBytes {
public:
  using Map = std::map<uint64_t, uint8_t>;

  explicit MemBytes(unsigned addr_width, Map bytes = {})
      : addr_width_(addr_width) {
    if (!valid_addr_width(addr_width))
      throw std::invalid_argument("MemBytes: address width must be 32/64");
    Map canon;
    for (auto &[a, b] : bytes)
      if (b != 0) canon.emplace(a & mask_bits(addr_width), b);
    bytes_ = std::make_shared<const Map>(std::move(canon));
  }

  unsigned addr_width() const { return addr_width_; }
  const Map &bytes() const { return *bytes_; }

  uint8_t byte(uint64_t addr) const {
    auto it = bytes_->find(addr & mask_bits(addr_width_));
    return it == bytes_->end() ? 0 : it->second;
  }

  // Little-endian read of nbytes starting at addr (addresses wrap).
  uint64_t read(uint64_t addr, unsigned nbytes) const {
    uint64_t v = 0;
    for (unsigned i = 0; i < nbytes; i++)
      v |= uint64_t(byte(addr + i)) << (8 * i);
    return v;
  }

  // Returns a new memory differing only at the nbytes written addresses.
  MemBytes write(uint64_t addr, uint64_t value, unsigned nbytes) const {
    Map m = *bytes_;
    for (unsigned i = 0; i < nbytes; i++) {
      uint64_t a = (addr + i) & mask_bits(addr_width_);
      uint8_t b = uint8_t(value >> (8 * i));
      if (b == 0)
        m.erase(a);
      else
        m[a] = b;
    }
    MemBytes r(addr_width_);
    r.bytes_ = std::make_shared<const Map>(std::move(m));
    return r;
  }

  bool operator==(const MemBytes &o) const {
    return addr_width_ == o.addr_width_ &&
           (bytes_ == o.bytes_ || *bytes_ == *o.bytes_);
  }

private:
  unsigned addr_width_;
  std::shared_ptr<const Map> bytes_;
};

// Block label: an integer (instruction address) or a string. Integer
// labels order before string labels.
struct Label {
  bool is_string = false;
  uint64_t addr = 0;
  std::string name;

  static Label of_addr(uint64_t a) {
    Label l;
    l.addr = a;
    return l;
  }
  static Label of_name(std::string n) {
    Label l;
    l.is_string = true;
    l.name = std::move(n);
    return l;
  }
  bool operator==(const Label &o) const {
    return is_string == o.is_string &&
           (is_string ? name == o.name : addr == o.addr);
  }
  bool operator<(const Label &o) const {
    if (is_string != o.is_string) return !is_string;
    return is_string ? name < o.name : addr < o.addr;
  }
  std::string str() const;
};

using LabelSet = std::set<Label>;

// Runtime value: an n-bit word (bits canonical, < 2^n), a memory, or a
// label. Labels arise only from label constants and are usable only as
// jump targets; they cannot be bound in an environment.
class BValue {
public:
  enum class Kind { Word, Mem, Label };

  static BValue word(unsigned width, uint64_t bits) {
    if (!valid_reg_width(width))
      throw std::invalid_argument("BValue::word: bad width");
    BValue v;
    v.kind_ = Kind::Word;
    v.width_ = width;
    v.bits_ = bits & mask_bits(width);
    return v;
  }
  static BValue mem(MemBytes m) {
    BValue v;
    v.kind_ = Kind::Mem;
    v.mem_ = std::make_shared<MemBytes>(std::move(m));
    return v;
  }
  static BValue label(Label l) {
    BValue v;
    v.kind_ = Kind::Label;
    v.label_ = std::move(l);
    return v;
  }

  Kind kind() const { return kind_; }
  bool is_word() const { return kind_ == Kind::Word; }
  bool is_mem() const { return kind_ == Kind::Mem; }
  bool is_label() const { return kind_ == Kind::Label; }
  unsigned width() const { return width_; }
  uint64_t bits() const { return bits_; }
  const MemBytes &memory() const { return *mem_; }
  const Label &label_value() const { return label_; }

  bool operator==(const BValue &o) const {
    if (kind_ != o.kind_) return false;
    switch (kind_) {
    case Kind::Word: return width_ == o.width_ && bits_ == o.bits_;
    case Kind::Mem: return *mem_ == *o.mem_;
    case Kind::Label: return label_ == o.label_;
    }
    return false;
  }

private:
  Kind kind_ = Kind::Word;
  unsigned width_ = 1;
  uint64_t bits_ = 0;
  std::shared_ptr<const MemBytes> mem_;
  Label label_;
};

enum class UnOpK {
  Not,   // bitwise complement (boolean not on Reg1)
  Neg,   // two's-complement negate
  ZExt,  // zero-extend to cast_width (>= operand width)
  SExt,  // sign-extend to cast_width
  Trunc, // truncate to cast_width (<= operand width)
};

enum class BinOpK {
  Add, Sub, Mul, And, Or, Xor,
  Shl, Lshr, Ashr,     // shift amount taken modulo the operand width
  Eq, Ult, Slt,        // Reg x Reg -> Reg1; Eq also Mem x Mem -> Reg1
  BAnd, BOr, BImp,     // Reg1 x Reg1 -> Reg1
};

struct BExpr;
using ExprPtr = std::shared_ptr<const BExpr>;

// Expression node. Immutable; shared freely (WP output is a DAG).
struct BExpr {
  enum class Kind {
    ConstWord, ConstLabel, Var, Ite, UnOp, BinOp, Load, Store, Subst,
  };
  Kind kind;
  unsigned width = 0;    // ConstWord width; Load/Store value width
  uint64_t bits = 0;     // ConstWord value
  std::string name;      // ConstLabel text / Var name / Subst variable
  UnOpK un = UnOpK::Not;
  BinOpK bin = BinOpK::Add;
  unsigned cast_width = 0; // target width for ZExt/SExt/Trunc
  ExprPtr a, b, c;
  // operand layout:
  //   Ite:   a = cond, b = then, c = else
  //   UnOp:  a = operand
  //   BinOp: a, b
  //   Load:  a = memory, b = address
  //   Store: a = memory, b = address, c = value
  //   Subst: a = replacement, b = body, name = substituted variable
};

ExprPtr const_word(unsigned width, uint64_t bits);
ExprPtr const_label(std::string text);
ExprPtr var(std::string name);
ExprPtr ite(ExprPtr cond, ExprPtr t, ExprPtr f);
ExprPtr unop(UnOpK op, ExprPtr e);
ExprPtr cast(UnOpK op, unsigned target_width, ExprPtr e);
ExprPtr binop(BinOpK op, ExprPtr a, ExprPtr b);
ExprPtr load(ExprPtr mem, ExprPtr addr, unsigned value_width);
ExprPtr store(ExprPtr mem, ExprPtr addr, ExprPtr value, unsigned value_width);
// Explicit substitution {replacement/name}body. Produced only by the WP
// generator; programs never contain it.
ExprPtr subst(ExprPtr replacement, std::string name, ExprPtr body);

// Common shorthands.
inline ExprPtr btrue() { return const_word(1, 1); }
inline ExprPtr bfalse() { return const_word(1, 0); }
ExprPtr band(ExprPtr a, ExprPtr b);
ExprPtr bimp(ExprPtr a, ExprPtr b);
ExprPtr bnot(ExprPtr a);
ExprPtr eq(ExprPtr a, ExprPtr b);

bool expr_equal(const ExprPtr &a, const ExprPtr &b);

// Free variables; in Subst(E, v, A) the variable v is bound in A.
std::set<std::string> free_vars(const ExprPtr &e);
// Every variable name occurring anywhere, including Subst binders.
std::set<std::string> all_names(const ExprPtr &e);

// Deterministic fresh-name supply: hint, hint_1, hint_2, ...
std::string fresh_name(const std::set<std::string> &avoid,
                       const std::string &hint);

// Node counts. dag_nodes counts shared subterms once; tree_nodes counts
// each occurrence (memoized over shared structure, so it is cheap even
// when the unshared tree would be exponential).
size_t dag_nodes(const ExprPtr &e);
size_t tree_nodes(const ExprPtr &e);
size_t count_var_occurrences(const ExprPtr &e, const std::string &name);
bool contains_subst(const ExprPtr &e);

} // namespace bir

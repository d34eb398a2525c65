// Core KIR data structures: types, instructions, functions, modules.
//
// KIR is a small SSA IR for driver-style programs. Modules are immutable
// after construction; every transform produces a new module value.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kirv {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

enum class TypeKind { Int, Addr, Agg, Void };

/// A KIR type. Int carries a bit width; Addr carries a pointee (a null
/// pointee means "addr opaque"); Agg refers to a module-level type
/// definition by name.
struct KirType {
  TypeKind kind = TypeKind::Void;
  int bits = 0;
  std::string agg_name;
  std::shared_ptr<const KirType> pointee;

  static KirType int_ty(int bits) {
    KirType t;
    t.kind = TypeKind::Int;
    t.bits = bits;
    return t;
  }
  static KirType i64() { return int_ty(64); }
  static KirType i1() { return int_ty(1); }
  static KirType void_ty() { return KirType{}; }
  static KirType agg(std::string name) {
    KirType t;
    t.kind = TypeKind::Agg;
    t.agg_name = std::move(name);
    return t;
  }
  static KirType addr(const KirType &pointee) {
    KirType t;
    t.kind = TypeKind::Addr;
    t.pointee = std::make_shared<const KirType>(pointee);
    return t;
  }
  static KirType addr_opaque() {
    KirType t;
    t.kind = TypeKind::Addr;
    return t;
  }

  bool is_int() const { return kind == TypeKind::Int; }
  bool is_addr() const { return kind == TypeKind::Addr; }
  bool is_agg() const { return kind == TypeKind::Agg; }
  bool is_void() const { return kind == TypeKind::Void; }
  bool is_opaque_addr() const { return is_addr() && !pointee; }

  /// Pointee type; only meaningful for non-opaque Addr.
  const KirType &pointee_ty() const { return *pointee; }

  friend bool operator==(const KirType &a, const KirType &b) {
    if (a.kind != b.kind)
      return false;
    switch (a.kind) {
    case TypeKind::Int:
      return a.bits == b.bits;
    case TypeKind::Agg:
      return a.agg_name == b.agg_name;
    case TypeKind::Addr:
      if (!a.pointee && !b.pointee)
        return true;
      if (!a.pointee || !b.pointee)
        return false;
      return *a.pointee == *b.pointee;
    case TypeKind::Void:
      return true;
    }
    return false;
  }
  friend bool operator!=(const KirType &a, const KirType &b) {
    return !(a == b);
  }
};

// ---------------------------------------------------------------------------
// Operands
// ---------------------------------------------------------------------------

enum class OperandKind { Ssa, Global, IntLit, Null };

/// An instruction operand: an SSA value reference (%x), a global or function
/// reference (@g), an integer literal, or the null address constant.
struct Operand {
  OperandKind kind = OperandKind::IntLit;
  std::string name;
  long long value = 0;

  static Operand ssa(std::string n) {
    Operand o;
    o.kind = OperandKind::Ssa;
    o.name = std::move(n);
    return o;
  }
  static Operand global(std::string n) {
    Operand o;
    o.kind = OperandKind::Global;
    o.name = std::move(n);
    return o;
  }
  static Operand lit(long long v) {
    Operand o;
    o.kind = OperandKind::IntLit;
    o.value = v;
    return o;
  }
  static Operand null() {
    Operand o;
    o.kind = OperandKind::Null;
    return o;
  }

  bool is_ssa() const { return kind == OperandKind::Ssa; }
  bool is_global() const { return kind == OperandKind::Global; }
  bool is_lit() const { return kind == OperandKind::IntLit; }
  bool is_null() const { return kind == OperandKind::Null; }

  bool operator==(const Operand &) const = default;
};

// ---------------------------------------------------------------------------
// Instructions
// ---------------------------------------------------------------------------

enum class Op {
  Alloca,
  Load,
  Store,
  FieldAddr,
  Call,
  Br,
  CondBr,
  Switch,
  Phi,
  Ret,
  BinOp,
  Cmp,
  Cast,
  Nondet,
  Assert,
  Assume,
  RcInc,
  RcDec,
  RcDelta,
  AsmOp,
};

enum class BinKind { Add, Sub, Mul, And, Or, Xor };
enum class CmpKind { Eq, Ne, Slt, Sle, Sgt, Sge };

/// One KIR instruction. A single struct with an opcode keeps operand
/// iteration uniform across passes; per-op payload fields are unused when
/// not applicable.
///
/// `type` holds, per opcode: Alloca = allocated type; Load/Phi/Nondet/Call/
/// Cast/FieldAddr/BinOp/Cmp/RcDelta/AsmOp = result type. Types the grammar
/// does not spell out (Load, BinOp results) are resolved after parsing.
struct Instruction {
  int id = -1;
  Op op = Op::Ret;
  std::string result;
  KirType type = KirType::void_ty();
  BinKind bin = BinKind::Add;
  CmpKind cmp = CmpKind::Eq;
  std::vector<Operand> operands;
  std::string callee;
  std::string field_path;
  std::string ref_class;
  std::string mnemonic;
  std::vector<std::string> labels;       // Br/CondBr/Switch targets, Phi preds
  std::vector<long long> case_values;    // Switch case constants
  std::vector<uint8_t> arg_writeonly;    // Call: per-argument attribute

  bool is_terminator() const {
    return op == Op::Br || op == Op::CondBr || op == Op::Switch ||
           op == Op::Ret;
  }
  bool has_result() const { return !result.empty(); }

  bool operator==(const Instruction &) const = default;
};

struct Param {
  std::string name;
  KirType type;
  bool writeonly = false;
  bool operator==(const Param &) const = default;
};

struct Block {
  std::string label;
  std::vector<Instruction> insts;
  bool operator==(const Block &) const = default;
};

struct Function {
  std::string name;
  std::vector<Param> params;
  KirType ret_type;
  std::vector<Block> blocks;

  const Block *block(const std::string &label) const {
    for (const auto &b : blocks)
      if (b.label == label)
        return &b;
    return nullptr;
  }
  int block_index(const std::string &label) const {
    for (size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i].label == label)
        return static_cast<int>(i);
    return -1;
  }
  const Param *param(const std::string &name) const {
    for (const auto &p : params)
      if (p.name == name)
        return &p;
    return nullptr;
  }
  int param_index(const std::string &name) const {
    for (size_t i = 0; i < params.size(); ++i)
      if (params[i].name == name)
        return static_cast<int>(i);
    return -1;
  }
  int max_inst_id() const {
    int m = -1;
    for (const auto &b : blocks)
      for (const auto &i : b.insts)
        if (i.id > m)
          m = i.id;
    return m;
  }

  bool operator==(const Function &) const = default;
};

// ---------------------------------------------------------------------------
// Module-level items
// ---------------------------------------------------------------------------

/// An aggregate type definition. `kref_path` marks the field path whose
/// terminal integer field is the refcount counter; an aggregate with a
/// kref_path (or one that transitively nests such an aggregate) embeds the
/// counter in the sense relevant to refcount analysis.
struct AggDef {
  std::string name;
  std::vector<std::pair<std::string, KirType>> fields;
  std::optional<std::string> kref_path;

  const KirType *field_type(const std::string &fname) const {
    for (const auto &[n, t] : fields)
      if (n == fname)
        return &t;
    return nullptr;
  }

  bool operator==(const AggDef &) const = default;
};

struct ExternDecl {
  std::string name;
  std::vector<KirType> param_types;
  KirType ret_type;
  bool operator==(const ExternDecl &) const = default;
};

struct GlobalDef {
  std::string name;
  KirType type;
  bool operator==(const GlobalDef &) const = default;
};

struct Module {
  std::vector<AggDef> typedefs;
  std::vector<std::string> ref_classes;
  std::vector<GlobalDef> globals;
  std::vector<ExternDecl> externs;
  std::vector<Function> functions;
  std::optional<std::string> entry;

  const AggDef *typedef_of(const std::string &name) const {
    for (const auto &t : typedefs)
      if (t.name == name)
        return &t;
    return nullptr;
  }
  const Function *function(const std::string &name) const {
    for (const auto &f : functions)
      if (f.name == name)
        return &f;
    return nullptr;
  }
  Function *function(const std::string &name) {
    for (auto &f : functions)
      if (f.name == name)
        return &f;
    return nullptr;
  }
  const ExternDecl *extern_decl(const std::string &name) const {
    for (const auto &e : externs)
      if (e.name == name)
        return &e;
    return nullptr;
  }
  const GlobalDef *global(const std::string &name) const {
    for (const auto &g : globals)
      if (g.name == name)
        return &g;
    return nullptr;
  }
  bool has_ref_class(const std::string &name) const {
    for (const auto &c : ref_classes)
      if (c == name)
        return true;
    return false;
  }

  /// Type of the named field path within aggregate `agg`; nullopt when the
  /// path does not resolve. Paths are dot-separated field names.
  std::optional<KirType> type_at(const std::string &agg,
                                 const std::string &path) const;

  bool operator==(const Module &) const = default;
};

inline std::vector<std::string> split_path(const std::string &path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

inline std::optional<KirType> Module::type_at(const std::string &agg,
                                              const std::string &path) const {
  KirType cur = KirType::agg(agg);
  if (path.empty())
    return cur;
  for (const auto &part : split_path(path)) {
    if (!cur.is_agg())
      return std::nullopt;
    const AggDef *def = typedef_of(cur.agg_name);
    if (!def)
      return std::nullopt;
    const KirType *ft = def->field_type(part);
    if (!ft)
      return std::nullopt;
    cur = *ft;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Type resolution
// ---------------------------------------------------------------------------

/// Fills in result types the textual format leaves implicit (Load results,
/// BinOp widths). Runs to a fixpoint; anything still untyped afterwards is a
/// validator matter, not a parse failure.
inline void resolve_types(Module &m) {
  for (auto &f : m.functions) {
    std::map<std::string, KirType> env;
    for (const auto &p : f.params)
      env[p.name] = p.type;
    auto operand_type = [&](const Operand &o) -> std::optional<KirType> {
      switch (o.kind) {
      case OperandKind::Ssa: {
        auto it = env.find(o.name);
        if (it == env.end())
          return std::nullopt;
        return it->second;
      }
      case OperandKind::Global: {
        if (const GlobalDef *g = m.global(o.name))
          return KirType::addr(g->type);
        return KirType::addr_opaque(); // function reference
      }
      case OperandKind::IntLit:
        return std::nullopt; // width comes from context
      case OperandKind::Null:
        return KirType::addr_opaque();
      }
      return std::nullopt;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto &b : f.blocks) {
        for (auto &inst : b.insts) {
          if (!inst.has_result())
            continue;
          KirType resolved = inst.type;
          switch (inst.op) {
          case Op::Alloca:
            resolved = KirType::addr(inst.type);
            break;
          case Op::Load: {
            if (!inst.type.is_void())
              break;
            auto at = operand_type(inst.operands[0]);
            if (at && at->is_addr() && !at->is_opaque_addr())
              inst.type = at->pointee_ty();
            resolved = inst.type;
            break;
          }
          case Op::FieldAddr: {
            if (!inst.type.is_void())
              break;
            auto at = operand_type(inst.operands[0]);
            if (at && at->is_addr() && !at->is_opaque_addr() &&
                at->pointee_ty().is_agg()) {
              auto ft = m.type_at(at->pointee_ty().agg_name, inst.field_path);
              if (ft)
                inst.type = KirType::addr(*ft);
            }
            resolved = inst.type;
            break;
          }
          case Op::Call: {
            if (!inst.type.is_void())
              break;
            if (const Function *cf = m.function(inst.callee))
              inst.type = cf->ret_type;
            else if (const ExternDecl *e = m.extern_decl(inst.callee))
              inst.type = e->ret_type;
            resolved = inst.type;
            break;
          }
          case Op::BinOp: {
            if (!inst.type.is_void())
              break;
            for (const auto &o : inst.operands) {
              auto t = operand_type(o);
              if (t && t->is_int()) {
                inst.type = *t;
                break;
              }
            }
            if (inst.type.is_void())
              inst.type = KirType::i64();
            resolved = inst.type;
            break;
          }
          case Op::Cmp:
            inst.type = KirType::i1();
            resolved = inst.type;
            break;
          case Op::RcDelta:
            inst.type = KirType::i64();
            resolved = inst.type;
            break;
          default:
            break; // Phi/Nondet/Cast/AsmOp carry explicit types
          }
          if (!resolved.is_void()) {
            auto it = env.find(inst.result);
            if (it == env.end() || it->second != resolved) {
              env[inst.result] = resolved;
              changed = true;
            }
          }
        }
      }
    }
  }
}

/// Result type of an instruction as seen by consumers (Alloca yields the
/// address of its allocated type).
inline KirType result_type(const Instruction &inst) {
  if (inst.op == Op::Alloca)
    return KirType::addr(inst.type);
  return inst.type;
}

/// Renumbers instruction ids densely in program order. Transforms call this
/// after splicing instructions.
inline void renumber(Function &f) {
  int next = 0;
  for (auto &b : f.blocks)
    for (auto &i : b.insts)
      i.id = next++;
}

inline void renumber(Module &m) {
  for (auto &f : m.functions)
    renumber(f);
}

} // namespace kirv

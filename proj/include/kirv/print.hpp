// Canonical printer for KIR modules. parse(print(m)) is structurally equal
// to m; printing is deterministic byte-for-byte.

#pragma once

#include "kirv/ir.hpp"

#include <sstream>
#include <string>

namespace kirv {

inline std::string to_string(const KirType &t) {
  switch (t.kind) {
  case TypeKind::Void:
    return "void";
  case TypeKind::Int:
    return "i" + std::to_string(t.bits);
  case TypeKind::Agg:
    return t.agg_name;
  case TypeKind::Addr:
    return t.pointee ? "addr " + to_string(*t.pointee) : "addr opaque";
  }
  return "void";
}

inline std::string to_string(const Operand &o) {
  switch (o.kind) {
  case OperandKind::Ssa:
    return "%" + o.name;
  case OperandKind::Global:
    return "@" + o.name;
  case OperandKind::IntLit:
    return std::to_string(o.value);
  case OperandKind::Null:
    return "null";
  }
  return "?";
}

inline std::string bin_name(BinKind k) {
  switch (k) {
  case BinKind::Add:
    return "add";
  case BinKind::Sub:
    return "sub";
  case BinKind::Mul:
    return "mul";
  case BinKind::And:
    return "and";
  case BinKind::Or:
    return "or";
  case BinKind::Xor:
    return "xor";
  }
  return "add";
}

inline std::string cmp_name(CmpKind k) {
  switch (k) {
  case CmpKind::Eq:
    return "eq";
  case CmpKind::Ne:
    return "ne";
  case CmpKind::Slt:
    return "slt";
  case CmpKind::Sle:
    return "sle";
  case CmpKind::Sgt:
    return "sgt";
  case CmpKind::Sge:
    return "sge";
  }
  return "eq";
}

inline std::string to_string(const Instruction &inst) {
  std::ostringstream os;
  if (inst.has_result())
    os << "%" << inst.result << " = ";
  auto args = [&]() {
    os << "(";
    for (size_t i = 0; i < inst.operands.size(); ++i) {
      if (i)
        os << ", ";
      os << to_string(inst.operands[i]);
      if (i < inst.arg_writeonly.size() && inst.arg_writeonly[i])
        os << " writeonly";
    }
    os << ")";
  };
  switch (inst.op) {
  case Op::Alloca:
    os << "alloca " << to_string(inst.type);
    break;
  case Op::Load:
    os << "load " << to_string(inst.operands[0]);
    break;
  case Op::Store:
    os << "store " << to_string(inst.operands[0]) << ", "
       << to_string(inst.operands[1]);
    break;
  case Op::FieldAddr:
    os << "fieldaddr " << to_string(inst.operands[0]) << ", "
       << inst.field_path;
    break;
  case Op::Call:
    os << "call @" << inst.callee;
    args();
    break;
  case Op::Br:
    os << "br ^" << inst.labels[0];
    break;
  case Op::CondBr:
    os << "condbr " << to_string(inst.operands[0]) << ", ^" << inst.labels[0]
       << ", ^" << inst.labels[1];
    break;
  case Op::Switch: {
    os << "switch " << to_string(inst.operands[0]) << ", ^" << inst.labels[0]
       << " [";
    for (size_t i = 0; i < inst.case_values.size(); ++i) {
      if (i)
        os << ", ";
      os << inst.case_values[i] << ": ^" << inst.labels[i + 1];
    }
    os << "]";
    break;
  }
  case Op::Phi: {
    os << "phi " << to_string(inst.type) << " ";
    for (size_t i = 0; i < inst.operands.size(); ++i) {
      if (i)
        os << ", ";
      os << "[^" << inst.labels[i] << ": " << to_string(inst.operands[i])
         << "]";
    }
    break;
  }
  case Op::Ret:
    os << "ret";
    if (!inst.operands.empty())
      os << " " << to_string(inst.operands[0]);
    break;
  case Op::BinOp:
    os << bin_name(inst.bin) << " " << to_string(inst.operands[0]) << ", "
       << to_string(inst.operands[1]);
    break;
  case Op::Cmp:
    os << "cmp " << cmp_name(inst.cmp) << " " << to_string(inst.operands[0])
       << ", " << to_string(inst.operands[1]);
    break;
  case Op::Cast:
    os << "cast " << to_string(inst.operands[0]) << " to "
       << to_string(inst.type);
    break;
  case Op::Nondet:
    os << "nondet " << to_string(inst.type);
    break;
  case Op::Assert:
    os << "assert " << to_string(inst.operands[0]);
    break;
  case Op::Assume:
    os << "assume " << to_string(inst.operands[0]);
    break;
  case Op::RcInc:
    os << "rc_inc " << inst.ref_class << ", " << to_string(inst.operands[0]);
    break;
  case Op::RcDec:
    os << "rc_dec " << inst.ref_class << ", " << to_string(inst.operands[0]);
    break;
  case Op::RcDelta:
    os << "rc_delta " << inst.ref_class;
    break;
  case Op::AsmOp:
    os << "asm \"" << inst.mnemonic << "\"";
    args();
    if (!inst.type.is_void())
      os << " -> " << to_string(inst.type);
    break;
  }
  return os.str();
}

inline std::string to_string(const Function &f) {
  std::ostringstream os;
  os << "fn @" << f.name << "(";
  for (size_t i = 0; i < f.params.size(); ++i) {
    if (i)
      os << ", ";
    os << "%" << f.params[i].name << ": " << to_string(f.params[i].type);
    if (f.params[i].writeonly)
      os << " writeonly";
  }
  os << ") -> " << to_string(f.ret_type) << " {\n";
  for (const auto &b : f.blocks) {
    os << "^" << b.label << ":\n";
    for (const auto &inst : b.insts)
      os << "  " << to_string(inst) << "\n";
  }
  os << "}\n";
  return os.str();
}

/// Canonical module text: typedefs, refclasses, globals, externs, entry,
/// then functions, each section in declaration order.
inline std::string print(const Module &m) {
  std::ostringstream os;
  for (const auto &t : m.typedefs) {
    os << "type " << t.name << " { ";
    for (size_t i = 0; i < t.fields.size(); ++i) {
      if (i)
        os << ", ";
      os << t.fields[i].first << ": " << to_string(t.fields[i].second);
    }
    os << " }";
    if (t.kref_path)
      os << " kref " << *t.kref_path;
    os << "\n";
  }
  for (const auto &c : m.ref_classes)
    os << "refclass " << c << "\n";
  for (const auto &g : m.globals)
    os << "global @" << g.name << ": " << to_string(g.type) << "\n";
  for (const auto &e : m.externs) {
    os << "extern " << e.name << "(";
    for (size_t i = 0; i < e.param_types.size(); ++i) {
      if (i)
        os << ", ";
      os << to_string(e.param_types[i]);
    }
    os << ") -> " << to_string(e.ret_type) << "\n";
  }
  if (m.entry)
    os << "entry " << *m.entry << "\n";
  for (const auto &f : m.functions) {
    os << "\n";
    os << to_string(f);
  }
  return os.str();
}

} // namespace kirv

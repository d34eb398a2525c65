// Module well-formedness checks. Violations are data, not failures: the
// validator returns a list and never throws.

#pragma once

#include "kirv/analysis.hpp"
#include "kirv/ir.hpp"
#include "kirv/print.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace kirv {

struct Violation {
  std::string function; // empty for module-level issues
  std::string block;
  int inst_id = -1;
  std::string message;

  std::string to_string() const {
    std::string s;
    if (!function.empty()) {
      s += "@" + function;
      if (!block.empty())
        s += " ^" + block;
      if (inst_id >= 0)
        s += " #" + std::to_string(inst_id);
      s += ": ";
    }
    return s + message;
  }
};

namespace detail {

class Validator {
public:
  explicit Validator(const Module &m) : m_(m) {}

  std::vector<Violation> run() {
    check_typedefs();
    check_ref_classes();
    check_globals();
    check_names();
    kref_types_ = find_kref_types(m_);
    for (const auto &f : m_.functions)
      check_function(f);
    check_entry();
    return std::move(out_);
  }

private:
  void emit(std::string fn, std::string blk, int id, std::string msg) {
    out_.push_back({std::move(fn), std::move(blk), id, std::move(msg)});
  }

  bool type_resolves(const KirType &t) const {
    switch (t.kind) {
    case TypeKind::Agg:
      return m_.typedef_of(t.agg_name) != nullptr;
    case TypeKind::Addr:
      return !t.pointee || type_resolves(*t.pointee);
    default:
      return true;
    }
  }

  void check_typedefs() {
    std::set<std::string> seen;
    for (const auto &t : m_.typedefs) {
      if (!seen.insert(t.name).second)
        emit("", "", -1, "duplicate type definition '" + t.name + "'");
      std::set<std::string> fnames;
      for (const auto &[fname, fty] : t.fields) {
        if (!fnames.insert(fname).second)
          emit("", "", -1,
               "duplicate field '" + fname + "' in type '" + t.name + "'");
        if (!type_resolves(fty))
          emit("", "", -1, "field '" + t.name + "." + fname +
                               "' has unresolved type " + to_string(fty));
      }
    }
    // kref paths: must resolve within the aggregate and end at an integer
    // counter field; the walk may not revisit a type.
    for (const auto &t : m_.typedefs) {
      if (!t.kref_path)
        continue;
      std::set<std::string> walked{t.name};
      KirType cur = KirType::agg(t.name);
      bool ok = true;
      for (const auto &part : split_path(*t.kref_path)) {
        if (!cur.is_agg()) {
          ok = false;
          break;
        }
        const AggDef *def = m_.typedef_of(cur.agg_name);
        const KirType *ft = def ? def->field_type(part) : nullptr;
        if (!ft) {
          ok = false;
          break;
        }
        cur = *ft;
        if (cur.is_agg() && !walked.insert(cur.agg_name).second) {
          emit("", "", -1,
               "type '" + t.name + "' kref path revisits '" + cur.agg_name +
                   "'");
          return;
        }
      }
      if (!ok || !cur.is_int())
        emit("", "", -1, "type '" + t.name + "' kref path '" + *t.kref_path +
                             "' does not end at an integer counter field");
    }
    // By-value nesting must be acyclic.
    std::map<std::string, int> state; // 0 unseen, 1 visiting, 2 done
    for (const auto &t : m_.typedefs)
      if (!state[t.name])
        nesting_dfs(t.name, state);
  }

  void nesting_dfs(const std::string &name, std::map<std::string, int> &state) {
    state[name] = 1;
    const AggDef *def = m_.typedef_of(name);
    if (def) {
      for (const auto &[fname, fty] : def->fields) {
        if (!fty.is_agg())
          continue;
        int s = state[fty.agg_name];
        if (s == 1)
          emit("", "", -1,
               "type '" + name + "' nests itself by value through '" +
                   fty.agg_name + "'");
        else if (s == 0)
          nesting_dfs(fty.agg_name, state);
      }
    }
    state[name] = 2;
  }

  void check_ref_classes() {
    std::set<std::string> seen;
    for (const auto &c : m_.ref_classes)
      if (!seen.insert(c).second)
        emit("", "", -1, "duplicate refclass '" + c + "'");
  }

  void check_globals() {
    std::set<std::string> seen;
    for (const auto &g : m_.globals) {
      if (!seen.insert(g.name).second)
        emit("", "", -1, "duplicate global '@" + g.name + "'");
      if (!type_resolves(g.type))
        emit("", "", -1,
             "global '@" + g.name + "' has unresolved type " +
                 to_string(g.type));
    }
  }

  void check_names() {
    std::set<std::string> seen;
    for (const auto &f : m_.functions)
      if (!seen.insert(f.name).second)
        emit("", "", -1, "duplicate function '@" + f.name + "'");
    for (const auto &e : m_.externs) {
      if (!seen.insert(e.name).second)
        emit("", "", -1, "duplicate declaration '@" + e.name + "'");
    }
  }

  void check_entry() {
    if (!m_.entry)
      return;
    const Function *f = m_.function(*m_.entry);
    if (!f) {
      emit("", "", -1, "entry function '@" + *m_.entry + "' not defined");
      return;
    }
    if (!f->ret_type.is_int())
      emit("", "", -1,
           "entry function '@" + *m_.entry +
               "' must return an integer error code");
  }

  std::optional<KirType> value_type(const std::string &name) const {
    auto it = env_.find(name);
    if (it == env_.end())
      return std::nullopt;
    return it->second;
  }

  std::optional<KirType> operand_type(const Operand &o) const {
    switch (o.kind) {
    case OperandKind::Ssa:
      return value_type(o.name);
    case OperandKind::Global:
      if (const GlobalDef *g = m_.global(o.name))
        return KirType::addr(g->type);
      if (m_.function(o.name) || m_.extern_decl(o.name))
        return KirType::addr_opaque();
      return std::nullopt;
    case OperandKind::IntLit:
      return std::nullopt; // contextual
    case OperandKind::Null:
      return KirType::addr_opaque();
    }
    return std::nullopt;
  }

  /// Integer literals adopt any integer context; null adopts any address
  /// context; opaque addresses match any address.
  bool compatible(const std::optional<KirType> &have, const Operand &o,
                  const KirType &want) const {
    if (o.is_lit()) {
      if (!want.is_int())
        return false;
      if (want.bits >= 64)
        return true;
      long long lo = -(1ll << (want.bits - 1));
      long long hi = (1ll << (want.bits - 1)) - 1;
      return o.value >= lo && o.value <= hi;
    }
    if (o.is_null())
      return want.is_addr();
    if (!have)
      return false;
    if (have->is_addr() && want.is_addr()) {
      // An opaque slot accepts any address; an opaque value (a model token)
      // may not flow into a typed slot.
      if (want.is_opaque_addr())
        return true;
      if (have->is_opaque_addr())
        return false;
      return *have == want;
    }
    return *have == want;
  }

  void check_function(const Function &f) {
    const std::string &fn = f.name;
    if (f.blocks.empty()) {
      emit(fn, "", -1, "function has no blocks");
      return;
    }
    std::set<std::string> labels;
    for (const auto &b : f.blocks) {
      if (!labels.insert(b.label).second)
        emit(fn, b.label, -1, "duplicate block label");
      if (b.insts.empty()) {
        emit(fn, b.label, -1, "empty block (terminator required)");
        continue;
      }
      for (size_t i = 0; i < b.insts.size(); ++i) {
        bool is_last = i + 1 == b.insts.size();
        if (b.insts[i].is_terminator() != is_last)
          emit(fn, b.label, b.insts[i].id,
               is_last ? "block does not end in a terminator"
                       : "terminator in the middle of a block");
      }
    }
    auto preds = cfg_predecessors(f);
    for (const auto &b : f.blocks) {
      if (b.insts.empty())
        continue;
      for (const auto &succ : successors(b.insts.back()))
        if (!f.block(succ))
          emit(fn, b.label, b.insts.back().id,
               "branch to unknown block '^" + succ + "'");
    }
    if (!preds[f.blocks[0].label].empty())
      emit(fn, f.blocks[0].label, -1, "entry block has predecessors");

    // Reachability (dominance below assumes it).
    {
      std::set<std::string> reach{f.blocks[0].label};
      std::vector<const Block *> work{&f.blocks[0]};
      while (!work.empty()) {
        const Block *b = work.back();
        work.pop_back();
        if (b->insts.empty())
          continue;
        for (const auto &succ : successors(b->insts.back()))
          if (const Block *sb = f.block(succ))
            if (reach.insert(succ).second)
              work.push_back(sb);
      }
      for (const auto &b : f.blocks)
        if (!reach.count(b.label))
          emit(fn, b.label, -1, "block unreachable from entry");
    }

    // SSA names: params and results unique.
    env_.clear();
    std::set<std::string> defined;
    for (const auto &p : f.params) {
      if (!defined.insert(p.name).second)
        emit(fn, "", -1, "duplicate parameter '%" + p.name + "'");
      if (!type_resolves(p.type))
        emit(fn, "", -1, "parameter '%" + p.name + "' has unresolved type");
      if (p.writeonly && !p.type.is_addr())
        emit(fn, "", -1,
             "writeonly parameter '%" + p.name + "' must have address type");
      env_[p.name] = p.type;
    }
    for (const auto &b : f.blocks)
      for (const auto &inst : b.insts) {
        if (!inst.has_result())
          continue;
        if (!defined.insert(inst.result).second)
          emit(fn, b.label, inst.id,
               "SSA value '%" + inst.result + "' assigned more than once");
        env_[inst.result] = result_type(inst);
      }

    check_dominance(f);

    for (size_t bi = 0; bi < f.blocks.size(); ++bi)
      check_block_instructions(f, f.blocks[bi], preds);
  }

  void check_dominance(const Function &f) {
    auto dom = dominator_sets(f);
    std::map<std::string, int> bindex;
    for (size_t i = 0; i < f.blocks.size(); ++i)
      bindex[f.blocks[i].label] = static_cast<int>(i);
    std::map<std::string, std::pair<int, int>> defpos; // name -> (block, idx)
    for (size_t bi = 0; bi < f.blocks.size(); ++bi)
      for (size_t ii = 0; ii < f.blocks[bi].insts.size(); ++ii)
        if (f.blocks[bi].insts[ii].has_result())
          defpos[f.blocks[bi].insts[ii].result] = {static_cast<int>(bi),
                                                   static_cast<int>(ii)};
    auto dominates_pos = [&](const std::string &def, int use_block,
                             int use_idx) {
      if (!defpos.count(def))
        return true; // parameter or undefined; undefined reported separately
      auto [db, di] = defpos[def];
      if (db == use_block)
        return di < use_idx;
      return dom[use_block].count(db) > 0;
    };
    for (size_t bi = 0; bi < f.blocks.size(); ++bi) {
      const Block &b = f.blocks[bi];
      for (size_t ii = 0; ii < b.insts.size(); ++ii) {
        const Instruction &inst = b.insts[ii];
        for (size_t oi = 0; oi < inst.operands.size(); ++oi) {
          const Operand &o = inst.operands[oi];
          if (!o.is_ssa())
            continue;
          if (!env_.count(o.name) && !defpos.count(o.name)) {
            emit(f.name, b.label, inst.id,
                 "use of undefined value '%" + o.name + "'");
            continue;
          }
          if (inst.op == Op::Phi) {
            // Arm operand must dominate the incoming block's terminator.
            const std::string &in = inst.labels[oi];
            auto bit = bindex.find(in);
            if (bit == bindex.end())
              continue;
            int ib = bit->second;
            int term = static_cast<int>(f.blocks[ib].insts.size());
            if (!dominates_pos(o.name, ib, term))
              emit(f.name, b.label, inst.id,
                   "phi arm for '^" + in + "' uses '%" + o.name +
                       "' which does not dominate the edge");
          } else if (!dominates_pos(o.name, static_cast<int>(bi),
                                    static_cast<int>(ii))) {
            emit(f.name, b.label, inst.id,
                 "use of '%" + o.name + "' not dominated by its definition");
          }
        }
      }
    }
  }

  void require(const Function &f, const Block &b, const Instruction &inst,
               const Operand &o, const KirType &want, const char *what) {
    if (!compatible(operand_type(o), o, want))
      emit(f.name, b.label, inst.id,
           std::string(what) + " operand " + to_string(o) +
               " is not of type " + to_string(want));
  }

  void require_addr(const Function &f, const Block &b, const Instruction &inst,
                    const Operand &o, const char *what) {
    auto t = operand_type(o);
    bool ok = o.is_null() || (t && t->is_addr());
    if (!ok)
      emit(f.name, b.label, inst.id,
           std::string(what) + " operand " + to_string(o) +
               " must have address type");
  }

  void require_int(const Function &f, const Block &b, const Instruction &inst,
                   const Operand &o, const char *what) {
    if (o.is_lit())
      return;
    auto t = operand_type(o);
    if (!t || !t->is_int())
      emit(f.name, b.label, inst.id,
           std::string(what) + " operand " + to_string(o) +
               " must have integer type");
  }

  void check_block_instructions(
      const Function &f, const Block &b,
      const std::map<std::string, std::set<std::string>> &preds) {
    bool at_start = true;
    for (const auto &inst : b.insts) {
      if (inst.op != Op::Phi)
        at_start = false;
      switch (inst.op) {
      case Op::Phi: {
        if (!at_start)
          emit(f.name, b.label, inst.id, "phi not at block start");
        std::set<std::string> incoming(inst.labels.begin(),
                                       inst.labels.end());
        if (incoming.size() != inst.labels.size())
          emit(f.name, b.label, inst.id, "phi lists a block twice");
        auto pit = preds.find(b.label);
        const std::set<std::string> &expect = pit->second;
        if (incoming != expect)
          emit(f.name, b.label, inst.id,
               "phi arms do not match predecessors of '^" + b.label + "'");
        for (const auto &o : inst.operands)
          require(f, b, inst, o, inst.type, "phi");
        break;
      }
      case Op::Alloca:
        if (!type_resolves(inst.type) || inst.type.is_void())
          emit(f.name, b.label, inst.id, "alloca of unresolved or void type");
        break;
      case Op::Load: {
        require_addr(f, b, inst, inst.operands[0], "load");
        auto t = operand_type(inst.operands[0]);
        if (t && t->is_opaque_addr())
          emit(f.name, b.label, inst.id,
               "load through opaque address " + to_string(inst.operands[0]));
        else if (t && t->is_addr() && inst.type.is_void())
          emit(f.name, b.label, inst.id, "load has unresolved result type");
        if (inst.operands[0].is_null())
          emit(f.name, b.label, inst.id, "load from null");
        break;
      }
      case Op::Store: {
        require_addr(f, b, inst, inst.operands[1], "store address");
        auto t = operand_type(inst.operands[1]);
        if (t && t->is_opaque_addr())
          emit(f.name, b.label, inst.id,
               "store through opaque address " + to_string(inst.operands[1]));
        else if (t && t->is_addr())
          require(f, b, inst, inst.operands[0], t->pointee_ty(),
                  "store value");
        if (inst.operands[1].is_null())
          emit(f.name, b.label, inst.id, "store to null");
        break;
      }
      case Op::FieldAddr: {
        auto t = operand_type(inst.operands[0]);
        if (!t || !t->is_addr() || t->is_opaque_addr() ||
            !t->pointee_ty().is_agg()) {
          emit(f.name, b.label, inst.id,
               "fieldaddr base " + to_string(inst.operands[0]) +
                   " is not an address of a declared aggregate");
          break;
        }
        if (!m_.type_at(t->pointee_ty().agg_name, inst.field_path))
          emit(f.name, b.label, inst.id,
               "no field path '" + inst.field_path + "' in type '" +
                   t->pointee_ty().agg_name + "'");
        break;
      }
      case Op::Call: {
        const Function *cf = m_.function(inst.callee);
        const ExternDecl *ce = m_.extern_decl(inst.callee);
        if (!cf && !ce) {
          emit(f.name, b.label, inst.id,
               "call to unknown '@" + inst.callee + "'");
          break;
        }
        size_t arity = cf ? cf->params.size() : ce->param_types.size();
        if (inst.operands.size() != arity) {
          emit(f.name, b.label, inst.id,
               "call to '@" + inst.callee + "' expects " +
                   std::to_string(arity) + " arguments, got " +
                   std::to_string(inst.operands.size()));
          break;
        }
        for (size_t i = 0; i < arity; ++i) {
          KirType want = cf ? cf->params[i].type : ce->param_types[i];
          require(f, b, inst, inst.operands[i], want, "call");
          if (i < inst.arg_writeonly.size() && inst.arg_writeonly[i] &&
              !want.is_addr())
            emit(f.name, b.label, inst.id,
                 "writeonly attribute on non-address argument");
        }
        break;
      }
      case Op::Br:
      case Op::CondBr:
      case Op::Switch:
        if (inst.op == Op::CondBr)
          require(f, b, inst, inst.operands[0], KirType::i1(), "condbr");
        if (inst.op == Op::Switch)
          require_int(f, b, inst, inst.operands[0], "switch");
        break;
      case Op::Ret: {
        if (f.ret_type.is_void()) {
          if (!inst.operands.empty())
            emit(f.name, b.label, inst.id, "ret with value in void function");
        } else if (inst.operands.empty()) {
          emit(f.name, b.label, inst.id, "ret without value");
        } else {
          require(f, b, inst, inst.operands[0], f.ret_type, "ret");
        }
        break;
      }
      case Op::BinOp:
        require_int(f, b, inst, inst.operands[0], "arithmetic");
        require_int(f, b, inst, inst.operands[1], "arithmetic");
        break;
      case Op::Cmp: {
        auto t0 = operand_type(inst.operands[0]);
        auto t1 = operand_type(inst.operands[1]);
        bool addr0 = inst.operands[0].is_null() || (t0 && t0->is_addr());
        bool addr1 = inst.operands[1].is_null() || (t1 && t1->is_addr());
        if (addr0 || addr1) {
          if (!(addr0 && addr1))
            emit(f.name, b.label, inst.id,
                 "cmp mixes address and integer operands");
          else if (inst.cmp != CmpKind::Eq && inst.cmp != CmpKind::Ne)
            emit(f.name, b.label, inst.id,
                 "addresses compare only with eq/ne");
        } else {
          require_int(f, b, inst, inst.operands[0], "cmp");
          require_int(f, b, inst, inst.operands[1], "cmp");
        }
        break;
      }
      case Op::Cast: {
        auto t = operand_type(inst.operands[0]);
        bool src_addr = inst.operands[0].is_null() || (t && t->is_addr());
        bool dst_addr = inst.type.is_addr();
        if (src_addr != dst_addr)
          emit(f.name, b.label, inst.id,
               "cast between address and integer is not allowed");
        break;
      }
      case Op::Nondet:
        if (inst.type.is_void() || !type_resolves(inst.type))
          emit(f.name, b.label, inst.id, "nondet of unresolved or void type");
        break;
      case Op::Assert:
      case Op::Assume:
        require(f, b, inst, inst.operands[0], KirType::i1(),
                inst.op == Op::Assert ? "assert" : "assume");
        break;
      case Op::RcInc:
      case Op::RcDec: {
        if (!m_.has_ref_class(inst.ref_class))
          emit(f.name, b.label, inst.id,
               "undeclared refclass '" + inst.ref_class + "'");
        auto t = operand_type(inst.operands[0]);
        bool ok = inst.operands[0].is_null() ||
                  (t && t->is_addr() && !t->is_opaque_addr() &&
                   t->pointee_ty().is_agg() &&
                   kref_types_.count(t->pointee_ty().agg_name));
        if (!ok)
          emit(f.name, b.label, inst.id,
               "refcount operand " + to_string(inst.operands[0]) +
                   " does not address a counter-embedding aggregate");
        break;
      }
      case Op::RcDelta:
        if (!m_.has_ref_class(inst.ref_class))
          emit(f.name, b.label, inst.id,
               "undeclared refclass '" + inst.ref_class + "'");
        break;
      case Op::AsmOp:
        break;
      }
    }
  }

  const Module &m_;
  std::set<std::string> kref_types_;
  std::map<std::string, KirType> env_;
  std::vector<Violation> out_;
};

} // namespace detail

/// Returns every well-formedness violation; an empty list means the module
/// satisfies all structural, SSA, CFG and typing invariants.
inline std::vector<Violation> validate(const Module &m) {
  return detail::Validator(m).run();
}

} // namespace kirv

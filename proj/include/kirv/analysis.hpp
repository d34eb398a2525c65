// CFG utilities and the underlying-object analysis.
//
// An address operand's underlying objects are the origins reached by
// stripping fieldaddr, cast and single-source phi; a phi joining distinct
// sources yields the whole may-underlie set.

#pragma once

#include "kirv/ir.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace kirv {

// ---------------------------------------------------------------------------
// CFG
// ---------------------------------------------------------------------------

inline std::vector<std::string> successors(const Instruction &term) {
  switch (term.op) {
  case Op::Br:
  case Op::CondBr:
  case Op::Switch:
    return term.labels;
  default:
    return {};
  }
}

/// Block label -> set of predecessor labels, the edge-reverse of declared
/// terminator targets.
inline std::map<std::string, std::set<std::string>>
cfg_predecessors(const Function &f) {
  std::map<std::string, std::set<std::string>> preds;
  for (const auto &b : f.blocks)
    preds[b.label];
  for (const auto &b : f.blocks) {
    if (b.insts.empty())
      continue;
    for (const auto &succ : successors(b.insts.back()))
      preds[succ].insert(b.label);
  }
  return preds;
}

/// Immediate-style dominator sets via iterative dataflow: dom[i] holds the
/// indices of all blocks dominating block i. Unreachable blocks dominate
/// themselves only.
inline std::vector<std::set<int>> dominator_sets(const Function &f) {
  const size_t n = f.blocks.size();
  std::map<std::string, int> index;
  for (size_t i = 0; i < n; ++i)
    index[f.blocks[i].label] = static_cast<int>(i);
  std::vector<std::vector<int>> preds(n);
  for (size_t i = 0; i < n; ++i) {
    if (f.blocks[i].insts.empty())
      continue;
    for (const auto &succ : successors(f.blocks[i].insts.back())) {
      auto it = index.find(succ);
      if (it != index.end())
        preds[it->second].push_back(static_cast<int>(i));
    }
  }
  std::set<int> all;
  for (size_t i = 0; i < n; ++i)
    all.insert(static_cast<int>(i));
  std::vector<std::set<int>> dom(n, all);
  if (n == 0)
    return dom;
  dom[0] = {0};
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 1; i < n; ++i) {
      std::set<int> nd;
      bool first = true;
      for (int p : preds[i]) {
        if (first) {
          nd = dom[p];
          first = false;
        } else {
          std::set<int> inter;
          std::set_intersection(nd.begin(), nd.end(), dom[p].begin(),
                                dom[p].end(),
                                std::inserter(inter, inter.begin()));
          nd = inter;
        }
      }
      if (first)
        nd.clear(); // unreachable
      nd.insert(static_cast<int>(i));
      if (nd != dom[i]) {
        dom[i] = nd;
        changed = true;
      }
    }
  }
  return dom;
}

/// Back-edges (source block index, target block index): edges whose target
/// dominates their source.
inline std::set<std::pair<int, int>> back_edges(const Function &f) {
  auto dom = dominator_sets(f);
  std::map<std::string, int> index;
  for (size_t i = 0; i < f.blocks.size(); ++i)
    index[f.blocks[i].label] = static_cast<int>(i);
  std::set<std::pair<int, int>> edges;
  for (size_t i = 0; i < f.blocks.size(); ++i) {
    if (f.blocks[i].insts.empty())
      continue;
    for (const auto &succ : successors(f.blocks[i].insts.back())) {
      auto it = index.find(succ);
      if (it == index.end())
        continue;
      int t = it->second;
      if (dom[i].count(t))
        edges.insert({static_cast<int>(i), t});
    }
  }
  return edges;
}

/// Indices of blocks lying inside some natural loop (the loop of back-edge
/// u->h is h plus all blocks that reach u without passing through h).
inline std::set<int> loop_blocks(const Function &f) {
  std::set<int> in_loop;
  auto edges = back_edges(f);
  std::map<std::string, int> index;
  for (size_t i = 0; i < f.blocks.size(); ++i)
    index[f.blocks[i].label] = static_cast<int>(i);
  std::vector<std::vector<int>> preds(f.blocks.size());
  for (size_t i = 0; i < f.blocks.size(); ++i) {
    if (f.blocks[i].insts.empty())
      continue;
    for (const auto &succ : successors(f.blocks[i].insts.back())) {
      auto it = index.find(succ);
      if (it != index.end())
        preds[it->second].push_back(static_cast<int>(i));
    }
  }
  for (auto [u, h] : edges) {
    std::vector<int> work{u};
    std::set<int> body{h, u};
    while (!work.empty()) {
      int b = work.back();
      work.pop_back();
      if (b == h)
        continue;
      for (int p : preds[b])
        if (!body.count(p)) {
          body.insert(p);
          work.push_back(p);
        }
    }
    in_loop.insert(body.begin(), body.end());
  }
  return in_loop;
}

// ---------------------------------------------------------------------------
// Definition lookup
// ---------------------------------------------------------------------------

struct DefSite {
  int block = -1;
  int inst = -1; // index within block
};

/// Per-function index of SSA definitions.
struct FunctionIndex {
  const Function *fn = nullptr;
  std::map<std::string, DefSite> defs;

  explicit FunctionIndex(const Function &f) : fn(&f) {
    for (size_t bi = 0; bi < f.blocks.size(); ++bi)
      for (size_t ii = 0; ii < f.blocks[bi].insts.size(); ++ii) {
        const Instruction &inst = f.blocks[bi].insts[ii];
        if (inst.has_result())
          defs[inst.result] = {static_cast<int>(bi), static_cast<int>(ii)};
      }
  }

  const Instruction *def(const std::string &name) const {
    auto it = defs.find(name);
    if (it == defs.end())
      return nullptr;
    return &fn->blocks[it->second.block].insts[it->second.inst];
  }
};

// ---------------------------------------------------------------------------
// Underlying objects
// ---------------------------------------------------------------------------

enum class OriginKind {
  Param,
  Global,
  AllocaInst,
  LoadInst,
  CallInst,
  NondetInst,
  AsmInst,
  NullConst,
};

struct Origin {
  OriginKind kind;
  std::string name; // param/global name, or defining instruction's result
  int inst_id = -1; // defining instruction id, -1 for params/globals/null

  bool operator<(const Origin &o) const {
    if (kind != o.kind)
      return kind < o.kind;
    if (name != o.name)
      return name < o.name;
    return inst_id < o.inst_id;
  }
  bool operator==(const Origin &o) const {
    return kind == o.kind && name == o.name && inst_id == o.inst_id;
  }

  bool is_instruction() const {
    return kind == OriginKind::AllocaInst || kind == OriginKind::LoadInst ||
           kind == OriginKind::CallInst || kind == OriginKind::NondetInst ||
           kind == OriginKind::AsmInst;
  }
};

namespace detail {

inline void underlying_rec(const FunctionIndex &idx, const Operand &o,
                           std::set<Origin> &out,
                           std::set<std::string> &visiting) {
  switch (o.kind) {
  case OperandKind::Null:
    out.insert({OriginKind::NullConst, "null", -1});
    return;
  case OperandKind::Global:
    out.insert({OriginKind::Global, o.name, -1});
    return;
  case OperandKind::IntLit:
    throw std::logic_error("underlying_object: non-address operand");
  case OperandKind::Ssa:
    break;
  }
  const Instruction *def = idx.def(o.name);
  if (!def) {
    // A parameter (or an unresolved name; the validator reports those).
    out.insert({OriginKind::Param, o.name, -1});
    return;
  }
  switch (def->op) {
  case Op::FieldAddr:
  case Op::Cast:
    underlying_rec(idx, def->operands[0], out, visiting);
    return;
  case Op::Phi: {
    if (visiting.count(o.name))
      return;
    visiting.insert(o.name);
    for (const auto &arm : def->operands)
      underlying_rec(idx, arm, out, visiting);
    return;
  }
  case Op::Alloca:
    out.insert({OriginKind::AllocaInst, def->result, def->id});
    return;
  case Op::Load:
    out.insert({OriginKind::LoadInst, def->result, def->id});
    return;
  case Op::Call:
    out.insert({OriginKind::CallInst, def->result, def->id});
    return;
  case Op::Nondet:
    out.insert({OriginKind::NondetInst, def->result, def->id});
    return;
  case Op::AsmOp:
    out.insert({OriginKind::AsmInst, def->result, def->id});
    return;
  default:
    throw std::logic_error("underlying_object: non-address operand");
  }
}

} // namespace detail

/// May-underlie set of an address operand. Phi with a single distinct source
/// collapses to that source; multi-source phis return every source.
inline std::set<Origin> underlying_objects(const FunctionIndex &idx,
                                           const Operand &o) {
  std::set<Origin> out;
  std::set<std::string> visiting;
  detail::underlying_rec(idx, o, out, visiting);
  return out;
}

// ---------------------------------------------------------------------------
// kref embedding
// ---------------------------------------------------------------------------

/// Aggregate type names that transitively embed the refcount counter: the
/// closure of "has a kref_path" under by-value field nesting.
inline std::set<std::string> find_kref_types(const Module &m) {
  std::set<std::string> result;
  for (const auto &t : m.typedefs)
    if (t.kref_path)
      result.insert(t.name);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto &t : m.typedefs) {
      if (result.count(t.name))
        continue;
      for (const auto &[fname, fty] : t.fields) {
        if (fty.is_agg() && result.count(fty.agg_name)) {
          result.insert(t.name);
          changed = true;
          break;
        }
      }
    }
  }
  return result;
}

/// Field paths within aggregate `agg` whose type embeds the counter
/// (including the empty path when the aggregate itself does). Used to key
/// per-object refcount ledgers.
inline std::vector<std::string>
kref_subobject_paths(const Module &m, const std::string &agg,
                     const std::set<std::string> &kref_types) {
  std::vector<std::string> out;
  if (kref_types.count(agg))
    out.push_back("");
  const AggDef *def = m.typedef_of(agg);
  if (!def)
    return out;
  for (const auto &[fname, fty] : def->fields) {
    if (!fty.is_agg())
      continue;
    for (const auto &sub : kref_subobject_paths(m, fty.agg_name, kref_types)) {
      out.push_back(sub.empty() ? fname : fname + "." + sub);
    }
  }
  return out;
}

} // namespace kirv

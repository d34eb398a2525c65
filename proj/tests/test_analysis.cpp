#include "kirv/analysis.hpp"
#include "kirv/parse.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace kirv;

TEST_CASE("predecessor map is the edge reverse of terminator targets") {
  Module m = parse_or_throw("fn @single() -> void {\n"
                            "^entry:\n  ret\n"
                            "}\n"
                            "fn @diamond(%a: i64) -> void {\n"
                            "^entry:\n"
                            "  %c = cmp eq %a, 0\n"
                            "  condbr %c, ^a, ^b\n"
                            "^a:\n  br ^exit\n"
                            "^b:\n  br ^exit\n"
                            "^exit:\n  ret\n"
                            "}\n");
  auto p1 = cfg_predecessors(m.functions[0]);
  for (const auto &[blk, preds] : p1)
    CHECK(preds.empty());
  auto p2 = cfg_predecessors(m.functions[1]);
  CHECK(p2["exit"] == std::set<std::string>{"a", "b"});
  CHECK(p2["a"] == std::set<std::string>{"entry"});
  CHECK(p2["entry"].empty());
}

TEST_CASE("back edges are found by dominance") {
  Module m = parse_or_throw("fn @loop(%n: i64) -> void {\n"
                            "^entry:\n  br ^head\n"
                            "^head:\n"
                            "  %i = phi i64 [^entry: 0], [^body: %i2]\n"
                            "  %c = cmp slt %i, %n\n"
                            "  condbr %c, ^body, ^exit\n"
                            "^body:\n"
                            "  %i2 = add %i, 1\n"
                            "  br ^head\n"
                            "^exit:\n  ret\n"
                            "}\n");
  auto edges = back_edges(m.functions[0]);
  REQUIRE(edges.size() == 1);
  int body = m.functions[0].block_index("body");
  int head = m.functions[0].block_index("head");
  CHECK(edges.count({body, head}) == 1);
  auto loopy = loop_blocks(m.functions[0]);
  CHECK(loopy.count(head) == 1);
  CHECK(loopy.count(body) == 1);
  CHECK(loopy.count(m.functions[0].block_index("entry")) == 0);
  CHECK(loopy.count(m.functions[0].block_index("exit")) == 0);
}

TEST_CASE("underlying object strips fieldaddr and cast down to the alloca") {
  Module m = parse_or_throw("type inner { v: i64 }\n"
                            "type outer { f: inner }\n"
                            "fn @f() -> void {\n"
                            "^entry:\n"
                            "  %a = alloca outer\n"
                            "  %c = cast %a to addr outer\n"
                            "  %p = fieldaddr %c, f.v\n"
                            "  ret\n"
                            "}\n");
  FunctionIndex idx(m.functions[0]);
  auto objs = underlying_objects(idx, Operand::ssa("p"));
  REQUIRE(objs.size() == 1);
  CHECK(objs.begin()->kind == OriginKind::AllocaInst);
  CHECK(objs.begin()->name == "a");
}

TEST_CASE("a raw parameter underlies itself") {
  Module m = parse_or_throw("type t { v: i64 }\n"
                            "fn @f(%dev: addr t) -> void {\n"
                            "^entry:\n  ret\n"
                            "}\n");
  FunctionIndex idx(m.functions[0]);
  auto objs = underlying_objects(idx, Operand::ssa("dev"));
  REQUIRE(objs.size() == 1);
  CHECK(objs.begin()->kind == OriginKind::Param);
  CHECK(objs.begin()->name == "dev");
}

TEST_CASE("phi joining an alloca and a global yields both") {
  // Hand enumeration of the two CFG paths through this 3-block function:
  // via ^a the value is %a (the alloca), via ^b it is @g, so the may-set
  // at ^join is exactly {alloca a, global g}.
  Module m = parse_or_throw("type t { v: i64 }\n"
                            "global @g: t\n"
                            "fn @f(%c: i1) -> void {\n"
                            "^entry:\n"
                            "  %a = alloca t\n"
                            "  condbr %c, ^a, ^b\n"
                            "^a:\n  br ^join\n"
                            "^b:\n  br ^join\n"
                            "^join:\n"
                            "  %p = phi addr t [^a: %a], [^b: @g]\n"
                            "  ret\n"
                            "}\n");
  FunctionIndex idx(m.functions[0]);
  auto objs = underlying_objects(idx, Operand::ssa("p"));
  REQUIRE(objs.size() == 2);
  std::set<OriginKind> kinds;
  for (const auto &o : objs)
    kinds.insert(o.kind);
  CHECK(kinds == std::set<OriginKind>{OriginKind::AllocaInst,
                                      OriginKind::Global});
}

TEST_CASE("phi with a single distinct source collapses to it") {
  Module m = parse_or_throw("type t { v: i64 }\n"
                            "fn @f(%c: i1) -> void {\n"
                            "^entry:\n"
                            "  %a = alloca t\n"
                            "  condbr %c, ^a, ^b\n"
                            "^a:\n  br ^join\n"
                            "^b:\n  br ^join\n"
                            "^join:\n"
                            "  %p = phi addr t [^a: %a], [^b: %a]\n"
                            "  ret\n"
                            "}\n");
  FunctionIndex idx(m.functions[0]);
  auto objs = underlying_objects(idx, Operand::ssa("p"));
  REQUIRE(objs.size() == 1);
  CHECK(objs.begin()->name == "a");
}

TEST_CASE("underlying object is idempotent") {
  Module m = parse_or_throw("type t { v: i64 }\n"
                            "global @g: t\n"
                            "fn @f(%dev: addr t, %c: i1) -> void {\n"
                            "^entry:\n"
                            "  %a = alloca t\n"
                            "  %slot = alloca addr t\n"
                            "  store %dev, %slot\n"
                            "  %l = load %slot\n"
                            "  %p = fieldaddr %a, v\n"
                            "  %q = cast %l to addr t\n"
                            "  condbr %c, ^x, ^y\n"
                            "^x:\n  br ^join\n"
                            "^y:\n  br ^join\n"
                            "^join:\n"
                            "  %m = phi addr t [^x: %a], [^y: @g]\n"
                            "  ret\n"
                            "}\n");
  FunctionIndex idx(m.functions[0]);
  for (const char *name : {"a", "slot", "l", "p", "q", "m", "dev"}) {
    auto first = underlying_objects(idx, Operand::ssa(name));
    for (const auto &origin : first) {
      if (origin.kind == OriginKind::NullConst)
        continue;
      Operand o = origin.kind == OriginKind::Global
                      ? Operand::global(origin.name)
                      : Operand::ssa(origin.name);
      auto again = underlying_objects(idx, o);
      REQUIRE(again.size() == 1);
      CHECK(*again.begin() == origin);
    }
  }
}

TEST_CASE("non-address operands are a contract violation") {
  Module m = parse_or_throw("fn @f(%x: i64) -> void {\n^entry:\n  ret\n}\n");
  FunctionIndex idx(m.functions[0]);
  CHECK_THROWS_AS(underlying_objects(idx, Operand::lit(3)), std::logic_error);
}

TEST_CASE("kref embedding closes over nesting") {
  Module m = parse_or_throw(
      "type kref_t { refcount: i64 } kref refcount\n"
      "type device { kref: kref_t }\n"
      "type usb_interface { dev: device, id: i64 }\n"
      "type plain { a: i64, b: i64 }\n"
      "type wrapper { p: plain }\n");
  auto s = find_kref_types(m);
  CHECK(s.count("kref_t") == 1);
  CHECK(s.count("device") == 1);
  CHECK(s.count("usb_interface") == 1);
  CHECK(s.count("plain") == 0);
  CHECK(s.count("wrapper") == 0);
}

TEST_CASE("modules with only plain integer aggregates embed nothing") {
  Module m = parse_or_throw("type a { x: i64 }\ntype b { y: i64, z: a }\n");
  CHECK(find_kref_types(m).empty());
}

TEST_CASE("kref subobject paths enumerate embedded counters") {
  Module m = parse_or_throw("type kref_t { refcount: i64 } kref refcount\n"
                            "type device { kref: kref_t }\n"
                            "type wcss { glink: device, pdm: device }\n");
  auto ks = find_kref_types(m);
  auto paths = kref_subobject_paths(m, "wcss", ks);
  std::set<std::string> got(paths.begin(), paths.end());
  CHECK(got.count("glink") == 1);
  CHECK(got.count("pdm") == 1);
}

#include "kirv/parse.hpp"
#include "kirv/print.hpp"
#include "kirv/validate.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace kirv;

namespace {

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto &e : std::filesystem::directory_iterator(
           std::string(KIRV_SOURCE_DIR) + "/corpus")) {
    if (e.path().extension() == ".kir")
      out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

TEST_CASE("minimal program: one refclass, one function") {
  auto m = parse_or_throw("refclass device\n"
                          "fn @f() -> void {\n"
                          "^entry:\n"
                          "  ret\n"
                          "}\n");
  REQUIRE(m.ref_classes.size() == 1);
  REQUIRE(m.ref_classes[0] == "device");
  REQUIRE(m.functions.size() == 1);
  REQUIRE(m.functions[0].blocks.size() == 1);
}

TEST_CASE("unterminated aggregate definition errors at the opening line") {
  std::string text = "refclass device\n"
                     "type broken { a: i64,\n"
                     "fn @f() -> void {\n";
  ParseResult r = parse_module(text, "t.kir");
  auto *err = std::get_if<ParseError>(&r);
  REQUIRE(err != nullptr);
  CHECK(err->span.line == 2);
  CHECK(err->span.file == "t.kir");
}

TEST_CASE("error spans lie within the input") {
  std::vector<std::string> bad = {
      "type t {",
      "fn @f( -> void {\n^e:\n ret\n}",
      "fn @f() -> void {\n^e:\n  %x = bogus\n ret\n}",
      "global x: i64",
      "fn @f() -> void {\n^e:\n  store 1\n  ret\n}",
      "extern e() -> ",
  };
  for (const auto &text : bad) {
    ParseResult r = parse_module(text);
    auto *err = std::get_if<ParseError>(&r);
    REQUIRE(err != nullptr);
    int nlines = 1;
    for (char c : text)
      if (c == '\n')
        ++nlines;
    CHECK(err->span.line >= 1);
    CHECK(err->span.line <= nlines + 1);
    CHECK(err->span.col_start >= 1);
    CHECK(err->span.col_start <= err->span.col_end + 1);
  }
}

TEST_CASE("every instruction kind round-trips") {
  std::string text = R"(type kref_t { refcount: i64 } kref refcount
type device { kref: kref_t, id: i64 }
refclass device
global @caps: i64
extern seq_open(addr device, i64) -> i64
entry probe

fn @probe(%dev: addr device, %n: i64) -> i64 {
^entry:
  %x.addr = alloca i64
  store 0, %x.addr
  %v = load %x.addr
  %p = fieldaddr %dev, kref.refcount
  %r = call @seq_open(%dev, 3)
  %nd = nondet i64
  %c = cmp ne %v, 0
  condbr %c, ^a, ^b
^a:
  %s = add %v, 1
  %t = cast %s to i32
  %u = cast %t to i64
  br ^b
^b:
  %ph = phi i64 [^a: %s], [^entry: 0]
  switch %ph, ^c [0: ^c, 1: ^d]
^c:
  br ^d
^d:
  rc_inc device, %dev
  rc_dec device, %dev
  %d = rc_delta device
  %dc = cmp eq %d, 0
  assert %dc
  assume %dc
  asm "nop"(%v)
  %q = asm "rdtsc"() -> i64
  call @undo(%dev)
  ret %v
}

fn @undo(%dev: addr device) -> void {
^entry:
  ret
}
)";
  Module m = parse_or_throw(text);
  std::string printed = print(m);
  Module m2 = parse_or_throw(printed);
  CHECK(m2 == m);
  CHECK(print(m2) == printed);
}

TEST_CASE("parsing is deterministic") {
  std::string text = "refclass a\nfn @f(%x: i64) -> i64 {\n^e:\n  %y = add "
                     "%x, 1\n  ret %y\n}\n";
  Module a = parse_or_throw(text);
  Module b = parse_or_throw(text);
  CHECK(a == b);
  CHECK(print(a) == print(b));
}

TEST_CASE("corpus files parse, validate and round-trip") {
  auto files = corpus_files();
  REQUIRE(files.size() >= 10);
  for (const auto &path : files) {
    INFO(path);
    std::string text = read_file(path);
    ParseResult r = parse_module(text, path);
    auto *err = std::get_if<ParseError>(&r);
    if (err)
      FAIL(err->to_string());
    Module m = std::get<Module>(std::move(r));
    auto violations = validate(m);
    for (const auto &v : violations)
      INFO(v.to_string());
    CHECK(violations.empty());
    Module m2 = parse_or_throw(print(m), path);
    CHECK(m2 == m);
  }
}

TEST_CASE("tpm corpus program has the expected shape") {
  std::string path = std::string(KIRV_SOURCE_DIR) + "/corpus/tpm_leak.kir";
  Module m = parse_or_throw(read_file(path), path);
  REQUIRE(m.function("tpm_bios_measurements_open") != nullptr);
  REQUIRE(m.entry.has_value());
  CHECK(*m.entry == "tpm_bios_measurements_open");
  CHECK(validate(m).empty());
}

namespace {

// Hand-rolled generator of small well-formed modules: straight-line and
// diamond CFGs over integer allocas and arithmetic.
Module random_module(std::mt19937 &rng) {
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  std::ostringstream os;
  os << "refclass device\n";
  int nfun = 1 + pick(2);
  for (int fi = 0; fi < nfun; ++fi) {
    os << "fn @f" << fi << "(%a: i64, %b: i64) -> i64 {\n";
    int shape = pick(3);
    os << "^entry:\n";
    os << "  %x.addr = alloca i64\n";
    os << "  store %a, %x.addr\n";
    int nail = 1 + pick(4);
    std::vector<std::string> vals{"%a", "%b"};
    for (int i = 0; i < nail; ++i) {
      const char *ops[] = {"add", "sub", "mul", "and", "or", "xor"};
      std::string name = "%v" + std::to_string(i);
      os << "  " << name << " = " << ops[pick(6)] << " "
         << vals[pick((int)vals.size())] << ", " << pick(17) - 8 << "\n";
      vals.push_back(name);
    }
    if (shape == 0) {
      os << "  ret " << vals.back() << "\n";
    } else if (shape == 1) {
      os << "  %c = cmp slt " << vals.back() << ", 3\n";
      os << "  condbr %c, ^t, ^e\n";
      os << "^t:\n  store 1, %x.addr\n  br ^join\n";
      os << "^e:\n  store 2, %x.addr\n  br ^join\n";
      os << "^join:\n  %m = phi i64 [^t: 1], [^e: " << vals.back() << "]\n";
      os << "  %l = load %x.addr\n";
      os << "  %o = add %m, %l\n  ret %o\n";
    } else {
      os << "  %c = cmp eq " << vals.back() << ", 0\n";
      os << "  condbr %c, ^t, ^e\n";
      os << "^t:\n  ret 0\n";
      os << "^e:\n  ret " << vals.back() << "\n";
    }
    os << "}\n";
  }
  return parse_or_throw(os.str());
}

} // namespace

TEST_CASE("generated modules validate and round-trip") {
  std::mt19937 rng(20240817);
  for (int i = 0; i < 200; ++i) {
    Module m = random_module(rng);
    auto violations = validate(m);
    for (const auto &v : violations)
      INFO(v.to_string());
    REQUIRE(violations.empty());
    Module m2 = parse_or_throw(print(m));
    REQUIRE(m2 == m);
    REQUIRE(print(m2) == print(m));
  }
}

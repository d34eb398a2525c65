// Parser for the textual KIR format. See docs/kir.md for the grammar.
//
// One statement per line; ';' starts a line comment. The first error wins:
// there is no recovery, and the reported span always lies inside the input.

#pragma once

#include "kirv/ir.hpp"

#include <cctype>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace kirv {

struct SourceSpan {
  std::string file;
  int line = 1;       // 1-based
  int col_start = 1;  // 1-based, inclusive
  int col_end = 1;    // 1-based, inclusive
};

struct ParseError {
  SourceSpan span;
  std::string expected;
  std::string found;

  std::string to_string() const {
    return span.file + ":" + std::to_string(span.line) + ":" +
           std::to_string(span.col_start) + ": expected " + expected +
           ", found '" + found + "'";
  }
};

using ParseResult = std::variant<Module, ParseError>;

namespace detail {

struct Token {
  enum Kind {
    Ident,
    Ssa,     // %name
    Global,  // @name
    Label,   // ^name
    Int,
    Str,     // "..."
    Punct,   // single char: { } ( ) [ ] , : =
    Arrow,   // ->
    Newline,
    End,
  } kind = End;
  std::string text;
  long long value = 0;
  SourceSpan span;
};

class Lexer {
public:
  Lexer(std::string_view src, std::string file)
      : src_(src), file_(std::move(file)) {}

  Token next() {
    skip_ws_and_comments();
    Token t;
    t.span = here(1);
    if (pos_ >= src_.size()) {
      t.kind = Token::End;
      return t;
    }
    char c = src_[pos_];
    if (c == '\n') {
      advance();
      t.kind = Token::Newline;
      t.text = "\\n";
      return t;
    }
    if (c == '%' || c == '@' || c == '^') {
      advance();
      std::string name = lex_ident_tail();
      if (name.empty())
        throw ParseError{t.span, "identifier after '" + std::string(1, c) + "'",
                         std::string(1, c)};
      t.kind = c == '%' ? Token::Ssa : c == '@' ? Token::Global : Token::Label;
      t.text = name;
      t.span.col_end = col_ - 1;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Token::Ident;
      t.text = lex_ident_tail();
      t.span.col_end = col_ - 1;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      size_t start = pos_;
      if (c == '-')
        advance();
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
      t.kind = Token::Int;
      t.text = std::string(src_.substr(start, pos_ - start));
      try {
        t.value = std::stoll(t.text);
      } catch (const std::out_of_range &) {
        throw ParseError{t.span, "integer literal in range", t.text};
      }
      t.span.col_end = col_ - 1;
      return t;
    }
    if (c == '"') {
      advance();
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
        s.push_back(src_[pos_]);
        advance();
      }
      if (pos_ >= src_.size() || src_[pos_] != '"')
        throw ParseError{t.span, "closing '\"'", "end of line"};
      advance();
      t.kind = Token::Str;
      t.text = s;
      t.span.col_end = col_ - 1;
      return t;
    }
    if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      advance();
      advance();
      t.kind = Token::Arrow;
      t.text = "->";
      t.span.col_end = col_ - 1;
      return t;
    }
    if (std::string("{}()[],:=").find(c) != std::string::npos) {
      advance();
      t.kind = Token::Punct;
      t.text = std::string(1, c);
      return t;
    }
    throw ParseError{t.span, "a token", std::string(1, c)};
  }

private:
  SourceSpan here(int width) const {
    SourceSpan s;
    s.file = file_;
    s.line = line_;
    s.col_start = col_;
    s.col_end = col_ + width - 1;
    return s;
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          advance();
      } else {
        break;
      }
    }
  }

  std::string lex_ident_tail() {
    std::string s;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '.') {
        s.push_back(c);
        advance();
      } else {
        break;
      }
    }
    return s;
  }

  std::string_view src_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
public:
  Parser(std::string_view src, std::string file) : lex_(src, std::move(file)) {
    cur_ = lex_.next();
  }

  Module parse_module() {
    Module m;
    skip_newlines();
    while (cur_.kind != Token::End) {
      if (cur_.kind != Token::Ident)
        fail("a top-level item (type/refclass/global/extern/entry/fn)");
      const std::string &kw = cur_.text;
      if (kw == "type")
        m.typedefs.push_back(parse_typedef());
      else if (kw == "refclass")
        m.ref_classes.push_back(parse_refclass());
      else if (kw == "global")
        m.globals.push_back(parse_global());
      else if (kw == "extern")
        m.externs.push_back(parse_extern());
      else if (kw == "entry")
        m.entry = parse_entry();
      else if (kw == "fn")
        m.functions.push_back(parse_fn());
      else
        fail("a top-level item (type/refclass/global/extern/entry/fn)");
      skip_newlines();
    }
    resolve_types(m);
    return m;
  }

private:
  [[noreturn]] void fail(const std::string &expected) {
    std::string found;
    switch (cur_.kind) {
    case Token::End:
      found = "end of input";
      break;
    case Token::Newline:
      found = "end of line";
      break;
    case Token::Ssa:
      found = "%" + cur_.text;
      break;
    case Token::Global:
      found = "@" + cur_.text;
      break;
    case Token::Label:
      found = "^" + cur_.text;
      break;
    default:
      found = cur_.text;
      break;
    }
    throw ParseError{cur_.span, expected, found};
  }

  void bump() { cur_ = lex_.next(); }

  void skip_newlines() {
    while (cur_.kind == Token::Newline)
      bump();
  }

  void expect_newline() {
    if (cur_.kind == Token::End)
      return;
    if (cur_.kind != Token::Newline)
      fail("end of line");
    bump();
  }

  std::string expect_ident(const std::string &what) {
    if (cur_.kind != Token::Ident)
      fail(what);
    std::string s = cur_.text;
    bump();
    return s;
  }

  void expect_keyword(const std::string &kw) {
    if (cur_.kind != Token::Ident || cur_.text != kw)
      fail("'" + kw + "'");
    bump();
  }

  void expect_punct(char c) {
    if (cur_.kind != Token::Punct || cur_.text[0] != c)
      fail("'" + std::string(1, c) + "'");
    bump();
  }

  bool at_punct(char c) const {
    return cur_.kind == Token::Punct && cur_.text[0] == c;
  }

  bool accept_punct(char c) {
    if (at_punct(c)) {
      bump();
      return true;
    }
    return false;
  }

  KirType parse_type() {
    if (cur_.kind != Token::Ident)
      fail("a type");
    std::string head = cur_.text;
    if (head == "void") {
      bump();
      return KirType::void_ty();
    }
    if (head == "addr") {
      bump();
      if (cur_.kind == Token::Ident && cur_.text == "opaque") {
        bump();
        return KirType::addr_opaque();
      }
      return KirType::addr(parse_type());
    }
    if (head.size() > 1 && head[0] == 'i') {
      bool digits = true;
      for (size_t i = 1; i < head.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(head[i])))
          digits = false;
      if (digits) {
        int bits = std::stoi(head.substr(1));
        if (bits < 1 || bits > 64)
          fail("an integer width between 1 and 64");
        bump();
        return KirType::int_ty(bits);
      }
    }
    bump();
    return KirType::agg(head);
  }

  AggDef parse_typedef() {
    expect_keyword("type");
    AggDef def;
    def.name = expect_ident("a type name");
    expect_punct('{');
    while (true) {
      std::string fname = expect_ident("a field name");
      expect_punct(':');
      KirType fty = parse_type();
      def.fields.emplace_back(fname, fty);
      if (!accept_punct(','))
        break;
    }
    expect_punct('}');
    if (cur_.kind == Token::Ident && cur_.text == "kref") {
      bump();
      def.kref_path = expect_ident("a field path");
    }
    expect_newline();
    return def;
  }

  std::string parse_refclass() {
    expect_keyword("refclass");
    std::string name = expect_ident("a refclass name");
    expect_newline();
    return name;
  }

  GlobalDef parse_global() {
    expect_keyword("global");
    GlobalDef g;
    if (cur_.kind != Token::Global)
      fail("'@name'");
    g.name = cur_.text;
    bump();
    expect_punct(':');
    g.type = parse_type();
    expect_newline();
    return g;
  }

  ExternDecl parse_extern() {
    expect_keyword("extern");
    ExternDecl e;
    e.name = expect_ident("an extern name");
    expect_punct('(');
    if (!at_punct(')')) {
      while (true) {
        e.param_types.push_back(parse_type());
        if (!accept_punct(','))
          break;
      }
    }
    expect_punct(')');
    if (cur_.kind != Token::Arrow)
      fail("'->'");
    bump();
    e.ret_type = parse_type();
    expect_newline();
    return e;
  }

  std::string parse_entry() {
    expect_keyword("entry");
    std::string name = expect_ident("a function name");
    expect_newline();
    return name;
  }

  Operand parse_operand() {
    switch (cur_.kind) {
    case Token::Ssa: {
      Operand o = Operand::ssa(cur_.text);
      bump();
      return o;
    }
    case Token::Global: {
      Operand o = Operand::global(cur_.text);
      bump();
      return o;
    }
    case Token::Int: {
      Operand o = Operand::lit(cur_.value);
      bump();
      return o;
    }
    case Token::Ident:
      if (cur_.text == "null") {
        bump();
        return Operand::null();
      }
      [[fallthrough]];
    default:
      fail("an operand");
    }
  }

  // args := [operand ["writeonly"] ("," ...)*]
  void parse_call_args(Instruction &inst) {
    expect_punct('(');
    if (!at_punct(')')) {
      while (true) {
        inst.operands.push_back(parse_operand());
        uint8_t wo = 0;
        if (cur_.kind == Token::Ident && cur_.text == "writeonly") {
          wo = 1;
          bump();
        }
        inst.arg_writeonly.push_back(wo);
        if (!accept_punct(','))
          break;
      }
    }
    expect_punct(')');
  }

  Instruction parse_inst() {
    Instruction inst;
    if (cur_.kind == Token::Ssa) {
      inst.result = cur_.text;
      bump();
      expect_punct('=');
      parse_rhs(inst);
    } else {
      parse_void_inst(inst);
    }
    expect_newline();
    return inst;
  }

  void parse_rhs(Instruction &inst) {
    std::string op = expect_ident("an instruction");
    if (op == "alloca") {
      inst.op = Op::Alloca;
      inst.type = parse_type();
    } else if (op == "load") {
      inst.op = Op::Load;
      inst.operands.push_back(parse_operand());
    } else if (op == "fieldaddr") {
      inst.op = Op::FieldAddr;
      inst.operands.push_back(parse_operand());
      expect_punct(',');
      inst.field_path = expect_ident("a field path");
    } else if (op == "call") {
      inst.op = Op::Call;
      if (cur_.kind != Token::Global)
        fail("'@callee'");
      inst.callee = cur_.text;
      bump();
      parse_call_args(inst);
    } else if (op == "phi") {
      inst.op = Op::Phi;
      inst.type = parse_type();
      while (true) {
        expect_punct('[');
        if (cur_.kind != Token::Label)
          fail("'^block'");
        inst.labels.push_back(cur_.text);
        bump();
        expect_punct(':');
        inst.operands.push_back(parse_operand());
        expect_punct(']');
        if (!accept_punct(','))
          break;
      }
    } else if (op == "add" || op == "sub" || op == "mul" || op == "and" ||
               op == "or" || op == "xor") {
      inst.op = Op::BinOp;
      inst.bin = op == "add"   ? BinKind::Add
                 : op == "sub" ? BinKind::Sub
                 : op == "mul" ? BinKind::Mul
                 : op == "and" ? BinKind::And
                 : op == "or"  ? BinKind::Or
                               : BinKind::Xor;
      inst.operands.push_back(parse_operand());
      expect_punct(',');
      inst.operands.push_back(parse_operand());
    } else if (op == "cmp") {
      inst.op = Op::Cmp;
      std::string cc = expect_ident("a comparison code");
      if (cc == "eq")
        inst.cmp = CmpKind::Eq;
      else if (cc == "ne")
        inst.cmp = CmpKind::Ne;
      else if (cc == "slt")
        inst.cmp = CmpKind::Slt;
      else if (cc == "sle")
        inst.cmp = CmpKind::Sle;
      else if (cc == "sgt")
        inst.cmp = CmpKind::Sgt;
      else if (cc == "sge")
        inst.cmp = CmpKind::Sge;
      else
        fail("one of eq/ne/slt/sle/sgt/sge");
      inst.operands.push_back(parse_operand());
      expect_punct(',');
      inst.operands.push_back(parse_operand());
    } else if (op == "cast") {
      inst.op = Op::Cast;
      inst.operands.push_back(parse_operand());
      expect_keyword("to");
      inst.type = parse_type();
    } else if (op == "nondet") {
      inst.op = Op::Nondet;
      inst.type = parse_type();
    } else if (op == "rc_delta") {
      inst.op = Op::RcDelta;
      inst.ref_class = expect_ident("a refclass name");
    } else if (op == "asm") {
      inst.op = Op::AsmOp;
      if (cur_.kind != Token::Str)
        fail("a quoted mnemonic");
      inst.mnemonic = cur_.text;
      bump();
      parse_call_args(inst);
      if (cur_.kind != Token::Arrow)
        fail("'->'");
      bump();
      inst.type = parse_type();
    } else {
      fail("an instruction with a result");
    }
  }

  void parse_void_inst(Instruction &inst) {
    std::string op = expect_ident("an instruction");
    if (op == "store") {
      inst.op = Op::Store;
      inst.operands.push_back(parse_operand()); // value
      expect_punct(',');
      inst.operands.push_back(parse_operand()); // address
    } else if (op == "br") {
      inst.op = Op::Br;
      if (cur_.kind != Token::Label)
        fail("'^target'");
      inst.labels.push_back(cur_.text);
      bump();
    } else if (op == "condbr") {
      inst.op = Op::CondBr;
      inst.operands.push_back(parse_operand());
      expect_punct(',');
      if (cur_.kind != Token::Label)
        fail("'^target'");
      inst.labels.push_back(cur_.text);
      bump();
      expect_punct(',');
      if (cur_.kind != Token::Label)
        fail("'^target'");
      inst.labels.push_back(cur_.text);
      bump();
    } else if (op == "switch") {
      inst.op = Op::Switch;
      inst.operands.push_back(parse_operand());
      expect_punct(',');
      if (cur_.kind != Token::Label)
        fail("'^default'");
      inst.labels.push_back(cur_.text); // default first
      bump();
      expect_punct('[');
      if (!at_punct(']')) {
        while (true) {
          if (cur_.kind != Token::Int)
            fail("a case value");
          inst.case_values.push_back(cur_.value);
          bump();
          expect_punct(':');
          if (cur_.kind != Token::Label)
            fail("'^target'");
          inst.labels.push_back(cur_.text);
          bump();
          if (!accept_punct(','))
            break;
        }
      }
      expect_punct(']');
    } else if (op == "ret") {
      inst.op = Op::Ret;
      if (cur_.kind != Token::Newline && cur_.kind != Token::End)
        inst.operands.push_back(parse_operand());
    } else if (op == "assert") {
      inst.op = Op::Assert;
      inst.operands.push_back(parse_operand());
    } else if (op == "assume") {
      inst.op = Op::Assume;
      inst.operands.push_back(parse_operand());
    } else if (op == "rc_inc" || op == "rc_dec") {
      inst.op = op == "rc_inc" ? Op::RcInc : Op::RcDec;
      inst.ref_class = expect_ident("a refclass name");
      expect_punct(',');
      inst.operands.push_back(parse_operand());
    } else if (op == "call") {
      inst.op = Op::Call;
      if (cur_.kind != Token::Global)
        fail("'@callee'");
      inst.callee = cur_.text;
      bump();
      parse_call_args(inst);
    } else if (op == "asm") {
      inst.op = Op::AsmOp;
      if (cur_.kind != Token::Str)
        fail("a quoted mnemonic");
      inst.mnemonic = cur_.text;
      bump();
      parse_call_args(inst);
      inst.type = KirType::void_ty();
    } else {
      fail("an instruction");
    }
  }

  Function parse_fn() {
    expect_keyword("fn");
    Function f;
    if (cur_.kind != Token::Global)
      fail("'@name'");
    f.name = cur_.text;
    bump();
    expect_punct('(');
    if (!at_punct(')')) {
      while (true) {
        Param p;
        if (cur_.kind != Token::Ssa)
          fail("'%param'");
        p.name = cur_.text;
        bump();
        expect_punct(':');
        p.type = parse_type();
        if (cur_.kind == Token::Ident && cur_.text == "writeonly") {
          p.writeonly = true;
          bump();
        }
        f.params.push_back(p);
        if (!accept_punct(','))
          break;
      }
    }
    expect_punct(')');
    if (cur_.kind != Token::Arrow)
      fail("'->'");
    bump();
    f.ret_type = parse_type();
    expect_punct('{');
    expect_newline();
    skip_newlines();
    int next_id = 0;
    while (!at_punct('}')) {
      if (cur_.kind != Token::Label)
        fail("'^block:' or '}'");
      Block b;
      b.label = cur_.text;
      bump();
      expect_punct(':');
      expect_newline();
      skip_newlines();
      while (cur_.kind == Token::Ssa || cur_.kind == Token::Ident) {
        Instruction inst = parse_inst();
        inst.id = next_id++;
        bool term = inst.is_terminator();
        b.insts.push_back(std::move(inst));
        skip_newlines();
        if (term)
          break;
      }
      f.blocks.push_back(std::move(b));
      skip_newlines();
    }
    expect_punct('}');
    expect_newline();
    return f;
  }

  Lexer lex_;
  Token cur_;
};

} // namespace detail

/// Parses KIR text. On success the module has instruction result types
/// resolved; well-formedness beyond syntax is the validator's job.
inline ParseResult parse_module(std::string_view text,
                                const std::string &file = "<input>") {
  try {
    detail::Parser p(text, file);
    return p.parse_module();
  } catch (const ParseError &e) {
    return e;
  }
}

/// Parse helper for inputs known to be valid (tests, templates). Throws
/// std::runtime_error on failure.
inline Module parse_or_throw(std::string_view text,
                             const std::string &file = "<input>") {
  ParseResult r = parse_module(text, file);
  if (auto *err = std::get_if<ParseError>(&r))
    throw std::runtime_error(err->to_string());
  return std::get<Module>(std::move(r));
}

} // namespace kirv

// Copyright 2026 The qpalg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qpalg/parser.hpp"

#include <cctype>
#include <map>
#include <optional>

#include "qpalg/quantum.hpp"

namespace qpalg {

namespace {

enum class Tok {
  Ident,
  Number,
  KwNil,
  KwEnd,
  KwTrue,
  KwFalse,
  KwNat,
  KwQubit,
  Dot,
  Semi,
  ParPar,
  Backslash,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  LParen,
  RParen,
  Comma,
  Arrow,
  Colon,
  Assign,
  Bang,
  BangEq,
  Question,
  Eq,
  Eof,
};

struct Token {
  Tok kind;
  std::string text;
  std::uint64_t number = 0;
  SourcePos pos;
};

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t line = 1, col = 1;
  auto pos = [&] { return SourcePos{line, col}; };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i < text.size() && text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    const SourcePos p = pos();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::uint64_t value = 0;
      std::size_t start = i;
      while (i < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[i]))) {
        const std::uint64_t digit = text[i] - '0';
        if (value > (UINT64_MAX - digit) / 10) {
          throw ParseError("number literal too large", p, {"number"});
        }
        value = value * 10 + digit;
        advance(1);
      }
      out.push_back({Tok::Number, text.substr(start, i - start), value, p});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) ||
              text[i] == '_')) {
        advance(1);
      }
      const std::string word = text.substr(start, i - start);
      Tok kind = Tok::Ident;
      if (word == "nil") kind = Tok::KwNil;
      else if (word == "end") kind = Tok::KwEnd;
      else if (word == "true") kind = Tok::KwTrue;
      else if (word == "false") kind = Tok::KwFalse;
      else if (word == "Nat") kind = Tok::KwNat;
      else if (word == "Qubit") kind = Tok::KwQubit;
      out.push_back({kind, word, 0, p});
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < text.size() && text[i + 1] == b;
    };
    if (two('|', '|')) {
      out.push_back({Tok::ParPar, "||", 0, p});
      advance(2);
      continue;
    }
    if (two('-', '>')) {
      out.push_back({Tok::Arrow, "->", 0, p});
      advance(2);
      continue;
    }
    if (two(':', '=')) {
      out.push_back({Tok::Assign, ":=", 0, p});
      advance(2);
      continue;
    }
    if (two('!', '=')) {
      out.push_back({Tok::BangEq, "!=", 0, p});
      advance(2);
      continue;
    }
    Tok kind;
    switch (c) {
      case '.': kind = Tok::Dot; break;
      case ';': kind = Tok::Semi; break;
      case '\\': kind = Tok::Backslash; break;
      case '{': kind = Tok::LBrace; break;
      case '}': kind = Tok::RBrace; break;
      case '[': kind = Tok::LBracket; break;
      case ']': kind = Tok::RBracket; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      case ':': kind = Tok::Colon; break;
      case '!': kind = Tok::Bang; break;
      case '?': kind = Tok::Question; break;
      case '=': kind = Tok::Eq; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", p,
                         {});
    }
    out.push_back({kind, std::string(1, c), 0, p});
    advance(1);
  }
  out.push_back({Tok::Eof, "", 0, pos()});
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : tokens_(lex(text)) {}

  Program parse_program() {
    Program prog;
    bool have_main = false;
    while (!check(Tok::Eof)) {
      const Token& name = expect(Tok::Ident, "definition name");
      expect(Tok::Assign, "':='");
      ProcessPtr body = parse_par();
      if (name.text == "main") {
        if (have_main) {
          throw Error(ErrorKind::DuplicateDefinition, "duplicate main",
                      name.pos);
        }
        have_main = true;
        prog.main = body;
      } else {
        if (is_unitary_name(name.text) || is_observable_name(name.text)) {
          throw Error(ErrorKind::DuplicateDefinition,
                      "definition name " + name.text +
                          " collides with a built-in operator",
                      name.pos);
        }
        if (prog.find(name.text) != nullptr) {
          throw Error(ErrorKind::DuplicateDefinition, name.text, name.pos);
        }
        prog.definitions.push_back({name.text, body});
      }
    }
    if (!have_main) {
      throw Error(ErrorKind::MissingMain, "missing main");
    }
    return prog;
  }

  ProcessPtr parse_single_process() {
    ProcessPtr p = parse_par();
    if (!check(Tok::Eof)) {
      fail({"';'", "'||'", "end of input"});
    }
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t idx = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[idx];
  }
  bool check(Tok t, std::size_t ahead = 0) const { return peek(ahead).kind == t; }
  const Token& next() { return tokens_[pos_++]; }
  bool match(Tok t) {
    if (check(t)) {
      ++pos_;
      return true;
    }
    return false;
  }
  const Token& expect(Tok t, const std::string& what) {
    if (!check(t)) fail({what});
    return next();
  }
  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string msg = "unexpected ";
    msg += t.kind == Tok::Eof ? "end of input" : "'" + t.text + "'";
    if (!expected.empty()) {
      msg += ", expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) msg += " or ";
        msg += expected[i];
      }
    }
    throw ParseError(msg, t.pos, std::move(expected));
  }

  ProcessPtr parse_par() {
    ProcessPtr left = parse_seq();
    while (match(Tok::ParPar)) {
      left = make_par(left, parse_seq());
    }
    return left;
  }

  ProcessPtr parse_seq() {
    ProcessPtr left = parse_prefix();
    while (match(Tok::Semi)) {
      left = make_seq(left, parse_prefix());
    }
    return left;
  }

  bool at_action_start() const {
    if (!check(Tok::Ident)) return false;
    if (check(Tok::Bang, 1) || check(Tok::Question, 1)) return true;
    if (check(Tok::LBracket, 1) && (is_unitary_name(peek().text) ||
                                    is_observable_name(peek().text))) {
      return true;
    }
    return false;
  }

  ProcessPtr parse_prefix() {
    if (at_action_start()) {
      Action act = parse_action();
      if (!check(Tok::Dot)) fail({"'.'"});
      next();
      return make_prefix(std::move(act), parse_prefix());
    }
    // `Name[...] . P` can only be an operator application; catch misspelled
    // operator names here instead of tripping over the '.' later.
    if (check(Tok::Ident) && !is_unitary_name(peek().text) &&
        !is_observable_name(peek().text)) {
      std::size_t after = arg_group_end(1);
      if (after != 0 && check(Tok::Dot, after)) {
        throw Error(ErrorKind::UnknownGateOrOperator,
                    "unknown unitary or observable " + peek().text, peek().pos);
      }
    }
    return parse_primary();
  }

  std::vector<std::string> parse_var_list() {
    expect(Tok::LBracket, "'['");
    std::vector<std::string> vars;
    vars.push_back(expect(Tok::Ident, "variable").text);
    while (match(Tok::Comma)) {
      vars.push_back(expect(Tok::Ident, "variable").text);
    }
    expect(Tok::RBracket, "']'");
    return vars;
  }

  Action parse_action() {
    const Token& head = expect(Tok::Ident, "gate or operator");
    if (match(Tok::Bang)) {
      if (check(Tok::Number)) {
        const Token& v = next();
        return SendValue{head.text, Expr::lit(v.number)};
      }
      if (check(Tok::Ident)) {
        if (is_observable_name(peek().text) && check(Tok::LBracket, 1)) {
          const Token& obs = next();
          return SendMeasure{head.text, obs.text, parse_var_list()};
        }
        const Token& v = next();
        // Variable sends are classified as value or qubit sends during the
        // scope pass, once the declared type is known.
        return SendValue{head.text, Expr::variable(v.text)};
      }
      fail({"number", "variable", "observable"});
    }
    if (match(Tok::Question)) {
      return Recv{head.text, expect(Tok::Ident, "variable").text};
    }
    if (is_unitary_name(head.text)) {
      return Unitary{head.text, parse_var_list()};
    }
    return Measure{head.text, parse_var_list()};
  }

  VarType parse_type() {
    if (match(Tok::KwNat)) return VarType::Nat;
    if (match(Tok::KwQubit)) return VarType::Qubit;
    fail({"'Nat'", "'Qubit'"});
  }

  Expr parse_expr_operand() {
    if (check(Tok::Number)) return Expr::lit(next().number);
    if (check(Tok::Ident)) return Expr::variable(next().text);
    fail({"number", "variable"});
  }

  Condition parse_condition() {
    if (match(Tok::KwTrue)) return CondTrue{};
    if (match(Tok::KwFalse)) return CondFalse{};
    const Token& var = expect(Tok::Ident, "condition variable");
    if (match(Tok::Eq)) return CondEq{var.text, parse_expr_operand()};
    if (match(Tok::BangEq)) return CondNeq{var.text, parse_expr_operand()};
    fail({"'='", "'!='"});
  }

  ProcessPtr parse_block() {
    // '[' already consumed. Dispatch on lookahead: declaration list,
    // condition list, or plain scope block.
    if (check(Tok::Ident) && check(Tok::Colon, 1)) {
      std::vector<Binding> bindings;
      for (;;) {
        const Token& name = expect(Tok::Ident, "variable");
        expect(Tok::Colon, "':'");
        bindings.push_back({name.text, parse_type()});
        if (!match(Tok::Comma)) break;
      }
      expect(Tok::Dot, "'.'");
      ProcessPtr body = parse_par();
      expect(Tok::RBracket, "']'");
      return make_decl(std::move(bindings), body);
    }
    const bool cond_list =
        check(Tok::KwTrue) || check(Tok::KwFalse) ||
        (check(Tok::Ident) && (check(Tok::Eq, 1) || check(Tok::BangEq, 1)));
    if (cond_list) {
      std::vector<std::pair<Condition, ProcessPtr>> branches;
      for (;;) {
        Condition c = parse_condition();
        expect(Tok::Arrow, "'->'");
        branches.emplace_back(std::move(c), parse_par());
        if (!match(Tok::Comma)) break;
      }
      expect(Tok::RBracket, "']'");
      return make_cond(std::move(branches));
    }
    ProcessPtr body = parse_par();
    expect(Tok::RBracket, "']'");
    return make_scope(body);
  }

  std::set<std::string> parse_gate_set() {
    expect(Tok::LBrace, "'{'");
    std::set<std::string> gates;
    gates.insert(expect(Tok::Ident, "gate").text);
    while (match(Tok::Comma)) {
      gates.insert(expect(Tok::Ident, "gate").text);
    }
    expect(Tok::RBrace, "'}'");
    return gates;
  }

  ProcessPtr with_restriction(ProcessPtr p) {
    while (match(Tok::Backslash)) {
      p = make_restrict(p, parse_gate_set());
    }
    return p;
  }

  // An invocation argument group is strictly '[' ident (',' ident)* ']'.
  // Returns the lookahead offset just past the closing ']', or 0 when the
  // tokens at `from` do not form a group.
  std::size_t arg_group_end(std::size_t from) const {
    if (!check(Tok::LBracket, from)) return 0;
    std::size_t k = from + 1;
    if (!check(Tok::Ident, k)) return 0;
    ++k;
    while (check(Tok::Comma, k) && check(Tok::Ident, k + 1)) k += 2;
    return check(Tok::RBracket, k) ? k + 1 : 0;
  }

  bool at_arg_group() const { return arg_group_end(0) != 0; }

  ProcessPtr parse_primary() {
    if (match(Tok::KwNil)) return make_nil();
    if (match(Tok::KwEnd)) return make_end();
    if (match(Tok::LParen)) {
      ProcessPtr p = parse_par();
      expect(Tok::RParen, "')'");
      return with_restriction(p);
    }
    if (match(Tok::LBracket)) {
      return with_restriction(parse_block());
    }
    if (check(Tok::Ident)) {
      const Token& name = next();
      if (is_unitary_name(name.text) || is_observable_name(name.text)) {
        // An operator in process position would have been an action prefix;
        // reaching here means the '[' is missing.
        --pos_;
        fail({"'['"});
      }
      std::vector<std::string> args;
      while (at_arg_group()) {
        // Consecutive argument groups concatenate: F[a][b] = F[a,b].
        auto group = parse_var_list();
        args.insert(args.end(), group.begin(), group.end());
      }
      return make_invoke(name.text, std::move(args));
    }
    fail({"'nil'", "'end'", "'('", "'['", "process name", "action"});
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Scope pass: checks declarations, resolves variable sends, validates
// registry arities and invocation argument lists.

class ScopeChecker {
 public:
  ScopeChecker(const Program* prog, bool strict) : prog_(prog), strict_(strict) {}

  ProcessPtr run(const ProcessPtr& p) { return walk(p); }

 private:
  std::optional<VarType> lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto found = it->find(name);
      if (found != it->end()) return found->second;
    }
    return std::nullopt;
  }

  VarType require(const std::string& name) const {
    auto t = lookup(name);
    if (!t) {
      throw Error(ErrorKind::Scope, "variable " + name + " is not declared");
    }
    return *t;
  }

  void require_type(const std::string& name, VarType want,
                    const char* use) const {
    if (!strict_) {
      auto t = lookup(name);
      if (t && *t != want) {
        throw Error(ErrorKind::Scope, std::string("variable ") + name +
                                          " has the wrong type for " + use);
      }
      return;
    }
    if (require(name) != want) {
      throw Error(ErrorKind::Scope, std::string("variable ") + name +
                                        " has the wrong type for " + use);
    }
  }

  void check_distinct(const std::vector<std::string>& vars) const {
    std::set<std::string> seen;
    for (const auto& v : vars) {
      if (!seen.insert(v).second) {
        throw Error(ErrorKind::Scope, "duplicate variable " + v);
      }
    }
  }

  Action walk_action(const Action& a) {
    return std::visit(
        [&](const auto& act) -> Action {
          using T = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<T, SendValue>) {
            if (act.value.is_literal) return act;
            auto t = lookup(act.value.var);
            if (!t) {
              if (strict_) require(act.value.var);
              return act;  // lenient: default to a value send
            }
            if (*t == VarType::Qubit) {
              return SendQubit{act.gate, act.value.var};
            }
            return act;
          } else if constexpr (std::is_same_v<T, SendQubit>) {
            require_type(act.var, VarType::Qubit, "a qubit send");
            return act;
          } else if constexpr (std::is_same_v<T, SendMeasure>) {
            check_measure(act.observable, act.vars);
            return act;
          } else if constexpr (std::is_same_v<T, Recv>) {
            if (strict_) require(act.var);
            return act;
          } else if constexpr (std::is_same_v<T, Unitary>) {
            const auto& entry = get_unitary(act.name);
            if (entry.arity != act.vars.size()) {
              throw Error(ErrorKind::Scope,
                          act.name + " expects " + std::to_string(entry.arity) +
                              " variable(s)");
            }
            check_distinct(act.vars);
            for (const auto& v : act.vars) {
              require_type(v, VarType::Qubit, act.name.c_str());
            }
            return act;
          } else if constexpr (std::is_same_v<T, Measure>) {
            check_measure(act.observable, act.vars);
            return act;
          }
        },
        a);
  }

  void check_measure(const std::string& observable,
                     const std::vector<std::string>& vars) {
    const auto& entry = get_observable(observable);
    if (entry.arity != vars.size()) {
      throw Error(ErrorKind::Scope, observable + " expects " +
                                        std::to_string(entry.arity) +
                                        " variable(s)");
    }
    check_distinct(vars);
    for (const auto& v : vars) {
      require_type(v, VarType::Qubit, observable.c_str());
    }
  }

  void walk_condition(const Condition& c) {
    auto check_operand = [&](const Expr& e) {
      if (!e.is_literal) require_type(e.var, VarType::Nat, "a condition");
    };
    if (const auto* eq = std::get_if<CondEq>(&c)) {
      require_type(eq->var, VarType::Nat, "a condition");
      check_operand(eq->rhs);
    } else if (const auto* ne = std::get_if<CondNeq>(&c)) {
      require_type(ne->var, VarType::Nat, "a condition");
      check_operand(ne->rhs);
    }
  }

  ProcessPtr walk(const ProcessPtr& p) {
    return std::visit(
        [&](const auto& n) -> ProcessPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Nil>) {
            return make_nil();
          } else if constexpr (std::is_same_v<T, End>) {
            return make_end();
          } else if constexpr (std::is_same_v<T, Prefix>) {
            Action act = walk_action(n.action);
            return make_prefix(std::move(act), walk(n.rest));
          } else if constexpr (std::is_same_v<T, Seq>) {
            return make_seq(walk(n.left), walk(n.right));
          } else if constexpr (std::is_same_v<T, Par>) {
            return make_par(walk(n.left), walk(n.right));
          } else if constexpr (std::is_same_v<T, Restrict>) {
            return make_restrict(walk(n.body), n.gates);
          } else if constexpr (std::is_same_v<T, Cond>) {
            std::vector<std::pair<Condition, ProcessPtr>> branches;
            for (const auto& [c, q] : n.branches) {
              walk_condition(c);
              branches.emplace_back(c, walk(q));
            }
            return make_cond(std::move(branches));
          } else if constexpr (std::is_same_v<T, Decl>) {
            std::map<std::string, VarType> frame;
            for (const auto& b : n.bindings) {
              if (frame.count(b.name)) {
                throw Error(ErrorKind::Scope,
                            "duplicate binding " + b.name + " in declaration");
              }
              if (strict_ && lookup(b.name)) {
                throw Error(ErrorKind::Scope,
                            "declaration of " + b.name +
                                " shadows an enclosing declaration");
              }
              frame[b.name] = b.type;
            }
            scopes_.push_back(std::move(frame));
            ProcessPtr body = walk(n.body);
            scopes_.pop_back();
            return make_decl(n.bindings, body);
          } else if constexpr (std::is_same_v<T, Scope>) {
            return make_scope(walk(n.body));
          } else if constexpr (std::is_same_v<T, Invoke>) {
            if (strict_) {
              const Definition* def = prog_ ? prog_->find(n.name) : nullptr;
              if (def == nullptr) {
                throw Error(ErrorKind::UnknownGateOrOperator,
                            "unknown process or operator " + n.name);
              }
              const auto formals = formals_of(*def->body);
              if (n.args.size() > formals.size()) {
                throw Error(ErrorKind::Scope,
                            "invocation of " + n.name + " passes " +
                                std::to_string(n.args.size()) +
                                " argument(s), definition declares " +
                                std::to_string(formals.size()));
              }
              check_distinct(n.args);
              for (std::size_t i = 0; i < n.args.size(); ++i) {
                require_type(n.args[i], formals[i].type, "this invocation");
              }
            }
            return make_invoke(n.name, n.args);
          }
        },
        p->node);
  }

  const Program* prog_;
  bool strict_;
  std::vector<std::map<std::string, VarType>> scopes_;
};

}  // namespace

Program parse_program(const std::string& text) {
  Parser parser(text);
  Program prog = parser.parse_program();
  Program checked;
  checked.definitions.reserve(prog.definitions.size());
  for (const auto& def : prog.definitions) {
    ScopeChecker checker(&prog, /*strict=*/true);
    checked.definitions.push_back({def.name, checker.run(def.body)});
  }
  ScopeChecker main_checker(&prog, /*strict=*/true);
  checked.main = main_checker.run(prog.main);
  return checked;
}

ProcessPtr parse_process(const std::string& text) {
  Parser parser(text);
  ProcessPtr p = parser.parse_single_process();
  ScopeChecker checker(nullptr, /*strict=*/false);
  return checker.run(p);
}

}  // namespace qpalg

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

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace qpalg {

enum class VarType { Nat, Qubit };

const char* var_type_name(VarType t);

struct Binding {
  std::string name;
  VarType type;

  bool operator==(const Binding&) const = default;
  auto operator<=>(const Binding&) const = default;
};

/// Right-hand side of a value send or comparison: a literal or a variable.
struct Expr {
  bool is_literal = true;
  std::uint64_t literal = 0;
  std::string var;

  static Expr lit(std::uint64_t v) { return Expr{true, v, {}}; }
  static Expr variable(std::string name) {
    return Expr{false, 0, std::move(name)};
  }
  bool operator==(const Expr&) const = default;
};

// Conditions of a conditional choice block.
struct CondTrue {
  bool operator==(const CondTrue&) const = default;
};
struct CondFalse {
  bool operator==(const CondFalse&) const = default;
};
struct CondEq {
  std::string var;
  Expr rhs;
  bool operator==(const CondEq&) const = default;
};
struct CondNeq {
  std::string var;
  Expr rhs;
  bool operator==(const CondNeq&) const = default;
};
using Condition = std::variant<CondTrue, CondFalse, CondEq, CondNeq>;

// Basic actions.
struct SendValue {  // g!0 or g!k with k classical
  std::string gate;
  Expr value;
  bool operator==(const SendValue&) const = default;
};
struct SendQubit {  // g!x with x of type Qubit
  std::string gate;
  std::string var;
  bool operator==(const SendQubit&) const = default;
};
struct SendMeasure {  // g!M[x1,...,xn]
  std::string gate;
  std::string observable;
  std::vector<std::string> vars;
  bool operator==(const SendMeasure&) const = default;
};
struct Recv {  // g?x (classical or qubit reception, depending on x's type)
  std::string gate;
  std::string var;
  bool operator==(const Recv&) const = default;
};
struct Unitary {  // U[x1,...,xn]
  std::string name;
  std::vector<std::string> vars;
  bool operator==(const Unitary&) const = default;
};
struct Measure {  // M[x1,...,xn], result discarded
  std::string observable;
  std::vector<std::string> vars;
  bool operator==(const Measure&) const = default;
};
using Action =
    std::variant<SendValue, SendQubit, SendMeasure, Recv, Unitary, Measure>;

struct Process;
using ProcessPtr = std::shared_ptr<const Process>;

struct Nil {};
struct End {};
struct Prefix {
  Action action;
  ProcessPtr rest;
};
struct Seq {
  ProcessPtr left;
  ProcessPtr right;
};
struct Par {
  ProcessPtr left;
  ProcessPtr right;
};
struct Restrict {
  ProcessPtr body;
  std::set<std::string> gates;
};
struct Cond {
  std::vector<std::pair<Condition, ProcessPtr>> branches;
};
struct Decl {
  std::vector<Binding> bindings;
  ProcessPtr body;
};
/// A scope block whose frame is already on the environment stack. Produced
/// when a declaration fires; also written `[ P ]` in source.
struct Scope {
  ProcessPtr body;
};
struct Invoke {
  std::string name;
  std::vector<std::string> args;
};

struct Process {
  std::variant<Nil, End, Prefix, Seq, Par, Restrict, Cond, Decl, Scope, Invoke>
      node;

  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
};

ProcessPtr make_nil();
ProcessPtr make_end();
ProcessPtr make_prefix(Action a, ProcessPtr rest);
ProcessPtr make_seq(ProcessPtr l, ProcessPtr r);
ProcessPtr make_par(ProcessPtr l, ProcessPtr r);
ProcessPtr make_restrict(ProcessPtr body, std::set<std::string> gates);
ProcessPtr make_cond(std::vector<std::pair<Condition, ProcessPtr>> branches);
ProcessPtr make_decl(std::vector<Binding> bindings, ProcessPtr body);
ProcessPtr make_scope(ProcessPtr body);
ProcessPtr make_invoke(std::string name, std::vector<std::string> args = {});

bool process_equal(const Process& a, const Process& b);
inline bool process_equal(const ProcessPtr& a, const ProcessPtr& b) {
  return process_equal(*a, *b);
}

struct Definition {
  std::string name;
  ProcessPtr body;
};

struct Program {
  std::vector<Definition> definitions;  // source order, without main
  ProcessPtr main;

  const Definition* find(const std::string& name) const;
};

/// The formal parameters of a definition: the bindings of the leading chain
/// of declaration blocks of its body, in declaration order.
std::vector<Binding> formals_of(const Process& body);

/// All variable names occurring in a term (bound or free).
void collect_names(const Process& p, std::set<std::string>& out);

}  // namespace qpalg

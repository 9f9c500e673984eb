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

#include "qpalg/ast.hpp"

#include "qpalg/errors.hpp"

namespace qpalg {

const char* var_type_name(VarType t) {
  return t == VarType::Nat ? "Nat" : "Qubit";
}

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Scope: return "ScopeError";
    case ErrorKind::DuplicateDefinition: return "DuplicateDefinition";
    case ErrorKind::UnknownGateOrOperator: return "UnknownGateOrOperator";
    case ErrorKind::MissingMain: return "MissingMain";
    case ErrorKind::IllScoped: return "IllScoped";
    case ErrorKind::UnitaryArityMismatch: return "UnitaryArityMismatch";
    case ErrorKind::QubitNotInRegister: return "QubitNotInRegister";
    case ErrorKind::InvalidQubitInit: return "InvalidQubitInit";
    case ErrorKind::UndefinedVariable: return "UndefinedVariable";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::DuplicateBinding: return "DuplicateBinding";
    case ErrorKind::UnknownQubit: return "UnknownQubit";
    case ErrorKind::AlreadyAttached: return "AlreadyAttached";
    case ErrorKind::NotDeclared: return "NotDeclared";
    case ErrorKind::WrongType: return "WrongType";
    case ErrorKind::EmptyStack: return "EmptyStack";
    case ErrorKind::BadDistribution: return "BadDistribution";
    case ErrorKind::DuplicateTarget: return "DuplicateTarget";
    case ErrorKind::TruncatedGraph: return "TruncatedGraph";
    case ErrorKind::ContractionViolated: return "ContractionViolated";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::LimitExceeded: return "LimitExceeded";
  }
  return "Error";
}

std::string Error::format(ErrorKind kind, const std::string& message,
                          SourcePos pos) {
  std::string out = error_kind_name(kind);
  if (pos.line != 0) {
    out += " at " + pos.to_string();
  }
  out += ": " + message;
  return out;
}

ProcessPtr make_nil() {
  static const ProcessPtr n = std::make_shared<Process>(Process{Nil{}});
  return n;
}
ProcessPtr make_end() {
  static const ProcessPtr e = std::make_shared<Process>(Process{End{}});
  return e;
}
ProcessPtr make_prefix(Action a, ProcessPtr rest) {
  return std::make_shared<Process>(Process{Prefix{std::move(a), std::move(rest)}});
}
ProcessPtr make_seq(ProcessPtr l, ProcessPtr r) {
  return std::make_shared<Process>(Process{Seq{std::move(l), std::move(r)}});
}
ProcessPtr make_par(ProcessPtr l, ProcessPtr r) {
  return std::make_shared<Process>(Process{Par{std::move(l), std::move(r)}});
}
ProcessPtr make_restrict(ProcessPtr body, std::set<std::string> gates) {
  return std::make_shared<Process>(
      Process{Restrict{std::move(body), std::move(gates)}});
}
ProcessPtr make_cond(std::vector<std::pair<Condition, ProcessPtr>> branches) {
  return std::make_shared<Process>(Process{Cond{std::move(branches)}});
}
ProcessPtr make_decl(std::vector<Binding> bindings, ProcessPtr body) {
  return std::make_shared<Process>(
      Process{Decl{std::move(bindings), std::move(body)}});
}
ProcessPtr make_scope(ProcessPtr body) {
  return std::make_shared<Process>(Process{Scope{std::move(body)}});
}
ProcessPtr make_invoke(std::string name, std::vector<std::string> args) {
  return std::make_shared<Process>(
      Process{Invoke{std::move(name), std::move(args)}});
}

namespace {

bool condition_equal(const Condition& a, const Condition& b) {
  return a == b;
}

bool action_equal(const Action& a, const Action& b) { return a == b; }

}  // namespace

bool process_equal(const Process& a, const Process& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using T = std::decay_t<decltype(na)>;
        const T& nb = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, Nil> || std::is_same_v<T, End>) {
          return true;
        } else if constexpr (std::is_same_v<T, Prefix>) {
          return action_equal(na.action, nb.action) &&
                 process_equal(na.rest, nb.rest);
        } else if constexpr (std::is_same_v<T, Seq> || std::is_same_v<T, Par>) {
          return process_equal(na.left, nb.left) &&
                 process_equal(na.right, nb.right);
        } else if constexpr (std::is_same_v<T, Restrict>) {
          return na.gates == nb.gates && process_equal(na.body, nb.body);
        } else if constexpr (std::is_same_v<T, Cond>) {
          if (na.branches.size() != nb.branches.size()) return false;
          for (std::size_t i = 0; i < na.branches.size(); ++i) {
            if (!condition_equal(na.branches[i].first, nb.branches[i].first) ||
                !process_equal(na.branches[i].second, nb.branches[i].second)) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<T, Decl>) {
          return na.bindings == nb.bindings && process_equal(na.body, nb.body);
        } else if constexpr (std::is_same_v<T, Scope>) {
          return process_equal(na.body, nb.body);
        } else if constexpr (std::is_same_v<T, Invoke>) {
          return na.name == nb.name && na.args == nb.args;
        }
      },
      a.node);
}

const Definition* Program::find(const std::string& name) const {
  for (const auto& d : definitions) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

std::vector<Binding> formals_of(const Process& body) {
  std::vector<Binding> out;
  const Process* p = &body;
  while (const auto* d = p->get_if<Decl>()) {
    out.insert(out.end(), d->bindings.begin(), d->bindings.end());
    p = d->body.get();
  }
  return out;
}

namespace {

void collect_expr(const Expr& e, std::set<std::string>& out) {
  if (!e.is_literal) out.insert(e.var);
}

void collect_action(const Action& a, std::set<std::string>& out) {
  std::visit(
      [&](const auto& act) {
        using T = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<T, SendValue>) {
          collect_expr(act.value, out);
        } else if constexpr (std::is_same_v<T, SendQubit>) {
          out.insert(act.var);
        } else if constexpr (std::is_same_v<T, SendMeasure>) {
          out.insert(act.vars.begin(), act.vars.end());
        } else if constexpr (std::is_same_v<T, Recv>) {
          out.insert(act.var);
        } else if constexpr (std::is_same_v<T, Unitary>) {
          out.insert(act.vars.begin(), act.vars.end());
        } else if constexpr (std::is_same_v<T, Measure>) {
          out.insert(act.vars.begin(), act.vars.end());
        }
      },
      a);
}

void collect_condition(const Condition& c, std::set<std::string>& out) {
  if (const auto* eq = std::get_if<CondEq>(&c)) {
    out.insert(eq->var);
    collect_expr(eq->rhs, out);
  } else if (const auto* ne = std::get_if<CondNeq>(&c)) {
    out.insert(ne->var);
    collect_expr(ne->rhs, out);
  }
}

}  // namespace

void collect_names(const Process& p, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Prefix>) {
          collect_action(n.action, out);
          collect_names(*n.rest, out);
        } else if constexpr (std::is_same_v<T, Seq> || std::is_same_v<T, Par>) {
          collect_names(*n.left, out);
          collect_names(*n.right, out);
        } else if constexpr (std::is_same_v<T, Restrict>) {
          collect_names(*n.body, out);
        } else if constexpr (std::is_same_v<T, Cond>) {
          for (const auto& [c, q] : n.branches) {
            collect_condition(c, out);
            collect_names(*q, out);
          }
        } else if constexpr (std::is_same_v<T, Decl>) {
          for (const auto& b : n.bindings) out.insert(b.name);
          collect_names(*n.body, out);
        } else if constexpr (std::is_same_v<T, Scope>) {
          collect_names(*n.body, out);
        } else if constexpr (std::is_same_v<T, Invoke>) {
          out.insert(n.args.begin(), n.args.end());
        }
      },
      p.node);
}

}  // namespace qpalg

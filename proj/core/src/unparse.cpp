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

#include "qpalg/unparse.hpp"

#include <sstream>

namespace qpalg {

namespace {

// Precedence levels: parallel < sequence < prefix < primary.
enum Level { kPar = 0, kSeq = 1, kPrefix = 2, kPrimary = 3 };

std::string expr_str(const Expr& e, VarNamer& namer) {
  return e.is_literal ? std::to_string(e.literal) : namer.var(e.var);
}

std::string var_list_str(const std::vector<std::string>& vars,
                         VarNamer& namer) {
  std::string out = "[";
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) out += ",";
    out += namer.var(vars[i]);
  }
  return out + "]";
}

class Printer {
 public:
  explicit Printer(VarNamer& namer) : namer_(namer) {}

  std::string print(const Process& p, int level) {
    return std::visit(
        [&](const auto& n) -> std::string {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Nil>) {
            return "nil";
          } else if constexpr (std::is_same_v<T, End>) {
            return "end";
          } else if constexpr (std::is_same_v<T, Prefix>) {
            std::string s =
                unparse_action(n.action, namer_) + " . " + print(*n.rest, kPrefix);
            return level > kPrefix ? paren(s) : s;
          } else if constexpr (std::is_same_v<T, Seq>) {
            std::string s = print(*n.left, kSeq) + " ; " + print(*n.right, kPrefix);
            return level > kSeq ? paren(s) : s;
          } else if constexpr (std::is_same_v<T, Par>) {
            std::string s = print(*n.left, kPar) + " || " + print(*n.right, kSeq);
            return level > kPar ? paren(s) : s;
          } else if constexpr (std::is_same_v<T, Restrict>) {
            std::string body = bracketed_or_paren(*n.body);
            std::string s = body + " \\ {";
            bool first = true;
            for (const auto& g : n.gates) {
              if (!first) s += ", ";
              first = false;
              s += g;
            }
            return s + "}";
          } else if constexpr (std::is_same_v<T, Cond>) {
            std::string s = "[ ";
            for (std::size_t i = 0; i < n.branches.size(); ++i) {
              if (i) s += ", ";
              s += unparse_condition(n.branches[i].first, namer_) + " -> " +
                   print(*n.branches[i].second, kPar);
            }
            return s + " ]";
          } else if constexpr (std::is_same_v<T, Decl>) {
            std::string s = "[ ";
            namer_.enter_binders(n.bindings);
            for (std::size_t i = 0; i < n.bindings.size(); ++i) {
              if (i) s += ", ";
              s += namer_.var(n.bindings[i].name);
              s += ":";
              s += var_type_name(n.bindings[i].type);
            }
            s += " . " + print(*n.body, kPar) + " ]";
            namer_.exit_binders(n.bindings);
            return s;
          } else if constexpr (std::is_same_v<T, Scope>) {
            return "[ " + print(*n.body, kPar) + " ]";
          } else if constexpr (std::is_same_v<T, Invoke>) {
            std::string s = n.name;
            if (!n.args.empty()) {
              std::vector<std::string> args = n.args;
              s += var_list_str(args, namer_);
            }
            return s;
          }
        },
        p.node);
  }

 private:
  static std::string paren(const std::string& s) { return "( " + s + " )"; }

  // Restriction applies to a parenthesized or bracketed term; blocks are
  // already bracketed.
  std::string bracketed_or_paren(const Process& body) {
    if (body.is<Cond>() || body.is<Decl>() || body.is<Scope>()) {
      return print(body, kPar);
    }
    return paren(print(body, kPar));
  }

  VarNamer& namer_;
};

}  // namespace

std::string unparse_action(const Action& a, VarNamer& namer) {
  return std::visit(
      [&](const auto& act) -> std::string {
        using T = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<T, SendValue>) {
          return act.gate + "!" + expr_str(act.value, namer);
        } else if constexpr (std::is_same_v<T, SendQubit>) {
          return act.gate + "!" + namer.var(act.var);
        } else if constexpr (std::is_same_v<T, SendMeasure>) {
          return act.gate + "!" + act.observable + var_list_str(act.vars, namer);
        } else if constexpr (std::is_same_v<T, Recv>) {
          return act.gate + "?" + namer.var(act.var);
        } else if constexpr (std::is_same_v<T, Unitary>) {
          return act.name + var_list_str(act.vars, namer);
        } else if constexpr (std::is_same_v<T, Measure>) {
          return act.observable + var_list_str(act.vars, namer);
        }
      },
      a);
}

std::string unparse_condition(const Condition& c, VarNamer& namer) {
  return std::visit(
      [&](const auto& cond) -> std::string {
        using T = std::decay_t<decltype(cond)>;
        if constexpr (std::is_same_v<T, CondTrue>) {
          return "true";
        } else if constexpr (std::is_same_v<T, CondFalse>) {
          return "false";
        } else if constexpr (std::is_same_v<T, CondEq>) {
          return namer.var(cond.var) + "=" + expr_str(cond.rhs, namer);
        } else if constexpr (std::is_same_v<T, CondNeq>) {
          return namer.var(cond.var) + "!=" + expr_str(cond.rhs, namer);
        }
      },
      c);
}

std::string unparse(const Process& p, VarNamer& namer) {
  Printer printer(namer);
  return printer.print(p, kPar);
}

std::string unparse(const Process& p) {
  VarNamer identity;
  return unparse(p, identity);
}

std::string unparse_program(const Program& prog) {
  std::ostringstream out;
  for (const auto& def : prog.definitions) {
    out << def.name << " := " << unparse(*def.body) << "\n";
  }
  out << "main := " << unparse(*prog.main) << "\n";
  return out.str();
}

}  // namespace qpalg

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

#include <random>
#include <set>
#include <string>
#include <vector>

#include "qpalg/ast.hpp"
#include "qpalg/semantics.hpp"

namespace qpalg::testing {

/// Generates random well-scoped process terms: every variable use sits under
/// a declaration of the right type, so parsing the unparse reproduces the
/// tree exactly.
struct TreeGen {
  std::mt19937_64 rng;
  std::vector<Binding> scope;
  std::size_t fresh = 0;

  explicit TreeGen(std::uint64_t seed) : rng(seed) {}

  std::size_t pick(std::size_t n) { return std::size_t(rng() % n); }

  std::vector<std::string> vars_of(VarType type) const {
    std::vector<std::string> out;
    for (const auto& b : scope) {
      if (b.type == type) out.push_back(b.name);
    }
    return out;
  }

  Action gen_action() {
    const auto qs = vars_of(VarType::Qubit);
    const auto ns = vars_of(VarType::Nat);
    for (int attempt = 0; attempt < 8; ++attempt) {
      switch (pick(7)) {
        case 0:
          return SendValue{"g" + std::to_string(pick(3)), Expr::lit(pick(5))};
        case 1:
          if (ns.empty()) break;
          return SendValue{"g" + std::to_string(pick(3)),
                           Expr::variable(ns[pick(ns.size())])};
        case 2:
          if (qs.empty()) break;
          return SendQubit{"g" + std::to_string(pick(3)), qs[pick(qs.size())]};
        case 3:
          if (qs.empty()) break;
          return SendMeasure{"g" + std::to_string(pick(3)), "MStd1",
                             {qs[pick(qs.size())]}};
        case 4:
          if (scope.empty()) break;
          return Recv{"g" + std::to_string(pick(3)),
                      scope[pick(scope.size())].name};
        case 5:
          if (qs.empty()) break;
          return Unitary{pick(2) == 0 ? "H" : "X", {qs[pick(qs.size())]}};
        case 6:
          if (qs.empty()) break;
          return Measure{"MPlusMinus", {qs[pick(qs.size())]}};
      }
    }
    return SendValue{"g0", Expr::lit(1)};
  }

  Condition gen_condition() {
    const auto ns = vars_of(VarType::Nat);
    if (ns.empty() || pick(3) == 0) {
      return pick(2) == 0 ? Condition(CondTrue{}) : Condition(CondFalse{});
    }
    const std::string var = ns[pick(ns.size())];
    const Expr rhs = pick(2) == 0 ? Expr::lit(pick(4))
                                  : Expr::variable(ns[pick(ns.size())]);
    return pick(2) == 0 ? Condition(CondEq{var, rhs})
                        : Condition(CondNeq{var, rhs});
  }

  ProcessPtr gen(std::size_t depth) {
    if (depth == 0) {
      return pick(2) == 0 ? make_nil() : make_end();
    }
    switch (pick(9)) {
      case 0:
        return make_nil();
      case 1:
        return make_end();
      case 2:
        return make_prefix(gen_action(), gen(depth - 1));
      case 3:
        return make_seq(gen(depth - 1), gen(depth - 1));
      case 4:
        return make_par(gen(depth - 1), gen(depth - 1));
      case 5: {
        std::set<std::string> gates;
        for (std::size_t i = 0, n = 1 + pick(2); i < n; ++i) {
          gates.insert("g" + std::to_string(pick(3)));
        }
        return make_restrict(gen(depth - 1), std::move(gates));
      }
      case 6: {
        std::vector<std::pair<Condition, ProcessPtr>> branches;
        for (std::size_t i = 0, n = 1 + pick(3); i < n; ++i) {
          branches.emplace_back(gen_condition(), gen(depth - 1));
        }
        return make_cond(std::move(branches));
      }
      case 7: {
        std::vector<Binding> bindings;
        const std::size_t n = 1 + pick(2);
        for (std::size_t i = 0; i < n; ++i) {
          bindings.push_back({"v" + std::to_string(fresh++),
                              pick(2) == 0 ? VarType::Nat : VarType::Qubit});
        }
        const std::size_t before = scope.size();
        scope.insert(scope.end(), bindings.begin(), bindings.end());
        ProcessPtr body = gen(depth - 1);
        scope.resize(before);
        return make_decl(std::move(bindings), body);
      }
      default: {
        std::vector<std::string> args;
        if (!scope.empty() && pick(2) == 0) {
          args.push_back(scope[pick(scope.size())].name);
        }
        return make_invoke("Proc" + std::to_string(pick(3)), std::move(args));
      }
    }
  }
};

/// Renames every variable (binders and occurrences) by a fixed suffix;
/// gates and process names stay. The result is alpha-equivalent.
inline ProcessPtr alpha_rename(const ProcessPtr& p, const std::string& suffix) {
  auto ren = [&suffix](const std::string& name) { return name + suffix; };
  auto ren_expr = [&](const Expr& e) {
    return e.is_literal ? e : Expr::variable(ren(e.var));
  };
  auto ren_vars = [&](const std::vector<std::string>& vs) {
    std::vector<std::string> out;
    for (const auto& v : vs) out.push_back(ren(v));
    return out;
  };
  return std::visit(
      [&](const auto& n) -> ProcessPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Nil>) {
          return make_nil();
        } else if constexpr (std::is_same_v<T, End>) {
          return make_end();
        } else if constexpr (std::is_same_v<T, Prefix>) {
          Action action = std::visit(
              [&](const auto& act) -> Action {
                using A = std::decay_t<decltype(act)>;
                if constexpr (std::is_same_v<A, SendValue>) {
                  return SendValue{act.gate, ren_expr(act.value)};
                } else if constexpr (std::is_same_v<A, SendQubit>) {
                  return SendQubit{act.gate, ren(act.var)};
                } else if constexpr (std::is_same_v<A, SendMeasure>) {
                  return SendMeasure{act.gate, act.observable,
                                     ren_vars(act.vars)};
                } else if constexpr (std::is_same_v<A, Recv>) {
                  return Recv{act.gate, ren(act.var)};
                } else if constexpr (std::is_same_v<A, Unitary>) {
                  return Unitary{act.name, ren_vars(act.vars)};
                } else {
                  return Measure{act.observable, ren_vars(act.vars)};
                }
              },
              n.action);
          return make_prefix(std::move(action), alpha_rename(n.rest, suffix));
        } else if constexpr (std::is_same_v<T, Seq>) {
          return make_seq(alpha_rename(n.left, suffix),
                          alpha_rename(n.right, suffix));
        } else if constexpr (std::is_same_v<T, Par>) {
          return make_par(alpha_rename(n.left, suffix),
                          alpha_rename(n.right, suffix));
        } else if constexpr (std::is_same_v<T, Restrict>) {
          return make_restrict(alpha_rename(n.body, suffix), n.gates);
        } else if constexpr (std::is_same_v<T, Cond>) {
          std::vector<std::pair<Condition, ProcessPtr>> branches;
          for (const auto& [c, q] : n.branches) {
            Condition cond = c;
            if (auto* eq = std::get_if<CondEq>(&cond)) {
              cond = CondEq{ren(eq->var), ren_expr(eq->rhs)};
            } else if (auto* ne = std::get_if<CondNeq>(&cond)) {
              cond = CondNeq{ren(ne->var), ren_expr(ne->rhs)};
            }
            branches.emplace_back(cond, alpha_rename(q, suffix));
          }
          return make_cond(std::move(branches));
        } else if constexpr (std::is_same_v<T, Decl>) {
          std::vector<Binding> bindings;
          for (const auto& b : n.bindings) {
            bindings.push_back({ren(b.name), b.type});
          }
          return make_decl(std::move(bindings), alpha_rename(n.body, suffix));
        } else if constexpr (std::is_same_v<T, Scope>) {
          return make_scope(alpha_rename(n.body, suffix));
        } else {
          return make_invoke(n.name, ren_vars(n.args));
        }
      },
      p->node);
}

inline Program alpha_rename(const Program& prog, const std::string& suffix) {
  Program out;
  for (const auto& def : prog.definitions) {
    out.definitions.push_back({def.name, alpha_rename(def.body, suffix)});
  }
  out.main = alpha_rename(prog.main, suffix);
  return out;
}

}  // namespace qpalg::testing

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

#include "qpalg/semantics.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>

namespace qpalg {

bool label_is_silent(const TransitionLabel& l) {
  return std::holds_alternative<TLTau>(l) || std::holds_alternative<TLProb>(l);
}

std::string label_to_string(const TransitionLabel& l) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TLTau>) {
          return "tau";
        } else if constexpr (std::is_same_v<T, TLDelta>) {
          return "delta";
        } else if constexpr (std::is_same_v<T, TLProb>) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "p=%.4f", v.p);
          return buf;
        } else if constexpr (std::is_same_v<T, TLSendValue>) {
          return v.gate + "!" + std::to_string(v.value);
        } else if constexpr (std::is_same_v<T, TLSendQubit>) {
          return v.gate + "!" + v.qubit;
        } else if constexpr (std::is_same_v<T, TLRecvValue>) {
          return v.gate + "?" + std::to_string(v.value);
        } else if constexpr (std::is_same_v<T, TLRecvQubit>) {
          return v.gate + "?" + v.qubit;
        }
      },
      l);
}

// ---------------------------------------------------------------------------
// Substitution and invocation.

namespace {

std::string map_name(const std::map<std::string, std::string>& sigma,
                     const std::string& name) {
  auto it = sigma.find(name);
  return it == sigma.end() ? name : it->second;
}

Expr map_expr(const std::map<std::string, std::string>& sigma, const Expr& e) {
  if (e.is_literal) return e;
  return Expr::variable(map_name(sigma, e.var));
}

Action map_action(const std::map<std::string, std::string>& sigma,
                  const Action& a) {
  return std::visit(
      [&](const auto& act) -> Action {
        using T = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<T, SendValue>) {
          return SendValue{act.gate, map_expr(sigma, act.value)};
        } else if constexpr (std::is_same_v<T, SendQubit>) {
          return SendQubit{act.gate, map_name(sigma, act.var)};
        } else if constexpr (std::is_same_v<T, SendMeasure>) {
          std::vector<std::string> vars;
          for (const auto& v : act.vars) vars.push_back(map_name(sigma, v));
          return SendMeasure{act.gate, act.observable, std::move(vars)};
        } else if constexpr (std::is_same_v<T, Recv>) {
          return Recv{act.gate, map_name(sigma, act.var)};
        } else if constexpr (std::is_same_v<T, Unitary>) {
          std::vector<std::string> vars;
          for (const auto& v : act.vars) vars.push_back(map_name(sigma, v));
          return Unitary{act.name, std::move(vars)};
        } else if constexpr (std::is_same_v<T, Measure>) {
          std::vector<std::string> vars;
          for (const auto& v : act.vars) vars.push_back(map_name(sigma, v));
          return Measure{act.observable, std::move(vars)};
        }
      },
      a);
}

Condition map_condition(const std::map<std::string, std::string>& sigma,
                        const Condition& c) {
  if (const auto* eq = std::get_if<CondEq>(&c)) {
    return CondEq{map_name(sigma, eq->var), map_expr(sigma, eq->rhs)};
  }
  if (const auto* ne = std::get_if<CondNeq>(&c)) {
    return CondNeq{map_name(sigma, ne->var), map_expr(sigma, ne->rhs)};
  }
  return c;
}

std::string fresh_name(const std::string& base,
                       const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (std::size_t i = 0;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!avoid.count(candidate)) return candidate;
  }
}

ProcessPtr subst_walk(const ProcessPtr& p,
                      std::map<std::string, std::string> sigma) {
  if (sigma.empty()) return p;
  return std::visit(
      [&](const auto& n) -> ProcessPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Nil>) {
          return make_nil();
        } else if constexpr (std::is_same_v<T, End>) {
          return make_end();
        } else if constexpr (std::is_same_v<T, Prefix>) {
          return make_prefix(map_action(sigma, n.action),
                             subst_walk(n.rest, sigma));
        } else if constexpr (std::is_same_v<T, Seq>) {
          return make_seq(subst_walk(n.left, sigma),
                          subst_walk(n.right, sigma));
        } else if constexpr (std::is_same_v<T, Par>) {
          return make_par(subst_walk(n.left, sigma),
                          subst_walk(n.right, sigma));
        } else if constexpr (std::is_same_v<T, Restrict>) {
          return make_restrict(subst_walk(n.body, sigma), n.gates);
        } else if constexpr (std::is_same_v<T, Cond>) {
          std::vector<std::pair<Condition, ProcessPtr>> branches;
          for (const auto& [c, q] : n.branches) {
            branches.emplace_back(map_condition(sigma, c),
                                  subst_walk(q, sigma));
          }
          return make_cond(std::move(branches));
        } else if constexpr (std::is_same_v<T, Decl>) {
          auto inner = sigma;
          for (const auto& b : n.bindings) inner.erase(b.name);
          // Rename binders that would capture an incoming name.
          std::set<std::string> incoming;
          for (const auto& [from, to] : inner) incoming.insert(to);
          std::map<std::string, std::string> renames;
          if (!incoming.empty()) {
            std::set<std::string> avoid = incoming;
            for (const auto& [from, to] : inner) avoid.insert(from);
            collect_names(*n.body, avoid);
            for (const auto& b : n.bindings) avoid.insert(b.name);
            for (const auto& b : n.bindings) {
              if (incoming.count(b.name)) {
                const std::string next = fresh_name(b.name, avoid);
                avoid.insert(next);
                renames[b.name] = next;
              }
            }
          }
          std::vector<Binding> bindings = n.bindings;
          ProcessPtr body = n.body;
          if (!renames.empty()) {
            for (auto& b : bindings) b.name = map_name(renames, b.name);
            body = subst_walk(body, renames);
          }
          if (inner.empty()) return make_decl(std::move(bindings), body);
          return make_decl(std::move(bindings), subst_walk(body, inner));
        } else if constexpr (std::is_same_v<T, Scope>) {
          return make_scope(subst_walk(n.body, sigma));
        } else if constexpr (std::is_same_v<T, Invoke>) {
          std::vector<std::string> args;
          for (const auto& a : n.args) args.push_back(map_name(sigma, a));
          return make_invoke(n.name, std::move(args));
        }
      },
      p->node);
}

ProcessPtr strip_leading_formals(const ProcessPtr& p, std::size_t k) {
  if (k == 0) return p;
  const auto* d = p->get_if<Decl>();
  assert(d != nullptr);
  if (d->bindings.size() <= k) {
    return strip_leading_formals(d->body, k - d->bindings.size());
  }
  std::vector<Binding> rest(d->bindings.begin() + k, d->bindings.end());
  return make_decl(std::move(rest), d->body);
}

}  // namespace

ProcessPtr substitute(const ProcessPtr& p,
                      const std::map<std::string, std::string>& sigma) {
  return subst_walk(p, sigma);
}

ProcessPtr instantiate(const Program& program, const std::string& def_name,
                       const std::vector<std::string>& args,
                       const std::map<std::string, VarType>* caller_types) {
  const Definition* def = program.find(def_name);
  if (def == nullptr) {
    throw Error(ErrorKind::UnknownGateOrOperator,
                "unknown process " + def_name);
  }
  const auto formals = formals_of(*def->body);
  if (args.size() > formals.size()) {
    throw Error(ErrorKind::ArityMismatch,
                def_name + " declares " + std::to_string(formals.size()) +
                    " parameter(s), got " + std::to_string(args.size()));
  }
  std::set<std::string> seen;
  for (const auto& a : args) {
    if (!seen.insert(a).second) {
      throw Error(ErrorKind::ArityMismatch, "duplicate argument " + a);
    }
  }
  if (caller_types != nullptr) {
    for (std::size_t i = 0; i < args.size(); ++i) {
      auto it = caller_types->find(args[i]);
      if (it == caller_types->end()) {
        throw Error(ErrorKind::IllScoped,
                    "argument " + args[i] + " is not declared");
      }
      if (it->second != formals[i].type) {
        throw Error(ErrorKind::TypeMismatch,
                    "argument " + args[i] + " has type " +
                        var_type_name(it->second) + ", parameter " +
                        formals[i].name + " wants " +
                        var_type_name(formals[i].type));
      }
    }
  }
  std::map<std::string, std::string> sigma;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (formals[i].name != args[i]) sigma[formals[i].name] = args[i];
  }
  return substitute(strip_leading_formals(def->body, args.size()), sigma);
}

// ---------------------------------------------------------------------------
// Conditions.

namespace {

std::uint64_t expr_value(const Expr& e,
                         const std::map<std::string, std::uint64_t>& f) {
  if (e.is_literal) return e.literal;
  auto it = f.find(e.var);
  if (it == f.end()) {
    throw Error(ErrorKind::UndefinedVariable, e.var + " has no value");
  }
  return it->second;
}

}  // namespace

bool eval_condition(const Condition& c,
                    const std::map<std::string, std::uint64_t>& classical) {
  return std::visit(
      [&](const auto& cond) -> bool {
        using T = std::decay_t<decltype(cond)>;
        if constexpr (std::is_same_v<T, CondTrue>) {
          return true;
        } else if constexpr (std::is_same_v<T, CondFalse>) {
          return false;
        } else if constexpr (std::is_same_v<T, CondEq>) {
          return expr_value(Expr::variable(cond.var), classical) ==
                 expr_value(cond.rhs, classical);
        } else if constexpr (std::is_same_v<T, CondNeq>) {
          return expr_value(Expr::variable(cond.var), classical) !=
                 expr_value(cond.rhs, classical);
        }
      },
      c);
}

// ---------------------------------------------------------------------------
// State normalization: each active parallel composition owns a split node at
// the top of its stack segment; sub-processes grow their own sub-stacks.

namespace {

void ensure_splits(const Process& term, EnvStack& segment) {
  if (const auto* par = term.get_if<Par>()) {
    if (segment.empty() || !segment.back().is_split) {
      EnvNode split;
      split.is_split = true;
      segment.push_back(std::move(split));
    }
    ensure_splits(*par->left, segment.back().left);
    ensure_splits(*par->right, segment.back().right);
  } else if (const auto* seq = term.get_if<Seq>()) {
    ensure_splits(*seq->left, segment);
  } else if (const auto* scope = term.get_if<Scope>()) {
    ensure_splits(*scope->body, segment);
  } else if (const auto* restr = term.get_if<Restrict>()) {
    ensure_splits(*restr->body, segment);
  }
}

}  // namespace

ProcessState make_state(ProcessPtr term, Context ctx) {
  for (auto& [p, branch] : ctx.branches()) {
    ensure_splits(*term, branch.stack);
  }
  return ProcessState{std::move(term), std::move(ctx)};
}

// ---------------------------------------------------------------------------
// The step relation. `step` enumerates offers of a term under a stable
// context. Communication offers carry only the continuation; their context
// effect is applied where they resolve (at a parallel composition, or at the
// top level for open actions).

namespace {

struct Offer {
  enum class Kind { Tau, Delta, SendV, SendQ, RecvV, RecvQ };
  Kind kind;
  std::string gate;
  std::uint64_t value = 0;  // SendV payload
  std::string var;          // SendQ: sent qubit; Recv*: receiving variable
  ProcessPtr cont;
  Context ctx;  // complete context for Tau/Delta offers
  std::optional<std::string> unfolded;

  static Offer tau(ProcessPtr cont, Context ctx) {
    return {Kind::Tau, {}, 0, {}, std::move(cont), std::move(ctx), {}};
  }
  static Offer delta(ProcessPtr cont, Context ctx) {
    return {Kind::Delta, {}, 0, {}, std::move(cont), std::move(ctx), {}};
  }
};

class Stepper {
 public:
  Stepper(const EnvPolicy& policy, const Program& program)
      : policy_(policy), program_(program) {}

  std::vector<Offer> step(const ProcessPtr& term, const StableContext& c) {
    return std::visit(
        [&](const auto& n) -> std::vector<Offer> {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Nil>) {
            return {};
          } else if constexpr (std::is_same_v<T, End>) {
            return {Offer::delta(make_nil(), Context::single(c))};
          } else if constexpr (std::is_same_v<T, Prefix>) {
            return step_prefix(n, c);
          } else if constexpr (std::is_same_v<T, Seq>) {
            return step_seq(n, c);
          } else if constexpr (std::is_same_v<T, Par>) {
            return step_par(n, c);
          } else if constexpr (std::is_same_v<T, Restrict>) {
            return step_restrict(n, c);
          } else if constexpr (std::is_same_v<T, Cond>) {
            return step_cond(n, c);
          } else if constexpr (std::is_same_v<T, Decl>) {
            return step_decl(n, c);
          } else if constexpr (std::is_same_v<T, Scope>) {
            return step_scope(n, c);
          } else if constexpr (std::is_same_v<T, Invoke>) {
            return step_invoke(n, c);
          }
        },
        term->node);
  }

 private:
  bool attached(const StableContext& c, const std::string& x) const {
    return std::find(c.qubits.begin(), c.qubits.end(), x) != c.qubits.end();
  }

  VarType require_declared(const StableContext& c, const std::string& x) const {
    auto t = stack_lookup(c.stack, x);
    if (!t) {
      throw Error(ErrorKind::IllScoped, "variable " + x + " is not declared");
    }
    return *t;
  }

  void require_qubit_targets(const StableContext& c,
                             const std::vector<std::string>& vars,
                             std::size_t arity, const std::string& op) const {
    if (vars.size() != arity) {
      throw Error(ErrorKind::UnitaryArityMismatch,
                  op + " expects " + std::to_string(arity) + " target(s)");
    }
    std::set<std::string> seen;
    for (const auto& v : vars) {
      if (!seen.insert(v).second) {
        throw Error(ErrorKind::UnitaryArityMismatch,
                    "duplicate target " + v + " for " + op);
      }
      if (require_declared(c, v) != VarType::Qubit) {
        throw Error(ErrorKind::WrongType, v + " is not of type Qubit");
      }
      if (!attached(c, v)) {
        throw Error(ErrorKind::QubitNotInRegister, v);
      }
    }
  }

  std::vector<Offer> step_prefix(const Prefix& n, const StableContext& c) {
    return std::visit(
        [&](const auto& act) -> std::vector<Offer> {
          using T = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<T, SendValue>) {
            if (act.value.is_literal) {
              return {
                  {Offer::Kind::SendV, act.gate, act.value.literal, {}, n.rest,
                   {}, {}}};
            }
            const VarType t = require_declared(c, act.value.var);
            if (t == VarType::Qubit) {
              // Hand-built terms may carry unresolved sends; behave as a
              // qubit send.
              if (!attached(c, act.value.var)) return {};
              return {{Offer::Kind::SendQ, act.gate, 0, act.value.var, n.rest,
                       {}, {}}};
            }
            auto it = c.classical.find(act.value.var);
            if (it == c.classical.end()) return {};  // no value yet
            return {{Offer::Kind::SendV, act.gate, it->second, {}, n.rest,
                     {}, {}}};
          } else if constexpr (std::is_same_v<T, SendQubit>) {
            if (require_declared(c, act.var) != VarType::Qubit) {
              throw Error(ErrorKind::WrongType, act.var + " is not a qubit");
            }
            if (!attached(c, act.var)) return {};
            return {{Offer::Kind::SendQ, act.gate, 0, act.var, n.rest, {}, {}}};
          } else if constexpr (std::is_same_v<T, SendMeasure>) {
            return {measure_and_send(act, n.rest, c)};
          } else if constexpr (std::is_same_v<T, Recv>) {
            const VarType t = require_declared(c, act.var);
            if (t == VarType::Nat) {
              return {{Offer::Kind::RecvV, act.gate, 0, act.var, n.rest,
                       {}, {}}};
            }
            if (attached(c, act.var)) return {};  // already holds a qubit
            return {{Offer::Kind::RecvQ, act.gate, 0, act.var, n.rest, {}, {}}};
          } else if constexpr (std::is_same_v<T, Unitary>) {
            const auto& entry = get_unitary(act.name);
            require_qubit_targets(c, act.vars, entry.arity, act.name);
            StableContext next = c;
            next.rho = apply_superop(entry.matrix, c.rho, c.qubits, act.vars);
            return {Offer::tau(n.rest, Context::single(std::move(next)))};
          } else if constexpr (std::is_same_v<T, Measure>) {
            const auto& entry = get_observable(act.observable);
            require_qubit_targets(c, act.vars, entry.arity, act.observable);
            StableContext next = c;
            next.rho = collapse_mixture(c.rho, c.qubits, entry, act.vars);
            return {Offer::tau(n.rest, Context::single(std::move(next)))};
          }
        },
        n.action);
  }

  Offer measure_and_send(const SendMeasure& act, const ProcessPtr& rest,
                         const StableContext& c) {
    const auto& entry = get_observable(act.observable);
    require_qubit_targets(c, act.vars, entry.arity, act.observable);
    const auto branches =
        measurement_branches(c.rho, c.qubits, entry, act.vars);
    std::set<std::string> avoid;
    for (const auto& b : stack_bindings(c.stack)) avoid.insert(b.name);
    collect_names(*rest, avoid);
    // Salt the result variable with the measured qubit: register names are
    // globally unique, so concurrent measurements in sibling branches can
    // never collide in the name-keyed store.
    const std::string y = fresh_name("y_" + act.vars.front(), avoid);
    std::vector<std::pair<double, StableContext>> ctx_branches;
    for (const auto& branch : branches) {
      StableContext ci = declare(c, {{y, VarType::Nat}}, false);
      ci.rho = branch.state;
      ci.classical[y] = branch.eigenvalue;
      ctx_branches.emplace_back(branch.probability, std::move(ci));
    }
    const ProcessPtr send_block = make_scope(
        make_prefix(SendValue{act.gate, Expr::variable(y)}, make_end()));
    return Offer::tau(make_seq(send_block, rest), mix(std::move(ctx_branches)));
  }

  std::vector<Offer> step_seq(const Seq& n, const StableContext& c) {
    std::vector<Offer> out;
    for (auto& o : step(n.left, c)) {
      if (o.kind == Offer::Kind::Delta) {
        out.push_back(Offer::tau(n.right, std::move(o.ctx)));
        out.back().unfolded = o.unfolded;
      } else {
        o.cont = make_seq(o.cont, n.right);
        out.push_back(std::move(o));
      }
    }
    return out;
  }

  std::vector<Offer> step_scope(const Scope& n, const StableContext& c) {
    std::vector<Offer> out;
    for (auto& o : step(n.body, c)) {
      if (o.kind == Offer::Kind::Delta) {
        out.push_back(Offer::delta(
            make_nil(), Context::single(exit_scope(o.ctx.stable_ref()))));
      } else {
        o.cont = make_scope(o.cont);
        out.push_back(std::move(o));
      }
    }
    return out;
  }

  std::vector<Offer> step_restrict(const Restrict& n, const StableContext& c) {
    std::vector<Offer> out;
    for (auto& o : step(n.body, c)) {
      switch (o.kind) {
        case Offer::Kind::Delta:
          out.push_back(Offer::delta(make_nil(), std::move(o.ctx)));
          break;
        case Offer::Kind::Tau:
          o.cont = make_restrict(o.cont, n.gates);
          out.push_back(std::move(o));
          break;
        default:
          if (!n.gates.count(o.gate)) {
            o.cont = make_restrict(o.cont, n.gates);
            out.push_back(std::move(o));
          }
          break;
      }
    }
    return out;
  }

  std::vector<Offer> step_cond(const Cond& n, const StableContext& c) {
    std::vector<Offer> out;
    for (const auto& [cond, body] : n.branches) {
      if (eval_condition(cond, c.classical)) {
        out.push_back(Offer::tau(body, Context::single(c)));
      }
    }
    return out;
  }

  std::vector<Offer> step_decl(const Decl& n, const StableContext& c) {
    StableContext next = declare(c, n.bindings, policy_.strict_shadowing);
    return {Offer::tau(make_scope(n.body), Context::single(std::move(next)))};
  }

  std::vector<Offer> step_invoke(const Invoke& n, const StableContext& c) {
    std::map<std::string, VarType> types;
    for (const auto& a : n.args) {
      types[a] = require_declared(c, a);
    }
    ProcessPtr body = instantiate(program_, n.name, n.args, &types);
    Offer o = Offer::tau(std::move(body), Context::single(c));
    o.unfolded = n.name;
    return {o};
  }

  std::vector<Offer> step_par(const Par& n, const StableContext& c) {
    if (c.stack.empty() || !c.stack.back().is_split) {
      throw Error(ErrorKind::EmptyStack,
                  "parallel composition without a split node");
    }
    const EnvNode split = c.stack.back();
    EnvStack below(c.stack.begin(), c.stack.end() - 1);
    const std::size_t base = below.size();

    auto side_view = [&](const EnvStack& own) {
      StableContext view;
      view.stack = below;
      view.stack.insert(view.stack.end(), own.begin(), own.end());
      view.qubits = c.qubits;
      view.rho = c.rho;
      view.classical = c.classical;
      return view;
    };

    auto regraft = [&](const StableContext& sub, bool left_side) {
      StableContext out;
      out.stack.assign(sub.stack.begin(), sub.stack.begin() + base);
      EnvNode node;
      node.is_split = true;
      EnvStack own(sub.stack.begin() + base, sub.stack.end());
      if (left_side) {
        node.left = std::move(own);
        node.right = split.right;
      } else {
        node.left = split.left;
        node.right = std::move(own);
      }
      out.stack.push_back(std::move(node));
      out.qubits = sub.qubits;
      out.rho = sub.rho;
      out.classical = sub.classical;
      return out;
    };

    auto regraft_ctx = [&](const Context& sub, bool left_side) {
      std::vector<std::pair<double, StableContext>> branches;
      for (const auto& [p, branch] : sub.branches()) {
        branches.emplace_back(p, regraft(branch, left_side));
      }
      return mix(std::move(branches));
    };

    const auto left_offers = step(n.left, side_view(split.left));
    const auto right_offers = step(n.right, side_view(split.right));

    std::vector<Offer> out;
    const Offer* left_delta = nullptr;
    const Offer* right_delta = nullptr;

    auto interleave = [&](const Offer& o, bool left_side) {
      Offer next = o;
      next.cont = left_side ? make_par(o.cont, n.right)
                            : make_par(n.left, o.cont);
      if (o.kind == Offer::Kind::Tau) {
        next.ctx = regraft_ctx(o.ctx, left_side);
      }
      out.push_back(std::move(next));
    };

    for (const auto& o : left_offers) {
      if (o.kind == Offer::Kind::Delta) {
        left_delta = &o;
      } else {
        interleave(o, true);
      }
    }
    for (const auto& o : right_offers) {
      if (o.kind == Offer::Kind::Delta) {
        right_delta = &o;
      } else {
        interleave(o, false);
      }
    }

    auto communicate = [&](const std::vector<Offer>& senders,
                           const std::vector<Offer>& receivers,
                           bool sender_left) {
      for (const auto& s : senders) {
        if (s.kind != Offer::Kind::SendV && s.kind != Offer::Kind::SendQ) {
          continue;
        }
        for (const auto& r : receivers) {
          if (r.kind != Offer::Kind::RecvV && r.kind != Offer::Kind::RecvQ) {
            continue;
          }
          if (s.gate != r.gate) continue;
          std::optional<StableContext> next;
          if (s.kind == Offer::Kind::SendV && r.kind == Offer::Kind::RecvV) {
            next = set_classical(c, r.var, s.value);
          } else if (s.kind == Offer::Kind::SendV &&
                     r.kind == Offer::Kind::RecvQ) {
            if (s.value > 1) {
              throw Error(ErrorKind::InvalidQubitInit,
                          "cannot initialize qubit " + r.var + " with value " +
                              std::to_string(s.value));
            }
            next = attach_qubit(c, r.var, basis_state(s.value),
                                policy_.max_qubits);
          } else if (s.kind == Offer::Kind::SendQ &&
                     r.kind == Offer::Kind::RecvQ) {
            next = rename_qubit(c, s.var, r.var);
          } else {
            continue;  // qubit send to a classical receiver: no rule
          }
          const ProcessPtr term = sender_left ? make_par(s.cont, r.cont)
                                              : make_par(r.cont, s.cont);
          out.push_back(Offer::tau(term, Context::single(std::move(*next))));
        }
      }
    };

    communicate(left_offers, right_offers, true);
    communicate(right_offers, left_offers, false);

    if (left_delta != nullptr && right_delta != nullptr) {
      StableContext next;
      next.stack = below;
      std::set<std::string> dropped;
      std::set<std::string> dropped_qubits;
      for (const auto& b : stack_bindings(split.left)) dropped.insert(b.name);
      for (const auto& b : stack_bindings(split.right)) dropped.insert(b.name);
      for (const auto& q : c.qubits) {
        if (dropped.count(q)) dropped_qubits.insert(q);
      }
      next.rho = dropped_qubits.empty()
                     ? c.rho
                     : partial_trace(c.rho, c.qubits, dropped_qubits);
      for (const auto& q : c.qubits) {
        if (!dropped_qubits.count(q)) next.qubits.push_back(q);
      }
      next.classical = c.classical;
      for (const auto& name : dropped) next.classical.erase(name);
      out.push_back(Offer::delta(make_nil(), Context::single(std::move(next))));
    }
    return out;
  }

  const EnvPolicy& policy_;
  const Program& program_;
};

}  // namespace

ProcessState measure_and_send_expand(const ProcessState& s,
                                     const EnvPolicy& policy,
                                     const Program& program) {
  const auto* prefix = s.term->get_if<Prefix>();
  if (prefix == nullptr ||
      !std::holds_alternative<SendMeasure>(prefix->action) ||
      !s.ctx.stable()) {
    throw Error(ErrorKind::IllScoped,
                "state does not start with a measure-and-send prefix");
  }
  const auto ts = transitions(s, policy, program);
  return ts.front().target;
}

std::vector<Transition> transitions(const ProcessState& s,
                                    const EnvPolicy& policy,
                                    const Program& program) {
  std::vector<Transition> out;
  if (!s.ctx.stable()) {
    // Probabilistic choice resolves before anything else.
    for (const auto& [p, branch] : s.ctx.branches()) {
      out.push_back(
          {TLProb{p}, make_state(s.term, Context::single(branch)), {}});
    }
    return out;
  }
  const StableContext& c = s.ctx.stable_ref();
  Stepper stepper(policy, program);
  for (auto& o : stepper.step(s.term, c)) {
    switch (o.kind) {
      case Offer::Kind::Tau:
        out.push_back(
            {TLTau{}, make_state(o.cont, std::move(o.ctx)), o.unfolded});
        break;
      case Offer::Kind::Delta:
        out.push_back({TLDelta{}, make_state(o.cont, std::move(o.ctx)), {}});
        break;
      case Offer::Kind::SendV:
        if (policy.allow_open_actions) {
          out.push_back({TLSendValue{o.gate, o.value},
                         make_state(o.cont, Context::single(c)),
                         {}});
        }
        break;
      case Offer::Kind::SendQ:
        if (policy.allow_open_actions) {
          out.push_back(
              {TLSendQubit{o.gate, o.var},
               make_state(o.cont, Context::single(detach_qubit(c, o.var))),
               {}});
        }
        break;
      case Offer::Kind::RecvV:
        if (policy.allow_open_actions) {
          for (const auto v : policy.input_domain) {
            out.push_back(
                {TLRecvValue{o.gate, v},
                 make_state(o.cont, Context::single(set_classical(c, o.var, v))),
                 {}});
          }
        }
        break;
      case Offer::Kind::RecvQ:
        if (policy.allow_open_actions) {
          out.push_back({TLRecvQubit{o.gate, o.var},
                         make_state(o.cont,
                                    Context::single(attach_qubit(
                                        c, o.var, policy.fresh_qubit_state,
                                        policy.max_qubits))),
                         {}});
        }
        break;
    }
  }
  return out;
}

}  // namespace qpalg

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

#include "qpalg/context.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

namespace qpalg {

using nlohmann::json;

namespace {

void collect_bindings(const EnvStack& s, std::vector<Binding>& out) {
  for (const auto& node : s) {
    if (node.is_split) {
      collect_bindings(node.left, out);
      collect_bindings(node.right, out);
    } else {
      out.insert(out.end(), node.frame.begin(), node.frame.end());
    }
  }
}

}  // namespace

std::vector<Binding> stack_bindings(const EnvStack& s) {
  std::vector<Binding> out;
  collect_bindings(s, out);
  return out;
}

std::optional<VarType> stack_lookup(const EnvStack& s,
                                    const std::string& name) {
  // Names are unique across the visible stack (strict mode), so the first
  // match is the binding.
  for (auto it = s.rbegin(); it != s.rend(); ++it) {
    if (it->is_split) {
      if (auto t = stack_lookup(it->left, name)) return t;
      if (auto t = stack_lookup(it->right, name)) return t;
    } else {
      for (const auto& b : it->frame) {
        if (b.name == name) return b.type;
      }
    }
  }
  return std::nullopt;
}

bool stack_remove_binding(EnvStack& s, const std::string& name) {
  for (auto& node : s) {
    if (node.is_split) {
      if (stack_remove_binding(node.left, name)) return true;
      if (stack_remove_binding(node.right, name)) return true;
    } else {
      for (auto it = node.frame.begin(); it != node.frame.end(); ++it) {
        if (it->name == name) {
          node.frame.erase(it);
          return true;
        }
      }
    }
  }
  return false;
}

StableContext declare(const StableContext& c,
                      const std::vector<Binding>& bindings,
                      bool strict_shadowing) {
  StableContext out = c;
  std::set<std::string> seen;
  for (const auto& b : bindings) {
    if (!seen.insert(b.name).second) {
      throw Error(ErrorKind::DuplicateBinding,
                  "duplicate binding " + b.name + " in one declaration");
    }
    if (strict_shadowing && stack_lookup(c.stack, b.name)) {
      throw Error(ErrorKind::DuplicateBinding,
                  b.name + " is already declared");
    }
  }
  EnvNode node;
  node.frame = bindings;
  out.stack.push_back(std::move(node));
  return out;
}

StableContext exit_scope(const StableContext& c) {
  if (c.stack.empty()) {
    throw Error(ErrorKind::EmptyStack, "no scope to exit");
  }
  if (c.stack.back().is_split) {
    throw Error(ErrorKind::EmptyStack,
                "top of the stack is a parallel split, not a frame");
  }
  StableContext out = c;
  const std::vector<Binding> frame = out.stack.back().frame;
  out.stack.pop_back();
  std::set<std::string> dropped_qubits;
  for (const auto& b : frame) {
    if (b.type == VarType::Qubit &&
        std::find(c.qubits.begin(), c.qubits.end(), b.name) != c.qubits.end()) {
      dropped_qubits.insert(b.name);
    }
    out.classical.erase(b.name);
  }
  if (!dropped_qubits.empty()) {
    out.rho = partial_trace(c.rho, c.qubits, dropped_qubits);
    out.qubits.clear();
    for (const auto& q : c.qubits) {
      if (!dropped_qubits.count(q)) out.qubits.push_back(q);
    }
  }
  return out;
}

StableContext attach_qubit(const StableContext& c, const std::string& x,
                           const CMat& nu, std::size_t max_qubits) {
  auto type = stack_lookup(c.stack, x);
  if (!type) {
    throw Error(ErrorKind::NotDeclared, "qubit variable " + x);
  }
  if (*type != VarType::Qubit) {
    throw Error(ErrorKind::WrongType, x + " is not of type Qubit");
  }
  if (std::find(c.qubits.begin(), c.qubits.end(), x) != c.qubits.end()) {
    throw Error(ErrorKind::AlreadyAttached, x);
  }
  if (c.qubits.size() >= max_qubits) {
    throw Error(ErrorKind::LimitExceeded,
                "register would exceed " + std::to_string(max_qubits) +
                    " qubits");
  }
  StableContext out = c;
  out.qubits.insert(out.qubits.begin(), x);
  out.rho = kron(nu, c.rho);
  return out;
}

StableContext detach_qubit(const StableContext& c, const std::string& x) {
  if (std::find(c.qubits.begin(), c.qubits.end(), x) == c.qubits.end()) {
    throw Error(ErrorKind::UnknownQubit, x);
  }
  StableContext out = c;
  out.rho = partial_trace(c.rho, c.qubits, {x});
  out.qubits.clear();
  for (const auto& q : c.qubits) {
    if (q != x) out.qubits.push_back(q);
  }
  stack_remove_binding(out.stack, x);
  return out;
}

StableContext rename_qubit(const StableContext& c, const std::string& x,
                           const std::string& y) {
  auto pos = std::find(c.qubits.begin(), c.qubits.end(), x);
  if (pos == c.qubits.end()) {
    throw Error(ErrorKind::UnknownQubit, x);
  }
  auto ytype = stack_lookup(c.stack, y);
  if (!ytype) {
    throw Error(ErrorKind::NotDeclared, "qubit variable " + y);
  }
  if (*ytype != VarType::Qubit) {
    throw Error(ErrorKind::WrongType, y + " is not of type Qubit");
  }
  if (std::find(c.qubits.begin(), c.qubits.end(), y) != c.qubits.end()) {
    throw Error(ErrorKind::AlreadyAttached, y);
  }
  StableContext out = c;
  out.qubits[pos - c.qubits.begin()] = y;
  stack_remove_binding(out.stack, x);
  return out;
}

StableContext set_classical(const StableContext& c, const std::string& x,
                            std::uint64_t v) {
  auto type = stack_lookup(c.stack, x);
  if (!type) {
    throw Error(ErrorKind::NotDeclared, "classical variable " + x);
  }
  if (*type != VarType::Nat) {
    throw Error(ErrorKind::WrongType, x + " is not of type Nat");
  }
  StableContext out = c;
  out.classical[x] = v;
  return out;
}

std::optional<std::uint64_t> get_classical(const StableContext& c,
                                           const std::string& x) {
  auto type = stack_lookup(c.stack, x);
  if (!type) {
    throw Error(ErrorKind::NotDeclared, "classical variable " + x);
  }
  if (*type != VarType::Nat) {
    throw Error(ErrorKind::WrongType, x + " is not of type Nat");
  }
  auto it = c.classical.find(x);
  if (it == c.classical.end()) return std::nullopt;
  return it->second;
}

Context mix(std::vector<std::pair<double, StableContext>> branches) {
  if (branches.empty()) {
    throw Error(ErrorKind::BadDistribution, "empty mixture");
  }
  double total = 0.0;
  for (const auto& [p, ctx] : branches) {
    if (p <= 0.0) {
      throw Error(ErrorKind::BadDistribution, "non-positive branch weight");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kEpsProb) {
    throw Error(ErrorKind::BadDistribution,
                "branch weights sum to " + std::to_string(total));
  }
  if (branches.size() == 1) {
    return Context::single(std::move(branches.front().second));
  }
  Context out;
  out.branches() = std::move(branches);
  return out;
}

bool is_stable(const Context& c) { return c.stable(); }

namespace {

// Frame-by-frame bijection search for contexts_equivalent. Stack shapes must
// match positionally; within a frame any type- and value-respecting pairing
// is allowed.
struct EquivSearch {
  const StableContext& a;
  const StableContext& b;
  double tol;
  std::vector<std::pair<const std::vector<Binding>*, const std::vector<Binding>*>>
      frames;
  std::map<std::string, std::string> sigma;

  bool shapes_match(const EnvStack& sa, const EnvStack& sb) {
    if (sa.size() != sb.size()) return false;
    for (std::size_t i = 0; i < sa.size(); ++i) {
      if (sa[i].is_split != sb[i].is_split) return false;
      if (sa[i].is_split) {
        if (!shapes_match(sa[i].left, sb[i].left) ||
            !shapes_match(sa[i].right, sb[i].right)) {
          return false;
        }
      } else {
        if (sa[i].frame.size() != sb[i].frame.size()) return false;
        frames.emplace_back(&sa[i].frame, &sb[i].frame);
      }
    }
    return true;
  }

  bool attached(const StableContext& c, const std::string& name) const {
    return std::find(c.qubits.begin(), c.qubits.end(), name) != c.qubits.end();
  }

  bool compatible(const Binding& ba, const Binding& bb) const {
    if (ba.type != bb.type) return false;
    if (ba.type == VarType::Qubit) {
      if (attached(a, ba.name) != attached(b, bb.name)) return false;
    } else {
      auto va = a.classical.find(ba.name);
      auto vb = b.classical.find(bb.name);
      const bool ha = va != a.classical.end();
      const bool hb = vb != b.classical.end();
      if (ha != hb) return false;
      if (ha && va->second != vb->second) return false;
    }
    return true;
  }

  bool match_frame(std::size_t frame_idx, std::size_t slot,
                   std::vector<bool>& used) {
    if (frame_idx == frames.size()) return check_register();
    const auto& fa = *frames[frame_idx].first;
    const auto& fb = *frames[frame_idx].second;
    if (slot == fa.size()) {
      std::vector<bool> next_used;
      if (frame_idx + 1 < frames.size()) {
        next_used.assign(frames[frame_idx + 1].second->size(), false);
      }
      return match_frame(frame_idx + 1, 0, next_used);
    }
    for (std::size_t j = 0; j < fb.size(); ++j) {
      if (used[j] || !compatible(fa[slot], fb[j])) continue;
      used[j] = true;
      sigma[fa[slot].name] = fb[j].name;
      if (match_frame(frame_idx, slot + 1, used)) return true;
      sigma.erase(fa[slot].name);
      used[j] = false;
    }
    return false;
  }

  std::optional<ContextWitness> result;

  bool check_register() {
    // sigma maps all declared names; the register permutation is induced.
    std::vector<std::string> mapped;
    mapped.reserve(a.qubits.size());
    for (const auto& q : a.qubits) {
      auto it = sigma.find(q);
      if (it == sigma.end()) return false;
      mapped.push_back(it->second);
    }
    if (mapped.size() != b.qubits.size()) return false;
    std::vector<std::size_t> pi(mapped.size());
    for (std::size_t i = 0; i < mapped.size(); ++i) {
      auto it = std::find(b.qubits.begin(), b.qubits.end(), mapped[i]);
      if (it == b.qubits.end()) return false;
      pi[i] = std::size_t(it - b.qubits.begin());
    }
    if (!mapped.empty()) {
      const CMat perm = head_permutation(mapped, b.qubits);
      const CMat moved = perm * a.rho * perm.adjoint();
      if ((moved - b.rho).cwiseAbs().maxCoeff() > tol) return false;
    } else if ((a.rho - b.rho).cwiseAbs().maxCoeff() > tol) {
      return false;
    }
    result = ContextWitness{sigma, pi};
    return true;
  }
};

}  // namespace

std::optional<ContextWitness> contexts_equivalent(const StableContext& a,
                                                  const StableContext& b,
                                                  double tol) {
  EquivSearch search{a, b, tol, {}, {}, {}};
  if (!search.shapes_match(a.stack, b.stack)) return std::nullopt;
  if (a.qubits.size() != b.qubits.size()) return std::nullopt;
  if (a.classical.size() != b.classical.size()) return std::nullopt;
  if (search.frames.empty()) {
    if ((a.rho - b.rho).cwiseAbs().maxCoeff() > tol) return std::nullopt;
    return ContextWitness{};
  }
  std::vector<bool> used(search.frames.front().second->size(), false);
  if (search.match_frame(0, 0, used)) return search.result;
  return std::nullopt;
}

CMat qubit_reduced_state(const StableContext& c, const std::string& x) {
  if (std::find(c.qubits.begin(), c.qubits.end(), x) == c.qubits.end()) {
    throw Error(ErrorKind::UnknownQubit, x);
  }
  std::set<std::string> others;
  for (const auto& q : c.qubits) {
    if (q != x) others.insert(q);
  }
  return partial_trace(c.rho, c.qubits, others);
}

std::vector<std::string> validate_context(const StableContext& c) {
  std::vector<std::string> out;
  // Names must be unique within a frame; parallel branches may reuse a name
  // (the classical store is keyed by name, as sibling scopes cannot see each
  // other).
  std::function<void(const EnvStack&)> check_frames = [&](const EnvStack& s) {
    for (const auto& node : s) {
      if (node.is_split) {
        check_frames(node.left);
        check_frames(node.right);
        continue;
      }
      std::set<std::string> in_frame;
      for (const auto& b : node.frame) {
        if (!in_frame.insert(b.name).second) {
          out.push_back("duplicate name " + b.name + " in one frame");
        }
      }
    }
  };
  check_frames(c.stack);
  std::set<std::string> register_names;
  for (const auto& q : c.qubits) {
    if (!register_names.insert(q).second) {
      out.push_back("qubit " + q + " occurs twice in the register");
    }
    auto t = stack_lookup(c.stack, q);
    if (!t) {
      out.push_back("register qubit " + q + " is not declared");
    } else if (*t != VarType::Qubit) {
      out.push_back("register name " + q + " is not of type Qubit");
    }
  }
  for (const auto& [name, value] : c.classical) {
    auto t = stack_lookup(c.stack, name);
    if (!t) {
      out.push_back("classical value for undeclared " + name);
    } else if (*t != VarType::Nat) {
      out.push_back("classical value for non-Nat " + name);
    }
  }
  const Eigen::Index want = Eigen::Index(1) << c.qubits.size();
  if (c.rho.rows() != want || c.rho.cols() != want) {
    out.push_back("rho dimension does not match the register size");
  } else {
    for (const auto& v : validate_density(c.rho)) {
      out.push_back("rho: " + v);
    }
  }
  return out;
}

namespace {

json stack_to_json(const EnvStack& s) {
  json arr = json::array();
  for (const auto& node : s) {
    if (node.is_split) {
      arr.push_back(json{{"split",
                          {{"left", stack_to_json(node.left)},
                           {"right", stack_to_json(node.right)}}}});
    } else {
      json bindings = json::array();
      for (const auto& b : node.frame) {
        bindings.push_back({{"name", b.name}, {"type", var_type_name(b.type)}});
      }
      arr.push_back(json{{"bindings", bindings}});
    }
  }
  return arr;
}

EnvStack stack_from_json(const json& arr) {
  EnvStack out;
  for (const auto& item : arr) {
    EnvNode node;
    if (item.contains("split")) {
      node.is_split = true;
      node.left = stack_from_json(item["split"]["left"]);
      node.right = stack_from_json(item["split"]["right"]);
    } else {
      for (const auto& b : item["bindings"]) {
        const std::string type = b["type"].get<std::string>();
        node.frame.push_back({b["name"].get<std::string>(),
                              type == "Nat" ? VarType::Nat : VarType::Qubit});
      }
    }
    out.push_back(std::move(node));
  }
  return out;
}

json matrix_to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back({m(i, j).real(), m(i, j).imag()});
    }
    rows.push_back(row);
  }
  return rows;
}

CMat matrix_from_json(const json& rows) {
  const Eigen::Index n = Eigen::Index(rows.size());
  CMat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& cell = rows[i][j];
      m(i, j) = Complex(cell[0].get<double>(), cell[1].get<double>());
    }
  }
  return m;
}

json stable_to_json(const StableContext& c) {
  json classical = json::object();
  for (const auto& [name, value] : c.classical) classical[name] = value;
  return json{{"frames", stack_to_json(c.stack)},
              {"qubits", c.qubits},
              {"rho", matrix_to_json(c.rho)},
              {"classical", classical}};
}

StableContext stable_from_json(const json& j) {
  StableContext c;
  c.stack = stack_from_json(j["frames"]);
  c.qubits = j["qubits"].get<std::vector<std::string>>();
  c.rho = matrix_from_json(j["rho"]);
  for (const auto& [name, value] : j["classical"].items()) {
    c.classical[name] = value.get<std::uint64_t>();
  }
  return c;
}

}  // namespace

std::string context_to_json(const Context& c) {
  if (c.stable()) {
    return stable_to_json(c.stable_ref()).dump();
  }
  json branches = json::array();
  for (const auto& [p, ctx] : c.branches()) {
    branches.push_back({{"p", p}, {"context", stable_to_json(ctx)}});
  }
  return json{{"mixture", branches}}.dump();
}

Context context_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.contains("mixture")) {
    std::vector<std::pair<double, StableContext>> branches;
    for (const auto& item : j["mixture"]) {
      branches.emplace_back(item["p"].get<double>(),
                            stable_from_json(item["context"]));
    }
    return mix(std::move(branches));
  }
  return Context::single(stable_from_json(j));
}

}  // namespace qpalg

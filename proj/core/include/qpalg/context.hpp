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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpalg/ast.hpp"
#include "qpalg/quantum.hpp"

namespace qpalg {

/// One node of the environment stack: a frame of bindings, or a parallel
/// split carrying the sub-stacks of the two branches of a parallel
/// composition (the cactus shape).
struct EnvNode {
  std::vector<Binding> frame;  // used when !is_split
  bool is_split = false;
  std::vector<EnvNode> left;   // sub-stack, bottom first
  std::vector<EnvNode> right;
};

/// Environment stack, bottom at index 0, top at the back.
using EnvStack = std::vector<EnvNode>;

/// All bindings in the stack, in deterministic traversal order
/// (bottom to top; splits: left sub-stack then right).
std::vector<Binding> stack_bindings(const EnvStack& s);
std::optional<VarType> stack_lookup(const EnvStack& s, const std::string& name);
/// Removes the binding of `name` wherever it sits; returns whether found.
bool stack_remove_binding(EnvStack& s, const std::string& name);

struct StableContext {
  EnvStack stack;
  std::vector<std::string> qubits;  // register order; head = front
  CMat rho = scalar_one();          // 2^|qubits| square; [1] when empty
  std::map<std::string, std::uint64_t> classical;
};

/// A context is either a single stable triple or a probability-weighted
/// mixture of at least two of them.
class Context {
 public:
  Context() : branches_{{1.0, StableContext{}}} {}
  static Context single(StableContext c) {
    Context out;
    out.branches_ = {{1.0, std::move(c)}};
    return out;
  }

  bool stable() const { return branches_.size() == 1; }
  const StableContext& stable_ref() const { return branches_.front().second; }
  const std::vector<std::pair<double, StableContext>>& branches() const {
    return branches_;
  }
  std::vector<std::pair<double, StableContext>>& branches() {
    return branches_;
  }

 private:
  std::vector<std::pair<double, StableContext>> branches_;
};

StableContext declare(const StableContext& c, const std::vector<Binding>& bindings,
                      bool strict_shadowing = true);
StableContext exit_scope(const StableContext& c);
StableContext attach_qubit(const StableContext& c, const std::string& x,
                           const CMat& nu, std::size_t max_qubits);
StableContext detach_qubit(const StableContext& c, const std::string& x);
StableContext rename_qubit(const StableContext& c, const std::string& x,
                           const std::string& y);
StableContext set_classical(const StableContext& c, const std::string& x,
                            std::uint64_t v);
std::optional<std::uint64_t> get_classical(const StableContext& c,
                                           const std::string& x);
Context mix(std::vector<std::pair<double, StableContext>> branches);
bool is_stable(const Context& c);

struct ContextWitness {
  std::map<std::string, std::string> sigma;  // renaming of declared names
  std::vector<std::size_t> pi;  // pi[i] = position in q' of sigma(q[i])
};

/// Searches for a renaming sigma (respecting stack shape, types, classical
/// values and attachment) and a register permutation pi carrying one context
/// onto the other with matching rho (entrywise within tol).
std::optional<ContextWitness> contexts_equivalent(const StableContext& a,
                                                  const StableContext& b,
                                                  double tol = kEpsMat);

/// Reduced density matrix of the single qubit x (everything else traced out).
CMat qubit_reduced_state(const StableContext& c, const std::string& x);

/// Structural invariant check used by tests; empty result means valid.
std::vector<std::string> validate_context(const StableContext& c);

std::string context_to_json(const Context& c);
Context context_from_json(const std::string& text);

}  // namespace qpalg

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
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qpalg/ast.hpp"
#include "qpalg/context.hpp"

namespace qpalg {

struct TLTau {
  bool operator==(const TLTau&) const = default;
};
struct TLDelta {
  bool operator==(const TLDelta&) const = default;
};
struct TLProb {
  double p;
  bool operator==(const TLProb&) const = default;
};
struct TLSendValue {
  std::string gate;
  std::uint64_t value;
  bool operator==(const TLSendValue&) const = default;
};
struct TLSendQubit {
  std::string gate;
  std::string qubit;
  bool operator==(const TLSendQubit&) const = default;
};
struct TLRecvValue {
  std::string gate;
  std::uint64_t value;
  bool operator==(const TLRecvValue&) const = default;
};
struct TLRecvQubit {
  std::string gate;
  std::string qubit;
  bool operator==(const TLRecvQubit&) const = default;
};

using TransitionLabel = std::variant<TLTau, TLDelta, TLProb, TLSendValue,
                                     TLSendQubit, TLRecvValue, TLRecvQubit>;

bool label_is_silent(const TransitionLabel& l);  // tau or probabilistic
std::string label_to_string(const TransitionLabel& l);

/// How the environment closes over a process: which values an open classical
/// reception ranges over, which state an open qubit reception attaches, and
/// whether open (unmatched) communications are enabled at all.
struct EnvPolicy {
  std::set<std::uint64_t> input_domain = {0, 1};
  CMat fresh_qubit_state = basis_state(0);
  bool allow_open_actions = false;
  bool strict_shadowing = true;
  std::size_t max_qubits = default_max_qubits();
};

struct ProcessState {
  ProcessPtr term;
  Context ctx;
};

/// Builds a state, pushing the parallel-split nodes that the parallel rules
/// expect at the top of each branch's stack segment.
ProcessState make_state(ProcessPtr term, Context ctx);

struct Transition {
  TransitionLabel label;
  ProcessState target;
  /// Definition unfolded by this step, when it is an invocation step.
  std::optional<std::string> unfolded;
};

/// All transitions licensed from this state. A probabilistically unstable
/// context yields exactly its resolutions; a stable one yields the full set
/// in a fixed rule-then-syntax order.
std::vector<Transition> transitions(const ProcessState& s,
                                    const EnvPolicy& policy,
                                    const Program& program);

bool eval_condition(const Condition& c,
                    const std::map<std::string, std::uint64_t>& classical);

/// Expands a state whose term starts with a measure-and-send prefix
/// g!M[targets].P into its single silent successor: the term becomes
/// [ g!y . end ] ; P for a fresh y and the context the outcome mixture,
/// with y bound to the observed eigenvalue in each branch.
ProcessState measure_and_send_expand(const ProcessState& s,
                                     const EnvPolicy& policy,
                                     const Program& program);

/// Instantiates a definition body: the first |args| formals (the leading
/// declaration chain) are substituted by the arguments, capture-avoidingly;
/// the remaining declarations are kept.
ProcessPtr instantiate(const Program& program, const std::string& def_name,
                       const std::vector<std::string>& args,
                       const std::map<std::string, VarType>* caller_types =
                           nullptr);

/// Capture-avoiding substitution of variable names in a term.
ProcessPtr substitute(const ProcessPtr& p,
                      const std::map<std::string, std::string>& sigma);

}  // namespace qpalg

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
#include <functional>
#include <string>
#include <vector>

#include "qpalg/semantics.hpp"

namespace qpalg {

struct ExploreLimits {
  std::size_t max_states = 10000;
  std::size_t max_qubits = default_max_qubits();
  std::size_t max_unfold_depth = 64;  // per definition, along a path
};

struct ProcessGraph {
  struct Edge {
    std::size_t from;
    TransitionLabel label;
    std::size_t to;
  };

  std::vector<ProcessState> states;  // canonical representatives
  std::size_t initial = 0;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> out;  // edge indices per state
  bool truncated = false;
  ExploreLimits limits;

  std::size_t size() const { return states.size(); }
};

/// Canonical form of a state: equal keys for states differing only by a
/// structure-respecting renaming and a register permutation (rho quantized
/// at the matrix tolerance).
std::string canonical_key(const ProcessState& s);

ProcessGraph explore(const Program& program, const EnvPolicy& policy,
                     const ExploreLimits& limits);
ProcessGraph explore_state(const ProcessState& initial, const Program& program,
                           const EnvPolicy& policy,
                           const ExploreLimits& limits);

struct Trace {
  struct Step {
    TransitionLabel label;
    ProcessState state;
  };
  ProcessState initial;
  std::vector<Step> steps;
  std::uint64_t seed = 0;
  bool cutoff = false;
};

Trace sample_run(const Program& program, const EnvPolicy& policy,
                 std::uint64_t seed, std::size_t max_steps);
Trace sample_run_state(const ProcessState& initial, const Program& program,
                       const EnvPolicy& policy, std::uint64_t seed,
                       std::size_t max_steps);

std::string export_dot(const ProcessGraph& g);
std::string export_json(const ProcessGraph& g);
ProcessGraph graph_from_json(const std::string& text);
bool graphs_equal(const ProcessGraph& a, const ProcessGraph& b);

/// Probability that a run ends in a terminal state satisfying `pred`,
/// assuming the event is scheduler-independent: at nondeterministic states
/// all successors must agree (within kEpsMat), otherwise an error is thrown.
/// The graph must be acyclic.
double terminal_event_probability(
    const ProcessGraph& g, const std::function<bool(const ProcessState&)>& pred);

/// Indices of states with no outgoing edges.
std::vector<std::size_t> terminal_states(const ProcessGraph& g);

}  // namespace qpalg

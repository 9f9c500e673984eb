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

#include <string>
#include <vector>

#include "qpalg/lts.hpp"

namespace qpalg {

/// Directory holding the bundled .qpalg protocols. QPALG_CORPUS_DIR
/// overrides the compiled-in default.
std::string corpus_dir();
std::string corpus_path(const std::string& name);
std::vector<std::string> corpus_names();
Program load_corpus_program(const std::string& name);

/// Teleportation starting state for an arbitrary input state: `psi` is
/// attached and scoped so that the only qubit surviving termination is
/// Bob's, carrying the teleported state.
ProcessState teleport_initial(const Program& teleport_program, const CMat& psi);

// Brute-force matrix computations of the protocol outcomes, independent of
// the process semantics.

struct TeleportOracle {
  std::vector<double> probabilities;  // one per measurement outcome 0..3
  CMat final_state;                   // Bob's qubit after correction
};
TeleportOracle oracle_teleport(const CMat& psi);

CMat oracle_build_epr();

struct Bb84Outcome {
  int data_a;
  int base_a;
  int base_b;
  int data_b;
  bool keep;
  double probability;
};
std::vector<Bb84Outcome> oracle_bb84_round();

/// Common single-qubit states for tests.
CMat ket_state(double amp0, double amp1);

/// All oracle outputs (Bell matrix, teleportation distributions and final
/// states, BB84 joint distribution) as one JSON document; compared against
/// the checked-in golden copy at corpus/golden.json.
std::string oracle_outputs_json();

}  // namespace qpalg

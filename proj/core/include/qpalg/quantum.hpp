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

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "qpalg/errors.hpp"

namespace qpalg {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;

/// Density matrices live on a named register: `q` lists the qubit names,
/// head first; the head qubit is the most significant bit of the basis
/// index, so q = [x, y] carries rho over |xy>.

struct UnitaryEntry {
  std::string name;
  std::size_t arity;
  CMat matrix;  // 2^arity x 2^arity
};

struct ObservableEntry {
  struct SpectrumEntry {
    std::uint64_t eigenvalue;
    CMat projector;
  };
  std::string name;
  std::size_t arity;
  std::vector<SpectrumEntry> spectrum;
};

struct MeasurementBranch {
  std::uint64_t eigenvalue;
  double probability;
  CMat state;
};

/// Kronecker product (A in the most significant position).
CMat kron(const CMat& a, const CMat& b);

/// 2x2 projector |v><v| for v in {0, 1}.
CMat basis_state(std::uint64_t v);

/// The 1x1 matrix [1]: the state of an empty register.
CMat scalar_one();

/// Identity on k qubits (2^k x 2^k).
CMat identity_qubits(std::size_t k);

/// Permutation matrix over the register `q` that moves `targets` to the head
/// of the register, in the given order, keeping the relative order of the
/// remaining qubits. Pi |b over q> = |b over (targets ++ rest)>.
CMat head_permutation(const std::vector<std::string>& q,
                      const std::vector<std::string>& targets);

/// Conjugates rho by A extended with identities: applies A to the named
/// target qubits wherever they sit in the register.
CMat apply_superop(const CMat& a, const CMat& rho,
                   const std::vector<std::string>& q,
                   const std::vector<std::string>& targets);

/// Reduced density matrix over q with the `drop` qubits traced out; the
/// surviving qubits keep their relative order.
CMat partial_trace(const CMat& rho, const std::vector<std::string>& q,
                   const std::set<std::string>& drop);

/// Measurement of `targets` with observable M: one branch per spectrum entry,
/// pruned below kEpsProb and renormalized. Probabilities sum to 1.
std::vector<MeasurementBranch> measurement_branches(
    const CMat& rho, const std::vector<std::string>& q,
    const ObservableEntry& m, const std::vector<std::string>& targets);

/// Post-measurement state when the outcome is discarded: the probabilistic
/// mixture of all branches.
CMat collapse_mixture(const CMat& rho, const std::vector<std::string>& q,
                      const ObservableEntry& m,
                      const std::vector<std::string>& targets);

bool is_unitary_name(const std::string& name);
bool is_observable_name(const std::string& name);
const UnitaryEntry& get_unitary(const std::string& name);
const ObservableEntry& get_observable(const std::string& name);
const std::vector<std::string>& unitary_names();
const std::vector<std::string>& observable_names();

/// Violated density-matrix invariants (empty means valid).
std::vector<std::string> validate_density(const CMat& rho);

/// Default cap on attached qubits; QPALG_MAX_QUBITS overrides.
std::size_t default_max_qubits();

}  // namespace qpalg

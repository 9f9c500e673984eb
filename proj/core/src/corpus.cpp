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

#include "qpalg/corpus.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qpalg/parser.hpp"

#ifndef QPALG_DEFAULT_CORPUS_DIR
#define QPALG_DEFAULT_CORPUS_DIR "corpus"
#endif

namespace qpalg {

std::string corpus_dir() {
  if (const char* env = std::getenv("QPALG_CORPUS_DIR")) {
    return env;
  }
  return QPALG_DEFAULT_CORPUS_DIR;
}

std::string corpus_path(const std::string& name) {
  return corpus_dir() + "/" + name + ".qpalg";
}

std::vector<std::string> corpus_names() {
  return {"buildepr", "teleport", "bb84", "eve_all", "eve_some"};
}

Program load_corpus_program(const std::string& name) {
  std::ifstream in(corpus_path(name));
  if (!in) {
    throw Error(ErrorKind::UnknownGateOrOperator,
                "no bundled protocol named " + name + " (looked in " +
                    corpus_dir() + ")");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_program(text.str());
}

namespace {

// Enters the leading declaration blocks of a term: their frames go onto the
// given stack segment and the blocks become plain scopes.
ProcessPtr pre_enter_declarations(const ProcessPtr& p, EnvStack& segment) {
  if (const auto* d = p->get_if<Decl>()) {
    EnvNode frame;
    frame.frame = d->bindings;
    segment.push_back(std::move(frame));
    return make_scope(pre_enter_declarations(d->body, segment));
  }
  return p;
}

}  // namespace

ProcessState teleport_initial(const Program& teleport_program,
                              const CMat& psi) {
  // Base frame holds Bob's qubit; a popped scope holds psi and the EPR half
  // that stays with Alice, so the terminal context retains only Bob's qubit.
  // Alice and Bob are pre-instantiated and Bob's declaration pre-entered:
  // Bob blocks on the classical reception from the start, so the protocol
  // has a single probabilistic split (Alice's measurement).
  const ProcessPtr alice =
      instantiate(teleport_program, "Alice", {"psi", "a"});
  EnvStack bob_stack;
  const ProcessPtr bob = pre_enter_declarations(
      instantiate(teleport_program, "Bob", {"b"}), bob_stack);

  StableContext ctx;
  EnvNode base;
  base.frame = {{"b", VarType::Qubit}};
  EnvNode scope_frame;
  scope_frame.frame = {{"psi", VarType::Qubit}, {"a", VarType::Qubit}};
  EnvNode split;
  split.is_split = true;
  split.right = std::move(bob_stack);
  ctx.stack = {base, scope_frame, std::move(split)};
  ctx.qubits = {"psi"};
  ctx.rho = psi;

  const ProcessPtr left =
      make_seq(make_invoke("BuildEPR", {"a", "b"}), alice);
  const ProcessPtr protocol =
      make_restrict(make_par(left, bob), {"meas"});
  return make_state(make_scope(protocol), Context::single(ctx));
}

CMat ket_state(double amp0, double amp1) {
  Eigen::Vector2cd v;
  v << amp0, amp1;
  v.normalize();
  return v * v.adjoint();
}

TeleportOracle oracle_teleport(const CMat& psi) {
  // Register order [psi, a, b]; head qubit is the most significant bit.
  const CMat h = get_unitary("H").matrix;
  const CMat cnot = get_unitary("CNot").matrix;
  const CMat i2 = identity_qubits(1);

  CMat rho = kron(psi, kron(basis_state(0), basis_state(0)));
  // EPR pair on (a, b).
  const CMat prep_a = kron(i2, kron(h, i2));
  rho = prep_a * rho * prep_a.adjoint();
  const CMat cnot_ab = kron(i2, cnot);
  rho = cnot_ab * rho * cnot_ab.adjoint();
  // Alice: CNot[psi, a], H[psi].
  const CMat cnot_pa = kron(cnot, i2);
  rho = cnot_pa * rho * cnot_pa.adjoint();
  const CMat h_p = kron(h, kron(i2, i2));
  rho = h_p * rho * h_p.adjoint();

  TeleportOracle out;
  const char* corrections[4] = {"I", "X", "Z", "Y"};
  CMat common = CMat::Zero(2, 2);
  for (int k = 0; k < 4; ++k) {
    CMat proj4 = CMat::Zero(4, 4);
    proj4(k, k) = 1.0;
    const CMat proj = kron(proj4, i2);
    const CMat branch = proj * rho * proj.adjoint();
    const double p = branch.trace().real();
    out.probabilities.push_back(p);
    // Bob's qubit after the correction for outcome k.
    CMat reduced = CMat::Zero(2, 2);
    for (int msb = 0; msb < 4; ++msb) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          reduced(i, j) += branch(msb * 2 + i, msb * 2 + j);
        }
      }
    }
    reduced /= p;
    const CMat u = get_unitary(corrections[k]).matrix;
    common += p * (u * reduced * u.adjoint());
  }
  // All four corrected branches agree; report the mixture for robustness.
  out.final_state = common;
  return out;
}

CMat oracle_build_epr() {
  const CMat h = get_unitary("H").matrix;
  const CMat cnot = get_unitary("CNot").matrix;
  const CMat i2 = identity_qubits(1);
  CMat rho = kron(basis_state(0), basis_state(0));
  const CMat h1 = kron(h, i2);
  rho = h1 * rho * h1.adjoint();
  return cnot * rho * cnot.adjoint();
}

namespace {

nlohmann::json matrix_json(const CMat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back({m(i, j).real(), m(i, j).imag()});
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string oracle_outputs_json() {
  nlohmann::json out;
  out["build_epr"] = matrix_json(oracle_build_epr());

  nlohmann::json teleport = nlohmann::json::array();
  const std::vector<std::pair<std::string, CMat>> inputs = {
      {"zero", ket_state(1, 0)},
      {"one", ket_state(0, 1)},
      {"plus", ket_state(1, 1)},
      {"third", ket_state(std::sqrt(1.0 / 3.0), std::sqrt(2.0 / 3.0))}};
  for (const auto& [name, psi] : inputs) {
    const TeleportOracle oracle = oracle_teleport(psi);
    teleport.push_back({{"input", name},
                        {"probabilities", oracle.probabilities},
                        {"final_state", matrix_json(oracle.final_state)}});
  }
  out["teleport"] = teleport;

  nlohmann::json bb84 = nlohmann::json::array();
  for (const auto& o : oracle_bb84_round()) {
    bb84.push_back({{"dataA", o.data_a},
                    {"baseA", o.base_a},
                    {"baseB", o.base_b},
                    {"dataB", o.data_b},
                    {"keep", o.keep},
                    {"p", o.probability}});
  }
  out["bb84"] = bb84;
  return out.dump(2);
}

std::vector<Bb84Outcome> oracle_bb84_round() {
  std::vector<Bb84Outcome> out;
  const CMat h = get_unitary("H").matrix;
  const auto& mstd1 = get_observable("MStd1");
  const auto& mpm = get_observable("MPlusMinus");
  for (int data_a = 0; data_a < 2; ++data_a) {
    for (int base_a = 0; base_a < 2; ++base_a) {
      for (int base_b = 0; base_b < 2; ++base_b) {
        CMat qubit = basis_state(std::uint64_t(data_a));
        if (base_a == 1) qubit = h * qubit * h.adjoint();
        const auto& observable = base_b == 0 ? mstd1 : mpm;
        for (const auto& entry : observable.spectrum) {
          const CMat projected = entry.projector * qubit * entry.projector;
          const double p = projected.trace().real();
          if (p < kEpsProb) continue;
          out.push_back({data_a, base_a, base_b, int(entry.eigenvalue),
                         base_a == base_b, 0.125 * p});
        }
      }
    }
  }
  return out;
}

}  // namespace qpalg

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

#include "qpalg/quantum.hpp"

#include <doctest.h>

#include <random>

namespace qpalg {
namespace {

bool close(const CMat& a, const CMat& b, double tol = kEpsMat) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() <= tol;
}

CMat random_density(std::mt19937_64& rng, std::size_t qubits) {
  const Eigen::Index dim = Eigen::Index(1) << qubits;
  std::normal_distribution<double> normal;
  CMat a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      a(i, j) = Complex(normal(rng), normal(rng));
    }
  }
  CMat rho = a * a.adjoint();
  return rho / rho.trace().real();
}

CMat plus_state() {
  CMat m(2, 2);
  m << 0.5, 0.5, 0.5, 0.5;
  return m;
}

CMat bell_state() {
  CMat m = CMat::Zero(4, 4);
  m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = 0.5;
  return m;
}

TEST_CASE("kron basics") {
  CHECK(close(kron(identity_qubits(1), identity_qubits(1)),
              identity_qubits(2)));
  CHECK(close(kron(basis_state(0), basis_state(1)), [] {
    CMat m = CMat::Zero(4, 4);
    m(1, 1) = 1.0;  // |01><01|
    return m;
  }()));
  // Dimension bookkeeping for rectangular blocks.
  CHECK(kron(identity_qubits(2), identity_qubits(1)).rows() == 8);
}

TEST_CASE("head_permutation on small registers") {
  CHECK(close(head_permutation({"x"}, {"x"}), identity_qubits(1)));

  // q=[x,y], targets=[y]: the swap matrix, checked on all basis pairs.
  const CMat pi = head_permutation({"x", "y"}, {"y"});
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
      v(a * 2 + b) = 1.0;  // |ab> over [x,y]
      Eigen::VectorXcd w = pi * v;
      Eigen::VectorXcd expect = Eigen::VectorXcd::Zero(4);
      expect(b * 2 + a) = 1.0;  // |ba> over [y,x]
      CHECK((w - expect).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  // q=[x,y,z], targets=[z,x]: |abc> -> |cab>, all 8 basis vectors.
  const CMat pi3 = head_permutation({"x", "y", "z"}, {"z", "x"});
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int c = 0; c < 2; ++c) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(8);
        v(a * 4 + b * 2 + c) = 1.0;
        Eigen::VectorXcd w = pi3 * v;
        Eigen::VectorXcd expect = Eigen::VectorXcd::Zero(8);
        expect(c * 4 + a * 2 + b) = 1.0;
        CHECK((w - expect).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }

  CHECK_THROWS_AS(head_permutation({"x"}, {"x", "x"}), Error);
  CHECK_THROWS_AS(head_permutation({"x"}, {"nope"}), Error);
}

TEST_CASE("head_permutation is exactly unitary for registers up to 3") {
  const std::vector<std::string> q = {"a", "b", "c"};
  const std::vector<std::vector<std::string>> target_sets = {
      {"a"}, {"b"}, {"c"}, {"b", "a"}, {"c", "b"}, {"c", "a", "b"}};
  for (const auto& targets : target_sets) {
    const CMat pi = head_permutation(q, targets);
    CHECK((pi.adjoint() * pi - identity_qubits(3)).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("apply_superop matches direct conjugation") {
  const CMat h = get_unitary("H").matrix;
  SUBCASE("identity leaves the state alone") {
    std::mt19937_64 rng(1);
    const CMat rho = random_density(rng, 2);
    CHECK(close(apply_superop(identity_qubits(1), rho, {"x", "y"}, {"y"}), rho));
  }
  SUBCASE("H on |0><0|") {
    CHECK(close(apply_superop(h, basis_state(0), {"x"}, {"x"}), plus_state()));
  }
  SUBCASE("CNot turns |+>|0> into the Bell state") {
    const CMat cnot = get_unitary("CNot").matrix;
    const CMat rho = kron(plus_state(), basis_state(0));
    CHECK(close(apply_superop(cnot, rho, {"x", "y"}, {"x", "y"}), bell_state()));
  }
  SUBCASE("targets at the head equal plain padded conjugation") {
    std::mt19937_64 rng(2);
    const CMat rho = random_density(rng, 3);
    const CMat padded = kron(h, identity_qubits(2));
    const CMat direct = padded * rho * padded.adjoint();
    CHECK(close(apply_superop(h, rho, {"x", "y", "z"}, {"x"}), direct));
  }
  SUBCASE("gate on a later register position via the permutation") {
    // H on the second of two qubits equals (I (x) H) conjugation.
    std::mt19937_64 rng(3);
    const CMat rho = random_density(rng, 2);
    const CMat padded = kron(identity_qubits(1), h);
    CHECK(close(apply_superop(h, rho, {"x", "y"}, {"y"}),
                padded * rho * padded.adjoint()));
  }
}

TEST_CASE("registry unitaries preserve density invariants") {
  std::mt19937_64 rng(7);
  for (const auto& name : unitary_names()) {
    const auto& entry = get_unitary(name);
    CHECK(close(entry.matrix.adjoint() * entry.matrix,
                identity_qubits(entry.arity)));
    const CMat rho = random_density(rng, 3);
    std::vector<std::string> q = {"a", "b", "c"};
    std::vector<std::string> targets(q.begin(), q.begin() + entry.arity);
    const CMat next = apply_superop(entry.matrix, rho, q, targets);
    CHECK(std::abs(next.trace().real() - 1.0) <= kEpsMat);
    CHECK(validate_density(next).empty());
  }
}

TEST_CASE("partial_trace") {
  SUBCASE("tracing a product state drops the factor") {
    std::mt19937_64 rng(11);
    const CMat rest = random_density(rng, 2);
    const CMat rho = kron(basis_state(0), rest);
    CHECK(close(partial_trace(rho, {"x", "y", "z"}, {"x"}), rest));
  }
  SUBCASE("either half of a Bell pair is maximally mixed") {
    CHECK(close(partial_trace(bell_state(), {"x", "y"}, {"x"}),
                0.5 * identity_qubits(1)));
    CHECK(close(partial_trace(bell_state(), {"x", "y"}, {"y"}),
                0.5 * identity_qubits(1)));
  }
  SUBCASE("empty drop set is the identity") {
    std::mt19937_64 rng(12);
    const CMat rho = random_density(rng, 2);
    CHECK(close(partial_trace(rho, {"x", "y"}, {}), rho));
  }
  SUBCASE("trace is preserved") {
    std::mt19937_64 rng(13);
    const CMat rho = random_density(rng, 3);
    const CMat reduced = partial_trace(rho, {"x", "y", "z"}, {"y", "z"});
    CHECK(std::abs(reduced.trace().real() - 1.0) <= kEpsMat);
  }
  SUBCASE("commutes with a consistent register permutation") {
    std::mt19937_64 rng(14);
    const CMat rho = random_density(rng, 3);
    const std::vector<std::string> q = {"x", "y", "z"};
    const std::vector<std::string> moved = {"y", "z", "x"};
    const CMat pi = head_permutation(q, moved);
    const CMat rho_perm = pi * rho * pi.adjoint();
    CHECK(close(partial_trace(rho, q, {"x"}),
                partial_trace(rho_perm, moved, {"x"})));
  }
  CHECK_THROWS_AS(partial_trace(bell_state(), {"x", "y"}, {"w"}), Error);
}

TEST_CASE("measurement_branches") {
  const auto& mstd1 = get_observable("MStd1");
  SUBCASE("eigenstate gives a single branch") {
    const auto branches =
        measurement_branches(basis_state(0), {"x"}, mstd1, {"x"});
    REQUIRE(branches.size() == 1);
    CHECK(branches[0].eigenvalue == 0);
    CHECK(branches[0].probability == doctest::Approx(1.0));
    CHECK(close(branches[0].state, basis_state(0)));
  }
  SUBCASE("|+> splits evenly") {
    const auto branches =
        measurement_branches(plus_state(), {"x"}, mstd1, {"x"});
    REQUIRE(branches.size() == 2);
    CHECK(branches[0].eigenvalue == 0);
    CHECK(branches[0].probability == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(close(branches[0].state, basis_state(0)));
    CHECK(branches[1].eigenvalue == 1);
    CHECK(close(branches[1].state, basis_state(1)));
  }
  SUBCASE("MStd2 on the Bell state yields outcomes 0 and 3") {
    const auto& mstd2 = get_observable("MStd2");
    const auto branches =
        measurement_branches(bell_state(), {"x", "y"}, mstd2, {"x", "y"});
    REQUIRE(branches.size() == 2);
    CHECK(branches[0].eigenvalue == 0);
    CHECK(branches[1].eigenvalue == 3);
    CHECK(branches[0].probability == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(branches[1].probability == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("probabilities sum to one on random states") {
    std::mt19937_64 rng(21);
    for (int round = 0; round < 20; ++round) {
      const CMat rho = random_density(rng, 2);
      const auto branches = measurement_branches(
          rho, {"x", "y"}, get_observable("MStd2"), {"x", "y"});
      double total = 0.0;
      for (const auto& b : branches) {
        total += b.probability;
        CHECK(validate_density(b.state).empty());
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("collapse_mixture") {
  const auto& mstd1 = get_observable("MStd1");
  CHECK(close(collapse_mixture(basis_state(0), {"x"}, mstd1, {"x"}),
              basis_state(0)));
  CHECK(close(collapse_mixture(plus_state(), {"x"}, mstd1, {"x"}),
              0.5 * identity_qubits(1)));
  SUBCASE("equals the probability mixture of the branches") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 20; ++round) {
      const CMat rho = random_density(rng, 2);
      const auto& m = get_observable("MStd1");
      const auto branches = measurement_branches(rho, {"x", "y"}, m, {"y"});
      CMat mixture = CMat::Zero(4, 4);
      for (const auto& b : branches) {
        mixture += b.probability * b.state;
      }
      CHECK(close(collapse_mixture(rho, {"x", "y"}, m, {"y"}), mixture));
    }
  }
}

TEST_CASE("registries") {
  const CMat h = get_unitary("H").matrix;
  CMat expect(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  expect << s, s, s, -s;
  CHECK(close(h, expect));

  const auto& mstd2 = get_observable("MStd2");
  CMat sum = CMat::Zero(4, 4);
  for (const auto& entry : mstd2.spectrum) {
    sum += entry.projector;
    for (const auto& other : mstd2.spectrum) {
      if (entry.eigenvalue == other.eigenvalue) continue;
      CHECK((entry.projector * other.projector).cwiseAbs().maxCoeff() <=
            kEpsMat);
    }
    CHECK(close(entry.projector * entry.projector, entry.projector));
  }
  CHECK(close(sum, identity_qubits(2)));

  // Eigenvalue 3 selects |11><11|.
  CMat p11 = CMat::Zero(4, 4);
  p11(3, 3) = 1.0;
  CHECK(mstd2.spectrum[3].eigenvalue == 3);
  CHECK(close(mstd2.spectrum[3].projector, p11));

  const auto& mpm = get_observable("MPlusMinus");
  CHECK(mpm.spectrum[0].eigenvalue == 0);
  CHECK(close(mpm.spectrum[0].projector, plus_state()));

  CHECK_THROWS_AS(get_unitary("Q"), Error);
  CHECK_THROWS_AS(get_observable("MFoo"), Error);
  CHECK(is_unitary_name("CNot"));
  CHECK(!is_unitary_name("MStd1"));
  CHECK(is_observable_name("MPlusMinus"));
}

TEST_CASE("validate_density") {
  CHECK(validate_density(0.5 * identity_qubits(1)).empty());
  CMat bad_trace(2, 2);
  bad_trace << 1, 0, 0, 0.5;
  const auto violations = validate_density(bad_trace);
  REQUIRE(!violations.empty());
  CHECK(violations[0].find("trace") != std::string::npos);

  CMat not_hermitian(2, 2);
  not_hermitian << 0.5, 0.5, 0.0, 0.5;
  CHECK(!validate_density(not_hermitian).empty());

  CMat negative(2, 2);
  negative << 1.5, 0, 0, -0.5;
  bool has_psd = false;
  for (const auto& v : validate_density(negative)) {
    has_psd = has_psd || v.find("positive") != std::string::npos;
  }
  CHECK(has_psd);
}

}  // namespace
}  // namespace qpalg

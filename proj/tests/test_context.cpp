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

#include <doctest.h>

namespace qpalg {
namespace {

bool close(const CMat& a, const CMat& b, double tol = kEpsMat) {
  return a.rows() == b.rows() && (a - b).cwiseAbs().maxCoeff() <= tol;
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

StableContext bell_context() {
  StableContext c;
  c = declare(c, {{"x", VarType::Qubit}, {"z", VarType::Qubit}});
  c.qubits = {"x", "z"};
  c.rho = bell_state();
  return c;
}

TEST_CASE("declare") {
  StableContext empty;
  const StableContext c = declare(empty, {{"x", VarType::Qubit}});
  CHECK(c.stack.size() == 1);
  CHECK(c.qubits.empty());
  CHECK(close(c.rho, scalar_one()));
  CHECK(c.classical.empty());

  const StableContext c2 =
      declare(c, {{"k", VarType::Nat}});
  CHECK(get_classical(c2, "k") == std::nullopt);  // declared but unset

  CHECK_THROWS_AS(declare(empty, {{"a", VarType::Nat}, {"a", VarType::Nat}}),
                  Error);
  CHECK_THROWS_AS(declare(c, {{"x", VarType::Nat}}), Error);  // shadowing
  CHECK_NOTHROW(declare(c, {{"x", VarType::Nat}}, false));
}

TEST_CASE("exit_scope") {
  StableContext empty;
  SUBCASE("undoing an unused declaration") {
    const StableContext c = declare(empty, {{"x", VarType::Qubit}});
    const StableContext back = exit_scope(c);
    CHECK(back.stack.empty());
    CHECK(close(back.rho, scalar_one()));
  }
  SUBCASE("exiting a frame holding half a Bell pair") {
    StableContext c = declare(empty, {{"x", VarType::Qubit}});
    c = declare(c, {{"z", VarType::Qubit}});
    c.qubits = {"x", "z"};
    c.rho = bell_state();
    const StableContext back = exit_scope(c);  // pops z
    CHECK(back.qubits == std::vector<std::string>{"x"});
    CHECK(close(back.rho, 0.5 * identity_qubits(1)));
  }
  SUBCASE("classical values vanish with their frame") {
    StableContext c = declare(empty, {{"k", VarType::Nat}});
    c = set_classical(c, "k", 3);
    const StableContext back = exit_scope(c);
    CHECK(back.classical.empty());
  }
  CHECK_THROWS_AS(exit_scope(empty), Error);
}

TEST_CASE("attach, detach and rename") {
  StableContext empty;
  StableContext c = declare(empty, {{"x", VarType::Qubit},
                                    {"y", VarType::Qubit},
                                    {"k", VarType::Nat}});
  SUBCASE("attach to an empty register") {
    const StableContext c1 = attach_qubit(c, "x", basis_state(0), 10);
    CHECK(c1.qubits == std::vector<std::string>{"x"});
    CHECK(close(c1.rho, basis_state(0)));
  }
  SUBCASE("attachment goes to the head of the register") {
    StableContext c1 = attach_qubit(c, "x", basis_state(0), 10);
    StableContext c2 = attach_qubit(c1, "y", basis_state(1), 10);
    CHECK(c2.qubits == std::vector<std::string>{"y", "x"});
    CHECK(close(c2.rho, kron(basis_state(1), basis_state(0))));  // |10><10|
  }
  SUBCASE("attach twice fails") {
    const StableContext c1 = attach_qubit(c, "x", basis_state(0), 10);
    CHECK_THROWS_AS(attach_qubit(c1, "x", basis_state(0), 10), Error);
  }
  SUBCASE("attach checks declaration and type") {
    CHECK_THROWS_AS(attach_qubit(c, "w", basis_state(0), 10), Error);
    CHECK_THROWS_AS(attach_qubit(c, "k", basis_state(0), 10), Error);
  }
  SUBCASE("attach honors the register cap") {
    const StableContext c1 = attach_qubit(c, "x", basis_state(0), 1);
    CHECK_THROWS_AS(attach_qubit(c1, "y", basis_state(0), 1), Error);
  }
  SUBCASE("detach the only qubit") {
    const StableContext c1 = attach_qubit(c, "x", basis_state(0), 10);
    const StableContext c2 = detach_qubit(c1, "x");
    CHECK(c2.qubits.empty());
    CHECK(close(c2.rho, scalar_one()));
    CHECK(!stack_lookup(c2.stack, "x"));  // binding removed
  }
  SUBCASE("detach half a Bell pair leaves the other maximally mixed") {
    const StableContext b = bell_context();
    const StableContext after = detach_qubit(b, "x");
    CHECK(close(after.rho, 0.5 * identity_qubits(1)));
  }
  SUBCASE("detach unknown") {
    CHECK_THROWS_AS(detach_qubit(c, "x"), Error);  // declared but unattached
  }
  SUBCASE("detach undoes attach on a product register") {
    StableContext c1 = attach_qubit(c, "x", basis_state(0), 10);
    StableContext c2 = attach_qubit(c1, "y", plus_state(), 10);
    const StableContext back = detach_qubit(c2, "y");
    CHECK(back.qubits == c1.qubits);
    CHECK(close(back.rho, c1.rho));
  }
  SUBCASE("rename keeps the state") {
    StableContext b = bell_context();
    b = declare(b, {{"y", VarType::Qubit}});
    const StableContext renamed = rename_qubit(b, "x", "y");
    CHECK(renamed.qubits == std::vector<std::string>{"y", "z"});
    CHECK(close(renamed.rho, bell_state()));
    CHECK(close(qubit_reduced_state(renamed, "y"), 0.5 * identity_qubits(1)));
    CHECK(close(qubit_reduced_state(renamed, "z"), 0.5 * identity_qubits(1)));
    CHECK(!stack_lookup(renamed.stack, "x"));
  }
  SUBCASE("rename onto an attached name fails") {
    StableContext b = bell_context();
    CHECK_THROWS_AS(rename_qubit(b, "x", "z"), Error);
  }
}

TEST_CASE("classical store") {
  StableContext empty;
  StableContext c = declare(empty, {{"k", VarType::Nat}, {"x", VarType::Qubit}});
  c = set_classical(c, "k", 2);
  CHECK(get_classical(c, "k") == 2);
  c = set_classical(c, "k", 5);  // override semantics
  CHECK(get_classical(c, "k") == 5);
  CHECK_THROWS_AS(set_classical(c, "w", 1), Error);
  CHECK_THROWS_AS(set_classical(c, "x", 1), Error);
  CHECK_THROWS_AS(get_classical(c, "w"), Error);
}

TEST_CASE("mix and stability") {
  StableContext empty;
  const StableContext c = declare(empty, {{"k", VarType::Nat}});
  SUBCASE("a single branch normalizes to a stable context") {
    const Context m = mix({{1.0, c}});
    CHECK(is_stable(m));
  }
  SUBCASE("two branches are unstable") {
    const Context m = mix({{0.5, c}, {0.5, set_classical(c, "k", 1)}});
    CHECK(!is_stable(m));
    CHECK(m.branches().size() == 2);
  }
  CHECK_THROWS_AS(mix({}), Error);
  CHECK_THROWS_AS(mix({{0.4, c}, {0.4, c}}), Error);
  CHECK_THROWS_AS(mix({{-0.5, c}, {1.5, c}}), Error);
}

TEST_CASE("contexts_equivalent") {
  StableContext empty;
  SUBCASE("reflexive with the identity witness") {
    const StableContext b = bell_context();
    const auto witness = contexts_equivalent(b, b);
    REQUIRE(witness);
    CHECK(witness->sigma.at("x") == "x");
    CHECK(witness->sigma.at("z") == "z");
  }
  SUBCASE("pure renaming") {
    StableContext a = declare(empty, {{"x", VarType::Qubit}});
    a.qubits = {"x"};
    a.rho = basis_state(0);
    StableContext b = declare(empty, {{"y", VarType::Qubit}});
    b.qubits = {"y"};
    b.rho = basis_state(0);
    const auto witness = contexts_equivalent(a, b);
    REQUIRE(witness);
    CHECK(witness->sigma.at("x") == "y");
  }
  SUBCASE("register permutation with matching rho") {
    StableContext a = declare(empty, {{"x", VarType::Qubit},
                                      {"y", VarType::Qubit}});
    a.qubits = {"x", "y"};
    a.rho = kron(basis_state(0), basis_state(1));  // |01> over [x,y]
    StableContext b = declare(empty, {{"xp", VarType::Qubit},
                                      {"yp", VarType::Qubit}});
    b.qubits = {"yp", "xp"};
    b.rho = kron(basis_state(1), basis_state(0));  // |10> over [yp,xp]
    const auto witness = contexts_equivalent(a, b);
    REQUIRE(witness);
    CHECK(witness->sigma.at("x") == "xp");
    CHECK(witness->sigma.at("y") == "yp");
  }
  SUBCASE("classical values must agree") {
    StableContext a = declare(empty, {{"k", VarType::Nat}});
    StableContext b = a;
    a = set_classical(a, "k", 1);
    b = set_classical(b, "k", 2);
    CHECK(!contexts_equivalent(a, b));
  }
  SUBCASE("stack shape matters") {
    StableContext one = declare(empty, {{"k", VarType::Nat}});
    StableContext two = declare(declare(empty, {{"k", VarType::Nat}}),
                                {{"j", VarType::Nat}});
    CHECK(!contexts_equivalent(one, two));
  }
  SUBCASE("differing states are rejected") {
    StableContext a = declare(empty, {{"x", VarType::Qubit}});
    a.qubits = {"x"};
    a.rho = basis_state(0);
    StableContext b = declare(empty, {{"y", VarType::Qubit}});
    b.qubits = {"y"};
    b.rho = basis_state(1);
    CHECK(!contexts_equivalent(a, b));
  }
}

TEST_CASE("contexts_equivalent is an equivalence on a generated family") {
  // Small contexts: up to 2 qubits (one attached), up to 2 classical values.
  std::vector<StableContext> family;
  StableContext empty;
  for (int variant = 0; variant < 6; ++variant) {
    StableContext c = declare(
        empty, {{"q" + std::to_string(variant), VarType::Qubit},
                {"n" + std::to_string(variant), VarType::Nat}});
    if (variant % 2 == 0) {
      c = attach_qubit(c, "q" + std::to_string(variant),
                       variant % 4 == 0 ? basis_state(0) : plus_state(), 10);
    }
    if (variant % 3 == 0) {
      c = set_classical(c, "n" + std::to_string(variant), variant % 2);
    }
    family.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < family.size(); ++i) {
    CHECK(contexts_equivalent(family[i], family[i]));  // reflexive
    for (std::size_t j = 0; j < family.size(); ++j) {
      const bool ij = contexts_equivalent(family[i], family[j]).has_value();
      const bool ji = contexts_equivalent(family[j], family[i]).has_value();
      CHECK(ij == ji);  // symmetric
      for (std::size_t k = 0; k < family.size(); ++k) {
        const bool jk = contexts_equivalent(family[j], family[k]).has_value();
        const bool ik = contexts_equivalent(family[i], family[k]).has_value();
        if (ij && jk) CHECK(ik);  // transitive
      }
    }
  }
}

TEST_CASE("qubit_reduced_state") {
  StableContext empty;
  SUBCASE("sole qubit") {
    StableContext c = declare(empty, {{"x", VarType::Qubit}});
    c = attach_qubit(c, "x", plus_state(), 10);
    CHECK(close(qubit_reduced_state(c, "x"), plus_state()));
  }
  SUBCASE("Bell halves") {
    const StableContext b = bell_context();
    CHECK(close(qubit_reduced_state(b, "x"), 0.5 * identity_qubits(1)));
    CHECK(close(qubit_reduced_state(b, "z"), 0.5 * identity_qubits(1)));
  }
  SUBCASE("second factor of a product state") {
    StableContext c = declare(empty, {{"x", VarType::Qubit},
                                      {"y", VarType::Qubit}});
    c.qubits = {"x", "y"};
    c.rho = kron(basis_state(0), plus_state());
    CHECK(close(qubit_reduced_state(c, "y"), plus_state()));
  }
  CHECK_THROWS_AS(qubit_reduced_state(empty, "x"), Error);
}

TEST_CASE("context json round-trip") {
  StableContext c;
  c = declare(c, {{"x", VarType::Qubit}, {"k", VarType::Nat}});
  c = attach_qubit(c, "x", plus_state(), 10);
  c = set_classical(c, "k", 3);
  EnvNode split;
  split.is_split = true;
  EnvNode frame;
  frame.frame = {{"w", VarType::Nat}};
  split.left.push_back(frame);
  c.stack.push_back(split);

  const Context ctx = Context::single(c);
  const Context back = context_from_json(context_to_json(ctx));
  REQUIRE(back.stable());
  const StableContext& b = back.stable_ref();
  CHECK(b.qubits == c.qubits);
  CHECK(b.classical == c.classical);
  CHECK(close(b.rho, c.rho, 1e-15));
  CHECK(b.stack.size() == c.stack.size());
  CHECK(b.stack[1].is_split);
  REQUIRE(b.stack[1].left.size() == 1);
  CHECK(b.stack[1].left[0].frame == split.left[0].frame);

  const Context mixed =
      mix({{0.5, c}, {0.5, set_classical(c, "k", 4)}});
  const Context mixed_back = context_from_json(context_to_json(mixed));
  CHECK(!mixed_back.stable());
  CHECK(mixed_back.branches().size() == 2);
  CHECK(mixed_back.branches()[1].second.classical.at("k") == 4);
}

TEST_CASE("validate_context flags broken invariants") {
  StableContext c;
  c = declare(c, {{"x", VarType::Qubit}});
  c = attach_qubit(c, "x", basis_state(0), 10);
  CHECK(validate_context(c).empty());

  StableContext broken = c;
  broken.qubits.push_back("ghost");
  CHECK(!validate_context(broken).empty());

  StableContext wrong_dim = c;
  wrong_dim.rho = scalar_one();
  CHECK(!validate_context(wrong_dim).empty());
}

}  // namespace
}  // namespace qpalg

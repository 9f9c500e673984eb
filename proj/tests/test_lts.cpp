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

#include "qpalg/lts.hpp"

#include <doctest.h>

#include "qpalg/context.hpp"
#include "qpalg/corpus.hpp"
#include "qpalg/parser.hpp"

namespace qpalg {
namespace {

CMat bell_state() {
  CMat m = CMat::Zero(4, 4);
  m(0, 0) = m(0, 3) = m(3, 0) = m(3, 3) = 0.5;
  return m;
}

TEST_CASE("explore(end) is the two-state delta graph") {
  const Program prog = parse_program("main := end");
  const ProcessGraph g = explore(prog, EnvPolicy{}, ExploreLimits{});
  CHECK(g.size() == 2);
  REQUIRE(g.edges.size() == 1);
  CHECK(std::holds_alternative<TLDelta>(g.edges[0].label));
  CHECK(!g.truncated);
}

TEST_CASE("canonical keys identify states up to renaming") {
  SUBCASE("identical states") {
    const ProcessState s =
        make_state(parse_process("g!0 . end"), Context());
    CHECK(canonical_key(s) == canonical_key(s));
  }
  SUBCASE("alpha-renamed contexts and terms") {
    StableContext a = declare({}, {{"x", VarType::Qubit}});
    a = attach_qubit(a, "x", basis_state(0), 10);
    StableContext b = declare({}, {{"w", VarType::Qubit}});
    b = attach_qubit(b, "w", basis_state(0), 10);
    const ProcessState sa =
        make_state(parse_process("H[x] . end"), Context::single(a));
    const ProcessState sb =
        make_state(parse_process("H[w] . end"), Context::single(b));
    CHECK(canonical_key(sa) == canonical_key(sb));
    CHECK(contexts_equivalent(a, b));
  }
  SUBCASE("swapped register order with a correspondingly permuted state") {
    StableContext a = declare({}, {{"x", VarType::Qubit},
                                   {"y", VarType::Qubit}});
    a.qubits = {"x", "y"};
    a.rho = bell_state();
    StableContext b = a;
    b.qubits = {"y", "x"};
    const CMat pi = head_permutation(a.qubits, b.qubits);
    b.rho = pi * a.rho * pi.adjoint();
    const ProcessState sa = make_state(make_nil(), Context::single(a));
    const ProcessState sb = make_state(make_nil(), Context::single(b));
    CHECK(canonical_key(sa) == canonical_key(sb));
  }
  SUBCASE("different classical values give different keys") {
    StableContext a = declare({}, {{"k", VarType::Nat}});
    const StableContext b = set_classical(a, "k", 1);
    CHECK(canonical_key(make_state(make_nil(), Context::single(a))) !=
          canonical_key(make_state(make_nil(), Context::single(b))));
  }
}

TEST_CASE("exploring an alpha-renamed program gives the same keys") {
  const Program p1 = parse_program(
      "main := [ x:Qubit . ( c!0 . end || c?x . end ) \\ {c} ; nil ]");
  const Program p2 = parse_program(
      "main := [ better_name:Qubit . ( c!0 . end || c?better_name . end ) "
      "\\ {c} ; nil ]");
  const ProcessGraph g1 = explore(p1, EnvPolicy{}, ExploreLimits{});
  const ProcessGraph g2 = explore(p2, EnvPolicy{}, ExploreLimits{});
  REQUIRE(g1.size() == g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(canonical_key(g1.states[i]) == canonical_key(g2.states[i]));
  }
}

TEST_CASE("recursion folds into a finite cyclic graph") {
  const Program prog = parse_program(R"(
    A := [ x:Qubit . ( c!0 . end || c?x . end ) \ {c} ]
    Alice := [ a:Qubit . A[a] ; fill!a . end ] ; Alice
    main := Alice
  )");
  EnvPolicy policy;
  policy.allow_open_actions = true;
  const ProcessGraph g = explore(prog, policy, ExploreLimits{});
  CHECK(!g.truncated);
  CHECK(g.size() < 32);
  bool has_back_edge = false;
  for (const auto& e : g.edges) {
    if (e.to <= e.from) has_back_edge = true;
  }
  CHECK(has_back_edge);
}

TEST_CASE("folding soundness: equal keys imply equivalent contexts") {
  const Program prog = load_corpus_program("teleport");
  const ProcessGraph g = explore(prog, EnvPolicy{}, ExploreLimits{});
  // Re-deriving each state's key must find it in the graph, and exploring
  // each stored state must reproduce its stored edge set.
  std::map<std::string, std::size_t> keys;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto [it, fresh] = keys.emplace(canonical_key(g.states[i]), i);
    CHECK(fresh);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto ts = transitions(g.states[i], EnvPolicy{}, prog);
    std::set<std::pair<std::string, std::size_t>> regenerated;
    for (const auto& t : ts) {
      const std::size_t to = keys.at(canonical_key(t.target));
      regenerated.emplace(label_to_string(t.label), to);
      // Key equality must be backed by genuine context equivalence.
      const auto& folded = g.states[to];
      REQUIRE(t.target.ctx.branches().size() ==
              folded.ctx.branches().size());
      if (t.target.ctx.stable()) {
        CHECK(contexts_equivalent(t.target.ctx.stable_ref(),
                                  folded.ctx.stable_ref()));
      }
    }
    std::set<std::pair<std::string, std::size_t>> stored;
    for (auto e : g.out[i]) {
      stored.emplace(label_to_string(g.edges[e].label), g.edges[e].to);
    }
    CHECK(regenerated == stored);
  }
}

TEST_CASE("sampling is reproducible") {
  const Program prog = load_corpus_program("teleport");
  const Trace a = sample_run(prog, EnvPolicy{}, 42, 1000);
  const Trace b = sample_run(prog, EnvPolicy{}, 42, 1000);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(label_to_string(a.steps[i].label) ==
          label_to_string(b.steps[i].label));
    CHECK(canonical_key(a.steps[i].state) == canonical_key(b.steps[i].state));
  }
  CHECK(!a.cutoff);
  const Trace c = sample_run(prog, EnvPolicy{}, 43, 1000);
  // Different seeds may legitimately coincide on this graph; the trace
  // length is still bounded and terminal.
  CHECK(!c.cutoff);
}

TEST_CASE("dot export carries the label vocabulary") {
  const Program prog = parse_program("main := end");
  const ProcessGraph g = explore(prog, EnvPolicy{}, ExploreLimits{});
  const std::string dot = export_dot(g);
  CHECK(dot.find("digraph qpalg") != std::string::npos);
  CHECK(dot.find("label=\"delta\"") != std::string::npos);
  CHECK(dot.find("s0") != std::string::npos);

  const Program measured = parse_program(R"(
    main := [ x:Qubit, r:Nat .
      ( c!0 . end || c?x . end ) \ {c} ;
      H[x] . ( h!MStd1[x] . end || h?r . end ) \ {h} ; nil ]
  )");
  const std::string dot2 =
      export_dot(explore(measured, EnvPolicy{}, ExploreLimits{}));
  CHECK(dot2.find("p=0.5000") != std::string::npos);
  CHECK(dot2.find("label=\"tau\"") != std::string::npos);
}

TEST_CASE("json export round-trips through the loader") {
  const Program prog = load_corpus_program("buildepr");
  const ProcessGraph g = explore(prog, EnvPolicy{}, ExploreLimits{});
  const ProcessGraph back = graph_from_json(export_json(g));
  CHECK(graphs_equal(g, back));
}

TEST_CASE("state limit sets the truncation flag") {
  const Program prog = load_corpus_program("buildepr");
  ExploreLimits limits;
  limits.max_states = 1;
  const ProcessGraph g = explore(prog, EnvPolicy{}, limits);
  CHECK(g.truncated);
  CHECK(g.size() == 1);
}

TEST_CASE("unfold depth limit truncates runaway recursion") {
  // Growing recursion: every unfold spawns a fresh parallel component, so
  // states keep growing and only the unfold cap stops exploration.
  const Program prog = parse_program(R"(
    Grow := ( end || Grow )
    main := Grow
  )");
  ExploreLimits limits;
  limits.max_unfold_depth = 8;
  const ProcessGraph g = explore(prog, EnvPolicy{}, limits);
  CHECK(g.truncated);
  CHECK(g.size() < 64);
}

TEST_CASE("terminal_event_probability") {
  const Program prog = parse_program(R"(
    main := [ x:Qubit, r:Nat .
      ( c!0 . end || c?x . end ) \ {c} ;
      H[x] . ( h!MStd1[x] . end || h?r . end ) \ {h} ; nil ]
  )");
  const ProcessGraph g = explore(prog, EnvPolicy{}, ExploreLimits{});
  const double p1 = terminal_event_probability(g, [](const ProcessState& s) {
    return s.ctx.stable() && s.ctx.stable_ref().classical.count("r") &&
           s.ctx.stable_ref().classical.at("r") == 1;
  });
  CHECK(p1 == doctest::Approx(0.5).epsilon(1e-12));
}

}  // namespace
}  // namespace qpalg

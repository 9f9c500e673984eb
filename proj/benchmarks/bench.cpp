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

#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "qpalg/bisim.hpp"
#include "qpalg/corpus.hpp"
#include "qpalg/parser.hpp"

namespace qpalg {
namespace {

std::vector<std::string> register_names(std::size_t n) {
  std::vector<std::string> q;
  for (std::size_t i = 0; i < n; ++i) q.push_back("q" + std::to_string(i));
  return q;
}

CMat pure_zero(std::size_t n) {
  CMat rho = basis_state(0);
  for (std::size_t i = 1; i < n; ++i) rho = kron(rho, basis_state(0));
  return rho;
}

void BM_ApplySuperop(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  const auto q = register_names(n);
  const CMat rho = pure_zero(n);
  const CMat h = get_unitary("H").matrix;
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_superop(h, rho, q, {q[n / 2]}));
  }
}
BENCHMARK(BM_ApplySuperop)->Arg(2)->Arg(4)->Arg(6);

void BM_PartialTrace(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  const auto q = register_names(n);
  const CMat rho = pure_zero(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(partial_trace(rho, q, {q[0], q[n - 1]}));
  }
}
BENCHMARK(BM_PartialTrace)->Arg(4)->Arg(6);

void BM_ParseBB84(benchmark::State& state) {
  std::ifstream in(corpus_path("bb84"));
  std::ostringstream text;
  text << in.rdbuf();
  const std::string source = text.str();
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_program(source));
  }
}
BENCHMARK(BM_ParseBB84);

void BM_CanonicalKey(benchmark::State& state) {
  const Program prog = load_corpus_program("teleport");
  const ProcessGraph g = explore(prog, EnvPolicy{}, ExploreLimits{});
  const ProcessState& mid = g.states[g.size() / 2];
  for (auto _ : state) {
    benchmark::DoNotOptimize(canonical_key(mid));
  }
}
BENCHMARK(BM_CanonicalKey);

void BM_ExploreTeleport(benchmark::State& state) {
  const Program prog = load_corpus_program("teleport");
  for (auto _ : state) {
    benchmark::DoNotOptimize(explore(prog, EnvPolicy{}, ExploreLimits{}));
  }
}
BENCHMARK(BM_ExploreTeleport);

void BM_ExploreBB84(benchmark::State& state) {
  const Program prog = load_corpus_program("bb84");
  ExploreLimits limits;
  limits.max_states = 20000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explore(prog, EnvPolicy{}, limits));
  }
}
BENCHMARK(BM_ExploreBB84)->Unit(benchmark::kMillisecond);

void BM_BisimTeleportVsDirect(benchmark::State& state) {
  const Program prog = load_corpus_program("teleport");
  const CMat psi = ket_state(1, 1);
  const ProcessGraph tg = explore_state(teleport_initial(prog, psi), prog,
                                        EnvPolicy{}, ExploreLimits{});
  StableContext direct;
  EnvNode frame;
  frame.frame = {{"z", VarType::Qubit}};
  direct.stack = {frame};
  direct.qubits = {"z"};
  direct.rho = psi;
  Program empty;
  empty.main = make_end();
  const ProcessGraph ig =
      explore_state(make_state(make_end(), Context::single(direct)), empty,
                    EnvPolicy{}, ExploreLimits{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_equivalence(tg, ig));
  }
}
BENCHMARK(BM_BisimTeleportVsDirect);

}  // namespace
}  // namespace qpalg

BENCHMARK_MAIN();

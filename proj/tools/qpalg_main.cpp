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

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qpalg/bisim.hpp"
#include "qpalg/corpus.hpp"
#include "qpalg/parser.hpp"
#include "qpalg/unparse.hpp"

namespace {

using namespace qpalg;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitTruncated = 2;
constexpr int kExitInequivalent = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Syntax, "cannot open " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

struct CommonOpts {
  std::uint64_t seed = 0;
  std::size_t max_steps = 10000;
  std::size_t max_states = 10000;
  double tol = kEpsMat;
  std::string format = "dot";
  std::string out_path;
  bool open_actions = false;
  std::string input_domain = "0,1";
  bool trace = false;
};

EnvPolicy make_policy(const CommonOpts& opts) {
  EnvPolicy policy;
  policy.allow_open_actions = opts.open_actions;
  policy.input_domain.clear();
  std::stringstream ss(opts.input_domain);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) policy.input_domain.insert(std::stoull(item));
  }
  if (policy.input_domain.empty()) policy.input_domain = {0, 1};
  return policy;
}

void write_output(const CommonOpts& opts, const std::string& text) {
  if (opts.out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
  } else {
    std::ofstream out(opts.out_path);
    out << text;
  }
}

void print_context_delta(const StableContext& before,
                         const StableContext& after) {
  for (const auto& [name, value] : after.classical) {
    auto it = before.classical.find(name);
    if (it == before.classical.end() || it->second != value) {
      std::cout << "  " << name << " = " << value << "\n";
    }
  }
  for (const auto& q : after.qubits) {
    if (std::find(before.qubits.begin(), before.qubits.end(), q) ==
        before.qubits.end()) {
      std::cout << "  attached " << q << "\n";
    }
  }
  for (const auto& q : before.qubits) {
    if (std::find(after.qubits.begin(), after.qubits.end(), q) ==
        after.qubits.end()) {
      std::cout << "  released " << q << "\n";
    }
  }
}

int cmd_parse(const std::string& file) {
  const Program prog = parse_program(read_file(file));
  std::cout << unparse_program(prog);
  return kExitOk;
}

int cmd_run(const std::string& file, const CommonOpts& opts) {
  const Program prog = parse_program(read_file(file));
  const EnvPolicy policy = make_policy(opts);
  const Trace trace = sample_run(prog, policy, opts.seed, opts.max_steps);
  const ProcessState* prev = &trace.initial;
  std::size_t step = 0;
  for (const auto& [label, state] : trace.steps) {
    std::cout << step++ << ": " << label_to_string(label) << "\n";
    if (prev->ctx.stable() && state.ctx.stable()) {
      print_context_delta(prev->ctx.stable_ref(), state.ctx.stable_ref());
    }
    if (opts.trace) {
      std::cout << "  state: " << unparse(*state.term) << "\n";
      std::cout << "  context: " << context_to_json(state.ctx) << "\n";
    }
    prev = &state;
  }
  const ProcessState& last =
      trace.steps.empty() ? trace.initial : trace.steps.back().state;
  std::cout << (trace.cutoff ? "cutoff after " : "terminated after ")
            << trace.steps.size() << " step(s)\n";
  std::cout << "final term: " << unparse(*last.term) << "\n";
  std::cout << "final context: " << context_to_json(last.ctx) << "\n";
  return kExitOk;
}

int cmd_graph(const std::string& file, const CommonOpts& opts) {
  const Program prog = parse_program(read_file(file));
  const EnvPolicy policy = make_policy(opts);
  ExploreLimits limits;
  limits.max_states = opts.max_states;
  const ProcessGraph graph = explore(prog, policy, limits);
  if (opts.format == "json") {
    write_output(opts, export_json(graph));
  } else if (opts.format == "text") {
    std::ostringstream out;
    out << graph.size() << " state(s), " << graph.edges.size()
        << " edge(s), initial s" << graph.initial
        << (graph.truncated ? ", truncated" : "") << "\n";
    write_output(opts, out.str());
  } else {
    write_output(opts, export_dot(graph));
  }
  if (graph.truncated) {
    std::cerr << "warning: exploration truncated at " << opts.max_states
              << " states\n";
    return kExitTruncated;
  }
  return kExitOk;
}

int cmd_bisim(const std::string& file_a, const std::string& file_b,
              const CommonOpts& opts) {
  const Program prog_a = parse_program(read_file(file_a));
  const Program prog_b = parse_program(read_file(file_b));
  const EnvPolicy policy = make_policy(opts);
  ExploreLimits limits;
  limits.max_states = opts.max_states;
  const ProcessGraph ga = explore(prog_a, policy, limits);
  const ProcessGraph gb = explore(prog_b, policy, limits);
  if (ga.truncated || gb.truncated) {
    std::cerr << "error: exploration truncated; bisimulation needs complete "
                 "graphs\n";
    return kExitTruncated;
  }
  const Verdict verdict = check_equivalence(ga, gb, opts.tol);
  std::cout << verdict_to_json(verdict) << "\n";
  return verdict.equivalent ? kExitOk : kExitInequivalent;
}

CMat reduced_of_terminal(const ProcessGraph& g, std::size_t idx,
                         const std::string& qubit) {
  return qubit_reduced_state(g.states[idx].ctx.stable_ref(), qubit);
}

int corpus_buildepr() {
  const Program prog = load_corpus_program("buildepr");
  const ProcessGraph g = explore(prog, EnvPolicy{}, ExploreLimits{});
  const auto terminals = terminal_states(g);
  const CMat expect = oracle_build_epr();
  bool ok = !terminals.empty() && !g.truncated;
  for (auto t : terminals) {
    const auto& ctx = g.states[t].ctx.stable_ref();
    if (ctx.qubits.size() != 2) {
      ok = false;
      continue;
    }
    // Compare in a fixed register order.
    std::vector<std::string> order = ctx.qubits;
    std::sort(order.begin(), order.end());
    const CMat perm = head_permutation(ctx.qubits, order);
    const CMat rho = perm * ctx.rho * perm.adjoint();
    ok = ok && (rho - expect).cwiseAbs().maxCoeff() <= kEpsMat;
    for (const auto& q : ctx.qubits) {
      const CMat reduced = qubit_reduced_state(ctx, q);
      ok = ok &&
           (reduced - 0.5 * identity_qubits(1)).cwiseAbs().maxCoeff() <=
               kEpsMat;
    }
  }
  std::cout << "buildepr: " << g.size() << " states, "
            << terminals.size() << " terminal(s), Bell state "
            << (ok ? "reproduced" : "NOT reproduced") << "\n";
  return ok ? kExitOk : kExitError;
}

int corpus_teleport() {
  const Program prog = load_corpus_program("teleport");
  bool ok = true;
  const std::vector<CMat> inputs = {ket_state(1, 0), ket_state(0, 1),
                                    ket_state(1, 1),
                                    ket_state(std::sqrt(1.0 / 3.0),
                                              std::sqrt(2.0 / 3.0))};
  for (const auto& psi : inputs) {
    const ProcessGraph g =
        explore_state(teleport_initial(prog, psi), prog, EnvPolicy{},
                      ExploreLimits{});
    std::size_t prob_edges = 0;
    for (const auto& e : g.edges) {
      if (const auto* p = std::get_if<TLProb>(&e.label)) {
        ++prob_edges;
        ok = ok && std::abs(p->p - 0.25) <= kEpsMat;
      }
    }
    ok = ok && prob_edges == 4 && !g.truncated;
    for (auto t : terminal_states(g)) {
      const auto& ctx = g.states[t].ctx.stable_ref();
      ok = ok && ctx.qubits.size() == 1;
      if (ctx.qubits.size() == 1) {
        const CMat zstate = reduced_of_terminal(g, t, ctx.qubits[0]);
        ok = ok && (zstate - psi).cwiseAbs().maxCoeff() <= kEpsMat;
      }
    }
  }
  std::cout << "teleport: input state recovered on Bob's qubit for all "
            << inputs.size() << " inputs: " << (ok ? "yes" : "NO") << "\n";
  return ok ? kExitOk : kExitError;
}

int corpus_bb84() {
  const Program prog = load_corpus_program("bb84");
  ExploreLimits limits;
  limits.max_states = 20000;
  const ProcessGraph g = explore(prog, EnvPolicy{}, limits);
  bool ok = !g.truncated;
  auto kept = [](const ProcessState& s) {
    if (!s.ctx.stable()) return false;
    const auto& c = s.ctx.stable_ref();
    return c.classical.count("kA") != 0 && c.classical.count("kB") != 0;
  };
  const double p_keep = terminal_event_probability(g, kept);
  ok = ok && std::abs(p_keep - 0.5) <= kEpsMat;
  for (auto t : terminal_states(g)) {
    const auto& c = g.states[t].ctx.stable_ref();
    auto a = c.classical.find("kA");
    auto b = c.classical.find("kB");
    if (a != c.classical.end() && b != c.classical.end()) {
      ok = ok && a->second == b->second;
    }
  }
  std::cout << "bb84: " << g.size()
            << " states, P(bases agree) = " << p_keep
            << ", kept bits always equal: " << (ok ? "yes" : "NO") << "\n";
  return ok ? kExitOk : kExitError;
}

bool term_contains_invoke(const Process& p, const std::string& name);

int corpus_eve(const std::string& which) {
  const Program prog = load_corpus_program(which);
  ExploreLimits limits;
  const ProcessGraph g = explore(prog, EnvPolicy{}, limits);
  bool has_flaw_path = false;
  bool has_direct_path = false;
  bool cyclic = false;
  for (const auto& e : g.edges) {
    if (e.to <= e.from) cyclic = true;
  }
  for (const auto& s : g.states) {
    if (term_contains_invoke(*s.term, "Flaw")) has_flaw_path = true;
  }
  if (which == "eve_some") {
    // Both conditional branches must be explored: some state resolves into
    // an interception continuation and into a direct one.
    for (std::size_t i = 0; i < g.size(); ++i) {
      bool flaw_succ = false, direct_succ = false;
      for (auto e : g.out[i]) {
        if (!std::holds_alternative<TLTau>(g.edges[e].label)) continue;
        if (term_contains_invoke(*g.states[g.edges[e].to].term, "Flaw")) {
          flaw_succ = true;
        } else {
          direct_succ = true;
        }
      }
      if (flaw_succ && direct_succ) has_direct_path = true;
    }
  } else {
    has_direct_path = true;  // not applicable
  }
  const bool ok = !g.truncated && cyclic && has_flaw_path && has_direct_path;
  std::cout << which << ": " << g.size() << " states, recursion folds: "
            << (cyclic ? "yes" : "NO") << ", interception path: "
            << (has_flaw_path ? "yes" : "NO");
  if (which == "eve_some") {
    std::cout << ", direct path: " << (has_direct_path ? "yes" : "NO");
  }
  std::cout << "\n";
  return ok ? kExitOk : kExitError;
}

int cmd_corpus(const std::string& name) {
  if (name == "buildepr") return corpus_buildepr();
  if (name == "teleport") return corpus_teleport();
  if (name == "bb84") return corpus_bb84();
  if (name == "eve_all" || name == "eve_some") return corpus_eve(name);
  if (name == "all") {
    int rc = corpus_buildepr();
    rc = std::max(rc, corpus_teleport());
    rc = std::max(rc, corpus_bb84());
    rc = std::max(rc, corpus_eve("eve_all"));
    rc = std::max(rc, corpus_eve("eve_some"));
    return rc;
  }
  std::cerr << "error: unknown corpus protocol '" << name << "' (expected ";
  for (const auto& n : corpus_names()) std::cerr << n << " ";
  std::cerr << "or all)\n";
  return kExitError;
}

bool term_contains_invoke(const Process& p, const std::string& name) {
  bool found = false;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Prefix>) {
          found = term_contains_invoke(*n.rest, name);
        } else if constexpr (std::is_same_v<T, Seq> || std::is_same_v<T, Par>) {
          found = term_contains_invoke(*n.left, name) ||
                  term_contains_invoke(*n.right, name);
        } else if constexpr (std::is_same_v<T, Restrict> ||
                             std::is_same_v<T, Scope>) {
          found = term_contains_invoke(*n.body, name);
        } else if constexpr (std::is_same_v<T, Cond>) {
          for (const auto& [c, q] : n.branches) {
            found = found || term_contains_invoke(*q, name);
          }
        } else if constexpr (std::is_same_v<T, Decl>) {
          found = term_contains_invoke(*n.body, name);
        } else if constexpr (std::is_same_v<T, Invoke>) {
          found = n.name == name;
        }
      },
      p.node);
  return found;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qpalg: parse, execute and compare quantum process terms"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string file, file_b, corpus_name;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", opts.seed, "RNG seed");
    cmd->add_option("--max-steps", opts.max_steps, "run step limit");
    cmd->add_option("--max-states", opts.max_states, "exploration state cap");
    cmd->add_option("--tol", opts.tol, "matrix comparison tolerance");
    cmd->add_option("--format", opts.format, "dot|json|text");
    cmd->add_option("--out", opts.out_path, "output file (default stdout)");
    cmd->add_flag("--open-actions", opts.open_actions,
                  "enable unmatched communications with the environment");
    cmd->add_option("--input-domain", opts.input_domain,
                    "values for open classical receives, e.g. 0,1");
    cmd->add_flag("--trace", opts.trace, "print full states along a run");
  };

  auto* parse_cmd = app.add_subcommand("parse", "parse and scope-check");
  parse_cmd->add_option("file", file)->required();
  auto* run_cmd = app.add_subcommand("run", "sample one execution");
  run_cmd->add_option("file", file)->required();
  add_common(run_cmd);
  auto* graph_cmd = app.add_subcommand("graph", "explore the process graph");
  graph_cmd->add_option("file", file)->required();
  add_common(graph_cmd);
  auto* bisim_cmd =
      app.add_subcommand("bisim", "decide probabilistic branching bisimilarity");
  bisim_cmd->add_option("fileA", file)->required();
  bisim_cmd->add_option("fileB", file_b)->required();
  add_common(bisim_cmd);
  auto* corpus_cmd = app.add_subcommand("corpus", "run a bundled protocol");
  corpus_cmd->add_option("name", corpus_name)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse_cmd->parsed()) return cmd_parse(file);
    if (run_cmd->parsed()) return cmd_run(file, opts);
    if (graph_cmd->parsed()) return cmd_graph(file, opts);
    if (bisim_cmd->parsed()) return cmd_bisim(file, file_b, opts);
    if (corpus_cmd->parsed()) return cmd_corpus(corpus_name);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

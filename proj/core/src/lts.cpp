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

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "qpalg/parser.hpp"
#include "qpalg/unparse.hpp"

namespace qpalg {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical keys.

namespace {

std::int64_t quantize(double v) {
  return std::llround(v / kEpsMat);
}

/// Renames stack-declared variables through a fixed map and term-local
/// binders through a scoped counter, so alpha-equivalent terms print
/// identically.
class CanonicalNamer : public VarNamer {
 public:
  explicit CanonicalNamer(const std::map<std::string, std::string>& base)
      : base_(base) {}

  std::string var(const std::string& name) override {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto found = it->find(name);
      if (found != it->end()) return found->second;
    }
    auto found = base_.find(name);
    if (found != base_.end()) return found->second;
    return name;
  }

  void enter_binders(const std::vector<Binding>& bs) override {
    std::map<std::string, std::string> scope;
    for (const auto& b : bs) {
      scope[b.name] = "b" + std::to_string(next_++);
    }
    scopes_.push_back(std::move(scope));
  }

  void exit_binders(const std::vector<Binding>&) override {
    scopes_.pop_back();
  }

 private:
  const std::map<std::string, std::string>& base_;
  std::vector<std::map<std::string, std::string>> scopes_;
  std::size_t next_ = 0;
};

void canonical_stack(const EnvStack& s, std::map<std::string, std::string>& ids,
                     std::string& out) {
  out += "[";
  for (const auto& node : s) {
    if (node.is_split) {
      out += "(";
      canonical_stack(node.left, ids, out);
      out += "|";
      canonical_stack(node.right, ids, out);
      out += ")";
    } else {
      out += "{";
      for (const auto& b : node.frame) {
        const std::string id = "v" + std::to_string(ids.size());
        ids.emplace(b.name, id);
        out += ids[b.name];
        out += b.type == VarType::Nat ? ":N" : ":Q";
        out += ",";
      }
      out += "}";
    }
  }
  out += "]";
}

std::string canonical_stable(const ProcessPtr& term, const StableContext& c) {
  std::map<std::string, std::string> ids;
  std::string stack_str;
  canonical_stack(c.stack, ids, stack_str);

  CanonicalNamer namer(ids);
  const std::string term_str = unparse(*term, namer);

  // Register order is canonicalized by sorting on canonical ids.
  std::vector<std::size_t> order(c.qubits.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto id_num = [&](const std::string& name) {
    auto it = ids.find(name);
    return it == ids.end() ? name : it->second;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ia = id_num(c.qubits[a]);
    const auto& ib = id_num(c.qubits[b]);
    if (ia.size() != ib.size()) return ia.size() < ib.size();
    return ia < ib;
  });
  std::string q_str = "q[";
  CMat rho = c.rho;
  if (!c.qubits.empty()) {
    std::vector<std::string> targets;
    targets.reserve(order.size());
    for (auto idx : order) targets.push_back(c.qubits[idx]);
    const CMat perm = head_permutation(c.qubits, targets);
    rho = perm * c.rho * perm.adjoint();
    for (const auto& t : targets) {
      q_str += id_num(t);
      q_str += ",";
    }
  }
  q_str += "]";

  std::string rho_str = "r[";
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      rho_str += std::to_string(quantize(rho(i, j).real()));
      rho_str += ":";
      rho_str += std::to_string(quantize(rho(i, j).imag()));
      rho_str += ",";
    }
  }
  rho_str += "]";

  std::string f_str = "f[";
  std::vector<std::pair<std::string, std::uint64_t>> values;
  for (const auto& [name, value] : c.classical) {
    values.emplace_back(id_num(name), value);
  }
  std::sort(values.begin(), values.end());
  for (const auto& [id, value] : values) {
    f_str += id + "=" + std::to_string(value) + ",";
  }
  f_str += "]";

  return "t:" + term_str + ";s:" + stack_str + ";" + q_str + ";" + rho_str +
         ";" + f_str;
}

}  // namespace

std::string canonical_key(const ProcessState& s) {
  if (s.ctx.stable()) {
    return canonical_stable(s.term, s.ctx.stable_ref());
  }
  std::vector<std::string> parts;
  for (const auto& [p, branch] : s.ctx.branches()) {
    parts.push_back("p" + std::to_string(std::llround(p / kEpsProb)) + ":" +
                    canonical_stable(s.term, branch));
  }
  std::sort(parts.begin(), parts.end());
  std::string out = "mix{";
  for (const auto& part : parts) {
    out += part;
    out += ";";
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Exploration.

ProcessGraph explore_state(const ProcessState& initial, const Program& program,
                           const EnvPolicy& policy,
                           const ExploreLimits& limits) {
  ProcessGraph g;
  g.limits = limits;
  EnvPolicy effective = policy;
  effective.max_qubits = std::min(policy.max_qubits, limits.max_qubits);

  std::unordered_map<std::string, std::size_t> index_of;
  std::vector<std::map<std::string, std::size_t>> unfolds;

  ProcessState start = make_state(initial.term, initial.ctx);
  g.states.push_back(start);
  g.out.emplace_back();
  index_of[canonical_key(start)] = 0;
  unfolds.push_back({});

  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    std::vector<Transition> ts;
    try {
      ts = transitions(g.states[i], effective, program);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (while exploring " +
                                unparse(*g.states[i].term) + ")");
    }
    std::set<std::pair<std::string, std::size_t>> seen_edges;
    auto edge_key = [](const TransitionLabel& l) {
      if (const auto* p = std::get_if<TLProb>(&l)) {
        return "p:" + std::to_string(std::llround(p->p / kEpsProb));
      }
      return label_to_string(l);
    };
    for (const auto& t : ts) {
      const std::string key = canonical_key(t.target);
      auto found = index_of.find(key);
      std::size_t target;
      if (found == index_of.end()) {
        if (g.states.size() >= limits.max_states) {
          g.truncated = true;
          continue;
        }
        auto depth = unfolds[i];
        if (t.unfolded) {
          auto& d = depth[*t.unfolded];
          if (++d > limits.max_unfold_depth) {
            g.truncated = true;
            continue;
          }
        }
        target = g.states.size();
        g.states.push_back(t.target);
        g.out.emplace_back();
        unfolds.push_back(std::move(depth));
        index_of.emplace(key, target);
        queue.push_back(target);
      } else {
        target = found->second;
      }
      if (seen_edges.emplace(edge_key(t.label), target).second) {
        g.out[i].push_back(g.edges.size());
        g.edges.push_back({i, t.label, target});
      }
    }
  }
  return g;
}

ProcessGraph explore(const Program& program, const EnvPolicy& policy,
                     const ExploreLimits& limits) {
  return explore_state(make_state(program.main, Context()), program, policy,
                       limits);
}

// ---------------------------------------------------------------------------
// Sampling.

namespace {

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * (1.0 / 9007199254740992.0);
}

Trace run_from(const ProcessState& initial, const Program& program,
               const EnvPolicy& policy, std::uint64_t seed,
               std::size_t max_steps) {
  Trace trace;
  trace.seed = seed;
  trace.initial = make_state(initial.term, initial.ctx);
  std::mt19937_64 rng(seed);
  ProcessState current = trace.initial;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const auto ts = transitions(current, policy, program);
    if (ts.empty()) return trace;
    std::size_t pick = 0;
    if (std::holds_alternative<TLProb>(ts.front().label)) {
      const double u = uniform01(rng);
      double acc = 0.0;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        acc += std::get<TLProb>(ts[k].label).p;
        if (u < acc || k + 1 == ts.size()) {
          pick = k;
          break;
        }
      }
    } else if (ts.size() > 1) {
      pick = std::size_t(uniform01(rng) * double(ts.size()));
      if (pick >= ts.size()) pick = ts.size() - 1;
    }
    trace.steps.push_back({ts[pick].label, ts[pick].target});
    current = ts[pick].target;
  }
  trace.cutoff = !transitions(current, policy, program).empty();
  return trace;
}

}  // namespace

Trace sample_run(const Program& program, const EnvPolicy& policy,
                 std::uint64_t seed, std::size_t max_steps) {
  return run_from(make_state(program.main, Context()), program, policy, seed,
                  max_steps);
}

Trace sample_run_state(const ProcessState& initial, const Program& program,
                       const EnvPolicy& policy, std::uint64_t seed,
                       std::size_t max_steps) {
  return run_from(initial, program, policy, seed, max_steps);
}

// ---------------------------------------------------------------------------
// Export.

std::vector<std::size_t> terminal_states(const ProcessGraph& g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.out[i].empty()) out.push_back(i);
  }
  return out;
}

std::string export_dot(const ProcessGraph& g) {
  std::ostringstream out;
  out << "digraph qpalg {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    out << "  s" << i;
    if (i == g.initial) {
      out << " [shape=doublecircle]";
    } else if (g.out[i].empty()) {
      out << " [shape=box]";
    }
    out << ";\n";
  }
  for (const auto& e : g.edges) {
    out << "  s" << e.from << " -> s" << e.to << " [label=\""
        << label_to_string(e.label) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

namespace {

json label_to_json(const TransitionLabel& l) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TLTau>) {
          return json{{"kind", "tau"}};
        } else if constexpr (std::is_same_v<T, TLDelta>) {
          return json{{"kind", "delta"}};
        } else if constexpr (std::is_same_v<T, TLProb>) {
          return json{{"kind", "prob"}, {"p", v.p}};
        } else if constexpr (std::is_same_v<T, TLSendValue>) {
          return json{{"kind", "send"}, {"gate", v.gate}, {"value", v.value}};
        } else if constexpr (std::is_same_v<T, TLSendQubit>) {
          return json{{"kind", "send_qubit"}, {"gate", v.gate}, {"qubit", v.qubit}};
        } else if constexpr (std::is_same_v<T, TLRecvValue>) {
          return json{{"kind", "recv"}, {"gate", v.gate}, {"value", v.value}};
        } else if constexpr (std::is_same_v<T, TLRecvQubit>) {
          return json{{"kind", "recv_qubit"}, {"gate", v.gate}, {"qubit", v.qubit}};
        }
      },
      l);
}

TransitionLabel label_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tau") return TLTau{};
  if (kind == "delta") return TLDelta{};
  if (kind == "prob") return TLProb{j.at("p").get<double>()};
  if (kind == "send") {
    return TLSendValue{j.at("gate").get<std::string>(),
                       j.at("value").get<std::uint64_t>()};
  }
  if (kind == "send_qubit") {
    return TLSendQubit{j.at("gate").get<std::string>(),
                       j.at("qubit").get<std::string>()};
  }
  if (kind == "recv") {
    return TLRecvValue{j.at("gate").get<std::string>(),
                       j.at("value").get<std::uint64_t>()};
  }
  if (kind == "recv_qubit") {
    return TLRecvQubit{j.at("gate").get<std::string>(),
                       j.at("qubit").get<std::string>()};
  }
  throw Error(ErrorKind::Syntax, "unknown edge label kind " + kind);
}

}  // namespace

std::string export_json(const ProcessGraph& g) {
  json states = json::array();
  for (const auto& s : g.states) {
    states.push_back({{"term", unparse(*s.term)},
                      {"context", json::parse(context_to_json(s.ctx))}});
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    edges.push_back(
        {{"from", e.from}, {"label", label_to_json(e.label)}, {"to", e.to}});
  }
  return json{{"initial", g.initial},
              {"truncated", g.truncated},
              {"limits",
               {{"max_states", g.limits.max_states},
                {"max_qubits", g.limits.max_qubits},
                {"max_unfold_depth", g.limits.max_unfold_depth}}},
              {"states", states},
              {"edges", edges}}
      .dump(2);
}

ProcessGraph graph_from_json(const std::string& text) {
  const json j = json::parse(text);
  ProcessGraph g;
  g.initial = j.at("initial").get<std::size_t>();
  g.truncated = j.at("truncated").get<bool>();
  if (j.contains("limits")) {
    g.limits.max_states = j["limits"].at("max_states").get<std::size_t>();
    g.limits.max_qubits = j["limits"].at("max_qubits").get<std::size_t>();
    g.limits.max_unfold_depth =
        j["limits"].at("max_unfold_depth").get<std::size_t>();
  }
  for (const auto& s : j.at("states")) {
    ProcessState state;
    state.term = parse_process(s.at("term").get<std::string>());
    state.ctx = context_from_json(s.at("context").dump());
    g.states.push_back(std::move(state));
    g.out.emplace_back();
  }
  for (const auto& e : j.at("edges")) {
    const std::size_t from = e.at("from").get<std::size_t>();
    g.out[from].push_back(g.edges.size());
    g.edges.push_back(
        {from, label_from_json(e.at("label")), e.at("to").get<std::size_t>()});
  }
  return g;
}

namespace {

bool contexts_match_exact(const Context& a, const Context& b) {
  if (a.stable() != b.stable()) return false;
  if (a.branches().size() != b.branches().size()) return false;
  for (std::size_t i = 0; i < a.branches().size(); ++i) {
    const auto& [pa, ca] = a.branches()[i];
    const auto& [pb, cb] = b.branches()[i];
    if (std::abs(pa - pb) > 1e-12) return false;
    if (ca.qubits != cb.qubits) return false;
    if (ca.classical != cb.classical) return false;
    if (stack_bindings(ca.stack) != stack_bindings(cb.stack)) return false;
    if (ca.rho.rows() != cb.rho.rows()) return false;
    if ((ca.rho - cb.rho).cwiseAbs().maxCoeff() > 1e-12) return false;
  }
  return true;
}

}  // namespace

bool graphs_equal(const ProcessGraph& a, const ProcessGraph& b) {
  if (a.initial != b.initial || a.truncated != b.truncated ||
      a.size() != b.size() || a.edges.size() != b.edges.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!process_equal(a.states[i].term, b.states[i].term)) return false;
    if (!contexts_match_exact(a.states[i].ctx, b.states[i].ctx)) return false;
  }
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    if (a.edges[i].from != b.edges[i].from || a.edges[i].to != b.edges[i].to ||
        label_to_string(a.edges[i].label) !=
            label_to_string(b.edges[i].label)) {
      return false;
    }
  }
  return true;
}

double terminal_event_probability(
    const ProcessGraph& g,
    const std::function<bool(const ProcessState&)>& pred) {
  std::vector<int> mark(g.size(), 0);  // 0 new, 1 visiting, 2 done
  std::vector<double> memo(g.size(), 0.0);
  std::function<double(std::size_t)> visit = [&](std::size_t i) -> double {
    if (mark[i] == 2) return memo[i];
    if (mark[i] == 1) {
      throw Error(ErrorKind::BadDistribution,
                  "event probability undefined on a cyclic graph");
    }
    mark[i] = 1;
    double value = 0.0;
    if (g.out[i].empty()) {
      value = pred(g.states[i]) ? 1.0 : 0.0;
    } else if (std::holds_alternative<TLProb>(g.edges[g.out[i][0]].label)) {
      for (auto e : g.out[i]) {
        value += std::get<TLProb>(g.edges[e].label).p * visit(g.edges[e].to);
      }
    } else {
      value = visit(g.edges[g.out[i][0]].to);
      for (std::size_t k = 1; k < g.out[i].size(); ++k) {
        const double other = visit(g.edges[g.out[i][k]].to);
        if (std::abs(other - value) > 1e-9) {
          throw Error(ErrorKind::BadDistribution,
                      "event probability depends on the scheduler");
        }
      }
    }
    mark[i] = 2;
    memo[i] = value;
    return value;
  };
  return visit(g.initial);
}

}  // namespace qpalg

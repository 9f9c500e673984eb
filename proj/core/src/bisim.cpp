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

#include "qpalg/bisim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qpalg {

using nlohmann::json;

std::vector<std::vector<std::size_t>> Partition::blocks() const {
  std::vector<std::vector<std::size_t>> out(num_blocks);
  for (std::size_t i = 0; i < block_of.size(); ++i) {
    out[block_of[i]].push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// The linear system X = AX + B.

Eigen::VectorXd solve_mu_system(MuSystem sys, MuAudit* audit) {
  const Eigen::Index n = sys.b.size();
  if (n == 0) return Eigen::VectorXd();

  // Substitute rows with positive constants into rows without, until every
  // constant is positive. Each substitution preserves sum(a_i) + b_i <= 1.
  for (Eigen::Index round = 0; round <= n; ++round) {
    bool all_positive = true;
    bool progress = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (sys.b(i) > 0.0) continue;
      all_positive = false;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i || sys.a(i, k) <= 0.0 || sys.b(k) <= 0.0) continue;
        const double c = sys.a(i, k);
        sys.a(i, k) = 0.0;
        sys.a.row(i) += c * sys.a.row(k);
        sys.b(i) += c * sys.b(k);
        progress = true;
        break;
      }
    }
    if (all_positive) break;
    if (!progress) {
      throw Error(ErrorKind::SingularSystem,
                  "a mu unknown has no path into the target block");
    }
  }

  double norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row = sys.a.row(i).cwiseAbs().sum();
    norm = std::max(norm, row);
    if (row + sys.b(i) > 1.0 + 1e-9) {
      throw Error(ErrorKind::ContractionViolated,
                  "row mass exceeds 1 in the mu system");
    }
  }
  if (audit != nullptr) {
    ++audit->systems;
    audit->max_norm = std::max(audit->max_norm, norm);
  }
  if (norm >= 1.0) {
    throw Error(ErrorKind::ContractionViolated,
                "the mu system is not a contraction (|A| = " +
                    std::to_string(norm) + ")");
  }

  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - sys.a;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::SingularSystem, "I - A is singular");
  }
  Eigen::VectorXd x = lu.solve(sys.b);

  double excess = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    excess = std::max(excess, std::max(-x(i), x(i) - 1.0));
  }
  if (audit != nullptr) {
    audit->max_range_excess = std::max(audit->max_range_excess, excess);
  }
  if (excess > 1e-9) {
    throw Error(ErrorKind::ContractionViolated,
                "mu solution leaves [0,1] by " + std::to_string(excess));
  }

  // Fixpoint iteration must converge to the same vector.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (std::size_t iter = 0; iter < 1000000; ++iter) {
    Eigen::VectorXd next = sys.a * y + sys.b;
    const double delta = (next - y).cwiseAbs().maxCoeff();
    y = std::move(next);
    if (delta < 1e-14) break;
  }
  const double gap = (y - x).cwiseAbs().maxCoeff();
  if (audit != nullptr) {
    audit->max_fixpoint_gap = std::max(audit->max_fixpoint_gap, gap);
  }
  if (gap > 1e-10) {
    throw Error(ErrorKind::ContractionViolated,
                "elimination and fixpoint iteration disagree by " +
                    std::to_string(gap));
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = std::clamp(x(i), 0.0, 1.0);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Silent structure.

bool silent_step(const TransitionLabel& label) { return label_is_silent(label); }

std::vector<std::size_t> silent_closure(const ProcessGraph& g, std::size_t s) {
  std::vector<bool> seen(g.size(), false);
  std::vector<std::size_t> stack{s};
  std::vector<std::size_t> out;
  seen[s] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    out.push_back(u);
    for (auto e : g.out[u]) {
      if (silent_step(g.edges[e].label) && !seen[g.edges[e].to]) {
        seen[g.edges[e].to] = true;
        stack.push_back(g.edges[e].to);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool reaches_within(const ProcessGraph& g, const Partition& p, std::size_t s,
                    std::size_t m_block, std::size_t k_block) {
  if (p.block_of[s] == m_block) return true;
  std::vector<bool> seen(g.size(), false);
  std::vector<std::size_t> stack{s};
  seen[s] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (auto e : g.out[u]) {
      const std::size_t v = g.edges[e].to;
      if (p.block_of[v] == m_block) return true;
      if (p.block_of[v] != k_block || seen[v]) continue;
      seen[v] = true;
      stack.push_back(v);
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// mu over a block.

namespace {

/// Iterative Tarjan; returns components in emission order, which is a
/// reverse topological order of the condensation.
std::vector<std::vector<std::size_t>> strongly_connected_components(
    std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> comps;
  int next_index = 0;

  struct Frame {
    std::size_t v;
    std::size_t child;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& frame = call.back();
      if (frame.child < adj[frame.v].size()) {
        const std::size_t w = adj[frame.v][frame.child++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[frame.v] = std::min(low[frame.v], index[w]);
        }
      } else {
        if (low[frame.v] == index[frame.v]) {
          std::vector<std::size_t> comp;
          for (;;) {
            const std::size_t w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp.push_back(w);
            if (w == frame.v) break;
          }
          std::sort(comp.begin(), comp.end());
          comps.push_back(std::move(comp));
        }
        const std::size_t v = frame.v;
        call.pop_back();
        if (!call.empty()) {
          low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
      }
    }
  }
  return comps;
}

bool state_is_probabilistic(const ProcessGraph& g, std::size_t s) {
  return !g.out[s].empty() &&
         std::holds_alternative<TLProb>(g.edges[g.out[s][0]].label);
}

}  // namespace

std::vector<double> mu_block(const ProcessGraph& g, const Partition& p,
                             std::size_t k_block, std::size_t m_block,
                             MuAudit* audit) {
  if (p.block_of.size() != g.size()) {
    throw Error(ErrorKind::SingularSystem,
                "partition does not match the graph");
  }
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (p.block_of[i] == k_block) members.push_back(i);
  }

  // Support: members with a path to the target inside K union M.
  std::map<std::size_t, std::size_t> support;  // state -> dense index
  {
    std::set<std::size_t> d;
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto s : members) {
        if (d.count(s)) continue;
        for (auto e : g.out[s]) {
          const std::size_t to = g.edges[e].to;
          if (p.block_of[to] == m_block || d.count(to)) {
            d.insert(s);
            changed = true;
            break;
          }
        }
      }
    }
    std::size_t idx = 0;
    for (auto s : d) support.emplace(s, idx++);
  }

  const std::size_t dn = support.size();
  std::vector<std::map<std::size_t, double>> coeff(dn);
  std::vector<double> constant(dn, 0.0);
  for (const auto& [s, i] : support) {
    if (state_is_probabilistic(g, s)) {
      for (auto e : g.out[s]) {
        const std::size_t to = g.edges[e].to;
        const double pr = std::get<TLProb>(g.edges[e].label).p;
        if (p.block_of[to] == m_block) {
          constant[i] += pr;
        } else if (auto it = support.find(to); it != support.end()) {
          coeff[i][it->second] += pr;
        }
      }
    } else {
      std::set<std::size_t> targets_m, targets_d;
      for (auto e : g.out[s]) {
        const std::size_t to = g.edges[e].to;
        if (p.block_of[to] == m_block) {
          targets_m.insert(to);
        } else if (support.count(to)) {
          targets_d.insert(to);
        }
      }
      const double total = double(targets_m.size() + targets_d.size());
      constant[i] = double(targets_m.size()) / total;
      for (auto to : targets_d) {
        coeff[i][support.at(to)] += 1.0 / total;
      }
    }
  }

  // Solve one system per strongly connected component, successors first.
  std::vector<std::vector<std::size_t>> adj(dn);
  for (std::size_t i = 0; i < dn; ++i) {
    for (const auto& [j, a] : coeff[i]) {
      if (a > 0.0) adj[i].push_back(j);
    }
  }
  std::vector<double> value(dn, 0.0);
  std::vector<bool> solved(dn, false);
  for (const auto& comp : strongly_connected_components(dn, adj)) {
    const std::size_t m = comp.size();
    MuSystem sys;
    sys.a = Eigen::MatrixXd::Zero(m, m);
    sys.b = Eigen::VectorXd::Zero(m);
    std::map<std::size_t, std::size_t> local;
    for (std::size_t li = 0; li < m; ++li) local[comp[li]] = li;
    for (std::size_t li = 0; li < m; ++li) {
      const std::size_t i = comp[li];
      sys.b(li) = constant[i];
      for (const auto& [j, a] : coeff[i]) {
        if (auto it = local.find(j); it != local.end()) {
          sys.a(li, it->second) += a;
        } else {
          // Successor component, already solved.
          sys.b(li) += a * value[j];
        }
      }
    }
    const Eigen::VectorXd x = solve_mu_system(std::move(sys), audit);
    for (std::size_t li = 0; li < m; ++li) {
      value[comp[li]] = x(li);
      solved[comp[li]] = true;
    }
  }

  std::vector<double> out(members.size(), 0.0);
  for (std::size_t idx = 0; idx < members.size(); ++idx) {
    auto it = support.find(members[idx]);
    if (it != support.end()) out[idx] = value[it->second];
  }
  return out;
}

double mu(const ProcessGraph& g, const Partition& p, std::size_t s,
          std::size_t m_block, MuAudit* audit) {
  if (p.block_of.size() != g.size() || s >= g.size()) {
    throw Error(ErrorKind::SingularSystem,
                "partition does not match the graph");
  }
  if (p.block_of[s] == m_block) return 1.0;
  const std::size_t k = p.block_of[s];
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (p.block_of[i] == k) members.push_back(i);
  }
  const auto values = mu_block(g, p, k, m_block, audit);
  for (std::size_t idx = 0; idx < members.size(); ++idx) {
    if (members[idx] == s) return values[idx];
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Clause checking for an ordered pair.

namespace {

const StableContext& stable_of(const ProcessGraph& g, std::size_t s) {
  return g.states[s].ctx.stable_ref();
}

}  // namespace

std::optional<ClauseViolation> clause_check(const ProcessGraph& g,
                                            const Partition& p, std::size_t s,
                                            std::size_t t, double tol_mat,
                                            double tol_prob, MuAudit* audit) {
  // Candidate weak movers: silently reachable states in T's own block.
  std::vector<std::size_t> movers;
  for (auto u : silent_closure(g, t)) {
    if (p.block_of[u] == p.block_of[t]) movers.push_back(u);
  }

  auto match = [&](const std::function<bool(std::size_t mover,
                                            const ProcessGraph::Edge&)>& pred) {
    for (auto mover : movers) {
      for (auto e : g.out[mover]) {
        if (pred(mover, g.edges[e])) return true;
      }
    }
    return false;
  };

  // Termination.
  for (auto e : g.out[s]) {
    const auto& edge = g.edges[e];
    if (!std::holds_alternative<TLDelta>(edge.label)) continue;
    const auto& target_ctx = stable_of(g, edge.to);
    const bool ok = match([&](std::size_t, const ProcessGraph::Edge& te) {
      return std::holds_alternative<TLDelta>(te.label) &&
             p.block_of[te.to] == p.block_of[edge.to] &&
             g.states[te.to].ctx.stable() &&
             contexts_equivalent(target_ctx, stable_of(g, te.to), tol_mat)
                 .has_value();
    });
    if (!ok) {
      return ClauseViolation{
          "Termination",
          "delta into block " + std::to_string(p.block_of[edge.to]) +
              " with an equivalent context is unmatched"};
    }
  }
  // Value sending.
  for (auto e : g.out[s]) {
    const auto& edge = g.edges[e];
    const auto* send = std::get_if<TLSendValue>(&edge.label);
    if (send == nullptr) continue;
    const bool ok = match([&](std::size_t, const ProcessGraph::Edge& te) {
      const auto* other = std::get_if<TLSendValue>(&te.label);
      return other != nullptr && other->gate == send->gate &&
             other->value == send->value &&
             p.block_of[te.to] == p.block_of[edge.to];
    });
    if (!ok) {
      return ClauseViolation{"Value sending",
                             send->gate + "!" + std::to_string(send->value) +
                                 " is unmatched"};
    }
  }
  // Qubit sending: the sent qubit's reduced state is compared at the states
  // performing the send.
  for (auto e : g.out[s]) {
    const auto& edge = g.edges[e];
    const auto* send = std::get_if<TLSendQubit>(&edge.label);
    if (send == nullptr) continue;
    const CMat ref = qubit_reduced_state(stable_of(g, s), send->qubit);
    const bool ok = match([&](std::size_t mover, const ProcessGraph::Edge& te) {
      const auto* other = std::get_if<TLSendQubit>(&te.label);
      if (other == nullptr || other->gate != send->gate ||
          p.block_of[te.to] != p.block_of[edge.to]) {
        return false;
      }
      const CMat theirs = qubit_reduced_state(stable_of(g, mover), other->qubit);
      return (theirs - ref).cwiseAbs().maxCoeff() <= tol_mat;
    });
    if (!ok) {
      return ClauseViolation{"Qubit sending",
                             send->gate + "!" + send->qubit +
                                 " with this qubit state is unmatched"};
    }
  }
  // Value reception.
  for (auto e : g.out[s]) {
    const auto& edge = g.edges[e];
    const auto* recv = std::get_if<TLRecvValue>(&edge.label);
    if (recv == nullptr) continue;
    const bool ok = match([&](std::size_t, const ProcessGraph::Edge& te) {
      const auto* other = std::get_if<TLRecvValue>(&te.label);
      return other != nullptr && other->gate == recv->gate &&
             other->value == recv->value &&
             p.block_of[te.to] == p.block_of[edge.to];
    });
    if (!ok) {
      return ClauseViolation{"Value reception",
                             recv->gate + "?" + std::to_string(recv->value) +
                                 " is unmatched"};
    }
  }
  // Qubit reception: reduced states compared at the successor states.
  for (auto e : g.out[s]) {
    const auto& edge = g.edges[e];
    const auto* recv = std::get_if<TLRecvQubit>(&edge.label);
    if (recv == nullptr) continue;
    const CMat ref = qubit_reduced_state(stable_of(g, edge.to), recv->qubit);
    const bool ok = match([&](std::size_t, const ProcessGraph::Edge& te) {
      const auto* other = std::get_if<TLRecvQubit>(&te.label);
      if (other == nullptr || other->gate != recv->gate ||
          p.block_of[te.to] != p.block_of[edge.to]) {
        return false;
      }
      const CMat theirs = qubit_reduced_state(stable_of(g, te.to), other->qubit);
      return (theirs - ref).cwiseAbs().maxCoeff() <= tol_mat;
    });
    if (!ok) {
      return ClauseViolation{"Qubit reception",
                             recv->gate + "?" + recv->qubit +
                                 " with this qubit state is unmatched"};
    }
  }
  // Silent transition: a silent move leaving the block must be matched by a
  // weak silent move into the same block; block-internal moves are inert.
  for (auto e : g.out[s]) {
    const auto& edge = g.edges[e];
    if (!silent_step(edge.label)) continue;
    if (p.block_of[edge.to] == p.block_of[s]) continue;
    const bool ok = match([&](std::size_t, const ProcessGraph::Edge& te) {
      return silent_step(te.label) &&
             p.block_of[te.to] == p.block_of[edge.to];
    });
    if (!ok) {
      return ClauseViolation{"Silent transition",
                             "a silent step into block " +
                                 std::to_string(p.block_of[edge.to]) +
                                 " is unmatched"};
    }
  }
  // Probabilities.
  {
    std::set<std::size_t> targets;
    auto gather = [&](std::size_t state) {
      for (auto u : silent_closure(g, state)) {
        for (auto e : g.out[u]) {
          targets.insert(p.block_of[g.edges[e].to]);
        }
      }
    };
    gather(s);
    gather(t);
    targets.erase(p.block_of[s]);
    targets.erase(p.block_of[t]);
    for (auto m : targets) {
      const double mu_s = mu(g, p, s, m, audit);
      const double mu_t = mu(g, p, t, m, audit);
      if (std::abs(mu_s - mu_t) > tol_prob) {
        std::ostringstream detail;
        detail << "mu(S,M)=" << mu_s << " vs mu(T,M)=" << mu_t
               << " for target block " << m;
        return ClauseViolation{"Probabilities", detail.str()};
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Coarsest-partition refinement over the disjoint union.

ProcessGraph disjoint_union(const ProcessGraph& a, const ProcessGraph& b) {
  ProcessGraph g;
  g.states = a.states;
  g.states.insert(g.states.end(), b.states.begin(), b.states.end());
  g.initial = a.initial;
  g.truncated = a.truncated || b.truncated;
  g.limits = a.limits;
  g.edges = a.edges;
  const std::size_t offset = a.size();
  for (const auto& e : b.edges) {
    g.edges.push_back({e.from + offset, e.label, e.to + offset});
  }
  g.out.assign(g.size(), {});
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    g.out[g.edges[e].from].push_back(e);
  }
  return g;
}

namespace {

class Bitset {
 public:
  explicit Bitset(std::size_t n = 0) : n_(n), words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t(1) << (i & 63); }
  bool test(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1;
  }
  void or_with(const Bitset& other) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
  }
  template <class Fn>
  void for_each_and(const Bitset& mask, Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w] & mask.words_[w];
      while (bits != 0) {
        const int b = std::countr_zero(bits);
        fn(w * 64 + std::size_t(b));
        bits &= bits - 1;
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> words_;
};

/// Full silent reachability (reflexive, transitive) as per-state bitsets,
/// computed over the condensation of the silent subgraph.
std::vector<Bitset> silent_reachability(const ProcessGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<std::size_t>> silent_adj(n);
  for (const auto& e : g.edges) {
    if (silent_step(e.label)) silent_adj[e.from].push_back(e.to);
  }
  const auto comps = strongly_connected_components(n, silent_adj);
  std::vector<std::size_t> comp_of(n, 0);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (auto v : comps[c]) comp_of[v] = c;
  }
  // Components are emitted successors-first.
  std::vector<Bitset> comp_reach(comps.size(), Bitset(n));
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (auto v : comps[c]) {
      comp_reach[c].set(v);
      for (auto w : silent_adj[v]) {
        if (comp_of[w] != c) comp_reach[c].or_with(comp_reach[comp_of[w]]);
      }
    }
  }
  std::vector<Bitset> reach;
  reach.reserve(n);
  for (std::size_t v = 0; v < n; ++v) reach.push_back(comp_reach[comp_of[v]]);
  return reach;
}

/// Union-find grouping of small matrices under entrywise tolerance.
class MatrixClasses {
 public:
  explicit MatrixClasses(double tol) : tol_(tol) {}
  std::size_t classify(const CMat& m) {
    for (std::size_t i = 0; i < reps_.size(); ++i) {
      if (reps_[i].rows() == m.rows() &&
          (reps_[i] - m).cwiseAbs().maxCoeff() <= tol_) {
        return i;
      }
    }
    reps_.push_back(m);
    return reps_.size() - 1;
  }

 private:
  double tol_;
  std::vector<CMat> reps_;
};

struct Refiner {
  const ProcessGraph& g;
  double tol_mat;
  double tol_prob;
  MuAudit* audit;
  Partition part;
  std::size_t splits = 0;
  std::size_t init_left;
  std::size_t init_right;
  std::optional<Counterexample> divergence;

  // Component tuple: kind, a, b, c. Interned per round.
  enum Kind : std::int64_t {
    kDelta = 0,
    kSend = 1,
    kSendQubit = 2,
    kRecv = 3,
    kRecvQubit = 4,
    kSilentEscape = 5,
  };

  std::map<std::array<std::int64_t, 4>, int> comp_ids;
  std::vector<std::array<std::int64_t, 4>> comp_tuples;
  std::map<std::string, std::int64_t> gate_ids;

  int intern(std::array<std::int64_t, 4> tuple) {
    auto [it, inserted] = comp_ids.emplace(tuple, int(comp_ids.size()));
    if (inserted) comp_tuples.push_back(tuple);
    return it->second;
  }

  std::int64_t gate_id(const std::string& gate) {
    auto [it, inserted] = gate_ids.emplace(gate, std::int64_t(gate_ids.size()));
    return it->second;
  }

  explicit Refiner(const ProcessGraph& graph, double tm, double tp,
                   MuAudit* a, std::size_t left, std::size_t right)
      : g(graph), tol_mat(tm), tol_prob(tp), audit(a), init_left(left),
        init_right(right) {
    part.block_of.assign(g.size(), 0);
    part.num_blocks = 1;
  }

  void note_divergence(std::size_t a, std::size_t b, std::string clause,
                       std::string detail) {
    if (!divergence) {
      divergence = Counterexample{a, b, std::move(clause), std::move(detail)};
    }
  }

  /// Splits one block into the given groups (already deterministic). The
  /// group holding the smallest state keeps the block id.
  void apply_split(std::size_t block,
                   std::vector<std::vector<std::size_t>> groups,
                   const std::function<void(std::size_t, std::size_t)>&
                       on_init_divergence) {
    std::sort(groups.begin(), groups.end(),
              [](const auto& x, const auto& y) { return x.front() < y.front(); });
    const bool inits_together =
        part.block_of[init_left] == block && part.block_of[init_right] == block;
    for (std::size_t k = 1; k < groups.size(); ++k) {
      const std::size_t fresh = part.num_blocks++;
      for (auto s : groups[k]) part.block_of[s] = fresh;
      ++splits;
    }
    if (inits_together &&
        part.block_of[init_left] != part.block_of[init_right] &&
        on_init_divergence) {
      on_init_divergence(init_left, init_right);
    }
  }

  /// One mu refinement pass; returns true if a block was split.
  bool mu_round() {
    auto blocks = part.blocks();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto& members = blocks[k];
      if (members.size() < 2) continue;
      std::set<std::size_t> candidate_targets;
      for (auto s : members) {
        for (auto e : g.out[s]) {
          candidate_targets.insert(part.block_of[g.edges[e].to]);
        }
      }
      candidate_targets.erase(k);
      for (auto m : candidate_targets) {
        const auto values = mu_block(g, part, k, m, audit);
        double lo = values[0], hi = values[0];
        for (double v : values) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (hi - lo <= tol_prob) continue;
        // Cluster members by value with tol_prob gaps.
        std::vector<std::size_t> order(members.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          if (values[a] != values[b]) return values[a] < values[b];
          return members[a] < members[b];
        });
        std::vector<std::vector<std::size_t>> groups;
        double prev = 0.0;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
          const double v = values[order[pos]];
          if (pos == 0 || v - prev > tol_prob) {
            groups.emplace_back();
          }
          groups.back().push_back(members[order[pos]]);
          prev = v;
        }
        if (groups.size() < 2) continue;
        std::map<std::size_t, double> value_of;
        for (std::size_t i = 0; i < members.size(); ++i) {
          value_of[members[i]] = values[i];
        }
        apply_split(k, std::move(groups), [&](std::size_t a, std::size_t b) {
          std::ostringstream detail;
          detail << "mu(S,M)=" << value_of[a] << " vs mu(T,M)=" << value_of[b]
                 << " for target block " << m;
          note_divergence(a, b, "Probabilities", detail.str());
        });
        return true;
      }
    }
    return false;
  }

  std::string describe_component(int id) const {
    const auto& t = comp_tuples[std::size_t(id)];
    std::string gate;
    for (const auto& [name, gid] : gate_ids) {
      if (gid == t[1]) gate = name;
    }
    switch (t[0]) {
      case kDelta:
        return "delta into block " + std::to_string(t[1]) +
               " (context class " + std::to_string(t[2]) + ")";
      case kSend:
        return gate + "!" + std::to_string(t[2]) + " into block " +
               std::to_string(t[3]);
      case kSendQubit:
        return gate + "!<qubit class " + std::to_string(t[2]) +
               "> into block " + std::to_string(t[3]);
      case kRecv:
        return gate + "?" + std::to_string(t[2]) + " into block " +
               std::to_string(t[3]);
      case kRecvQubit:
        return gate + "?<qubit class " + std::to_string(t[2]) +
               "> into block " + std::to_string(t[3]);
      default:
        return "silent step into block " + std::to_string(t[1]);
    }
  }

  static std::string clause_of_kind(std::int64_t kind) {
    switch (kind) {
      case kDelta: return "Termination";
      case kSend: return "Value sending";
      case kSendQubit: return "Qubit sending";
      case kRecv: return "Value reception";
      case kRecvQubit: return "Qubit reception";
      default: return "Silent transition";
    }
  }

  /// One signature refinement pass over all blocks; returns true if any
  /// block was split.
  bool signature_round(const std::vector<Bitset>& reach) {
    comp_ids.clear();
    comp_tuples.clear();

    // Tolerance classes for delta-successor contexts and for transferred
    // qubit states, stable within the round.
    MatrixClasses mat_classes(tol_mat);
    std::vector<std::vector<int>> dircomp(g.size());
    std::vector<std::size_t> delta_class_of_edge(g.edges.size(), 0);

    // Group delta-target contexts by equivalence.
    std::vector<std::size_t> delta_edges;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      if (std::holds_alternative<TLDelta>(g.edges[e].label)) {
        delta_edges.push_back(e);
      }
    }
    std::vector<const StableContext*> reps;
    for (auto e : delta_edges) {
      const auto& ctx = g.states[g.edges[e].to].ctx;
      const StableContext& stable = ctx.stable_ref();
      std::size_t cls = reps.size();
      for (std::size_t r = 0; r < reps.size(); ++r) {
        if (contexts_equivalent(*reps[r], stable, tol_mat)) {
          cls = r;
          break;
        }
      }
      if (cls == reps.size()) reps.push_back(&stable);
      delta_class_of_edge[e] = cls;
    }

    for (std::size_t v = 0; v < g.size(); ++v) {
      for (auto e : g.out[v]) {
        const auto& edge = g.edges[e];
        std::visit(
            [&](const auto& label) {
              using T = std::decay_t<decltype(label)>;
              const std::int64_t to_block =
                  std::int64_t(part.block_of[edge.to]);
              if constexpr (std::is_same_v<T, TLDelta>) {
                dircomp[v].push_back(
                    intern({kDelta, to_block,
                            std::int64_t(delta_class_of_edge[e]), 0}));
              } else if constexpr (std::is_same_v<T, TLSendValue>) {
                dircomp[v].push_back(intern({kSend, gate_id(label.gate),
                                             std::int64_t(label.value),
                                             to_block}));
              } else if constexpr (std::is_same_v<T, TLSendQubit>) {
                const CMat m =
                    qubit_reduced_state(stable_of(g, v), label.qubit);
                dircomp[v].push_back(
                    intern({kSendQubit, gate_id(label.gate),
                            std::int64_t(mat_classes.classify(m)), to_block}));
              } else if constexpr (std::is_same_v<T, TLRecvValue>) {
                dircomp[v].push_back(intern({kRecv, gate_id(label.gate),
                                             std::int64_t(label.value),
                                             to_block}));
              } else if constexpr (std::is_same_v<T, TLRecvQubit>) {
                const CMat m =
                    qubit_reduced_state(stable_of(g, edge.to), label.qubit);
                dircomp[v].push_back(
                    intern({kRecvQubit, gate_id(label.gate),
                            std::int64_t(mat_classes.classify(m)), to_block}));
              } else if constexpr (std::is_same_v<T, TLTau> ||
                                   std::is_same_v<T, TLProb>) {
                if (part.block_of[edge.to] != part.block_of[v]) {
                  dircomp[v].push_back(intern({kSilentEscape, to_block, 0, 0}));
                }
              }
            },
            edge.label);
      }
      std::sort(dircomp[v].begin(), dircomp[v].end());
      dircomp[v].erase(std::unique(dircomp[v].begin(), dircomp[v].end()),
                       dircomp[v].end());
    }

    // Signatures: union of components over silently reachable same-block
    // states.
    const auto blocks = part.blocks();
    bool any_split = false;
    std::vector<std::pair<std::size_t, std::vector<std::vector<std::size_t>>>>
        pending;
    std::map<std::size_t, std::map<std::vector<int>, std::vector<std::size_t>>>
        sig_groups_by_block;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].size() < 2) continue;
      Bitset mask(g.size());
      for (auto v : blocks[b]) mask.set(v);
      std::map<std::vector<int>, std::vector<std::size_t>> groups;
      for (auto u : blocks[b]) {
        std::set<int> sig_set;
        reach[u].for_each_and(mask, [&](std::size_t v) {
          sig_set.insert(dircomp[v].begin(), dircomp[v].end());
        });
        std::vector<int> sig(sig_set.begin(), sig_set.end());
        groups[std::move(sig)].push_back(u);
      }
      if (groups.size() < 2) continue;
      any_split = true;
      sig_groups_by_block[b] = groups;
      std::vector<std::vector<std::size_t>> group_list;
      for (auto& [sig, states] : groups) group_list.push_back(states);
      pending.emplace_back(b, std::move(group_list));
    }
    for (auto& [b, groups] : pending) {
      const auto& sig_groups = sig_groups_by_block[b];
      apply_split(b, std::move(groups), [&](std::size_t a, std::size_t c) {
        // Find the differing signature component for the report.
        std::vector<int> sig_a, sig_c;
        for (const auto& [sig, states] : sig_groups) {
          if (std::find(states.begin(), states.end(), a) != states.end()) {
            sig_a = sig;
          }
          if (std::find(states.begin(), states.end(), c) != states.end()) {
            sig_c = sig;
          }
        }
        std::vector<int> only_a, only_c;
        std::set_difference(sig_a.begin(), sig_a.end(), sig_c.begin(),
                            sig_c.end(), std::back_inserter(only_a));
        std::set_difference(sig_c.begin(), sig_c.end(), sig_a.begin(),
                            sig_a.end(), std::back_inserter(only_c));
        std::string clause = "Silent transition";
        std::string detail = "weak transition sets differ";
        if (!only_a.empty() || !only_c.empty()) {
          const int comp = only_a.empty() ? only_c.front() : only_a.front();
          const bool left_has = !only_a.empty();
          clause = clause_of_kind(comp_tuples[std::size_t(comp)][0]);
          detail = std::string(left_has ? "left" : "right") + " offers " +
                   describe_component(comp) + ", the other side cannot match";
        }
        note_divergence(a, c, clause, detail);
      });
    }
    return any_split;
  }

  void run() {
    const auto reach = silent_reachability(g);
    for (;;) {
      if (mu_round()) continue;
      if (signature_round(reach)) continue;
      break;
    }
  }
};

}  // namespace

Verdict check_equivalence(const ProcessGraph& g1, const ProcessGraph& g2,
                          double tol_mat, double tol_prob, MuAudit* audit) {
  if (g1.truncated || g2.truncated) {
    throw Error(ErrorKind::TruncatedGraph,
                "bisimulation requires complete graphs");
  }
  const ProcessGraph u = disjoint_union(g1, g2);
  const std::size_t left = g1.initial;
  const std::size_t right = g1.size() + g2.initial;

  Refiner refiner(u, tol_mat, tol_prob, audit, left, right);
  refiner.run();

  Verdict verdict;
  verdict.partition = refiner.part;
  verdict.left_states = g1.size();
  verdict.splits = refiner.splits;
  verdict.equivalent =
      refiner.part.block_of[left] == refiner.part.block_of[right];
  if (!verdict.equivalent) {
    // The first refinement event that separated the initial states is the
    // counterexample; fall back to a direct clause check on the final
    // partition when the separation happened transitively.
    verdict.counterexample = refiner.divergence;
    if (!verdict.counterexample) {
      if (auto v = clause_check(u, refiner.part, left, right, tol_mat,
                                tol_prob, audit)) {
        verdict.counterexample =
            Counterexample{left, right, v->clause, v->detail};
      } else {
        verdict.counterexample = Counterexample{
            left, right, "Probabilities", "initial states were distinguished"};
      }
    }
  }
  return verdict;
}

std::string verdict_to_json(const Verdict& v) {
  json blocks = json::array();
  for (const auto& block : v.partition.blocks()) {
    blocks.push_back(block);
  }
  json counterexample;
  if (v.counterexample) {
    counterexample = json{{"left", v.counterexample->left},
                          {"right", v.counterexample->right},
                          {"clause", v.counterexample->clause},
                          {"detail", v.counterexample->detail}};
  } else {
    counterexample = nullptr;
  }
  return json{{"equivalent", v.equivalent},
              {"blocks", blocks},
              {"counterexample", counterexample}}
      .dump(2);
}

}  // namespace qpalg

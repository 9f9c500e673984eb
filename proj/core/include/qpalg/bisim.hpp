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
#include <optional>
#include <string>
#include <vector>

#include "qpalg/lts.hpp"

namespace qpalg {

/// Equivalence classes over the states of a (union) graph.
struct Partition {
  std::vector<std::size_t> block_of;
  std::size_t num_blocks = 0;

  std::vector<std::vector<std::size_t>> blocks() const;
};

/// Solver bookkeeping: how many linear systems were solved, the largest
/// contraction norm seen, and the largest elimination-vs-fixpoint gap.
struct MuAudit {
  std::size_t systems = 0;
  double max_norm = 0.0;
  double max_fixpoint_gap = 0.0;
  double max_range_excess = 0.0;
};

/// One linear system X = AX + B over the mu unknowns of a block.
struct MuSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

/// Transforms the system until every constant is positive, asserts the
/// row-sum contraction bound, solves by elimination and cross-checks with
/// fixpoint iteration.
Eigen::VectorXd solve_mu_system(MuSystem sys, MuAudit* audit = nullptr);

bool silent_step(const TransitionLabel& label);
std::vector<std::size_t> silent_closure(const ProcessGraph& g, std::size_t s);

/// S |> M: some transition path from S reaches block M while staying inside
/// block K (S's block) union M.
bool reaches_within(const ProcessGraph& g, const Partition& p, std::size_t s,
                    std::size_t m_block, std::size_t k_block);

/// mu values of every state of block `k_block` with respect to target block
/// `m_block` (states that cannot reach the target inside their block get 0).
std::vector<double> mu_block(const ProcessGraph& g, const Partition& p,
                             std::size_t k_block, std::size_t m_block,
                             MuAudit* audit = nullptr);
double mu(const ProcessGraph& g, const Partition& p, std::size_t s,
          std::size_t m_block, MuAudit* audit = nullptr);

struct ClauseViolation {
  std::string clause;
  std::string detail;
};

/// Checks the defining clauses for the ordered pair (S, T) against the
/// current partition; returns the first violated clause.
std::optional<ClauseViolation> clause_check(const ProcessGraph& g,
                                            const Partition& p, std::size_t s,
                                            std::size_t t,
                                            double tol_mat = kEpsMat,
                                            double tol_prob = kEpsProb,
                                            MuAudit* audit = nullptr);

struct Counterexample {
  std::size_t left;
  std::size_t right;
  std::string clause;
  std::string detail;
};

struct Verdict {
  bool equivalent = false;
  Partition partition;          // over the disjoint union
  std::size_t left_states = 0;  // union layout: left graph first
  std::size_t splits = 0;       // refinement steps performed
  std::optional<Counterexample> counterexample;
};

/// States of `b` are appended after the states of `a`; edges reindexed.
ProcessGraph disjoint_union(const ProcessGraph& a, const ProcessGraph& b);

/// Decides probabilistic branching bisimilarity of the two initial states by
/// coarsest-partition refinement over the disjoint union.
Verdict check_equivalence(const ProcessGraph& g1, const ProcessGraph& g2,
                          double tol_mat = kEpsMat,
                          double tol_prob = kEpsProb,
                          MuAudit* audit = nullptr);

std::string verdict_to_json(const Verdict& v);

}  // namespace qpalg

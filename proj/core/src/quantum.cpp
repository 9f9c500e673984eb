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

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

namespace qpalg {

namespace {

std::size_t index_of(const std::vector<std::string>& q,
                     const std::string& name) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == name) return i;
  }
  throw Error(ErrorKind::UnknownQubit, "qubit " + name + " is not in the register");
}

}  // namespace

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMat basis_state(std::uint64_t v) {
  CMat m = CMat::Zero(2, 2);
  m(v & 1, v & 1) = 1.0;
  return m;
}

CMat scalar_one() {
  CMat m(1, 1);
  m(0, 0) = 1.0;
  return m;
}

CMat identity_qubits(std::size_t k) {
  const Eigen::Index dim = Eigen::Index(1) << k;
  return CMat::Identity(dim, dim);
}

CMat head_permutation(const std::vector<std::string>& q,
                      const std::vector<std::string>& targets) {
  const std::size_t n = q.size();
  std::vector<std::size_t> target_pos;
  target_pos.reserve(targets.size());
  std::set<std::string> seen;
  for (const auto& t : targets) {
    if (!seen.insert(t).second) {
      throw Error(ErrorKind::DuplicateTarget, "duplicate target " + t);
    }
    target_pos.push_back(index_of(q, t));
  }
  // New register order: targets first, then the rest in original order.
  std::vector<std::size_t> order = target_pos;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(target_pos.begin(), target_pos.end(), i) == target_pos.end()) {
      order.push_back(i);
    }
  }
  const std::size_t dim = std::size_t(1) << n;
  CMat pi = CMat::Zero(dim, dim);
  for (std::size_t b = 0; b < dim; ++b) {
    std::size_t nb = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t bit = (b >> (n - 1 - order[k])) & 1u;
      nb |= bit << (n - 1 - k);
    }
    pi(nb, b) = 1.0;
  }
  return pi;
}

CMat apply_superop(const CMat& a, const CMat& rho,
                   const std::vector<std::string>& q,
                   const std::vector<std::string>& targets) {
  const std::size_t n = targets.size();
  if ((Eigen::Index(1) << n) != a.rows() || a.rows() != a.cols()) {
    throw Error(ErrorKind::UnitaryArityMismatch,
                "operator dimension does not match target count");
  }
  const std::size_t k = q.size() - n;
  const CMat pi = head_permutation(q, targets);
  const CMat padded = kron(a, identity_qubits(k));
  const CMat m = pi.adjoint() * padded * pi;
  return m * rho * m.adjoint();
}

CMat partial_trace(const CMat& rho, const std::vector<std::string>& q,
                   const std::set<std::string>& drop) {
  for (const auto& d : drop) {
    index_of(q, d);  // throws UnknownQubit if absent
  }
  if (drop.empty()) return rho;
  const std::size_t n = q.size();
  std::vector<std::size_t> keep_pos;
  std::vector<std::size_t> drop_pos;
  for (std::size_t i = 0; i < n; ++i) {
    if (drop.count(q[i])) {
      drop_pos.push_back(i);
    } else {
      keep_pos.push_back(i);
    }
  }
  const std::size_t kdim = std::size_t(1) << keep_pos.size();
  const std::size_t ddim = std::size_t(1) << drop_pos.size();
  auto assemble = [&](std::size_t keep_bits, std::size_t drop_bits) {
    std::size_t b = 0;
    for (std::size_t i = 0; i < keep_pos.size(); ++i) {
      const std::size_t bit = (keep_bits >> (keep_pos.size() - 1 - i)) & 1u;
      b |= bit << (n - 1 - keep_pos[i]);
    }
    for (std::size_t i = 0; i < drop_pos.size(); ++i) {
      const std::size_t bit = (drop_bits >> (drop_pos.size() - 1 - i)) & 1u;
      b |= bit << (n - 1 - drop_pos[i]);
    }
    return b;
  };
  CMat out = CMat::Zero(kdim, kdim);
  for (std::size_t i = 0; i < kdim; ++i) {
    for (std::size_t j = 0; j < kdim; ++j) {
      Complex sum = 0.0;
      for (std::size_t d = 0; d < ddim; ++d) {
        sum += rho(assemble(i, d), assemble(j, d));
      }
      out(i, j) = sum;
    }
  }
  return out;
}

std::vector<MeasurementBranch> measurement_branches(
    const CMat& rho, const std::vector<std::string>& q,
    const ObservableEntry& m, const std::vector<std::string>& targets) {
  std::vector<MeasurementBranch> out;
  double total = 0.0;
  for (const auto& entry : m.spectrum) {
    const CMat projected = apply_superop(entry.projector, rho, q, targets);
    const double p = projected.trace().real();
    if (p < kEpsProb) continue;
    out.push_back({entry.eigenvalue, p, projected / p});
    total += p;
  }
  for (auto& branch : out) {
    branch.probability /= total;
  }
  return out;
}

CMat collapse_mixture(const CMat& rho, const std::vector<std::string>& q,
                      const ObservableEntry& m,
                      const std::vector<std::string>& targets) {
  CMat out = CMat::Zero(rho.rows(), rho.cols());
  for (const auto& entry : m.spectrum) {
    out += apply_superop(entry.projector, rho, q, targets);
  }
  return out;
}

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

std::map<std::string, UnitaryEntry> build_unitaries() {
  std::map<std::string, UnitaryEntry> u;
  CMat h(2, 2), x(2, 2), y(2, 2), z(2, 2);
  h << kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2;
  x << 0, 1, 1, 0;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  z << 1, 0, 0, -1;
  CMat cnot = CMat::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
  u["I"] = {"I", 1, CMat::Identity(2, 2)};
  u["H"] = {"H", 1, h};
  u["X"] = {"X", 1, x};
  u["Y"] = {"Y", 1, y};
  u["Z"] = {"Z", 1, z};
  u["CNot"] = {"CNot", 2, cnot};
  return u;
}

std::map<std::string, ObservableEntry> build_observables() {
  std::map<std::string, ObservableEntry> o;
  ObservableEntry mstd1{"MStd1", 1, {}};
  for (std::uint64_t v = 0; v < 2; ++v) {
    mstd1.spectrum.push_back({v, basis_state(v)});
  }
  ObservableEntry mstd2{"MStd2", 2, {}};
  for (std::uint64_t v = 0; v < 4; ++v) {
    CMat p = CMat::Zero(4, 4);
    p(v, v) = 1.0;
    mstd2.spectrum.push_back({v, p});
  }
  CMat plus(2, 2), minus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  minus << 0.5, -0.5, -0.5, 0.5;
  ObservableEntry mpm{"MPlusMinus", 1, {{0, plus}, {1, minus}}};
  o["MStd1"] = mstd1;
  o["MStd2"] = mstd2;
  o["MPlusMinus"] = mpm;
  return o;
}

const std::map<std::string, UnitaryEntry>& unitary_table() {
  static const auto table = build_unitaries();
  return table;
}

const std::map<std::string, ObservableEntry>& observable_table() {
  static const auto table = build_observables();
  return table;
}

}  // namespace

bool is_unitary_name(const std::string& name) {
  return unitary_table().count(name) > 0;
}

bool is_observable_name(const std::string& name) {
  return observable_table().count(name) > 0;
}

const UnitaryEntry& get_unitary(const std::string& name) {
  auto it = unitary_table().find(name);
  if (it == unitary_table().end()) {
    throw Error(ErrorKind::UnknownGateOrOperator, "unknown unitary " + name);
  }
  return it->second;
}

const ObservableEntry& get_observable(const std::string& name) {
  auto it = observable_table().find(name);
  if (it == observable_table().end()) {
    throw Error(ErrorKind::UnknownGateOrOperator, "unknown observable " + name);
  }
  return it->second;
}

const std::vector<std::string>& unitary_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, entry] : unitary_table()) out.push_back(name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& observable_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, entry] : observable_table()) out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<std::string> validate_density(const CMat& rho) {
  std::vector<std::string> violations;
  if (rho.rows() != rho.cols()) {
    violations.push_back("not square");
    return violations;
  }
  const auto dim = rho.rows();
  if (dim == 0 || (dim & (dim - 1)) != 0) {
    violations.push_back("dimension is not a power of two");
  }
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kEpsMat) {
    violations.push_back("not hermitian");
  }
  if (std::abs(rho.trace().real() - 1.0) > kEpsMat ||
      std::abs(rho.trace().imag()) > kEpsMat) {
    violations.push_back("trace is not 1");
  }
  Eigen::SelfAdjointEigenSolver<CMat> solver((rho + rho.adjoint()) / 2.0);
  if (solver.info() == Eigen::Success &&
      solver.eigenvalues().minCoeff() < -kEpsMat) {
    violations.push_back("not positive semidefinite");
  }
  return violations;
}

std::size_t default_max_qubits() {
  if (const char* env = std::getenv("QPALG_MAX_QUBITS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  return 10;
}

}  // namespace qpalg

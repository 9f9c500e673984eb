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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpalg {

/// Tolerance on matrix entries (hermiticity, unit trace, state comparison).
inline constexpr double kEpsMat = 1e-9;
/// Tolerance on probabilities (branch pruning, distribution sums, mu values).
inline constexpr double kEpsProb = 1e-12;

struct SourcePos {
  std::size_t line = 0;  // 1-based; 0 means "no position"
  std::size_t column = 0;

  std::string to_string() const {
    return std::to_string(line) + ":" + std::to_string(column);
  }
};

enum class ErrorKind {
  Syntax,
  Scope,
  DuplicateDefinition,
  UnknownGateOrOperator,
  MissingMain,
  IllScoped,
  UnitaryArityMismatch,
  QubitNotInRegister,
  InvalidQubitInit,
  UndefinedVariable,
  ArityMismatch,
  TypeMismatch,
  DuplicateBinding,
  UnknownQubit,
  AlreadyAttached,
  NotDeclared,
  WrongType,
  EmptyStack,
  BadDistribution,
  DuplicateTarget,
  TruncatedGraph,
  ContractionViolated,
  SingularSystem,
  LimitExceeded,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, SourcePos pos = {})
      : std::runtime_error(format(kind, message, pos)),
        kind_(kind),
        pos_(pos) {}

  ErrorKind kind() const { return kind_; }
  SourcePos pos() const { return pos_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message,
                            SourcePos pos);

  ErrorKind kind_;
  SourcePos pos_;
};

/// Syntax error with the set of token descriptions that would have been
/// accepted at the failure position.
class ParseError : public Error {
 public:
  ParseError(std::string message, SourcePos pos,
             std::vector<std::string> expected)
      : Error(ErrorKind::Syntax, std::move(message), pos),
        expected_(std::move(expected)) {}

  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::vector<std::string> expected_;
};

}  // namespace qpalg

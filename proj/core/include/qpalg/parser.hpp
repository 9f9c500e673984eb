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

#include <string>

#include "qpalg/ast.hpp"
#include "qpalg/errors.hpp"

namespace qpalg {

/// Parses a whole program: `Name := process` definitions plus a required
/// `main := process` entry. Scope-checks every definition body (variables
/// declared before use, no shadowing, registry arities, invocation arities
/// and argument types) and resolves `g!x` sends to value or qubit sends by
/// the declared type of x.
Program parse_program(const std::string& text);

/// Parses a single process term with an empty definition table. Unknown
/// invocation targets and free variables are allowed; sends of variables
/// whose declaration is not visible default to classical value sends.
ProcessPtr parse_process(const std::string& text);

}  // namespace qpalg

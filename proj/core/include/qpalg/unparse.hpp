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

namespace qpalg {

/// Hooks for renaming variables while printing. The default prints names
/// unchanged. Binder hooks are called around declaration blocks so a
/// canonicalizing namer can assign fresh names to bound variables.
class VarNamer {
 public:
  virtual ~VarNamer() = default;
  virtual std::string var(const std::string& name) { return name; }
  virtual void enter_binders(const std::vector<Binding>&) {}
  virtual void exit_binders(const std::vector<Binding>&) {}
};

std::string unparse(const Process& p);
std::string unparse(const Process& p, VarNamer& namer);
inline std::string unparse(const ProcessPtr& p) { return unparse(*p); }

std::string unparse_action(const Action& a, VarNamer& namer);
std::string unparse_condition(const Condition& c, VarNamer& namer);
std::string unparse_program(const Program& prog);

}  // namespace qpalg

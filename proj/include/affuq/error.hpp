// Copyright 2026 The affuq Authors
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

#include <stdexcept>
#include <string>

namespace affuq
{

enum class ErrorKind {
  kInvalidExtent,
  kInvalidArgument,
  kClassMismatch,
  kInvalidGroundTruth,
  kConsistency,
  kUndefinedMetric,
  kInfeasibleConfig,
  kParse,
  kSchema,
  kAlignment,
  kIo,
};

const char * to_string(ErrorKind kind);

// All library failures surface as this exception; `kind()` lets callers
// (and tests) distinguish the failure class without string matching.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace affuq

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

#include "affuq/error.hpp"

namespace affuq
{

const char * to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::kInvalidExtent:
      return "invalid-extent";
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kClassMismatch:
      return "class-mismatch";
    case ErrorKind::kInvalidGroundTruth:
      return "invalid-ground-truth";
    case ErrorKind::kConsistency:
      return "consistency";
    case ErrorKind::kUndefinedMetric:
      return "undefined-metric";
    case ErrorKind::kInfeasibleConfig:
      return "infeasible-config";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kSchema:
      return "schema";
    case ErrorKind::kAlignment:
      return "alignment";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string & what)
: std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind)
{
}

}  // namespace affuq

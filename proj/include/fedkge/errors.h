// Copyright 2026 The fedkge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDKGE_ERRORS_H_
#define FEDKGE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace fedkge {

// Base for every recoverable failure raised by the library. The CLI maps
// ConfigError to exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or manifest content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `line` is 1-based; 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (shape mismatch, missing truth
// candidate, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

// Secure aggregation was asked to sum shares from an incomplete participant
// set, so the pairwise masks cannot cancel.
class UnresolvedMaskError : public Error {
 public:
  using Error::Error;
};

class InsufficientKnowledgeError : public Error {
 public:
  using Error::Error;
};

// A metric was requested over an empty query set.
class MetricError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedkge

#endif  // FEDKGE_ERRORS_H_

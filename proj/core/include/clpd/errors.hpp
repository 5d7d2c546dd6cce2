// Copyright 2026 The CLPD Authors.
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

#ifndef CLPD_ERRORS_HPP_
#define CLPD_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clpd {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or violated precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed persisted record. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A domain invariant was found broken on loaded or computed data.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// The requested difficulty estimator cannot run on this data.
class EstimatorUnavailable : public Error {
 public:
  using Error::Error;
};

// An oracle teacher profile does not cover an example's step count.
class ProfileCoverageError : public Error {
 public:
  using Error::Error;
};

// No candidate teacher reached the admission threshold.
class NoViableTeacher : public Error {
 public:
  using Error::Error;
};

// A required upstream artifact (teacher corpus, dataset file, ...) is absent.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

// Numerical failure during training (non-finite gradient, ...).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace clpd

#endif  // CLPD_ERRORS_HPP_

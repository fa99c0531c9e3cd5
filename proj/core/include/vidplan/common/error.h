// Copyright 2026 The vidplan Authors
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

#ifndef VIDPLAN_COMMON_ERROR_H_
#define VIDPLAN_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace vidplan {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: unknown task ids, bad schedule ranges, missing
// checkpoints, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A value outside its permitted domain (direction components, distances,
// indices).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise invalid inputs, and unparseable remote replies.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::string raw = {})
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Plan text that does not follow the line grammar. Line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

// Stepping an environment past its max_steps.
class EpisodeExhaustedError : public Error {
 public:
  using Error::Error;
};

// Corrupt, truncated or version-mismatched archives and checkpoints.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Transport failures talking to a remote oracle, after retries.
class RemoteError : public Error {
 public:
  using Error::Error;
};

// Connection-level failure talking to a remote service; retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace vidplan

#endif  // VIDPLAN_COMMON_ERROR_H_

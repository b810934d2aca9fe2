// Copyright 2026 The stratpref Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace stratpref {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad spec, bad config, precondition violated by the caller.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Prompt template references a slot that cannot be filled, or is missing one.
class TemplateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Analysis requested over an incomplete experimental design.
class IncompleteDesignError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Network-level failure talking to a backend. Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Backend answered, but the answer is unusable (unknown member, malformed
// payload). Not retryable.
class BackendError : public Error {
 public:
  using Error::Error;
};

// A sweep could not score every cell of the design.
class SweepAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace stratpref

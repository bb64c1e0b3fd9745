// Copyright 2026 The nullwm Authors
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

namespace nullwm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable key material.
class KeyError : public Error {
 public:
  using Error::Error;
};

/// Shapes or block sizes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside their documented domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Dataset files missing or unreadable.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Invalid layer chain in a model description.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Optimisation diverged.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Corrupt or truncated model / credential file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Configuration file problems. The message lists every offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nullwm

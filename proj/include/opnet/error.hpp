// Copyright 2026 The opnet Authors.
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

#ifndef OPNET_ERROR_HPP
#define OPNET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace opnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Registry misuse: duplicate names, unknown operations or kinds, mutation after freeze.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// No implementation of an operation applies to an SFunc.
class UnsupportedOperation : public Error {
 public:
  UnsupportedOperation(std::string operation, std::string kind)
      : Error("operation '" + operation + "' unsupported for SFunc kind '" + kind + "'"),
        operation_{std::move(operation)},
        kind_{std::move(kind)} {}

  /// Same, naming the network variable the SFunc belongs to.
  UnsupportedOperation(std::string operation, std::string kind, std::string variable)
      : Error("operation '" + operation + "' unsupported for SFunc kind '" + kind + "' at variable '" + variable +
              "'"),
        operation_{std::move(operation)},
        kind_{std::move(kind)},
        variable_{std::move(variable)} {}

  [[nodiscard]] const std::string& operation() const noexcept { return operation_; }
  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }
  [[nodiscard]] const std::string& variable() const noexcept { return variable_; }

 private:
  std::string operation_;
  std::string kind_;
  std::string variable_;
};

/// No performance characteristic is declared for an implementation.
class UnknownPerfMeasure : public Error {
 public:
  UnknownPerfMeasure(const std::string& impl_name, const std::string& measure)
      : Error("unknown performance measure '" + measure + "' for implementation '" + impl_name + "'") {}
};

/// Invalid arguments to an operation (arity mismatch, out-of-domain values, bad parameters).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Incoming messages that carry no probability mass.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A functional score failed while scoring a value.
class ScoringError : public Error {
 public:
  ScoringError(const std::string& value, const std::string& what)
      : Error("scoring failed for value " + value + ": " + what), value_{value} {}

  [[nodiscard]] const std::string& value() const noexcept { return value_; }

 private:
  std::string value_;
};

/// Structural problems with a network.
class NetworkError : public Error {
 public:
  using Error::Error;
};

}  // namespace opnet

#endif

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

#ifndef OPNET_SFUNC_HPP
#define OPNET_SFUNC_HPP

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "opnet/error.hpp"
#include "opnet/value.hpp"

namespace opnet {

/// Declared input, output and parameter value spaces of an SFunc.
struct SFuncSignature {
  std::vector<ValueSpace> inputs;
  ValueSpace output = ValueSpace::any;
  ValueSpace params = ValueSpace::none;
  /// `logcpdf` returns a density rather than a mass.
  bool continuous = false;
};

/// A stochastic function.
/**
 * An SFunc only describes a model component: its kind, its parameters and its signature. What
 * can be computed with it is decided by the operation implementations registered for its kind
 * (or an ancestor kind) in a `Registry`.
 *
 * SFuncs are immutable once constructed and are shared through `SFuncPtr`.
 */
class SFunc : public std::enable_shared_from_this<SFunc> {
 public:
  explicit SFunc(SFuncSignature signature) : signature_{std::move(signature)} {}
  SFunc(const SFunc&) = delete;
  SFunc& operator=(const SFunc&) = delete;
  virtual ~SFunc() = default;

  /// Kind name, resolved against the registry's kind lattice.
  [[nodiscard]] virtual std::string_view kind() const = 0;

  [[nodiscard]] const SFuncSignature& signature() const noexcept { return signature_; }
  [[nodiscard]] std::size_t arity() const noexcept { return signature_.inputs.size(); }
  [[nodiscard]] bool is_score() const noexcept { return signature_.output == ValueSpace::none; }

  [[nodiscard]] std::shared_ptr<const SFunc> ptr() const { return shared_from_this(); }

 private:
  SFuncSignature signature_;
};

using SFuncPtr = std::shared_ptr<const SFunc>;

/// A π message: an unconditional distribution (an SFunc with no inputs).
using PiMessage = SFuncPtr;

/// A λ message: a score over a variable's values.
using LambdaMessage = SFuncPtr;

/// Downcast helper used inside operation implementations.
template <class T>
const T& as(const SFunc& sf) {
  const auto* typed = dynamic_cast<const T*>(&sf);
  if (typed == nullptr) {
    throw InvalidArgument("SFunc of kind '" + std::string(sf.kind()) + "' has an unexpected representation");
  }
  return *typed;
}

inline void check_arity(const SFunc& sf, std::size_t given) {
  if (given != sf.arity()) {
    throw InvalidArgument("SFunc of kind '" + std::string(sf.kind()) + "' expects " + std::to_string(sf.arity()) +
                          " parent values, got " + std::to_string(given));
  }
}

}  // namespace opnet

#endif

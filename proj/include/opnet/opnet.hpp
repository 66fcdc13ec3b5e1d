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


#ifndef OPNET_OPNET_HPP
#define OPNET_OPNET_HPP

#include "opnet/basic.hpp"
#include "opnet/compose.hpp"
#include "opnet/operations.hpp"
#include "opnet/registry.hpp"

namespace opnet {

/// An unfrozen registry holding every built-in kind, operation and implementation.
/**
 * Callers may add kinds and implementations before freezing it.
 */
inline Registry build_registry() {
  Registry registry;
  register_operations(registry);
  register_basic(registry);
  register_compose(registry);
  register_generic(registry);
  return registry;
}

/// The frozen built-in registry.
inline const Registry& default_registry() {
  static const Registry registry = [] {
    auto r = build_registry();
    r.freeze();
    return r;
  }();
  return registry;
}

}  // namespace opnet

#endif

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

#ifndef OPNET_REGISTRY_HPP
#define OPNET_REGISTRY_HPP

#include <algorithm>
#include <any>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "opnet/error.hpp"
#include "opnet/sfunc.hpp"

/**
 * \file
 * \brief Operation registry, performance characteristics and implementation-selection policies.
 *
 * Operations are declared as tag types deriving from `OpSignature`. Implementations are
 * registered against an SFunc kind; a kind inherits every implementation registered for one of
 * its ancestors in the kind lattice. When an operation is invoked through an `Engine`, the
 * candidate implementations are filtered by their argument guards and the active `Policy` picks
 * one of them, together with hyperparameter overrides.
 */

namespace opnet {

class Engine;
struct OpImplRecord;

/// Hyperparameter values.
using HyperValue = std::variant<bool, std::int64_t, double, std::string>;

struct Hyperparameter {
  std::string name;
  HyperValue default_value;
};

/// Resolved hyperparameters handed to an implementation.
class Hyperparams {
 public:
  Hyperparams() = default;
  explicit Hyperparams(std::map<std::string, HyperValue, std::less<>> values) : values_{std::move(values)} {}

  template <class T>
  [[nodiscard]] T get(std::string_view name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) {
      throw InvalidArgument("unknown hyperparameter '" + std::string(name) + "'");
    }
    if (const auto* value = std::get_if<T>(&it->second)) {
      return *value;
    }
    throw InvalidArgument("hyperparameter '" + std::string(name) + "' has a different type");
  }

  [[nodiscard]] bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  [[nodiscard]] const auto& values() const noexcept { return values_; }

 private:
  std::map<std::string, HyperValue, std::less<>> values_;
};

/// Everything an implementation receives besides the SFunc and the operation arguments.
struct Invocation {
  const Engine& engine;
  const OpImplRecord& record;
  Hyperparams hyper;
};

/// Base for operation tag types.
/**
 * \tparam R Result type.
 * \tparam A Argument types following the SFunc.
 */
template <class R, class... A>
struct OpSignature {
  using result_type = R;
  using function_type = std::function<R(const Invocation&, const SFunc&, A...)>;
  using guard_type = std::function<bool(const SFunc&, A...)>;
};

/// An operation: a name plus a description of how it maps SFunc signatures to its arguments.
struct OperationId {
  std::string name;
  std::string signature_transform;
};

/// One implementation of one operation for one SFunc kind.
struct OpImplRecord {
  std::string impl_name;
  std::string operation;
  std::string applicable_kind;
  std::vector<Hyperparameter> hyperparameters;
  std::any callable;
  std::any guard;  // empty: applies to every argument list
};

enum class Measure { runtime, support_quality, is_lazy, is_exact };

inline const char* to_string(Measure measure) {
  switch (measure) {
    case Measure::runtime:
      return "runtime";
    case Measure::support_quality:
      return "support_quality";
    case Measure::is_lazy:
      return "is_lazy";
    case Measure::is_exact:
      return "is_exact";
  }
  return "unknown";
}

/// Guarantee offered by a support computation, ordered from weakest to strongest.
enum class SupportQuality { best_effort = 0, incremental = 1, complete = 2 };

inline const char* to_string(SupportQuality quality) {
  switch (quality) {
    case SupportQuality::best_effort:
      return "best_effort";
    case SupportQuality::incremental:
      return "incremental";
    case SupportQuality::complete:
      return "complete";
  }
  return "best_effort";
}

using PerfValue = std::variant<double, SupportQuality, bool>;

/// Arguments of a performance query. `sizes` holds the output range size followed by the parent
/// range sizes, when the measure depends on them.
struct PerfQuery {
  const Engine& engine;
  const SFunc& sfunc;
  std::vector<std::size_t> sizes;
};

using PerfEvaluator = std::function<PerfValue(const PerfQuery&)>;

/// Input to a policy decision.
struct PolicyQuery {
  std::string_view operation;
  const SFunc& sfunc;
  std::span<const OpImplRecord* const> candidates;
  const Engine& engine;
};

struct Selection {
  const OpImplRecord* record = nullptr;
  std::map<std::string, HyperValue, std::less<>> overrides;
};

/// Chooses among compatible implementations. Implementations must be deterministic and either
/// stateless or internally synchronized.
class Policy {
 public:
  virtual ~Policy() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual Selection select(const PolicyQuery& query) const = 0;
};

/// Operation registry.
class Registry {
 public:
  Registry() { kinds_.emplace("sfunc", std::nullopt); }

  /// Adds `kind` below `parent` in the kind lattice.
  void register_kind(const std::string& kind, const std::string& parent) {
    check_mutable();
    if (kinds_.count(kind) != 0) {
      throw RegistryError("kind '" + kind + "' already registered");
    }
    if (kinds_.count(parent) == 0) {
      throw RegistryError("parent kind '" + parent + "' of '" + kind + "' is not registered");
    }
    kinds_.emplace(kind, parent);
  }

  void register_operation(OperationId operation) {
    check_mutable();
    if (operations_.count(operation.name) != 0) {
      throw RegistryError("operation '" + operation.name + "' already registered");
    }
    auto name = operation.name;
    operations_.emplace(std::move(name), std::move(operation));
  }

  template <class Op>
  void register_operation(std::string signature_transform) {
    register_operation(OperationId{std::string(Op::name), std::move(signature_transform)});
  }

  /// Registers an implementation of `Op` for `kind` and all of its descendants.
  template <class Op>
  const OpImplRecord& register_impl(std::string impl_name, const std::string& kind, typename Op::function_type fn,
                                    std::vector<Hyperparameter> hyperparameters = {},
                                    typename Op::guard_type guard = {}) {
    check_mutable();
    if (operations_.count(Op::name) == 0) {
      throw RegistryError("cannot register '" + impl_name + "': unknown operation '" + std::string(Op::name) + "'");
    }
    if (kinds_.count(kind) == 0) {
      throw RegistryError("cannot register '" + impl_name + "': unknown kind '" + kind + "'");
    }
    for (const auto& record : records_) {
      if (record->impl_name == impl_name) {
        throw RegistryError("implementation name '" + impl_name + "' already registered");
      }
    }
    auto record = std::make_shared<OpImplRecord>();
    record->impl_name = std::move(impl_name);
    record->operation = std::string(Op::name);
    record->applicable_kind = kind;
    record->hyperparameters = std::move(hyperparameters);
    record->callable = std::move(fn);
    if (guard) {
      record->guard = std::move(guard);
    }
    records_.push_back(record);
    return *record;
  }

  void register_perf(const std::string& impl_name, Measure measure, PerfEvaluator evaluator) {
    check_mutable();
    if (find_record(impl_name) == nullptr) {
      throw RegistryError("cannot declare performance of unknown implementation '" + impl_name + "'");
    }
    perfs_[{impl_name, measure}] = std::move(evaluator);
  }

  /// Convenience for constant characteristics.
  void register_perf(const std::string& impl_name, Measure measure, PerfValue value) {
    register_perf(impl_name, measure, [value](const PerfQuery&) { return value; });
  }

  /// Makes the registry read-only and precomputes candidate lists.
  void freeze() {
    if (frozen_) {
      return;
    }
    for (const auto& [op, _] : operations_) {
      auto& per_kind = cache_[op];
      for (const auto& [kind, __] : kinds_) {
        per_kind[kind] = compute_impls(op, kind);
      }
    }
    frozen_ = true;
  }

  [[nodiscard]] bool frozen() const noexcept { return frozen_; }

  /// All implementations of `operation` applicable to `kind`, in registration order.
  [[nodiscard]] std::vector<const OpImplRecord*> find_impls(std::string_view operation, std::string_view kind) const {
    if (const auto* cached = cached_impls(operation, kind)) {
      return *cached;
    }
    return compute_impls(operation, kind);
  }

  /// Same as `find_impls` but without copying when the registry is frozen.
  [[nodiscard]] const std::vector<const OpImplRecord*>* cached_impls(std::string_view operation,
                                                                     std::string_view kind) const {
    if (!frozen_) {
      return nullptr;
    }
    const auto op_it = cache_.find(operation);
    if (op_it == cache_.end()) {
      return &empty_;
    }
    const auto kind_it = op_it->second.find(kind);
    if (kind_it == op_it->second.end()) {
      return &empty_;
    }
    return &kind_it->second;
  }

  [[nodiscard]] bool supports(std::string_view operation, std::string_view kind) const {
    if (const auto* cached = cached_impls(operation, kind)) {
      return !cached->empty();
    }
    return !compute_impls(operation, kind).empty();
  }

  /// True when `kind` equals `ancestor` or descends from it.
  [[nodiscard]] bool is_a(std::string_view kind, std::string_view ancestor) const {
    auto current = std::optional<std::string>(std::string(kind));
    while (current) {
      if (*current == ancestor) {
        return true;
      }
      const auto it = kinds_.find(*current);
      if (it == kinds_.end()) {
        return false;
      }
      current = it->second;
    }
    return false;
  }

  [[nodiscard]] bool has_kind(std::string_view kind) const { return kinds_.find(kind) != kinds_.end(); }
  [[nodiscard]] bool has_operation(std::string_view op) const { return operations_.find(op) != operations_.end(); }

  [[nodiscard]] const OpImplRecord* find_record(std::string_view impl_name) const {
    for (const auto& record : records_) {
      if (record->impl_name == impl_name) {
        return record.get();
      }
    }
    return nullptr;
  }

  [[nodiscard]] const PerfEvaluator* perf(std::string_view impl_name, Measure measure) const {
    const auto it = perfs_.find({std::string(impl_name), measure});
    return it == perfs_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] std::vector<std::string> operation_names() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : operations_) {
      names.push_back(name);
    }
    return names;
  }

  /// Frozen copy of this registry with one implementation (and its performance records) removed.
  [[nodiscard]] Registry without_impl(std::string_view impl_name) const {
    Registry copy;
    copy.kinds_ = kinds_;
    copy.operations_ = operations_;
    for (const auto& record : records_) {
      if (record->impl_name != impl_name) {
        copy.records_.push_back(record);
      }
    }
    for (const auto& [key, evaluator] : perfs_) {
      if (key.first != impl_name) {
        copy.perfs_.emplace(key, evaluator);
      }
    }
    copy.freeze();
    return copy;
  }

  /// Unfrozen copy that can be extended (for example with test-only kinds).
  [[nodiscard]] Registry extend() const {
    Registry copy;
    copy.kinds_ = kinds_;
    copy.operations_ = operations_;
    copy.records_ = records_;
    copy.perfs_ = perfs_;
    return copy;
  }

 private:
  void check_mutable() const {
    if (frozen_) {
      throw RegistryError("registry is frozen");
    }
  }

  [[nodiscard]] std::vector<const OpImplRecord*> compute_impls(std::string_view operation,
                                                               std::string_view kind) const {
    std::vector<const OpImplRecord*> out;
    for (const auto& record : records_) {
      if (record->operation == operation && is_a(kind, record->applicable_kind)) {
        out.push_back(record.get());
      }
    }
    return out;
  }

  std::map<std::string, std::optional<std::string>, std::less<>> kinds_;
  std::map<std::string, OperationId, std::less<>> operations_;
  std::vector<std::shared_ptr<const OpImplRecord>> records_;
  std::map<std::pair<std::string, Measure>, PerfEvaluator> perfs_;
  std::map<std::string, std::map<std::string, std::vector<const OpImplRecord*>, std::less<>>, std::less<>> cache_;
  std::vector<const OpImplRecord*> empty_;
  bool frozen_ = false;
};

/// Picks the first-registered candidate with default hyperparameters.
class DefaultPolicy final : public Policy {
 public:
  [[nodiscard]] std::string name() const override { return "default"; }
  [[nodiscard]] Selection select(const PolicyQuery& query) const override { return {query.candidates.front(), {}}; }
};

/// A read-only view of a frozen registry under one policy; the entry point for invoking operations.
class Engine {
 public:
  Engine(const Registry& registry, const Policy& policy) : registry_{&registry}, policy_{&policy} {
    if (!registry.frozen()) {
      throw RegistryError("registry must be frozen before use");
    }
  }

  Engine(const Engine& other) : registry_{other.registry_}, policy_{other.policy_} {}

  [[nodiscard]] const Registry& registry() const noexcept { return *registry_; }
  [[nodiscard]] const Policy& policy() const noexcept { return *policy_; }

  /// Candidates for `Op` on `sf` whose guards accept the arguments.
  template <class Op, class... Args>
  [[nodiscard]] std::vector<const OpImplRecord*> applicable(const SFunc& sf, Args&&... args) const {
    std::vector<const OpImplRecord*> out;
    for (const auto* record : candidates(Op::name, sf)) {
      if (!record->guard.has_value() ||
          std::any_cast<const typename Op::guard_type&>(record->guard)(sf, args...)) {
        out.push_back(record);
      }
    }
    return out;
  }

  /// True when at least one implementation of `Op` accepts these arguments.
  template <class Op, class... Args>
  [[nodiscard]] bool accepts(const SFunc& sf, Args&&... args) const {
    return !applicable<Op>(sf, args...).empty();
  }

  [[nodiscard]] bool supports(std::string_view operation, const SFunc& sf) const {
    return registry_->supports(operation, sf.kind());
  }

  /// Policy decision among `candidates`, with resolved hyperparameters.
  [[nodiscard]] std::pair<const OpImplRecord*, Hyperparams> choose(
      std::string_view operation, const SFunc& sf, std::span<const OpImplRecord* const> candidates) const {
    if (candidates.empty()) {
      throw UnsupportedOperation(std::string(operation), std::string(sf.kind()));
    }
    auto selection = policy_->select(PolicyQuery{operation, sf, candidates, *this});
    if (std::find(candidates.begin(), candidates.end(), selection.record) == candidates.end()) {
      throw RegistryError("policy '" + policy_->name() + "' selected an implementation outside the candidate set");
    }
    return {selection.record, resolve(*selection.record, selection.overrides)};
  }

  /// Implementation the policy would use for `operation` on `sf`, ignoring argument guards.
  [[nodiscard]] std::pair<const OpImplRecord*, Hyperparams> select(std::string_view operation,
                                                                   const SFunc& sf) const {
    const auto list = candidates(operation, sf);
    return choose(operation, sf, list);
  }

  template <class Op, class... Args>
  typename Op::result_type call(const SFunc& sf, Args&&... args) const {
    const auto list = applicable<Op>(sf, args...);
    auto [record, hyper] = choose(Op::name, sf, list);
    const auto& fn = std::any_cast<const typename Op::function_type&>(record->callable);
    const Invocation invocation{*this, *record, std::move(hyper)};
    return fn(invocation, sf, std::forward<Args>(args)...);
  }

  [[nodiscard]] PerfValue query_perf(std::string_view impl_name, Measure measure, const SFunc& sf,
                                     std::vector<std::size_t> sizes = {}) const {
    const auto* evaluator = registry_->perf(impl_name, measure);
    if (evaluator == nullptr) {
      throw UnknownPerfMeasure(std::string(impl_name), to_string(measure));
    }
    return (*evaluator)(PerfQuery{*this, sf, std::move(sizes)});
  }

  /// Adds `n` abstract cost units to the instrumentation counter.
  void count(std::uint64_t n) const noexcept { counter_.fetch_add(n, std::memory_order_relaxed); }
  [[nodiscard]] std::uint64_t op_count() const noexcept { return counter_.load(std::memory_order_relaxed); }
  void reset_count() const noexcept { counter_.store(0, std::memory_order_relaxed); }

 private:
  [[nodiscard]] std::span<const OpImplRecord* const> candidates(std::string_view operation, const SFunc& sf) const {
    const auto* cached = registry_->cached_impls(operation, sf.kind());
    return {cached->data(), cached->size()};
  }

  static Hyperparams resolve(const OpImplRecord& record,
                             const std::map<std::string, HyperValue, std::less<>>& overrides) {
    std::map<std::string, HyperValue, std::less<>> values;
    for (const auto& hp : record.hyperparameters) {
      values.emplace(hp.name, hp.default_value);
    }
    for (const auto& [name, value] : overrides) {
      const auto it = values.find(name);
      if (it == values.end()) {
        throw RegistryError("policy overrides unknown hyperparameter '" + name + "' of '" + record.impl_name + "'");
      }
      it->second = value;
    }
    return Hyperparams{std::move(values)};
  }

  const Registry* registry_;
  const Policy* policy_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

/// Prefers implementations declaring `is_lazy = true`.
class PreferLazyPolicy final : public Policy {
 public:
  [[nodiscard]] std::string name() const override { return "prefer_lazy"; }
  [[nodiscard]] Selection select(const PolicyQuery& query) const override {
    return {first_with(query, Measure::is_lazy), {}};
  }

  static const OpImplRecord* first_with(const PolicyQuery& query, Measure measure) {
    for (const auto* record : query.candidates) {
      if (query.engine.registry().perf(record->impl_name, measure) == nullptr) {
        continue;
      }
      const auto value = query.engine.query_perf(record->impl_name, measure, query.sfunc);
      if (const auto* flag = std::get_if<bool>(&value); flag != nullptr && *flag) {
        return record;
      }
    }
    return query.candidates.front();
  }
};

/// Prefers implementations declaring `is_exact = true`.
class PreferExactPolicy final : public Policy {
 public:
  [[nodiscard]] std::string name() const override { return "prefer_exact"; }
  [[nodiscard]] Selection select(const PolicyQuery& query) const override {
    return {PreferLazyPolicy::first_with(query, Measure::is_exact), {}};
  }
};

/// Delegates the choice to another policy and overrides hyperparameters of chosen implementations.
class OverridePolicy final : public Policy {
 public:
  using Overrides = std::map<std::string, std::map<std::string, HyperValue, std::less<>>, std::less<>>;

  OverridePolicy(const Policy& base, Overrides overrides) : base_{&base}, overrides_{std::move(overrides)} {}

  [[nodiscard]] std::string name() const override { return base_->name() + "+overrides"; }
  [[nodiscard]] Selection select(const PolicyQuery& query) const override {
    auto selection = base_->select(query);
    if (const auto it = overrides_.find(selection.record->impl_name); it != overrides_.end()) {
      for (const auto& [name, value] : it->second) {
        selection.overrides[name] = value;
      }
    }
    return selection;
  }

 private:
  const Policy* base_;
  Overrides overrides_;
};

/// Built-in policy by name: `default`, `prefer_lazy` or `prefer_exact`.
inline const Policy& policy_by_name(std::string_view name) {
  static const DefaultPolicy default_policy;
  static const PreferLazyPolicy prefer_lazy;
  static const PreferExactPolicy prefer_exact;
  if (name == "default") {
    return default_policy;
  }
  if (name == "prefer_lazy") {
    return prefer_lazy;
  }
  if (name == "prefer_exact") {
    return prefer_exact;
  }
  throw InvalidArgument("unknown policy '" + std::string(name) + "'");
}

/// Policy decision for `operation` on `sf` against a frozen registry.
inline std::pair<const OpImplRecord*, Hyperparams> select_impl(const Registry& registry, const Policy& policy,
                                                               std::string_view operation, const SFunc& sf) {
  const Engine engine{registry, policy};
  return engine.select(operation, sf);
}

}  // namespace opnet

#endif

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

#ifndef OPNET_COMPOSE_HPP
#define OPNET_COMPOSE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "opnet/basic.hpp"
#include "opnet/operations.hpp"
#include "opnet/registry.hpp"

/**
 * \file
 * \brief Compositional SFuncs whose operations are derived from their components.
 */

namespace opnet {

// ---------------------------------------------------------------------------------------------
// Shared enumeration machinery
// ---------------------------------------------------------------------------------------------

/// Normalized weights of a π message over a working range.
inline std::vector<double> pi_weights(const Engine& engine, const SFunc& pi, const Range& range) {
  auto w = range_weights(engine, pi, {}, range);
  if (!normalize_in_place(w)) {
    throw DegenerateInput("π message of kind '" + std::string(pi.kind()) + "' has no mass on its range");
  }
  return w;
}

/// Score values of a λ message over a range.
inline std::vector<double> lambda_weights(const Engine& engine, const SFunc& lambda, const Range& range) {
  std::vector<double> out(range.size());
  for (std::size_t i = 0; i < range.size(); ++i) {
    out[i] = get_score(engine, lambda, range[i]);
  }
  return out;
}

inline PiMessage make_pi(const Range& range, std::vector<double> weights, std::string_view who) {
  if (!normalize_in_place(weights)) {
    throw DegenerateInput("compute_pi for '" + std::string(who) + "' produced no mass on the target range");
  }
  return std::make_shared<CatDist>(range, std::move(weights));
}

inline std::vector<std::vector<double>> all_pi_weights(const Engine& engine, std::span<const Range> ranges,
                                                       std::span<const PiMessage> pis, std::size_t skip = SIZE_MAX) {
  if (pis.size() != ranges.size()) {
    throw InvalidArgument("one incoming π message per parent range is required");
  }
  std::vector<std::vector<double>> out(ranges.size());
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    out[k] = k == skip ? std::vector<double>(ranges[k].size(), 1.0) : pi_weights(engine, *pis[k], ranges[k]);
  }
  return out;
}

/// Σ_u Π_k π_k(u_k) P(x | u) over `range`, normalized into a Cat.
inline PiMessage enumerate_compute_pi(const Engine& engine, const SFunc& sf, const Range& range,
                                      std::span<const Range> parent_ranges, std::span<const PiMessage> pis) {
  check_arity(sf, parent_ranges.size());
  const auto weights = all_pi_weights(engine, parent_ranges, pis);
  std::vector<double> result(range.size(), 0.0);
  AssignmentCounter counter(range_sizes(parent_ranges));
  std::vector<Value> parents(parent_ranges.size());
  for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
    double p = 1.0;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      parents[k] = parent_ranges[k][counter.index()[k]];
      p *= weights[k][counter.index()[k]];
    }
    if (p == 0.0) {
      continue;
    }
    const auto w = range_weights(engine, sf, parents, range);
    for (std::size_t i = 0; i < range.size(); ++i) {
      result[i] += p * w[i];
    }
  }
  engine.count(counter.total() * range.size());
  return make_pi(range, std::move(result), sf.kind());
}

/// Σ_{x, u with u_target = t} λ(x) P(x | u) Π_{k≠target} π_k(u_k), unnormalized, as a SoftScore.
inline LambdaMessage enumerate_send_lambda(const Engine& engine, const SFunc& sf, const SFunc& lambda,
                                           const Range& range, std::span<const Range> parent_ranges,
                                           std::span<const PiMessage> pis, std::size_t target) {
  check_arity(sf, parent_ranges.size());
  if (target >= parent_ranges.size()) {
    throw InvalidArgument("send_lambda target parent index out of range");
  }
  const auto weights = all_pi_weights(engine, parent_ranges, pis, target);
  const auto lam = lambda_weights(engine, lambda, range);
  std::vector<double> out(parent_ranges[target].size(), 0.0);
  AssignmentCounter counter(range_sizes(parent_ranges));
  std::vector<Value> parents(parent_ranges.size());
  for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
    double p = 1.0;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      parents[k] = parent_ranges[k][counter.index()[k]];
      p *= weights[k][counter.index()[k]];
    }
    if (p == 0.0) {
      continue;
    }
    const auto w = range_weights(engine, sf, parents, range);
    double s = 0.0;
    for (std::size_t i = 0; i < range.size(); ++i) {
      s += lam[i] * w[i];
    }
    out[counter.index()[target]] += p * s;
  }
  engine.count(counter.total() * range.size());
  return std::make_shared<SoftScore>(parent_ranges[target], out);
}

/// Conditional weights for every parent assignment.
inline CondTable enumerate_table(const Engine& engine, const SFunc& sf, const Range& range,
                                 std::span<const Range> parent_ranges) {
  check_arity(sf, parent_ranges.size());
  AssignmentCounter counter(range_sizes(parent_ranges));
  CondTable table;
  table.rows = counter.total();
  table.cols = range.size();
  table.entries.reserve(table.rows * table.cols);
  std::vector<Value> parents(parent_ranges.size());
  for (std::size_t r = 0; r < table.rows; ++r, counter.next()) {
    for (std::size_t k = 0; k < parents.size(); ++k) {
      parents[k] = parent_ranges[k][counter.index()[k]];
    }
    const auto w = range_weights(engine, sf, parents, range);
    table.entries.insert(table.entries.end(), w.begin(), w.end());
  }
  engine.count(table.rows * table.cols);
  return table;
}

/// Σ_u Π_k π_k(u_k) P(x | u) for every x of `range`, without normalizing.
inline std::vector<double> expected_weights(const Engine& engine, const SFunc& sf, const Range& range,
                                            std::span<const Range> parent_ranges, std::span<const PiMessage> pis) {
  check_arity(sf, parent_ranges.size());
  if (parent_ranges.empty()) {
    return range_weights(engine, sf, {}, range);
  }
  const auto weights = all_pi_weights(engine, parent_ranges, pis);
  std::vector<double> result(range.size(), 0.0);
  AssignmentCounter counter(range_sizes(parent_ranges));
  std::vector<Value> parents(parent_ranges.size());
  for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
    double p = 1.0;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      parents[k] = parent_ranges[k][counter.index()[k]];
      p *= weights[k][counter.index()[k]];
    }
    if (p == 0.0) {
      continue;
    }
    const auto w = range_weights(engine, sf, parents, range);
    for (std::size_t i = 0; i < range.size(); ++i) {
      result[i] += p * w[i];
    }
  }
  engine.count(counter.total() * range.size());
  return result;
}

/// Mean and variance of a value list treated as equally likely.
inline std::pair<double, double> range_moments(const Range& range) {
  if (range.empty()) {
    return {0.0, 0.0};
  }
  double mean = 0.0;
  for (const auto& v : range) {
    mean += to_double(v);
  }
  mean /= static_cast<double>(range.size());
  double var = 0.0;
  for (const auto& v : range) {
    const double d = to_double(v) - mean;
    var += d * d;
  }
  return {mean, var / static_cast<double>(range.size())};
}

// ---------------------------------------------------------------------------------------------
// Mixture, Extend, Separable
// ---------------------------------------------------------------------------------------------

/// Randomly selects one of several SFuncs sharing a signature.
class Mixture : public SFunc {
 public:
  Mixture(std::vector<SFuncPtr> components, std::vector<double> probabilities)
      : SFunc{signature_of(components)}, components_{std::move(components)}, probabilities_{std::move(probabilities)} {
    if (components_.size() != probabilities_.size()) {
      throw InvalidArgument("Mixture needs one probability per component");
    }
    double total = 0.0;
    for (const double p : probabilities_) {
      if (!(p >= 0.0)) {
        throw InvalidArgument("Mixture probabilities must be nonnegative");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw InvalidArgument("Mixture probabilities sum to " + format_double(total) + ", not 1");
    }
  }

  [[nodiscard]] std::string_view kind() const override { return "mixture"; }
  [[nodiscard]] const std::vector<SFuncPtr>& components() const noexcept { return components_; }
  [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probabilities_; }

 private:
  static SFuncSignature signature_of(const std::vector<SFuncPtr>& components) {
    if (components.empty()) {
      throw InvalidArgument("Mixture needs at least one component");
    }
    auto sig = components.front()->signature();
    for (const auto& c : components) {
      if (c->arity() != sig.inputs.size()) {
        throw InvalidArgument("Mixture components must share their input arity");
      }
      if (c->signature().output != sig.output) {
        sig.output = ValueSpace::any;
      }
      sig.continuous = sig.continuous && c->signature().continuous;
    }
    return sig;
  }

  std::vector<SFuncPtr> components_;
  std::vector<double> probabilities_;
};

/// Lifts a one-parent SFunc to `full_arity` parents, reading only `active_index` (zero based).
class Extend final : public SFunc {
 public:
  Extend(SFuncPtr inner, std::size_t full_arity, std::size_t active_index)
      : SFunc{signature_of(*inner, full_arity, active_index)},
        inner_{std::move(inner)},
        active_index_{active_index} {}

  [[nodiscard]] std::string_view kind() const override { return "extend"; }
  [[nodiscard]] const SFuncPtr& inner() const noexcept { return inner_; }
  [[nodiscard]] std::size_t active_index() const noexcept { return active_index_; }

 private:
  static SFuncSignature signature_of(const SFunc& inner, std::size_t full_arity, std::size_t active_index) {
    if (inner.arity() != 1) {
      throw InvalidArgument("Extend wraps SFuncs with exactly one parent");
    }
    if (active_index >= full_arity) {
      throw InvalidArgument("Extend active index must be below the full arity");
    }
    auto sig = inner.signature();
    sig.inputs.assign(full_arity, ValueSpace::any);
    sig.inputs[active_index] = inner.signature().inputs.front();
    return sig;
  }

  SFuncPtr inner_;
  std::size_t active_index_;
};

/// Weighted sum of single-parent conditionals, realized as a Mixture of Extends.
class Separable final : public Mixture {
 public:
  Separable(std::vector<SFuncPtr> extended, std::vector<double> weights)
      : Mixture(std::move(extended), std::move(weights)) {}

  [[nodiscard]] std::string_view kind() const override { return "separable"; }
};

/// Builds P(X | U_1..U_n) = Σ_i w_i P_i(X | U_i).
inline std::shared_ptr<const Separable> make_separable(const std::vector<SFuncPtr>& component_cpds,
                                                       std::vector<double> weights) {
  std::vector<SFuncPtr> extended;
  extended.reserve(component_cpds.size());
  for (std::size_t i = 0; i < component_cpds.size(); ++i) {
    if (component_cpds[i]->arity() != 1) {
      throw InvalidArgument("separable component " + std::to_string(i) + " must have exactly one parent");
    }
    extended.push_back(std::make_shared<Extend>(component_cpds[i], component_cpds.size(), i));
  }
  return std::make_shared<Separable>(std::move(extended), std::move(weights));
}

// ---------------------------------------------------------------------------------------------
// Conditional family
// ---------------------------------------------------------------------------------------------

/// Selects an SFunc over the J parents from the values of the I parents.
/**
 * Parents are ordered I first, then J. `i_ranges()` lists the finite selector ranges.
 */
class Conditional : public SFunc {
 public:
  Conditional(SFuncSignature signature, std::size_t i_arity) : SFunc{std::move(signature)}, i_arity_{i_arity} {
    if (i_arity_ > arity()) {
      throw InvalidArgument("Conditional selector count exceeds its arity");
    }
  }

  [[nodiscard]] std::size_t i_arity() const noexcept { return i_arity_; }
  [[nodiscard]] std::size_t j_arity() const noexcept { return arity() - i_arity_; }
  [[nodiscard]] virtual const std::vector<Range>& i_ranges() const = 0;

  /// The SFunc over the J parents selected by `i_values`.
  [[nodiscard]] virtual SFuncPtr generate(std::span<const Value> i_values) const = 0;

 private:
  std::size_t i_arity_;
};

/// Normal whose mean is a linear function of its parents.
class LinearGaussian final : public SFunc {
 public:
  struct Params {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double variance = 1.0;
  };

  explicit LinearGaussian(Params params)
      : SFunc{{std::vector<ValueSpace>(params.coefficients.size(), ValueSpace::real), ValueSpace::real,
               ValueSpace::vector, true}},
        params_{std::move(params)} {
    if (!(params_.variance > 0.0) || !std::isfinite(params_.variance)) {
      throw InvalidArgument("LinearGaussian noise variance must be strictly positive");
    }
  }

  [[nodiscard]] std::string_view kind() const override { return "linear_gaussian"; }
  [[nodiscard]] const Params& params() const noexcept { return params_; }

  [[nodiscard]] double mean_given(std::span<const Value> parents) const {
    double mean = params_.intercept;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      mean += params_.coefficients[k] * to_double(parents[k]);
    }
    return mean;
  }

 private:
  Params params_;
};

/// Conditional whose I parents pick the parameters of a fixed embedded SFunc type by table lookup.
/**
 * \tparam Embedded An SFunc type constructible from `Embedded::Params`.
 */
template <class Embedded>
class ParamGen : public Conditional {
 public:
  using Params = typename Embedded::Params;

  ParamGen(SFuncSignature signature, std::vector<Range> i_ranges, std::vector<Params> table)
      : Conditional{std::move(signature), i_ranges.size()}, i_ranges_{std::move(i_ranges)}, table_{std::move(table)} {
    std::size_t expected = 1;
    for (const auto& r : i_ranges_) {
      expected *= r.size();
    }
    if (table_.size() != expected) {
      throw InvalidArgument("parameter table has " + std::to_string(table_.size()) + " entries; the selector ranges need " +
                            std::to_string(expected));
    }
    generated_.reserve(table_.size());
    for (std::size_t row = 0; row < table_.size(); ++row) {
      try {
        generated_.push_back(std::make_shared<Embedded>(table_[row]));
      } catch (const InvalidArgument& e) {
        throw InvalidArgument("row " + std::to_string(row) + ": " + e.what());
      }
    }
  }

  [[nodiscard]] const std::vector<Range>& i_ranges() const override { return i_ranges_; }
  [[nodiscard]] const std::vector<Params>& table() const noexcept { return table_; }

  /// Row of the parameter table for a selector tuple.
  [[nodiscard]] std::size_t row_of(std::span<const Value> i_values) const {
    if (i_values.size() != i_ranges_.size()) {
      throw InvalidArgument("wrong number of selector values");
    }
    std::size_t row = 0;
    for (std::size_t k = 0; k < i_values.size(); ++k) {
      const auto idx = index_of(i_ranges_[k], i_values[k]);
      if (idx == i_ranges_[k].size()) {
        throw InvalidArgument("selector value " + to_string(i_values[k]) + " outside the table domain");
      }
      row = row * i_ranges_[k].size() + idx;
    }
    return row;
  }

  [[nodiscard]] const Params& gen_params(std::span<const Value> i_values) const { return table_[row_of(i_values)]; }

  [[nodiscard]] SFuncPtr generate(std::span<const Value> i_values) const override {
    return generated_[row_of(i_values)];
  }

 private:
  std::vector<Range> i_ranges_;
  std::vector<Params> table_;
  std::vector<SFuncPtr> generated_;
};

/// Conditional probability table over discrete parents.
class DiscreteCPT final : public ParamGen<CatDist> {
 public:
  /// `rows` enumerate parent assignments in row-major order over `parent_ranges`.
  DiscreteCPT(std::vector<Range> parent_ranges, Range values, const std::vector<std::vector<double>>& rows)
      : ParamGen<CatDist>{signature_of(parent_ranges, values), std::move(parent_ranges), params_of(values, rows)},
        values_{std::move(values)} {}

  [[nodiscard]] std::string_view kind() const override { return "cpt"; }
  [[nodiscard]] const Range& values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& row(std::size_t r) const { return table()[r].probabilities; }

 private:
  static SFuncSignature signature_of(const std::vector<Range>& parent_ranges, const Range& values) {
    SFuncSignature sig;
    for (const auto& r : parent_ranges) {
      sig.inputs.push_back(space_of(r));
    }
    sig.output = space_of(values);
    sig.params = ValueSpace::vector;
    return sig;
  }

  static std::vector<CatDist::Params> params_of(const Range& values, const std::vector<std::vector<double>>& rows) {
    std::vector<CatDist::Params> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
      out.push_back({values, r});
    }
    return out;
  }

  Range values_;
};

/// Conditional linear Gaussian: discrete selectors index LinearGaussian parameters over the
/// continuous parents.
class CLG final : public ParamGen<LinearGaussian> {
 public:
  CLG(std::vector<Range> selector_ranges, std::size_t continuous_parents, std::vector<LinearGaussian::Params> entries)
      : ParamGen<LinearGaussian>{signature_of(selector_ranges, continuous_parents), std::move(selector_ranges),
                                 check(std::move(entries), continuous_parents)} {}

  [[nodiscard]] std::string_view kind() const override { return "clg"; }

 private:
  static SFuncSignature signature_of(const std::vector<Range>& selector_ranges, std::size_t continuous_parents) {
    SFuncSignature sig;
    for (const auto& r : selector_ranges) {
      sig.inputs.push_back(space_of(r));
    }
    sig.inputs.insert(sig.inputs.end(), continuous_parents, ValueSpace::real);
    sig.output = ValueSpace::real;
    sig.params = ValueSpace::vector;
    sig.continuous = true;
    return sig;
  }

  static std::vector<LinearGaussian::Params> check(std::vector<LinearGaussian::Params> entries, std::size_t j) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].coefficients.size() != j) {
        throw InvalidArgument("CLG entry " + std::to_string(i) + " needs " + std::to_string(j) + " coefficients");
      }
    }
    return entries;
  }
};

/// Chooses among `choices` by the value of a selector parent (the first parent).
/**
 * Selector values are the integers 0..k-1. The remaining parents are passed to the chosen SFunc.
 */
class Switch : public Conditional {
 public:
  explicit Switch(std::vector<SFuncPtr> choices) : Switch(choices, integer_selector(choices.size())) {}

  [[nodiscard]] std::string_view kind() const override { return "switch"; }
  [[nodiscard]] const std::vector<Range>& i_ranges() const override { return selector_; }
  [[nodiscard]] const std::vector<SFuncPtr>& choices() const noexcept { return choices_; }

  [[nodiscard]] SFuncPtr generate(std::span<const Value> i_values) const override {
    return choices_.at(choice_index(i_values.front()));
  }

 protected:
  Switch(std::vector<SFuncPtr> choices, std::vector<Range> selector)
      : Conditional{signature_of(choices, selector.front()), 1}, choices_{std::move(choices)}, selector_{std::move(selector)} {}

  [[nodiscard]] virtual std::size_t choice_index(const Value& selector) const {
    const auto* i = std::get_if<std::int64_t>(&selector);
    if (i == nullptr || *i < 0 || static_cast<std::size_t>(*i) >= choices_.size()) {
      throw InvalidArgument("switch selector " + to_string(selector) + " out of range");
    }
    return static_cast<std::size_t>(*i);
  }

 private:
  static std::vector<Range> integer_selector(std::size_t k) {
    Range r;
    for (std::size_t i = 0; i < k; ++i) {
      r.emplace_back(static_cast<std::int64_t>(i));
    }
    return {r};
  }

  static SFuncSignature signature_of(const std::vector<SFuncPtr>& choices, const Range& selector) {
    if (choices.empty()) {
      throw InvalidArgument("Switch needs at least one choice");
    }
    auto sig = choices.front()->signature();
    for (const auto& c : choices) {
      if (c->arity() != sig.inputs.size()) {
        throw InvalidArgument("Switch choices must share their input arity");
      }
      sig.continuous = sig.continuous && c->signature().continuous;
    }
    sig.inputs.insert(sig.inputs.begin(), space_of(selector));
    return sig;
  }

  std::vector<SFuncPtr> choices_;
  std::vector<Range> selector_;
};

/// Boolean switch: `true` picks the first choice, `false` the second.
class If final : public Switch {
 public:
  If(SFuncPtr then_branch, SFuncPtr else_branch)
      : Switch({std::move(then_branch), std::move(else_branch)}, {Range{Value{false}, Value{true}}}) {}

  [[nodiscard]] std::string_view kind() const override { return "if"; }

 protected:
  [[nodiscard]] std::size_t choice_index(const Value& selector) const override {
    const auto* b = std::get_if<bool>(&selector);
    if (b == nullptr) {
      throw InvalidArgument("if selector must be boolean, got " + to_string(selector));
    }
    return *b ? 0 : 1;
  }
};

// ---------------------------------------------------------------------------------------------
// Deterministic SFuncs
// ---------------------------------------------------------------------------------------------

/// Deterministic function of the inputs.
class Det : public SFunc {
 public:
  using Function = std::function<Value(std::span<const Value>)>;

  /// `interpolate` enables the interpolating send_lambda implementation.
  Det(std::vector<ValueSpace> inputs, ValueSpace output, Function fn, bool interpolate = false)
      : SFunc{{std::move(inputs), output, ValueSpace::none}}, fn_{std::move(fn)}, interpolate_{interpolate} {}

  [[nodiscard]] std::string_view kind() const override { return interpolate_ ? "det_interp" : "det"; }
  [[nodiscard]] Value apply(std::span<const Value> inputs) const { return fn_(inputs); }

 private:
  Function fn_;
  bool interpolate_;
};

/// Linear deterministic map x ↦ M·x over scalar parents (one per column of M).
/**
 * A one-row matrix produces a scalar; otherwise the output is a vector.
 */
class LinearDet final : public Det {
 public:
  explicit LinearDet(std::vector<std::vector<double>> matrix)
      : Det{inputs_of(matrix), matrix.size() == 1 ? ValueSpace::real : ValueSpace::vector,
            [this](std::span<const Value> x) { return evaluate(x); }},
        matrix_{std::move(matrix)} {}

  [[nodiscard]] std::string_view kind() const override { return "det_linear"; }
  [[nodiscard]] const std::vector<std::vector<double>>& matrix() const noexcept { return matrix_; }

  [[nodiscard]] Vector multiply(const Vector& x) const {
    Vector y(matrix_.size(), 0.0);
    for (std::size_t r = 0; r < matrix_.size(); ++r) {
      for (std::size_t c = 0; c < x.size(); ++c) {
        y[r] += matrix_[r][c] * x[c];
      }
    }
    return y;
  }

 private:
  static std::vector<ValueSpace> inputs_of(const std::vector<std::vector<double>>& matrix) {
    if (matrix.empty() || matrix.front().empty()) {
      throw InvalidArgument("linear form needs a nonempty matrix");
    }
    for (const auto& row : matrix) {
      if (row.size() != matrix.front().size()) {
        throw InvalidArgument("linear form rows must have equal length");
      }
    }
    return std::vector<ValueSpace>(matrix.front().size(), ValueSpace::real);
  }

  [[nodiscard]] Value evaluate(std::span<const Value> inputs) const {
    Vector x(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      x[i] = to_double(inputs[i]);
    }
    auto y = multiply(x);
    if (y.size() == 1) {
      return y.front();
    }
    return y;
  }

  std::vector<std::vector<double>> matrix_;
};

inline SFuncPtr make_det(std::vector<ValueSpace> inputs, ValueSpace output, Det::Function fn, bool interpolate = false) {
  return std::make_shared<Det>(std::move(inputs), output, std::move(fn), interpolate);
}

/// Bandwidth of the interpolation kernel: median pairwise distance of the generated outputs.
inline double interpolation_bandwidth(const std::vector<double>& generated) {
  std::vector<double> distances;
  for (std::size_t a = 0; a < generated.size(); ++a) {
    for (std::size_t b = a + 1; b < generated.size(); ++b) {
      distances.push_back(std::abs(generated[a] - generated[b]));
    }
  }
  if (distances.empty()) {
    return 1.0;
  }
  const auto mid = distances.begin() + static_cast<std::ptrdiff_t>(distances.size() / 2);
  std::nth_element(distances.begin(), mid, distances.end());
  double h = *mid;
  if (distances.size() % 2 == 0) {
    h = 0.5 * (h + *std::max_element(distances.begin(), mid));
  }
  return h > 0.0 ? h : 1.0;
}

// ---------------------------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------------------------

namespace detail {

inline std::pair<std::vector<Value>, std::vector<Value>> split_pars(const Conditional& sf,
                                                                     std::span<const Value> parents) {
  check_arity(sf, parents.size());
  return {{parents.begin(), parents.begin() + static_cast<std::ptrdiff_t>(sf.i_arity())},
          {parents.begin() + static_cast<std::ptrdiff_t>(sf.i_arity()), parents.end()}};
}

inline SupportQuality min_quality(SupportQuality a, SupportQuality b) { return a < b ? a : b; }

/// Support quality of whichever support implementation the policy would use for `sf`.
inline SupportQuality selected_support_quality(const Engine& engine, const SFunc& sf) {
  const auto [record, _] = engine.select(ops::Support::name, sf);
  return std::get<SupportQuality>(engine.query_perf(record->impl_name, Measure::support_quality, sf));
}

inline double selected_runtime(const Engine& engine, std::string_view operation, const SFunc& sf,
                               std::vector<std::size_t> sizes) {
  const auto [record, _] = engine.select(operation, sf);
  return std::get<double>(engine.query_perf(record->impl_name, Measure::runtime, sf, std::move(sizes)));
}

inline double product_of(const std::vector<std::size_t>& sizes, std::size_t from = 0) {
  double p = 1.0;
  for (std::size_t i = from; i < sizes.size(); ++i) {
    p *= static_cast<double>(sizes[i]);
  }
  return p;
}

inline Value apply_det(const SFunc& sf, std::span<const Value> parents) {
  check_arity(sf, parents.size());
  return as<Det>(sf).apply(parents);
}

}  // namespace detail

/// Registers the generic enumeration implementations of compute_pi, send_lambda and
/// make_factors for `kind`.
inline void register_enumeration(Registry& registry, const std::string& kind, bool with_send_lambda = true) {
  using namespace ops;  // NOLINT(google-build-using-namespace)
  registry.register_impl<ComputePi>(
      "compute_pi.enumerate/" + kind, kind,
      [](const Invocation& inv, const SFunc& sf, const Range& range, auto parent_ranges, auto pis) {
        return enumerate_compute_pi(inv.engine, sf, range, parent_ranges, pis);
      });
  registry.register_perf("compute_pi.enumerate/" + kind, Measure::runtime,
                         [](const PerfQuery& q) -> PerfValue { return detail::product_of(q.sizes); });
  registry.register_perf("compute_pi.enumerate/" + kind, Measure::is_exact, true);
  if (with_send_lambda) {
    registry.register_impl<SendLambda>(
        "send_lambda.enumerate/" + kind, kind,
        [](const Invocation& inv, const SFunc& sf, const LambdaMessage& lambda, const Range& range,
           auto parent_ranges, auto pis, std::size_t target) {
          return enumerate_send_lambda(inv.engine, sf, *lambda, range, parent_ranges, pis, target);
        });
    registry.register_perf("send_lambda.enumerate/" + kind, Measure::is_exact, true);
  }
  registry.register_impl<MakeFactors>("make_factors.enumerate/" + kind, kind,
                                      [](const Invocation& inv, const SFunc& sf, const Range& range,
                                         auto parent_ranges) {
                                        return enumerate_table(inv.engine, sf, range, parent_ranges);
                                      });
}

/// Registers the compositional kinds and their implementations.
inline void register_compose(Registry& registry) {
  using namespace ops;  // NOLINT(google-build-using-namespace)

  registry.register_kind("mixture", "sfunc");
  registry.register_kind("separable", "mixture");
  registry.register_kind("extend", "sfunc");
  registry.register_kind("conditional", "sfunc");
  registry.register_kind("paramgen", "conditional");
  registry.register_kind("cpt", "paramgen");
  registry.register_kind("clg", "paramgen");
  registry.register_kind("switch", "conditional");
  registry.register_kind("if", "switch");
  registry.register_kind("linear_gaussian", "sfunc");
  registry.register_kind("det", "sfunc");
  registry.register_kind("det_interp", "det");
  registry.register_kind("det_linear", "det");

  // Parentless distributions: tables are their masses; send_lambda has no parent to target.
  register_enumeration(registry, "dist");

  // ----- Mixture -----
  registry.register_impl<Sample>("sample.mixture", "mixture",
                                 [](const Invocation& inv, const SFunc& sf, auto parents, Rng& rng) {
                                   const auto& m = as<Mixture>(sf);
                                   check_arity(sf, parents.size());
                                   const double u = uniform01(rng);
                                   double cumulative = 0.0;
                                   std::size_t chosen = m.components().size() - 1;
                                   for (std::size_t i = 0; i < m.components().size(); ++i) {
                                     cumulative += m.probabilities()[i];
                                     if (u < cumulative) {
                                       chosen = i;
                                       break;
                                     }
                                   }
                                   return sample(inv.engine, *m.components()[chosen], parents, rng);
                                 });
  registry.register_impl<LogCpdf>("logcpdf.mixture", "mixture",
                                  [](const Invocation& inv, const SFunc& sf, auto parents, const Value& x) {
                                    const auto& m = as<Mixture>(sf);
                                    double total = 0.0;
                                    for (std::size_t i = 0; i < m.components().size(); ++i) {
                                      if (m.probabilities()[i] > 0.0) {
                                        total += m.probabilities()[i] * cpdf(inv.engine, *m.components()[i], parents, x);
                                      }
                                    }
                                    return std::log(total);
                                  });
  registry.register_impl<Expectation>("expectation.mixture", "mixture",
                                      [](const Invocation& inv, const SFunc& sf, auto parents) {
                                        const auto& m = as<Mixture>(sf);
                                        double mean = 0.0;
                                        for (std::size_t i = 0; i < m.components().size(); ++i) {
                                          if (m.probabilities()[i] > 0.0) {
                                            mean += m.probabilities()[i] *
                                                    expectation(inv.engine, *m.components()[i], parents);
                                          }
                                        }
                                        return mean;
                                      });
  registry.register_impl<Variance>("variance.mixture", "mixture",
                                   [](const Invocation& inv, const SFunc& sf, auto parents) {
                                     const auto& m = as<Mixture>(sf);
                                     double mean = 0.0;
                                     double second = 0.0;
                                     for (std::size_t i = 0; i < m.components().size(); ++i) {
                                       const double p = m.probabilities()[i];
                                       if (p > 0.0) {
                                         const double mu = expectation(inv.engine, *m.components()[i], parents);
                                         const double var = variance(inv.engine, *m.components()[i], parents);
                                         mean += p * mu;
                                         second += p * (var + mu * mu);
                                       }
                                     }
                                     return second - mean * mean;
                                   });
  registry.register_impl<Support>(
      "support.mixture", "mixture",
      [](const Invocation& inv, const SFunc& sf, auto parent_ranges, std::size_t target, const Range& prior) {
        const auto& m = as<Mixture>(sf);
        Range out = prior;
        for (const auto& c : m.components()) {
          out = merge_ranges(out, support(inv.engine, *c, parent_ranges, target, prior));
        }
        return out;
      });
  registry.register_perf("support.mixture", Measure::support_quality, [](const PerfQuery& q) -> PerfValue {
    auto quality = SupportQuality::complete;
    for (const auto& c : as<Mixture>(q.sfunc).components()) {
      quality = detail::min_quality(quality, detail::selected_support_quality(q.engine, *c));
    }
    return quality;
  });
  registry.register_impl<ComputePi>(
      "compute_pi.mixture", "mixture",
      [](const Invocation& inv, const SFunc& sf, const Range& range, auto parent_ranges, auto pis) -> PiMessage {
        const auto& m = as<Mixture>(sf);
        std::vector<double> result(range.size(), 0.0);
        for (std::size_t i = 0; i < m.components().size(); ++i) {
          if (m.probabilities()[i] == 0.0) {
            continue;
          }
          const auto cp = compute_pi(inv.engine, *m.components()[i], range, parent_ranges, pis);
          const auto w = range_weights(inv.engine, *cp, {}, range);
          for (std::size_t x = 0; x < range.size(); ++x) {
            result[x] += m.probabilities()[i] * w[x];
          }
        }
        inv.engine.count(m.components().size() * range.size());
        return make_pi(range, std::move(result), sf.kind());
      });
  registry.register_perf("compute_pi.mixture", Measure::runtime, [](const PerfQuery& q) -> PerfValue {
    double total = 0.0;
    for (const auto& c : as<Mixture>(q.sfunc).components()) {
      total += detail::selected_runtime(q.engine, ComputePi::name, *c, q.sizes);
    }
    return total;
  });
  registry.register_perf("compute_pi.mixture", Measure::is_exact, true);
  registry.register_impl<SendLambda>(
      "send_lambda.mixture", "mixture",
      [](const Invocation& inv, const SFunc& sf, const LambdaMessage& lambda, const Range& range,
         auto parent_ranges, auto pis, std::size_t target) -> LambdaMessage {
        const auto& m = as<Mixture>(sf);
        const Range& target_range = parent_ranges[target];
        std::vector<double> result(target_range.size(), 0.0);
        for (std::size_t i = 0; i < m.components().size(); ++i) {
          if (m.probabilities()[i] == 0.0) {
            continue;
          }
          const auto msg = send_lambda(inv.engine, *m.components()[i], lambda, range, parent_ranges, pis, target);
          const auto w = lambda_weights(inv.engine, *msg, target_range);
          for (std::size_t t = 0; t < target_range.size(); ++t) {
            result[t] += m.probabilities()[i] * w[t];
          }
        }
        return std::make_shared<SoftScore>(target_range, result);
      });
  registry.register_impl<MakeFactors>(
      "make_factors.mixture", "mixture",
      [](const Invocation& inv, const SFunc& sf, const Range& range, auto parent_ranges) {
        const auto& m = as<Mixture>(sf);
        CondTable out;
        for (std::size_t i = 0; i < m.components().size(); ++i) {
          auto t = make_table(inv.engine, *m.components()[i], range, parent_ranges);
          if (i == 0) {
            out = t;
            std::fill(out.entries.begin(), out.entries.end(), 0.0);
          }
          for (std::size_t e = 0; e < out.entries.size(); ++e) {
            out.entries[e] += m.probabilities()[i] * t.entries[e];
          }
        }
        return out;
      });

  // ----- Extend -----
  auto active_value = [](const Extend& e, std::span<const Value> parents) {
    check_arity(e, parents.size());
    return std::vector<Value>{parents[e.active_index()]};
  };
  registry.register_impl<Sample>("sample.extend", "extend",
                                 [active_value](const Invocation& inv, const SFunc& sf, auto parents, Rng& rng) {
                                   const auto& e = as<Extend>(sf);
                                   return sample(inv.engine, *e.inner(), active_value(e, parents), rng);
                                 });
  registry.register_impl<LogCpdf>(
      "logcpdf.extend", "extend", [active_value](const Invocation& inv, const SFunc& sf, auto parents, const Value& x) {
        const auto& e = as<Extend>(sf);
        return logcpdf(inv.engine, *e.inner(), active_value(e, parents), x);
      });
  registry.register_impl<Expectation>("expectation.extend", "extend",
                                      [active_value](const Invocation& inv, const SFunc& sf, auto parents) {
                                        const auto& e = as<Extend>(sf);
                                        return expectation(inv.engine, *e.inner(), active_value(e, parents));
                                      });
  registry.register_impl<Variance>("variance.extend", "extend",
                                   [active_value](const Invocation& inv, const SFunc& sf, auto parents) {
                                     const auto& e = as<Extend>(sf);
                                     return variance(inv.engine, *e.inner(), active_value(e, parents));
                                   });
  registry.register_impl<Support>(
      "support.extend", "extend",
      [](const Invocation& inv, const SFunc& sf, std::span<const Range> parent_ranges, std::size_t target,
         const Range& prior) {
        const auto& e = as<Extend>(sf);
        check_arity(sf, parent_ranges.size());
        return support(inv.engine, *e.inner(), parent_ranges.subspan(e.active_index(), 1), target, prior);
      });
  registry.register_perf("support.extend", Measure::support_quality, [](const PerfQuery& q) -> PerfValue {
    return detail::selected_support_quality(q.engine, *as<Extend>(q.sfunc).inner());
  });
  registry.register_impl<ComputePi>(
      "compute_pi.extend", "extend",
      [](const Invocation& inv, const SFunc& sf, const Range& range, std::span<const Range> parent_ranges,
         std::span<const PiMessage> pis) {
        const auto& e = as<Extend>(sf);
        check_arity(sf, parent_ranges.size());
        return compute_pi(inv.engine, *e.inner(), range, parent_ranges.subspan(e.active_index(), 1),
                          pis.subspan(e.active_index(), 1));
      });
  registry.register_perf("compute_pi.extend", Measure::runtime, [](const PerfQuery& q) -> PerfValue {
    const auto& e = as<Extend>(q.sfunc);
    std::vector<std::size_t> sizes;
    if (!q.sizes.empty()) {
      sizes = {q.sizes.front(), q.sizes.at(1 + e.active_index())};
    }
    return detail::selected_runtime(q.engine, ComputePi::name, *e.inner(), sizes);
  });
  registry.register_perf("compute_pi.extend", Measure::is_exact, true);
  registry.register_impl<SendLambda>(
      "send_lambda.extend", "extend",
      [](const Invocation& inv, const SFunc& sf, const LambdaMessage& lambda, const Range& range,
         std::span<const Range> parent_ranges, std::span<const PiMessage> pis, std::size_t target) -> LambdaMessage {
        const auto& e = as<Extend>(sf);
        check_arity(sf, parent_ranges.size());
        const auto a = e.active_index();
        if (target == a) {
          return send_lambda(inv.engine, *e.inner(), lambda, range, parent_ranges.subspan(a, 1), pis.subspan(a, 1), 0);
        }
        // Ignored parent: the message is flat, at the level Σ_u π_a(u) Σ_x λ(x) P(x | u).
        const auto pa = pi_weights(inv.engine, *pis[a], parent_ranges[a]);
        const auto lam = lambda_weights(inv.engine, *lambda, range);
        double level = 0.0;
        for (std::size_t u = 0; u < pa.size(); ++u) {
          if (pa[u] == 0.0) {
            continue;
          }
          const std::vector<Value> parent{parent_ranges[a][u]};
          const auto w = range_weights(inv.engine, *e.inner(), parent, range);
          double s = 0.0;
          for (std::size_t x = 0; x < range.size(); ++x) {
            s += lam[x] * w[x];
          }
          level += pa[u] * s;
        }
        inv.engine.count(pa.size() * range.size());
        return std::make_shared<SoftScore>(parent_ranges[target],
                                           std::vector<double>(parent_ranges[target].size(), level));
      });
  registry.register_impl<MakeFactors>(
      "make_factors.enumerate/extend", "extend",
      [](const Invocation& inv, const SFunc& sf, const Range& range, auto parent_ranges) {
        return enumerate_table(inv.engine, sf, range, parent_ranges);
      });

  // ----- Conditional -----
  registry.register_impl<GenSf>("gen_sf.conditional", "conditional",
                                [](const Invocation&, const SFunc& sf, std::span<const Value> i_values) {
                                  return as<Conditional>(sf).generate(i_values);
                                });
  registry.register_impl<Sample>("sample.conditional", "conditional",
                                 [](const Invocation& inv, const SFunc& sf, auto parents, Rng& rng) {
                                   const auto& c = as<Conditional>(sf);
                                   const auto [ivals, jvals] = detail::split_pars(c, parents);
                                   const auto sfg = gen_sf(inv.engine, c, ivals);
                                   return sample(inv.engine, *sfg, jvals, rng);
                                 });
  registry.register_impl<LogCpdf>("logcpdf.conditional", "conditional",
                                  [](const Invocation& inv, const SFunc& sf, auto parents, const Value& x) {
                                    const auto& c = as<Conditional>(sf);
                                    const auto [ivals, jvals] = detail::split_pars(c, parents);
                                    return logcpdf(inv.engine, *gen_sf(inv.engine, c, ivals), jvals, x);
                                  });
  registry.register_impl<Expectation>("expectation.conditional", "conditional",
                                      [](const Invocation& inv, const SFunc& sf, auto parents) {
                                        const auto& c = as<Conditional>(sf);
                                        const auto [ivals, jvals] = detail::split_pars(c, parents);
                                        return expectation(inv.engine, *gen_sf(inv.engine, c, ivals), jvals);
                                      });
  registry.register_impl<Variance>("variance.conditional", "conditional",
                                   [](const Invocation& inv, const SFunc& sf, auto parents) {
                                     const auto& c = as<Conditional>(sf);
                                     const auto [ivals, jvals] = detail::split_pars(c, parents);
                                     return variance(inv.engine, *gen_sf(inv.engine, c, ivals), jvals);
                                   });
  registry.register_impl<Support>(
      "support.conditional", "conditional",
      [](const Invocation& inv, const SFunc& sf, std::span<const Range> parent_ranges, std::size_t target,
         const Range& prior) {
        const auto& c = as<Conditional>(sf);
        check_arity(sf, parent_ranges.size());
        const auto jranges = parent_ranges.subspan(c.i_arity());
        Range out = prior;
        AssignmentCounter counter(range_sizes(c.i_ranges()));
        std::vector<Value> ivals(c.i_arity());
        for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
          for (std::size_t k = 0; k < ivals.size(); ++k) {
            ivals[k] = c.i_ranges()[k][counter.index()[k]];
          }
          out = merge_ranges(out, support(inv.engine, *gen_sf(inv.engine, c, ivals), jranges, target, {}));
        }
        return out;
      });
  registry.register_perf("support.conditional", Measure::support_quality, [](const PerfQuery& q) -> PerfValue {
    const auto& c = as<Conditional>(q.sfunc);
    auto quality = SupportQuality::complete;
    AssignmentCounter counter(range_sizes(c.i_ranges()));
    std::vector<Value> ivals(c.i_arity());
    for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
      for (std::size_t k = 0; k < ivals.size(); ++k) {
        ivals[k] = c.i_ranges()[k][counter.index()[k]];
      }
      quality = detail::min_quality(quality, detail::selected_support_quality(q.engine, *c.generate(ivals)));
    }
    return quality;
  });
  registry.register_impl<ComputePi>(
      "compute_pi.conditional", "conditional",
      [](const Invocation& inv, const SFunc& sf, const Range& range, std::span<const Range> parent_ranges,
         std::span<const PiMessage> pis) -> PiMessage {
        const auto& c = as<Conditional>(sf);
        check_arity(sf, parent_ranges.size());
        if (pis.size() != parent_ranges.size()) {
          throw InvalidArgument("one incoming π message per parent range is required");
        }
        const auto iranges = parent_ranges.first(c.i_arity());
        const auto jranges = parent_ranges.subspan(c.i_arity());
        const auto ipis = all_pi_weights(inv.engine, iranges, pis.first(c.i_arity()));
        const auto jpis = pis.subspan(c.i_arity());
        std::vector<double> result(range.size(), 0.0);
        AssignmentCounter counter(range_sizes(iranges));
        std::vector<Value> ivals(c.i_arity());
        for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
          double p_i = 1.0;
          for (std::size_t k = 0; k < ivals.size(); ++k) {
            ivals[k] = iranges[k][counter.index()[k]];
            p_i *= ipis[k][counter.index()[k]];
          }
          inv.engine.count(ivals.size() + range.size());
          if (p_i == 0.0) {
            continue;
          }
          const auto s = gen_sf(inv.engine, c, ivals);
          const auto p_j = range_weights(inv.engine, *compute_pi(inv.engine, *s, range, jranges, jpis), {}, range);
          for (std::size_t x = 0; x < range.size(); ++x) {
            result[x] += p_i * p_j[x];
          }
        }
        return make_pi(range, std::move(result), sf.kind());
      });
  registry.register_perf("compute_pi.conditional", Measure::runtime, [](const PerfQuery& q) -> PerfValue {
    const auto& c = as<Conditional>(q.sfunc);
    const double out = q.sizes.empty() ? 1.0 : static_cast<double>(q.sizes.front());
    return detail::product_of(range_sizes(c.i_ranges())) * (static_cast<double>(c.i_arity()) + out);
  });
  registry.register_perf("compute_pi.conditional", Measure::is_exact, true);
  registry.register_impl<SendLambda>(
      "send_lambda.conditional", "conditional",
      [](const Invocation& inv, const SFunc& sf, const LambdaMessage& lambda, const Range& range,
         std::span<const Range> parent_ranges, std::span<const PiMessage> pis, std::size_t target) -> LambdaMessage {
        const auto& c = as<Conditional>(sf);
        check_arity(sf, parent_ranges.size());
        if (target >= parent_ranges.size()) {
          throw InvalidArgument("send_lambda target parent index out of range");
        }
        const auto iranges = parent_ranges.first(c.i_arity());
        const auto jranges = parent_ranges.subspan(c.i_arity());
        const auto jpis = pis.subspan(c.i_arity());
        const auto ipis = all_pi_weights(inv.engine, iranges, pis.first(c.i_arity()), target);
        const auto lam = lambda_weights(inv.engine, *lambda, range);
        std::vector<double> out(parent_ranges[target].size(), 0.0);
        AssignmentCounter counter(range_sizes(iranges));
        std::vector<Value> ivals(c.i_arity());
        for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
          double p_i = 1.0;
          for (std::size_t k = 0; k < ivals.size(); ++k) {
            ivals[k] = iranges[k][counter.index()[k]];
            p_i *= ipis[k][counter.index()[k]];
          }
          if (p_i == 0.0) {
            continue;
          }
          const auto s = gen_sf(inv.engine, c, ivals);
          if (target < c.i_arity()) {
            const auto p_j = expected_weights(inv.engine, *s, range, jranges, jpis);
            double v = 0.0;
            for (std::size_t x = 0; x < range.size(); ++x) {
              v += lam[x] * p_j[x];
            }
            out[counter.index()[target]] += p_i * v;
          } else {
            const auto msg = send_lambda(inv.engine, *s, lambda, range, jranges, jpis, target - c.i_arity());
            const auto w = lambda_weights(inv.engine, *msg, parent_ranges[target]);
            for (std::size_t t = 0; t < out.size(); ++t) {
              out[t] += p_i * w[t];
            }
          }
          inv.engine.count(range.size());
        }
        return std::make_shared<SoftScore>(parent_ranges[target], out);
      });
  registry.register_perf("send_lambda.conditional", Measure::is_exact, true);
  registry.register_impl<MakeFactors>(
      "make_factors.enumerate/conditional", "conditional",
      [](const Invocation& inv, const SFunc& sf, const Range& range, auto parent_ranges) {
        return enumerate_table(inv.engine, sf, range, parent_ranges);
      });

  // ----- LinearGaussian -----
  registry.register_impl<Sample>("sample.linear_gaussian", "linear_gaussian",
                                 [](const Invocation&, const SFunc& sf, auto parents, Rng& rng) -> Value {
                                   check_arity(sf, parents.size());
                                   const auto& lg = as<LinearGaussian>(sf);
                                   return std::normal_distribution<double>{lg.mean_given(parents),
                                                                           std::sqrt(lg.params().variance)}(rng);
                                 });
  registry.register_impl<LogCpdf>("logcpdf.linear_gaussian", "linear_gaussian",
                                  [](const Invocation&, const SFunc& sf, auto parents, const Value& x) {
                                    check_arity(sf, parents.size());
                                    if (!is_numeric(x)) {
                                      return kNegInf;
                                    }
                                    const auto& lg = as<LinearGaussian>(sf);
                                    return NormalDist(lg.mean_given(parents), lg.params().variance)
                                        .log_density(to_double(x));
                                  });
  registry.register_impl<Expectation>("expectation.linear_gaussian", "linear_gaussian",
                                      [](const Invocation&, const SFunc& sf, auto parents) {
                                        check_arity(sf, parents.size());
                                        return as<LinearGaussian>(sf).mean_given(parents);
                                      });
  registry.register_impl<Variance>("variance.linear_gaussian", "linear_gaussian",
                                   [](const Invocation&, const SFunc& sf, auto parents) {
                                     check_arity(sf, parents.size());
                                     return as<LinearGaussian>(sf).params().variance;
                                   });
  registry.register_impl<Support>(
      "support.linear_gaussian", "linear_gaussian",
      [](const Invocation&, const SFunc& sf, std::span<const Range> parent_ranges, std::size_t target,
         const Range& prior) {
        check_arity(sf, parent_ranges.size());
        const auto& p = as<LinearGaussian>(sf).params();
        double mean = p.intercept;
        double var = p.variance;
        for (std::size_t k = 0; k < parent_ranges.size(); ++k) {
          const auto [m, v] = range_moments(parent_ranges[k]);
          mean += p.coefficients[k] * m;
          var += p.coefficients[k] * p.coefficients[k] * v;
        }
        return detail::merged(NormalDist(mean, var).quantile_grid(std::max<std::size_t>(target, 1)), prior);
      });
  registry.register_perf("support.linear_gaussian", Measure::support_quality, SupportQuality::incremental);
  registry.register_impl<ComputePi>(
      "compute_pi.linear_gaussian.closed_form", "linear_gaussian",
      [](const Invocation& inv, const SFunc& sf, const Range&, auto parent_ranges, auto pis) -> PiMessage {
        check_arity(sf, parent_ranges.size());
        const auto& p = as<LinearGaussian>(sf).params();
        double mean = p.intercept;
        double var = p.variance;
        for (std::size_t k = 0; k < pis.size(); ++k) {
          mean += p.coefficients[k] * expectation(inv.engine, *pis[k]);
          var += p.coefficients[k] * p.coefficients[k] * variance(inv.engine, *pis[k]);
        }
        inv.engine.count(pis.size() + 1);
        return std::make_shared<NormalDist>(mean, var);
      },
      {},
      [](const SFunc& sf, const Range&, std::span<const Range> parent_ranges, std::span<const PiMessage> pis) {
        return pis.size() == sf.arity() && parent_ranges.size() == sf.arity() &&
               std::all_of(pis.begin(), pis.end(), [](const PiMessage& pi) {
                 return dynamic_cast<const NormalDist*>(pi.get()) != nullptr;
               });
      });
  registry.register_perf("compute_pi.linear_gaussian.closed_form", Measure::runtime,
                         [](const PerfQuery& q) -> PerfValue { return double(q.sfunc.arity() + 1); });
  registry.register_perf("compute_pi.linear_gaussian.closed_form", Measure::is_exact, true);
  register_enumeration(registry, "linear_gaussian");

  // ----- Det -----
  registry.register_impl<Sample>("sample.det", "det", [](const Invocation&, const SFunc& sf, auto parents, Rng&) {
    return detail::apply_det(sf, parents);
  });
  registry.register_impl<LogCpdf>("logcpdf.det", "det",
                                  [](const Invocation&, const SFunc& sf, auto parents, const Value& x) {
                                    return detail::apply_det(sf, parents) == x ? 0.0 : kNegInf;
                                  });
  auto numeric_det = [](const SFunc& sf, auto) {
    const auto out = sf.signature().output;
    return out == ValueSpace::real || out == ValueSpace::integer || out == ValueSpace::boolean;
  };
  registry.register_impl<Expectation>(
      "expectation.det", "det",
      [](const Invocation&, const SFunc& sf, auto parents) { return to_double(detail::apply_det(sf, parents)); }, {},
      numeric_det);
  registry.register_impl<Variance>(
      "variance.det", "det", [](const Invocation&, const SFunc&, auto) { return 0.0; }, {}, numeric_det);
  registry.register_impl<Support>(
      "support.det", "det",
      [](const Invocation& inv, const SFunc& sf, std::span<const Range> parent_ranges, std::size_t,
         const Range& prior) {
        check_arity(sf, parent_ranges.size());
        Range out = prior;
        AssignmentCounter counter(range_sizes(parent_ranges));
        std::vector<Value> parents(parent_ranges.size());
        for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
          for (std::size_t k = 0; k < parents.size(); ++k) {
            parents[k] = parent_ranges[k][counter.index()[k]];
          }
          out.push_back(as<Det>(sf).apply(parents));
        }
        inv.engine.count(counter.total());
        canonicalize(out);
        return out;
      });
  registry.register_perf("support.det", Measure::support_quality, SupportQuality::complete);
  register_enumeration(registry, "det", false);
  registry.register_impl<SendLambda>(
      "send_lambda.enumerate/det_interp", "det_interp",
      [](const Invocation& inv, const SFunc& sf, const LambdaMessage& lambda, const Range& range, auto parent_ranges,
         auto pis, std::size_t target) {
        return enumerate_send_lambda(inv.engine, sf, *lambda, range, parent_ranges, pis, target);
      },
      {},
      [](const SFunc& sf, const LambdaMessage&, const Range&, auto, auto, std::size_t) {
        return sf.signature().output != ValueSpace::real;
      });
  registry.register_perf("send_lambda.enumerate/det_interp", Measure::is_exact, true);
  registry.register_impl<SendLambda>(
      "send_lambda.interpolate", "det_interp",
      [](const Invocation& inv, const SFunc& sf, const LambdaMessage& lambda, const Range& range,
         std::span<const Range> parent_ranges, std::span<const PiMessage> pis, std::size_t target) -> LambdaMessage {
        check_arity(sf, parent_ranges.size());
        const auto weights = all_pi_weights(inv.engine, parent_ranges, pis, target);
        const auto lam = lambda_weights(inv.engine, *lambda, range);
        AssignmentCounter counter(range_sizes(parent_ranges));
        std::vector<double> generated;
        std::vector<std::vector<std::size_t>> tuples;
        generated.reserve(counter.total());
        std::vector<Value> parents(parent_ranges.size());
        for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
          for (std::size_t k = 0; k < parents.size(); ++k) {
            parents[k] = parent_ranges[k][counter.index()[k]];
          }
          generated.push_back(to_double(as<Det>(sf).apply(parents)));
          tuples.push_back(counter.index());
        }
        const double h = interpolation_bandwidth(generated);
        std::vector<double> out(parent_ranges[target].size(), 0.0);
        for (std::size_t r = 0; r < generated.size(); ++r) {
          double p = 1.0;
          for (std::size_t k = 0; k < parents.size(); ++k) {
            p *= weights[k][tuples[r][k]];
          }
          double s = 0.0;
          for (std::size_t x = 0; x < range.size(); ++x) {
            const double d = (generated[r] - to_double(range[x])) / h;
            s += lam[x] * std::exp(-0.5 * d * d);
          }
          out[tuples[r][target]] += p * s;
        }
        inv.engine.count(generated.size() * (generated.size() + range.size()));
        return std::make_shared<SoftScore>(parent_ranges[target], out);
      },
      {},
      [](const SFunc& sf, const LambdaMessage&, const Range& range, auto, auto, std::size_t) {
        return std::all_of(range.begin(), range.end(), [](const Value& v) { return is_numeric(v); }) &&
               sf.signature().output != ValueSpace::vector;
      });
  registry.register_perf("send_lambda.interpolate", Measure::is_exact, false);

  // Invert for linear forms: a direct solve and the fixed-step residual iteration.
  registry.register_impl<Invert>("invert.full", "det_linear", [](const Invocation& inv, const SFunc& sf, const Vector& y) {
    const auto& m = as<LinearDet>(sf).matrix();
    const auto n = m.size();
    if (n != m.front().size()) {
      throw InvalidArgument("exact inversion needs a square linear form");
    }
    if (y.size() != n) {
      throw InvalidArgument("observed output has the wrong dimension");
    }
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (std::size_t r = 0; r < n; ++r) {
      b(static_cast<Eigen::Index>(r)) = y[r];
      for (std::size_t c = 0; c < n; ++c) {
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m[r][c];
      }
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) {
      throw InvalidArgument("linear form is singular");
    }
    const Eigen::VectorXd x = lu.solve(b);
    inv.engine.count(n * n * n);
    return Vector(x.data(), x.data() + x.size());
  });
  registry.register_perf("invert.full", Measure::is_exact, true);
  registry.register_impl<Invert>(
      "invert.iterative", "det_linear",
      [](const Invocation& inv, const SFunc& sf, const Vector& y) {
        const auto& det = as<LinearDet>(sf);
        const auto iterations = inv.hyper.get<std::int64_t>("num_iters");
        const auto step = inv.hyper.get<double>("step_size");
        Vector x(det.arity(), 0.0);
        for (std::int64_t i = 0; i < iterations; ++i) {
          const auto fx = det.multiply(x);
          for (std::size_t k = 0; k < x.size() && k < fx.size(); ++k) {
            x[k] -= step * (fx[k] - y[k]);
          }
        }
        inv.engine.count(static_cast<std::uint64_t>(iterations) * det.arity() * det.matrix().size());
        return x;
      },
      {{"num_iters", std::int64_t{5}}, {"step_size", 1.0}});
  registry.register_perf("invert.iterative", Measure::is_exact, false);
}

/// Fallbacks registered for the root kind after every specific implementation.
inline void register_generic(Registry& registry) {
  using namespace ops;  // NOLINT(google-build-using-namespace)
  registry.register_impl<SampleN>("sample_n.repeat", "sfunc",
                                  [](const Invocation& inv, const SFunc& sf, auto parents, std::size_t n, Rng& rng) {
                                    if (n == 0) {
                                      throw InvalidArgument("sample_n needs n >= 1");
                                    }
                                    std::vector<Value> out;
                                    out.reserve(n);
                                    for (std::size_t i = 0; i < n; ++i) {
                                      out.push_back(sample(inv.engine, sf, parents, rng));
                                    }
                                    return out;
                                  });
  // Best-effort support: the distinct values of a batch of samples at midpoint parent values.
  registry.register_impl<Support>(
      "support.sampled", "sfunc",
      [](const Invocation& inv, const SFunc& sf, std::span<const Range> parent_ranges, std::size_t target,
         const Range& prior) {
        check_arity(sf, parent_ranges.size());
        Rng rng{static_cast<std::uint64_t>(inv.hyper.get<std::int64_t>("seed")) + target};
        Range out = prior;
        for (std::size_t i = 0; i < std::max<std::size_t>(target, 1); ++i) {
          std::vector<Value> parents;
          for (const auto& r : parent_ranges) {
            parents.push_back(r[std::uniform_int_distribution<std::size_t>{0, r.size() - 1}(rng)]);
          }
          out.push_back(sample(inv.engine, sf, parents, rng));
        }
        canonicalize(out);
        return out;
      },
      {{"seed", std::int64_t{17}}});
  registry.register_perf("support.sampled", Measure::support_quality, SupportQuality::best_effort);
}

}  // namespace opnet

#endif

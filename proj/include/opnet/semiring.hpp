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


#ifndef OPNET_SEMIRING_HPP
#define OPNET_SEMIRING_HPP

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "opnet/network.hpp"
#include "opnet/operations.hpp"

/**
 * \file
 * \brief Semirings and factors over finite ranges.
 *
 * A semiring type provides `value_type`, `zero()`, `one()`, `add`, `mul`, `embed` (from a table
 * entry and its role) and `weight` (back to a nonnegative real).
 */

namespace opnet {

struct SumProduct {
  using value_type = double;
  static constexpr std::string_view name = "sum_product";
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double add(double a, double b) { return a + b; }
  static double mul(double a, double b) { return a * b; }
  static double embed(double p, FactorRole) { return p; }
  static double weight(double v) { return v; }
};

struct MaxProduct {
  using value_type = double;
  static constexpr std::string_view name = "max_product";
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double add(double a, double b) { return std::max(a, b); }
  static double mul(double a, double b) { return a * b; }
  static double embed(double p, FactorRole) { return p; }
  static double weight(double v) { return v; }
};

/// Disjunction and conjunction over truth values.
struct BooleanSemiring {
  using value_type = bool;
  static constexpr std::string_view name = "boolean";
  static bool zero() { return false; }
  static bool one() { return true; }
  static bool add(bool a, bool b) { return a || b; }
  static bool mul(bool a, bool b) { return a && b; }
  static bool embed(double p, FactorRole) { return p > 0.0; }
  static double weight(bool v) { return v ? 1.0 : 0.0; }
};

/// A truth value paired with a probability. A false truth value carries probability 0.
struct MixedValue {
  bool logical = false;
  double prob = 0.0;

  friend bool operator==(const MixedValue&, const MixedValue&) = default;
};

/// Logical factors gate probabilistic ones: a false logical part zeroes the product.
struct MixedSemiring {
  using value_type = MixedValue;
  static constexpr std::string_view name = "mixed";
  static MixedValue zero() { return {false, 0.0}; }
  static MixedValue one() { return {true, 1.0}; }
  static MixedValue add(const MixedValue& a, const MixedValue& b) {
    return {a.logical || b.logical, a.prob + b.prob};
  }
  static MixedValue mul(const MixedValue& a, const MixedValue& b) {
    const bool both = a.logical && b.logical;
    return {both, both ? a.prob * b.prob : 0.0};
  }
  static MixedValue embed(double p, FactorRole role) {
    if (role == FactorRole::logical) {
      return p > 0.0 ? MixedValue{true, 1.0} : MixedValue{false, 0.0};
    }
    return {true, p};
  }
  static double weight(const MixedValue& v) { return v.prob; }
};

/// The mixed product of a logical and a probabilistic value.
inline MixedValue mixed_product(const MixedValue& logical, const MixedValue& probabilistic) {
  return MixedSemiring::mul(logical, probabilistic);
}

/// Table of semiring values over assignments to `vars` (row-major, last variable fastest).
template <class S>
struct Factor {
  using value_type = typename S::value_type;

  std::vector<VariableId> vars;
  std::vector<Range> ranges;
  std::vector<value_type> table;

  [[nodiscard]] std::size_t position(const VariableId& id) const {
    return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), id) - vars.begin());
  }
  [[nodiscard]] bool contains(const VariableId& id) const { return position(id) < vars.size(); }

  [[nodiscard]] std::vector<std::size_t> strides() const {
    std::vector<std::size_t> s(vars.size(), 1);
    for (std::size_t k = vars.size(); k-- > 1;) {
      s[k - 1] = s[k] * ranges[k].size();
    }
    return s;
  }

  [[nodiscard]] std::size_t expected_size() const {
    std::size_t n = 1;
    for (const auto& r : ranges) {
      n *= r.size();
    }
    return n;
  }
};

/// Scalar factor holding `value`.
template <class S>
Factor<S> scalar_factor(typename S::value_type value) {
  Factor<S> f;
  f.table.push_back(value);
  return f;
}

/// Factor of one network node: parents then the node itself (parents only for score nodes).
template <class S>
Factor<S> make_factors(const Engine& engine, const Node& node, const RangeMap& ranges) {
  Factor<S> f;
  std::vector<Range> parent_ranges;
  for (const auto& p : node.parents) {
    if (std::find(f.vars.begin(), f.vars.end(), p) != f.vars.end()) {
      throw NetworkError("variable '" + node.id + "' lists parent '" + p + "' twice");
    }
    const auto it = ranges.find(p);
    if (it == ranges.end()) {
      throw InvalidArgument("variable '" + p + "' has no finite range; compute one with support()");
    }
    f.vars.push_back(p);
    f.ranges.push_back(it->second);
    parent_ranges.push_back(it->second);
  }
  Range own;
  if (!node.is_score()) {
    const auto it = ranges.find(node.id);
    if (it == ranges.end()) {
      throw InvalidArgument("variable '" + node.id + "' has no finite range; compute one with support()");
    }
    own = it->second;
    f.vars.push_back(node.id);
    f.ranges.push_back(own);
  }
  CondTable table;
  try {
    table = make_table(engine, *node.sf, own, parent_ranges);
  } catch (const UnsupportedOperation& e) {
    throw UnsupportedOperation(e.operation(), e.kind(), node.id);
  }
  f.table.reserve(table.entries.size());
  for (const double p : table.entries) {
    f.table.push_back(S::embed(p, table.role));
  }
  if (f.table.size() != f.expected_size()) {
    throw InvalidArgument("make_factors for '" + node.id + "' returned a table of the wrong size");
  }
  return f;
}

/// Pointwise semiring product over the union of the variables.
template <class S>
Factor<S> combine(const Factor<S>& a, const Factor<S>& b) {
  Factor<S> out{a.vars, a.ranges, {}};
  for (std::size_t k = 0; k < b.vars.size(); ++k) {
    const auto pos = a.position(b.vars[k]);
    if (pos < a.vars.size()) {
      if (a.ranges[pos] != b.ranges[k]) {
        throw InvalidArgument("variable '" + b.vars[k] + "' has different ranges in the combined factors");
      }
    } else {
      out.vars.push_back(b.vars[k]);
      out.ranges.push_back(b.ranges[k]);
    }
  }
  const auto sa = a.strides();
  const auto sb = b.strides();
  std::vector<std::size_t> map_a(out.vars.size(), 0);
  std::vector<std::size_t> map_b(out.vars.size(), 0);
  for (std::size_t k = 0; k < out.vars.size(); ++k) {
    if (const auto p = a.position(out.vars[k]); p < a.vars.size()) {
      map_a[k] = sa[p];
    }
    if (const auto p = b.position(out.vars[k]); p < b.vars.size()) {
      map_b[k] = sb[p];
    }
  }
  AssignmentCounter counter(range_sizes(out.ranges));
  out.table.reserve(counter.total());
  for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
    std::size_t ia = 0;
    std::size_t ib = 0;
    for (std::size_t k = 0; k < out.vars.size(); ++k) {
      ia += counter.index()[k] * map_a[k];
      ib += counter.index()[k] * map_b[k];
    }
    out.table.push_back(S::mul(a.table[ia], b.table[ib]));
  }
  return out;
}

/// Semiring sum over the values of `var`, removing it.
template <class S>
Factor<S> sum_out(const Factor<S>& f, const VariableId& var) {
  const auto pos = f.position(var);
  if (pos >= f.vars.size()) {
    throw InvalidArgument("variable '" + var + "' is not in the factor");
  }
  Factor<S> out;
  for (std::size_t k = 0; k < f.vars.size(); ++k) {
    if (k != pos) {
      out.vars.push_back(f.vars[k]);
      out.ranges.push_back(f.ranges[k]);
    }
  }
  const auto strides = f.strides();
  const auto n = f.ranges[pos].size();
  AssignmentCounter counter(range_sizes(out.ranges));
  out.table.reserve(counter.total());
  for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
    std::size_t base = 0;
    for (std::size_t k = 0, j = 0; k < f.vars.size(); ++k) {
      if (k != pos) {
        base += counter.index()[j++] * strides[k];
      }
    }
    auto acc = S::zero();
    for (std::size_t v = 0; v < n; ++v) {
      acc = S::add(acc, f.table[base + v * strides[pos]]);
    }
    out.table.push_back(acc);
  }
  return out;
}

/// Reorders the variables of `f` to `order` (a permutation of its variables).
template <class S>
Factor<S> reorder(const Factor<S>& f, const std::vector<VariableId>& order) {
  if (order.size() != f.vars.size()) {
    throw InvalidArgument("reorder needs a permutation of the factor variables");
  }
  Factor<S> out;
  std::vector<std::size_t> map(order.size());
  const auto strides = f.strides();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto p = f.position(order[k]);
    if (p >= f.vars.size()) {
      throw InvalidArgument("variable '" + order[k] + "' is not in the factor");
    }
    out.vars.push_back(order[k]);
    out.ranges.push_back(f.ranges[p]);
    map[k] = strides[p];
  }
  AssignmentCounter counter(range_sizes(out.ranges));
  out.table.reserve(counter.total());
  for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
    std::size_t i = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      i += counter.index()[k] * map[k];
    }
    out.table.push_back(f.table[i]);
  }
  return out;
}

}  // namespace opnet

#endif

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


#ifndef OPNET_VE_HPP
#define OPNET_VE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opnet/network.hpp"
#include "opnet/semiring.hpp"

namespace opnet {

struct VEOptions {
  /// Support size requested for variables without a complete support.
  std::size_t target_size = 21;
  /// Elimination order; empty selects min-degree (ties by variable id).
  std::vector<VariableId> order;
};

template <class S>
struct VEResult {
  Factor<S> factor;
  /// Log of the total weight before normalization (sum-product only; NaN otherwise).
  double log_evidence = std::numeric_limits<double>::quiet_NaN();
};

/// Non-score variables of `net` not in `keep`, in node order.
inline std::vector<VariableId> eliminable(const Network& net, const std::vector<VariableId>& keep) {
  std::vector<VariableId> out;
  for (const auto& n : net.nodes()) {
    if (!n.is_score() && std::find(keep.begin(), keep.end(), n.id) == keep.end()) {
      out.push_back(n.id);
    }
  }
  return out;
}

namespace detail {

template <class S>
std::vector<Factor<S>> network_factors(const Engine& engine, const Network& net, const RangeMap& ranges) {
  std::vector<Factor<S>> out;
  out.reserve(net.size());
  for (const auto& n : net.nodes()) {
    out.push_back(make_factors<S>(engine, n, ranges));
  }
  return out;
}

/// Next variable for min-degree elimination: fewest distinct neighbours, ties by id.
template <class S>
VariableId min_degree_pick(const std::vector<Factor<S>>& factors, const std::set<VariableId>& remaining) {
  VariableId best;
  std::size_t best_degree = std::numeric_limits<std::size_t>::max();
  for (const auto& v : remaining) {
    std::set<VariableId> neighbours;
    for (const auto& f : factors) {
      if (f.contains(v)) {
        neighbours.insert(f.vars.begin(), f.vars.end());
      }
    }
    neighbours.erase(v);
    if (neighbours.size() < best_degree) {
      best_degree = neighbours.size();
      best = v;
    }
  }
  return best;
}

/// Multiplies every factor mentioning `v` and removes them from `factors`.
template <class S>
Factor<S> gather(std::vector<Factor<S>>& factors, const VariableId& v) {
  auto product = scalar_factor<S>(S::one());
  std::vector<Factor<S>> rest;
  for (auto& f : factors) {
    if (f.contains(v)) {
      product = combine(product, f);
    } else {
      rest.push_back(std::move(f));
    }
  }
  factors = std::move(rest);
  return product;
}

/// Runs elimination; calls `on_eliminate(var, product_before_summing)` per variable.
template <class S, class Hook>
Factor<S> eliminate(std::vector<Factor<S>> factors, const std::vector<VariableId>& to_eliminate,
                    const std::vector<VariableId>& order, Hook&& on_eliminate) {
  std::set<VariableId> remaining(to_eliminate.begin(), to_eliminate.end());
  if (!order.empty()) {
    if (std::set<VariableId>(order.begin(), order.end()) != remaining || order.size() != remaining.size()) {
      throw InvalidArgument("elimination order must be a permutation of the non-query variables");
    }
  }
  std::size_t step = 0;
  while (!remaining.empty()) {
    const auto v = order.empty() ? min_degree_pick(factors, remaining) : order[step];
    ++step;
    remaining.erase(v);
    auto product = gather(factors, v);
    if (!product.contains(v)) {
      continue;
    }
    on_eliminate(v, product);
    factors.push_back(sum_out(product, v));
  }
  auto result = scalar_factor<S>(S::one());
  for (const auto& f : factors) {
    result = combine(result, f);
  }
  return result;
}

}  // namespace detail

/// Semiring marginal over `queries` on an evidence-compiled network with fixed ranges.
/**
 * Sum-product results are normalized; the normalizer is returned as log evidence.
 */
template <class S>
VEResult<S> ve_query(const Engine& engine, const Network& compiled, const RangeMap& ranges,
                     const std::vector<VariableId>& queries, const std::vector<VariableId>& order = {}) {
  for (const auto& q : queries) {
    if (!compiled.contains(q) || compiled.node(q).is_score()) {
      throw NetworkError("query variable '" + q + "' is not a variable of the network");
    }
  }
  auto factors = detail::network_factors<S>(engine, compiled, ranges);
  auto result = detail::eliminate<S>(std::move(factors), eliminable(compiled, queries), order,
                                     [](const VariableId&, const Factor<S>&) {});
  // Query variables that appear in no factor cannot occur, every variable has its own factor.
  VEResult<S> out{reorder(result, queries), std::numeric_limits<double>::quiet_NaN()};
  if constexpr (std::is_same_v<S, SumProduct>) {
    double total = 0.0;
    for (const double v : out.factor.table) {
      total += v;
    }
    if (!(total > 0.0)) {
      throw DegenerateInput("evidence has zero probability");
    }
    for (auto& v : out.factor.table) {
      v /= total;
    }
    out.log_evidence = std::log(total);
  }
  return out;
}

/// Compiles evidence, computes ranges and runs `ve_query`.
template <class S>
VEResult<S> ve_query(const Engine& engine, const Network& net, const Evidence& evidence,
                     const std::vector<VariableId>& queries, const VEOptions& options = {}) {
  const auto model = compile_evidence(net, evidence);
  const auto ranges = compute_ranges(engine, model.net, model.hard, options.target_size);
  return ve_query<S>(engine, model.net, ranges, queries, options.order);
}

/// Normalized weights of a one-variable factor.
template <class S>
std::vector<double> factor_marginal(const Factor<S>& f) {
  std::vector<double> out;
  out.reserve(f.table.size());
  for (const auto& v : f.table) {
    out.push_back(S::weight(v));
  }
  if (!normalize_in_place(out)) {
    throw DegenerateInput("query has no mass under the evidence");
  }
  return out;
}

/// Per-variable normalized marginals of `queries` under semiring `S`.
template <class S = SumProduct>
std::map<VariableId, std::vector<double>> ve_marginals(const Engine& engine, const Network& compiled,
                                                       const RangeMap& ranges, const std::vector<VariableId>& queries,
                                                       const std::vector<VariableId>& order = {}) {
  std::map<VariableId, std::vector<double>> out;
  for (const auto& q : queries) {
    std::vector<VariableId> ord;
    for (const auto& v : order) {
      if (v != q) {
        ord.push_back(v);
      }
    }
    out[q] = factor_marginal(ve_query<S>(engine, compiled, ranges, {q}, ord).factor);
  }
  return out;
}

struct MPEResult {
  Assignment assignment;
  /// Joint mass of the assignment (score nodes included).
  double value = 0.0;
};

/// Joint mass of a full assignment: the product of every node's table entry, in node order.
inline double joint_mass(const Engine& engine, const Network& compiled, const RangeMap& ranges,
                         const Assignment& assignment) {
  double value = 1.0;
  for (const auto& n : compiled.nodes()) {
    const auto parents = parent_values(n, assignment);
    if (n.is_score()) {
      value *= get_score(engine, *n.sf, parents);
    } else {
      const Range point{assignment.at(n.id)};
      const auto& r = ranges.at(n.id);
      auto w = range_weights(engine, *n.sf, parents, point);
      if (n.sf->signature().continuous && r.size() > 1) {
        const auto widths = grid_widths(r);
        w.front() *= widths[index_of(r, point.front())];
      }
      value *= w.front();
    }
  }
  return value;
}

/// Most probable assignment of every variable given the evidence, by max-product elimination
/// with argmax traceback (ties go to the first value in range order).
inline MPEResult mpe_decode(const Engine& engine, const Network& compiled, const RangeMap& ranges,
                            const std::vector<VariableId>& order = {}) {
  using S = MaxProduct;
  std::vector<std::pair<VariableId, Factor<S>>> trace;
  auto factors = detail::network_factors<S>(engine, compiled, ranges);
  const auto result = detail::eliminate<S>(std::move(factors), eliminable(compiled, {}), order,
                                           [&](const VariableId& v, const Factor<S>& product) {
                                             trace.emplace_back(v, product);
                                           });
  if (!(result.table.front() > 0.0)) {
    throw DegenerateInput("evidence has zero probability");
  }
  MPEResult out;
  for (auto it = trace.rbegin(); it != trace.rend(); ++it) {
    const auto& [v, f] = *it;
    const auto strides = f.strides();
    const auto pos = f.position(v);
    std::size_t base = 0;
    for (std::size_t k = 0; k < f.vars.size(); ++k) {
      if (k != pos) {
        base += index_of(f.ranges[k], out.assignment.at(f.vars[k])) * strides[k];
      }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.ranges[pos].size(); ++i) {
      if (f.table[base + i * strides[pos]] > f.table[base + best * strides[pos]]) {
        best = i;
      }
    }
    out.assignment[v] = f.ranges[pos][best];
  }
  out.value = joint_mass(engine, compiled, ranges, out.assignment);
  return out;
}

inline MPEResult mpe_decode(const Engine& engine, const Network& net, const Evidence& evidence,
                            const VEOptions& options = {}) {
  const auto model = compile_evidence(net, evidence);
  const auto ranges = compute_ranges(engine, model.net, model.hard, options.target_size);
  return mpe_decode(engine, model.net, ranges, options.order);
}

}  // namespace opnet

#endif

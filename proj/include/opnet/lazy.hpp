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


#ifndef OPNET_LAZY_HPP
#define OPNET_LAZY_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "opnet/bp.hpp"
#include "opnet/network.hpp"
#include "opnet/ve.hpp"

namespace opnet {

enum class BaseAlgorithm { bp, ve };

struct RefineOptions {
  BaseAlgorithm base = BaseAlgorithm::bp;
  std::size_t initial_size = 5;
  double growth_factor = 2.0;
  double tolerance = 1e-3;
  std::size_t max_rounds = 6;
  BPOptions bp;
};

struct RefinementRound {
  RangeMap supports;
  /// Change from the previous round; NaN for the first round unless it is a fixed point.
  double delta = std::numeric_limits<double>::quiet_NaN();
  /// Variables whose support is best effort only.
  std::vector<VariableId> no_guarantee;
};

struct RefinementResult {
  std::map<VariableId, std::vector<double>> beliefs;
  RangeMap ranges;
  std::vector<RefinementRound> trace;
  bool converged = false;
  /// Coverage of the last round when the base algorithm is bp.
  std::map<VariableId, CoverageEntry> coverage;
  std::vector<std::string> diagnostics;
};

/// Working state: per-variable support and the nominal size it was requested at.
struct RefinementState {
  RangeMap supports;
  std::map<VariableId, std::size_t> nominal;
  std::size_t iteration = 0;
};

namespace detail {

inline RefinementState grow(const Engine& engine, const RefinementState& state, const CompiledModel& model,
                            const std::function<std::size_t(const VariableId&)>& target_of) {
  RefinementState next;
  next.iteration = state.iteration + 1;
  for (const auto& id : topological_order(model.net)) {
    const auto& node = model.net.node(id);
    if (node.is_score()) {
      continue;
    }
    if (const auto h = model.hard.find(id); h != model.hard.end()) {
      next.supports[id] = {h->second};
      next.nominal[id] = 1;
      continue;
    }
    const auto target = target_of(id);
    std::vector<Range> parent_ranges;
    for (const auto& p : node.parents) {
      parent_ranges.push_back(next.supports.at(p));
    }
    const auto prior = state.supports.find(id);
    next.supports[id] =
        support(engine, *node.sf, parent_ranges, target, prior == state.supports.end() ? Range{} : prior->second);
    next.nominal[id] = target;
  }
  return next;
}

}  // namespace detail

/// Supports requested at `size` for every unobserved variable.
inline RefinementState initial_state(const Engine& engine, const CompiledModel& model, std::size_t size) {
  return detail::grow(engine, {}, model, [size](const VariableId&) { return size; });
}

/// Grows every support toward ceil(growth_factor · nominal size), keeping the previous values.
/**
 * The nominal size is the size last requested from support, so repeated growth follows the
 * requested sizes rather than the sizes of the merged supports.
 */
inline RefinementState expand_support(const Engine& engine, const RefinementState& state, const CompiledModel& model,
                                      double growth_factor) {
  if (!(growth_factor > 1.0)) {
    throw InvalidArgument("growth factor must exceed 1");
  }
  return detail::grow(engine, state, model, [&](const VariableId& id) {
    const auto it = state.nominal.find(id);
    const auto old = it == state.nominal.end() ? std::size_t{1} : it->second;
    return static_cast<std::size_t>(std::ceil(growth_factor * static_cast<double>(old)));
  });
}

namespace detail {

/// L∞ distance over shared support points, each side renormalized over those points.
inline double belief_delta(const RangeMap& old_ranges,
                           const std::map<VariableId, std::vector<double>>& old_beliefs, const RangeMap& new_ranges,
                           const std::map<VariableId, std::vector<double>>& new_beliefs) {
  double delta = 0.0;
  for (const auto& [id, nb] : new_beliefs) {
    const auto ob = old_beliefs.find(id);
    if (ob == old_beliefs.end()) {
      continue;
    }
    const auto& orange = old_ranges.at(id);
    const auto& nrange = new_ranges.at(id);
    const auto& a = ob->second;
    const auto& b = nb;
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < orange.size(); ++i) {
      const auto j = index_of(nrange, orange[i]);
      if (j < nrange.size()) {
        x.push_back(a[i]);
        y.push_back(b[j]);
      }
    }
    if (!normalize_in_place(x) || !normalize_in_place(y)) {
      continue;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      delta = std::max(delta, std::abs(x[i] - y[i]));
    }
  }
  return delta;
}

}  // namespace detail

/// Repeats support expansion and a base inference until beliefs settle or `max_rounds` is hit.
inline RefinementResult refine_infer(const Engine& engine, const Network& net, const Evidence& evidence,
                                     const RefineOptions& options = {}) {
  if (options.max_rounds == 0) {
    throw InvalidArgument("max_rounds must be at least 1");
  }
  const auto model = compile_evidence(net, evidence);
  if (options.base == BaseAlgorithm::bp) {
    for (const auto& n : model.net.nodes()) {
      if (n.is_score() && n.parents.size() != 1) {
        throw NetworkError("base algorithm bp does not handle score node '" + n.id + "'");
      }
    }
  } else {
    for (const auto& n : model.net.nodes()) {
      if (!engine.registry().supports(ops::MakeFactors::name, n.sf->kind())) {
        throw UnsupportedOperation(std::string(ops::MakeFactors::name), std::string(n.sf->kind()), n.id);
      }
    }
  }
  std::vector<VariableId> variables;
  for (const auto& n : model.net.nodes()) {
    if (!n.is_score()) {
      variables.push_back(n.id);
    }
  }

  auto run_base = [&](const RangeMap& ranges, RefinementResult& into) {
    if (options.base == BaseAlgorithm::bp) {
      auto r = bp_infer(engine, model.net, ranges, options.bp);
      into.coverage = std::move(r.coverage);
      into.diagnostics = std::move(r.diagnostics);
      return std::move(r.beliefs);
    }
    return ve_marginals<SumProduct>(engine, model.net, ranges, variables);
  };

  auto flag_best_effort = [&](RefinementRound& round) {
    for (const auto& id : variables) {
      const auto& node = model.net.node(id);
      if (model.hard.count(id) == 0 &&
          detail::selected_support_quality(engine, *node.sf) == SupportQuality::best_effort) {
        round.no_guarantee.push_back(id);
      }
    }
  };

  RefinementResult result;
  auto state = initial_state(engine, model, options.initial_size);
  result.beliefs = run_base(state.supports, result);
  result.ranges = state.supports;
  result.trace.push_back({state.supports, std::numeric_limits<double>::quiet_NaN(), {}});
  flag_best_effort(result.trace.back());
  while (result.trace.size() < options.max_rounds) {
    auto next = expand_support(engine, state, model, options.growth_factor);
    if (next.supports == state.supports) {
      // Nothing grew: a fixed point.
      result.trace.back().delta = 0.0;
      result.converged = true;
      break;
    }
    auto beliefs = run_base(next.supports, result);
    RefinementRound round{next.supports, 0.0, {}};
    round.delta = detail::belief_delta(state.supports, result.beliefs, next.supports, beliefs);
    flag_best_effort(round);
    result.trace.push_back(std::move(round));
    result.beliefs = std::move(beliefs);
    result.ranges = next.supports;
    state = std::move(next);
    if (result.trace.back().delta < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged) {
    result.diagnostics.push_back("refinement stopped after " + std::to_string(result.trace.size()) +
                                 " rounds without meeting the tolerance");
  }
  return result;
}

}  // namespace opnet

#endif

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


#ifndef OPNET_EM_HPP
#define OPNET_EM_HPP

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "opnet/compose.hpp"
#include "opnet/network.hpp"
#include "opnet/ve.hpp"

namespace opnet {

using Record = Assignment;
using Dataset = std::vector<Record>;

/// Expected counts per learnable variable: one row per parent assignment (in the table's own
/// row order), one column per value.
using SufficientStats = std::map<VariableId, std::vector<std::vector<double>>>;

/// True for the kinds EM can re-estimate.
inline bool learnable(const SFunc& sf) {
  return dynamic_cast<const CatDist*>(&sf) != nullptr || dynamic_cast<const FlipDist*>(&sf) != nullptr ||
         dynamic_cast<const DiscreteCPT*>(&sf) != nullptr;
}

namespace detail {

/// Value list of a learnable SFunc (column order of its stats).
inline Range learnable_values(const SFunc& sf) {
  if (const auto* cat = dynamic_cast<const CatDist*>(&sf)) {
    return cat->values();
  }
  if (const auto* cpt = dynamic_cast<const DiscreteCPT*>(&sf)) {
    return cpt->values();
  }
  return {Value{false}, Value{true}};
}

inline std::size_t learnable_rows(const SFunc& sf) {
  if (const auto* cpt = dynamic_cast<const DiscreteCPT*>(&sf)) {
    return cpt->table().size();
  }
  return 1;
}

inline std::size_t stats_row(const SFunc& sf, std::span<const Value> parents) {
  if (const auto* cpt = dynamic_cast<const DiscreteCPT*>(&sf)) {
    return cpt->row_of(parents);
  }
  return 0;
}

inline Evidence record_evidence(const Record& record) {
  Evidence ev;
  for (const auto& [id, v] : record) {
    ev.hard(id, v);
  }
  return ev;
}

}  // namespace detail

/// Zero-filled stats for every learnable variable.
inline SufficientStats empty_stats(const Network& net) {
  SufficientStats out;
  for (const auto& n : net.nodes()) {
    if (n.sf && learnable(*n.sf)) {
      out[n.id].assign(detail::learnable_rows(*n.sf),
                       std::vector<double>(detail::learnable_values(*n.sf).size(), 0.0));
    }
  }
  return out;
}

struct RecordStats {
  SufficientStats stats;
  double log_likelihood = 0.0;
};

/// Posterior family marginals of every learnable variable given one record.
/**
 * Families whose variables are all observed contribute indicator counts.
 */
inline RecordStats expected_stats(const Engine& engine, const Network& net, const Record& record) {
  const auto model = compile_evidence(net, detail::record_evidence(record));
  const auto ranges = compute_ranges(engine, model.net, model.hard, 2);
  RecordStats out{empty_stats(net), 0.0};
  out.log_likelihood = ve_query<SumProduct>(engine, model.net, ranges, {}).log_evidence;
  for (auto& [id, rows] : out.stats) {
    const auto& node = net.node(id);
    const auto values = detail::learnable_values(*node.sf);
    std::vector<VariableId> family = node.parents;
    family.push_back(id);
    const bool observed = std::all_of(family.begin(), family.end(), [&](const VariableId& v) {
      return record.count(v) != 0;
    });
    if (observed) {
      std::vector<Value> parents;
      for (const auto& p : node.parents) {
        parents.push_back(model.hard.at(p));
      }
      const auto col = index_of(values, model.hard.at(id));
      if (col == values.size()) {
        throw InvalidArgument("observed value " + to_string(model.hard.at(id)) + " of '" + id + "' is not in its range");
      }
      rows[detail::stats_row(*node.sf, parents)][col] += 1.0;
      continue;
    }
    const auto f = ve_query<SumProduct>(engine, model.net, ranges, family).factor;
    AssignmentCounter counter(range_sizes(f.ranges));
    std::vector<Value> parents(node.parents.size());
    for (std::size_t r = 0; r < counter.total(); ++r, counter.next()) {
      for (std::size_t k = 0; k < parents.size(); ++k) {
        parents[k] = f.ranges[k][counter.index()[k]];
      }
      const auto& x = f.ranges.back()[counter.index().back()];
      const auto col = index_of(values, x);
      if (col < values.size() && f.table[r] > 0.0) {
        rows[detail::stats_row(*node.sf, parents)][col] += f.table[r];
      }
    }
  }
  return out;
}

/// Normalized (count + smoothing) per row; an all-zero row with no smoothing becomes uniform.
inline std::vector<double> maximize_row(const std::vector<double>& counts, double smoothing) {
  if (smoothing < 0.0) {
    throw InvalidArgument("smoothing must be nonnegative");
  }
  std::vector<double> out(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = counts[i] + smoothing;
    total += out[i];
  }
  if (!(total > 0.0)) {
    return std::vector<double>(counts.size(), 1.0 / static_cast<double>(counts.size()));
  }
  for (auto& x : out) {
    x /= total;
  }
  return out;
}

/// Network with every learnable variable re-estimated from `stats`.
inline Network maximize_stats(const Network& net, const SufficientStats& stats, double smoothing) {
  Network out = net;
  for (const auto& [id, rows] : stats) {
    const auto& sf = *net.node(id).sf;
    if (const auto* cpt = dynamic_cast<const DiscreteCPT*>(&sf)) {
      std::vector<std::vector<double>> table;
      table.reserve(rows.size());
      for (const auto& r : rows) {
        table.push_back(maximize_row(r, smoothing));
      }
      out.replace(id, std::make_shared<DiscreteCPT>(cpt->i_ranges(), cpt->values(), table));
    } else if (const auto* cat = dynamic_cast<const CatDist*>(&sf)) {
      out.replace(id, std::make_shared<CatDist>(cat->values(), maximize_row(rows.front(), smoothing)));
    } else {
      out.replace(id, std::make_shared<FlipDist>(maximize_row(rows.front(), smoothing)[1]));
    }
  }
  return out;
}

/// Replaces every learnable variable's parameters with uniform ones.
inline Network uniform_parameters(const Network& net) {
  return maximize_stats(net, empty_stats(net), 0.0);
}

struct EMOptions {
  std::size_t rounds = 20;
  double smoothing = 1e-6;
  /// Stop when the log-likelihood improves by less than this.
  double tolerance = 1e-9;
};

struct EMResult {
  Network network;
  /// Observed-data log-likelihood before the first round and after each round.
  std::vector<double> log_likelihood;
  std::size_t rounds = 0;
  std::vector<std::string> diagnostics;
};

namespace detail {

struct EStep {
  SufficientStats stats;
  double log_likelihood = 0.0;
};

inline EStep e_step(const Engine& engine, const Network& net, const std::map<Record, std::size_t>& groups,
                    std::vector<std::string>& diagnostics) {
  EStep out{empty_stats(net), 0.0};
  for (const auto& [record, count] : groups) {
    RecordStats rs;
    try {
      rs = expected_stats(engine, net, record);
    } catch (const DegenerateInput&) {
      const std::string d = "a record with zero probability under the model was skipped";
      if (std::find(diagnostics.begin(), diagnostics.end(), d) == diagnostics.end()) {
        diagnostics.push_back(d);
      }
      continue;
    }
    const auto weight = static_cast<double>(count);
    out.log_likelihood += weight * rs.log_likelihood;
    for (auto& [id, rows] : out.stats) {
      const auto& add = rs.stats.at(id);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          rows[r][c] += weight * add[r][c];
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Alternates expected counts and re-normalization starting from the network's parameters.
inline EMResult em_train(const Engine& engine, const Network& net, const Dataset& data, const EMOptions& options = {}) {
  if (data.empty()) {
    throw InvalidArgument("EM needs at least one record");
  }
  require_valid(net);
  for (const auto& record : data) {
    for (const auto& [id, v] : record) {
      if (!net.contains(id)) {
        throw InvalidArgument("record mentions unknown variable '" + id + "'");
      }
    }
  }
  // Identical records share one inference.
  std::map<Record, std::size_t> groups;
  for (const auto& record : data) {
    ++groups[record];
  }
  EMResult result{net, {}, 0, {}};
  if (options.rounds == 0) {
    return result;
  }
  auto step = detail::e_step(engine, result.network, groups, result.diagnostics);
  result.log_likelihood.push_back(step.log_likelihood);
  for (std::size_t round = 0; round < options.rounds; ++round) {
    result.network = maximize_stats(result.network, step.stats, options.smoothing);
    ++result.rounds;
    step = detail::e_step(engine, result.network, groups, result.diagnostics);
    result.log_likelihood.push_back(step.log_likelihood);
    const auto n = result.log_likelihood.size();
    if (std::abs(result.log_likelihood[n - 1] - result.log_likelihood[n - 2]) < options.tolerance) {
      break;
    }
  }
  return result;
}

}  // namespace opnet

#endif

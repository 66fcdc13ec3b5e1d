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


#ifndef OPNET_JOB_HPP
#define OPNET_JOB_HPP

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "opnet/bp.hpp"
#include "opnet/em.hpp"
#include "opnet/lazy.hpp"
#include "opnet/sampling.hpp"
#include "opnet/semiring.hpp"
#include "opnet/spec_io.hpp"
#include "opnet/ve.hpp"

namespace opnet {

/// Flags of one `infer` run.
struct JobOptions {
  std::string algorithm = "ve";
  std::string semiring = "sum_product";
  std::string policy = "default";
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  /// BP and lazy-refinement convergence threshold.
  double tolerance = 1e-6;
  std::size_t max_iterations = 50;
  double damping = 0.5;
  std::string base = "bp";
  std::size_t max_rounds = 6;
  std::size_t target_size = 21;
};

struct LearnOptions {
  std::string policy = "default";
  std::size_t rounds = 20;
  double smoothing = 1e-6;
  double tolerance = 1e-9;
};

namespace detail {

inline json marginal_json(const Range& range, const std::vector<double>& p) {
  json out = json::object();
  for (std::size_t i = 0; i < range.size(); ++i) {
    out[to_string(range[i])] = p[i];
  }
  return out;
}

inline json coverage_json(const CoverageEntry& e) {
  return {{"layer", to_string(e.tag)}, {"status", to_string(e.status)}, {"reasons", e.reasons}};
}

/// Exact algorithms cover every variable; only the layer is informative.
inline json full_coverage(const Network& compiled, const Registry& registry, const std::vector<VariableId>& queries) {
  const auto layers = classify_layers(compiled, registry);
  json out = json::object();
  for (const auto& q : queries) {
    out[q] = {{"layer", to_string(layers.at(q).tag)},
              {"status", to_string(CoverageStatus::full)},
              {"reasons", json::array()}};
  }
  return out;
}

inline std::size_t nearest(const Range& grid, double x) {
  std::size_t best = 0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double e = std::abs(to_double(grid[i]) - x);
    if (e < d) {
      d = e;
      best = i;
    }
  }
  return best;
}

/// Weighted histogram of particles; real-valued variables are binned to the nearest grid point.
inline std::vector<double> particle_marginal(const ParticleSet& set, const VariableId& var, const Range& range,
                                             bool continuous) {
  if (!continuous) {
    return estimate_marginal(set, var, range);
  }
  const auto w = set.scaled_weights();
  std::vector<double> out(range.size(), 0.0);
  for (std::size_t i = 0; i < set.particles.size(); ++i) {
    out[nearest(range, to_double(set.particles[i].assignment.at(var)))] += w[i];
  }
  if (!normalize_in_place(out)) {
    throw DegenerateInput("no particle carries weight");
  }
  return out;
}

template <class S>
json ve_marginals_json(const Engine& engine, const CompiledModel& model, const RangeMap& ranges,
                       const std::vector<VariableId>& queries) {
  json out = json::object();
  for (const auto& [q, p] : ve_marginals<S>(engine, model.net, ranges, queries)) {
    out[q] = marginal_json(ranges.at(q), p);
  }
  return out;
}

}  // namespace detail

/// Runs one inference job. Same (spec, options) gives an identical document.
inline json execute_job(const Registry& registry, const ModelSpec& spec, const JobOptions& options) {
  const auto& policy = policy_by_name(options.policy);
  const Engine engine{registry, policy};
  const auto model = compile_evidence(spec.network, spec.evidence);
  require_valid(model.net);
  const auto ranges = compute_ranges(engine, model.net, model.hard, options.target_size);

  json doc;
  json diagnostics = json::array();
  std::size_t rounds = 1;
  const auto& algo = options.algorithm;

  if (algo == "ve") {
    if (options.semiring == "sum_product") {
      doc["marginals"] = detail::ve_marginals_json<SumProduct>(engine, model, ranges, spec.queries);
    } else if (options.semiring == "max_product") {
      doc["marginals"] = detail::ve_marginals_json<MaxProduct>(engine, model, ranges, spec.queries);
      const auto mpe = mpe_decode(engine, model.net, ranges);
      json assignment = json::object();
      for (const auto& q : spec.queries) {
        assignment[q] = value_to_json(mpe.assignment.at(q));
      }
      doc["mpe"] = {{"assignment", assignment}, {"score", mpe.value}};
    } else if (options.semiring == "boolean") {
      doc["marginals"] = detail::ve_marginals_json<BooleanSemiring>(engine, model, ranges, spec.queries);
    } else if (options.semiring == "mixed") {
      doc["marginals"] = detail::ve_marginals_json<MixedSemiring>(engine, model, ranges, spec.queries);
    } else {
      throw InvalidArgument("unknown semiring '" + options.semiring + "'");
    }
    doc["coverage"] = detail::full_coverage(model.net, registry, spec.queries);
  } else if (algo == "bp") {
    BPOptions bo;
    bo.max_iterations = options.max_iterations;
    bo.damping = options.damping;
    bo.tolerance = options.tolerance;
    bo.target_size = options.target_size;
    const auto r = bp_infer(engine, model.net, ranges, bo);
    json marginals = json::object();
    json coverage = json::object();
    for (const auto& q : spec.queries) {
      if (const auto it = r.beliefs.find(q); it != r.beliefs.end()) {
        marginals[q] = detail::marginal_json(r.ranges.at(q), it->second);
      }
      coverage[q] = detail::coverage_json(r.coverage.at(q));
    }
    doc["marginals"] = marginals;
    doc["coverage"] = coverage;
    for (const auto& d : r.diagnostics) {
      diagnostics.push_back(d);
    }
    rounds = r.iterations;
  } else if (algo == "rejection" || algo == "lw" || algo == "lookahead") {
    ParticleSet set;
    if (algo == "rejection") {
      set = rejection_infer(engine, spec.network, spec.evidence, options.samples, options.seed);
    } else if (algo == "lw") {
      set = lw_infer(engine, spec.network, spec.evidence, options.samples, options.seed);
    } else {
      set = lookahead_infer(engine, spec.network, spec.evidence, options.samples, options.seed,
                            LookaheadOptions{options.target_size});
    }
    json marginals = json::object();
    for (const auto& q : spec.queries) {
      const auto& sf = *model.net.node(q).sf;
      marginals[q] = detail::marginal_json(
          ranges.at(q), detail::particle_marginal(set, q, ranges.at(q), sf.signature().continuous));
    }
    doc["marginals"] = marginals;
    doc["coverage"] = detail::full_coverage(model.net, registry, spec.queries);
    for (const auto& d : set.diagnostics) {
      diagnostics.push_back(d);
    }
    if (!set.particles.empty()) {
      diagnostics.push_back("effective sample size " + format_double(effective_sample_size(set)));
    }
  } else if (algo == "lazy") {
    RefineOptions ro;
    if (options.base == "bp") {
      ro.base = BaseAlgorithm::bp;
    } else if (options.base == "ve") {
      ro.base = BaseAlgorithm::ve;
    } else {
      throw InvalidArgument("unknown base algorithm '" + options.base + "'");
    }
    ro.tolerance = options.tolerance;
    ro.max_rounds = options.max_rounds;
    ro.bp.max_iterations = options.max_iterations;
    ro.bp.damping = options.damping;
    const auto r = refine_infer(engine, spec.network, spec.evidence, ro);
    json marginals = json::object();
    for (const auto& q : spec.queries) {
      if (const auto it = r.beliefs.find(q); it != r.beliefs.end()) {
        marginals[q] = detail::marginal_json(r.ranges.at(q), it->second);
      }
    }
    doc["marginals"] = marginals;
    if (ro.base == BaseAlgorithm::bp) {
      json coverage = json::object();
      for (const auto& q : spec.queries) {
        if (const auto it = r.coverage.find(q); it != r.coverage.end()) {
          coverage[q] = detail::coverage_json(it->second);
        }
      }
      doc["coverage"] = coverage;
    } else {
      doc["coverage"] = detail::full_coverage(model.net, registry, spec.queries);
    }
    for (const auto& d : r.diagnostics) {
      diagnostics.push_back(d);
    }
    rounds = r.trace.size();
  } else {
    throw InvalidArgument("unknown algorithm '" + algo + "'");
  }

  doc["diagnostics"] = diagnostics;
  doc["meta"] = {{"seed", options.seed},
                 {"algorithm", algo},
                 {"policy", options.policy},
                 {"rounds", rounds},
                 {"timing", {{"op_count", engine.op_count()}}}};
  if (algo == "ve") {
    doc["meta"]["semiring"] = options.semiring;
  }
  return doc;
}

/// Records from a JSON array of `{variable: value}` objects.
inline Dataset parse_dataset(const json& doc, const Network& net) {
  const json* records = &doc;
  if (doc.is_object() && doc.contains("records")) {
    records = &doc.at("records");
  }
  if (!records->is_array()) {
    throw SpecError("", "expected an array of records");
  }
  Dataset out;
  for (std::size_t i = 0; i < records->size(); ++i) {
    const auto path = "[" + std::to_string(i) + "]";
    const auto& r = (*records)[i];
    if (!r.is_object()) {
      throw SpecError(path, "expected an object");
    }
    Record rec;
    for (const auto& [name, value] : r.items()) {
      if (!net.contains(name) || net.node(name).is_score()) {
        throw SpecError(path + "." + name, "unknown variable '" + name + "'");
      }
      if (value.is_null()) {
        continue;
      }
      rec[name] = value_from_json(value, path + "." + name);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// Fits the learnable parameters of `spec` to `data`; returns the fitted model and the likelihood trace.
inline json execute_learn(const Registry& registry, const ModelSpec& spec, const Dataset& data,
                          const LearnOptions& options) {
  const Engine engine{registry, policy_by_name(options.policy)};
  EMOptions eo;
  eo.rounds = options.rounds;
  eo.smoothing = options.smoothing;
  eo.tolerance = options.tolerance;
  const auto r = em_train(engine, spec.network, data, eo);
  ModelSpec fitted{r.network, {}, spec.queries};
  json doc;
  doc["model"] = serialize_spec(fitted);
  doc["log_likelihood"] = r.log_likelihood;
  doc["diagnostics"] = r.diagnostics;
  doc["meta"] = {{"algorithm", "em"},
                 {"policy", options.policy},
                 {"rounds", r.rounds},
                 {"records", data.size()},
                 {"timing", {{"op_count", engine.op_count()}}}};
  return doc;
}

/// Error document written to standard error on failure.
inline json error_document(const std::exception& e) {
  json err = {{"message", e.what()}};
  if (const auto* s = dynamic_cast<const SpecError*>(&e)) {
    err["type"] = "spec_error";
    err["path"] = s->path();
  } else if (const auto* u = dynamic_cast<const UnsupportedOperation*>(&e)) {
    err["type"] = "unsupported_operation";
    err["operation"] = u->operation();
    err["kind"] = u->kind();
    if (!u->variable().empty()) {
      err["variable"] = u->variable();
    }
  } else if (dynamic_cast<const NetworkError*>(&e) != nullptr) {
    err["type"] = "network_error";
  } else if (dynamic_cast<const DegenerateInput*>(&e) != nullptr) {
    err["type"] = "degenerate_input";
  } else if (dynamic_cast<const InvalidArgument*>(&e) != nullptr) {
    err["type"] = "invalid_argument";
  } else {
    err["type"] = "error";
  }
  return {{"error", err}};
}

}  // namespace opnet

#endif

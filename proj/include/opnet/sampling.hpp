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


#ifndef OPNET_SAMPLING_HPP
#define OPNET_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "opnet/bp.hpp"
#include "opnet/compose.hpp"
#include "opnet/network.hpp"

namespace opnet {

struct Particle {
  Assignment assignment;
  double log_weight = 0.0;

  [[nodiscard]] double weight() const { return std::exp(log_weight); }
};

struct ParticleSet {
  std::vector<Particle> particles;
  /// Samples drawn, including rejected ones.
  std::size_t attempts = 0;
  std::vector<std::string> diagnostics;

  /// Linear weights scaled so the largest is 1.
  [[nodiscard]] std::vector<double> scaled_weights() const {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : particles) {
      top = std::max(top, p.log_weight);
    }
    std::vector<double> out;
    out.reserve(particles.size());
    for (const auto& p : particles) {
      out.push_back(std::isfinite(top) ? std::exp(p.log_weight - top) : 0.0);
    }
    return out;
  }

  /// log of the mean weight (the evidence estimate for weighted samplers).
  [[nodiscard]] double log_normalizer() const {
    if (attempts == 0) {
      return -std::numeric_limits<double>::infinity();
    }
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : particles) {
      top = std::max(top, p.log_weight);
    }
    if (!std::isfinite(top)) {
      return top;
    }
    double s = 0.0;
    for (const auto& p : particles) {
      s += std::exp(p.log_weight - top);
    }
    return top + std::log(s / static_cast<double>(attempts));
  }
};

namespace detail {

inline void require_positive(const std::vector<double>& w) {
  double total = 0.0;
  for (const double x : w) {
    total += x;
  }
  if (!(total > 0.0)) {
    throw DegenerateInput("particle set has zero total weight");
  }
}

}  // namespace detail

/// (Σw)² / Σw².
inline double effective_sample_size(const ParticleSet& set) {
  const auto w = set.scaled_weights();
  detail::require_positive(w);
  double s = 0.0;
  double s2 = 0.0;
  for (const double x : w) {
    s += x;
    s2 += x * x;
  }
  return s * s / s2;
}

/// Self-normalized weighted frequencies of the values of `range`.
inline std::vector<double> estimate_marginal(const ParticleSet& set, const VariableId& var, const Range& range) {
  const auto w = set.scaled_weights();
  detail::require_positive(w);
  std::vector<double> out(range.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w[i];
    const auto k = index_of(range, set.particles[i].assignment.at(var));
    if (k < range.size()) {
      out[k] += w[i];
    }
  }
  for (auto& x : out) {
    x /= total;
  }
  return out;
}

/// Self-normalized importance standard error of each entry of `estimate_marginal`.
inline std::vector<double> marginal_standard_error(const ParticleSet& set, const VariableId& var,
                                                   const Range& range) {
  const auto p = estimate_marginal(set, var, range);
  const auto w = set.scaled_weights();
  double total = 0.0;
  for (const double x : w) {
    total += x;
  }
  std::vector<double> out(range.size(), 0.0);
  for (std::size_t k = 0; k < range.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double f = set.particles[i].assignment.at(var) == range[k] ? 1.0 : 0.0;
      s += w[i] * w[i] * (f - p[k]) * (f - p[k]);
    }
    out[k] = std::sqrt(s) / total;
  }
  return out;
}

/// Weighted mean of a numeric variable and its self-normalized standard error.
inline std::pair<double, double> estimate_mean(const ParticleSet& set, const VariableId& var) {
  const auto w = set.scaled_weights();
  detail::require_positive(w);
  double total = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w[i];
    mean += w[i] * to_double(set.particles[i].assignment.at(var));
  }
  mean /= total;
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = to_double(set.particles[i].assignment.at(var)) - mean;
    s += w[i] * w[i] * d * d;
  }
  return {mean, std::sqrt(s) / total};
}

/// Samples from the prior and keeps the particles that match the hard evidence exactly.
inline ParticleSet rejection_infer(const Engine& engine, const Network& net, const Evidence& evidence, std::size_t n,
                                   std::uint64_t seed) {
  for (const auto& [id, b] : evidence.bindings()) {
    if (!std::holds_alternative<Value>(b)) {
      throw InvalidArgument("rejection sampling needs hard evidence; '" + id + "' has a score");
    }
  }
  const auto model = compile_evidence(net, evidence);
  const auto order = topological_order(model.net);
  ParticleSet out;
  out.attempts = n;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = substream(seed, i);
    Particle p;
    bool accepted = true;
    for (const auto& id : order) {
      const auto& node = model.net.node(id);
      if (node.is_score()) {
        continue;
      }
      p.assignment[id] = sample(engine, *node.sf, parent_values(node, p.assignment), rng);
      if (const auto h = model.hard.find(id); h != model.hard.end() && !(h->second == p.assignment[id])) {
        accepted = false;
        break;
      }
    }
    if (accepted) {
      out.particles.push_back(std::move(p));
    }
  }
  if (out.particles.empty()) {
    out.diagnostics.emplace_back("rejection sampling accepted no particles");
  }
  return out;
}

namespace detail {

/// Per-variable λ̂ used as a lookahead proposal; empty map means plain likelihood weighting.
using Lookahead = std::map<VariableId, std::vector<double>>;

inline ParticleSet weighted_sampling(const Engine& engine, const CompiledModel& model, const RangeMap& ranges,
                                     const Lookahead& lookahead, std::size_t n, std::uint64_t seed) {
  const auto order = topological_order(model.net);
  ParticleSet out;
  out.attempts = n;
  out.particles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = substream(seed, i);
    Particle p;
    for (const auto& id : order) {
      const auto& node = model.net.node(id);
      const auto parents = parent_values(node, p.assignment);
      if (node.is_score()) {
        p.log_weight += std::log(get_score(engine, *node.sf, parents));
        continue;
      }
      if (const auto h = model.hard.find(id); h != model.hard.end()) {
        p.assignment[id] = h->second;
        p.log_weight += logcpdf(engine, *node.sf, parents, h->second);
        continue;
      }
      const auto la = lookahead.find(id);
      if (la == lookahead.end()) {
        p.assignment[id] = sample(engine, *node.sf, parents, rng);
        continue;
      }
      // Proposal q(x) ∝ P(x | parents) λ̂(x); the weight picks up P/q = Z / λ̂(x).
      const auto& range = ranges.at(id);
      const auto mass = range_weights(engine, *node.sf, parents, range);
      std::vector<double> q(range.size());
      double z = 0.0;
      for (std::size_t k = 0; k < range.size(); ++k) {
        q[k] = mass[k] * la->second[k];
        z += q[k];
      }
      if (!(z > 0.0)) {
        p.assignment[id] = sample(engine, *node.sf, parents, rng);
        p.log_weight = -std::numeric_limits<double>::infinity();
        continue;
      }
      const double u = uniform01(rng) * z;
      double cumulative = 0.0;
      std::size_t chosen = range.size() - 1;
      for (std::size_t k = 0; k < range.size(); ++k) {
        cumulative += q[k];
        if (u < cumulative && q[k] > 0.0) {
          chosen = k;
          break;
        }
      }
      while (q[chosen] == 0.0 && chosen > 0) {
        --chosen;
      }
      p.assignment[id] = range[chosen];
      p.log_weight += std::log(z) - std::log(la->second[chosen]);
    }
    out.particles.push_back(std::move(p));
  }
  const bool any = std::any_of(out.particles.begin(), out.particles.end(),
                               [](const Particle& p) { return std::isfinite(p.log_weight); });
  if (!any) {
    out.diagnostics.emplace_back("every particle has zero weight");
  }
  return out;
}

}  // namespace detail

/// Likelihood weighting: evidence variables are fixed and scored, the rest sampled from the prior.
inline ParticleSet lw_infer(const Engine& engine, const Network& net, const Evidence& evidence, std::size_t n,
                            std::uint64_t seed) {
  const auto model = compile_evidence(net, evidence);
  return detail::weighted_sampling(engine, model, {}, {}, n, seed);
}

struct LookaheadOptions {
  /// Support size for variables without a complete support.
  std::size_t target_size = 21;
};

/// Importance sampling that uses λ messages below the π-only top layer as a proposal.
/**
 * Top-layer variables are sampled from their priors. A finite-range variable outside the top
 * layer whose λ carries information is drawn from P(x | parents) λ(x), normalized, and the weight
 * is corrected by the ratio. On loopy networks, or when no λ is available, this is plain
 * likelihood weighting (with a diagnostic).
 */
inline ParticleSet lookahead_infer(const Engine& engine, const Network& net, const Evidence& evidence, std::size_t n,
                                   std::uint64_t seed, const LookaheadOptions& options = {}) {
  const auto model = compile_evidence(net, evidence);
  std::vector<std::string> diagnostics;
  detail::Lookahead lookahead;
  RangeMap ranges;
  if (!is_polytree(model.net)) {
    diagnostics.emplace_back("lookahead degraded to likelihood weighting: the network is not a polytree");
  } else {
    try {
      ranges = compute_ranges(engine, model.net, model.hard, options.target_size);
      const auto bp = bp_infer(engine, model.net, ranges);
      for (const auto& [id, lam] : bp.lambdas) {
        const auto& node = model.net.node(id);
        if (model.hard.count(id) != 0 || node.sf->signature().continuous ||
            detail::selected_support_quality(engine, *node.sf) != SupportQuality::complete) {
          continue;
        }
        const auto [lo, hi] = std::minmax_element(lam.begin(), lam.end());
        if (*hi > 0.0 && *hi - *lo > 1e-15 * *hi) {
          lookahead.emplace(id, lam);
        }
      }
    } catch (const Error& e) {
      diagnostics.push_back(std::string("lookahead degraded to likelihood weighting: ") + e.what());
      lookahead.clear();
    }
    if (lookahead.empty() && diagnostics.empty() && !evidence.empty()) {
      diagnostics.emplace_back("lookahead degraded to likelihood weighting: no informative λ reaches the frontier");
    }
  }
  auto out = detail::weighted_sampling(engine, model, ranges, lookahead, n, seed);
  out.diagnostics.insert(out.diagnostics.begin(), diagnostics.begin(), diagnostics.end());
  return out;
}

}  // namespace opnet

#endif

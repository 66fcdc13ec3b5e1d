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


#ifndef OPNET_BP_HPP
#define OPNET_BP_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opnet/compose.hpp"
#include "opnet/network.hpp"

namespace opnet {

struct BPOptions {
  std::size_t max_iterations = 50;
  double damping = 0.5;
  double tolerance = 1e-6;
  /// Support size for variables without a complete support.
  std::size_t target_size = 21;
};

enum class CoverageStatus { full, prior_only, uncovered };

inline const char* to_string(CoverageStatus s) {
  switch (s) {
    case CoverageStatus::full:
      return "full";
    case CoverageStatus::prior_only:
      return "prior_only";
    case CoverageStatus::uncovered:
      return "uncovered";
  }
  return "uncovered";
}

struct CoverageEntry {
  LayerTag tag = LayerTag::uncovered;
  CoverageStatus status = CoverageStatus::uncovered;
  std::vector<std::string> reasons;
};

struct BPResult {
  /// Normalized beliefs over `ranges`, for covered variables.
  std::map<VariableId, std::vector<double>> beliefs;
  RangeMap ranges;
  std::map<VariableId, CoverageEntry> coverage;
  /// Fused λ of each variable over its range; absent when no evidence reaches it.
  std::map<VariableId, std::vector<double>> lambdas;
  bool loopy = false;
  bool converged = true;
  std::size_t iterations = 1;
  std::vector<std::string> diagnostics;
};

/// Pointwise product of λ vectors; empty input gives all ones.
inline std::vector<double> compute_lambda(std::size_t size, const std::vector<std::vector<double>>& lambdas) {
  std::vector<double> out(size, 1.0);
  for (const auto& l : lambdas) {
    for (std::size_t i = 0; i < size; ++i) {
      out[i] *= l[i];
    }
  }
  return out;
}

namespace detail {

class BeliefPropagation {
 public:
  BeliefPropagation(const Engine& engine, const Network& net, RangeMap ranges, const BPOptions& options)
      : engine_{engine}, net_{net}, options_{options} {
    result_.ranges = std::move(ranges);
    layers_ = classify_layers(net_, engine_.registry());
    for (const auto& n : net_.nodes()) {
      if (n.is_score()) {
        if (n.parents.size() != 1) {
          throw NetworkError("score node '" + n.id + "' has " + std::to_string(n.parents.size()) +
                             " parents; only variable elimination handles such scores");
        }
        score_children_[n.parents.front()].push_back(&n);
        continue;
      }
      variables_.push_back(&n);
    }
    for (const auto* v : variables_) {
      for (const auto& p : v->parents) {
        children_[p].push_back(v->id);
      }
    }
  }

  BPResult run() {
    result_.loopy = !is_polytree(net_);
    if (result_.loopy) {
      flood();
    } else {
      two_sweep();
    }
    finish();
    return std::move(result_);
  }

 private:
  using Edge = std::pair<VariableId, VariableId>;  // (from, to)

  [[nodiscard]] const Range& range(const VariableId& id) const { return result_.ranges.at(id); }
  [[nodiscard]] const LayerInfo& layer(const VariableId& id) const { return layers_.at(id); }

  void note(const std::string& d) {
    if (std::find(result_.diagnostics.begin(), result_.diagnostics.end(), d) == result_.diagnostics.end()) {
      result_.diagnostics.push_back(d);
    }
  }

  /// λ contributions of score children over the variable's range.
  std::vector<std::vector<double>> score_lambdas(const VariableId& id) {
    std::vector<std::vector<double>> out;
    for (const auto* s : score_children_[id]) {
      if (layer(s->id).lambda) {
        out.push_back(lambda_weights(engine_, *s->sf, range(id)));
      }
    }
    return out;
  }

  /// Fused λ of `id` excluding the message from `skip`; nullopt when uninformative.
  std::optional<std::vector<double>> fused_lambda(const VariableId& id, const VariableId* skip = nullptr) {
    auto parts = score_lambdas(id);
    for (const auto& c : children_[id]) {
      if (skip != nullptr && c == *skip) {
        continue;
      }
      const auto it = lambda_msgs_.find({c, id});
      if (it != lambda_msgs_.end() && it->second) {
        parts.push_back(*it->second);
      }
    }
    if (parts.empty()) {
      return std::nullopt;
    }
    return compute_lambda(range(id).size(), parts);
  }

  /// Incoming π messages of `id`; missing ones become uniform (with a diagnostic unless it is
  /// `target`, whose π a λ message to `target` does not use).
  std::vector<PiMessage> incoming_pis(const Node& node, const VariableId* target = nullptr) {
    std::vector<PiMessage> out;
    for (const auto& p : node.parents) {
      const auto it = pi_msgs_.find({p, node.id});
      if (it != pi_msgs_.end() && it->second) {
        out.push_back(it->second);
      } else {
        if (target == nullptr || p != *target) {
          note("no π available from '" + p + "'; a uniform message stands in for it");
        }
        out.push_back(std::make_shared<CatDist>(range(p), std::vector<double>(range(p).size(),
                                                                               1.0 / double(range(p).size()))));
      }
    }
    return out;
  }

  std::vector<Range> parent_ranges(const Node& node) const {
    std::vector<Range> out;
    for (const auto& p : node.parents) {
      out.push_back(range(p));
    }
    return out;
  }

  /// π(X) as a Dist, or null when X is not π-capable.
  PiMessage pi_of(const Node& node) {
    if (!layer(node.id).pi) {
      return nullptr;
    }
    if (const auto it = pi_cache_.find(node.id); it != pi_cache_.end()) {
      return it->second;
    }
    const auto pis = incoming_pis(node);
    const auto pr = parent_ranges(node);
    auto pi = compute_pi(engine_, *node.sf, range(node.id), pr, pis);
    pi_cache_[node.id] = pi;
    return pi;
  }

  /// π message from `from` to its child `to`.
  PiMessage pi_message(const VariableId& from, const VariableId& to) {
    const auto& node = net_.node(from);
    auto pi = pi_of(node);
    if (!pi) {
      return nullptr;
    }
    std::optional<std::vector<double>> others;
    if (layer(from).lambda) {
      others = fused_lambda(from, &to);
    }
    if (!others && !result_.loopy) {
      return pi;
    }
    auto w = pi_weights(engine_, *pi, range(from));
    if (others) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] *= (*others)[i];
      }
    }
    return make_pi(range(from), std::move(w), node.sf->kind());
  }

  /// λ message from `from` to its parent `to`; nullopt when uninformative or unavailable.
  std::optional<std::vector<double>> lambda_message(const VariableId& from, const VariableId& to) {
    const auto& node = net_.node(from);
    if (!layer(from).lambda || !layer(to).lambda) {
      return std::nullopt;
    }
    const auto lam = fused_lambda(from);
    if (!lam) {
      return std::nullopt;
    }
    const auto target = static_cast<std::size_t>(std::find(node.parents.begin(), node.parents.end(), to) -
                                                 node.parents.begin());
    const auto pis = incoming_pis(node, &to);
    const auto pr = parent_ranges(node);
    const LambdaMessage score = std::make_shared<SoftScore>(range(from), *lam);
    try {
      const auto msg = send_lambda(engine_, *node.sf, score, range(from), pr, pis, target);
      return lambda_weights(engine_, *msg, range(to));
    } catch (const UnsupportedOperation& e) {
      unsupported_[from].push_back(e.what());
      return std::nullopt;
    }
  }

  void send(const VariableId& from, const VariableId& to) {
    const auto& to_node = net_.node(to);
    if (std::find(to_node.parents.begin(), to_node.parents.end(), from) != to_node.parents.end()) {
      pi_msgs_[{from, to}] = pi_message(from, to);
      pi_cache_.erase(to);
    } else {
      lambda_msgs_[{from, to}] = lambda_message(from, to);
    }
  }

  void two_sweep() {
    std::map<VariableId, std::vector<VariableId>> adjacent;
    for (const auto* v : variables_) {
      for (const auto& p : v->parents) {
        adjacent[v->id].push_back(p);
        adjacent[p].push_back(v->id);
      }
    }
    std::map<VariableId, bool> seen;
    for (const auto* root : variables_) {
      if (seen[root->id]) {
        continue;
      }
      // Depth-first preorder of the skeleton component rooted at `root`.
      std::vector<Edge> preorder;  // (tree parent, node)
      std::vector<Edge> stack{{"", root->id}};
      while (!stack.empty()) {
        const auto [up, id] = stack.back();
        stack.pop_back();
        if (seen[id]) {
          continue;
        }
        seen[id] = true;
        preorder.emplace_back(up, id);
        const auto& adj = adjacent[id];
        for (auto it = adj.rbegin(); it != adj.rend(); ++it) {
          if (!seen[*it]) {
            stack.emplace_back(id, *it);
          }
        }
      }
      for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
        if (!it->first.empty()) {
          send(it->second, it->first);
        }
      }
      for (const auto& [up, id] : preorder) {
        if (!up.empty()) {
          send(up, id);
        }
      }
    }
  }

  void flood() {
    std::vector<Edge> edges;
    for (const auto* v : variables_) {
      for (const auto& p : v->parents) {
        edges.emplace_back(p, v->id);
        edges.emplace_back(v->id, p);
      }
    }
    std::map<VariableId, std::vector<double>> previous;
    result_.converged = false;
    std::size_t iter = 0;
    while (iter < options_.max_iterations) {
      ++iter;
      std::map<Edge, PiMessage> new_pi;
      std::map<Edge, std::optional<std::vector<double>>> new_lambda;
      for (const auto& [from, to] : edges) {
        const auto& to_node = net_.node(to);
        if (std::find(to_node.parents.begin(), to_node.parents.end(), from) != to_node.parents.end()) {
          new_pi[{from, to}] = damp_pi({from, to}, pi_message(from, to));
        } else {
          new_lambda[{from, to}] = damp_lambda({from, to}, lambda_message(from, to));
        }
      }
      pi_msgs_ = std::move(new_pi);
      lambda_msgs_ = std::move(new_lambda);
      pi_cache_.clear();
      auto current = compute_beliefs();
      double delta = previous.empty() ? std::numeric_limits<double>::infinity() : 0.0;
      for (const auto& [id, b] : current) {
        const auto it = previous.find(id);
        if (it == previous.end()) {
          delta = std::numeric_limits<double>::infinity();
          continue;
        }
        for (std::size_t i = 0; i < b.size(); ++i) {
          delta = std::max(delta, std::abs(b[i] - it->second[i]));
        }
      }
      previous = std::move(current);
      if (delta < options_.tolerance) {
        result_.converged = true;
        break;
      }
    }
    result_.iterations = iter;
    if (!result_.converged) {
      note("loopy propagation stopped after " + std::to_string(iter) + " iterations without converging");
    }
  }

  PiMessage damp_pi(const Edge& e, PiMessage fresh) {
    const auto it = pi_msgs_.find(e);
    if (!fresh || it == pi_msgs_.end() || !it->second || options_.damping <= 0.0) {
      return fresh;
    }
    const auto& r = range(e.first);
    auto w = pi_weights(engine_, *fresh, r);
    const auto old = pi_weights(engine_, *it->second, r);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = (1.0 - options_.damping) * w[i] + options_.damping * old[i];
    }
    return make_pi(r, std::move(w), "damped message");
  }

  std::optional<std::vector<double>> damp_lambda(const Edge& e, std::optional<std::vector<double>> fresh) {
    const auto it = lambda_msgs_.find(e);
    if (!fresh || it == lambda_msgs_.end() || !it->second || options_.damping <= 0.0) {
      return fresh;
    }
    // Scale both to unit sum so damping mixes shapes, not magnitudes.
    auto w = *fresh;
    auto old = *it->second;
    if (!normalize_in_place(w) || !normalize_in_place(old)) {
      return fresh;
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = (1.0 - options_.damping) * w[i] + options_.damping * old[i];
    }
    return w;
  }

  std::map<VariableId, std::vector<double>> compute_beliefs() {
    std::map<VariableId, std::vector<double>> out;
    for (const auto* v : variables_) {
      const auto pi = pi_of(*v);
      if (!pi) {
        continue;
      }
      auto w = pi_weights(engine_, *pi, range(v->id));
      if (layer(v->id).lambda) {
        if (const auto lam = fused_lambda(v->id)) {
          for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] *= (*lam)[i];
          }
        }
      }
      if (!normalize_in_place(w)) {
        throw DegenerateInput("evidence has zero probability at variable '" + v->id + "'");
      }
      out[v->id] = std::move(w);
    }
    return out;
  }

  void finish() {
    result_.beliefs = compute_beliefs();
    for (const auto* v : variables_) {
      const auto& li = layer(v->id);
      CoverageEntry entry;
      entry.tag = li.tag;
      if (!li.pi) {
        entry.status = CoverageStatus::uncovered;
        entry.reasons.push_back(li.pi_reason);
      } else if (!li.lambda) {
        entry.status = CoverageStatus::prior_only;
        entry.reasons.emplace_back("no λ");
        entry.reasons.push_back(li.lambda_reason);
      } else {
        entry.status = CoverageStatus::full;
      }
      for (const auto& u : unsupported_[v->id]) {
        if (std::find(entry.reasons.begin(), entry.reasons.end(), u) == entry.reasons.end()) {
          entry.reasons.push_back(u);
        }
      }
      result_.coverage[v->id] = std::move(entry);
      if (li.lambda) {
        if (auto lam = fused_lambda(v->id)) {
          result_.lambdas[v->id] = std::move(*lam);
        }
      }
    }
  }

  const Engine& engine_;
  const Network& net_;
  BPOptions options_;
  BPResult result_;
  std::map<VariableId, LayerInfo> layers_;
  std::vector<const Node*> variables_;
  std::map<VariableId, std::vector<VariableId>> children_;
  std::map<VariableId, std::vector<const Node*>> score_children_;
  std::map<Edge, PiMessage> pi_msgs_;
  std::map<Edge, std::optional<std::vector<double>>> lambda_msgs_;
  std::map<VariableId, PiMessage> pi_cache_;
  std::map<VariableId, std::vector<std::string>> unsupported_;
};

}  // namespace detail

/// Belief propagation on an evidence-compiled network with fixed ranges.
/**
 * Polytrees use one collect and one distribute sweep over the skeleton; loopy graphs use damped
 * synchronous updates. Variables lacking π or λ operations are reported in the coverage map.
 */
inline BPResult bp_infer(const Engine& engine, const Network& compiled, RangeMap ranges,
                         const BPOptions& options = {}) {
  require_valid(compiled);
  return detail::BeliefPropagation(engine, compiled, std::move(ranges), options).run();
}

inline BPResult bp_infer(const Engine& engine, const Network& net, const Evidence& evidence,
                         const BPOptions& options = {}) {
  const auto model = compile_evidence(net, evidence);
  auto ranges = compute_ranges(engine, model.net, model.hard, options.target_size);
  return bp_infer(engine, model.net, std::move(ranges), options);
}

}  // namespace opnet

#endif

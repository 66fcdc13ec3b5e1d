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


#ifndef OPNET_NETWORK_HPP
#define OPNET_NETWORK_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "opnet/basic.hpp"
#include "opnet/operations.hpp"
#include "opnet/registry.hpp"

namespace opnet {

using VariableId = std::string;

/// One variable of a network.
struct Node {
  VariableId id;
  /// Null for placeholders.
  SFuncPtr sf;
  std::vector<VariableId> parents;
  bool placeholder = false;
  bool output = false;

  [[nodiscard]] bool is_score() const { return sf && sf->is_score(); }
};

/// Directed acyclic graph of SFuncs. Nodes keep their insertion order.
class Network {
 public:
  Network& add(VariableId id, SFuncPtr sf, std::vector<VariableId> parents = {}) {
    if (!sf) {
      throw NetworkError("variable '" + id + "' has no SFunc");
    }
    insert({std::move(id), std::move(sf), std::move(parents), false, false});
    return *this;
  }

  /// An input variable whose value is supplied by the caller.
  Network& add_placeholder(VariableId id) {
    insert({std::move(id), nullptr, {}, true, false});
    return *this;
  }

  Network& mark_output(const VariableId& id) {
    nodes_.at(position(id)).output = true;
    return *this;
  }

  /// Replaces the SFunc of an existing variable, keeping its parents.
  Network& replace(const VariableId& id, SFuncPtr sf) {
    auto& n = nodes_.at(position(id));
    n.sf = std::move(sf);
    n.placeholder = false;
    return *this;
  }

  [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] bool contains(const VariableId& id) const { return index_.count(id) != 0; }
  [[nodiscard]] const Node& node(const VariableId& id) const { return nodes_[position(id)]; }

  [[nodiscard]] std::size_t position(const VariableId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw NetworkError("unknown variable '" + id + "'");
    }
    return it->second;
  }

  /// Children of `id` in insertion order.
  [[nodiscard]] std::vector<VariableId> children(const VariableId& id) const {
    std::vector<VariableId> out;
    for (const auto& n : nodes_) {
      if (std::find(n.parents.begin(), n.parents.end(), id) != n.parents.end()) {
        out.push_back(n.id);
      }
    }
    return out;
  }

 private:
  void insert(Node node) {
    if (node.id.empty()) {
      throw NetworkError("variable ids must be nonempty");
    }
    if (contains(node.id)) {
      throw NetworkError("duplicate variable '" + node.id + "'");
    }
    index_.emplace(node.id, nodes_.size());
    nodes_.push_back(std::move(node));
  }

  std::vector<Node> nodes_;
  std::map<VariableId, std::size_t, std::less<>> index_;
};

/// A structural problem found by `validate`.
struct Diagnostic {
  VariableId variable;
  std::string message;
};

/// Reports cycles, arity mismatches and dangling parent ids. Never throws.
inline std::vector<Diagnostic> validate(const Network& net) {
  std::vector<Diagnostic> out;
  for (const auto& n : net.nodes()) {
    for (const auto& p : n.parents) {
      if (!net.contains(p)) {
        out.push_back({n.id, "parent '" + p + "' of '" + n.id + "' does not exist"});
      }
    }
    if (n.placeholder && !n.parents.empty()) {
      out.push_back({n.id, "placeholder '" + n.id + "' has parents"});
    }
    if (n.sf && n.sf->arity() != n.parents.size()) {
      out.push_back({n.id, "variable '" + n.id + "' declares " + std::to_string(n.sf->arity()) + " inputs but has " +
                               std::to_string(n.parents.size()) + " parents"});
    }
  }
  // Depth-first search for back edges over the parent relation.
  enum class Mark { none, active, done };
  std::vector<Mark> mark(net.size(), Mark::none);
  std::set<VariableId> on_cycle;
  std::function<void(std::size_t, std::vector<std::size_t>&)> visit = [&](std::size_t i,
                                                                          std::vector<std::size_t>& stack) {
    mark[i] = Mark::active;
    stack.push_back(i);
    for (const auto& p : net.nodes()[i].parents) {
      if (!net.contains(p)) {
        continue;
      }
      const auto j = net.position(p);
      if (mark[j] == Mark::active) {
        for (auto it = std::find(stack.begin(), stack.end(), j); it != stack.end(); ++it) {
          on_cycle.insert(net.nodes()[*it].id);
        }
      } else if (mark[j] == Mark::none) {
        visit(j, stack);
      }
    }
    stack.pop_back();
    mark[i] = Mark::done;
  };
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (mark[i] == Mark::none) {
      std::vector<std::size_t> stack;
      visit(i, stack);
    }
  }
  for (const auto& id : on_cycle) {
    out.push_back({id, "variable '" + id + "' lies on a cycle"});
  }
  return out;
}

/// Throws NetworkError with the first diagnostic, if any.
inline void require_valid(const Network& net) {
  const auto diagnostics = validate(net);
  if (!diagnostics.empty()) {
    throw NetworkError(diagnostics.front().message);
  }
}

/// Parents before children; ties broken by variable id.
inline std::vector<VariableId> topological_order(const Network& net) {
  std::map<VariableId, std::size_t> pending;
  std::set<VariableId> ready;
  for (const auto& n : net.nodes()) {
    std::size_t count = 0;
    for (const auto& p : n.parents) {
      if (!net.contains(p)) {
        throw NetworkError("parent '" + p + "' of '" + n.id + "' does not exist");
      }
      ++count;
    }
    pending[n.id] = count;
    if (count == 0) {
      ready.insert(n.id);
    }
  }
  std::map<VariableId, std::vector<VariableId>> children;
  for (const auto& n : net.nodes()) {
    for (const auto& p : n.parents) {
      children[p].push_back(n.id);
    }
  }
  std::vector<VariableId> order;
  while (!ready.empty()) {
    const auto id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& c : children[id]) {
      if (--pending[c] == 0) {
        ready.insert(c);
      }
    }
  }
  if (order.size() != net.size()) {
    throw NetworkError("network contains a cycle");
  }
  return order;
}

/// True when the undirected skeleton has no cycle (repeated edges count as a cycle).
inline bool is_polytree(const Network& net) {
  std::vector<std::size_t> root(net.size());
  std::iota(root.begin(), root.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return root[i] == i ? i : root[i] = find(root[i]);
  };
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (const auto& p : net.nodes()[i].parents) {
      const auto a = find(i);
      const auto b = find(net.position(p));
      if (a == b) {
        return false;
      }
      root[a] = b;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------------------------
// Evidence
// ---------------------------------------------------------------------------------------------

/// Observations: an exact value or a Score over the variable's values.
class Evidence {
 public:
  using Binding = std::variant<Value, SFuncPtr>;

  Evidence& hard(const VariableId& id, Value value) {
    bindings_[id] = std::move(value);
    return *this;
  }
  Evidence& soft(const VariableId& id, SFuncPtr score) {
    bindings_[id] = std::move(score);
    return *this;
  }

  [[nodiscard]] const std::map<VariableId, Binding>& bindings() const noexcept { return bindings_; }
  [[nodiscard]] bool empty() const noexcept { return bindings_.empty(); }

  [[nodiscard]] const Value* hard_value(const VariableId& id) const {
    const auto it = bindings_.find(id);
    return it == bindings_.end() ? nullptr : std::get_if<Value>(&it->second);
  }

 private:
  std::map<VariableId, Binding> bindings_;
};

inline std::string evidence_node_id(const VariableId& id) { return id + "/evidence"; }

/// A network with its evidence turned into Score children.
struct CompiledModel {
  Network net;
  std::map<VariableId, Value> hard;
};

inline bool value_fits(ValueSpace declared, const Value& v) {
  const auto actual = space_of(v);
  if (declared == ValueSpace::any || declared == actual) {
    return true;
  }
  return declared == ValueSpace::real && actual == ValueSpace::integer;
}

/// Adds a score child "<var>/evidence" per binding. Hard evidence on a placeholder turns it into a
/// constant.
inline CompiledModel compile_evidence(const Network& net, const Evidence& evidence) {
  require_valid(net);
  CompiledModel out{net, {}};
  for (const auto& [id, binding] : evidence.bindings()) {
    if (!net.contains(id)) {
      throw NetworkError("evidence on unknown variable '" + id + "'");
    }
    const auto& n = net.node(id);
    if (n.is_score()) {
      throw NetworkError("evidence on score node '" + id + "'");
    }
    if (const auto* given = std::get_if<Value>(&binding)) {
      Value v = *given;
      if (n.placeholder) {
        out.net.replace(id, make_constant(v));
      } else if (!value_fits(n.sf->signature().output, v)) {
        throw NetworkError("evidence value " + to_string(v) + " for '" + id + "' is outside its output space");
      } else if (n.sf->signature().output == ValueSpace::real && space_of(v) == ValueSpace::integer) {
        v = to_double(v);
      }
      out.hard.emplace(id, v);
      out.net.add(evidence_node_id(id), make_hard_score(v), {id});
    } else {
      const auto& score = std::get<SFuncPtr>(binding);
      if (!score || !score->is_score() || score->arity() != 1) {
        throw NetworkError("soft evidence for '" + id + "' must be a one-input score");
      }
      if (n.placeholder) {
        throw NetworkError("placeholder '" + id + "' needs a value, not soft evidence");
      }
      out.net.add(evidence_node_id(id), score, {id});
    }
  }
  for (const auto& n : out.net.nodes()) {
    if (n.placeholder) {
      throw NetworkError("placeholder '" + n.id + "' has no value");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Capability layers
// ---------------------------------------------------------------------------------------------

enum class LayerTag { pi_only, bidirectional, lambda_only, uncovered };

inline const char* to_string(LayerTag tag) {
  switch (tag) {
    case LayerTag::pi_only:
      return "pi_only";
    case LayerTag::bidirectional:
      return "bidirectional";
    case LayerTag::lambda_only:
      return "lambda_only";
    case LayerTag::uncovered:
      return "uncovered";
  }
  return "uncovered";
}

struct LayerInfo {
  LayerTag tag = LayerTag::uncovered;
  bool pi = false;
  bool lambda = false;
  /// Why π or λ is missing; empty when available.
  std::string pi_reason;
  std::string lambda_reason;
};

/// Variables with a score node among their descendants (including themselves).
inline std::set<VariableId> evidence_ancestors(const Network& net) {
  std::set<VariableId> out;
  std::function<void(const VariableId&)> mark = [&](const VariableId& id) {
    if (!out.insert(id).second) {
      return;
    }
    for (const auto& p : net.node(id).parents) {
      mark(p);
    }
  };
  for (const auto& n : net.nodes()) {
    if (n.is_score()) {
      mark(n.id);
    }
  }
  return out;
}

/// π/λ capability of every variable (score nodes included).
/**
 * π-capable: the SFunc supports compute_pi and every parent is π-capable. λ-capable: the SFunc
 * supports send_lambda and every child on a path to a score node is λ-capable (all children
 * when the network has no score node). Score nodes are λ sources when they support get_score.
 */
inline std::map<VariableId, LayerInfo> classify_layers(const Network& net, const Registry& registry) {
  const auto order = topological_order(net);
  const auto relevant = evidence_ancestors(net);
  const bool any_score = std::any_of(net.nodes().begin(), net.nodes().end(), [](const Node& n) { return n.is_score(); });
  std::map<VariableId, LayerInfo> info;
  for (const auto& id : order) {
    const auto& n = net.node(id);
    auto& li = info[id];
    if (n.is_score()) {
      li.pi = false;
      li.pi_reason = "score node";
      continue;
    }
    if (!n.sf || !registry.supports(ops::ComputePi::name, n.sf->kind())) {
      li.pi_reason = "compute_pi unsupported";
      continue;
    }
    li.pi = true;
    for (const auto& p : n.parents) {
      if (!info[p].pi) {
        li.pi = false;
        li.pi_reason = "ancestor '" + p + "' lacks π";
        break;
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& n = net.node(*it);
    auto& li = info[*it];
    if (n.is_score()) {
      li.lambda = registry.supports(ops::GetScore::name, n.sf->kind());
      if (!li.lambda) {
        li.lambda_reason = "get_score unsupported";
      }
    } else if (!n.sf || !registry.supports(ops::SendLambda::name, n.sf->kind())) {
      li.lambda_reason = "send_lambda unsupported";
    } else {
      li.lambda = true;
      for (const auto& c : net.children(*it)) {
        if (any_score && relevant.count(c) == 0) {
          continue;
        }
        if (!info[c].lambda) {
          li.lambda = false;
          li.lambda_reason = "descendant '" + c + "' lacks λ";
          break;
        }
      }
    }
  }
  for (auto& [id, li] : info) {
    if (net.node(id).is_score()) {
      li.tag = li.lambda ? LayerTag::lambda_only : LayerTag::uncovered;
    } else if (li.pi && li.lambda) {
      li.tag = LayerTag::bidirectional;
    } else if (li.pi) {
      li.tag = LayerTag::pi_only;
    } else if (li.lambda) {
      li.tag = LayerTag::lambda_only;
    } else {
      li.tag = LayerTag::uncovered;
    }
  }
  return info;
}

// ---------------------------------------------------------------------------------------------
// Ranges and sampling
// ---------------------------------------------------------------------------------------------

using RangeMap = std::map<VariableId, Range>;

/// Working range of every non-score variable, via support in topological order.
/**
 * Hard-evidence variables get the single observed value. `prior` holds previous ranges that the
 * result must include.
 */
inline RangeMap compute_ranges(const Engine& engine, const Network& net, const std::map<VariableId, Value>& hard,
                               std::size_t target_size, const RangeMap& prior = {}) {
  RangeMap out;
  for (const auto& id : topological_order(net)) {
    const auto& n = net.node(id);
    if (n.is_score()) {
      continue;
    }
    if (const auto h = hard.find(id); h != hard.end()) {
      out[id] = {h->second};
      continue;
    }
    std::vector<Range> parent_ranges;
    for (const auto& p : n.parents) {
      parent_ranges.push_back(out.at(p));
    }
    const auto pr = prior.find(id);
    auto r = support(engine, *n.sf, parent_ranges, target_size, pr == prior.end() ? Range{} : pr->second);
    if (r.empty()) {
      throw NetworkError("variable '" + id + "' has an empty support");
    }
    out[id] = std::move(r);
  }
  return out;
}

using Assignment = std::map<VariableId, Value>;

/// Samples every non-score variable in topological order. Placeholders take `placeholder_values`.
inline Assignment network_sample(const Engine& engine, const Network& net, const Assignment& placeholder_values,
                                 Rng& rng) {
  require_valid(net);
  Assignment out;
  for (const auto& id : topological_order(net)) {
    const auto& n = net.node(id);
    if (n.placeholder) {
      const auto it = placeholder_values.find(id);
      if (it == placeholder_values.end()) {
        throw NetworkError("placeholder '" + id + "' has no value");
      }
      out[id] = it->second;
      continue;
    }
    if (n.is_score()) {
      continue;
    }
    std::vector<Value> parents;
    parents.reserve(n.parents.size());
    for (const auto& p : n.parents) {
      parents.push_back(out.at(p));
    }
    out[id] = sample(engine, *n.sf, parents, rng);
  }
  return out;
}

/// Values of `node`'s parents taken from `assignment`.
inline std::vector<Value> parent_values(const Node& node, const Assignment& assignment) {
  std::vector<Value> out;
  out.reserve(node.parents.size());
  for (const auto& p : node.parents) {
    out.push_back(assignment.at(p));
  }
  return out;
}

}  // namespace opnet

#endif

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


#ifndef OPNET_SPEC_IO_HPP
#define OPNET_SPEC_IO_HPP

#include <json.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "opnet/compose.hpp"
#include "opnet/network.hpp"

/**
 * \file
 * \brief JSON model files: variables, evidence and queries.
 *
 * \code{.json}
 * {"variables": [{"name": "A", "kind": "flip", "params": {"p": 0.5}},
 *                {"name": "B", "kind": "cpt", "parents": ["A"],
 *                 "params": {"values": [0, 1], "rows": [[0.9, 0.1], [0.3, 0.7]]}}],
 *  "evidence": {"B": 0},
 *  "queries": ["A"]}
 * \endcode
 */

namespace opnet {

using json = nlohmann::json;

/// A malformed model file. `path()` locates the offending element, e.g. `variables[1].parents[0]`.
class SpecError : public Error {
 public:
  SpecError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_{std::move(path)} {}

  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ParseOptions {
  /// Support size used to find the finite ranges of discrete parents.
  std::size_t target_size = 21;
  /// Learnable kinds (flip, cat, cpt) may omit their probabilities; they start uniform.
  bool allow_missing_parameters = false;
};

struct ModelSpec {
  Network network;
  Evidence evidence;
  std::vector<VariableId> queries;
};

// ---------------------------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------------------------

inline Value value_from_json(const json& j, const std::string& path) {
  switch (j.type()) {
    case json::value_t::boolean:
      return j.get<bool>();
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
      return j.get<std::int64_t>();
    case json::value_t::number_float:
      return j.get<double>();
    case json::value_t::string:
      return j.get<std::string>();
    case json::value_t::array: {
      Vector v;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
          throw SpecError(path + "[" + std::to_string(i) + "]", "vector entries must be numbers");
        }
        v.push_back(j[i].get<double>());
      }
      return v;
    }
    default:
      throw SpecError(path, "unsupported value");
  }
}

inline json value_to_json(const Value& v) {
  struct Visitor {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(bool b) const { return b; }
    json operator()(std::int64_t i) const { return i; }
    json operator()(double d) const { return d; }
    json operator()(const std::string& s) const { return s; }
    json operator()(const Vector& v) const { return v; }
  };
  return std::visit(Visitor{}, v);
}

namespace detail {

inline std::string at(const std::string& path, const std::string& key) { return path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw SpecError(at(path, key), "missing field");
  }
  return obj.at(key);
}

inline double number(const json& obj, const std::string& key, const std::string& path) {
  const auto& j = field(obj, key, path);
  if (!j.is_number()) {
    throw SpecError(at(path, key), "expected a number");
  }
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) {
    throw SpecError(path, "expected an array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw SpecError(at(path, i), "expected a number");
    }
    out.push_back(j[i].get<double>());
  }
  return out;
}

inline Range values_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw SpecError(path, "expected a nonempty array of values");
  }
  Range out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(value_from_json(j[i], at(path, i)));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (out[i] == out[k]) {
        throw SpecError(at(path, i), "duplicate value " + to_string(out[i]));
      }
    }
  }
  return out;
}

inline void check_distribution(const std::vector<double>& p, const std::string& path) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw SpecError(at(path, i), "probability must lie in [0, 1]");
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    throw SpecError(path, "probabilities sum to " + format_double(total) + ", not 1");
  }
}

/// Builds SFuncs from `{kind, params}` given the parents' working ranges.
class SFuncBuilder {
 public:
  SFuncBuilder(const Engine& engine, const ParseOptions& options) : engine_{engine}, options_{options} {}

  SFuncPtr build(const std::string& kind, const json& params, const std::vector<Range>& parent_ranges,
                 const std::vector<std::string>& parent_paths, const std::string& path) {
    const auto params_path = at(path, "params");
    const auto expect_parents = [&](std::size_t n) {
      if (parent_ranges.size() != n) {
        throw SpecError(at(path, "parents"), "kind '" + kind + "' takes " + std::to_string(n) + " parents, got " +
                                                 std::to_string(parent_ranges.size()));
      }
    };
    const auto finite = [&](std::size_t k) -> const Range& {
      if (parent_ranges[k].empty()) {
        throw SpecError(parent_paths[k], "parent needs a finite range");
      }
      return parent_ranges[k];
    };
    try {
      if (kind == "flip") {
        expect_parents(0);
        if (options_.allow_missing_parameters && !params.contains("p")) {
          return make_flip(0.5);
        }
        const double p = number(params, "p", params_path);
        if (!(p >= 0.0 && p <= 1.0)) {
          throw SpecError(at(params_path, "p"), "probability must lie in [0, 1]");
        }
        return make_flip(p);
      }
      if (kind == "cat") {
        expect_parents(0);
        const auto values = values_of(field(params, "values", params_path), at(params_path, "values"));
        if (options_.allow_missing_parameters && !params.contains("probs")) {
          return make_cat(values, std::vector<double>(values.size(), 1.0 / double(values.size())));
        }
        const auto probs = numbers(field(params, "probs", params_path), at(params_path, "probs"));
        if (probs.size() != values.size()) {
          throw SpecError(at(params_path, "probs"), "needs one probability per value");
        }
        check_distribution(probs, at(params_path, "probs"));
        return make_cat(values, probs);
      }
      if (kind == "normal") {
        expect_parents(0);
        const double var = number(params, "variance", params_path);
        if (!(var > 0.0)) {
          throw SpecError(at(params_path, "variance"), "variance must be strictly positive");
        }
        return make_normal(number(params, "mean", params_path), var);
      }
      if (kind == "constant") {
        expect_parents(0);
        return make_constant(value_from_json(field(params, "value", params_path), at(params_path, "value")));
      }
      if (kind == "cpt") {
        return build_cpt(params, parent_ranges, parent_paths, params_path, finite);
      }
      if (kind == "linear_gaussian") {
        auto p = lg_params(params, params_path);
        expect_parents(p.coefficients.size());
        return std::make_shared<LinearGaussian>(std::move(p));
      }
      if (kind == "clg") {
        const auto& sel = field(params, "selectors", params_path);
        if (!sel.is_number_unsigned() || sel.get<std::size_t>() > parent_ranges.size()) {
          throw SpecError(at(params_path, "selectors"), "expected the count of leading discrete parents");
        }
        const auto n_sel = sel.get<std::size_t>();
        std::vector<Range> selector_ranges;
        for (std::size_t k = 0; k < n_sel; ++k) {
          selector_ranges.push_back(finite(k));
        }
        const auto& entries = field(params, "entries", params_path);
        if (!entries.is_array()) {
          throw SpecError(at(params_path, "entries"), "expected an array");
        }
        std::vector<LinearGaussian::Params> table;
        for (std::size_t i = 0; i < entries.size(); ++i) {
          auto p = lg_params(entries[i], at(at(params_path, "entries"), i));
          if (p.coefficients.size() != parent_ranges.size() - n_sel) {
            throw SpecError(at(at(at(params_path, "entries"), i), "coefficients"),
                            "needs one coefficient per continuous parent");
          }
          table.push_back(std::move(p));
        }
        return std::make_shared<CLG>(selector_ranges, parent_ranges.size() - n_sel, std::move(table));
      }
      if (kind == "mixture") {
        const auto& comps = field(params, "components", params_path);
        const auto weights = numbers(field(params, "weights", params_path), at(params_path, "weights"));
        if (!comps.is_array() || comps.size() != weights.size() || comps.empty()) {
          throw SpecError(at(params_path, "components"), "needs one component per weight");
        }
        check_distribution(weights, at(params_path, "weights"));
        std::vector<SFuncPtr> built;
        for (std::size_t i = 0; i < comps.size(); ++i) {
          const auto cpath = at(at(params_path, "components"), i);
          built.push_back(build(kind_of(comps[i], cpath), comps[i].value("params", json::object()), parent_ranges,
                                parent_paths, cpath));
        }
        return std::make_shared<Mixture>(std::move(built), weights);
      }
      if (kind == "separable") {
        const auto& comps = field(params, "components", params_path);
        const auto weights = numbers(field(params, "weights", params_path), at(params_path, "weights"));
        if (!comps.is_array() || comps.size() != parent_ranges.size() || weights.size() != comps.size()) {
          throw SpecError(at(params_path, "components"), "needs one component and one weight per parent");
        }
        check_distribution(weights, at(params_path, "weights"));
        std::vector<SFuncPtr> built;
        for (std::size_t i = 0; i < comps.size(); ++i) {
          const auto cpath = at(at(params_path, "components"), i);
          built.push_back(build_cpt(comps[i], {parent_ranges[i]}, {parent_paths[i]}, cpath,
                                    [&](std::size_t) -> const Range& { return finite(i); }));
        }
        return make_separable(built, weights);
      }
      if (kind == "det_linear") {
        const auto& m = field(params, "matrix", params_path);
        if (!m.is_array() || m.empty()) {
          throw SpecError(at(params_path, "matrix"), "expected a nonempty array of rows");
        }
        std::vector<std::vector<double>> matrix;
        for (std::size_t r = 0; r < m.size(); ++r) {
          matrix.push_back(numbers(m[r], at(at(params_path, "matrix"), r)));
        }
        auto det = std::make_shared<LinearDet>(std::move(matrix));
        expect_parents(det->arity());
        return det;
      }
      if (kind == "switch") {
        const auto& choices = field(params, "choices", params_path);
        if (!choices.is_array() || choices.empty()) {
          throw SpecError(at(params_path, "choices"), "expected a nonempty array");
        }
        if (parent_ranges.empty()) {
          throw SpecError(at(path, "parents"), "switch needs a selector parent");
        }
        const std::vector<Range> rest(parent_ranges.begin() + 1, parent_ranges.end());
        const std::vector<std::string> rest_paths(parent_paths.begin() + 1, parent_paths.end());
        std::vector<SFuncPtr> built;
        for (std::size_t i = 0; i < choices.size(); ++i) {
          const auto cpath = at(at(params_path, "choices"), i);
          built.push_back(build(kind_of(choices[i], cpath), choices[i].value("params", json::object()), rest,
                                rest_paths, cpath));
        }
        return std::make_shared<Switch>(std::move(built));
      }
      if (kind == "hard_score") {
        expect_parents(1);
        return make_hard_score(value_from_json(field(params, "value", params_path), at(params_path, "value")));
      }
      if (kind == "soft_score") {
        expect_parents(1);
        return soft_score(field(params, "weights", params_path), finite(0), at(params_path, "weights"));
      }
    } catch (const SpecError&) {
      throw;
    } catch (const Error& e) {
      throw SpecError(params_path, e.what());
    }
    throw SpecError(at(path, "kind"), "unknown kind '" + kind + "'");
  }

  /// A score over `range` from `{"<value>": weight}` keys.
  static SFuncPtr soft_score(const json& weights, const Range& range, const std::string& path) {
    if (!weights.is_object() || weights.empty()) {
      throw SpecError(path, "expected an object mapping values to weights");
    }
    std::vector<double> w(range.size(), 0.0);
    for (const auto& [key, weight] : weights.items()) {
      std::size_t k = 0;
      while (k < range.size() && to_string(range[k]) != key) {
        ++k;
      }
      if (k == range.size()) {
        throw SpecError(at(path, key), "value not in the variable's range");
      }
      if (!weight.is_number() || !(weight.get<double>() >= 0.0)) {
        throw SpecError(at(path, key), "weight must be a nonnegative number");
      }
      w[k] = weight.get<double>();
    }
    return make_soft_score(range, w);
  }

  static std::string kind_of(const json& j, const std::string& path) {
    const auto& k = field(j, "kind", path);
    if (!k.is_string()) {
      throw SpecError(at(path, "kind"), "expected a string");
    }
    return k.get<std::string>();
  }

 private:
  static LinearGaussian::Params lg_params(const json& params, const std::string& path) {
    LinearGaussian::Params p;
    p.coefficients = numbers(field(params, "coefficients", path), at(path, "coefficients"));
    p.intercept = params.contains("intercept") ? number(params, "intercept", path) : 0.0;
    p.variance = number(params, "variance", path);
    if (!(p.variance > 0.0)) {
      throw SpecError(at(path, "variance"), "variance must be strictly positive");
    }
    return p;
  }

  SFuncPtr build_cpt(const json& params, const std::vector<Range>& parent_ranges,
                     const std::vector<std::string>& parent_paths, const std::string& params_path,
                     const std::function<const Range&(std::size_t)>& finite) const {
    (void)parent_paths;
    std::vector<Range> ranges;
    if (params.contains("parent_values")) {
      const auto& pv = params.at("parent_values");
      if (!pv.is_array() || pv.size() != parent_ranges.size()) {
        throw SpecError(at(params_path, "parent_values"), "needs one value list per parent");
      }
      for (std::size_t k = 0; k < pv.size(); ++k) {
        ranges.push_back(values_of(pv[k], at(at(params_path, "parent_values"), k)));
      }
    } else {
      for (std::size_t k = 0; k < parent_ranges.size(); ++k) {
        ranges.push_back(finite(k));
      }
    }
    const auto values = values_of(field(params, "values", params_path), at(params_path, "values"));
    std::size_t expected = 1;
    for (const auto& r : ranges) {
      expected *= r.size();
    }
    std::vector<std::vector<double>> rows;
    if (options_.allow_missing_parameters && !params.contains("rows")) {
      rows.assign(expected, std::vector<double>(values.size(), 1.0 / double(values.size())));
    } else {
      const auto& jr = field(params, "rows", params_path);
      if (!jr.is_array() || jr.size() != expected) {
        throw SpecError(at(params_path, "rows"),
                        "expected " + std::to_string(expected) + " rows, one per parent assignment");
      }
      for (std::size_t r = 0; r < jr.size(); ++r) {
        const auto rpath = at(at(params_path, "rows"), r);
        auto row = numbers(jr[r], rpath);
        if (row.size() != values.size()) {
          throw SpecError(rpath, "needs one probability per value");
        }
        check_distribution(row, rpath);
        rows.push_back(std::move(row));
      }
    }
    return std::make_shared<DiscreteCPT>(std::move(ranges), values, rows);
  }

  const Engine& engine_;
  ParseOptions options_;
};

}  // namespace detail

/// Parses a model document. Errors name the offending element by its JSON path.
inline ModelSpec parse_spec(const Engine& engine, const json& doc, const ParseOptions& options = {}) {
  if (!doc.is_object()) {
    throw SpecError("", "the model document must be an object");
  }
  const auto& vars = detail::field(doc, "variables", "");
  if (!vars.is_array()) {
    throw SpecError("variables", "expected an array");
  }
  struct Entry {
    std::string name;
    std::string kind;
    std::vector<std::string> parents;
    json params;
    std::string path;
  };
  std::vector<Entry> entries;
  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto path = detail::at("variables", i);
    const auto& v = vars[i];
    if (!v.is_object()) {
      throw SpecError(path, "expected an object");
    }
    Entry e;
    const auto& name = detail::field(v, "name", path);
    if (!name.is_string() || name.get<std::string>().empty()) {
      throw SpecError(detail::at(path, "name"), "expected a nonempty string");
    }
    e.name = name.get<std::string>();
    if (by_name.count(e.name) != 0) {
      throw SpecError(detail::at(path, "name"), "duplicate variable '" + e.name + "'");
    }
    e.kind = detail::SFuncBuilder::kind_of(v, path);
    e.params = v.value("params", json::object());
    if (!e.params.is_object()) {
      throw SpecError(detail::at(path, "params"), "expected an object");
    }
    if (v.contains("parents")) {
      const auto& ps = v.at("parents");
      if (!ps.is_array()) {
        throw SpecError(detail::at(path, "parents"), "expected an array of names");
      }
      for (std::size_t k = 0; k < ps.size(); ++k) {
        if (!ps[k].is_string()) {
          throw SpecError(detail::at(detail::at(path, "parents"), k), "expected a name");
        }
        e.parents.push_back(ps[k].get<std::string>());
      }
    }
    e.path = path;
    by_name[e.name] = i;
    entries.push_back(std::move(e));
  }
  for (const auto& e : entries) {
    for (std::size_t k = 0; k < e.parents.size(); ++k) {
      if (by_name.count(e.parents[k]) == 0) {
        throw SpecError(detail::at(detail::at(e.path, "parents"), k), "unknown variable '" + e.parents[k] + "'");
      }
    }
  }
  // Build parents first; a variable reached again while active closes a cycle.
  std::vector<int> state(entries.size(), 0);
  std::vector<std::size_t> order;
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (state[i] == 2) {
      return;
    }
    if (state[i] == 1) {
      throw SpecError(detail::at(entries[i].path, "parents"), "cycle through '" + entries[i].name + "'");
    }
    state[i] = 1;
    for (const auto& p : entries[i].parents) {
      visit(by_name.at(p));
    }
    state[i] = 2;
    order.push_back(i);
  };
  for (std::size_t i = 0; i < entries.size(); ++i) {
    visit(i);
  }

  detail::SFuncBuilder builder(engine, options);
  std::map<std::string, SFuncPtr> built;
  RangeMap ranges;
  for (const auto i : order) {
    const auto& e = entries[i];
    std::vector<Range> parent_ranges;
    std::vector<std::string> parent_paths;
    for (std::size_t k = 0; k < e.parents.size(); ++k) {
      parent_ranges.push_back(ranges[e.parents[k]]);
      parent_paths.push_back(detail::at(detail::at(e.path, "parents"), k));
    }
    auto sf = builder.build(e.kind, e.params, parent_ranges, parent_paths, e.path);
    if (!sf->is_score()) {
      // Finite ranges feed tables of children; continuous variables have none here.
      if (!sf->signature().continuous && std::all_of(parent_ranges.begin(), parent_ranges.end(),
                                                     [](const Range& r) { return !r.empty(); })) {
        try {
          ranges[e.name] = support(engine, *sf, parent_ranges, options.target_size);
        } catch (const Error&) {
          ranges[e.name] = {};
        }
      } else {
        ranges[e.name] = {};
      }
    }
    built[e.name] = std::move(sf);
  }

  ModelSpec out;
  for (const auto& e : entries) {
    out.network.add(e.name, built.at(e.name), e.parents);
  }

  if (doc.contains("evidence")) {
    const auto& ev = doc.at("evidence");
    if (!ev.is_object()) {
      throw SpecError("evidence", "expected an object");
    }
    for (const auto& [name, value] : ev.items()) {
      const auto path = detail::at("evidence", name);
      if (by_name.count(name) == 0) {
        throw SpecError(path, "unknown variable '" + name + "'");
      }
      const auto& sf = built.at(name);
      if (sf->is_score()) {
        throw SpecError(path, "evidence on a score variable");
      }
      if (value.is_object()) {
        const auto& soft = detail::field(value, "soft", path);
        if (ranges[name].empty()) {
          throw SpecError(detail::at(path, "soft"), "soft evidence needs a variable with a finite range");
        }
        out.evidence.soft(name, detail::SFuncBuilder::soft_score(soft, ranges[name], detail::at(path, "soft")));
      } else {
        const auto v = value_from_json(value, path);
        if (!value_fits(sf->signature().output, v)) {
          throw SpecError(path, "value " + to_string(v) + " is outside the variable's output space");
        }
        if (!ranges[name].empty() && index_of(ranges[name], v) == ranges[name].size() &&
            !sf->signature().continuous) {
          throw SpecError(path, "value " + to_string(v) + " is not in the variable's range");
        }
        out.evidence.hard(name, v);
      }
    }
  }

  if (doc.contains("queries")) {
    const auto& qs = doc.at("queries");
    if (!qs.is_array()) {
      throw SpecError("queries", "expected an array of names");
    }
    for (std::size_t i = 0; i < qs.size(); ++i) {
      if (!qs[i].is_string() || by_name.count(qs[i].get<std::string>()) == 0) {
        throw SpecError(detail::at("queries", i), "unknown variable");
      }
      if (built.at(qs[i].get<std::string>())->is_score()) {
        throw SpecError(detail::at("queries", i), "cannot query a score variable");
      }
      out.queries.push_back(qs[i].get<std::string>());
    }
  } else {
    for (const auto& n : out.network.nodes()) {
      if (!n.is_score()) {
        out.queries.push_back(n.id);
      }
    }
  }
  return out;
}

inline ModelSpec parse_spec(const Engine& engine, const std::string& text, const ParseOptions& options = {}) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_spec(engine, doc, options);
}

// ---------------------------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------------------------

namespace detail {

inline json values_json(const Range& r) {
  json out = json::array();
  for (const auto& v : r) {
    out.push_back(value_to_json(v));
  }
  return out;
}

inline json cpt_params(const DiscreteCPT& cpt) {
  json rows = json::array();
  for (std::size_t r = 0; r < cpt.table().size(); ++r) {
    rows.push_back(cpt.row(r));
  }
  json pv = json::array();
  for (const auto& r : cpt.i_ranges()) {
    pv.push_back(values_json(r));
  }
  return {{"values", values_json(cpt.values())}, {"rows", rows}, {"parent_values", pv}};
}

inline json lg_json(const LinearGaussian::Params& p) {
  return {{"coefficients", p.coefficients}, {"intercept", p.intercept}, {"variance", p.variance}};
}

}  // namespace detail

/// `{kind, params}` of an SFunc built by `parse_spec`.
inline json describe(const SFunc& sf) {
  if (const auto* s = dynamic_cast<const CatDist*>(&sf)) {
    return {{"kind", "cat"}, {"params", {{"values", detail::values_json(s->values())}, {"probs", s->probabilities()}}}};
  }
  if (const auto* s = dynamic_cast<const FlipDist*>(&sf)) {
    return {{"kind", "flip"}, {"params", {{"p", s->prob_true()}}}};
  }
  if (const auto* s = dynamic_cast<const NormalDist*>(&sf)) {
    return {{"kind", "normal"}, {"params", {{"mean", s->mean()}, {"variance", s->variance()}}}};
  }
  if (const auto* s = dynamic_cast<const ConstantDist*>(&sf)) {
    return {{"kind", "constant"}, {"params", {{"value", value_to_json(s->value())}}}};
  }
  if (const auto* s = dynamic_cast<const DiscreteCPT*>(&sf)) {
    return {{"kind", "cpt"}, {"params", detail::cpt_params(*s)}};
  }
  if (const auto* s = dynamic_cast<const LinearGaussian*>(&sf)) {
    return {{"kind", "linear_gaussian"}, {"params", detail::lg_json(s->params())}};
  }
  if (const auto* s = dynamic_cast<const CLG*>(&sf)) {
    json entries = json::array();
    for (const auto& p : s->table()) {
      entries.push_back(detail::lg_json(p));
    }
    return {{"kind", "clg"}, {"params", {{"selectors", s->i_arity()}, {"entries", entries}}}};
  }
  if (const auto* s = dynamic_cast<const Separable*>(&sf)) {
    json comps = json::array();
    for (const auto& c : s->components()) {
      comps.push_back(detail::cpt_params(as<DiscreteCPT>(*as<Extend>(*c).inner())));
    }
    return {{"kind", "separable"}, {"params", {{"components", comps}, {"weights", s->probabilities()}}}};
  }
  if (const auto* s = dynamic_cast<const Mixture*>(&sf)) {
    json comps = json::array();
    for (const auto& c : s->components()) {
      comps.push_back(describe(*c));
    }
    return {{"kind", "mixture"}, {"params", {{"components", comps}, {"weights", s->probabilities()}}}};
  }
  if (const auto* s = dynamic_cast<const LinearDet*>(&sf)) {
    return {{"kind", "det_linear"}, {"params", {{"matrix", s->matrix()}}}};
  }
  if (const auto* s = dynamic_cast<const Switch*>(&sf); s != nullptr && sf.kind() == "switch") {
    json choices = json::array();
    for (const auto& c : s->choices()) {
      choices.push_back(describe(*c));
    }
    return {{"kind", "switch"}, {"params", {{"choices", choices}}}};
  }
  if (const auto* s = dynamic_cast<const HardScore*>(&sf)) {
    return {{"kind", "hard_score"}, {"params", {{"value", value_to_json(s->allowed())}}}};
  }
  if (const auto* s = dynamic_cast<const SoftScore*>(&sf)) {
    json w = json::object();
    for (const auto& [v, x] : s->weights()) {
      w[to_string(v)] = x;
    }
    return {{"kind", "soft_score"}, {"params", {{"weights", w}}}};
  }
  throw InvalidArgument("SFunc of kind '" + std::string(sf.kind()) + "' has no model-file form");
}

/// Model document for a parsed spec; parsing it again yields an equivalent model.
inline json serialize_spec(const ModelSpec& spec) {
  json vars = json::array();
  for (const auto& n : spec.network.nodes()) {
    auto v = describe(*n.sf);
    v["name"] = n.id;
    v["parents"] = n.parents;
    vars.push_back(std::move(v));
  }
  json evidence = json::object();
  for (const auto& [id, b] : spec.evidence.bindings()) {
    if (const auto* v = std::get_if<Value>(&b)) {
      evidence[id] = value_to_json(*v);
    } else {
      const auto& score = as<SoftScore>(*std::get<SFuncPtr>(b));
      json w = json::object();
      for (const auto& [value, x] : score.weights()) {
        w[to_string(value)] = x;
      }
      evidence[id] = {{"soft", w}};
    }
  }
  return {{"variables", vars}, {"evidence", evidence}, {"queries", spec.queries}};
}

}  // namespace opnet

#endif

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

#ifndef OPNET_VALUE_HPP
#define OPNET_VALUE_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

/**
 * \file
 * \brief Dynamically typed values flowing between stochastic functions.
 */

namespace opnet {

using Vector = std::vector<double>;

/// A value produced or consumed by an SFunc.
/**
 * `std::monostate` is the unit value carried by score nodes, which have no output.
 * Values are totally ordered (alternative index first, then payload), which gives ranges a
 * canonical sorted order.
 */
using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string, Vector>;

/// An ordered list of distinct values a variable may take.
using Range = std::vector<Value>;

/// Random engine used by every stochastic operation.
using Rng = std::mt19937_64;

/// Value spaces used in SFunc signatures.
enum class ValueSpace { none, boolean, integer, real, symbol, vector, any };

inline const char* to_string(ValueSpace space) {
  switch (space) {
    case ValueSpace::none:
      return "none";
    case ValueSpace::boolean:
      return "boolean";
    case ValueSpace::integer:
      return "integer";
    case ValueSpace::real:
      return "real";
    case ValueSpace::symbol:
      return "symbol";
    case ValueSpace::vector:
      return "vector";
    case ValueSpace::any:
      return "any";
  }
  return "any";
}

inline ValueSpace space_of(const Value& value) {
  switch (value.index()) {
    case 0:
      return ValueSpace::none;
    case 1:
      return ValueSpace::boolean;
    case 2:
      return ValueSpace::integer;
    case 3:
      return ValueSpace::real;
    case 4:
      return ValueSpace::symbol;
    default:
      return ValueSpace::vector;
  }
}

/// Common space of a list of values; `any` when they disagree.
inline ValueSpace space_of(const Range& range) {
  if (range.empty()) {
    return ValueSpace::any;
  }
  const auto first = space_of(range.front());
  for (const auto& value : range) {
    if (space_of(value) != first) {
      return ValueSpace::any;
    }
  }
  return first;
}

inline bool is_numeric(const Value& value) {
  return std::holds_alternative<bool>(value) || std::holds_alternative<std::int64_t>(value) ||
         std::holds_alternative<double>(value);
}

/// Numeric view of a value; booleans coerce to 0/1.
inline double to_double(const Value& value) {
  if (const auto* b = std::get_if<bool>(&value)) {
    return *b ? 1.0 : 0.0;
  }
  if (const auto* i = std::get_if<std::int64_t>(&value)) {
    return static_cast<double>(*i);
  }
  if (const auto* d = std::get_if<double>(&value)) {
    return *d;
  }
  throw std::invalid_argument("value is not numeric");
}

inline std::string format_double(double x) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), x);
  return std::string(buffer, result.ptr);
}

inline std::string to_string(const Value& value) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "none"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const Vector& v) const {
      std::string out = "[";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
          out += ",";
        }
        out += format_double(v[i]);
      }
      return out + "]";
    }
  };
  return std::visit(Visitor{}, value);
}

/// Sorts and deduplicates a range in place.
inline void canonicalize(Range& range) {
  std::sort(range.begin(), range.end());
  range.erase(std::unique(range.begin(), range.end()), range.end());
}

/// Sorted union of two ranges.
inline Range merge_ranges(const Range& a, const Range& b) {
  Range out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  canonicalize(out);
  return out;
}

/// True when every element of `subset` is in `superset`.
inline bool includes_all(const Range& superset, const Range& subset) {
  return std::all_of(subset.begin(), subset.end(), [&](const Value& v) {
    return std::find(superset.begin(), superset.end(), v) != superset.end();
  });
}

/// Position of `value` in `range`, or `range.size()` when absent.
inline std::size_t index_of(const Range& range, const Value& value) {
  return static_cast<std::size_t>(std::find(range.begin(), range.end(), value) - range.begin());
}

/// Deterministic substream for a given seed and stream index.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32U)};
  return Rng{seq};
}

/// Uniform draw in [0, 1).
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>{0.0, 1.0}(rng); }

}  // namespace opnet

#endif

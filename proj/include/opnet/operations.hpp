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

#ifndef OPNET_OPERATIONS_HPP
#define OPNET_OPERATIONS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "opnet/registry.hpp"
#include "opnet/sfunc.hpp"
#include "opnet/value.hpp"

/**
 * \file
 * \brief Operation tags and thin call wrappers.
 */

namespace opnet {

/// How a conditional table enters a semiring.
enum class FactorRole { probabilistic, logical };

/// Conditional weights of an SFunc over finite ranges.
/**
 * Row `r` enumerates parent assignments in row-major order (last parent fastest); column `c`
 * indexes the output range. Score SFuncs have a single column.
 */
struct CondTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;
  FactorRole role = FactorRole::probabilistic;

  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return entries[row * cols + col]; }
};

namespace ops {

// clang-format off
struct Sample : OpSignature<Value, std::span<const Value>, Rng&> {
  static constexpr std::string_view name = "sample"; };
struct SampleN : OpSignature<std::vector<Value>, std::span<const Value>, std::size_t, Rng&> {
  static constexpr std::string_view name = "sample_n"; };
struct LogCpdf : OpSignature<double, std::span<const Value>, const Value&> {
  static constexpr std::string_view name = "logcpdf"; };
struct Expectation : OpSignature<double, std::span<const Value>> {
  static constexpr std::string_view name = "expectation"; };
struct Variance : OpSignature<double, std::span<const Value>> {
  static constexpr std::string_view name = "variance"; };
struct Support : OpSignature<Range, std::span<const Range>, std::size_t, const Range&> {
  static constexpr std::string_view name = "support"; };
struct GetScore : OpSignature<double, std::span<const Value>> {
  static constexpr std::string_view name = "get_score"; };
struct GenSf : OpSignature<SFuncPtr, std::span<const Value>> {
  static constexpr std::string_view name = "gen_sf"; };
struct ComputePi : OpSignature<PiMessage, const Range&, std::span<const Range>, std::span<const PiMessage>> {
  static constexpr std::string_view name = "compute_pi"; };
struct SendLambda : OpSignature<LambdaMessage, const LambdaMessage&, const Range&, std::span<const Range>,
                                std::span<const PiMessage>, std::size_t> {
  static constexpr std::string_view name = "send_lambda"; };
struct ComputeBel : OpSignature<LambdaMessage, const LambdaMessage&, Rng&> {
  static constexpr std::string_view name = "compute_bel"; };
struct Invert : OpSignature<Vector, const Vector&> {
  static constexpr std::string_view name = "invert"; };
struct MakeFactors : OpSignature<CondTable, const Range&, std::span<const Range>> {
  static constexpr std::string_view name = "make_factors"; };
// clang-format on

}  // namespace ops

/// Declares every built-in operation in `registry`.
inline void register_operations(Registry& registry) {
  registry.register_operation<ops::Sample>("SFunc{I,O,P} -> (I) -> O");
  registry.register_operation<ops::SampleN>("SFunc{I,O,P} -> (I, n) -> [O; n]");
  registry.register_operation<ops::LogCpdf>("SFunc{I,O,P} -> (I, O) -> real");
  registry.register_operation<ops::Expectation>("SFunc{I,O,P} -> (I) -> real");
  registry.register_operation<ops::Variance>("SFunc{I,O,P} -> (I) -> real");
  registry.register_operation<ops::Support>("SFunc{I,O,P} -> (ranges(I), size, [O]) -> [O]");
  registry.register_operation<ops::GetScore>("Score{I} -> (I) -> real");
  registry.register_operation<ops::GenSf>("Conditional{I,J,O} -> (I) -> SFunc{J,O}");
  registry.register_operation<ops::ComputePi>("SFunc{I,O,P} -> (range(O), ranges(I), Dist{I}) -> Dist{O}");
  registry.register_operation<ops::SendLambda>(
      "SFunc{I,O,P} -> (Score{O}, range(O), ranges(I), Dist{I}, k) -> Score{I_k}");
  registry.register_operation<ops::ComputeBel>("Dist{O} -> (Score{O}) -> Score{O}");
  registry.register_operation<ops::Invert>("Det{I,O} -> (O) -> I");
  registry.register_operation<ops::MakeFactors>("SFunc{I,O,P} -> (range(O), ranges(I)) -> table");
}

// Call wrappers. Each dispatches through the engine's registry and policy.

inline Value sample(const Engine& engine, const SFunc& sf, std::span<const Value> parents, Rng& rng) {
  return engine.call<ops::Sample>(sf, parents, rng);
}

inline std::vector<Value> sample_n(const Engine& engine, const SFunc& sf, std::span<const Value> parents,
                                   std::size_t n, Rng& rng) {
  return engine.call<ops::SampleN>(sf, parents, n, rng);
}

inline double logcpdf(const Engine& engine, const SFunc& sf, std::span<const Value> parents, const Value& value) {
  return engine.call<ops::LogCpdf>(sf, parents, value);
}

inline double cpdf(const Engine& engine, const SFunc& sf, std::span<const Value> parents, const Value& value) {
  return std::exp(logcpdf(engine, sf, parents, value));
}

inline double expectation(const Engine& engine, const SFunc& sf, std::span<const Value> parents = {}) {
  return engine.call<ops::Expectation>(sf, parents);
}

inline double variance(const Engine& engine, const SFunc& sf, std::span<const Value> parents = {}) {
  return engine.call<ops::Variance>(sf, parents);
}

inline Range support(const Engine& engine, const SFunc& sf, std::span<const Range> parent_ranges,
                     std::size_t target_size, const Range& prior = {}) {
  return engine.call<ops::Support>(sf, parent_ranges, target_size, prior);
}

inline double get_score(const Engine& engine, const SFunc& sf, std::span<const Value> inputs) {
  return engine.call<ops::GetScore>(sf, inputs);
}

inline double get_score(const Engine& engine, const SFunc& sf, const Value& value) {
  return get_score(engine, sf, std::span<const Value>(&value, 1));
}

inline SFuncPtr gen_sf(const Engine& engine, const SFunc& sf, std::span<const Value> i_values) {
  return engine.call<ops::GenSf>(sf, i_values);
}

inline PiMessage compute_pi(const Engine& engine, const SFunc& sf, const Range& range,
                            std::span<const Range> parent_ranges, std::span<const PiMessage> incoming_pis) {
  return engine.call<ops::ComputePi>(sf, range, parent_ranges, incoming_pis);
}

inline LambdaMessage send_lambda(const Engine& engine, const SFunc& sf, const LambdaMessage& lambda,
                                 const Range& range, std::span<const Range> parent_ranges,
                                 std::span<const PiMessage> incoming_pis, std::size_t target) {
  return engine.call<ops::SendLambda>(sf, lambda, range, parent_ranges, incoming_pis, target);
}

inline LambdaMessage compute_bel(const Engine& engine, const SFunc& dist, const LambdaMessage& score, Rng& rng) {
  return engine.call<ops::ComputeBel>(dist, score, rng);
}

inline Vector invert(const Engine& engine, const SFunc& det, const Vector& observed) {
  return engine.call<ops::Invert>(det, observed);
}

inline CondTable make_table(const Engine& engine, const SFunc& sf, const Range& range,
                            std::span<const Range> parent_ranges) {
  return engine.call<ops::MakeFactors>(sf, range, parent_ranges);
}

/// Quadrature widths of the points of a sorted numeric grid.
/**
 * Interior points get half the distance between their neighbours; end points mirror their
 * single neighbour gap. A one-point grid gets width 1.
 */
inline std::vector<double> grid_widths(const Range& range) {
  std::vector<double> widths(range.size(), 1.0);
  if (range.size() < 2) {
    return widths;
  }
  std::vector<double> x(range.size());
  for (std::size_t i = 0; i < range.size(); ++i) {
    x[i] = to_double(range[i]);
  }
  widths.front() = x[1] - x[0];
  widths.back() = x[x.size() - 1] - x[x.size() - 2];
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    widths[i] = 0.5 * (x[i + 1] - x[i - 1]);
  }
  return widths;
}

/// Unnormalized weight of every value of `range` under `sf` given parent values.
/**
 * Mass functions return their masses. Densities over a grid of two or more points are turned
 * into masses by multiplying with the grid widths; a single point (an observation) keeps its
 * density.
 */
inline std::vector<double> range_weights(const Engine& engine, const SFunc& sf, std::span<const Value> parents,
                                         const Range& range) {
  std::vector<double> out(range.size());
  for (std::size_t i = 0; i < range.size(); ++i) {
    out[i] = cpdf(engine, sf, parents, range[i]);
  }
  if (sf.signature().continuous && range.size() > 1) {
    const auto widths = grid_widths(range);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] *= widths[i];
    }
  }
  return out;
}

/// Scales `weights` to sum to one. Returns false (leaving the input untouched) when the sum is
/// not positive and finite.
inline bool normalize_in_place(std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    return false;
  }
  for (auto& w : weights) {
    w /= total;
  }
  return true;
}

/// Iterates over the Cartesian product of range sizes in row-major order (last index fastest).
class AssignmentCounter {
 public:
  explicit AssignmentCounter(std::vector<std::size_t> sizes) : sizes_{std::move(sizes)}, index_(sizes_.size(), 0) {
    total_ = 1;
    for (const auto s : sizes_) {
      total_ *= s;
    }
  }

  [[nodiscard]] std::size_t total() const noexcept { return total_; }
  [[nodiscard]] const std::vector<std::size_t>& index() const noexcept { return index_; }

  void next() {
    for (std::size_t k = sizes_.size(); k-- > 0;) {
      if (++index_[k] < sizes_[k]) {
        return;
      }
      index_[k] = 0;
    }
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> index_;
  std::size_t total_ = 1;
};

inline std::vector<std::size_t> range_sizes(std::span<const Range> ranges) {
  std::vector<std::size_t> sizes;
  sizes.reserve(ranges.size());
  for (const auto& r : ranges) {
    sizes.push_back(r.size());
  }
  return sizes;
}

}  // namespace opnet

#endif

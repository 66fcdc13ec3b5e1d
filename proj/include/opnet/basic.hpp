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

#ifndef OPNET_BASIC_HPP
#define OPNET_BASIC_HPP

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "opnet/operations.hpp"
#include "opnet/registry.hpp"
#include "opnet/sfunc.hpp"

/**
 * \file
 * \brief Leaf SFuncs: distributions without parents and scores without outputs.
 */

namespace opnet {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNormalizationTolerance = 1e-9;

/// Categorical distribution over a finite list of distinct values.
class CatDist final : public SFunc {
 public:
  struct Params {
    Range values;
    std::vector<double> probabilities;
  };

  explicit CatDist(Params params) : CatDist(std::move(params.values), std::move(params.probabilities)) {}

  CatDist(Range values, std::vector<double> probabilities)
      : SFunc{{{}, space_of(values), ValueSpace::vector}},
        values_{std::move(values)},
        probabilities_{std::move(probabilities)} {
    if (values_.empty() || values_.size() != probabilities_.size()) {
      throw InvalidArgument("Cat needs one probability per value");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(probabilities_[i] >= 0.0 && probabilities_[i] <= 1.0)) {
        throw InvalidArgument("Cat probability outside [0, 1]");
      }
      if (!index_.emplace(values_[i], i).second) {
        throw InvalidArgument("Cat values must be distinct; duplicate " + to_string(values_[i]));
      }
      total += probabilities_[i];
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw InvalidArgument("Cat probabilities sum to " + format_double(total) + ", not 1");
    }
  }

  [[nodiscard]] std::string_view kind() const override { return "cat"; }
  [[nodiscard]] const Range& values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probabilities_; }
  [[nodiscard]] Params params() const { return {values_, probabilities_}; }

  [[nodiscard]] double probability(const Value& value) const {
    const auto it = index_.find(value);
    return it == index_.end() ? 0.0 : probabilities_[it->second];
  }

 private:
  Range values_;
  std::vector<double> probabilities_;
  std::map<Value, std::size_t> index_;
};

/// Bernoulli distribution over `{false, true}`; `prob_true` is P(true).
class FlipDist final : public SFunc {
 public:
  explicit FlipDist(double prob_true) : SFunc{{{}, ValueSpace::boolean, ValueSpace::real}}, prob_true_{prob_true} {
    if (!(prob_true >= 0.0 && prob_true <= 1.0)) {
      throw InvalidArgument("Flip probability outside [0, 1]");
    }
  }

  [[nodiscard]] std::string_view kind() const override { return "flip"; }
  [[nodiscard]] double prob_true() const noexcept { return prob_true_; }

 private:
  double prob_true_;
};

class NormalDist final : public SFunc {
 public:
  NormalDist(double mean, double variance)
      : SFunc{{{}, ValueSpace::real, ValueSpace::vector, true}}, mean_{mean}, variance_{variance} {
    if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
      throw InvalidArgument("Normal needs a finite mean and a strictly positive variance");
    }
  }

  [[nodiscard]] std::string_view kind() const override { return "normal"; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept { return variance_; }

  [[nodiscard]] double log_density(double x) const {
    const double d = x - mean_;
    return -0.5 * std::log(2.0 * std::numbers::pi * variance_) - 0.5 * d * d / variance_;
  }

  /// The `k` quantiles at probabilities (i - 0.5) / k.
  [[nodiscard]] Range quantile_grid(std::size_t k) const {
    const boost::math::normal_distribution<double> law(mean_, std::sqrt(variance_));
    Range out;
    out.reserve(k);
    for (std::size_t i = 1; i <= k; ++i) {
      out.emplace_back(boost::math::quantile(law, (static_cast<double>(i) - 0.5) / static_cast<double>(k)));
    }
    return out;
  }

 private:
  double mean_;
  double variance_;
};

/// Degenerate distribution on a single value.
class ConstantDist final : public SFunc {
 public:
  explicit ConstantDist(Value value) : SFunc{{{}, space_of(value), ValueSpace::none}}, value_{std::move(value)} {}

  [[nodiscard]] std::string_view kind() const override { return "constant"; }
  [[nodiscard]] const Value& value() const noexcept { return value_; }

 private:
  Value value_;
};

/// Scores 1 for one allowed value and 0 otherwise.
class HardScore final : public SFunc {
 public:
  explicit HardScore(Value allowed)
      : SFunc{{{space_of(allowed)}, ValueSpace::none, ValueSpace::none}}, allowed_{std::move(allowed)} {}

  [[nodiscard]] std::string_view kind() const override { return "hard_score"; }
  [[nodiscard]] const Value& allowed() const noexcept { return allowed_; }

 private:
  Value allowed_;
};

/// Explicit nonnegative weights per value; absent values score 0.
class SoftScore final : public SFunc {
 public:
  /// Duplicate values have their weights added.
  explicit SoftScore(const std::vector<std::pair<Value, double>>& entries) : SoftScore(collect(entries)) {}

  explicit SoftScore(std::map<Value, double> weights)
      : SFunc{{{space_of(keys(weights))}, ValueSpace::none, ValueSpace::none}}, weights_{std::move(weights)} {
    for (const auto& [value, w] : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvalidArgument("SoftScore weight for " + to_string(value) + " must be finite and nonnegative");
      }
    }
  }

  SoftScore(const Range& values, const std::vector<double>& weights) : SoftScore(zip(values, weights)) {}

  [[nodiscard]] std::string_view kind() const override { return "soft_score"; }
  [[nodiscard]] const std::map<Value, double>& weights() const noexcept { return weights_; }

  [[nodiscard]] double weight(const Value& value) const {
    const auto it = weights_.find(value);
    return it == weights_.end() ? 0.0 : it->second;
  }

 private:
  static std::map<Value, double> collect(const std::vector<std::pair<Value, double>>& entries) {
    std::map<Value, double> out;
    for (const auto& [value, w] : entries) {
      out[value] += w;
    }
    return out;
  }

  static std::vector<std::pair<Value, double>> zip(const Range& values, const std::vector<double>& weights) {
    if (values.size() != weights.size()) {
      throw InvalidArgument("SoftScore needs one weight per value");
    }
    std::vector<std::pair<Value, double>> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.emplace_back(values[i], weights[i]);
    }
    return out;
  }

  static Range keys(const std::map<Value, double>& weights) {
    Range out;
    for (const auto& [value, _] : weights) {
      out.push_back(value);
    }
    return out;
  }

  std::map<Value, double> weights_;
};

/// Score given by a deterministic function of the value.
class FunctionalScore final : public SFunc {
 public:
  using Function = std::function<double(const Value&)>;

  explicit FunctionalScore(Function fn, ValueSpace input = ValueSpace::any)
      : SFunc{{{input}, ValueSpace::none, ValueSpace::none}}, fn_{std::move(fn)} {}

  [[nodiscard]] std::string_view kind() const override { return "functional_score"; }
  [[nodiscard]] const Function& function() const noexcept { return fn_; }

 private:
  Function fn_;
};

/// Logical constraint over several inputs; scores 1 when the predicate holds and 0 otherwise.
class ConstraintScore final : public SFunc {
 public:
  using Predicate = std::function<bool(std::span<const Value>)>;

  ConstraintScore(std::size_t arity, Predicate predicate)
      : SFunc{{std::vector<ValueSpace>(arity, ValueSpace::any), ValueSpace::none, ValueSpace::none}},
        predicate_{std::move(predicate)} {}

  [[nodiscard]] std::string_view kind() const override { return "constraint"; }
  [[nodiscard]] const Predicate& predicate() const noexcept { return predicate_; }

 private:
  Predicate predicate_;
};

inline SFuncPtr make_cat(Range values, std::vector<double> probabilities) {
  return std::make_shared<CatDist>(std::move(values), std::move(probabilities));
}
inline SFuncPtr make_flip(double p) { return std::make_shared<FlipDist>(p); }
inline SFuncPtr make_normal(double mean, double variance) { return std::make_shared<NormalDist>(mean, variance); }
inline SFuncPtr make_constant(Value value) { return std::make_shared<ConstantDist>(std::move(value)); }
inline SFuncPtr make_hard_score(Value allowed) { return std::make_shared<HardScore>(std::move(allowed)); }
inline SFuncPtr make_soft_score(const Range& values, const std::vector<double>& weights) {
  return std::make_shared<SoftScore>(values, weights);
}

namespace detail {

inline bool all_numeric(const Range& values) {
  return std::all_of(values.begin(), values.end(), [](const Value& v) { return is_numeric(v); });
}

inline Range merged(Range out, const Range& prior) {
  out.insert(out.end(), prior.begin(), prior.end());
  canonicalize(out);
  return out;
}

}  // namespace detail

/// Registers the leaf kinds and their implementations.
inline void register_basic(Registry& registry) {
  using namespace ops;  // NOLINT(google-build-using-namespace)

  registry.register_kind("dist", "sfunc");
  registry.register_kind("score", "sfunc");
  for (const auto* kind : {"cat", "flip", "normal", "constant"}) {
    registry.register_kind(kind, "dist");
  }
  for (const auto* kind : {"hard_score", "soft_score", "functional_score", "constraint"}) {
    registry.register_kind(kind, "score");
  }

  // sample
  registry.register_impl<Sample>("sample.cat", "cat", [](const Invocation&, const SFunc& sf, auto parents, Rng& rng) {
    check_arity(sf, parents.size());
    const auto& cat = as<CatDist>(sf);
    const double u = uniform01(rng);
    double cumulative = 0.0;
    for (std::size_t i = 0; i < cat.values().size(); ++i) {
      cumulative += cat.probabilities()[i];
      if (u < cumulative) {
        return cat.values()[i];
      }
    }
    // Rounding can leave u above the last cumulative sum; return the last value with mass.
    for (std::size_t i = cat.values().size(); i-- > 0;) {
      if (cat.probabilities()[i] > 0.0) {
        return cat.values()[i];
      }
    }
    return cat.values().back();
  });
  registry.register_impl<Sample>("sample.flip", "flip",
                                 [](const Invocation&, const SFunc& sf, auto parents, Rng& rng) -> Value {
                                   check_arity(sf, parents.size());
                                   return uniform01(rng) < as<FlipDist>(sf).prob_true();
                                 });
  registry.register_impl<Sample>("sample.normal", "normal",
                                 [](const Invocation&, const SFunc& sf, auto parents, Rng& rng) -> Value {
                                   check_arity(sf, parents.size());
                                   const auto& normal = as<NormalDist>(sf);
                                   return std::normal_distribution<double>{normal.mean(),
                                                                           std::sqrt(normal.variance())}(rng);
                                 });
  registry.register_impl<Sample>("sample.constant", "constant",
                                 [](const Invocation&, const SFunc& sf, auto parents, Rng&) -> Value {
                                   check_arity(sf, parents.size());
                                   return as<ConstantDist>(sf).value();
                                 });

  // sample_n: a vectorized Flip sampler; everything else goes through the generic repeat.
  registry.register_impl<SampleN>(
      "sample_n.flip", "flip",
      [](const Invocation&, const SFunc& sf, auto parents, std::size_t n, Rng& rng) {
        check_arity(sf, parents.size());
        if (n == 0) {
          throw InvalidArgument("sample_n needs n >= 1");
        }
        const double p = as<FlipDist>(sf).prob_true();
        std::vector<Value> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          out.emplace_back(uniform01(rng) < p);
        }
        return out;
      });

  // logcpdf
  registry.register_impl<LogCpdf>("logcpdf.cat", "cat",
                                  [](const Invocation&, const SFunc& sf, auto parents, const Value& x) {
                                    check_arity(sf, parents.size());
                                    return std::log(as<CatDist>(sf).probability(x));
                                  });
  registry.register_impl<LogCpdf>("logcpdf.flip", "flip",
                                  [](const Invocation&, const SFunc& sf, auto parents, const Value& x) {
                                    check_arity(sf, parents.size());
                                    const double p = as<FlipDist>(sf).prob_true();
                                    if (const auto* b = std::get_if<bool>(&x)) {
                                      return std::log(*b ? p : 1.0 - p);
                                    }
                                    return kNegInf;
                                  });
  registry.register_impl<LogCpdf>("logcpdf.normal", "normal",
                                  [](const Invocation&, const SFunc& sf, auto parents, const Value& x) {
                                    check_arity(sf, parents.size());
                                    if (!is_numeric(x)) {
                                      return kNegInf;
                                    }
                                    return as<NormalDist>(sf).log_density(to_double(x));
                                  });
  registry.register_impl<LogCpdf>("logcpdf.constant", "constant",
                                  [](const Invocation&, const SFunc& sf, auto parents, const Value& x) {
                                    check_arity(sf, parents.size());
                                    return x == as<ConstantDist>(sf).value() ? 0.0 : kNegInf;
                                  });

  // expectation / variance
  auto numeric_cat = [](const SFunc& sf, auto) { return detail::all_numeric(as<CatDist>(sf).values()); };
  auto numeric_constant = [](const SFunc& sf, auto) { return is_numeric(as<ConstantDist>(sf).value()); };
  registry.register_impl<Expectation>(
      "expectation.cat", "cat",
      [](const Invocation&, const SFunc& sf, auto) {
        const auto& cat = as<CatDist>(sf);
        double mean = 0.0;
        for (std::size_t i = 0; i < cat.values().size(); ++i) {
          mean += cat.probabilities()[i] * to_double(cat.values()[i]);
        }
        return mean;
      },
      {}, numeric_cat);
  registry.register_impl<Expectation>("expectation.flip", "flip", [](const Invocation&, const SFunc& sf, auto) {
    return as<FlipDist>(sf).prob_true();
  });
  registry.register_impl<Expectation>("expectation.normal", "normal", [](const Invocation&, const SFunc& sf, auto) {
    return as<NormalDist>(sf).mean();
  });
  registry.register_impl<Expectation>(
      "expectation.constant", "constant",
      [](const Invocation&, const SFunc& sf, auto) { return to_double(as<ConstantDist>(sf).value()); }, {},
      numeric_constant);
  registry.register_impl<Variance>(
      "variance.cat", "cat",
      [](const Invocation&, const SFunc& sf, auto) {
        const auto& cat = as<CatDist>(sf);
        double mean = 0.0;
        double second = 0.0;
        for (std::size_t i = 0; i < cat.values().size(); ++i) {
          const double x = to_double(cat.values()[i]);
          mean += cat.probabilities()[i] * x;
          second += cat.probabilities()[i] * x * x;
        }
        return second - mean * mean;
      },
      {}, numeric_cat);
  registry.register_impl<Variance>("variance.flip", "flip", [](const Invocation&, const SFunc& sf, auto) {
    const double p = as<FlipDist>(sf).prob_true();
    return p * (1.0 - p);
  });
  registry.register_impl<Variance>("variance.normal", "normal", [](const Invocation&, const SFunc& sf, auto) {
    return as<NormalDist>(sf).variance();
  });
  registry.register_impl<Variance>(
      "variance.constant", "constant", [](const Invocation&, const SFunc&, auto) { return 0.0; }, {},
      numeric_constant);

  // support
  registry.register_impl<Support>(
      "support.cat", "cat", [](const Invocation&, const SFunc& sf, auto, std::size_t, const Range& prior) {
        return detail::merged(as<CatDist>(sf).values(), prior);
      });
  registry.register_impl<Support>("support.flip", "flip",
                                  [](const Invocation&, const SFunc&, auto, std::size_t, const Range& prior) {
                                    return detail::merged({Value{false}, Value{true}}, prior);
                                  });
  registry.register_impl<Support>("support.constant", "constant",
                                  [](const Invocation&, const SFunc& sf, auto, std::size_t, const Range& prior) {
                                    return detail::merged({as<ConstantDist>(sf).value()}, prior);
                                  });
  registry.register_impl<Support>(
      "support.normal", "normal",
      [](const Invocation&, const SFunc& sf, auto, std::size_t target, const Range& prior) {
        return detail::merged(as<NormalDist>(sf).quantile_grid(std::max<std::size_t>(target, 1)), prior);
      });
  for (const auto* impl : {"support.cat", "support.flip", "support.constant"}) {
    registry.register_perf(impl, Measure::support_quality, SupportQuality::complete);
  }
  registry.register_perf("support.normal", Measure::support_quality, SupportQuality::incremental);
  registry.register_perf("support.cat", Measure::runtime,
                         [](const PerfQuery& q) -> PerfValue { return double(as<CatDist>(q.sfunc).values().size()); });

  // get_score
  registry.register_impl<GetScore>("get_score.hard", "hard_score",
                                   [](const Invocation&, const SFunc& sf, std::span<const Value> inputs) {
                                     check_arity(sf, inputs.size());
                                     return inputs[0] == as<HardScore>(sf).allowed() ? 1.0 : 0.0;
                                   });
  registry.register_impl<GetScore>("get_score.soft", "soft_score",
                                   [](const Invocation&, const SFunc& sf, std::span<const Value> inputs) {
                                     check_arity(sf, inputs.size());
                                     return as<SoftScore>(sf).weight(inputs[0]);
                                   });
  registry.register_impl<GetScore>(
      "get_score.functional", "functional_score", [](const Invocation&, const SFunc& sf, std::span<const Value> inputs) {
        check_arity(sf, inputs.size());
        double score = 0.0;
        try {
          score = as<FunctionalScore>(sf).function()(inputs[0]);
        } catch (const std::exception& e) {
          throw ScoringError(to_string(inputs[0]), e.what());
        }
        if (!(score >= 0.0)) {
          throw ScoringError(to_string(inputs[0]), "negative or NaN score " + format_double(score));
        }
        return score;
      });
  registry.register_impl<GetScore>("get_score.constraint", "constraint",
                                   [](const Invocation&, const SFunc& sf, std::span<const Value> inputs) {
                                     check_arity(sf, inputs.size());
                                     return as<ConstraintScore>(sf).predicate()(inputs) ? 1.0 : 0.0;
                                   });

  // compute_pi: a distribution is its own π.
  registry.register_impl<ComputePi>(
      "compute_pi.dist", "dist",
      [](const Invocation& inv, const SFunc& sf, const Range& range, auto parent_ranges, auto) -> PiMessage {
        check_arity(sf, parent_ranges.size());
        inv.engine.count(range.size());
        return sf.ptr();
      });
  registry.register_perf("compute_pi.dist", Measure::runtime, [](const PerfQuery& q) -> PerfValue {
    return q.sizes.empty() ? 1.0 : double(q.sizes.front());
  });
  registry.register_perf("compute_pi.dist", Measure::is_exact, true);

  // make_factors for scores: one column over the parent assignments.
  registry.register_impl<MakeFactors>(
      "make_factors.score", "score",
      [](const Invocation& inv, const SFunc& sf, const Range&, std::span<const Range> parent_ranges) {
        check_arity(sf, parent_ranges.size());
        AssignmentCounter counter(range_sizes(parent_ranges));
        CondTable table;
        table.rows = counter.total();
        table.cols = 1;
        table.role = inv.engine.registry().is_a(sf.kind(), "hard_score") ||
                             inv.engine.registry().is_a(sf.kind(), "constraint")
                         ? FactorRole::logical
                         : FactorRole::probabilistic;
        table.entries.reserve(table.rows);
        std::vector<Value> inputs(parent_ranges.size());
        for (std::size_t r = 0; r < table.rows; ++r, counter.next()) {
          for (std::size_t k = 0; k < inputs.size(); ++k) {
            inputs[k] = parent_ranges[k][counter.index()[k]];
          }
          table.entries.push_back(get_score(inv.engine, sf, inputs));
        }
        inv.engine.count(table.rows);
        return table;
      });

  // compute_bel: eager sampling versus a deferred functional product.
  registry.register_impl<ComputeBel>(
      "compute_bel.eager", "dist",
      [](const Invocation& inv, const SFunc& dist, const LambdaMessage& score, Rng& rng) -> LambdaMessage {
        const auto n = static_cast<std::size_t>(inv.hyper.get<std::int64_t>("num_samples"));
        std::vector<std::pair<Value, double>> entries;
        entries.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          auto x = sample(inv.engine, dist, {}, rng);
          const double s = get_score(inv.engine, *score, x);
          entries.emplace_back(std::move(x), s);
        }
        inv.engine.count(n);
        return std::make_shared<SoftScore>(entries);
      },
      {{"num_samples", std::int64_t{100}}});
  registry.register_impl<ComputeBel>(
      "compute_bel.lazy", "dist",
      [](const Invocation& inv, const SFunc& dist, const LambdaMessage& score, Rng&) -> LambdaMessage {
        auto engine = std::make_shared<Engine>(inv.engine);
        auto d = dist.ptr();
        auto s = score;
        return std::make_shared<FunctionalScore>(
            [engine, d, s](const Value& x) { return cpdf(*engine, *d, {}, x) * get_score(*engine, *s, x); },
            d->signature().output);
      });
  registry.register_perf("compute_bel.eager", Measure::is_lazy, false);
  registry.register_perf("compute_bel.eager", Measure::is_exact, false);
  registry.register_perf("compute_bel.lazy", Measure::is_lazy, true);
  registry.register_perf("compute_bel.lazy", Measure::is_exact, true);
}

}  // namespace opnet

#endif

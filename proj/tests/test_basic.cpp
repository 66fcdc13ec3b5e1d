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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "opnet/opnet.hpp"

namespace {

using namespace opnet;

using I = std::int64_t;

class Basic : public ::testing::Test {
 protected:
  const Engine engine{default_registry(), policy_by_name("default")};
};

const Value a{std::string("a")};
const Value b{std::string("b")};

TEST_F(Basic, DegenerateFlips) {
  Rng rng = substream(1, 0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample(engine, *make_flip(1.0), {}, rng), Value{true});
    EXPECT_EQ(sample(engine, *make_flip(0.0), {}, rng), Value{false});
  }
}

TEST_F(Basic, CatFrequencyWithinBinomialBound) {
  Rng rng = substream(7, 0);
  const auto cat = make_cat({a, b}, {0.3, 0.7});
  const auto draws = sample_n(engine, *cat, {}, 100000, rng);
  const double freq = double(std::count(draws.begin(), draws.end(), b)) / 1e5;
  EXPECT_NEAR(freq, 0.7, 3.0 * std::sqrt(0.21 / 1e5));
}

TEST_F(Basic, SampleNLengthsAndConstants) {
  Rng rng = substream(2, 0);
  const auto flips = sample_n(engine, *make_flip(0.5), {}, 5, rng);
  ASSERT_EQ(flips.size(), 5U);
  for (const auto& v : flips) {
    EXPECT_TRUE(std::holds_alternative<bool>(v));
  }
  EXPECT_EQ(sample_n(engine, *make_constant(Value{I{7}}), {}, 3, rng), (std::vector<Value>(3, Value{I{7}})));
}

TEST_F(Basic, FlipSampleNMeansProbabilityOfTrue) {
  Rng rng = substream(3, 0);
  const auto draws = sample_n(engine, *make_flip(0.2), {}, 100000, rng);
  const double freq = double(std::count(draws.begin(), draws.end(), Value{true})) / 1e5;
  EXPECT_NEAR(freq, 0.2, 3.0 * std::sqrt(0.16 / 1e5));
}

TEST_F(Basic, NormalSampleMean) {
  Rng rng = substream(4, 0);
  const auto draws = sample_n(engine, *make_normal(0.0, 1.0), {}, 100000, rng);
  double s = 0.0;
  for (const auto& v : draws) {
    s += std::get<double>(v);
  }
  EXPECT_NEAR(s / 1e5, 0.0, 0.01);
}

TEST_F(Basic, LogCpdf) {
  EXPECT_NEAR(logcpdf(engine, *make_cat({a, b}, {0.3, 0.7}), {}, b), std::log(0.7), 1e-15);
  EXPECT_NEAR(logcpdf(engine, *make_normal(0.0, 1.0), {}, Value{0.0}), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(logcpdf(engine, *make_flip(0.25), {}, Value{true}), std::log(0.25), 1e-15);
  EXPECT_EQ(logcpdf(engine, *make_cat({a, b}, {0.3, 0.7}), {}, Value{std::string("c")}), kNegInf);
}

TEST_F(Basic, Moments) {
  EXPECT_DOUBLE_EQ(expectation(engine, *make_normal(2.5, 1.0)), 2.5);
  EXPECT_DOUBLE_EQ(expectation(engine, *make_flip(0.3)), 0.3);
  EXPECT_NEAR(expectation(engine, *make_cat({Value{I{1}}, Value{I{2}}, Value{I{3}}}, {0.2, 0.3, 0.5})), 2.3, 1e-12);
  EXPECT_DOUBLE_EQ(variance(engine, *make_normal(0.0, 4.0)), 4.0);
  EXPECT_DOUBLE_EQ(variance(engine, *make_constant(Value{I{7}})), 0.0);
  EXPECT_DOUBLE_EQ(variance(engine, *make_flip(0.5)), 0.25);
}

TEST_F(Basic, CatMomentsMatchMonteCarlo) {
  const auto cat = make_cat({Value{I{1}}, Value{I{2}}, Value{I{3}}}, {0.2, 0.3, 0.5});
  Rng rng = substream(5, 0);
  const auto draws = sample_n(engine, *cat, {}, 100000, rng);
  double s = 0.0, s2 = 0.0;
  for (const auto& v : draws) {
    const double x = to_double(v);
    s += x;
    s2 += x * x;
  }
  const double mean = s / 1e5;
  const double var = s2 / 1e5 - mean * mean;
  EXPECT_NEAR(mean, expectation(engine, *cat), 3.0 * std::sqrt(var / 1e5));
}

TEST_F(Basic, FiniteDistsNormalize) {
  const std::vector<SFuncPtr> dists{make_flip(0.3), make_cat({a, b}, {0.6, 0.4}),
                                    make_cat({Value{I{1}}, Value{I{5}}, Value{I{9}}}, {0.1, 0.2, 0.7}),
                                    make_constant(Value{I{3}})};
  for (const auto& d : dists) {
    double total = 0.0;
    for (const auto& v : support(engine, *d, {}, 10)) {
      total += cpdf(engine, *d, {}, v);
    }
    EXPECT_NEAR(total, 1.0, 1e-9) << d->kind();
  }
}

TEST_F(Basic, Supports) {
  const auto cat = make_cat({a, b}, {0.5, 0.5});
  for (const std::size_t k : {1, 2, 10}) {
    EXPECT_EQ(support(engine, *cat, {}, k), (Range{a, b}));
  }
  EXPECT_EQ(support(engine, *make_flip(0.5), {}, 4), (Range{Value{false}, Value{true}}));
  const auto n = make_normal(0.0, 1.0);
  const auto s3 = support(engine, *n, {}, 3);
  const auto s5 = support(engine, *n, {}, 5, s3);
  EXPECT_EQ(s3.size(), 3U);
  EXPECT_TRUE(includes_all(s5, s3));
  // the median is always on an odd grid
  EXPECT_NE(index_of(s3, Value{0.0}), s3.size());
}

TEST_F(Basic, Scores) {
  EXPECT_EQ(get_score(engine, *make_hard_score(a), a), 1.0);
  EXPECT_EQ(get_score(engine, *make_hard_score(a), b), 0.0);
  EXPECT_EQ(get_score(engine, *make_soft_score({a, b}, {0.8, 0.2}), b), 0.2);
  EXPECT_THROW(make_soft_score({a}, {-1.0}), InvalidArgument);
}

TEST_F(Basic, InvalidParameters) {
  EXPECT_THROW(make_flip(1.5), InvalidArgument);
  EXPECT_THROW(make_normal(0.0, 0.0), InvalidArgument);
  EXPECT_THROW(make_cat({a, b}, {0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(make_cat({a, a}, {0.5, 0.5}), InvalidArgument);
}

TEST_F(Basic, ComputeBelEagerAndLazy) {
  const auto cat = make_cat({a, b}, {0.3, 0.7});
  const auto score = make_soft_score({a, b}, {1.0, 0.5});
  Rng rng = substream(9, 0);
  const auto eager = compute_bel(engine, *cat, score, rng);
  EXPECT_EQ(eager->kind(), "soft_score");
  const Engine lazy_engine{default_registry(), policy_by_name("prefer_lazy")};
  const auto lazy = compute_bel(lazy_engine, *cat, score, rng);
  EXPECT_EQ(lazy->kind(), "functional_score");
  EXPECT_NEAR(get_score(engine, *lazy, b), 0.35, 1e-12);
}

}  // namespace

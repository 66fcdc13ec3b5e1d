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

#include <random>

#include "opnet/em.hpp"
#include "opnet/opnet.hpp"

namespace {

using namespace opnet;
using I = std::int64_t;

const Range bin{Value{I{0}}, Value{I{1}}};

SFuncPtr cpt(std::vector<std::vector<double>> rows) {
  return std::make_shared<DiscreteCPT>(std::vector<Range>{bin}, bin, rows);
}

class EM : public ::testing::Test {
 protected:
  const Engine engine{default_registry(), policy_by_name("default")};
};

// A -> B -> C
Network chain(double a1, std::vector<std::vector<double>> b, std::vector<std::vector<double>> c) {
  Network net;
  net.add("A", make_cat(bin, {1.0 - a1, a1}));
  net.add("B", cpt(std::move(b)), {"A"});
  net.add("C", cpt(std::move(c)), {"B"});
  return net;
}

const DiscreteCPT& table(const Network& net, const VariableId& id) { return as<DiscreteCPT>(*net.node(id).sf); }

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::abs(a[i] - b[i]);
  }
  return s;
}

Dataset sample(const Network& truth, std::size_t n, double hide, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& a = as<CatDist>(*truth.node("A").sf).probabilities();
  Dataset out;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t xa = u(rng) < a[1] ? 1 : 0;
    const std::size_t xb = u(rng) < table(truth, "B").row(xa)[1] ? 1 : 0;
    const std::size_t xc = u(rng) < table(truth, "C").row(xb)[1] ? 1 : 0;
    Record r;
    const std::pair<const char*, std::size_t> vals[] = {{"A", xa}, {"B", xb}, {"C", xc}};
    for (const auto& [id, x] : vals) {
      if (u(rng) >= hide) {
        r.emplace(id, Value{static_cast<I>(x)});
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

TEST(MaximizeRow, Examples) {
  EXPECT_EQ(maximize_row({3.0, 1.0}, 0.0), (std::vector<double>{0.75, 0.25}));
  EXPECT_EQ(maximize_row({0.0, 0.0, 0.0, 0.0}, 0.0), (std::vector<double>(4, 0.25)));
  EXPECT_EQ(maximize_row({0.0, 2.0}, 1.0), (std::vector<double>{0.25, 0.75}));
  EXPECT_THROW((void)maximize_row({1.0}, -1.0), InvalidArgument);
}

TEST_F(EM, FullyObservedGivesRelativeFrequencies) {
  const auto start = chain(0.5, {{0.5, 0.5}, {0.5, 0.5}}, {{0.5, 0.5}, {0.5, 0.5}});
  Dataset data;
  auto rec = [](I a, I b, I c) { return Record{{"A", Value{a}}, {"B", Value{b}}, {"C", Value{c}}}; };
  data = {rec(0, 0, 0), rec(0, 0, 1), rec(0, 1, 1), rec(1, 1, 1), rec(1, 1, 0), rec(0, 0, 0), rec(1, 0, 0),
          rec(0, 1, 1)};
  EMOptions opt;
  opt.smoothing = 0.0;
  const auto r = em_train(engine, start, data, opt);
  // A: 5 zeros, 3 ones
  const auto& a = as<CatDist>(*r.network.node("A").sf).probabilities();
  EXPECT_DOUBLE_EQ(a[1], 3.0 / 8.0);
  // B | A=0: 0,0,1,0,1 -> 3/5, 2/5 ; B | A=1: 1,1,0 -> 1/3, 2/3
  EXPECT_DOUBLE_EQ(table(r.network, "B").row(0)[0], 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(table(r.network, "B").row(1)[1], 2.0 / 3.0);
  // C | B=0: 0,1,0,0 -> 3/4 ; C | B=1: 1,1,0,1 -> 1/4, 3/4
  EXPECT_DOUBLE_EQ(table(r.network, "C").row(0)[0], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(table(r.network, "C").row(1)[1], 3.0 / 4.0);
}

TEST_F(EM, HalfHiddenRecoversParameters) {
  const auto truth = chain(0.3, {{0.8, 0.2}, {0.25, 0.75}}, {{0.9, 0.1}, {0.35, 0.65}});
  const auto data = sample(truth, 10000, 0.5, 21);
  const auto start = chain(0.5, {{0.6, 0.4}, {0.4, 0.6}}, {{0.6, 0.4}, {0.4, 0.6}});
  EMOptions opt;
  opt.rounds = 200;
  const auto r = em_train(engine, start, data, opt);
  EXPECT_LE(l1(as<CatDist>(*r.network.node("A").sf).probabilities(), {0.7, 0.3}), 0.05);
  for (const auto* id : {"B", "C"}) {
    for (std::size_t row = 0; row < 2; ++row) {
      EXPECT_LE(l1(table(r.network, id).row(row), table(truth, id).row(row)), 0.05) << id << row;
    }
  }
}

TEST_F(EM, LogLikelihoodNeverDecreases) {
  const auto truth = chain(0.3, {{0.8, 0.2}, {0.25, 0.75}}, {{0.9, 0.1}, {0.35, 0.65}});
  const auto data = sample(truth, 500, 0.6, 3);
  const auto r = em_train(engine, uniform_parameters(truth), data);
  ASSERT_GE(r.log_likelihood.size(), 2U);
  EXPECT_EQ(r.log_likelihood.size(), r.rounds + 1);
  for (std::size_t k = 1; k < r.log_likelihood.size(); ++k) {
    EXPECT_GE(r.log_likelihood[k], r.log_likelihood[k - 1] - 1e-9) << k;
  }
}

TEST_F(EM, ZeroRoundsReturnsInput) {
  const auto net = chain(0.3, {{0.8, 0.2}, {0.25, 0.75}}, {{0.9, 0.1}, {0.35, 0.65}});
  EMOptions opt;
  opt.rounds = 0;
  const auto r = em_train(engine, net, sample(net, 10, 0.0, 1), opt);
  EXPECT_EQ(r.rounds, 0U);
  EXPECT_TRUE(r.log_likelihood.empty());
  EXPECT_EQ(r.network.node("B").sf, net.node("B").sf);
}

TEST_F(EM, UnseenRowStaysUniform) {
  // B | A=1 never occurs with A observed as 0 only
  const auto start = chain(0.5, {{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.5, 0.5}});
  Dataset data(4, Record{{"A", Value{I{0}}}, {"B", Value{I{1}}}, {"C", Value{I{0}}}});
  EMOptions opt;
  opt.smoothing = 0.0;
  opt.rounds = 1;
  const auto r = em_train(engine, start, data, opt);
  EXPECT_EQ(table(r.network, "B").row(1), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(table(r.network, "B").row(0), (std::vector<double>{0.0, 1.0}));
}

TEST_F(EM, BadInputs) {
  const auto net = chain(0.3, {{0.8, 0.2}, {0.25, 0.75}}, {{0.9, 0.1}, {0.35, 0.65}});
  EXPECT_THROW((void)em_train(engine, net, Dataset{}), InvalidArgument);
  EXPECT_THROW((void)em_train(engine, net, Dataset{{{"Z", Value{I{0}}}}}), InvalidArgument);
}

}  // namespace

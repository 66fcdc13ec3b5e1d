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

#include "opnet/opnet.hpp"
#include "opnet/ve.hpp"
#include "oracle.hpp"

namespace {

using namespace opnet;
using I = std::int64_t;

const Range bin{Value{I{0}}, Value{I{1}}};

class VE : public ::testing::Test {
 protected:
  const Engine engine{default_registry(), policy_by_name("default")};
};

// --- semiring axioms on random triples -------------------------------------------------------

template <class S, class Gen, class Eq>
void check_axioms(Gen gen, Eq eq) {
  std::mt19937_64 rng(12345);
  for (int t = 0; t < 1000; ++t) {
    const auto a = gen(rng);
    const auto b = gen(rng);
    const auto c = gen(rng);
    ASSERT_TRUE(eq(S::add(S::add(a, b), c), S::add(a, S::add(b, c))));
    ASSERT_TRUE(eq(S::mul(S::mul(a, b), c), S::mul(a, S::mul(b, c))));
    ASSERT_TRUE(eq(S::add(a, b), S::add(b, a)));
    ASSERT_TRUE(eq(S::mul(a, b), S::mul(b, a)));
    ASSERT_TRUE(eq(S::mul(a, S::add(b, c)), S::add(S::mul(a, b), S::mul(a, c))));
    ASSERT_TRUE(eq(S::mul(a, S::zero()), S::zero()));
    ASSERT_TRUE(eq(S::add(a, S::zero()), a));
    ASSERT_TRUE(eq(S::mul(a, S::one()), a));
  }
}

bool near(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x)); }

TEST(Semiring, SumProductAxioms) {
  check_axioms<SumProduct>([](auto& r) { return std::uniform_real_distribution<double>(0, 1)(r); }, near);
}

TEST(Semiring, MaxProductAxioms) {
  check_axioms<MaxProduct>([](auto& r) { return std::uniform_real_distribution<double>(0, 1)(r); }, near);
}

TEST(Semiring, BooleanAxioms) {
  check_axioms<BooleanSemiring>([](auto& r) { return std::bernoulli_distribution(0.5)(r); },
                                [](bool x, bool y) { return x == y; });
}

TEST(Semiring, MixedAxioms) {
  check_axioms<MixedSemiring>(
      [](auto& r) {
        const bool b = std::bernoulli_distribution(0.7)(r);
        return MixedValue{b, b ? std::uniform_real_distribution<double>(0, 1)(r) : 0.0};
      },
      [](const MixedValue& x, const MixedValue& y) { return x.logical == y.logical && near(x.prob, y.prob); });
}

TEST(Semiring, MixedProductRules) {
  EXPECT_EQ(mixed_product({true, 0.5}, {false, 0.0}), (MixedValue{false, 0.0}));
  EXPECT_EQ(mixed_product({true, 1.0}, {true, 0.3}), (MixedValue{true, 0.3}));
  EXPECT_EQ(MixedSemiring::embed(0.0, FactorRole::logical), (MixedValue{false, 0.0}));
  EXPECT_EQ(MixedSemiring::embed(0.4, FactorRole::probabilistic), (MixedValue{true, 0.4}));
}

// --- factors ---------------------------------------------------------------------------------

Factor<SumProduct> one_var(const std::string& v, std::vector<double> t) { return {{v}, {bin}, std::move(t)}; }

TEST(Factors, CombineAndSumOut) {
  const auto f = one_var("A", {0.5, 0.5});
  const auto g = one_var("A", {0.2, 0.8});
  EXPECT_EQ(combine(f, g).table, (std::vector<double>{0.1, 0.4}));
  EXPECT_EQ(combine(f, one_var("A", {1.0, 1.0})).table, f.table);
  EXPECT_EQ(combine(f, one_var("A", {0.0, 0.0})).table, (std::vector<double>{0.0, 0.0}));
  EXPECT_DOUBLE_EQ(sum_out(combine(f, g), "A").table.at(0), 0.5);
  const Factor<MaxProduct> m{{"A"}, {bin}, {0.1, 0.4}};
  EXPECT_DOUBLE_EQ(sum_out(m, "A").table.at(0), 0.4);
  const Factor<BooleanSemiring> b{{"A"}, {bin}, {false, true}};
  EXPECT_TRUE(sum_out(b, "A").table.at(0));
  EXPECT_THROW((void)sum_out(f, "B"), Error);
  const Factor<SumProduct> other{{"A"}, {Range{Value{I{0}}}}, {1.0}};
  EXPECT_THROW((void)combine(f, other), Error);
}

TEST(Factors, CombineProducesUnionScope) {
  const auto f = one_var("A", {0.5, 0.5});
  const auto g = one_var("B", {0.2, 0.8});
  const auto h = combine(f, g);
  EXPECT_EQ(h.vars.size(), 2U);
  EXPECT_EQ(h.table.size(), 4U);
}

// --- queries -----------------------------------------------------------------------------------

TEST_F(VE, SingleFlip) {
  Network net;
  net.add("F", make_flip(0.3));
  const auto r = ve_query<SumProduct>(engine, net, Evidence{}, {"F"});
  EXPECT_NEAR(r.factor.table[0], 0.7, 1e-15);
  EXPECT_NEAR(r.factor.table[1], 0.3, 1e-15);
  const auto mpe = mpe_decode(engine, net, Evidence{});
  EXPECT_EQ(mpe.assignment.at("F"), Value{false});
  EXPECT_NEAR(mpe.value, 0.7, 1e-15);
}

TEST_F(VE, TwoChain) {
  Network net;
  net.add("P", make_flip(0.5));
  net.add("C", std::make_shared<DiscreteCPT>(std::vector<Range>{{Value{false}, Value{true}}}, bin,
                                              std::vector<std::vector<double>>{{0.9, 0.1}, {0.3, 0.7}}),
          {"P"});
  Evidence ev;
  ev.hard("C", Value{I{0}});
  const auto r = ve_query<SumProduct>(engine, net, ev, {"P"});
  EXPECT_NEAR(r.factor.table[0], 0.75, 1e-12);
  EXPECT_NEAR(r.factor.table[1], 0.25, 1e-12);
  EXPECT_NEAR(std::exp(r.log_evidence), 0.6, 1e-12);
  const auto mpe = mpe_decode(engine, net, ev);
  EXPECT_EQ(mpe.assignment.at("P"), Value{false});
  EXPECT_NEAR(mpe.value, 0.45, 1e-12);
}

TEST_F(VE, RandomNetworksMatchEnumeration) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 30; ++t) {
    const auto raw = oracle::random_dag(rng, 8);
    const auto ev = oracle::random_evidence(rng, raw, 3);
    const auto truth = oracle::posteriors(raw, ev);
    const auto net = oracle::to_network(raw);
    const auto model = compile_evidence(net, oracle::to_evidence(raw, ev));
    const auto ranges = compute_ranges(engine, model.net, model.hard, 21);
    const auto m = ve_marginals(engine, model.net, ranges, raw.names);
    for (std::size_t v = 0; v < raw.size(); ++v) {
      if (ev.count(v) != 0) {
        continue;
      }
      EXPECT_LE(oracle::linf(m.at(raw.names[v]), truth[v]), 1e-9) << "net " << t << " var " << v;
    }
    const auto r = ve_query<SumProduct>(engine, model.net, ranges, {});
    EXPECT_NEAR(r.log_evidence, std::log(oracle::evidence_probability(raw, ev)), 1e-9);
  }
}

TEST_F(VE, EliminationOrderInvariance) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 10; ++t) {
    const auto raw = oracle::random_dag(rng, 7);
    const auto net = oracle::to_network(raw);
    const auto model = compile_evidence(net, {});
    const auto ranges = compute_ranges(engine, model.net, model.hard, 21);
    const std::vector<VariableId> q{raw.names[0], raw.names[6]};
    std::vector<VariableId> order(raw.names.begin() + 1, raw.names.end() - 1);
    const auto a = ve_query<SumProduct>(engine, model.net, ranges, q, order).factor.table;
    std::shuffle(order.begin(), order.end(), rng);
    const auto b = ve_query<SumProduct>(engine, model.net, ranges, q, order).factor.table;
    EXPECT_LE(oracle::linf(a, b), 1e-12);
  }
}

TEST_F(VE, MpeMatchesBruteForce) {
  std::mt19937_64 rng(5150);
  for (int t = 0; t < 30; ++t) {
    const auto raw = oracle::random_dag(rng, 8);
    const auto ev = oracle::random_evidence(rng, raw, 3);
    const auto [best, top] = oracle::argmax(raw, ev);
    const auto mpe = mpe_decode(engine, oracle::to_network(raw), oracle::to_evidence(raw, ev));
    for (std::size_t v = 0; v < raw.size(); ++v) {
      EXPECT_EQ(mpe.assignment.at(raw.names[v]), oracle::val(best[v])) << "net " << t;
    }
    EXPECT_NEAR(mpe.value, top, 1e-15 * top + 1e-300);
  }
}

TEST_F(VE, MixedSemiringMatchesFilteredEnumeration) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10; ++t) {
    const auto raw = oracle::random_dag(rng, 6);
    auto net = oracle::to_network(raw);
    // logical constraint: v1 != v4
    net.add("neq", std::make_shared<ConstraintScore>(2, [](std::span<const Value> x) { return x[0] != x[1]; }),
            {raw.names[1], raw.names[4]});
    std::vector<std::vector<double>> truth(raw.size(), std::vector<double>(2, 0.0));
    double z = 0.0;
    oracle::for_each_assignment(raw, {}, [&](const std::vector<std::size_t>& x, double p) {
      if (x[1] == x[4]) {
        return;
      }
      z += p;
      for (std::size_t v = 0; v < raw.size(); ++v) {
        truth[v][x[v]] += p;
      }
    });
    const auto model = compile_evidence(net, {});
    const auto ranges = compute_ranges(engine, model.net, model.hard, 21);
    const auto mixed = ve_marginals<MixedSemiring>(engine, model.net, ranges, raw.names);
    for (std::size_t v = 0; v < raw.size(); ++v) {
      for (auto& p : truth[v]) {
        p /= z;
      }
      EXPECT_LE(oracle::linf(mixed.at(raw.names[v]), truth[v]), 1e-9);
    }
  }
}

TEST_F(VE, BooleanSemiringGivesPossibility) {
  Network net;
  net.add("A", make_cat(bin, {1.0, 0.0}));
  net.add("B", std::make_shared<DiscreteCPT>(std::vector<Range>{bin}, bin,
                                              std::vector<std::vector<double>>{{0.5, 0.5}, {0.0, 1.0}}),
          {"A"});
  const auto model = compile_evidence(net, {});
  const auto ranges = compute_ranges(engine, model.net, model.hard, 21);
  const auto r = ve_query<BooleanSemiring>(engine, model.net, ranges, {"A"});
  EXPECT_EQ(r.factor.table, (std::vector<bool>{true, false}));
}

TEST_F(VE, UnsupportedMakeFactorsNamesNode) {
  const auto reg = default_registry().without_impl("make_factors.enumerate/conditional");
  const Engine e{reg, policy_by_name("default")};
  Network net;
  net.add("A", make_cat(bin, {0.5, 0.5}));
  net.add("B", std::make_shared<DiscreteCPT>(std::vector<Range>{bin}, bin,
                                              std::vector<std::vector<double>>{{0.5, 0.5}, {0.2, 0.8}}),
          {"A"});
  try {
    (void)ve_query<SumProduct>(e, net, Evidence{}, {"A"});
    FAIL();
  } catch (const UnsupportedOperation& err) {
    EXPECT_EQ(err.variable(), "B");
  }
}

TEST_F(VE, ZeroProbabilityEvidence) {
  Network net;
  net.add("A", make_cat(bin, {1.0, 0.0}));
  Evidence ev;
  ev.hard("A", Value{I{1}});
  EXPECT_THROW((void)ve_query<SumProduct>(engine, net, ev, {"A"}), DegenerateInput);
}

}  // namespace

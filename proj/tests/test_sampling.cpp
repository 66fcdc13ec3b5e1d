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
#include "opnet/sampling.hpp"
#include "oracle.hpp"

namespace {

using namespace opnet;
using I = std::int64_t;

const Range bin{Value{I{0}}, Value{I{1}}};

class Sampling : public ::testing::Test {
 protected:
  const Engine engine{default_registry(), policy_by_name("default")};
};

// all unobserved marginals within k standard errors (plus a small floor for near-degenerate cells)
void expect_within_se(const ParticleSet& set, const oracle::RawNet& raw, const oracle::HardEvidence& ev, double k) {
  const auto truth = oracle::posteriors(raw, ev);
  for (std::size_t v = 0; v < raw.size(); ++v) {
    if (ev.count(v) != 0) {
      continue;
    }
    const auto range = oracle::int_range(raw.card[v]);
    const auto est = estimate_marginal(set, raw.names[v], range);
    const auto se = marginal_standard_error(set, raw.names[v], range);
    for (std::size_t i = 0; i < range.size(); ++i) {
      EXPECT_LE(std::abs(est[i] - truth[v][i]), k * se[i] + 1e-4) << raw.names[v] << "[" << i << "]";
    }
  }
}

struct Case {
  oracle::RawNet raw;
  oracle::HardEvidence ev;
};

Case small_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Case c{oracle::random_polytree(rng, 6), {}};
  c.ev = {{c.raw.size() - 1, 1}, {2, 0}};
  return c;
}

TEST_F(Sampling, LikelihoodWeightingMatchesEnumeration) {
  const auto c = small_case(7);
  const auto set = lw_infer(engine, oracle::to_network(c.raw), oracle::to_evidence(c.raw, c.ev), 100000, 1);
  EXPECT_EQ(set.attempts, 100000U);
  expect_within_se(set, c.raw, c.ev, 3.5);
}

TEST_F(Sampling, RejectionMatchesEnumeration) {
  const auto c = small_case(7);
  const auto set = rejection_infer(engine, oracle::to_network(c.raw), oracle::to_evidence(c.raw, c.ev), 100000, 2);
  EXPECT_EQ(set.attempts, 100000U);
  EXPECT_LT(set.particles.size(), set.attempts);
  expect_within_se(set, c.raw, c.ev, 3.5);
  const double accept = static_cast<double>(set.particles.size()) / static_cast<double>(set.attempts);
  EXPECT_NEAR(accept, oracle::evidence_probability(c.raw, c.ev), 0.01);
}

TEST_F(Sampling, LookaheadMatchesEnumeration) {
  const auto c = small_case(7);
  const auto set = lookahead_infer(engine, oracle::to_network(c.raw), oracle::to_evidence(c.raw, c.ev), 100000, 3);
  expect_within_se(set, c.raw, c.ev, 3.5);
}

TEST_F(Sampling, EvidenceEstimate) {
  const auto c = small_case(11);
  const auto set = lw_infer(engine, oracle::to_network(c.raw), oracle::to_evidence(c.raw, c.ev), 50000, 4);
  EXPECT_NEAR(std::exp(set.log_normalizer()), oracle::evidence_probability(c.raw, c.ev), 0.01);
}

TEST_F(Sampling, SameSeedSameParticles) {
  const auto c = small_case(3);
  const auto net = oracle::to_network(c.raw);
  const auto ev = oracle::to_evidence(c.raw, c.ev);
  for (auto run : {lw_infer, rejection_infer}) {
    const auto a = run(engine, net, ev, 2000, 42);
    const auto b = run(engine, net, ev, 2000, 42);
    ASSERT_EQ(a.particles.size(), b.particles.size());
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
      EXPECT_EQ(a.particles[i].assignment, b.particles[i].assignment);
      EXPECT_EQ(a.particles[i].log_weight, b.particles[i].log_weight);
    }
    const auto d = run(engine, net, ev, 2000, 43);
    bool differs = d.particles.size() != a.particles.size();
    for (std::size_t i = 0; !differs && i < a.particles.size(); ++i) {
      differs = a.particles[i].assignment != d.particles[i].assignment;
    }
    EXPECT_TRUE(differs);
  }
}

TEST_F(Sampling, LookaheadImprovesEffectiveSampleSize) {
  // a rare observation at the end of a chain: prior samples mostly miss it
  Network net;
  net.add("A", make_cat(bin, {0.95, 0.05}));
  net.add("B", std::make_shared<DiscreteCPT>(std::vector<Range>{bin}, bin,
                                             std::vector<std::vector<double>>{{0.95, 0.05}, {0.1, 0.9}}),
          {"A"});
  net.add("C", std::make_shared<DiscreteCPT>(std::vector<Range>{bin}, bin,
                                             std::vector<std::vector<double>>{{0.99, 0.01}, {0.05, 0.95}}),
          {"B"});
  Evidence ev;
  ev.hard("C", Value{I{1}});
  const auto lw = lw_infer(engine, net, ev, 20000, 5);
  const auto la = lookahead_infer(engine, net, ev, 20000, 5);
  EXPECT_GE(effective_sample_size(la), effective_sample_size(lw));
  EXPECT_TRUE(la.diagnostics.empty());
  const auto a_lw = estimate_marginal(lw, "A", bin);
  const auto a_la = estimate_marginal(la, "A", bin);
  EXPECT_NEAR(a_lw[1], a_la[1], 0.05);
}

TEST_F(Sampling, LookaheadOnLoopyNetworkDegrades) {
  std::mt19937_64 rng(17);
  oracle::RawNet raw;
  do {
    raw = oracle::random_dag(rng, 6);
  } while (is_polytree(oracle::to_network(raw)));
  const oracle::HardEvidence hev{{5, 1}};
  const auto set = lookahead_infer(engine, oracle::to_network(raw), oracle::to_evidence(raw, hev), 50000, 6);
  ASSERT_FALSE(set.diagnostics.empty());
  EXPECT_NE(set.diagnostics.front().find("likelihood weighting"), std::string::npos);
  expect_within_se(set, raw, hev, 4.0);
}

TEST_F(Sampling, RejectionNeedsHardEvidence) {
  Network net;
  net.add("A", make_cat(bin, {0.5, 0.5}));
  Evidence ev;
  ev.soft("A", std::make_shared<SoftScore>(bin, std::vector<double>{0.2, 0.8}));
  EXPECT_THROW((void)rejection_infer(engine, net, ev, 10, 0), InvalidArgument);
}

TEST_F(Sampling, ContinuousMeanWithinStandardError) {
  // X ~ N(0,1), Y | X ~ N(X, 1), Y = 1: E[X | Y] = 0.5
  Network net;
  net.add("X", make_normal(0.0, 1.0));
  net.add("Y", std::make_shared<LinearGaussian>(LinearGaussian::Params{{1.0}, 0.0, 1.0}), {"X"});
  Evidence ev;
  ev.hard("Y", Value{1.0});
  const auto set = lw_infer(engine, net, ev, 100000, 8);
  const auto [mean, se] = estimate_mean(set, "X");
  EXPECT_LE(std::abs(mean - 0.5), 3.5 * se);
}

}  // namespace

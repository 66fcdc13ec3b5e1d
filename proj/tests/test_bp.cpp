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

#include <numeric>
#include <random>

#include "opnet/bp.hpp"
#include "opnet/opnet.hpp"
#include "opnet/ve.hpp"
#include "oracle.hpp"

namespace {

using namespace opnet;
using I = std::int64_t;

const Range bin{Value{I{0}}, Value{I{1}}};

SFuncPtr cpt(std::vector<Range> pr, std::vector<std::vector<double>> rows) {
  return std::make_shared<DiscreteCPT>(std::move(pr), bin, rows);
}

class BP : public ::testing::Test {
 protected:
  const Engine engine{default_registry(), policy_by_name("default")};
};

TEST(ComputeLambda, Fusion) {
  EXPECT_EQ(compute_lambda(3, {}), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(compute_lambda(2, {{0.0, 1.0}}), (std::vector<double>{0.0, 1.0}));
  const auto f = compute_lambda(2, {{0.5, 1.0}, {0.4, 0.1}});
  EXPECT_NEAR(f[0], 0.2, 1e-15);
  EXPECT_NEAR(f[1], 0.1, 1e-15);
}

TEST_F(BP, ChainPosterior) {
  Network net;
  net.add("P", make_flip(0.5));
  net.add("C", cpt({{Value{false}, Value{true}}}, {{0.9, 0.1}, {0.3, 0.7}}), {"P"});
  Evidence ev;
  ev.hard("C", Value{I{0}});
  const auto r = bp_infer(engine, net, ev);
  EXPECT_NEAR(r.beliefs.at("P")[0], 0.75, 1e-12);
  EXPECT_NEAR(r.beliefs.at("P")[1], 0.25, 1e-12);
  EXPECT_FALSE(r.loopy);
  EXPECT_EQ(r.coverage.at("P").status, CoverageStatus::full);
}

TEST_F(BP, ThreeNodePolytreeMatchesVE) {
  // A -> C <- B with evidence on C: the π messages to C and the λ messages back both matter
  Network net;
  net.add("A", make_cat(bin, {0.3, 0.7}));
  net.add("B", make_cat(bin, {0.6, 0.4}));
  net.add("C", cpt({bin, bin}, {{0.9, 0.1}, {0.5, 0.5}, {0.2, 0.8}, {0.05, 0.95}}), {"A", "B"});
  Evidence ev;
  ev.hard("C", Value{I{1}});
  const auto r = bp_infer(engine, net, ev);
  const auto model = compile_evidence(net, ev);
  const auto ranges = compute_ranges(engine, model.net, model.hard, 21);
  const auto v = ve_marginals(engine, model.net, ranges, {"A", "B"});
  EXPECT_LE(oracle::linf(r.beliefs.at("A"), v.at("A")), 1e-9);
  EXPECT_LE(oracle::linf(r.beliefs.at("B"), v.at("B")), 1e-9);
}

TEST_F(BP, RandomPolytreesMatchEnumeration) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 20; ++t) {
    const auto raw = oracle::random_polytree(rng, 8);
    const auto ev = oracle::random_evidence(rng, raw, 3);
    const auto truth = oracle::posteriors(raw, ev);
    const auto r = bp_infer(engine, oracle::to_network(raw), oracle::to_evidence(raw, ev));
    ASSERT_FALSE(r.loopy);
    for (std::size_t v = 0; v < raw.size(); ++v) {
      const auto& b = r.beliefs.at(raw.names[v]);
      EXPECT_NEAR(std::accumulate(b.begin(), b.end(), 0.0), 1.0, 1e-9);
      if (ev.count(v) == 0) {
        EXPECT_LE(oracle::linf(b, truth[v]), 1e-9) << "net " << t << " var " << raw.names[v];
      }
    }
  }
}

Network four_cycle() {
  // A -> B -> D, A -> C -> D
  Network net;
  net.add("A", make_cat(bin, {0.4, 0.6}));
  net.add("B", cpt({bin}, {{0.8, 0.2}, {0.3, 0.7}}), {"A"});
  net.add("C", cpt({bin}, {{0.6, 0.4}, {0.1, 0.9}}), {"A"});
  net.add("D", cpt({bin, bin}, {{0.9, 0.1}, {0.4, 0.6}, {0.5, 0.5}, {0.2, 0.8}}), {"B", "C"});
  return net;
}

TEST_F(BP, LoopyFourCycleConverges) {
  const auto net = four_cycle();
  Evidence ev;
  ev.hard("D", Value{I{1}});
  const auto r = bp_infer(engine, net, ev);
  EXPECT_TRUE(r.loopy);
  EXPECT_TRUE(r.converged);
  const auto model = compile_evidence(net, ev);
  const auto ranges = compute_ranges(engine, model.net, model.hard, 21);
  const auto v = ve_marginals(engine, model.net, ranges, {"A", "B", "C"});
  for (const auto* id : {"A", "B", "C"}) {
    EXPECT_LE(oracle::linf(r.beliefs.at(id), v.at(id)), 0.05) << id;
  }
  // one more iteration changes nothing beyond the tolerance
  BPOptions more;
  more.max_iterations = r.iterations + 1;
  const auto again = bp_infer(engine, net, ev, more);
  for (const auto* id : {"A", "B", "C"}) {
    EXPECT_LE(oracle::linf(r.beliefs.at(id), again.beliefs.at(id)), 1e-6) << id;
  }
}

TEST_F(BP, DetRootIsPriorOnly) {
  Network net;
  net.add("R", std::make_shared<Det>(std::vector<ValueSpace>{}, ValueSpace::integer,
                                     [](std::span<const Value>) { return Value{I{1}}; }));
  net.add("C", cpt({bin}, {{0.9, 0.1}, {0.2, 0.8}}), {"R"});
  Evidence ev;
  ev.hard("C", Value{I{0}});
  const auto r = bp_infer(engine, net, ev);
  const auto& cov = r.coverage.at("R");
  EXPECT_EQ(cov.tag, LayerTag::pi_only);
  EXPECT_EQ(cov.status, CoverageStatus::prior_only);
  ASSERT_FALSE(cov.reasons.empty());
  EXPECT_EQ(cov.reasons.front(), "no λ");
  EXPECT_NE(std::find(cov.reasons.begin(), cov.reasons.end(), "send_lambda unsupported"), cov.reasons.end());
}

// A CPT whose compute_pi is withheld: only its λ side is usable.
class LambdaCpt final : public SFunc {
 public:
  explicit LambdaCpt(SFuncPtr inner) : SFunc(inner->signature()), inner_{std::move(inner)} {}
  std::string_view kind() const override { return "lambda_cpt"; }
  const SFuncPtr& inner() const { return inner_; }

 private:
  SFuncPtr inner_;
};

Registry with_lambda_cpt() {
  auto ext = default_registry().extend();
  ext.register_kind("lambda_cpt", "sfunc");
  ext.register_impl<ops::SendLambda>(
      "send_lambda.lambda_cpt", "lambda_cpt",
      [](const Invocation& inv, const SFunc& sf, const LambdaMessage& lam, const Range& range,
         std::span<const Range> pr, std::span<const PiMessage> pis, std::size_t t) {
        return send_lambda(inv.engine, *dynamic_cast<const LambdaCpt&>(sf).inner(), lam, range, pr, pis, t);
      });
  ext.register_impl<ops::Support>("support.lambda_cpt", "lambda_cpt",
                                  [](const Invocation&, const SFunc&, std::span<const Range>, std::size_t,
                                     const Range&) { return bin; });
  ext.freeze();
  return ext;
}

TEST_F(BP, LambdaOnlyLeafStillInformsParents) {
  const auto reg = with_lambda_cpt();
  const Engine e{reg, policy_by_name("default")};
  const auto leaf_cpt = cpt({bin}, {{0.85, 0.15}, {0.25, 0.75}});
  Network net;
  net.add("A", make_cat(bin, {0.5, 0.5}));
  net.add("B", cpt({bin}, {{0.7, 0.3}, {0.2, 0.8}}), {"A"});
  net.add("L", std::make_shared<LambdaCpt>(leaf_cpt), {"B"});
  Network plain;
  plain.add("A", make_cat(bin, {0.5, 0.5}));
  plain.add("B", cpt({bin}, {{0.7, 0.3}, {0.2, 0.8}}), {"A"});
  plain.add("L", leaf_cpt, {"B"});
  Evidence ev;
  ev.hard("L", Value{I{1}});
  const auto r = bp_infer(e, net, ev);
  EXPECT_EQ(r.coverage.at("L").tag, LayerTag::lambda_only);
  const auto v = ve_marginals(engine, compile_evidence(plain, ev).net,
                              compute_ranges(engine, compile_evidence(plain, ev).net, {{"L", Value{I{1}}}}, 21),
                              {"A", "B"});
  EXPECT_LE(oracle::linf(r.beliefs.at("A"), v.at("A")), 1e-9);
  EXPECT_LE(oracle::linf(r.beliefs.at("B"), v.at("B")), 1e-9);
}

TEST_F(BP, AddingImplsNeverShrinksCoverage) {
  Network net;
  net.add("R", std::make_shared<Det>(std::vector<ValueSpace>{}, ValueSpace::integer,
                                     [](std::span<const Value>) { return Value{I{0}}; }));
  net.add("A", cpt({bin}, {{0.6, 0.4}, {0.1, 0.9}}), {"R"});
  net.add("B", cpt({bin}, {{0.7, 0.3}, {0.2, 0.8}}), {"A"});
  Evidence ev;
  ev.hard("B", Value{I{0}});
  const auto covered = [&](const Registry& reg) {
    const Engine e{reg, policy_by_name("default")};
    std::set<VariableId> out;
    for (const auto& [id, c] : bp_infer(e, net, ev).coverage) {
      if (c.status == CoverageStatus::full) {
        out.insert(id);
      }
    }
    return out;
  };
  const auto full = covered(default_registry());
  for (const auto* impl : {"send_lambda.conditional", "compute_pi.conditional", "compute_pi.enumerate/det"}) {
    const auto smaller = covered(default_registry().without_impl(impl));
    EXPECT_TRUE(std::includes(full.begin(), full.end(), smaller.begin(), smaller.end())) << impl;
  }
}

TEST_F(BP, MissingComputePiLeavesVariablesUncovered) {
  const auto reg = default_registry().without_impl("compute_pi.conditional");
  const Engine e{reg, policy_by_name("default")};
  Network net;
  net.add("A", make_cat(bin, {0.5, 0.5}));
  net.add("B", cpt({bin}, {{0.7, 0.3}, {0.2, 0.8}}), {"A"});
  const auto r = bp_infer(e, net, Evidence{});
  EXPECT_EQ(r.coverage.at("B").status, CoverageStatus::uncovered);
  EXPECT_EQ(r.coverage.at("B").reasons.front(), "compute_pi unsupported");
  EXPECT_EQ(r.coverage.at("A").status, CoverageStatus::full);
}

TEST_F(BP, MultiParentScoreIsRejected) {
  Network net;
  net.add("A", make_cat(bin, {0.5, 0.5}));
  net.add("B", make_cat(bin, {0.5, 0.5}));
  net.add("K", std::make_shared<ConstraintScore>(2, [](std::span<const Value> x) { return x[0] == x[1]; }),
          {"A", "B"});
  EXPECT_THROW((void)bp_infer(engine, net, Evidence{}), NetworkError);
}

TEST_F(BP, ContinuousChainCloseToClosedForm) {
  // X ~ N(0,1), Y | X ~ N(X, 1), Y = 1 observed: X | Y ~ N(0.5, 0.5)
  Network net;
  net.add("X", make_normal(0.0, 1.0));
  net.add("Y", std::make_shared<LinearGaussian>(LinearGaussian::Params{{1.0}, 0.0, 1.0}), {"X"});
  Evidence ev;
  ev.hard("Y", Value{1.0});
  BPOptions opt;
  opt.target_size = 101;
  const auto r = bp_infer(engine, net, ev, opt);
  double mean = 0.0;
  const auto& range = r.ranges.at("X");
  for (std::size_t i = 0; i < range.size(); ++i) {
    mean += r.beliefs.at("X")[i] * to_double(range[i]);
  }
  EXPECT_NEAR(mean, 0.5, 0.02);
}

}  // namespace

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

#include "opnet/network.hpp"
#include "opnet/opnet.hpp"
#include "oracle.hpp"

namespace {

using namespace opnet;
using I = std::int64_t;

const Range bin{Value{I{0}}, Value{I{1}}};

SFuncPtr cpt1(std::vector<std::vector<double>> rows) {
  return std::make_shared<DiscreteCPT>(std::vector<Range>{bin}, bin, rows);
}

bool mentions(const std::vector<Diagnostic>& ds, const std::string& var, const std::string& word) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) {
    return d.variable == var && d.message.find(word) != std::string::npos;
  });
}

TEST(Validate, EmptyIsOk) { EXPECT_TRUE(validate(Network{}).empty()); }

TEST(Validate, SelfLoop) {
  Network net;
  net.add("A", cpt1({{0.5, 0.5}, {0.5, 0.5}}), {"A"});
  EXPECT_TRUE(mentions(validate(net), "A", "cycle"));
  EXPECT_THROW(require_valid(net), NetworkError);
  EXPECT_THROW((void)topological_order(net), NetworkError);
}

TEST(Validate, ArityAndDangling) {
  Network net;
  net.add("P", make_cat(bin, {0.5, 0.5}));
  net.add("C", std::make_shared<DiscreteCPT>(std::vector<Range>{bin, bin}, bin,
                                              std::vector<std::vector<double>>(4, {0.5, 0.5})),
          {"P"});
  net.add("D", cpt1({{0.5, 0.5}, {0.5, 0.5}}), {"missing"});
  const auto ds = validate(net);
  EXPECT_TRUE(mentions(ds, "C", "arity") || mentions(ds, "C", "parent"));
  EXPECT_TRUE(mentions(ds, "D", "missing"));
}

TEST(Topology, Orders) {
  Network chain;
  chain.add("C", cpt1({{1, 0}, {0, 1}}), {"B"});
  chain.add("B", cpt1({{1, 0}, {0, 1}}), {"A"});
  chain.add("A", make_cat(bin, {0.5, 0.5}));
  EXPECT_EQ(topological_order(chain), (std::vector<VariableId>{"A", "B", "C"}));

  Network diamond;
  diamond.add("D", std::make_shared<DiscreteCPT>(std::vector<Range>{bin, bin}, bin,
                                                  std::vector<std::vector<double>>(4, {0.5, 0.5})),
              {"B", "C"});
  diamond.add("C", cpt1({{1, 0}, {0, 1}}), {"A"});
  diamond.add("B", cpt1({{1, 0}, {0, 1}}), {"A"});
  diamond.add("A", make_cat(bin, {0.5, 0.5}));
  const auto order = topological_order(diamond);
  EXPECT_EQ(order.front(), "A");
  EXPECT_EQ(order.back(), "D");

  Network disc;
  disc.add("B", make_flip(0.5));
  disc.add("A", make_flip(0.5));
  EXPECT_EQ(topological_order(disc), (std::vector<VariableId>{"A", "B"}));
}

TEST(Topology, RandomOrdersRespectEdges) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto raw = oracle::random_dag(rng, 8);
    const auto net = oracle::to_network(raw);
    const auto order = topological_order(net);
    ASSERT_EQ(order.size(), net.size());
    std::map<VariableId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) {
      pos[order[i]] = i;
    }
    for (const auto& n : net.nodes()) {
      for (const auto& p : n.parents) {
        EXPECT_LT(pos.at(p), pos.at(n.id));
      }
    }
  }
}

TEST(Layers, AllDiscreteIsBidirectional) {
  std::mt19937_64 rng(2);
  const auto net = oracle::to_network(oracle::random_dag(rng, 6));
  for (const auto& [id, li] : classify_layers(net, default_registry())) {
    EXPECT_EQ(li.tag, LayerTag::bidirectional) << id;
  }
}

TEST(Layers, DetRootIsPiOnly) {
  Network net;
  net.add("R", make_det({}, ValueSpace::integer, [](std::span<const Value>) { return Value{I{1}}; }));
  net.add("C", cpt1({{0.9, 0.1}, {0.2, 0.8}}), {"R"});
  const auto layers = classify_layers(net, default_registry());
  EXPECT_EQ(layers.at("R").tag, LayerTag::pi_only);
  EXPECT_EQ(layers.at("R").lambda_reason, "send_lambda unsupported");
  EXPECT_EQ(layers.at("C").tag, LayerTag::bidirectional);
}

class LambdaLeaf final : public SFunc {
 public:
  LambdaLeaf() : SFunc(SFuncSignature{{ValueSpace::integer}, ValueSpace::integer, ValueSpace::none, false}) {}
  std::string_view kind() const override { return "lambda_leaf"; }
};

TEST(Layers, LambdaOnlyLeaf) {
  auto ext = default_registry().extend();
  ext.register_kind("lambda_leaf", "sfunc");
  ext.register_impl<ops::SendLambda>("send_lambda.leaf", "lambda_leaf",
                                     [](const Invocation&, const SFunc&, const LambdaMessage&, const Range&,
                                        std::span<const Range> pr, std::span<const PiMessage>, std::size_t t)
                                         -> LambdaMessage {
                                       return std::make_shared<SoftScore>(pr[t], std::vector<double>(pr[t].size(), 1.0));
                                     });
  ext.freeze();
  Network net;
  net.add("A", make_cat(bin, {0.5, 0.5}));
  net.add("B", cpt1({{0.9, 0.1}, {0.2, 0.8}}), {"A"});
  net.add("L", std::make_shared<LambdaLeaf>(), {"B"});
  const auto layers = classify_layers(net, ext);
  EXPECT_EQ(layers.at("L").tag, LayerTag::lambda_only);
  EXPECT_TRUE(layers.at("A").pi);
  EXPECT_TRUE(layers.at("B").pi);
}

TEST(Layers, RemovingImplsNeverAddsCapability) {
  std::mt19937_64 rng(3);
  Network net = oracle::to_network(oracle::random_dag(rng, 5));
  net.add("S", make_normal(0.0, 1.0));
  net.add("Y", std::make_shared<LinearGaussian>(LinearGaussian::Params{{1.0}, 0.0, 1.0}), {"S"});
  const auto& reg = default_registry();
  const auto before = classify_layers(net, reg);
  for (const auto* impl : {"send_lambda.conditional", "compute_pi.conditional", "compute_pi.dist",
                           "compute_pi.linear_gaussian.closed_form", "send_lambda.enumerate/dist"}) {
    const auto smaller = reg.without_impl(impl);
    for (const auto& [id, li] : classify_layers(net, smaller)) {
      EXPECT_LE(li.pi, before.at(id).pi) << impl << " " << id;
      EXPECT_LE(li.lambda, before.at(id).lambda) << impl << " " << id;
    }
  }
}

TEST(Evidence, CompilesToScoreChildren) {
  Network net;
  net.add("A", make_cat(bin, {0.5, 0.5}));
  net.add("B", cpt1({{0.9, 0.1}, {0.3, 0.7}}), {"A"});
  Evidence ev;
  ev.hard("B", Value{I{0}});
  ev.soft("A", make_soft_score(bin, {1.0, 2.0}));
  const auto model = compile_evidence(net, ev);
  EXPECT_TRUE(model.net.contains(evidence_node_id("B")));
  EXPECT_TRUE(model.net.node(evidence_node_id("A")).is_score());
  EXPECT_EQ(model.hard.at("B"), Value{I{0}});
  Evidence bad;
  bad.hard("Z", Value{I{0}});
  EXPECT_THROW((void)compile_evidence(net, bad), NetworkError);
  Evidence wrong_space;
  wrong_space.hard("B", Value{std::string("x")});
  EXPECT_THROW((void)compile_evidence(net, wrong_space), Error);
}

TEST(Sample, ConstantsAndForcedChains) {
  const Engine engine{default_registry(), policy_by_name("default")};
  Rng rng = substream(0, 0);
  Network consts;
  consts.add("A", make_constant(Value{I{3}}));
  consts.add("B", make_constant(Value{std::string("x")}));
  const auto s = network_sample(engine, consts, {}, rng);
  EXPECT_EQ(s.at("A"), Value{I{3}});
  EXPECT_EQ(s.at("B"), Value{std::string("x")});

  Network forced;
  forced.add("F", make_flip(1.0));
  forced.add("C", std::make_shared<DiscreteCPT>(std::vector<Range>{{Value{false}, Value{true}}}, bin,
                                                 std::vector<std::vector<double>>{{1.0, 0.0}, {0.0, 1.0}}),
             {"F"});
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(network_sample(engine, forced, {}, rng).at("C"), Value{I{1}});
  }
}

TEST(Sample, PlaceholdersNeedValues) {
  const Engine engine{default_registry(), policy_by_name("default")};
  Rng rng = substream(0, 0);
  Network net;
  net.add_placeholder("X");
  net.add("Y", cpt1({{0.9, 0.1}, {0.3, 0.7}}), {"X"});
  EXPECT_THROW((void)network_sample(engine, net, {}, rng), NetworkError);
  EXPECT_NO_THROW((void)network_sample(engine, net, {{"X", Value{I{1}}}}, rng));
}

TEST(Sample, MarginalsMatchEnumeration) {
  const Engine engine{default_registry(), policy_by_name("default")};
  std::mt19937_64 gen(4);
  const auto raw = oracle::random_dag(gen, 5);
  const auto net = oracle::to_network(raw);
  const auto truth = oracle::posteriors(raw, {});
  const std::size_t n = 100000;
  std::vector<std::vector<double>> counts(raw.size(), std::vector<double>(2, 0.0));
  Rng rng = substream(99, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = network_sample(engine, net, {}, rng);
    for (std::size_t v = 0; v < raw.size(); ++v) {
      counts[v][static_cast<std::size_t>(std::get<I>(s.at(raw.names[v])))] += 1.0;
    }
  }
  for (std::size_t v = 0; v < raw.size(); ++v) {
    for (std::size_t x = 0; x < 2; ++x) {
      const double p = truth[v][x];
      EXPECT_NEAR(counts[v][x] / double(n), p, 3.0 * std::sqrt(p * (1 - p) / double(n))) << raw.names[v];
    }
  }
}

}  // namespace

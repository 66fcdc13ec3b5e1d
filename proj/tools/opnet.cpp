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


// opnet: run inference or parameter learning on a JSON model file.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "opnet/job.hpp"
#include "opnet/opnet.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw opnet::InvalidArgument("cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const opnet::json& doc, const std::string& path) {
  const auto text = doc.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw opnet::InvalidArgument("cannot write '" + path + "'");
  }
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operation-dispatched probabilistic inference"};
  app.require_subcommand(1);

  std::string model_path;
  std::string output_path;
  opnet::JobOptions job;
  auto* infer = app.add_subcommand("infer", "Compute marginals of the query variables");
  infer->add_option("--model", model_path, "Model file (JSON)")->required();
  infer->add_option("--algorithm", job.algorithm, "Inference algorithm")
      ->check(CLI::IsMember({"ve", "bp", "rejection", "lw", "lookahead", "lazy"}));
  infer->add_option("--semiring", job.semiring, "Semiring for ve")
      ->check(CLI::IsMember({"sum_product", "max_product", "boolean", "mixed"}));
  infer->add_option("--samples", job.samples, "Particles for sampling algorithms");
  infer->add_option("--seed", job.seed, "Random seed");
  infer->add_option("--policy", job.policy, "Implementation-selection policy")
      ->check(CLI::IsMember({"default", "prefer_lazy", "prefer_exact"}));
  infer->add_option("--tolerance", job.tolerance, "Convergence tolerance (bp, lazy)");
  infer->add_option("--max-iterations", job.max_iterations, "BP iteration limit");
  infer->add_option("--damping", job.damping, "BP damping on loopy graphs");
  infer->add_option("--base", job.base, "Base algorithm for lazy")->check(CLI::IsMember({"bp", "ve"}));
  infer->add_option("--max-rounds", job.max_rounds, "Refinement round limit");
  infer->add_option("--target-size", job.target_size, "Support size for continuous variables");
  infer->add_option("--output", output_path, "Result file (default: standard output)");

  std::string data_path;
  opnet::LearnOptions learn_opts;
  auto* learn = app.add_subcommand("learn", "Fit CPT parameters with EM");
  learn->add_option("--model", model_path, "Model file (JSON); probabilities may be omitted")->required();
  learn->add_option("--data", data_path, "Records (JSON array of objects)")->required();
  learn->add_option("--rounds", learn_opts.rounds, "EM rounds");
  learn->add_option("--smoothing", learn_opts.smoothing, "Pseudo-count added to every cell");
  learn->add_option("--tolerance", learn_opts.tolerance, "Stop when the log-likelihood gain is below this");
  learn->add_option("--policy", learn_opts.policy, "Implementation-selection policy")
      ->check(CLI::IsMember({"default", "prefer_lazy", "prefer_exact"}));
  learn->add_option("--output", output_path, "Result file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    std::cerr << opnet::json{{"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }

  try {
    const auto& registry = opnet::default_registry();
    const opnet::Engine engine{registry, opnet::policy_by_name("default")};
    if (infer->parsed()) {
      const auto spec = opnet::parse_spec(engine, read_file(model_path));
      write_output(opnet::execute_job(registry, spec, job), output_path);
    } else {
      opnet::ParseOptions po;
      po.allow_missing_parameters = true;
      const auto spec = opnet::parse_spec(engine, read_file(model_path), po);
      opnet::json data;
      try {
        data = opnet::json::parse(read_file(data_path));
      } catch (const opnet::json::parse_error& e) {
        throw opnet::SpecError("", std::string("invalid JSON in data file: ") + e.what());
      }
      const auto records = opnet::parse_dataset(data, spec.network);
      write_output(opnet::execute_learn(registry, spec, records, learn_opts), output_path);
    }
  } catch (const std::exception& e) {
    std::cerr << opnet::error_document(e).dump() << "\n";
    return 1;
  }
  return 0;
}

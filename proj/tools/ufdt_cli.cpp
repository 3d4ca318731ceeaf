// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the staged pipeline.
#include "ufdt/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  namespace pl = ufdt::pipeline;
  CLI::App app{"Ultrafast Doppler tomography pipeline"};
  std::string config;
  std::string stage_flag;
  std::string stage_pos;
  int workers = 1;
  std::string out;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "pipeline config (JSON)")->required();
  app.add_option("--stage", stage_flag, "phantom|scan|reconstruct|quantify|dceus|report|all");
  app.add_option("stage_name", stage_pos, "stage, as an alternative to --stage");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed-override", seed, "replaces rng_seed from the config");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pl::exit_code::config;
  }
  if (!stage_flag.empty() && !stage_pos.empty() && stage_flag != stage_pos) {
    std::cerr << "error: conflicting stages '" << stage_flag << "' and '" << stage_pos << "'\n";
    return pl::exit_code::config;
  }
  const std::string name = !stage_flag.empty() ? stage_flag : (!stage_pos.empty() ? stage_pos : "all");

  pl::Stage stage;
  try {
    stage = pl::parse_stage(name);
  } catch (const pl::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code();
  }
  pl::RunOptions options;
  options.workers = workers;
  if (*out_opt) options.output_dir = out;
  if (*seed_opt) options.seed_override = seed;
  return pl::run_main(stage, config, options, std::cout, std::cerr);
}

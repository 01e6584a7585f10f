#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nlform/config.hpp"
#include "nlform/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nlform: truncated non-local forms, measures and jump chains"};
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--out", out_path, "record output path ('-' for stdout)");
  app.add_option("--threads", threads, "worker threads for block-parallel commands")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read config: " << config_path << '\n';
    return nlform::cli::kIo;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  const nlform::cli::ParseOutcome parsed = nlform::cli::parse_config(buf.str());
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors)
      std::cerr << config_path << ":" << e.line << ": " << e.message << '\n';
    return nlform::cli::kInvalidInput;
  }

  nlform::cli::RunOverrides ov;
  if (seed_set) ov.seed = seed;
  if (!out_path.empty()) ov.out = out_path;
  ov.threads = threads;
  return nlform::cli::run(parsed.config, ov, std::cerr);
}

// antispoof: synthetic replay corpus, LCNN training and Gaussian scoring.
//
//   antispoof <command> --config run.cfg [--reduced] [--mode both] [--seed 3]
//
// Commands: synth featurize train codes backend score eval all

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "antispoof/errors.h"
#include "antispoof/pipeline.h"

namespace {

const std::map<std::string_view, std::string> kDescriptions = {
    {"synth", "Generate the synthetic genuine/replayed corpus and manifest"},
    {"featurize", "Write log spectrograms for every utterance"},
    {"train", "Train the network for each configured mode"},
    {"codes", "Export per-utterance codes from trained checkpoints"},
    {"backend", "Fit the genuine and spoofed Gaussians on training codes"},
    {"score", "Write LLR scores for the dev and eval subsets"},
    {"eval", "Compute EERs, DET curves and the run report"},
    {"all", "Run every stage in order"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replay spoofing detection pipeline"};
  app.require_subcommand(1, 1);

  std::string config_path;
  bool reduced = false;
  std::string mode;
  std::uint64_t seed = 0;
  bool print_config = false;

  for (std::string_view name : antispoof::kCommands) {
    CLI::App* sub = app.add_subcommand(std::string(name), kDescriptions.at(name));
    sub->add_option("--config", config_path, "Configuration file (key = value lines)");
    sub->add_flag("--reduced", reduced, "100x129 input, quarter widths");
    sub->add_option("--mode", mode, "multitask, baseline or both");
    sub->add_option("--seed", seed, "Overrides the corpus and training seeds");
    sub->add_flag("--print-config", print_config, "Print the effective configuration first");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  antispoof::PipelineConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = antispoof::parse_config(config_path);
    }
    if (app.get_subcommands().front()->count("--seed")) {
      cfg.seed = seed;
      cfg.train.seed = seed;
    }
    if (!mode.empty()) cfg.modes = antispoof::parse_modes(mode);
    if (reduced) antispoof::apply_reduced(cfg);
    // Re-validate the combined settings.
    cfg = antispoof::parse_config_text(cfg.echo(), "<effective config>");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (print_config) std::cout << cfg.echo();
  return antispoof::run(command, cfg, std::cerr);
}

#ifndef ANTISPOOF_PIPELINE_H_
#define ANTISPOOF_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "antispoof/channel_sim.h"
#include "antispoof/dsp.h"
#include "antispoof/model.h"
#include "antispoof/trainer.h"

namespace antispoof {

struct PipelineConfig {
  std::filesystem::path root = "run";
  std::uint64_t seed = 1;
  CorpusConfig corpus;
  TrainConfig train;
  ArchConfig arch;
  StftOptions stft;
  bool reduced = false;
  std::vector<TrainMode> modes = {TrainMode::kMultitask};

  // Artifact directories; all live under root.
  std::filesystem::path corpus_dir() const { return root / "corpus"; }
  std::filesystem::path features_dir() const { return root / "features"; }
  std::filesystem::path checkpoints_dir() const { return root / "checkpoints"; }
  std::filesystem::path codes_dir() const { return root / "codes"; }
  std::filesystem::path scores_dir() const { return root / "scores"; }
  std::filesystem::path reports_dir() const { return root / "reports"; }

  std::filesystem::path manifest_path() const { return corpus_dir() / "manifest.csv"; }
  std::filesystem::path checkpoint_path(TrainMode m) const;
  std::filesystem::path backend_path(TrainMode m) const;
  std::filesystem::path train_log_path(TrainMode m) const;
  std::filesystem::path dev_eer_log_path(TrainMode m) const;
  std::filesystem::path codes_path(TrainMode m) const;
  std::filesystem::path scores_path(TrainMode m, Subset s) const;
  std::filesystem::path report_path() const { return reports_dir() / "report.txt"; }

  // Every key as `key = value`, in a fixed order; parse_config accepts it back.
  std::string echo() const;
};

// 100 frames x 129 bins (256-point FFT, 256-sample frames), widths / 4.
void apply_reduced(PipelineConfig& cfg);

// Parses a "mode" value: multitask, baseline or both.
std::vector<TrainMode> parse_modes(std::string_view value);

// Flat `key = value` lines; '#' starts a comment. Unknown keys, malformed
// lines and invalid values throw ConfigError naming the line.
PipelineConfig parse_config_text(std::string_view text, const std::string& source = "<config>");
PipelineConfig parse_config(const std::filesystem::path& path);

inline constexpr std::string_view kCommands[] = {"synth", "featurize", "train", "codes",
                                                 "backend", "score",     "eval",  "all"};

// Runs one stage (or `all`). Returns 0 on success; on failure writes a
// stage-named diagnostic to `log` and returns nonzero.
int run(std::string_view command, const PipelineConfig& cfg, std::ostream& log);

}  // namespace antispoof

#endif  // ANTISPOOF_PIPELINE_H_

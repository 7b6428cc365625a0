#ifndef ANTISPOOF_MANIFEST_H_
#define ANTISPOOF_MANIFEST_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace antispoof {

enum class Subset { kTrain, kDev, kEval };
enum class SpoofLabel { kGenuine, kSpoofed };

std::string_view subset_name(Subset s);
Subset parse_subset(std::string_view s);
std::string_view spoof_name(SpoofLabel s);
SpoofLabel parse_spoof(std::string_view s);

// Genuine-node indices: the last output of each noise-classification head.
inline constexpr int kGenuineEnvLabel = 4;
inline constexpr int kGenuinePlaybackLabel = 8;
inline constexpr int kGenuineRecorderLabel = 7;

struct LabeledUtterance {
  std::string id;
  std::string path;  // relative to the corpus directory
  Subset subset = Subset::kTrain;
  SpoofLabel spoof = SpoofLabel::kGenuine;
  int env_label = kGenuineEnvLabel;
  int playback_label = kGenuinePlaybackLabel;
  int recorder_label = kGenuineRecorderLabel;

  bool is_genuine() const { return spoof == SpoofLabel::kGenuine; }
  // Throws LabelError if the genuine/spoofed label pattern is inconsistent.
  void validate() const;
  bool operator==(const LabeledUtterance&) const = default;
};

inline constexpr std::string_view kManifestHeader =
    "id,path,subset,spoof,env_label,playback_label,recorder_label";

void write_manifest(const std::filesystem::path& path, const std::vector<LabeledUtterance>& rows);
std::vector<LabeledUtterance> read_manifest(const std::filesystem::path& path);

}  // namespace antispoof

#endif  // ANTISPOOF_MANIFEST_H_

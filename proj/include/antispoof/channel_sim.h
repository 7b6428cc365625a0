#ifndef ANTISPOOF_CHANNEL_SIM_H_
#define ANTISPOOF_CHANNEL_SIM_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "antispoof/manifest.h"
#include "antispoof/wav.h"

namespace antispoof {

enum class ChannelKind { kInternalNoise, kPlayback, kEnvironment, kRecorder };

std::string_view kind_name(ChannelKind kind);
// internal_noise: 1, playback: 8, environment: 4, recorder: 7.
int class_count(ChannelKind kind);
// Device / room names, in label order.
std::span<const std::string_view> class_names(ChannelKind kind);

struct ImpulseResponse {
  std::vector<double> taps;
  ChannelKind kind = ChannelKind::kInternalNoise;
  int class_id = 0;
  std::uint64_t instance_seed = 0;
};

// Maximum tap counts per family.
inline constexpr std::size_t kMaxInternalTaps = 16;
inline constexpr std::size_t kMaxDeviceTaps = 128;
inline constexpr std::size_t kMaxEnvironmentTaps = 1600;

inline constexpr double kPeakLevel = 0.9;

// Per-class -3 dB low-pass cutoff range of a playback device, in Hz.
struct FrequencyRange {
  double lo;
  double hi;
};
FrequencyRange playback_cutoff_range(int class_id);

// Harmonic source with drifting f0, formant envelope, syllabic amplitude
// modulation and low-level broadband noise. duration_s must lie in [1, 10].
Waveform synth_source(std::uint64_t seed, double duration_s, int sample_rate = kDefaultSampleRate);

// Deterministic in (kind, class_id, instance_seed). Throws std::invalid_argument
// for an invalid class_id.
ImpulseResponse make_ir(ChannelKind kind, int class_id, std::uint64_t instance_seed);

// Full linear convolution, length x.size() + h.size() - 1 (FFT overlap-add).
std::vector<double> convolve(std::span<const double> x, std::span<const double> h);
Waveform convolve(const Waveform& x, const ImpulseResponse& h);

Waveform peak_normalize(Waveform w, double peak = kPeakLevel);

// y_genuine = x * n, peak-normalized.
Waveform make_genuine(const Waveform& x, const ImpulseResponse& n);
// y_spoofed = y_genuine * P * E * R, peak-normalized.
Waveform make_spoofed(const Waveform& y_genuine, const ImpulseResponse& playback,
                      const ImpulseResponse& environment, const ImpulseResponse& recorder);

struct CorpusConfig {
  int n_train_genuine = 150;
  int n_train_spoofed = 150;
  int n_dev_genuine = 50;
  int n_dev_spoofed = 50;
  int n_eval_genuine = 60;
  int n_eval_spoofed = 540;
  double min_duration_s = 1.5;
  double max_duration_s = 3.0;
  // Device instances per (kind, class) shared by train and dev.
  int instances_per_class = 3;
};

// Channel instances behind one utterance; playback/environment/recorder are
// zero for genuine rows.
struct ChannelRecord {
  std::string id;
  std::uint64_t internal_seed = 0;
  std::uint64_t playback_seed = 0;
  std::uint64_t environment_seed = 0;
  std::uint64_t recorder_seed = 0;
};

struct Corpus {
  std::vector<LabeledUtterance> utterances;
  std::vector<ChannelRecord> channels;
};

// Writes <out_dir>/wav/*.wav, <out_dir>/manifest.csv and <out_dir>/channels.csv.
// Train/dev instance seeds are even, eval instance seeds odd, so the two
// sets never intersect.
Corpus build_corpus(const CorpusConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir);

void write_channels(const std::filesystem::path& path, const std::vector<ChannelRecord>& rows);
std::vector<ChannelRecord> read_channels(const std::filesystem::path& path);

}  // namespace antispoof

#endif  // ANTISPOOF_CHANNEL_SIM_H_

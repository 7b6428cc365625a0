#ifndef ANTISPOOF_WAV_H_
#define ANTISPOOF_WAV_H_

#include <filesystem>
#include <vector>

namespace antispoof {

inline constexpr int kDefaultSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  // Throws std::invalid_argument unless samples are non-empty and finite.
  void validate() const;
};

// RIFF PCM 16-bit mono. Samples are scaled by 1/32768.
Waveform read_wav(const std::filesystem::path& path);

// Writes PCM16 mono; values are clipped to the representable range.
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace antispoof

#endif  // ANTISPOOF_WAV_H_

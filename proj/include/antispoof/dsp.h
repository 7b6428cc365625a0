#ifndef ANTISPOOF_DSP_H_
#define ANTISPOOF_DSP_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "antispoof/random.h"
#include "antispoof/wav.h"

namespace antispoof {

// frames x bins log-power matrix, row-major (one row per frame).
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;  // stored as float32 on disk

  double& at(std::size_t f, std::size_t b) { return values[f * bins + b]; }
  double at(std::size_t f, std::size_t b) const { return values[f * bins + b]; }
  std::span<const double> row(std::size_t f) const {
    return std::span<const double>(values).subspan(f * bins, bins);
  }
  bool operator==(const Spectrogram&) const = default;
};

struct StftOptions {
  std::size_t frame_len = 400;    // 25 ms at 16 kHz
  std::size_t frame_shift = 160;  // 10 ms
  std::size_t n_fft = 512;
  double power_floor = 1e-10;

  std::size_t num_bins() const { return n_fft / 2 + 1; }
  std::size_t num_frames(std::size_t num_samples) const;
};

// Hamming-windowed, zero-padded FFT; value = ln(|X|^2 + power_floor).
// Throws InputTooShortError if the signal is shorter than one frame.
Spectrogram stft(const Waveform& w, const StftOptions& opts = {});

// Random contiguous crop when longer, end-to-end tiling when shorter.
Spectrogram fix_length(const Spectrogram& s, std::size_t target_frames, Rng& rng);

// Subtracts the per-bin mean over frames.
Spectrogram mean_normalize(const Spectrogram& s);

// Feature file: "SPEC", u32 frames, u32 bins, float32 values, little-endian.
void write_features(const std::filesystem::path& path, const Spectrogram& s);
Spectrogram read_features(const std::filesystem::path& path);

}  // namespace antispoof

#endif  // ANTISPOOF_DSP_H_

#include "antispoof/dsp.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "antispoof/binary_io.h"
#include "antispoof/errors.h"
#include "antispoof/fft.h"

namespace antispoof {

std::size_t StftOptions::num_frames(std::size_t num_samples) const {
  if (num_samples < frame_len) return 0;
  return 1 + (num_samples - frame_len) / frame_shift;
}

Spectrogram stft(const Waveform& w, const StftOptions& opts) {
  if (opts.frame_len == 0 || opts.frame_shift == 0 || opts.frame_len > opts.n_fft ||
      !is_power_of_two(opts.n_fft))
    throw std::invalid_argument("stft: need 0 < frame_len <= n_fft (power of two), frame_shift > 0");
  if (w.samples.size() < opts.frame_len)
    throw InputTooShortError("stft: " + std::to_string(w.samples.size()) +
                             " samples is shorter than one frame (" +
                             std::to_string(opts.frame_len) + ")");

  std::vector<double> window(opts.frame_len);
  const double denom = static_cast<double>(opts.frame_len - 1);
  for (std::size_t n = 0; n < opts.frame_len; ++n)
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);

  Spectrogram out;
  out.frames = opts.num_frames(w.samples.size());
  out.bins = opts.num_bins();
  out.values.resize(out.frames * out.bins);

  std::vector<double> frame(opts.frame_len);
  for (std::size_t f = 0; f < out.frames; ++f) {
    const std::size_t offset = f * opts.frame_shift;
    for (std::size_t n = 0; n < opts.frame_len; ++n) frame[n] = w.samples[offset + n] * window[n];
    const std::vector<double> power = power_spectrum(frame, opts.n_fft);
    for (std::size_t b = 0; b < out.bins; ++b)
      out.at(f, b) = std::log(power[b] + opts.power_floor);
  }
  return out;
}

Spectrogram fix_length(const Spectrogram& s, std::size_t target_frames, Rng& rng) {
  if (s.frames == 0) throw std::invalid_argument("fix_length: empty spectrogram");
  if (target_frames == 0) throw std::invalid_argument("fix_length: target_frames must be positive");
  if (s.frames == target_frames) return s;

  Spectrogram out;
  out.frames = target_frames;
  out.bins = s.bins;
  out.values.resize(target_frames * s.bins);
  std::size_t start = 0;
  if (s.frames > target_frames) start = rng.below(s.frames - target_frames + 1);
  for (std::size_t f = 0; f < target_frames; ++f) {
    const std::size_t src = s.frames > target_frames ? start + f : f % s.frames;
    std::copy_n(s.values.begin() + static_cast<std::ptrdiff_t>(src * s.bins), s.bins,
                out.values.begin() + static_cast<std::ptrdiff_t>(f * s.bins));
  }
  return out;
}

Spectrogram mean_normalize(const Spectrogram& s) {
  if (s.frames == 0) throw std::invalid_argument("mean_normalize: empty spectrogram");
  std::vector<double> mean(s.bins, 0.0);
  for (std::size_t f = 0; f < s.frames; ++f)
    for (std::size_t b = 0; b < s.bins; ++b) mean[b] += s.at(f, b);
  for (double& m : mean) m /= static_cast<double>(s.frames);

  Spectrogram out = s;
  for (std::size_t f = 0; f < s.frames; ++f)
    for (std::size_t b = 0; b < s.bins; ++b)
      out.at(f, b) = s.at(f, b) - mean[b];
  return out;
}

void write_features(const std::filesystem::path& path, const Spectrogram& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_features: cannot open " + path.string());
  out.write("SPEC", 4);
  binary_io::write_u32(out, static_cast<std::uint32_t>(s.frames));
  binary_io::write_u32(out, static_cast<std::uint32_t>(s.bins));
  std::vector<float> narrow(s.values.begin(), s.values.end());
  out.write(reinterpret_cast<const char*>(narrow.data()),
            static_cast<std::streamsize>(narrow.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write_features: write failed for " + path.string());
}

Spectrogram read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_features: cannot open " + path.string());
  const std::string what = "feature file " + path.string();
  binary_io::expect_magic(in, "SPEC", what);
  Spectrogram s;
  s.frames = binary_io::read_u32(in, what);
  s.bins = binary_io::read_u32(in, what);
  std::vector<float> stored(s.frames * s.bins);
  binary_io::read_f32s(in, stored.data(), stored.size(), what);
  s.values.assign(stored.begin(), stored.end());
  return s;
}

}  // namespace antispoof

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "antispoof/binary_io.h"
#include "antispoof/dsp.h"
#include "antispoof/errors.h"
#include "antispoof/fft.h"
#include "antispoof/wav.h"
#include "test_support.h"

namespace antispoof {
namespace {

using testing::ScratchDir;

Waveform random_wave(std::size_t n, Rng& rng) {
  Waveform w;
  w.samples.resize(n);
  for (auto& v : w.samples) v = rng.uniform(-0.5, 0.5);
  return w;
}

Spectrogram random_spec(std::size_t frames, std::size_t bins, Rng& rng) {
  Spectrogram s{frames, bins, std::vector<double>(frames * bins)};
  for (auto& v : s.values) v = rng.uniform(-20.0, 5.0);
  return s;
}

TEST(Fft, MatchesNaiveDft) {
  Rng rng(11);
  for (std::size_t n : {1u, 2u, 4u, 8u, 64u, 512u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<std::complex<double>> ref(n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t t = 0; t < n; ++t)
        ref[k] += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t % n) / double(n));
    auto y = x;
    fft_inplace(y);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(std::abs(y[k] - ref[k]), 0.0, 1e-9 * double(n)) << n;
    fft_inplace(y, /*inverse=*/true);
    for (std::size_t t = 0; t < n; ++t) EXPECT_NEAR(std::abs(y[t] / double(n) - x[t]), 0.0, 1e-12);
  }
}

TEST(Fft, RejectsNonPowerOfTwo) {
  std::vector<std::complex<double>> x(12);
  EXPECT_THROW(fft_inplace(x), std::invalid_argument);
  EXPECT_EQ(next_power_of_two(400), 512u);
  EXPECT_TRUE(is_power_of_two(256));
  EXPECT_FALSE(is_power_of_two(257));
}

TEST(Wav, SilenceSecond) {
  ScratchDir dir("wav");
  Waveform w;
  w.samples.assign(16000, 0.0);
  write_wav(dir.path() / "z.wav", w);
  const Waveform r = read_wav(dir.path() / "z.wav");
  EXPECT_EQ(r.sample_rate, 16000);
  ASSERT_EQ(r.samples.size(), 16000u);
  for (double v : r.samples) EXPECT_EQ(v, 0.0);
}

// Hand-built RIFF file so the reader is not only tested against the writer.
std::string pcm16_file(std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
                       const std::vector<std::int16_t>& data) {
  std::string s;
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) s.push_back(char((v >> (8 * i)) & 0xff)); };
  auto u16 = [&](std::uint16_t v) { for (int i = 0; i < 2; ++i) s.push_back(char((v >> (8 * i)) & 0xff)); };
  const std::uint32_t bytes = std::uint32_t(data.size() * 2);
  s += "RIFF";
  u32(36 + bytes);
  s += "WAVEfmt ";
  u32(16);
  u16(format);
  u16(channels);
  u32(16000);
  u32(16000 * channels * bits / 8);
  u16(std::uint16_t(channels * bits / 8));
  u16(bits);
  s += "data";
  u32(bytes);
  for (auto v : data) u16(std::uint16_t(v));
  return s;
}

TEST(Wav, FullScaleSample) {
  ScratchDir dir("wav");
  std::ofstream(dir.path() / "a.wav", std::ios::binary) << pcm16_file(1, 1, 16, {32767, -32768, 0});
  const Waveform r = read_wav(dir.path() / "a.wav");
  ASSERT_EQ(r.samples.size(), 3u);
  EXPECT_NEAR(r.samples[0], 1.0, 1e-4);
  EXPECT_EQ(r.samples[1], -1.0);
}

TEST(Wav, RejectsUnsupportedFormatsNamingField) {
  ScratchDir dir("wav");
  struct Case {
    std::uint16_t format, channels, bits;
    const char* field;
  };
  for (const Case& c : {Case{3, 1, 16, "format"}, Case{1, 2, 16, "channel"}, Case{1, 1, 8, "bit"}}) {
    const auto p = dir.path() / "bad.wav";
    std::ofstream(p, std::ios::binary | std::ios::trunc) << pcm16_file(c.format, c.channels, c.bits, {1, 2, 3, 4});
    try {
      read_wav(p);
      ADD_FAILURE() << "accepted " << c.field;
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find(c.field), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(read_wav(dir.path() / "missing.wav"), std::runtime_error);
}

TEST(Wav, RoundTripIsStable) {
  ScratchDir dir("wav");
  Rng rng(5);
  write_wav(dir.path() / "a.wav", random_wave(3000, rng));
  const Waveform first = read_wav(dir.path() / "a.wav");
  write_wav(dir.path() / "b.wav", first);
  const Waveform second = read_wav(dir.path() / "b.wav");
  EXPECT_EQ(first.samples, second.samples);
}

TEST(Stft, FrameCountFormula) {
  EXPECT_EQ(StftOptions{}.num_frames(16000), 98u);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 400 + rng.below(4000);
    const Spectrogram s = stft(random_wave(n, rng));
    EXPECT_EQ(s.frames, 1 + (n - 400) / 160) << n;
    EXPECT_EQ(s.bins, 257u);
  }
}

TEST(Stft, TooShortThrows) {
  Rng rng(1);
  EXPECT_THROW(stft(random_wave(399, rng)), InputTooShortError);
}

TEST(Stft, DcEnergyInBinZero) {
  Waveform w;
  w.samples.assign(4000, 0.3);
  const Spectrogram s = stft(w);
  // Hamming main lobe spans 2*512/400 bins on each side; start well past it.
  for (std::size_t f = 0; f < s.frames; ++f)
    for (std::size_t b = 4; b < s.bins; ++b) EXPECT_GE(s.at(f, 0) - s.at(f, b), std::log(1e3)) << f << ' ' << b;
}

TEST(Stft, SinusoidPeaksAtItsBin) {
  for (std::size_t k : {5u, 40u, 100u, 200u, 250u}) {
    Waveform w;
    w.samples.resize(8000);
    for (std::size_t n = 0; n < w.samples.size(); ++n)
      w.samples[n] = 0.5 * std::sin(2.0 * std::numbers::pi * double(k) * 16000.0 / 512.0 * double(n) / 16000.0);
    const Spectrogram s = stft(w);
    for (std::size_t f = 1; f + 1 < s.frames; ++f) {
      const auto row = s.row(f);
      EXPECT_EQ(std::size_t(std::max_element(row.begin(), row.end()) - row.begin()), k);
    }
  }
}

TEST(Stft, ShiftByOneHopShiftsOneFrame) {
  Rng rng(8);
  const Waveform w = random_wave(5000, rng);
  Waveform shifted;
  shifted.samples.assign(w.samples.begin() + 160, w.samples.end());
  const Spectrogram a = stft(w), b = stft(shifted);
  ASSERT_EQ(b.frames + 1, a.frames);
  for (std::size_t f = 0; f < b.frames; ++f)
    for (std::size_t k = 0; k < a.bins; ++k) EXPECT_NEAR(b.at(f, k), a.at(f + 1, k), 1e-6);
}

TEST(Stft, FloorBoundsSilence) {
  Waveform w;
  w.samples.assign(1000, 0.0);
  const Spectrogram s = stft(w);
  for (double v : s.values) EXPECT_DOUBLE_EQ(v, std::log(1e-10));
}

TEST(FixLength, EqualLengthIsIdentity) {
  Rng rng(2), crop(99);
  const Spectrogram s = random_spec(400, 7, rng);
  EXPECT_EQ(fix_length(s, 400, crop), s);
}

TEST(FixLength, ShortInputTiles) {
  Rng rng(2), crop(99);
  const Spectrogram s = random_spec(150, 5, rng);
  const Spectrogram out = fix_length(s, 400, crop);
  ASSERT_EQ(out.frames, 400u);
  for (std::size_t f = 0; f < 400; ++f) {
    const std::size_t src = f < 150 ? f : f < 300 ? f - 150 : f - 300;
    for (std::size_t b = 0; b < 5; ++b) EXPECT_EQ(out.at(f, b), s.at(src, b));
  }
}

TEST(FixLength, LongInputIsContiguousSlice) {
  Rng rng(4);
  const Spectrogram s = random_spec(500, 6, rng);
  std::set<std::size_t> offsets;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng crop(seed);
    const Spectrogram out = fix_length(s, 400, crop);
    ASSERT_EQ(out.frames, 400u);
    // Locate the first row and check the rest follow contiguously.
    std::size_t start = 0;
    while (start <= 100 && !std::equal(out.row(0).begin(), out.row(0).end(), s.row(start).begin())) ++start;
    ASSERT_LE(start, 100u);
    for (std::size_t f = 0; f < 400; ++f)
      EXPECT_TRUE(std::equal(out.row(f).begin(), out.row(f).end(), s.row(start + f).begin()));
    offsets.insert(start);
    Rng again(seed);
    EXPECT_EQ(fix_length(s, 400, again), out);
  }
  EXPECT_GT(offsets.size(), 5u);
}

TEST(FixLength, AlwaysTargetFrames) {
  Rng rng(6);
  for (std::size_t frames : {1u, 2u, 399u, 401u, 1000u}) {
    Rng crop(frames);
    EXPECT_EQ(fix_length(random_spec(frames, 3, rng), 400, crop).frames, 400u);
  }
}

TEST(MeanNormalize, Examples) {
  Spectrogram c{3, 4, std::vector<double>(12, 3.7)};
  for (double v : mean_normalize(c).values) EXPECT_NEAR(v, 0.0, 1e-12);
  Spectrogram two{2, 1, {1.0, 3.0}};
  EXPECT_EQ(mean_normalize(two).values, (std::vector<double>{-1.0, 1.0}));
}

TEST(MeanNormalize, ZeroColumnMeansAndIdempotent) {
  Rng rng(12);
  const Spectrogram s = random_spec(400, 257, rng);
  const Spectrogram once = mean_normalize(s);
  for (std::size_t b = 0; b < s.bins; ++b) {
    double m = 0.0;
    for (std::size_t f = 0; f < s.frames; ++f) m += once.at(f, b);
    EXPECT_LT(std::abs(m / double(s.frames)), 1e-9);
  }
  const Spectrogram twice = mean_normalize(once);
  for (std::size_t i = 0; i < once.values.size(); ++i) EXPECT_NEAR(once.values[i], twice.values[i], 1e-9);
}

TEST(Features, FileRoundTripAndHeader) {
  ScratchDir dir("feat");
  Rng rng(1);
  Spectrogram s = random_spec(7, 9, rng);
  for (auto& v : s.values) v = static_cast<float>(v);  // representable in the file
  write_features(dir.path() / "a.spec", s);
  EXPECT_EQ(read_features(dir.path() / "a.spec"), s);
  const std::string bytes = testing::read_file(dir.path() / "a.spec");
  ASSERT_EQ(bytes.size(), 12u + 7 * 9 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "SPEC");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 7);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 9);

  std::ofstream(dir.path() / "bad.spec", std::ios::binary) << "SPEK";
  EXPECT_THROW(read_features(dir.path() / "bad.spec"), FormatError);
}

}  // namespace
}  // namespace antispoof

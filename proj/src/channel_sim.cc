#include "antispoof/channel_sim.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "antispoof/errors.h"
#include "antispoof/fft.h"
#include "antispoof/random.h"

namespace antispoof {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<std::string_view, 1> kInternalNames = {"internal"};
constexpr std::array<std::string_view, 8> kPlaybackNames = {
    "All-in-one PC speakers",
    "Beyerdynamic DT 770 PRO headphones",
    "Creative A60",
    "Dell laptop with internal speakers",
    "Dynaudio BM5A Speaker connected to laptop",
    "HP Laptop speakers",
    "High Quality GENELEC Studio Monitors Speakers",
    "VIFA M10MD-39-08 Speaker connected to laptop",
};
constexpr std::array<std::string_view, 4> kEnvironmentNames = {"Balcony", "Bedroom", "Cantine",
                                                               "Office"};
constexpr std::array<std::string_view, 7> kRecorderNames = {
    "BQ Aquaris M5 smartphone. Software: Smart voice recorder",
    "Desktop Computer with headset and arecord",
    "H6 Handy Recorder",
    "Nokia Lumia",
    "Rode NT2 microphone connected to laptop",
    "Rode smartlav+ microphone connected to laptop",
    "Samsung Galaxy 7s",
};

struct Range {
  double lo, hi;
  double draw(Rng& rng) const { return rng.uniform(lo, hi); }
};

// Playback families. Cutoff slots are 700 Hz apart; instances draw from the
// inner 200 Hz of each 400 Hz class range.
struct PlaybackFamily {
  double cutoff_lo;  // class range is [cutoff_lo, cutoff_lo + 400]
  Range resonance_hz;
  Range resonance_db;
  Range highpass_hz;
};
constexpr std::array<PlaybackFamily, 8> kPlayback = {{
    {3900, {1700, 2100}, {0.5, 1.5}, {180, 240}},  // all-in-one
    {6700, {2800, 3300}, {0.5, 1.5}, {30, 50}},    // headphones
    {4600, {1100, 1400}, {0.5, 1.5}, {120, 160}},  // Creative A60
    {3200, {2300, 2700}, {0.5, 1.5}, {380, 450}},  // Dell laptop
    {6000, {800, 1000}, {0.5, 1.5}, {50, 70}},     // Dynaudio
    {2500, {1300, 1600}, {0.5, 1.5}, {320, 380}},  // HP laptop
    {7400, {3500, 4000}, {0.5, 1.5}, {35, 45}},    // Genelec
    {5300, {1900, 2300}, {0.5, 1.5}, {90, 120}},   // VIFA
}};

struct EnvironmentFamily {
  Range rt60_s;
  Range drr_db;  // direct-to-reverberant energy ratio
  int reflections;
  Range reflection_ms;
  Range reflection_gain;
};
constexpr std::array<EnvironmentFamily, 4> kEnvironment = {{
    {{0.04, 0.07}, {12, 16}, 1, {2, 4}, {0.2, 0.35}},    // balcony
    {{0.15, 0.22}, {6, 9}, 3, {3, 10}, {0.25, 0.45}},    // bedroom
    {{0.45, 0.65}, {0, 3}, 5, {5, 25}, {0.3, 0.5}},      // cantine
    {{0.28, 0.38}, {3, 6}, 4, {4, 15}, {0.25, 0.45}},    // office
}};

struct RecorderFamily {
  Range tilt_db_per_octave;
  Range highpass_hz;
};
// High-pass corners spread over the harmonic region so that each class
// removes a different number of low harmonics.
constexpr std::array<RecorderFamily, 7> kRecorder = {{
    {{2.0, 3.0}, {380, 440}},    // BQ Aquaris
    {{-2.5, -1.5}, {240, 290}},  // desktop headset
    {{-0.5, 0.5}, {60, 80}},     // H6
    {{4.0, 5.0}, {700, 800}},    // Nokia Lumia
    {{-1.2, -0.6}, {130, 160}},  // Rode NT2
    {{0.8, 1.6}, {520, 600}},    // Rode smartlav+
    {{-4.5, -3.5}, {960, 1080}}, // Samsung
}};

constexpr std::size_t kPlaybackTaps = 127;
constexpr std::size_t kRecorderTaps = 127;

double butterworth_lowpass(double f, double fc, int order) {
  return 1.0 / std::sqrt(1.0 + std::pow(f / fc, 2.0 * order));
}

double butterworth_highpass(double f, double fc, int order) {
  if (f <= 0.0) return 0.0;
  return 1.0 / std::sqrt(1.0 + std::pow(fc / f, 2.0 * order));
}

// Linear-phase FIR by frequency sampling of a zero-phase magnitude response,
// Blackman-windowed to num_taps (odd).
std::vector<double> fir_from_magnitude(const std::function<double(double)>& magnitude,
                                       std::size_t num_taps, double sample_rate) {
  constexpr std::size_t kGrid = 4096;
  std::vector<std::complex<double>> spec(kGrid);
  for (std::size_t k = 0; k <= kGrid / 2; ++k) {
    const double f = static_cast<double>(k) * sample_rate / kGrid;
    spec[k] = magnitude(f);
    if (k > 0 && k < kGrid / 2) spec[kGrid - k] = spec[k];
  }
  fft_inplace(spec, /*inverse=*/true);
  const std::size_t center = num_taps / 2;
  std::vector<double> taps(num_taps);
  for (std::size_t n = 0; n < num_taps; ++n) {
    const std::size_t idx = (n + kGrid - center) % kGrid;
    const double x = 2.0 * kPi * static_cast<double>(n) / static_cast<double>(num_taps - 1);
    const double w = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
    taps[n] = spec[idx].real() / kGrid * w;
  }
  return taps;
}

ImpulseResponse make_internal(std::uint64_t instance_seed) {
  Rng rng(derive_seed(instance_seed, {0x1a7e, 0}));
  const std::size_t len = 2 + rng.below(kMaxInternalTaps - 1);
  const double a = rng.uniform(0.05, 0.15);
  const double r = rng.uniform(0.3, 0.6);
  ImpulseResponse ir;
  ir.kind = ChannelKind::kInternalNoise;
  ir.taps.assign(len, 0.0);
  ir.taps[0] = 1.0;
  for (std::size_t k = 1; k < len; ++k) ir.taps[k] = a * std::pow(-r, static_cast<double>(k));
  return ir;
}

ImpulseResponse make_playback(int class_id, std::uint64_t instance_seed) {
  const PlaybackFamily& fam = kPlayback[static_cast<std::size_t>(class_id)];
  Rng rng(derive_seed(instance_seed, {0x9b, static_cast<std::uint64_t>(class_id)}));
  const double cutoff = rng.uniform(fam.cutoff_lo + 100.0, fam.cutoff_lo + 300.0);
  const double res_hz = fam.resonance_hz.draw(rng);
  const double res_db = fam.resonance_db.draw(rng);
  const double hp_hz = fam.highpass_hz.draw(rng);
  auto magnitude = [=](double f) {
    const double octaves = f > 0.0 ? std::log2(f / res_hz) : -10.0;
    const double bump_db = res_db * std::exp(-0.5 * std::pow(octaves / 0.15, 2));
    return butterworth_lowpass(f, cutoff, 8) * butterworth_highpass(f, hp_hz, 4) *
           std::pow(10.0, bump_db / 20.0);
  };
  ImpulseResponse ir;
  ir.kind = ChannelKind::kPlayback;
  ir.taps = fir_from_magnitude(magnitude, kPlaybackTaps, kDefaultSampleRate);
  return ir;
}

ImpulseResponse make_environment(int class_id, std::uint64_t instance_seed) {
  const EnvironmentFamily& fam = kEnvironment[static_cast<std::size_t>(class_id)];
  Rng rng(derive_seed(instance_seed, {0xe1, static_cast<std::uint64_t>(class_id)}));
  const double rt60 = fam.rt60_s.draw(rng);
  const double drr_db = fam.drr_db.draw(rng);
  const double fs = kDefaultSampleRate;
  const auto len = std::min(kMaxEnvironmentTaps, static_cast<std::size_t>(std::ceil(rt60 * fs)));

  ImpulseResponse ir;
  ir.kind = ChannelKind::kEnvironment;
  ir.taps.assign(len, 0.0);
  ir.taps[0] = 1.0;

  for (int i = 0; i < fam.reflections; ++i) {
    const auto delay = static_cast<std::size_t>(fam.reflection_ms.draw(rng) * 1e-3 * fs);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    if (delay > 0 && delay < len) ir.taps[delay] += sign * fam.reflection_gain.draw(rng);
  }

  // Diffuse tail: 60 dB amplitude decay over rt60, energy set by the DRR.
  constexpr std::size_t kOnset = 16;
  std::vector<double> tail(len, 0.0);
  double tail_energy = 0.0;
  const double decay = std::log(1000.0) / (rt60 * fs);
  for (std::size_t n = kOnset; n < len; ++n) {
    tail[n] = rng.normal() * std::exp(-decay * static_cast<double>(n - kOnset));
    tail_energy += tail[n] * tail[n];
  }
  const double gain = std::sqrt(std::pow(10.0, -drr_db / 10.0) / std::max(tail_energy, 1e-30));
  for (std::size_t n = kOnset; n < len; ++n) ir.taps[n] += gain * tail[n];
  return ir;
}

ImpulseResponse make_recorder(int class_id, std::uint64_t instance_seed) {
  const RecorderFamily& fam = kRecorder[static_cast<std::size_t>(class_id)];
  Rng rng(derive_seed(instance_seed, {0x7ec, static_cast<std::uint64_t>(class_id)}));
  const double tilt = fam.tilt_db_per_octave.draw(rng);
  const double hp_hz = fam.highpass_hz.draw(rng);
  auto magnitude = [=](double f) {
    const double octaves = std::log2(std::max(f, 50.0) / 1000.0);
    return std::pow(10.0, tilt * octaves / 20.0) * butterworth_highpass(f, hp_hz, 8);
  };
  ImpulseResponse ir;
  ir.kind = ChannelKind::kRecorder;
  ir.taps = fir_from_magnitude(magnitude, kRecorderTaps, kDefaultSampleRate);
  return ir;
}

std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h) {
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += x[i] * h[j];
  return y;
}

void require_kind(const ImpulseResponse& ir, ChannelKind want, const char* role) {
  if (ir.kind != want)
    throw std::invalid_argument(std::string(role) + " impulse response has kind " +
                                std::string(kind_name(ir.kind)) + ", expected " +
                                std::string(kind_name(want)));
}

double peak_abs(std::span<const double> v) {
  double p = 0.0;
  for (double s : v) p = std::max(p, std::abs(s));
  return p;
}

double quantize16(double s) { return std::clamp(std::round(s * 32768.0), -32768.0, 32767.0) / 32768.0; }

}  // namespace

std::string_view kind_name(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::kInternalNoise: return "internal_noise";
    case ChannelKind::kPlayback: return "playback";
    case ChannelKind::kEnvironment: return "environment";
    case ChannelKind::kRecorder: return "recorder";
  }
  return "?";
}

int class_count(ChannelKind kind) { return static_cast<int>(class_names(kind).size()); }

std::span<const std::string_view> class_names(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::kInternalNoise: return kInternalNames;
    case ChannelKind::kPlayback: return kPlaybackNames;
    case ChannelKind::kEnvironment: return kEnvironmentNames;
    case ChannelKind::kRecorder: return kRecorderNames;
  }
  return {};
}

FrequencyRange playback_cutoff_range(int class_id) {
  if (class_id < 0 || class_id >= static_cast<int>(kPlayback.size()))
    throw std::invalid_argument("playback_cutoff_range: class_id out of range");
  const double lo = kPlayback[static_cast<std::size_t>(class_id)].cutoff_lo;
  return {lo, lo + 400.0};
}

Waveform synth_source(std::uint64_t seed, double duration_s, int sample_rate) {
  if (!(duration_s >= 1.0 && duration_s <= 10.0))
    throw std::invalid_argument("synth_source: duration " + std::to_string(duration_s) +
                                " s outside [1, 10]");
  if (sample_rate <= 0) throw std::invalid_argument("synth_source: sample_rate must be positive");
  Rng rng(seed);
  const double fs = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  const std::size_t block = static_cast<std::size_t>(fs / 100.0);  // 10 ms control rate
  const std::size_t num_blocks = (n + block - 1) / block;

  // f0 contour: log-domain interpolation between random targets every 100 ms.
  const double f0_center = rng.uniform(100.0, 220.0);
  std::vector<double> f0_knots(num_blocks / 10 + 2);
  for (double& k : f0_knots)
    k = std::clamp(f0_center * std::exp(0.25 * rng.uniform(-1.0, 1.0)), 80.0, 300.0);

  // Three formants drifting slowly around per-utterance centers.
  const std::array<double, 3> formant_center = {rng.uniform(300, 800), rng.uniform(900, 2200),
                                                rng.uniform(2300, 3200)};
  const std::array<double, 3> formant_bw = {rng.uniform(80, 160), rng.uniform(120, 240),
                                            rng.uniform(180, 320)};
  const std::array<double, 3> formant_gain = {1.0, rng.uniform(0.4, 0.8), rng.uniform(0.2, 0.5)};
  std::array<double, 3> drift_phase{};
  for (double& p : drift_phase) p = rng.uniform(0.0, 2.0 * kPi);

  // Each formant band and the spectral floor swell and fade at the syllable
  // rate with its own phase, so bands do not share one temporal envelope.
  const double syllable_rate = rng.uniform(2.0, 8.0);
  std::array<double, 4> am_phase{};
  for (double& p : am_phase) p = rng.uniform(0.0, 2.0 * kPi);
  auto band_level = [&](int band, double t) {
    const double am = 0.5 + 0.5 * std::sin(2.0 * kPi * syllable_rate * t + am_phase[band]);
    return 0.08 + 0.92 * am * am;
  };
  // Harmonic amplitudes at time t for fundamental f0.
  auto harmonic_amps = [&](double t, double f0, std::size_t harmonics, std::vector<double>& amps) {
    std::array<double, 3> formant{}, level{};
    for (int i = 0; i < 3; ++i) {
      formant[i] = formant_center[i] * (1.0 + 0.12 * std::sin(2.0 * kPi * 0.7 * t + drift_phase[i]));
      level[i] = formant_gain[i] * band_level(i, t);
    }
    const double floor_level = 0.05 * band_level(3, t);
    amps.assign(harmonics + 1, 0.0);
    for (std::size_t h = 1; h <= harmonics; ++h) {
      const double f = static_cast<double>(h) * f0;
      double env = floor_level;
      for (int i = 0; i < 3; ++i) env += level[i] * std::exp(-0.5 * std::pow((f - formant[i]) / formant_bw[i], 2));
      amps[h] = env / static_cast<double>(h);
    }
  };

  std::vector<double> voiced(n, 0.0);
  std::vector<double> amps_start, amps_end;
  double phase = 0.0;
  for (std::size_t b = 0; b < num_blocks; ++b) {
    const double pos = static_cast<double>(b) / 10.0;
    const auto k0 = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k0);
    const double f0 = std::exp((1.0 - frac) * std::log(f0_knots[k0]) + frac * std::log(f0_knots[k0 + 1]));
    const std::size_t begin = b * block;
    const std::size_t end = std::min(n, (b + 1) * block);

    // Amplitudes are interpolated linearly across the block.
    const auto harmonics = static_cast<std::size_t>(std::floor(0.475 * fs / f0));
    harmonic_amps(static_cast<double>(begin) / fs, f0, harmonics, amps_start);
    harmonic_amps(static_cast<double>(begin + block) / fs, f0, harmonics, amps_end);

    const double dphi = 2.0 * kPi * f0 / fs;
    for (std::size_t t = begin; t < end; ++t) {
      // sin(h*phase) by the Chebyshev recurrence.
      const double s1 = std::sin(phase);
      const double c2 = 2.0 * std::cos(phase);
      double prev = 0.0, cur = s1, acc_start = 0.0, acc_end = 0.0;
      for (std::size_t h = 1; h <= harmonics; ++h) {
        acc_start += amps_start[h] * cur;
        acc_end += amps_end[h] * cur;
        const double next = c2 * cur - prev;
        prev = cur;
        cur = next;
      }
      const double w = static_cast<double>(t - begin) / static_cast<double>(block);
      voiced[t] = (1.0 - w) * acc_start + w * acc_end;
      phase = std::fmod(phase + dphi, 2.0 * kPi);
    }
  }

  double power = 0.0;
  for (double v : voiced) power += v * v;
  power /= static_cast<double>(n);
  const double snr_db = rng.uniform(50.0, 60.0);
  const double noise_std = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) w.samples[t] = voiced[t] + noise_std * rng.normal();
  return peak_normalize(std::move(w), kPeakLevel);
}

ImpulseResponse make_ir(ChannelKind kind, int class_id, std::uint64_t instance_seed) {
  if (class_id < 0 || class_id >= class_count(kind))
    throw std::invalid_argument("make_ir: class_id " + std::to_string(class_id) + " invalid for " +
                                std::string(kind_name(kind)));
  ImpulseResponse ir;
  switch (kind) {
    case ChannelKind::kInternalNoise: ir = make_internal(instance_seed); break;
    case ChannelKind::kPlayback: ir = make_playback(class_id, instance_seed); break;
    case ChannelKind::kEnvironment: ir = make_environment(class_id, instance_seed); break;
    case ChannelKind::kRecorder: ir = make_recorder(class_id, instance_seed); break;
  }
  ir.class_id = class_id;
  ir.instance_seed = instance_seed;
  return ir;
}

std::vector<double> convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) throw std::invalid_argument("convolve: empty input");
  if (h.size() > x.size()) std::swap(x, h);
  if (h.size() <= 16) return convolve_direct(x, h);

  const std::size_t out_len = x.size() + h.size() - 1;
  const std::size_t n_fft = std::min(next_power_of_two(out_len), std::max<std::size_t>(
                                                                     next_power_of_two(4 * h.size()), 1024));
  const std::size_t step = n_fft - h.size() + 1;

  std::vector<std::complex<double>> h_spec(n_fft);
  for (std::size_t i = 0; i < h.size(); ++i) h_spec[i] = h[i];
  fft_inplace(h_spec);

  std::vector<double> y(out_len, 0.0);
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t start = 0; start < x.size(); start += step) {
    const std::size_t len = std::min(step, x.size() - start);
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (std::size_t i = 0; i < len; ++i) buf[i] = x[start + i];
    fft_inplace(buf);
    for (std::size_t k = 0; k < n_fft; ++k) buf[k] *= h_spec[k];
    fft_inplace(buf, /*inverse=*/true);
    const std::size_t valid = std::min(len + h.size() - 1, out_len - start);
    for (std::size_t i = 0; i < valid; ++i) y[start + i] += buf[i].real() / static_cast<double>(n_fft);
  }
  return y;
}

Waveform convolve(const Waveform& x, const ImpulseResponse& h) {
  Waveform y;
  y.sample_rate = x.sample_rate;
  y.samples = convolve(x.samples, h.taps);
  return y;
}

Waveform peak_normalize(Waveform w, double peak) {
  const double p = peak_abs(w.samples);
  if (p <= 0.0) throw std::invalid_argument("peak_normalize: all-zero signal");
  const double g = peak / p;
  for (double& s : w.samples) s *= g;
  return w;
}

Waveform make_genuine(const Waveform& x, const ImpulseResponse& n) {
  require_kind(n, ChannelKind::kInternalNoise, "internal noise");
  return peak_normalize(convolve(x, n));
}

Waveform make_spoofed(const Waveform& y_genuine, const ImpulseResponse& playback,
                      const ImpulseResponse& environment, const ImpulseResponse& recorder) {
  require_kind(playback, ChannelKind::kPlayback, "playback");
  require_kind(environment, ChannelKind::kEnvironment, "environment");
  require_kind(recorder, ChannelKind::kRecorder, "recorder");
  Waveform y = convolve(y_genuine, playback);
  y = convolve(y, environment);
  y = convolve(y, recorder);
  return peak_normalize(std::move(y));
}

Corpus build_corpus(const CorpusConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir) {
  const std::array<int, 6> counts = {cfg.n_train_genuine, cfg.n_train_spoofed, cfg.n_dev_genuine,
                                     cfg.n_dev_spoofed,   cfg.n_eval_genuine,  cfg.n_eval_spoofed};
  for (int c : counts)
    if (c < 1) throw std::invalid_argument("build_corpus: every subset count must be >= 1");
  if (cfg.instances_per_class < 1) throw std::invalid_argument("build_corpus: instances_per_class must be >= 1");
  if (!(cfg.min_duration_s >= 1.0 && cfg.max_duration_s <= 10.0 && cfg.min_duration_s <= cfg.max_duration_s))
    throw std::invalid_argument("build_corpus: durations must satisfy 1 <= min <= max <= 10");

  const std::filesystem::path wav_dir = out_dir / "wav";
  std::error_code ec;
  std::filesystem::create_directories(wav_dir, ec);
  if (ec) throw std::runtime_error("build_corpus: cannot create " + wav_dir.string() + ": " + ec.message());

  // Train/dev draw from a fixed pool of even seeds; eval seeds are fresh and odd.
  auto pool_seed = [&](ChannelKind kind, int class_id, std::uint64_t slot) {
    return derive_seed(seed, {0x9001, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(class_id), slot}) &
           ~std::uint64_t{1};
  };
  auto fresh_seed = [&](std::uint64_t index, ChannelKind kind) {
    return derive_seed(seed, {0xe7a1, index, static_cast<std::uint64_t>(kind)}) | std::uint64_t{1};
  };

  Corpus corpus;
  std::uint64_t index = 0;
  const std::array<Subset, 3> subsets = {Subset::kTrain, Subset::kDev, Subset::kEval};
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    for (int spoofed = 0; spoofed < 2; ++spoofed) {
      const int n = counts[2 * s + static_cast<std::size_t>(spoofed)];
      for (int k = 0; k < n; ++k, ++index) {
        const Subset subset = subsets[s];
        const bool unseen = subset == Subset::kEval;
        Rng rng(derive_seed(seed, {index}));

        char id[32];
        std::snprintf(id, sizeof id, "%s_%05llu", std::string(subset_name(subset)).c_str(),
                      static_cast<unsigned long long>(index));
        LabeledUtterance u;
        u.id = id;
        u.path = "wav/" + u.id + ".wav";
        u.subset = subset;
        ChannelRecord rec;
        rec.id = u.id;

        const double duration = rng.uniform(cfg.min_duration_s, cfg.max_duration_s);
        const Waveform source = synth_source(derive_seed(seed, {index, 0x50c}), duration);
        rec.internal_seed = unseen ? fresh_seed(index, ChannelKind::kInternalNoise)
                                   : derive_seed(seed, {0x1171, index}) & ~std::uint64_t{1};
        Waveform y = make_genuine(source, make_ir(ChannelKind::kInternalNoise, 0, rec.internal_seed));

        if (spoofed) {
          u.spoof = SpoofLabel::kSpoofed;
          u.env_label = static_cast<int>(rng.below(4));
          u.playback_label = static_cast<int>(rng.below(8));
          u.recorder_label = static_cast<int>(rng.below(7));
          auto pick = [&](ChannelKind kind, int class_id) {
            if (unseen) return fresh_seed(index, kind);
            return pool_seed(kind, class_id, rng.below(static_cast<std::uint64_t>(cfg.instances_per_class)));
          };
          rec.playback_seed = pick(ChannelKind::kPlayback, u.playback_label);
          rec.environment_seed = pick(ChannelKind::kEnvironment, u.env_label);
          rec.recorder_seed = pick(ChannelKind::kRecorder, u.recorder_label);
          // The replayed material is itself a 16-bit recording.
          for (double& v : y.samples) v = quantize16(v);
          y = make_spoofed(y, make_ir(ChannelKind::kPlayback, u.playback_label, rec.playback_seed),
                           make_ir(ChannelKind::kEnvironment, u.env_label, rec.environment_seed),
                           make_ir(ChannelKind::kRecorder, u.recorder_label, rec.recorder_seed));
        }
        write_wav(out_dir / u.path, y);
        corpus.utterances.push_back(std::move(u));
        corpus.channels.push_back(std::move(rec));
      }
    }
  }
  write_manifest(out_dir / "manifest.csv", corpus.utterances);
  write_channels(out_dir / "channels.csv", corpus.channels);
  return corpus;
}

void write_channels(const std::filesystem::path& path, const std::vector<ChannelRecord>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_channels: cannot open " + path.string());
  out << "id,internal_seed,playback_seed,environment_seed,recorder_seed\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.internal_seed << ',' << r.playback_seed << ',' << r.environment_seed << ','
        << r.recorder_seed << '\n';
}

std::vector<ChannelRecord> read_channels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_channels: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<ChannelRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    ChannelRecord r;
    if (!(ss >> r.id >> r.internal_seed >> r.playback_seed >> r.environment_seed >> r.recorder_seed))
      throw FormatError("read_channels: malformed row in " + path.string());
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace antispoof

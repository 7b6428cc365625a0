#include "antispoof/wav.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "antispoof/errors.h"

namespace antispoof {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

void Waveform::validate() const {
  if (samples.empty()) throw std::invalid_argument("Waveform: no samples");
  if (sample_rate <= 0) throw std::invalid_argument("Waveform: sample_rate must be positive");
  for (double s : samples)
    if (!std::isfinite(s)) throw std::invalid_argument("Waveform: non-finite sample");
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  const std::string where = " in " + path.string();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw FormatError("read_wav: missing RIFF/WAVE header" + where);

  bool have_fmt = false;
  int sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t chunk_size = le32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    if (pos + 8 + chunk_size > n) throw FormatError("read_wav: truncated chunk" + where);

    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("read_wav: fmt chunk too small" + where);
      const std::uint16_t audio_format = le16(body);
      const std::uint16_t channels = le16(body + 2);
      const std::uint16_t bits = le16(body + 14);
      if (audio_format != 1)
        throw FormatError("read_wav: audio_format=" + std::to_string(audio_format) +
                          " (only PCM=1 supported)" + where);
      if (channels != 1)
        throw FormatError("read_wav: channels=" + std::to_string(channels) +
                          " (only mono supported)" + where);
      if (bits != 16)
        throw FormatError("read_wav: bits_per_sample=" + std::to_string(bits) +
                          " (only 16 supported)" + where);
      sample_rate = static_cast<int>(le32(body + 4));
      if (sample_rate <= 0) throw FormatError("read_wav: sample_rate=0" + where);
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("read_wav: data chunk before fmt chunk" + where);
      Waveform w;
      w.sample_rate = sample_rate;
      w.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(le16(body + 2 * i));
        w.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return w;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  throw FormatError("read_wav: no data chunk" + where);
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(w.sample_rate));
  put32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (double s : w.samples) {
    const double scaled = std::round(s * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_wav: write failed for " + path.string());
}

}  // namespace antispoof

#include "antispoof/manifest.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "antispoof/errors.h"

namespace antispoof {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

int parse_int(const std::string& s, const std::string& where) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError(where + ": expected integer, got '" + s + "'");
  return v;
}

}  // namespace

std::string_view subset_name(Subset s) {
  switch (s) {
    case Subset::kTrain: return "train";
    case Subset::kDev: return "dev";
    case Subset::kEval: return "eval";
  }
  return "?";
}

Subset parse_subset(std::string_view s) {
  if (s == "train") return Subset::kTrain;
  if (s == "dev") return Subset::kDev;
  if (s == "eval") return Subset::kEval;
  throw FormatError("unknown subset '" + std::string(s) + "'");
}

std::string_view spoof_name(SpoofLabel s) {
  return s == SpoofLabel::kGenuine ? "genuine" : "spoofed";
}

SpoofLabel parse_spoof(std::string_view s) {
  if (s == "genuine") return SpoofLabel::kGenuine;
  if (s == "spoofed") return SpoofLabel::kSpoofed;
  throw FormatError("unknown spoof label '" + std::string(s) + "'");
}

void LabeledUtterance::validate() const {
  const bool all_genuine_nodes = env_label == kGenuineEnvLabel &&
                                 playback_label == kGenuinePlaybackLabel &&
                                 recorder_label == kGenuineRecorderLabel;
  const bool all_device_classes = env_label >= 0 && env_label < kGenuineEnvLabel &&
                                  playback_label >= 0 && playback_label < kGenuinePlaybackLabel &&
                                  recorder_label >= 0 && recorder_label < kGenuineRecorderLabel;
  const bool ok = is_genuine() ? all_genuine_nodes : all_device_classes;
  if (!ok) {
    std::ostringstream msg;
    msg << "utterance '" << id << "' (" << spoof_name(spoof) << ") has inconsistent labels env="
        << env_label << " playback=" << playback_label << " recorder=" << recorder_label;
    throw LabelError(msg.str());
  }
}

void write_manifest(const std::filesystem::path& path, const std::vector<LabeledUtterance>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    r.validate();
    out << r.id << ',' << r.path << ',' << subset_name(r.subset) << ',' << spoof_name(r.spoof) << ','
        << r.env_label << ',' << r.playback_label << ',' << r.recorder_label << '\n';
  }
  if (!out) throw std::runtime_error("write_manifest: write failed for " + path.string());
}

std::vector<LabeledUtterance> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader)
    throw FormatError("read_manifest: bad header in " + path.string());

  std::vector<LabeledUtterance> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto f = split_csv(line);
    if (f.size() != 7) throw FormatError(where + ": expected 7 fields, got " + std::to_string(f.size()));
    LabeledUtterance u;
    u.id = f[0];
    u.path = f[1];
    try {
      u.subset = parse_subset(f[2]);
      u.spoof = parse_spoof(f[3]);
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    u.env_label = parse_int(f[4], where);
    u.playback_label = parse_int(f[5], where);
    u.recorder_label = parse_int(f[6], where);
    try {
      u.validate();
    } catch (const LabelError& e) {
      throw LabelError(where + ": " + e.what());
    }
    rows.push_back(std::move(u));
  }
  return rows;
}

}  // namespace antispoof

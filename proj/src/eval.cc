#include "antispoof/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "antispoof/errors.h"

namespace antispoof {

std::vector<DetPoint> det_points(const TrialSet& trials) {
  std::size_t n_genuine = 0;
  for (const Trial& t : trials) {
    if (!std::isfinite(t.score)) throw std::invalid_argument("det_points: non-finite score for " + t.id);
    n_genuine += t.genuine ? 1 : 0;
  }
  const std::size_t n_spoofed = trials.size() - n_genuine;
  if (n_genuine == 0 || n_spoofed == 0)
    throw std::invalid_argument("det_points: need both genuine and spoofed trials");

  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(trials.size());
  for (const Trial& t : trials) sorted.emplace_back(t.score, t.genuine);
  std::sort(sorted.begin(), sorted.end());

  std::vector<DetPoint> points;
  std::size_t genuine_below = 0;
  std::size_t spoofed_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double theta = sorted[i].first;
    points.push_back({theta, static_cast<double>(n_spoofed - spoofed_below) / static_cast<double>(n_spoofed),
                      static_cast<double>(genuine_below) / static_cast<double>(n_genuine)});
    for (; i < sorted.size() && sorted[i].first == theta; ++i) (sorted[i].second ? genuine_below : spoofed_below)++;
  }
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  return points;
}

double compute_eer(const TrialSet& trials) {
  const std::vector<DetPoint> pts = det_points(trials);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double d0 = pts[i].far - pts[i].frr;
    const double d1 = pts[i + 1].far - pts[i + 1].frr;
    if (d0 == 0.0) return 100.0 * pts[i].far;
    if (d0 > 0.0 && d1 <= 0.0) {
      const double t = d0 / (d0 - d1);
      return 100.0 * (pts[i].far + t * (pts[i + 1].far - pts[i].far));
    }
  }
  // The sweep ends at (FAR 0, FRR 1), so a crossing always exists.
  return 100.0 * pts.back().far;
}

void export_codes(const std::vector<CodeRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) throw std::invalid_argument("export_codes: no codes");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("export_codes: cannot open " + path.string());
  const std::size_t dim = rows.front().code.size();
  out << "id,label_spoof";
  for (std::size_t d = 0; d < dim; ++d) out << ",c" << d;
  out << '\n';
  char buf[32];
  for (const auto& r : rows) {
    if (r.code.size() != dim) throw std::invalid_argument("export_codes: ragged code dimensions");
    out << r.id << ',' << (r.genuine ? 0 : 1);
    for (double v : r.code) {
      std::snprintf(buf, sizeof buf, "%.9g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("export_codes: write failed for " + path.string());
}

std::vector<CodeRow> read_codes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_codes: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,label_spoof", 0) != 0)
    throw FormatError("read_codes: bad header in " + path.string());
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') - 1);
  std::vector<CodeRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    CodeRow r;
    int label = -1;
    ss >> r.id >> label;
    r.code.resize(dim);
    for (double& v : r.code) ss >> v;
    if (!ss || (label != 0 && label != 1))
      throw FormatError("read_codes: malformed line " + std::to_string(line_no) + " in " + path.string());
    r.genuine = label == 0;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_det_csv(const std::filesystem::path& path, const std::vector<DetPoint>& points) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_det_csv: cannot open " + path.string());
  out << "threshold,far,frr\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", p.threshold, p.far, p.frr);
    out << buf;
  }
}

}  // namespace antispoof

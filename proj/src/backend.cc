#include "antispoof/backend.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "antispoof/checkpoint.h"
#include "antispoof/errors.h"

namespace antispoof {

namespace {

void require_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch " + std::to_string(a) + " vs " +
                                std::to_string(b));
}

TensorF to_tensor(const std::vector<double>& v) {
  return TensorF({v.size()}, std::vector<float>(v.begin(), v.end()));
}

std::vector<double> to_vector(const TensorF& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

GaussianModel fit_gaussian(std::span<const std::vector<double>> codes) {
  if (codes.size() < 2) throw std::invalid_argument("fit_gaussian: need at least 2 codes");
  const std::size_t dim = codes.front().size();
  if (dim == 0) throw std::invalid_argument("fit_gaussian: empty code");
  GaussianModel g;
  g.mean.assign(dim, 0.0);
  g.std.assign(dim, 0.0);
  for (const auto& c : codes) {
    require_dim(c.size(), dim, "fit_gaussian");
    for (std::size_t d = 0; d < dim; ++d) g.mean[d] += c[d];
  }
  const double n = static_cast<double>(codes.size());
  for (double& m : g.mean) m /= n;
  for (const auto& c : codes)
    for (std::size_t d = 0; d < dim; ++d) g.std[d] += (c[d] - g.mean[d]) * (c[d] - g.mean[d]);
  for (double& s : g.std) s = std::max(std::sqrt(s / n), kStdFloor);
  return g;
}

double log_prob(const GaussianModel& g, std::span<const double> code) {
  require_dim(code.size(), g.dim(), "log_prob");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (std::size_t d = 0; d < code.size(); ++d) {
    const double z = (code[d] - g.mean[d]) / g.std[d];
    lp += -std::log(g.std[d]) - half_log_2pi - 0.5 * z * z;
  }
  return lp;
}

double llr_score(std::span<const double> code, const GaussianModel& genuine, const GaussianModel& spoofed) {
  require_dim(genuine.dim(), spoofed.dim(), "llr_score");
  return log_prob(genuine, code) - log_prob(spoofed, code);
}

void write_scores(const std::filesystem::path& path, const std::vector<ScoreLine>& scores) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_scores: cannot open " + path.string());
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.6f", s.score);
    out << s.id << ' ' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write_scores: write failed for " + path.string());
}

std::vector<ScoreLine> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_scores: cannot open " + path.string());
  std::vector<ScoreLine> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ScoreLine s;
    std::string extra;
    if (!(ss >> s.id >> s.score) || (ss >> extra) || !std::isfinite(s.score))
      throw FormatError("read_scores: malformed line " + std::to_string(line_no) + " in " + path.string());
    out.push_back(std::move(s));
  }
  return out;
}

void write_backend(const std::filesystem::path& path, const GaussianModel& genuine, const GaussianModel& spoofed) {
  require_dim(genuine.dim(), spoofed.dim(), "write_backend");
  const std::vector<NamedTensor> tensors = {
      {"genuine.mean", to_tensor(genuine.mean)},
      {"genuine.std", to_tensor(genuine.std)},
      {"spoofed.mean", to_tensor(spoofed.mean)},
      {"spoofed.std", to_tensor(spoofed.std)},
  };
  write_checkpoint(path, tensors);
}

std::pair<GaussianModel, GaussianModel> read_backend(const std::filesystem::path& path) {
  const std::vector<NamedTensor> t = read_checkpoint(path);
  GaussianModel genuine{to_vector(find_tensor(t, "genuine.mean").value), to_vector(find_tensor(t, "genuine.std").value)};
  GaussianModel spoofed{to_vector(find_tensor(t, "spoofed.mean").value), to_vector(find_tensor(t, "spoofed.std").value)};
  if (genuine.std.size() != genuine.dim() || spoofed.std.size() != spoofed.dim() || genuine.dim() != spoofed.dim())
    throw FormatError("read_backend: inconsistent dimensions in " + path.string());
  return {std::move(genuine), std::move(spoofed)};
}

}  // namespace antispoof

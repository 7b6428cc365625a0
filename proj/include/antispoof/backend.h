#ifndef ANTISPOOF_BACKEND_H_
#define ANTISPOOF_BACKEND_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace antispoof {

inline constexpr double kStdFloor = 1e-6;

// Diagonal Gaussian over code vectors.
struct GaussianModel {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t dim() const { return mean.size(); }
};

// Per-dimension sample mean and population (1/N) standard deviation,
// floored at kStdFloor. Needs at least two codes of equal length.
GaussianModel fit_gaussian(std::span<const std::vector<double>> codes);

// sum_d [ -ln(std_d) - ln(2 pi)/2 - (c_d - mean_d)^2 / (2 std_d^2) ]
double log_prob(const GaussianModel& g, std::span<const double> code);

// log_prob(genuine) - log_prob(spoofed); higher means more genuine.
double llr_score(std::span<const double> code, const GaussianModel& genuine, const GaussianModel& spoofed);

struct ScoreLine {
  std::string id;
  double score = 0.0;
};

// "<id> <score>" per line, score with 6 decimals.
void write_scores(const std::filesystem::path& path, const std::vector<ScoreLine>& scores);
std::vector<ScoreLine> read_scores(const std::filesystem::path& path);

// Checkpoint container with genuine.mean, genuine.std, spoofed.mean, spoofed.std.
void write_backend(const std::filesystem::path& path, const GaussianModel& genuine, const GaussianModel& spoofed);
std::pair<GaussianModel, GaussianModel> read_backend(const std::filesystem::path& path);

}  // namespace antispoof

#endif  // ANTISPOOF_BACKEND_H_
